use crate::grid::{format_number, CellGrid, CellValue, FormatCategory};

/// RFC 4180 CSV, one record per row, `\n` between records and none after the
/// last. Numbers use the shortest round-trip form; Percent cells are written
/// as `N%` so that re-reading restores the category.
pub fn write_csv(grid: &CellGrid) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in grid.rows() {
        let fields: Vec<String> = row
            .iter()
            .map(|c| match &c.value {
                CellValue::Number(v) if c.format.category == FormatCategory::Percent => {
                    format_number(*v, FormatCategory::Percent)
                }
                CellValue::Number(v) => format!("{v}"),
                CellValue::Text(s) => s.clone(),
                CellValue::Empty => String::new(),
            })
            .collect();
        if fields.len() == 1 && fields[0].is_empty() {
            // a bare empty line would be skipped on read
            w.write_record([""]).expect("in-memory write");
        } else {
            w.write_record(&fields).expect("in-memory write");
        }
    }
    let mut out = w.into_inner().expect("in-memory flush");
    if out.last() == Some(&b'\n') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::ingest::{read_csv, IngestOptions};

    fn csv_of(rows: Vec<Vec<Cell>>) -> String {
        String::from_utf8(write_csv(&CellGrid::from_rows(rows).unwrap())).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(csv_of(vec![vec![Cell::number(2.5)]]), "2.5");
        let g = read_csv(b"a,1\nb,2", &IngestOptions::default()).unwrap();
        assert_eq!(String::from_utf8(write_csv(&g)).unwrap(), "a,1\nb,2");
        assert_eq!(
            csv_of(vec![vec![Cell::text("x,y"), Cell::text("say \"hi\"")]]),
            "\"x,y\",\"say \"\"hi\"\"\""
        );
    }

    #[test]
    fn lone_empty_field_survives() {
        let g = read_csv(b"1\n\"\"\n3", &IngestOptions::default()).unwrap();
        assert_eq!(g.n_rows(), 3);
        let out = write_csv(&g);
        assert_eq!(read_csv(&out, &IngestOptions::default()).unwrap(), g);
    }

    #[test]
    fn percent_cells_keep_category() {
        let g = read_csv(b"10%,0.1", &IngestOptions::default()).unwrap();
        assert_eq!(String::from_utf8(write_csv(&g)).unwrap(), "10%,0.1");
    }
}
