use crate::grid::{classify_value, Cell, CellFormat, CellGrid, CellValue, FormatCategory};

use super::{IngestError, IngestOptions};

const BOM: &[u8] = b"\xEF\xBB\xBF";

/// Reads RFC 4180 CSV. Every record becomes a row; short records are padded
/// with empty cells. Fields like `10%` are read as fractions and tagged with the
/// percent category, everything else is classified as General.
pub fn read_csv(bytes: &[u8], opts: &IngestOptions) -> Result<CellGrid, IngestError> {
    let delimiter = opts.delimiter_byte()?;
    let bytes = bytes.strip_prefix(BOM).unwrap_or(bytes);
    if let Err(e) = std::str::from_utf8(bytes) {
        return Err(IngestError::Encoding {
            offset: e.valid_up_to(),
        });
    }

    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(bytes);

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Csv {
            record: e.position().map_or(i as u64, |p| p.record()),
            detail: e.to_string(),
        })?;
        rows.push(record.iter().map(classify_field).collect::<Vec<_>>());
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(CellGrid::from_rows(rows)?)
}

fn classify_field(raw: &str) -> Cell {
    if raw.trim_end().ends_with('%') {
        if let v @ CellValue::Number(_) = classify_value(raw, FormatCategory::Percent) {
            return Cell::new(v, CellFormat::with_category(FormatCategory::Percent));
        }
    }
    Cell::new(classify_value(raw, FormatCategory::General), CellFormat::default())
}
