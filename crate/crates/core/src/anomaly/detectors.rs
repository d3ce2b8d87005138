use crate::grid::{Cell, CellAddress, CellValue, GridView};

use super::stats::{median, robust_zscores};
use super::{AnomalyFlag, DetectorKind, DetectorParams};

type Series<'a> = Vec<(CellAddress, &'a Cell)>;

fn each_series<'a>(view: &GridView<'a>, params: &DetectorParams) -> Vec<Series<'a>> {
    let axis = params.axis_for(view);
    (0..view.line_count(axis)).map(|i| view.line(axis, i)).collect()
}

/// Isolated spikes: cells whose robust z inside a window of `window_radius`
/// cells each side reaches `z_threshold` while neither adjacent cell reaches
/// `isolation_z` in that same window. Windows shrink at series edges and skip non-numeric cells.
pub fn detect_fins(view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    each_series(view, params)
        .iter()
        .flat_map(|series| fins_in_series(series, params))
        .collect()
}

fn fins_in_series(series: &Series<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    let values: Vec<Option<f64>> = series.iter().map(|(_, c)| c.value.as_number()).collect();
    let r = params.window_radius;
    let mut flags = Vec::new();
    let mut window: Vec<f64> = Vec::with_capacity(2 * r + 1);
    let mut positions: Vec<usize> = Vec::with_capacity(2 * r + 1);

    for (i, v) in values.iter().enumerate() {
        if v.is_none() {
            continue;
        }
        window.clear();
        positions.clear();
        for (j, w) in values
            .iter()
            .enumerate()
            .take((i + r + 1).min(values.len()))
            .skip(i.saturating_sub(r))
        {
            if let Some(w) = w {
                window.push(*w);
                positions.push(j);
            }
        }
        if window.len() < 3 {
            continue;
        }
        let z = robust_zscores(&window).expect("window has >= 3 values");
        let z_at = |pos: usize| positions.iter().position(|&p| p == pos).map(|k| z[k]);
        let score = z_at(i).expect("centre is numeric");
        if score < params.z_threshold {
            continue;
        }
        let neighbour_flagged = [i.checked_sub(1), Some(i + 1)]
            .into_iter()
            .flatten()
            .filter_map(z_at)
            .any(|zn| zn >= params.isolation_z);
        if neighbour_flagged {
            continue;
        }
        flags.push(AnomalyFlag {
            addr: series[i].0,
            detector: DetectorKind::Fin,
            score,
            context: format!(
                "isolated spike: value {} vs window median {} ({} cells)",
                v.expect("numeric"),
                median(&window),
                window.len()
            ),
        });
    }
    flags
}

#[derive(Clone, Copy, PartialEq)]
enum RunKey {
    Value(f64),
    Empty,
    Other,
}

/// Stale runs: maximal runs of at least `tab_min_run` identical numbers
/// (`Tab`) or empty cells (`Missing`) in a series that otherwise holds at least
/// two distinct numbers. Scored by run length, addressed at the run start.
pub fn detect_tabs(view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    each_series(view, params)
        .iter()
        .flat_map(|series| tabs_in_series(series, params))
        .collect()
}

fn tabs_in_series(series: &Series<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    let mut distinct: Vec<f64> = series.iter().filter_map(|(_, c)| c.value.as_number()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| a == b);
    if distinct.len() < 2 {
        return Vec::new();
    }

    let key = |c: &Cell| match c.value {
        CellValue::Number(v) => RunKey::Value(v),
        CellValue::Empty => RunKey::Empty,
        CellValue::Text(_) => RunKey::Other,
    };
    let mut flags = Vec::new();
    let mut start = 0;
    while start < series.len() {
        let k = key(series[start].1);
        let mut end = start + 1;
        while end < series.len() && key(series[end].1) == k && k != RunKey::Other {
            end += 1;
        }
        let len = end - start;
        if len >= params.tab_min_run {
            let flag = match k {
                RunKey::Value(v) => Some((DetectorKind::Tab, format!("{len} repeated values of {v}"))),
                RunKey::Empty => Some((DetectorKind::Missing, format!("{len} consecutive empty cells"))),
                RunKey::Other => None,
            };
            if let Some((detector, context)) = flag {
                flags.push(AnomalyFlag {
                    addr: series[start].0,
                    detector,
                    score: len as f64,
                    context,
                });
            }
        }
        start = end;
    }
    flags
}

/// Level jumps: robust z of first differences between consecutive numeric
/// cells of a series (at least 4 of them). Flags the left cell of each jump.
pub fn detect_discontinuities(view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    each_series(view, params)
        .iter()
        .flat_map(|series| jumps_in_series(series, params))
        .collect()
}

fn jumps_in_series(series: &Series<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
    let numeric: Vec<(CellAddress, f64)> = series
        .iter()
        .filter_map(|(a, c)| c.value.as_number().map(|v| (*a, v)))
        .collect();
    if numeric.len() < 4 {
        return Vec::new();
    }
    let diffs: Vec<f64> = numeric.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let z = robust_zscores(&diffs).expect("at least 3 differences");
    z.iter()
        .enumerate()
        .filter(|(_, &s)| s >= params.z_threshold)
        .map(|(k, &s)| AnomalyFlag {
            addr: numeric[k].0,
            detector: DetectorKind::Discontinuity,
            score: s,
            context: format!("jump of {} to {}", diffs[k], numeric[k + 1].0),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, CellGrid};

    fn row(values: &[Option<f64>]) -> CellGrid {
        let cells = values
            .iter()
            .map(|v| v.map_or_else(Cell::default, Cell::number))
            .collect();
        CellGrid::from_rows(vec![cells]).unwrap()
    }

    fn rows_params() -> DetectorParams {
        DetectorParams {
            series_axis: Some(Axis::Rows),
            ..DetectorParams::default()
        }
    }

    #[test]
    fn tab_run() {
        let g = row(&[1.0, 2.0, 3.0, 4.0, 4.0, 4.0, 4.0, 4.0, 9.0].map(Some));
        let flags = detect_tabs(&GridView::full(&g), &rows_params());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].addr, CellAddress::new(0, 3));
        assert_eq!(flags[0].score, 5.0);
        assert_eq!(flags[0].detector, DetectorKind::Tab);
    }

    #[test]
    fn constant_series_has_no_tabs() {
        let g = row(&[Some(4.0); 10]);
        assert!(detect_tabs(&GridView::full(&g), &rows_params()).is_empty());
    }

    #[test]
    fn missing_run() {
        let mut v: Vec<Option<f64>> = (0..6).map(|i| Some(i as f64)).collect();
        v.extend([None; 6]);
        v.extend((0..6).map(|i| Some(10.0 + i as f64)));
        let g = row(&v);
        let flags = detect_tabs(&GridView::full(&g), &rows_params());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].detector, DetectorKind::Missing);
        assert_eq!(flags[0].score, 6.0);
        assert_eq!(flags[0].addr, CellAddress::new(0, 6));
    }

    #[test]
    fn ramp_has_no_jumps() {
        let g = row(&(0..40).map(|i| Some(i as f64 * 0.5)).collect::<Vec<_>>());
        assert!(detect_discontinuities(&GridView::full(&g), &rows_params()).is_empty());
        assert!(detect_fins(&GridView::full(&g), &rows_params()).is_empty());
    }

    #[test]
    fn constant_grid_has_no_fins() {
        let g = CellGrid::from_rows(vec![vec![Cell::number(2.0); 20]; 20]).unwrap();
        assert!(detect_fins(&GridView::full(&g), &DetectorParams::default()).is_empty());
    }
}
