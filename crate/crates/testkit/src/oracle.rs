use gridscape_core::anomaly::{DetectorKind, DetectorParams};
use gridscape_core::{Axis, CellAddress, CellGrid, CellRange, CellValue};

/// (detector, addr, score)
pub type Flag = (DetectorKind, CellAddress, f64);

fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Robust z-scores by full sort. `None` for fewer than three values.
pub fn zscores(values: &[f64]) -> Option<Vec<f64>> {
    if values.len() < 3 {
        return None;
    }
    let m = sorted_median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    let mad = sorted_median(&dev);
    let mut total = 0.0;
    for d in &dev {
        total += d;
    }
    let mean_ad = total / dev.len() as f64;
    let scale = if mad > 0.0 {
        1.4826 * mad
    } else if mean_ad > 0.0 {
        1.253314 * mean_ad
    } else {
        return Some(vec![0.0; values.len()]);
    };
    Some(dev.iter().map(|d| d / scale).collect())
}

pub fn resolve_axis(range: CellRange, params: &DetectorParams) -> Axis {
    params.series_axis.unwrap_or(if range.n_rows() > range.n_cols() {
        Axis::Columns
    } else {
        Axis::Rows
    })
}

/// Every series of `range` as owned (addr, value) lists.
pub fn series(grid: &CellGrid, range: CellRange, axis: Axis) -> Vec<Vec<(CellAddress, CellValue)>> {
    let mut out = Vec::new();
    match axis {
        Axis::Rows => {
            for r in range.top..=range.bottom {
                let mut s = Vec::new();
                for c in range.left..=range.right {
                    let a = CellAddress::new(r, c);
                    s.push((a, grid.get(a).expect("in grid").value.clone()));
                }
                out.push(s);
            }
        }
        Axis::Columns => {
            for c in range.left..=range.right {
                let mut s = Vec::new();
                for r in range.top..=range.bottom {
                    let a = CellAddress::new(r, c);
                    s.push((a, grid.get(a).expect("in grid").value.clone()));
                }
                out.push(s);
            }
        }
    }
    out
}

fn num(v: &CellValue) -> Option<f64> {
    match v {
        CellValue::Number(x) => Some(*x),
        _ => None,
    }
}

pub fn fins(series: &[(CellAddress, CellValue)], p: &DetectorParams) -> Vec<Flag> {
    let n = series.len();
    let r = p.window_radius;
    let mut out = Vec::new();
    for i in 0..n {
        if num(&series[i].1).is_none() {
            continue;
        }
        let lo = i.saturating_sub(r);
        let hi = usize::min(n - 1, i + r);
        let idx: Vec<usize> = (lo..=hi).filter(|&j| num(&series[j].1).is_some()).collect();
        let vals: Vec<f64> = idx.iter().map(|&j| num(&series[j].1).unwrap()).collect();
        let Some(z) = zscores(&vals) else { continue };
        let z_of = |j: usize| idx.iter().position(|&k| k == j).map(|k| z[k]);
        let zi = z_of(i).unwrap();
        if zi < p.z_threshold {
            continue;
        }
        let mut isolated = true;
        if i > 0 {
            if let Some(zl) = z_of(i - 1) {
                isolated &= zl < p.isolation_z;
            }
        }
        if let Some(zr) = z_of(i + 1) {
            isolated &= zr < p.isolation_z;
        }
        if isolated {
            out.push((DetectorKind::Fin, series[i].0, zi));
        }
    }
    out
}

pub fn tabs(series: &[(CellAddress, CellValue)], p: &DetectorParams) -> Vec<Flag> {
    let mut distinct: Vec<f64> = Vec::new();
    for (_, v) in series {
        if let Some(x) = num(v) {
            if !distinct.contains(&x) {
                distinct.push(x);
            }
        }
    }
    if distinct.len() < 2 {
        return Vec::new();
    }
    let same = |a: &CellValue, b: &CellValue| match (a, b) {
        (CellValue::Number(x), CellValue::Number(y)) => x == y,
        (CellValue::Empty, CellValue::Empty) => true,
        _ => false,
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < series.len() {
        let mut j = i + 1;
        while j < series.len() && same(&series[i].1, &series[j].1) {
            j += 1;
        }
        let len = j - i;
        if len >= p.tab_min_run {
            match series[i].1 {
                CellValue::Number(_) => out.push((DetectorKind::Tab, series[i].0, len as f64)),
                CellValue::Empty => out.push((DetectorKind::Missing, series[i].0, len as f64)),
                CellValue::Text(_) => {}
            }
        }
        i = j;
    }
    out
}

pub fn discontinuities(series: &[(CellAddress, CellValue)], p: &DetectorParams) -> Vec<Flag> {
    let pts: Vec<(CellAddress, f64)> = series.iter().filter_map(|(a, v)| num(v).map(|x| (*a, x))).collect();
    if pts.len() < 4 {
        return Vec::new();
    }
    let d: Vec<f64> = (0..pts.len() - 1).map(|k| pts[k + 1].1 - pts[k].1).collect();
    let z = zscores(&d).unwrap();
    (0..d.len())
        .filter(|&k| z[k] >= p.z_threshold)
        .map(|k| (DetectorKind::Discontinuity, pts[k].0, z[k]))
        .collect()
}

/// All detectors over `range`, sorted by (detector, addr).
pub fn report(grid: &CellGrid, range: CellRange, p: &DetectorParams) -> Vec<Flag> {
    let mut out = Vec::new();
    for s in series(grid, range, resolve_axis(range, p)) {
        out.extend(fins(&s, p));
        out.extend(tabs(&s, p));
        out.extend(discontinuities(&s, p));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Expected glyph counts for the bar mapping: (tiles, bars, labels).
pub fn bar_counts(grid: &CellGrid, range: CellRange) -> (usize, usize, usize) {
    let (mut tiles, mut bars, mut labels) = (0, 0, 0);
    for a in range.addresses() {
        let cell = grid.get(a).unwrap();
        let styled = cell.format != Default::default();
        match cell.value {
            CellValue::Number(_) => {
                tiles += 1;
                bars += 1;
            }
            CellValue::Text(_) => {
                tiles += 1;
                labels += 1;
            }
            CellValue::Empty if styled => tiles += 1,
            CellValue::Empty => {}
        }
    }
    (tiles, bars, labels)
}

/// Top-left corners of quads whose four cells are numeric.
pub fn surface_patches(grid: &CellGrid, range: CellRange) -> Vec<CellAddress> {
    let is_num = |r: usize, c: usize| num(&grid.get(CellAddress::new(r, c)).unwrap().value).is_some();
    let mut out = Vec::new();
    for r in range.top..range.bottom {
        for c in range.left..range.right {
            if is_num(r, c) && is_num(r + 1, c) && is_num(r, c + 1) && is_num(r + 1, c + 1) {
                out.push(CellAddress::new(r, c));
            }
        }
    }
    out
}
