use gridscape_core::{Borders, Cell, CellAddress, CellFormat, CellGrid, CellValue, FormatCategory, Rgb};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// `rows x cols` numbers in `[-1000, 1000)`.
pub fn numeric_grid(rows: usize, cols: usize, seed: u64) -> CellGrid {
    let mut rng = rng(seed);
    let cells = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| Cell::number(rng.gen_range(-1000.0..1000.0)))
                .collect()
        })
        .collect();
    CellGrid::from_rows(cells).expect("non-empty")
}

/// CSV text for [`numeric_grid`].
pub fn numeric_csv(rows: usize, cols: usize, seed: u64) -> String {
    let grid = numeric_grid(rows, cols, seed);
    let mut out = String::new();
    for row in grid.rows() {
        let line: Vec<String> = row
            .iter()
            .map(|c| c.value.as_number().expect("numeric").to_string())
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn random_format(rng: &mut StdRng) -> CellFormat {
    if rng.gen_bool(0.5) {
        return CellFormat::default();
    }
    let category = FormatCategory::ALL[rng.gen_range(0..FormatCategory::ALL.len())];
    CellFormat {
        fill_color: rng.gen_bool(0.4).then(|| Rgb::new(rng.gen(), rng.gen(), rng.gen())),
        border: Borders {
            top: rng.gen_bool(0.2),
            bottom: rng.gen_bool(0.2),
            left: rng.gen_bool(0.2),
            right: rng.gen_bool(0.2),
        },
        font_bold: rng.gen_bool(0.2),
        category,
        number_format: None,
    }
}

/// Mixed Number/Text/Empty cells with random formats.
pub fn random_grid(rng: &mut StdRng, max_rows: usize, max_cols: usize) -> CellGrid {
    let rows = rng.gen_range(1..=max_rows);
    let cols = rng.gen_range(1..=max_cols);
    let cells = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let value = match rng.gen_range(0..10) {
                        0..=4 => CellValue::Number(random_value(rng)),
                        5 | 6 => CellValue::Text(format!("t{}", rng.gen_range(0..100))),
                        _ => CellValue::Empty,
                    };
                    Cell::new(value, random_format(rng))
                })
                .collect()
        })
        .collect();
    CellGrid::from_rows(cells).expect("non-empty")
}

/// Values with frequent ties and sign changes.
pub fn random_value(rng: &mut StdRng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-5..=5) as f64,
        1 => rng.gen_range(-1e6..1e6),
        2 => rng.gen_range(0.0..1.0),
        _ => rng.gen_range(-100.0..100.0),
    }
}

/// `sin(r/7) * cos(c/11)`.
pub fn smooth_grid(rows: usize, cols: usize) -> CellGrid {
    let cells = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| Cell::number((r as f64 / 7.0).sin() * (c as f64 / 11.0).cos()))
                .collect()
        })
        .collect();
    CellGrid::from_rows(cells).expect("non-empty")
}

/// Smooth row series with per-row phase and level, one series per row.
pub fn smooth_series_grid(rows: usize, cols: usize) -> CellGrid {
    let cells = (0..rows)
        .map(|r| {
            let rf = r as f64;
            (0..cols)
                .map(|c| {
                    let t = c as f64;
                    let v = 10.0 * (t / 37.0 + rf).sin() + 4.0 * (t / 113.0 + 0.3 * rf).cos() + rf;
                    Cell::number(v)
                })
                .collect()
        })
        .collect();
    CellGrid::from_rows(cells).expect("non-empty")
}

/// A smooth row-series grid with recorded injections.
pub struct AnomalyFixture {
    pub grid: CellGrid,
    pub spikes: Vec<CellAddress>,
    /// Run start and length; the run repeats the start cell's value.
    pub runs: Vec<(CellAddress, usize)>,
}

impl AnomalyFixture {
    /// Whether `addr` lies within one cell (along its row) of an injection.
    pub fn near_injection(&self, addr: CellAddress) -> bool {
        let near_spike = self
            .spikes
            .iter()
            .any(|s| s.row == addr.row && s.col.abs_diff(addr.col) <= 1);
        let near_run = self
            .runs
            .iter()
            .any(|(s, len)| s.row == addr.row && addr.col + 1 >= s.col && addr.col <= s.col + len);
        near_spike || near_run
    }
}

/// Injects `n_spikes` isolated spikes of 40 units and `n_runs` stale runs of
/// 6..=9 cells into [`smooth_series_grid`]. Injections keep at least
/// `2 * spacing` cells between each other.
pub fn anomaly_fixture(
    rows: usize,
    cols: usize,
    n_spikes: usize,
    n_runs: usize,
    spacing: usize,
    seed: u64,
) -> AnomalyFixture {
    inject(rows, cols, n_spikes, n_runs, spacing, seed, |_, _| 40.0)
}

/// Like [`anomaly_fixture`], but each spike is just tall enough to reach
/// robust z `>= z` within a window of `radius` cells on each side (growing in
/// 1% steps), so injections sit near the stated strength.
pub fn anomaly_fixture_at_z(
    rows: usize,
    cols: usize,
    n_spikes: usize,
    n_runs: usize,
    spacing: usize,
    (z, radius): (f64, usize),
    seed: u64,
) -> AnomalyFixture {
    assert!(spacing > radius, "spikes need clean windows");
    inject(rows, cols, n_spikes, n_runs, spacing, seed, |grid, at| {
        let mut window: Vec<f64> = (at.col - radius..=at.col + radius)
            .map(|c| {
                grid.get(CellAddress::new(at.row, c))
                    .and_then(|c| c.value.as_number())
                    .expect("numeric")
            })
            .collect();
        let base = window[radius];
        let others: Vec<f64> = window
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != radius)
            .map(|(_, v)| *v)
            .collect();
        let spread = others.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - others.iter().copied().fold(f64::INFINITY, f64::min);
        let mut amp = spread.max(1e-6);
        loop {
            window[radius] = base + amp;
            let up = crate::oracle::zscores(&window).expect("window has 3+ values")[radius];
            window[radius] = base - amp;
            let down = crate::oracle::zscores(&window).expect("window has 3+ values")[radius];
            if up.min(down) >= z {
                return amp;
            }
            amp *= 1.01;
        }
    })
}

fn inject(
    rows: usize,
    cols: usize,
    n_spikes: usize,
    n_runs: usize,
    spacing: usize,
    seed: u64,
    amplitude: impl Fn(&CellGrid, CellAddress) -> f64,
) -> AnomalyFixture {
    let mut grid = smooth_series_grid(rows, cols);
    let mut rng = rng(seed);
    let mut taken: Vec<(usize, usize, usize)> = Vec::new(); // row, first col, last col
    let mut place = |rng: &mut StdRng, len: usize| loop {
        let r = rng.gen_range(0..rows);
        let c = rng.gen_range(spacing..cols - spacing - len);
        let clear = taken
            .iter()
            .all(|&(tr, a, b)| tr != r || c + len + spacing < a || c > b + spacing);
        if clear {
            taken.push((r, c, c + len - 1));
            return CellAddress::new(r, c);
        }
    };

    let mut spikes = Vec::new();
    for _ in 0..n_spikes {
        let at = place(&mut rng, 1);
        let v = grid.get(at).and_then(|c| c.value.as_number()).expect("numeric");
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let amp = amplitude(&grid, at);
        grid.set(at, Cell::number(v + sign * amp)).expect("in bounds");
        spikes.push(at);
    }
    let mut runs = Vec::new();
    for _ in 0..n_runs {
        let len = rng.gen_range(6..=9);
        let at = place(&mut rng, len);
        let v = grid.get(at).and_then(|c| c.value.as_number()).expect("numeric");
        for k in 1..len {
            grid.set(CellAddress::new(at.row, at.col + k), Cell::number(v))
                .expect("in bounds");
        }
        runs.push((at, len));
    }
    spikes.sort();
    runs.sort();
    AnomalyFixture { grid, spikes, runs }
}

/// Numeric `rows x cols` yield-curve-like surface with `n_holes` Empty cells.
pub fn surface_fixture(rows: usize, cols: usize, n_holes: usize, seed: u64) -> (CellGrid, Vec<CellAddress>) {
    let mut rng = rng(seed);
    let cells = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let tenor = (r as f64 + 1.0).ln();
                    let day = c as f64 / 50.0;
                    Cell::number(2.0 + tenor * (1.0 + 0.3 * day.sin()) + 0.1 * (day * 3.0).cos())
                })
                .collect()
        })
        .collect();
    let mut grid = CellGrid::from_rows(cells).expect("non-empty");
    let mut holes = Vec::new();
    while holes.len() < n_holes {
        let at = CellAddress::new(rng.gen_range(0..rows), rng.gen_range(0..cols));
        if !holes.contains(&at) {
            grid.set(at, Cell::default()).expect("in bounds");
            holes.push(at);
        }
    }
    holes.sort();
    (grid, holes)
}

/// Sparse flat pivot table: a text header row and column, counts in about a
/// tenth of the body cells. Returns the grid and its numeric cell count.
pub fn pivot_fixture(rows: usize, cols: usize, seed: u64) -> (CellGrid, usize) {
    let mut rng = rng(seed);
    let mut k = 0;
    let header = CellFormat {
        fill_color: Some(Rgb::new(0xDD, 0xEB, 0xF7)),
        font_bold: true,
        ..CellFormat::default()
    };
    let cells = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| match (r, c) {
                    (0, 0) => Cell::default(),
                    (0, _) => Cell::new(CellValue::text(format!("C{c}")), header.clone()),
                    (_, 0) => Cell::new(CellValue::text(format!("R{r}")), header.clone()),
                    _ if rng.gen_bool(0.1) => {
                        k += 1;
                        Cell::number(rng.gen_range(1..500) as f64)
                    }
                    _ => Cell::default(),
                })
                .collect()
        })
        .collect();
    (CellGrid::from_rows(cells).expect("non-empty"), k)
}

/// Random edits inside `grid`: numbers in and out of the current range,
/// percentages, text and blanks.
pub fn random_edits(rng: &mut StdRng, grid: &CellGrid, n: usize) -> Vec<(CellAddress, String)> {
    (0..n)
        .map(|_| {
            let at = CellAddress::new(rng.gen_range(0..grid.n_rows()), rng.gen_range(0..grid.n_cols()));
            let current = grid.get(at).and_then(|c| c.value.as_number());
            let raw = match rng.gen_range(0..10) {
                0..=3 => match current {
                    // small nudges usually keep the group bounds
                    Some(v) => format!("{}", v + rng.gen_range(-1e-3..1e-3)),
                    None => format!("{}", random_value(rng)),
                },
                4 | 5 => format!("{}", random_value(rng)),
                6 => format!("{}%", rng.gen_range(-50..150)),
                7 => format!("note{}", rng.gen_range(0..9)),
                8 => String::new(),
                _ => "1e6".to_string(),
            };
            (at, raw)
        })
        .collect()
}

/// A random range inside `grid`.
pub fn random_range(rng: &mut StdRng, grid: &CellGrid) -> gridscape_core::CellRange {
    let (r1, r2) = (rng.gen_range(0..grid.n_rows()), rng.gen_range(0..grid.n_rows()));
    let (c1, c2) = (rng.gen_range(0..grid.n_cols()), rng.gen_range(0..grid.n_cols()));
    gridscape_core::CellRange {
        top: r1.min(r2),
        left: c1.min(c2),
        bottom: r1.max(r2),
        right: c1.max(c2),
    }
}

/// A random scene configuration over both normalization modes.
pub fn random_config(rng: &mut StdRng, mode: gridscape_core::scene::GlyphMode) -> gridscape_core::scene::SceneConfig {
    use gridscape_core::scene::{NormalizationMode, NormalizationPolicy, SceneConfig};
    SceneConfig {
        policy: NormalizationPolicy {
            mode: if rng.gen_bool(0.5) {
                NormalizationMode::Uniform
            } else {
                NormalizationMode::PerFormatGroup
            },
            height_max: [1.0, 0.3, 2.5, 10.0][rng.gen_range(0..4)],
            signed_baseline: rng.gen_bool(0.3),
        },
        glyph_mode: mode,
        cell_pitch: [1.0, 0.1, 0.75, 3.0][rng.gen_range(0..4)],
        ..SceneConfig::default()
    }
}

/// Random values with categories for normalization checks.
pub fn random_values(rng: &mut StdRng, n: usize) -> Vec<(CellAddress, f64, FormatCategory)> {
    let cats = [
        FormatCategory::General,
        FormatCategory::Percent,
        FormatCategory::Currency,
        FormatCategory::Number,
    ];
    let spread = [1.0, 1e-3, 1e3, 1e6][rng.gen_range(0..4)];
    let offset = [0.0, -0.5, 10.0, -1e4][rng.gen_range(0..4)] * spread;
    (0..n)
        .map(|i| {
            let v = if rng.gen_bool(0.2) {
                rng.gen_range(-3..3) as f64 * spread + offset
            } else {
                rng.gen_range(-1.0..1.0) * spread + offset
            };
            (CellAddress::new(i / 10, i % 10), v, cats[rng.gen_range(0..cats.len())])
        })
        .collect()
}

/// One client request in a sync run: an edit sent `stale_by` revisions behind
/// the session (0 means current).
#[derive(Debug, Clone)]
pub struct SyncStep {
    pub addr: CellAddress,
    pub raw: String,
    pub stale_by: u64,
}

/// Random edits over the whole grid, about one in five sent stale.
pub fn random_sync_steps(rng: &mut StdRng, grid: &CellGrid, n: usize) -> Vec<SyncStep> {
    random_edits(rng, grid, n)
        .into_iter()
        .map(|(addr, raw)| SyncStep {
            addr,
            raw,
            stale_by: if rng.gen_bool(0.2) { rng.gen_range(1..4) } else { 0 },
        })
        .collect()
}

/// A random grid as CSV ingest would produce it: plain numbers, percent
/// numbers, text that needs quoting and blanks, with no other formatting.
pub fn csv_like_grid(rng: &mut StdRng, max_rows: usize, max_cols: usize) -> CellGrid {
    let g = random_grid(rng, max_rows, max_cols);
    let rows: Vec<Vec<Cell>> = g
        .rows()
        .map(|r| {
            r.iter()
                .map(|c| match &c.value {
                    CellValue::Number(_) if c.format.category == FormatCategory::Percent => {
                        Cell::new(c.value.clone(), CellFormat::with_category(FormatCategory::Percent))
                    }
                    CellValue::Number(v) => Cell::number(*v),
                    CellValue::Text(s) => Cell::text(&format!("{s}, \"q\"\n")),
                    CellValue::Empty => Cell::default(),
                })
                .collect()
        })
        .collect();
    CellGrid::from_rows(rows).expect("same shape as a valid grid")
}

/// A positive affine map `(a, b)` for `values`: `a` log-uniform in
/// `[1e-3, 1e3]`, `|b|` up to `1e3 * a * spread` so the shifted data still
/// resolves its own range in `f64`.
pub fn random_affine(rng: &mut StdRng, values: &[(CellAddress, f64, FormatCategory)]) -> (f64, f64) {
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let spread = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    let a = 10f64.powf(rng.gen_range(-3.0..3.0));
    let b = rng.gen_range(-1e3..1e3) * a * spread;
    (a, b)
}

/// Up to 4 series of up to 64 cells drawn from a small value pool, so ties,
/// stale runs, blanks, text and spikes all occur.
pub fn short_series_grid(rng: &mut StdRng) -> CellGrid {
    let rows = rng.gen_range(1..=4);
    let cols = rng.gen_range(1..=64);
    let spike = [50.0, -80.0, 1e6][rng.gen_range(0..3)];
    let cells = (0..rows)
        .map(|_| {
            let mut prev = Cell::number(rng.gen_range(0..6) as f64);
            (0..cols)
                .map(|_| {
                    let cell = match rng.gen_range(0..20) {
                        0..=3 => prev.clone(),
                        4 => Cell::default(),
                        5 => Cell::text("n/a"),
                        6 => Cell::number(spike),
                        7 => Cell::number(rng.gen_range(-1.0..1.0)),
                        _ => Cell::number(rng.gen_range(0..6) as f64),
                    };
                    prev = cell.clone();
                    cell
                })
                .collect()
        })
        .collect();
    CellGrid::from_rows(cells).expect("non-empty")
}

/// Detector parameters around the defaults, with either axis.
pub fn random_detector_params(rng: &mut StdRng) -> gridscape_core::anomaly::DetectorParams {
    gridscape_core::anomaly::DetectorParams {
        z_threshold: [2.0, 3.0, 3.5, 5.0][rng.gen_range(0..4)],
        window_radius: rng.gen_range(1..=8),
        tab_min_run: rng.gen_range(2..=7),
        isolation_z: [2.0, 3.5, 5.0][rng.gen_range(0..3)],
        series_axis: match rng.gen_range(0..3) {
            0 => None,
            1 => Some(gridscape_core::Axis::Rows),
            _ => Some(gridscape_core::Axis::Columns),
        },
    }
}
