//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use gridscape_core::anomaly::{run_report, DetectorKind, DetectorParams};
use gridscape_core::export::write_gltf;
use gridscape_core::ingest::{ingest, read_xlsx, IngestOptions, WorkbookFormat};
use gridscape_core::scene::{
    build_bar_scene, build_surface_scene, GlyphKind, GlyphMode, NormalizationMode, NormalizationPolicy, SceneConfig,
};
use gridscape_core::{CellAddress, GridView};
use gridscape_testkit::{checks, fixtures, glb, oracle};
use rand::Rng;

const CASES: u64 = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("scalability", scalability),
        ("wysiwyg mapping", wysiwyg_mapping),
        ("normalization", normalization),
        ("sync soundness", sync_soundness),
        ("anomaly detection", anomaly_detection),
        ("ingest fidelity", ingest_fidelity),
        ("surface mode", surface_mode),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn scalability() -> Outcome {
    let csv = fixtures::numeric_csv(300, 250, 2024);
    let start = Instant::now();
    let grid = ingest(csv.as_bytes(), WorkbookFormat::Csv, &IngestOptions::default())
        .map_err(|e| e.to_string())?
        .grid;
    let scene = build_bar_scene(&GridView::full(&grid), &SceneConfig::default()).map_err(|e| e.to_string())?;
    let bytes = write_gltf(&scene).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();

    let bars = scene.count(GlyphKind::Bar);
    if bars != 75_000 {
        return Err(format!("{bars} bars"));
    }
    glb::check_structure(&bytes)?;
    let doc = glb::parse(&bytes)?;
    let instanced = glb::kind_instance_count(&doc, "bars_");
    if instanced != 75_000 {
        return Err(format!("{instanced} bar instances in the asset"));
    }
    let validator = match glb::khronos_validate(&bytes) {
        Some(r) if r.errors == 0 => format!("Khronos validator 0 errors, {} warnings", r.warnings),
        Some(r) => return Err(format!("Khronos validator: {} errors\n{}", r.errors, r.raw)),
        None => "gltf crate validation only, Khronos validator not installed".to_string(),
    };
    if elapsed >= 2.0 {
        return Err(format!("pipeline took {elapsed:.2} s, limit 2 s"));
    }
    Ok(format!(
        "75000 bars, {} KiB glb, {elapsed:.2} s, {validator}",
        bytes.len() / 1024
    ))
}

fn wysiwyg_mapping() -> Outcome {
    let mut glyphs = 0;
    for seed in 0..CASES {
        let mut rng = fixtures::rng(seed);
        let grid = fixtures::random_grid(&mut rng, 12, 12);
        let range = fixtures::random_range(&mut rng, &grid);
        let bars = fixtures::random_config(&mut rng, GlyphMode::Bars);
        checks::bar_mapping(&grid, range, &bars).map_err(|e| format!("seed {seed} bars: {e}"))?;
        let surface = fixtures::random_config(&mut rng, GlyphMode::Surface);
        checks::surface_mapping(&grid, range, &surface).map_err(|e| format!("seed {seed} surface: {e}"))?;
        glyphs += checks::build_or_empty(&grid, range, &bars)
            .map_err(|e| e.to_string())?
            .glyphs
            .len();
    }
    Ok(format!("{CASES} grids in both modes, {glyphs} bar-mode glyphs checked"))
}

fn normalization() -> Outcome {
    for seed in 0..CASES {
        let mut rng = fixtures::rng(seed);
        let n = rng.gen_range(1..80);
        let values = fixtures::random_values(&mut rng, n);
        let policy = NormalizationPolicy {
            mode: if rng.gen_bool(0.5) {
                NormalizationMode::Uniform
            } else {
                NormalizationMode::PerFormatGroup
            },
            height_max: [1.0, 0.25, 4.0, 100.0][rng.gen_range(0..4)],
            signed_baseline: rng.gen_bool(0.3),
        };
        checks::normalization(&values, &policy).map_err(|e| format!("seed {seed}: {e}"))?;
        let (a, b) = fixtures::random_affine(&mut rng, &values);
        checks::affine_invariance(&values, &policy, a, b).map_err(|e| format!("seed {seed} (a={a}, b={b}): {e}"))?;
    }
    Ok(format!("{CASES} value sets"))
}

fn sync_soundness() -> Outcome {
    let mut steps_run = 0;
    for seed in 0..CASES {
        let mut rng = fixtures::rng(seed);
        let grid = fixtures::random_grid(&mut rng, 8, 8);
        let range = fixtures::random_range(&mut rng, &grid);
        let mode = if seed % 2 == 0 {
            GlyphMode::Bars
        } else {
            GlyphMode::Surface
        };
        let config = fixtures::random_config(&mut rng, mode);
        let steps = fixtures::random_sync_steps(&mut rng, &grid, 15);
        checks::sync_sequence(&grid, range, &config, &steps).map_err(|e| format!("seed {seed}: {e}"))?;
        steps_run += steps.len();
    }
    Ok(format!(
        "{CASES} sequences, {steps_run} requests, stale and out-of-view edits included"
    ))
}

fn anomaly_detection() -> Outcome {
    let params = DetectorParams::default();
    let fx = fixtures::anomaly_fixture_at_z(30, 2500, 10, 3, 20, (6.0, params.window_radius), 7);
    let view = GridView::full(&fx.grid);

    // every spike must sit at robust z >= 6 within its window, as injected
    let mut min_z = f64::INFINITY;
    for s in &fx.spikes {
        let r = params.window_radius;
        let window: Vec<f64> = (s.col - r..=s.col + r)
            .map(|c| {
                fx.grid
                    .get(CellAddress::new(s.row, c))
                    .unwrap()
                    .value
                    .as_number()
                    .unwrap()
            })
            .collect();
        let z = oracle::zscores(&window).unwrap()[r].abs();
        min_z = min_z.min(z);
    }
    if min_z < 6.0 {
        return Err(format!("fixture spike only reaches z = {min_z:.2}"));
    }

    let report = run_report(&view, &params).map_err(|e| e.to_string())?;
    let fins: BTreeSet<CellAddress> = report
        .flags
        .iter()
        .filter(|f| f.detector == DetectorKind::Fin)
        .map(|f| f.addr)
        .collect();
    let spikes: BTreeSet<CellAddress> = fx.spikes.iter().copied().collect();
    let fin_hits = fins.intersection(&spikes).count();
    let tabs: BTreeSet<(CellAddress, usize)> = report
        .flags
        .iter()
        .filter(|f| matches!(f.detector, DetectorKind::Tab | DetectorKind::Missing))
        .map(|f| (f.addr, f.score as usize))
        .collect();
    let runs: BTreeSet<(CellAddress, usize)> = fx.runs.iter().copied().collect();
    let tab_hits = tabs.intersection(&runs).count();
    let false_positives: Vec<_> = report
        .flags
        .iter()
        .filter(|f| match f.detector {
            DetectorKind::Fin => !spikes.contains(&f.addr),
            DetectorKind::Tab | DetectorKind::Missing => !runs.contains(&(f.addr, f.score as usize)),
            DetectorKind::Discontinuity => !fx.near_injection(f.addr),
        })
        .collect();
    if fin_hits != 10 || tab_hits != 3 || !false_positives.is_empty() {
        return Err(format!(
            "fin recall {fin_hits}/10, tab recall {tab_hits}/3, false positives {:?}",
            false_positives.iter().take(5).collect::<Vec<_>>()
        ));
    }

    for seed in 0..CASES {
        let mut rng = fixtures::rng(seed);
        let grid = fixtures::short_series_grid(&mut rng);
        let p = fixtures::random_detector_params(&mut rng);
        let report = run_report(&GridView::full(&grid), &p).map_err(|e| e.to_string())?;
        let mut got: Vec<_> = report.flags.iter().map(|f| (f.detector, f.addr, f.score)).collect();
        got.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let expect = oracle::report(&grid, grid.full_range(), &p);
        if got != expect {
            return Err(format!(
                "seed {seed}: detectors disagree with the oracle\n got {got:?}\nwant {expect:?}"
            ));
        }
    }
    Ok(format!(
        "fins 10/10, tabs 3/3, 0 false positives, min injected z {min_z:.1}, {} flags total; oracle-exact on {CASES} short grids",
        report.flags.len()
    ))
}

fn ingest_fidelity() -> Outcome {
    for seed in 0..CASES {
        let mut rng = fixtures::rng(seed);
        let grid = fixtures::csv_like_grid(&mut rng, 10, 10);
        checks::csv_round_trip(&grid).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    checks::csv_round_trip(&fixtures::numeric_grid(300, 250, 1))?;
    let book = include_bytes!("../../core/tests/fixtures/styled.xlsx");
    let expected: serde_json::Value =
        serde_json::from_str(include_str!("../../core/tests/fixtures/styled.expected.json"))
            .map_err(|e| e.to_string())?;
    let grid = read_xlsx(book, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let fields = checks::xlsx_fixture(&grid, &expected)?;
    Ok(format!(
        "CSV exact on {CASES} grids and 300x250; XLSX {fields} fields match"
    ))
}

fn surface_mode() -> Outcome {
    let (grid, holes) = fixtures::surface_fixture(16, 1100, 40, 8);
    let config = SceneConfig {
        glyph_mode: GlyphMode::Surface,
        ..SceneConfig::default()
    };
    let scene = build_surface_scene(&GridView::full(&grid), &config).map_err(|e| e.to_string())?;
    let patches: BTreeSet<CellAddress> = scene
        .glyphs
        .iter()
        .filter(|g| g.kind == GlyphKind::SurfacePatch)
        .map(|g| g.addr)
        .collect();
    let expect: BTreeSet<CellAddress> = oracle::surface_patches(&grid, grid.full_range()).into_iter().collect();
    if patches != expect {
        return Err(format!("{} patches, oracle counts {}", patches.len(), expect.len()));
    }
    // a quad is missing exactly when one of its corners is a hole
    let touched: BTreeSet<CellAddress> = holes
        .iter()
        .flat_map(|h| {
            let rows = h.row.saturating_sub(1)..=h.row.min(14);
            rows.flat_map(move |r| (h.col.saturating_sub(1)..=h.col.min(1098)).map(move |c| CellAddress::new(r, c)))
        })
        .collect();
    for r in 0..15 {
        for c in 0..1099 {
            let a = CellAddress::new(r, c);
            if patches.contains(&a) == touched.contains(&a) {
                return Err(format!(
                    "quad {a}: present {} but touches a hole {}",
                    patches.contains(&a),
                    touched.contains(&a)
                ));
            }
        }
    }
    if let Some(h) = holes.iter().find(|h| scene.glyphs_at(**h).next().is_some()) {
        return Err(format!("hole {h} has a glyph"));
    }
    checks::surface_mapping(&grid, grid.full_range(), &config)?;
    Ok(format!(
        "{} patches of {} quads, {} holes",
        patches.len(),
        15 * 1099,
        holes.len()
    ))
}
