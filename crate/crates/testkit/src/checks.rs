//! Invariant checks shared by property tests and the acceptance suite. Each
//! returns `Err` with a description of the first violation.

// `!(a <= b)` is intended: a NaN must fail a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};

use gridscape_core::export::write_csv;
use gridscape_core::grid::apply_edit;
use gridscape_core::ingest::{read_csv, IngestOptions};
use gridscape_core::scene::{
    apply_delta, build_bar_scene, build_scene, build_surface_scene, normalize, rebuild_after_edit, DeltaKind,
    GlyphKind, NormalizationMode, NormalizationPolicy, SceneConfig, SceneError, SceneModel, TILE_GRAY,
};
use gridscape_core::{select_range, CellAddress, CellGrid, CellRange, CellValue, FormatCategory, Rgb};
use serde_json::Value;

use gridscape_service::{Replica, ServiceError, Session, SyncMessage};

use crate::fixtures::SyncStep;
use crate::oracle;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn check_common(grid: &CellGrid, range: CellRange, scene: &SceneModel) -> Result<(), String> {
    let pitch = scene.config.cell_pitch;
    let h_max = scene.config.policy.height_max;
    for (i, g) in scene.glyphs.iter().enumerate() {
        ensure!(g.id as usize == i, "glyph ids not dense at {i}");
        ensure!(range.contains(g.addr), "glyph {i} outside range");
        let [x, y, z] = g.position;
        ensure!(
            x == g.addr.col as f64 * pitch && z == g.addr.row as f64 * pitch && y == 0.0,
            "glyph {i} at {:?} does not sit on cell {}",
            g.position,
            g.addr
        );
        ensure!(
            (x / pitch).round() as usize == g.addr.col && (z / pitch).round() as usize == g.addr.row,
            "glyph {i} position does not recover its cell"
        );
        let cell = grid.get(g.addr).unwrap();
        ensure!(cell.is_bearing(), "glyph {i} references a blank cell {}", g.addr);
        ensure!(scene.bounds.contains(&g.extent(pitch)), "bounds miss glyph {i}");
        if matches!(g.kind, GlyphKind::Bar | GlyphKind::SurfacePatch) {
            ensure!(g.height.abs() <= h_max, "glyph {i} height {} beyond h_max", g.height);
        }
        if g.kind == GlyphKind::Label {
            ensure!(
                g.text.as_deref().is_some_and(|t| !t.is_empty()),
                "label {i} without text"
            );
        }
        if g.kind == GlyphKind::Tile {
            ensure!(g.color == cell.format.fill_color.unwrap_or(TILE_GRAY), "tile {i} color");
            ensure!(g.border == Some(cell.format.border), "tile {i} borders");
        }
    }
    for w in scene.glyphs.windows(2) {
        ensure!(w[0].addr <= w[1].addr, "glyphs not in row-major order");
    }
    ensure!(scene.pick_map.is_bijective(), "pick map is not bijective");
    for (id, addr) in scene.pick_map.iter() {
        ensure!(
            scene.glyph(id).map(|g| g.addr) == Some(addr),
            "pick map id {id} disagrees with glyph"
        );
        ensure!(
            scene.pick_map.glyph(addr) == Some(id),
            "pick map round trip fails at {addr}"
        );
    }
    Ok(())
}

fn has_bearing(grid: &CellGrid, range: CellRange) -> bool {
    range.addresses().any(|a| grid.get(a).unwrap().is_bearing())
}

fn expected_heights(grid: &CellGrid, range: CellRange, policy: &NormalizationPolicy) -> BTreeMap<CellAddress, f64> {
    let values: Vec<_> = range
        .addresses()
        .filter_map(|a| {
            let c = grid.get(a).unwrap();
            c.value.as_number().map(|v| (a, v, c.format.category))
        })
        .collect();
    normalize(&values, policy).into_iter().collect()
}

/// Bar-mode mapping rules against the counting oracle.
pub fn bar_mapping(grid: &CellGrid, range: CellRange, config: &SceneConfig) -> Result<(), String> {
    let view = select_range(grid, range).map_err(|e| e.to_string())?;
    let scene = match build_bar_scene(&view, config) {
        Err(SceneError::EmptyView) => {
            ensure!(!has_bearing(grid, range), "EmptyView on a view with content");
            return Ok(());
        }
        other => other.map_err(|e| e.to_string())?,
    };
    check_common(grid, range, &scene)?;
    let (tiles, bars, labels) = oracle::bar_counts(grid, range);
    let got = (
        scene.count(GlyphKind::Tile),
        scene.count(GlyphKind::Bar),
        scene.count(GlyphKind::Label),
    );
    ensure!(
        got == (tiles, bars, labels),
        "counts {got:?}, expected {:?}",
        (tiles, bars, labels)
    );
    ensure!(scene.count(GlyphKind::SurfacePatch) == 0, "patches in bar mode");

    let content: BTreeSet<CellAddress> = range
        .addresses()
        .filter(|a| !grid.get(*a).unwrap().value.is_empty())
        .collect();
    let picked: BTreeSet<CellAddress> = scene.pick_map.iter().map(|(_, a)| a).collect();
    ensure!(
        picked == content,
        "pick map does not cover exactly the content-bearing cells"
    );

    let heights = expected_heights(grid, range, &config.policy);
    for g in scene.glyphs.iter().filter(|g| g.kind == GlyphKind::Bar) {
        let cell = grid.get(g.addr).unwrap();
        ensure!(
            g.height == heights[&g.addr],
            "bar {} height {} != {}",
            g.addr,
            g.height,
            heights[&g.addr]
        );
        let color = match config.policy.mode {
            NormalizationMode::PerFormatGroup => config.group_color(cell.format.category),
            NormalizationMode::Uniform => cell.format.fill_color.unwrap_or(config.default_bar_color),
        };
        ensure!(g.color == color, "bar {} color", g.addr);
    }
    Ok(())
}

/// Surface-mode mapping rules against the quad oracle.
pub fn surface_mapping(grid: &CellGrid, range: CellRange, config: &SceneConfig) -> Result<(), String> {
    let view = select_range(grid, range).map_err(|e| e.to_string())?;
    let any_number = range
        .addresses()
        .any(|a| grid.get(a).unwrap().value.as_number().is_some());
    let scene = match build_surface_scene(&view, config) {
        Err(SceneError::EmptyView) => {
            ensure!(!has_bearing(grid, range), "EmptyView on a view with content");
            return Ok(());
        }
        Err(SceneError::NoNumericCells) => {
            ensure!(!any_number, "NoNumericCells with numbers present");
            return Ok(());
        }
        other => other.map_err(|e| e.to_string())?,
    };
    check_common(grid, range, &scene)?;
    let expect: Vec<CellAddress> = oracle::surface_patches(grid, range);
    let got: Vec<CellAddress> = scene
        .glyphs
        .iter()
        .filter(|g| g.kind == GlyphKind::SurfacePatch)
        .map(|g| g.addr)
        .collect();
    ensure!(got == expect, "{} patches, oracle expects {}", got.len(), expect.len());
    let heights = expected_heights(grid, range, &config.policy);
    for g in scene.glyphs.iter().filter(|g| g.kind == GlyphKind::SurfacePatch) {
        let a = g.addr;
        let corners =
            [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(dr, dc)| heights[&CellAddress::new(a.row + dr, a.col + dc)]);
        ensure!(g.corner_heights == Some(corners), "patch {a} corner heights");
    }
    for a in range.addresses() {
        let cell = grid.get(a).unwrap();
        let kinds: Vec<GlyphKind> = scene.glyphs_at(a).map(|g| g.kind).collect();
        let expect: Vec<GlyphKind> = match cell.value {
            CellValue::Number(_) if expect.contains(&a) => vec![GlyphKind::SurfacePatch],
            CellValue::Number(_) => vec![],
            CellValue::Text(_) => vec![GlyphKind::Tile, GlyphKind::Label],
            CellValue::Empty if cell.is_bearing() => vec![GlyphKind::Tile],
            CellValue::Empty => vec![],
        };
        ensure!(kinds == expect, "cell {a}: glyphs {kinds:?}, expected {expect:?}");
    }
    Ok(())
}

type Values = [(CellAddress, f64, FormatCategory)];

fn groups_of(values: &Values, policy: &NormalizationPolicy) -> BTreeMap<Option<FormatCategory>, Vec<usize>> {
    let mut groups: BTreeMap<Option<FormatCategory>, Vec<usize>> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        let key = (policy.mode == NormalizationMode::PerFormatGroup).then_some(v.2);
        groups.entry(key).or_default().push(i);
    }
    groups
}

/// Monotonicity, bounds, extreme exactness, the flat-group rule and group
/// separation. Values closer than `1e-9` of their group's range count as
/// ties for the strict monotonicity check, the resolution of `f64`.
pub fn normalization(values: &Values, policy: &NormalizationPolicy) -> Result<(), String> {
    let h_max = policy.height_max;
    let heights: Vec<f64> = normalize(values, policy).into_iter().map(|(_, h)| h).collect();
    ensure!(heights.len() == values.len(), "one height per value");
    for (key, idx) in groups_of(values, policy) {
        let vs: Vec<f64> = idx.iter().map(|&i| values[i].1).collect();
        let hs: Vec<f64> = idx.iter().map(|&i| heights[i]).collect();
        let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            ensure!(
                hs.iter().all(|&h| h == h_max / 2.0),
                "flat group {key:?} not at h_max/2"
            );
            continue;
        }
        let signed = policy.signed_baseline && lo < 0.0 && hi > 0.0;
        for (&v, &h) in vs.iter().zip(&hs) {
            if signed {
                ensure!(h.abs() <= h_max, "signed height {h} out of bounds");
                ensure!((v == 0.0) == (h == 0.0), "zero must map to the baseline");
                ensure!(v.signum() == h.signum() || h == 0.0, "sign of {v} lost");
            } else {
                ensure!((0.0..=h_max).contains(&h), "height {h} outside [0, {h_max}]");
                if v == hi {
                    ensure!(h == h_max, "group max maps to {h}, not h_max");
                }
                if v == lo {
                    ensure!(h == 0.0, "group min maps to {h}, not 0");
                }
            }
        }
        if signed {
            let m = lo.abs().max(hi.abs());
            let extreme = vs.iter().zip(&hs).find(|(v, _)| v.abs() == m).unwrap();
            ensure!(extreme.1.abs() == h_max, "largest magnitude maps to {}", extreme.1);
        }
        let resolution = 1e-9 * (hi - lo);
        for a in 0..vs.len() {
            for b in 0..vs.len() {
                if vs[a] < vs[b] {
                    ensure!(
                        hs[a] <= hs[b],
                        "monotonicity: {} -> {} but {} -> {}",
                        vs[a],
                        hs[a],
                        vs[b],
                        hs[b]
                    );
                    if vs[b] - vs[a] > resolution {
                        ensure!(hs[a] < hs[b], "strict monotonicity: {} and {} tie", vs[a], vs[b]);
                    }
                }
            }
        }
    }
    if policy.mode == NormalizationMode::PerFormatGroup {
        // a group's heights depend on that group alone
        for idx in groups_of(values, policy).values() {
            let alone: Vec<_> = idx.iter().map(|&i| values[i]).collect();
            let hs = normalize(&alone, policy);
            for (k, &i) in idx.iter().enumerate() {
                ensure!(hs[k].1 == heights[i], "group separation broken at {}", values[i].0);
            }
        }
    }
    Ok(())
}

/// Unsigned heights are unchanged, within 1e-9, by `v -> a*v + b`, `a > 0`.
pub fn affine_invariance(values: &Values, policy: &NormalizationPolicy, a: f64, b: f64) -> Result<(), String> {
    let unsigned = NormalizationPolicy {
        signed_baseline: false,
        ..*policy
    };
    let moved: Vec<_> = values.iter().map(|&(addr, v, c)| (addr, a * v + b, c)).collect();
    let h1 = normalize(values, &unsigned);
    let h2 = normalize(&moved, &unsigned);
    for (x, y) in h1.iter().zip(&h2) {
        ensure!(
            (x.1 - y.1).abs() <= 1e-9,
            "affine map moved {} from {} to {}",
            x.0,
            x.1,
            y.1
        );
    }
    Ok(())
}

/// Builds, or an empty scene when the view has nothing to draw.
pub fn build_or_empty(grid: &CellGrid, range: CellRange, config: &SceneConfig) -> Result<SceneModel, SceneError> {
    let view = select_range(grid, range).expect("range inside grid");
    match build_scene(&view, config) {
        Err(SceneError::EmptyView | SceneError::NoNumericCells) => Ok(SceneModel::empty(config.clone(), range)),
        other => other,
    }
}

/// Glyph-by-glyph equality with heights within 1e-9.
pub fn scenes_match(a: &SceneModel, b: &SceneModel) -> Result<(), String> {
    ensure!(
        a.glyphs.len() == b.glyphs.len(),
        "{} glyphs vs {}",
        a.glyphs.len(),
        b.glyphs.len()
    );
    for (x, y) in a.glyphs.iter().zip(&b.glyphs) {
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9;
        ensure!(
            x.id == y.id
                && x.kind == y.kind
                && x.addr == y.addr
                && x.color == y.color
                && x.text == y.text
                && x.border == y.border,
            "glyph {} differs: {x:?} vs {y:?}",
            x.id
        );
        ensure!(
            close(x.height, y.height),
            "glyph {} height {} vs {}",
            x.id,
            x.height,
            y.height
        );
        ensure!(x.position == y.position, "glyph {} position", x.id);
        match (x.corner_heights, y.corner_heights) {
            (Some(p), Some(q)) => ensure!(p.iter().zip(&q).all(|(s, t)| close(*s, *t)), "glyph {} corners", x.id),
            (None, None) => {}
            _ => return Err(format!("glyph {} corner presence", x.id)),
        }
    }
    ensure!(a.pick_map == b.pick_map, "pick maps differ");
    Ok(())
}

/// Applies `edits` one by one. After each, the delta (or a rebuild when it asks
/// for one) must equal a fresh build, and incremental deltas may only touch
/// the edited cell.
pub fn edit_sequence(
    grid: &CellGrid,
    range: CellRange,
    config: &SceneConfig,
    edits: &[(CellAddress, String)],
) -> Result<(), String> {
    let mut grid = grid.clone();
    let mut scene = build_or_empty(&grid, range, config).map_err(|e| e.to_string())?;
    for (step, (addr, raw)) in edits.iter().enumerate() {
        apply_edit(&mut grid, *addr, raw).map_err(|e| e.to_string())?;
        let view = select_range(&grid, range).unwrap();
        let fresh = build_or_empty(&grid, range, config).map_err(|e| e.to_string())?;
        let delta = rebuild_after_edit(&scene, &view, *addr, config).map_err(|e| format!("step {step}: {e}"))?;
        scene = match delta.kind {
            DeltaKind::Incremental => {
                ensure!(
                    delta.changed.iter().all(|g| g.addr == *addr),
                    "step {step}: delta touches other cells"
                );
                ensure!(
                    delta.removed.is_empty(),
                    "step {step}: incremental delta removes glyphs"
                );
                apply_delta(&scene, &delta).map_err(|e| format!("step {step}: {e}"))?
            }
            DeltaKind::FullRebuild => {
                ensure!(
                    delta.changed.is_empty() && delta.removed.is_empty(),
                    "step {step}: full rebuild with partial lists"
                );
                fresh.clone()
            }
        };
        scenes_match(&scene, &fresh).map_err(|e| format!("step {step} ({addr} <- {raw:?}, {:?}): {e}", delta.kind))?;
    }
    Ok(())
}

/// Drives a service session through `steps` with one subscribed replica.
/// After every accepted edit the replica, rebuilt from the snapshot plus the
/// deltas so far, must equal both the session's scene and a fresh build.
/// Rejected edits must leave the session untouched and broadcast nothing.
pub fn sync_sequence(
    grid: &CellGrid,
    range: CellRange,
    config: &SceneConfig,
    steps: &[SyncStep],
) -> Result<(), String> {
    let session = Session::new("check".into(), grid.clone(), Some(range), config.clone()).map_err(|e| e.to_string())?;
    let mut sub = session.subscribe();
    let wire = |m: &SyncMessage| SyncMessage::from_json(&m.to_json()).map_err(|e| e.to_string());
    let mut replica = Replica::from_snapshot(&wire(&sub.snapshot)?)?;
    for (step, s) in steps.iter().enumerate() {
        let rev = session.revision();
        let base = if s.stale_by == 0 {
            rev
        } else if rev >= s.stale_by {
            rev - s.stale_by
        } else {
            rev + s.stale_by
        };
        let (grid_before, scene_before) = (session.grid(), session.scene());
        let result = session.handle_edit(s.addr, &s.raw, base);
        let expect_ok = s.stale_by == 0 && range.contains(s.addr);
        match result {
            Ok(msg) => {
                ensure!(expect_ok, "step {step}: edit accepted against revision {base} at {rev}");
                ensure!(
                    session.revision() == rev + 1,
                    "step {step}: revision did not advance by one"
                );
                let queued = sub
                    .rx
                    .try_recv()
                    .map_err(|_| format!("step {step}: no delta broadcast"))?;
                ensure!(queued == msg, "step {step}: broadcast differs from the reply");
                ensure!(
                    sub.rx.try_recv().is_err(),
                    "step {step}: more than one message broadcast"
                );
                replica
                    .apply(&wire(&queued)?)
                    .map_err(|e| format!("step {step}: {e}"))?;
                let fresh = build_or_empty(&session.grid(), range, config).map_err(|e| e.to_string())?;
                scenes_match(&replica.scene, &fresh).map_err(|e| format!("step {step}: replica vs rebuild: {e}"))?;
                scenes_match(&session.scene(), &fresh).map_err(|e| format!("step {step}: session vs rebuild: {e}"))?;
            }
            Err(e) => {
                let expected = match e {
                    ServiceError::StaleRevision { .. } => s.stale_by != 0,
                    ServiceError::RangeOutOfBounds(_) => s.stale_by == 0 && !range.contains(s.addr),
                    _ => false,
                };
                ensure!(expected, "step {step}: unexpected rejection {e}");
                ensure!(
                    session.revision() == rev,
                    "step {step}: rejected edit moved the revision"
                );
                ensure!(
                    session.grid() == grid_before,
                    "step {step}: rejected edit changed the grid"
                );
                ensure!(
                    session.scene() == scene_before,
                    "step {step}: rejected edit changed the scene"
                );
                ensure!(sub.rx.try_recv().is_err(), "step {step}: rejected edit was broadcast");
            }
        }
    }
    ensure!(
        replica.revision == session.revision(),
        "replica ended at {} of {}",
        replica.revision,
        session.revision()
    );
    let late = Replica::from_snapshot(&wire(&session.snapshot())?)?;
    scenes_match(&late.scene, &replica.scene).map_err(|e| format!("late snapshot: {e}"))?;
    ensure!(
        matches!(session.snapshot(), SyncMessage::Snapshot { revision, .. } if revision == late.revision),
        "snapshot revision"
    );
    Ok(())
}

/// Writing `grid` as CSV and reading it back gives the same shape and
/// bit-identical values.
pub fn csv_round_trip(grid: &CellGrid) -> Result<(), String> {
    let back = read_csv(&write_csv(grid), &IngestOptions::default()).map_err(|e| e.to_string())?;
    ensure!(
        (back.n_rows(), back.n_cols()) == (grid.n_rows(), grid.n_cols()),
        "shape {}x{} came back as {}x{}",
        grid.n_rows(),
        grid.n_cols(),
        back.n_rows(),
        back.n_cols()
    );
    for ((addr, a), (_, b)) in grid.cells().zip(back.cells()) {
        let same = match (&a.value, &b.value) {
            (CellValue::Number(x), CellValue::Number(y)) => x.to_bits() == y.to_bits(),
            (x, y) => x == y,
        };
        ensure!(same, "{addr}: {:?} came back as {:?}", a.value, b.value);
    }
    Ok(())
}

/// Compares a grid read from an XLSX workbook with a recorded readback:
/// `{"dimensions": "A1:F6", "cells": [{row, col, value, fill, bold,
/// border{top,bottom,left,right}, category, number_format, hidden_row}]}`. Cells not
/// recorded must be blank. Returns the number of fields compared.
pub fn xlsx_fixture(grid: &CellGrid, expected: &Value) -> Result<usize, String> {
    let cells = expected["cells"].as_array().ok_or("recording has no cells")?;
    let dims = expected["dimensions"].as_str().ok_or("recording has no dimensions")?;
    let last = dims.rsplit(':').next().unwrap();
    let letters: String = last.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let cols = letters
        .bytes()
        .fold(0, |n, b| n * 26 + usize::from(b.to_ascii_uppercase() - b'A' + 1));
    let rows: usize = last[letters.len()..]
        .parse()
        .map_err(|_| format!("bad dimensions {dims}"))?;
    ensure!(
        (grid.n_rows(), grid.n_cols()) == (rows, cols),
        "grid is {}x{}, recorded {dims}",
        grid.n_rows(),
        grid.n_cols()
    );
    let mut fields = 0;
    let mut recorded = BTreeSet::new();
    for rec in cells {
        let addr = CellAddress::new(
            rec["row"].as_u64().unwrap() as usize,
            rec["col"].as_u64().unwrap() as usize,
        );
        recorded.insert(addr);
        let cell = grid.get(addr).ok_or_else(|| format!("{addr} outside the grid"))?;
        if rec["hidden_row"].as_bool() == Some(true) {
            ensure!(
                cell.value.is_empty() && cell.format.is_default(),
                "{addr}: hidden rows read as empty"
            );
            fields += 1;
            continue;
        }
        let value_ok = match &rec["value"] {
            Value::Number(n) => cell.value == CellValue::Number(n.as_f64().unwrap()),
            Value::String(s) => cell.value == CellValue::Text(s.clone()),
            Value::Null => cell.value == CellValue::Empty,
            other => return Err(format!("unexpected recorded value {other}")),
        };
        ensure!(value_ok, "{addr}: value {:?}, recorded {}", cell.value, rec["value"]);
        let fill = rec["fill"].as_str().map(|h| Rgb::from_hex(h).unwrap());
        ensure!(
            cell.format.fill_color == fill,
            "{addr}: fill {:?}, recorded {fill:?}",
            cell.format.fill_color
        );
        ensure!(cell.format.font_bold == rec["bold"].as_bool().unwrap(), "{addr}: bold");
        let b = &rec["border"];
        let got = cell.format.border;
        ensure!(
            [got.top, got.bottom, got.left, got.right]
                == ["top", "bottom", "left", "right"].map(|e| b[e].as_bool().unwrap()),
            "{addr}: borders {got:?}, recorded {b}"
        );
        let category = rec["category"].as_str().unwrap();
        ensure!(
            cell.format.category.as_str() == category,
            "{addr}: category {:?}, recorded {category}",
            cell.format.category
        );
        let fmt = rec["number_format"].as_str().unwrap();
        if fmt != "General" {
            ensure!(
                cell.format.number_format.as_deref() == Some(fmt),
                "{addr}: number format {:?}",
                cell.format.number_format
            );
        }
        fields += 9;
    }
    for (addr, cell) in grid.cells() {
        if !recorded.contains(&addr) {
            ensure!(!cell.is_bearing(), "{addr} should be blank");
        }
    }
    Ok(fields)
}
