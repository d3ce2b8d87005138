use crate::grid::{CellAddress, GridView};

use super::builder::{BarBuilder, SurfaceBuilder};
use super::registry::{BuildContext, SceneBuilder};
use super::{DeltaKind, Glyph, GlyphMode, SceneConfig, SceneDelta, SceneError, SceneModel};

/// Works out what an edit at `edited` did to `old_scene`.
///
/// The delta is incremental only when the cell keeps the same glyph kinds,
/// every group's bounds are unchanged and no neighbouring glyph reads the new
/// value; then exactly the glyphs at `edited` are re-emitted under their old
/// ids. Anything else asks for a full rebuild, naming the reason.
pub fn rebuild_after_edit(
    old_scene: &SceneModel,
    view: &GridView<'_>,
    edited: CellAddress,
    config: &SceneConfig,
) -> Result<SceneDelta, SceneError> {
    match config.glyph_mode {
        GlyphMode::Bars => rebuild_with(&BarBuilder, old_scene, view, edited, config),
        GlyphMode::Surface => rebuild_with(&SurfaceBuilder, old_scene, view, edited, config),
    }
}

pub(crate) fn rebuild_with(
    builder: &dyn SceneBuilder,
    old_scene: &SceneModel,
    view: &GridView<'_>,
    edited: CellAddress,
    config: &SceneConfig,
) -> Result<SceneDelta, SceneError> {
    if old_scene.config != *config || old_scene.policy_echo.policy != config.policy {
        return Err(SceneError::ConfigMismatch("scene configuration differs".into()));
    }
    if old_scene.range != view.range() {
        return Err(SceneError::ConfigMismatch(format!(
            "scene covers {} but view is {}",
            old_scene.range,
            view.range()
        )));
    }
    let Some(cell) = view.get(edited) else {
        return Ok(SceneDelta {
            kind: DeltaKind::Incremental,
            changed: Vec::new(),
            removed: Vec::new(),
            reason: "edited cell is outside the view".into(),
        });
    };

    let ctx = BuildContext::new(view, config);
    let fresh = builder.cell_glyphs(&ctx, edited, cell);
    let old: Vec<&Glyph> = old_scene.glyphs_at(edited).collect();

    let same_kinds = fresh.len() == old.len() && fresh.iter().zip(&old).all(|(n, o)| n.kind == o.kind);
    if !same_kinds {
        return Ok(SceneDelta::full_rebuild("cell kind changed"));
    }
    if ctx.groups != old_scene.policy_echo.groups {
        return Ok(SceneDelta::full_rebuild("group bounds changed"));
    }
    for dep in builder.dependents(&ctx, edited) {
        let dep_cell = view.get(dep).expect("dependents lie inside the view");
        let now = builder.cell_glyphs(&ctx, dep, dep_cell);
        let before: Vec<&Glyph> = old_scene.glyphs_at(dep).collect();
        let unchanged = now.len() == before.len()
            && now
                .iter()
                .zip(&before)
                .all(|(n, o)| Glyph { id: o.id, ..n.clone() } == **o);
        if !unchanged {
            return Ok(SceneDelta::full_rebuild("neighbouring glyphs changed"));
        }
    }

    let changed = fresh
        .into_iter()
        .zip(old)
        .map(|(g, o)| Glyph { id: o.id, ..g })
        .collect();
    Ok(SceneDelta {
        kind: DeltaKind::Incremental,
        changed,
        removed: Vec::new(),
        reason: "cell value changed".into(),
    })
}

/// Patches a scene with an incremental delta. Full-rebuild deltas cannot be
/// applied locally; fetch a snapshot instead.
pub fn apply_delta(scene: &SceneModel, delta: &SceneDelta) -> Result<SceneModel, SceneError> {
    if delta.kind == DeltaKind::FullRebuild {
        return Err(SceneError::DeltaNotApplicable(format!(
            "full rebuild ({}) needs a snapshot",
            delta.reason
        )));
    }
    let mut next = scene.clone();
    for g in &delta.changed {
        let slot = next
            .glyphs
            .iter_mut()
            .find(|old| old.id == g.id)
            .ok_or_else(|| SceneError::DeltaNotApplicable(format!("unknown glyph id {}", g.id)))?;
        if slot.addr != g.addr {
            return Err(SceneError::DeltaNotApplicable(format!(
                "glyph {} belongs to {}, not {}",
                g.id, slot.addr, g.addr
            )));
        }
        *slot = g.clone();
    }
    if !delta.removed.is_empty() {
        next.glyphs.retain(|g| !delta.removed.contains(&g.id));
    }
    next.pick_map = SceneModel::derive_pick_map(&next.glyphs);
    next.bounds = SceneModel::compute_bounds(&next.glyphs, next.config.cell_pitch);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_edit, Cell, CellGrid};
    use crate::scene::{build_bar_scene, build_scene, GlyphKind};

    fn ramp_grid() -> CellGrid {
        // one row 0..=10 plus a text cell
        let mut row: Vec<Cell> = (0..=10).map(|v| Cell::number(v as f64)).collect();
        row.push(Cell::text("x"));
        CellGrid::from_rows(vec![row]).unwrap()
    }

    #[test]
    fn interior_edit_is_incremental() {
        let config = SceneConfig::default();
        let mut g = ramp_grid();
        let before = build_bar_scene(&GridView::full(&g), &config).unwrap();
        let addr = CellAddress::new(0, 5);
        apply_edit(&mut g, addr, "6").unwrap();
        let view = GridView::full(&g);
        let delta = rebuild_after_edit(&before, &view, addr, &config).unwrap();
        assert_eq!(delta.kind, DeltaKind::Incremental);
        let bars: Vec<_> = delta.changed.iter().filter(|g| g.kind == GlyphKind::Bar).collect();
        assert_eq!(bars.len(), 1);
        assert_eq!(bars[0].height, 0.6);
        assert!(delta.changed.iter().all(|g| g.addr == addr));
        assert_eq!(
            apply_delta(&before, &delta).unwrap(),
            build_bar_scene(&view, &config).unwrap()
        );
    }

    #[test]
    fn bound_changes_and_kind_changes_rebuild() {
        let config = SceneConfig::default();
        let mut g = ramp_grid();
        let before = build_bar_scene(&GridView::full(&g), &config).unwrap();
        apply_edit(&mut g, CellAddress::new(0, 5), "99").unwrap();
        let d = rebuild_after_edit(&before, &GridView::full(&g), CellAddress::new(0, 5), &config).unwrap();
        assert_eq!(d.kind, DeltaKind::FullRebuild);
        assert_eq!(d.reason, "group bounds changed");
        assert!(d.changed.is_empty() && d.removed.is_empty());

        let mut g = ramp_grid();
        apply_edit(&mut g, CellAddress::new(0, 11), "42").unwrap();
        let d = rebuild_after_edit(&before, &GridView::full(&g), CellAddress::new(0, 11), &config).unwrap();
        assert_eq!(d.reason, "cell kind changed");
        assert!(apply_delta(&before, &d).is_err());
    }

    #[test]
    fn config_mismatch() {
        let config = SceneConfig::default();
        let g = ramp_grid();
        let before = build_bar_scene(&GridView::full(&g), &config).unwrap();
        let other = SceneConfig {
            cell_pitch: 3.0,
            ..SceneConfig::default()
        };
        assert!(matches!(
            rebuild_after_edit(&before, &GridView::full(&g), CellAddress::new(0, 0), &other),
            Err(SceneError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn surface_edits_touching_neighbour_patches_rebuild() {
        let config = SceneConfig {
            glyph_mode: GlyphMode::Surface,
            ..SceneConfig::default()
        };
        let mut g = CellGrid::from_rows(vec![
            vec![Cell::number(0.0), Cell::number(1.0), Cell::number(2.0)],
            vec![Cell::number(3.0), Cell::number(4.0), Cell::number(9.0)],
        ])
        .unwrap();
        let before = build_scene(&GridView::full(&g), &config).unwrap();
        apply_edit(&mut g, CellAddress::new(1, 1), "5").unwrap();
        let d = rebuild_after_edit(&before, &GridView::full(&g), CellAddress::new(1, 1), &config).unwrap();
        assert_eq!(d.reason, "neighbouring glyphs changed");
    }
}
