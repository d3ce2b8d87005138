use crate::grid::{Cell, CellAddress, CellValue, GridView};

use super::registry::{BuildContext, SceneBuilder};
use super::{
    Glyph, GlyphKind, GlyphMode, NormalizationMode, PolicyEcho, SceneConfig, SceneError, SceneModel, LABEL_COLOR,
    TILE_GRAY,
};

/// Runs a builder over a view in row-major order, assigning dense ids.
pub(crate) fn build(
    builder: &dyn SceneBuilder,
    view: &GridView<'_>,
    config: &SceneConfig,
) -> Result<SceneModel, SceneError> {
    config.validate()?;
    if !view.cells().any(|(_, c)| c.is_bearing()) {
        return Err(SceneError::EmptyView);
    }
    let ctx = BuildContext::new(view, config);
    builder.prepare(&ctx)?;

    let mut glyphs = Vec::new();
    for (addr, cell) in view.cells() {
        for mut g in builder.cell_glyphs(&ctx, addr, cell) {
            g.id = glyphs.len() as u32;
            glyphs.push(g);
        }
    }
    Ok(SceneModel {
        pick_map: SceneModel::derive_pick_map(&glyphs),
        bounds: SceneModel::compute_bounds(&glyphs, config.cell_pitch),
        policy_echo: PolicyEcho {
            policy: config.policy,
            groups: ctx.groups,
        },
        config: config.clone(),
        range: view.range(),
        glyphs,
    })
}

fn base(ctx: &BuildContext<'_, '_>, kind: GlyphKind, addr: CellAddress) -> Glyph {
    Glyph {
        id: 0,
        kind,
        addr,
        position: ctx.position(addr),
        height: 0.0,
        color: TILE_GRAY,
        text: None,
        border: None,
        corner_heights: None,
    }
}

fn tile(ctx: &BuildContext<'_, '_>, addr: CellAddress, cell: &Cell) -> Glyph {
    Glyph {
        color: cell.format.fill_color.unwrap_or(TILE_GRAY),
        border: Some(cell.format.border),
        ..base(ctx, GlyphKind::Tile, addr)
    }
}

fn label(ctx: &BuildContext<'_, '_>, addr: CellAddress, text: &str) -> Glyph {
    Glyph {
        color: LABEL_COLOR,
        text: Some(text.to_string()),
        ..base(ctx, GlyphKind::Label, addr)
    }
}

fn numeric_color(ctx: &BuildContext<'_, '_>, cell: &Cell) -> crate::grid::Rgb {
    match ctx.config.policy.mode {
        NormalizationMode::PerFormatGroup => ctx.config.group_color(cell.format.category),
        NormalizationMode::Uniform => cell.format.fill_color.unwrap_or(ctx.config.default_bar_color),
    }
}

/// Numbers as bars standing on their cell's tile.
#[derive(Debug, Clone, Copy, Default)]
pub struct BarBuilder;

impl SceneBuilder for BarBuilder {
    fn mode(&self) -> GlyphMode {
        GlyphMode::Bars
    }

    fn cell_glyphs(&self, ctx: &BuildContext<'_, '_>, addr: CellAddress, cell: &Cell) -> Vec<Glyph> {
        if !cell.is_bearing() {
            return Vec::new();
        }
        let mut out = vec![tile(ctx, addr, cell)];
        match &cell.value {
            CellValue::Number(_) => out.push(Glyph {
                height: ctx.height(cell).expect("numeric cell has a group"),
                color: numeric_color(ctx, cell),
                ..base(ctx, GlyphKind::Bar, addr)
            }),
            CellValue::Text(s) => out.push(label(ctx, addr, s)),
            CellValue::Empty => {}
        }
        out
    }
}

/// Numbers as a heightfield: one patch per grid quad whose four corners are
/// all numeric, anchored at the quad's top-left cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurfaceBuilder;

impl SurfaceBuilder {
    fn corners<'g>(ctx: &BuildContext<'_, 'g>, addr: CellAddress) -> Option<[&'g Cell; 4]> {
        let at = |dr: usize, dc: usize| {
            ctx.view
                .get(CellAddress::new(addr.row + dr, addr.col + dc))
                .filter(|c| matches!(c.value, CellValue::Number(_)))
        };
        Some([at(0, 0)?, at(0, 1)?, at(1, 0)?, at(1, 1)?])
    }
}

impl SceneBuilder for SurfaceBuilder {
    fn mode(&self) -> GlyphMode {
        GlyphMode::Surface
    }

    fn prepare(&self, ctx: &BuildContext<'_, '_>) -> Result<(), SceneError> {
        if ctx.groups.is_empty() {
            return Err(SceneError::NoNumericCells);
        }
        Ok(())
    }

    fn cell_glyphs(&self, ctx: &BuildContext<'_, '_>, addr: CellAddress, cell: &Cell) -> Vec<Glyph> {
        match &cell.value {
            CellValue::Number(_) => match Self::corners(ctx, addr) {
                Some(corners) => {
                    let hs = corners.map(|c| ctx.height(c).expect("numeric corner"));
                    vec![Glyph {
                        height: hs[0],
                        color: numeric_color(ctx, cell),
                        corner_heights: Some(hs),
                        ..base(ctx, GlyphKind::SurfacePatch, addr)
                    }]
                }
                None => Vec::new(),
            },
            CellValue::Text(s) => vec![tile(ctx, addr, cell), label(ctx, addr, s)],
            CellValue::Empty if cell.is_bearing() => vec![tile(ctx, addr, cell)],
            CellValue::Empty => Vec::new(),
        }
    }

    fn dependents(&self, ctx: &BuildContext<'_, '_>, addr: CellAddress) -> Vec<CellAddress> {
        let range = ctx.view.range();
        [(1, 1), (1, 0), (0, 1)]
            .into_iter()
            .filter(|&(dr, dc)| addr.row >= dr && addr.col >= dc)
            .map(|(dr, dc)| CellAddress::new(addr.row - dr, addr.col - dc))
            .filter(|a| range.contains(*a))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellFormat, CellGrid, CellRange, FormatCategory, Rgb};
    use crate::scene::{build_bar_scene, build_surface_scene, NormalizationPolicy};

    fn grid(rows: &[&[Cell]]) -> CellGrid {
        CellGrid::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn bar_mapping_counts() {
        let e = Cell::default();
        let g = grid(&[
            &[Cell::number(1.0), Cell::text("name"), e.clone()],
            &[Cell::number(2.0), e.clone(), Cell::number(3.0)],
        ]);
        let scene = build_bar_scene(&GridView::full(&g), &SceneConfig::default()).unwrap();
        assert_eq!(scene.count(GlyphKind::Bar), 3);
        assert_eq!(scene.count(GlyphKind::Label), 1);
        assert_eq!(scene.count(GlyphKind::Tile), 4);
        assert_eq!(scene.pick_map.len(), 4);
        assert!(scene.pick_map.is_bijective());
        for g in &scene.glyphs {
            assert_eq!(scene.glyph(g.id), Some(g));
            assert!(scene.bounds.contains(&g.extent(1.0)));
        }
    }

    #[test]
    fn format_only_cells_get_tiles() {
        let shaded = Cell::new(
            CellValue::Empty,
            CellFormat {
                fill_color: Some(Rgb::new(255, 255, 0)),
                ..CellFormat::default()
            },
        );
        let g = grid(&[&[shaded, Cell::number(4.0)]]);
        let scene = build_bar_scene(&GridView::full(&g), &SceneConfig::default()).unwrap();
        assert_eq!(scene.count(GlyphKind::Tile), 2);
        assert_eq!(scene.glyphs[0].color, Rgb::new(255, 255, 0));
        assert_eq!(scene.pick_map.len(), 1);
    }

    #[test]
    fn group_cue_overrides_fill_on_bars_only() {
        let fmt = CellFormat {
            fill_color: Some(Rgb::new(1, 2, 3)),
            category: FormatCategory::Percent,
            ..CellFormat::default()
        };
        let g = grid(&[&[Cell::new(CellValue::Number(0.5), fmt)]]);
        let config = SceneConfig {
            policy: NormalizationPolicy {
                mode: NormalizationMode::PerFormatGroup,
                ..NormalizationPolicy::default()
            },
            ..SceneConfig::default()
        };
        let scene = build_bar_scene(&GridView::full(&g), &config).unwrap();
        assert_eq!(scene.glyphs[0].color, Rgb::new(1, 2, 3));
        assert_eq!(scene.glyphs[1].color, config.group_color(FormatCategory::Percent));
    }

    #[test]
    fn empty_view() {
        let g = CellGrid::new(3, 3).unwrap();
        assert_eq!(
            build_bar_scene(&GridView::full(&g), &SceneConfig::default()),
            Err(SceneError::EmptyView)
        );
    }

    fn surface_config() -> SceneConfig {
        SceneConfig {
            glyph_mode: GlyphMode::Surface,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn surface_single_quad_and_hole() {
        let g = grid(&[
            &[Cell::number(0.0), Cell::number(1.0)],
            &[Cell::number(2.0), Cell::number(3.0)],
        ]);
        let scene = build_surface_scene(&GridView::full(&g), &surface_config()).unwrap();
        assert_eq!(scene.count(GlyphKind::SurfacePatch), 1);
        assert_eq!(scene.glyphs[0].corner_heights, Some([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]));

        let mut rows = vec![vec![Cell::number(1.0); 3]; 3];
        rows[1][1] = Cell::default();
        let g = CellGrid::from_rows(rows).unwrap();
        let scene = build_surface_scene(&GridView::full(&g), &surface_config()).unwrap();
        assert_eq!(scene.count(GlyphKind::SurfacePatch), 0);
    }

    #[test]
    fn surface_needs_numbers() {
        let g = grid(&[&[Cell::text("a")]]);
        assert_eq!(
            build_surface_scene(&GridView::full(&g), &surface_config()),
            Err(SceneError::NoNumericCells)
        );
    }

    #[test]
    fn view_offsets_keep_absolute_positions() {
        let mut rows = vec![vec![Cell::number(1.0); 4]; 4];
        rows[3][3] = Cell::number(9.0);
        let g = CellGrid::from_rows(rows).unwrap();
        let view = crate::grid::select_range(&g, CellRange::new(2, 2, 3, 3)).unwrap();
        let config = SceneConfig {
            cell_pitch: 2.0,
            ..SceneConfig::default()
        };
        let scene = build_bar_scene(&view, &config).unwrap();
        let last = scene.glyphs.last().unwrap();
        assert_eq!(last.addr, CellAddress::new(3, 3));
        assert_eq!(last.position, [6.0, 0.0, 6.0]);
        assert_eq!(last.height, 1.0);
    }
}
