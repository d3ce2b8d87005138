use gridscape_core::scene::{
    build_bar_scene, build_surface_scene, rebuild_after_edit, DeltaKind, GlyphKind, GlyphMode, NormalizationMode,
    NormalizationPolicy, SceneConfig,
};
use gridscape_core::{apply_edit, Cell, CellAddress, CellGrid, GridView};
use gridscape_testkit::{checks, fixtures, oracle};
use proptest::prelude::*;

fn surface() -> SceneConfig {
    SceneConfig {
        glyph_mode: GlyphMode::Surface,
        ..SceneConfig::default()
    }
}

#[test]
fn seventy_five_thousand_bars() {
    let g = fixtures::numeric_grid(300, 250, 1);
    let scene = build_bar_scene(&GridView::full(&g), &SceneConfig::default()).unwrap();
    assert_eq!(scene.count(GlyphKind::Bar), 75_000);
    assert_eq!(scene.count(GlyphKind::Tile), 75_000);
}

#[test]
fn sparse_pivot() {
    let (g, k) = fixtures::pivot_fixture(36, 170, 9);
    let scene = build_bar_scene(&GridView::full(&g), &SceneConfig::default()).unwrap();
    assert_eq!(scene.count(GlyphKind::Bar), k);
    // numbers, header labels and the styled header tiles; the corner is blank
    assert_eq!(scene.count(GlyphKind::Label), 35 + 169);
    assert_eq!(scene.count(GlyphKind::Tile), k + 35 + 169);
    checks::bar_mapping(&g, g.full_range(), &SceneConfig::default()).unwrap();
}

#[test]
fn yield_curve_surface() {
    let (g, holes) = fixtures::surface_fixture(16, 1100, 25, 3);
    let scene = build_surface_scene(&GridView::full(&g), &surface()).unwrap();
    let expect = oracle::surface_patches(&g, g.full_range());
    assert_eq!(scene.count(GlyphKind::SurfacePatch), expect.len());
    assert!(expect.len() < 15 * 1099);
    for h in holes {
        for g in scene.glyphs.iter().filter(|g| g.kind == GlyphKind::SurfacePatch) {
            let a = g.addr;
            assert!(!(a.row..=a.row + 1).contains(&h.row) || !(a.col..=a.col + 1).contains(&h.col));
        }
    }
    checks::surface_mapping(&g, g.full_range(), &surface()).unwrap();
}

#[test]
fn delta_examples() {
    let mut g = CellGrid::from_rows(vec![(0..=10).map(|v| Cell::number(v as f64)).collect()]).unwrap();
    let config = SceneConfig::default();
    let scene = build_bar_scene(&GridView::full(&g), &config).unwrap();
    let at = CellAddress::new(0, 5);

    apply_edit(&mut g, at, "6").unwrap();
    let d = rebuild_after_edit(&scene, &GridView::full(&g), at, &config).unwrap();
    assert_eq!(d.kind, DeltaKind::Incremental);
    assert_eq!(d.changed.iter().filter(|g| g.kind == GlyphKind::Bar).count(), 1);

    apply_edit(&mut g, at, "99").unwrap();
    let d = rebuild_after_edit(&scene, &GridView::full(&g), at, &config).unwrap();
    assert_eq!(
        (d.kind, d.reason.as_str()),
        (DeltaKind::FullRebuild, "group bounds changed")
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bar_mapping_rules(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let g = fixtures::random_grid(&mut rng, 12, 12);
        let range = fixtures::random_range(&mut rng, &g);
        let config = fixtures::random_config(&mut rng, GlyphMode::Bars);
        checks::bar_mapping(&g, range, &config).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn surface_mapping_rules(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let g = fixtures::random_grid(&mut rng, 12, 12);
        let range = fixtures::random_range(&mut rng, &g);
        let config = fixtures::random_config(&mut rng, GlyphMode::Surface);
        checks::surface_mapping(&g, range, &config).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn normalization_rules(seed in any::<u64>(), n in 1usize..60, per in any::<bool>(), signed in any::<bool>()) {
        let mut rng = fixtures::rng(seed);
        let values = fixtures::random_values(&mut rng, n);
        let policy = NormalizationPolicy {
            mode: if per { NormalizationMode::PerFormatGroup } else { NormalizationMode::Uniform },
            height_max: 2.0,
            signed_baseline: signed,
        };
        checks::normalization(&values, &policy).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn affine_invariance(seed in any::<u64>(), n in 2usize..60) {
        let mut rng = fixtures::rng(seed);
        let values = fixtures::random_values(&mut rng, n);
        let (a, b) = fixtures::random_affine(&mut rng, &values);
        checks::affine_invariance(&values, &NormalizationPolicy::default(), a, b).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn delta_soundness(seed in any::<u64>(), surface_mode in any::<bool>()) {
        let mut rng = fixtures::rng(seed);
        let g = fixtures::random_grid(&mut rng, 8, 8);
        let range = fixtures::random_range(&mut rng, &g);
        let mode = if surface_mode { GlyphMode::Surface } else { GlyphMode::Bars };
        let config = fixtures::random_config(&mut rng, mode);
        let edits = fixtures::random_edits(&mut rng, &g, 12);
        checks::edit_sequence(&g, range, &config, &edits).map_err(TestCaseError::fail)?;
    }
}
