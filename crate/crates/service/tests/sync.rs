use gridscape_core::scene::GlyphMode;
use gridscape_testkit::{checks, fixtures};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn replicas_follow_the_session(seed in any::<u64>(), surface in any::<bool>()) {
        let mut rng = fixtures::rng(seed);
        let grid = fixtures::random_grid(&mut rng, 8, 8);
        let range = fixtures::random_range(&mut rng, &grid);
        let mode = if surface { GlyphMode::Surface } else { GlyphMode::Bars };
        let config = fixtures::random_config(&mut rng, mode);
        let steps = fixtures::random_sync_steps(&mut rng, &grid, 15);
        checks::sync_sequence(&grid, range, &config, &steps).map_err(TestCaseError::fail)?;
    }
}
