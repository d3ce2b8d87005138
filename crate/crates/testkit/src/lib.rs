//! Synthetic fixtures and brute-force reference implementations used by the
//! gridscape test suites. Oracles here deliberately avoid the production code
//! paths: they sort instead of selecting, and walk grids by index.

pub mod checks;
pub mod fixtures;
pub mod glb;
pub mod oracle;
