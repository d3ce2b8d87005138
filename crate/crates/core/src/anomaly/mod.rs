//! Machine-detectable versions of the visual anomalies analysts look for in
//! dense numeric grids: isolated spikes ("fins"), stale or missing runs
//! ("tabs"), and level jumps.
//!
//! Every detector scans one series at a time, a series being a row or a column
//! of the view depending on [`DetectorParams::series_axis`].

mod detectors;
mod registry;
mod stats;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Axis, CellAddress, GridView};

pub use detectors::{detect_discontinuities, detect_fins, detect_tabs};
pub use registry::{Detector, DetectorRegistry, DiscontinuityDetector, FinDetector, TabDetector};
pub use stats::{median, robust_zscores, MAD_SCALE, MEAN_AD_SCALE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnomalyError {
    #[error("series needs at least 3 values, got {0}")]
    SeriesTooShort(usize),
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
    #[error("unknown detector '{0}'")]
    UnknownDetector(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub z_threshold: f64,
    /// Cells on each side of the centre, along the series.
    pub window_radius: usize,
    pub tab_min_run: usize,
    /// A neighbour at or above this robust z makes a spike part of a level
    /// shift rather than a fin. Kept apart from `z_threshold` so that raising
    /// the threshold can only remove flags.
    #[serde(default = "default_isolation_z")]
    pub isolation_z: f64,
    /// `None` picks columns for tall views and rows otherwise.
    pub series_axis: Option<Axis>,
}

fn default_isolation_z() -> f64 {
    3.5
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            z_threshold: 3.5,
            window_radius: 5,
            tab_min_run: 5,
            isolation_z: default_isolation_z(),
            series_axis: None,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), AnomalyError> {
        if !(self.z_threshold.is_finite() && self.z_threshold > 0.0) {
            return Err(AnomalyError::InvalidParams(format!(
                "z_threshold must be > 0, got {}",
                self.z_threshold
            )));
        }
        if !(self.isolation_z.is_finite() && self.isolation_z > 0.0) {
            return Err(AnomalyError::InvalidParams(format!(
                "isolation_z must be > 0, got {}",
                self.isolation_z
            )));
        }
        if self.window_radius < 1 {
            return Err(AnomalyError::InvalidParams("window_radius must be >= 1".into()));
        }
        if self.tab_min_run < 2 {
            return Err(AnomalyError::InvalidParams("tab_min_run must be >= 2".into()));
        }
        Ok(())
    }

    pub fn axis_for(&self, view: &GridView<'_>) -> Axis {
        self.series_axis
            .unwrap_or_else(|| Axis::default_for(view.n_rows(), view.n_cols()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Fin,
    Tab,
    Discontinuity,
    Missing,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Fin => "fin",
            DetectorKind::Tab => "tab",
            DetectorKind::Discontinuity => "discontinuity",
            DetectorKind::Missing => "missing",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFlag {
    pub addr: CellAddress,
    pub detector: DetectorKind,
    /// Robust z for fins and discontinuities, run length for tabs.
    pub score: f64,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub flags: Vec<AnomalyFlag>,
    pub params_echo: DetectorParams,
    pub cells_scanned: usize,
}

impl AnomalyReport {
    pub fn count(&self, detector: DetectorKind) -> usize {
        self.flags.iter().filter(|f| f.detector == detector).count()
    }
}

/// Runs every default detector.
pub fn run_report(view: &GridView<'_>, params: &DetectorParams) -> Result<AnomalyReport, AnomalyError> {
    DetectorRegistry::with_defaults().run(view, params, None)
}

/// Dedups by (addr, detector), keeping the highest score, then sorts by
/// detector, descending score and address.
pub(crate) fn assemble(
    flags: impl IntoIterator<Item = AnomalyFlag>,
    params_echo: DetectorParams,
    cells_scanned: usize,
) -> AnomalyReport {
    let mut unique: BTreeMap<(DetectorKind, CellAddress), AnomalyFlag> = BTreeMap::new();
    for flag in flags {
        match unique.entry((flag.detector, flag.addr)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(flag);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                if flag.score > e.get().score {
                    e.insert(flag);
                }
            }
        }
    }
    let mut flags: Vec<AnomalyFlag> = unique.into_values().collect();
    flags.sort_by(|a, b| {
        a.detector
            .cmp(&b.detector)
            .then(b.score.total_cmp(&a.score))
            .then(a.addr.cmp(&b.addr))
    });
    AnomalyReport {
        flags,
        params_echo,
        cells_scanned,
    }
}
