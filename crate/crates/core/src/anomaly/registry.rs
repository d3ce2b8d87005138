use std::collections::BTreeMap;
use std::sync::Arc;

use crate::grid::GridView;

use super::detectors::{detect_discontinuities, detect_fins, detect_tabs};
use super::{assemble, AnomalyError, AnomalyFlag, AnomalyReport, DetectorParams};

/// A named anomaly detector over a grid view.
pub trait Detector: Send + Sync {
    fn name(&self) -> &'static str;
    fn detect(&self, view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FinDetector;

impl Detector for FinDetector {
    fn name(&self) -> &'static str {
        "fins"
    }

    fn detect(&self, view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
        detect_fins(view, params)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TabDetector;

impl Detector for TabDetector {
    fn name(&self) -> &'static str {
        "tabs"
    }

    fn detect(&self, view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
        detect_tabs(view, params)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DiscontinuityDetector;

impl Detector for DiscontinuityDetector {
    fn name(&self) -> &'static str {
        "discontinuities"
    }

    fn detect(&self, view: &GridView<'_>, params: &DetectorParams) -> Vec<AnomalyFlag> {
        detect_discontinuities(view, params)
    }
}

/// Detectors by name. Reports run them in name order.
#[derive(Clone, Default)]
pub struct DetectorRegistry {
    detectors: BTreeMap<&'static str, Arc<dyn Detector>>,
}

impl DetectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(FinDetector));
        reg.register(Arc::new(TabDetector));
        reg.register(Arc::new(DiscontinuityDetector));
        reg
    }

    pub fn register(&mut self, detector: Arc<dyn Detector>) {
        self.detectors.insert(detector.name(), detector);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Detector>, AnomalyError> {
        self.detectors
            .get(name)
            .cloned()
            .ok_or_else(|| AnomalyError::UnknownDetector(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.detectors.keys().copied()
    }

    /// Runs the named detectors (all of them when `only` is `None`) and
    /// assembles a deduplicated, sorted report.
    pub fn run(
        &self,
        view: &GridView<'_>,
        params: &DetectorParams,
        only: Option<&[String]>,
    ) -> Result<AnomalyReport, AnomalyError> {
        params.validate()?;
        let selected: Vec<Arc<dyn Detector>> = match only {
            Some(names) => names.iter().map(|n| self.get(n)).collect::<Result<_, _>>()?,
            None => self.detectors.values().cloned().collect(),
        };
        let flags = selected.iter().flat_map(|d| d.detect(view, params));
        let cells_scanned = view.cells().filter(|(_, c)| c.value.as_number().is_some()).count();
        let echo = DetectorParams {
            series_axis: Some(params.axis_for(view)),
            ..*params
        };
        Ok(assemble(flags.collect::<Vec<_>>(), echo, cells_scanned))
    }
}
