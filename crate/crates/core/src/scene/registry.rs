use std::collections::BTreeMap;
use std::sync::Arc;

use crate::grid::{Cell, CellAddress, CellValue, GridView};

use super::builder::{BarBuilder, SurfaceBuilder};
use super::normalize::{group_bounds, lookup, scale_value};
use super::{Glyph, GlyphMode, GroupBounds, SceneConfig, SceneError};

/// Everything a builder needs to turn one cell into glyphs.
pub struct BuildContext<'a, 'g> {
    pub view: &'a GridView<'g>,
    pub config: &'a SceneConfig,
    pub groups: Vec<GroupBounds>,
}

impl<'a, 'g> BuildContext<'a, 'g> {
    pub fn new(view: &'a GridView<'g>, config: &'a SceneConfig) -> Self {
        let values: Vec<_> = view
            .cells()
            .filter_map(|(addr, cell)| cell.value.as_number().map(|v| (addr, v, cell.format.category)))
            .collect();
        BuildContext {
            view,
            config,
            groups: group_bounds(&values, &config.policy),
        }
    }

    /// Normalized height of a numeric cell.
    pub fn height(&self, cell: &Cell) -> Option<f64> {
        let CellValue::Number(v) = cell.value else {
            return None;
        };
        let bounds = lookup(&self.groups, &self.config.policy, cell.format.category)?;
        Some(scale_value(v, bounds, &self.config.policy))
    }

    pub fn position(&self, addr: CellAddress) -> [f64; 3] {
        let p = self.config.cell_pitch;
        [addr.col as f64 * p, 0.0, addr.row as f64 * p]
    }
}

/// One way of turning cells into glyphs.
pub trait SceneBuilder: Send + Sync {
    fn mode(&self) -> GlyphMode;

    fn name(&self) -> &'static str {
        self.mode().name()
    }

    /// Rejects views the builder cannot draw.
    fn prepare(&self, _ctx: &BuildContext<'_, '_>) -> Result<(), SceneError> {
        Ok(())
    }

    /// Glyphs for one cell in emission order. Ids are assigned by the caller.
    fn cell_glyphs(&self, ctx: &BuildContext<'_, '_>, addr: CellAddress, cell: &Cell) -> Vec<Glyph>;

    /// Other cells whose glyphs read the value at `addr`.
    fn dependents(&self, _ctx: &BuildContext<'_, '_>, _addr: CellAddress) -> Vec<CellAddress> {
        Vec::new()
    }
}

/// Scene builders keyed by name (`bars`, `surface`).
#[derive(Clone, Default)]
pub struct SceneBuilderRegistry {
    builders: BTreeMap<&'static str, Arc<dyn SceneBuilder>>,
}

impl SceneBuilderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(BarBuilder));
        reg.register(Arc::new(SurfaceBuilder));
        reg
    }

    pub fn register(&mut self, builder: Arc<dyn SceneBuilder>) {
        self.builders.insert(builder.name(), builder);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SceneBuilder>, SceneError> {
        self.builders
            .get(name)
            .cloned()
            .ok_or_else(|| SceneError::UnknownMode(name.to_string()))
    }

    pub fn for_mode(&self, mode: GlyphMode) -> Result<Arc<dyn SceneBuilder>, SceneError> {
        self.get(mode.name())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }
}
