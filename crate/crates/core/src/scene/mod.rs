//! Mapping a grid view onto a 3D scene that keeps the sheet's row/column
//! structure: numbers become bars (or a surface), text stays text, and every
//! formatted cell keeps a colored tile.

mod builder;
mod delta;
mod normalize;
mod registry;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Borders, CellAddress, CellRange, FormatCategory, GridView, Rgb};

pub use builder::{BarBuilder, SurfaceBuilder};
pub use delta::{apply_delta, rebuild_after_edit};
pub use normalize::{group_bounds, normalize, scale_value};
pub use registry::{BuildContext, SceneBuilder, SceneBuilderRegistry};

/// Tile color for formatted cells without a fill.
pub const TILE_GRAY: Rgb = Rgb::new(217, 217, 217);
/// Label text color.
pub const LABEL_COLOR: Rgb = Rgb::new(0, 0, 0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("view contains nothing to draw")]
    EmptyView,
    #[error("surface mode needs at least one numeric cell")]
    NoNumericCells,
    #[error("scene was built with a different configuration: {0}")]
    ConfigMismatch(String),
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown glyph mode '{0}'")]
    UnknownMode(String),
    #[error("delta cannot be applied: {0}")]
    DeltaNotApplicable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    Uniform,
    PerFormatGroup,
}

impl FromStr for NormalizationMode {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(NormalizationMode::Uniform),
            "per-format" | "per_format_group" => Ok(NormalizationMode::PerFormatGroup),
            _ => Err(SceneError::InvalidConfig(format!(
                "unknown normalization '{s}' (expected uniform or per-format)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub mode: NormalizationMode,
    pub height_max: f64,
    pub signed_baseline: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            mode: NormalizationMode::Uniform,
            height_max: 1.0,
            signed_baseline: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphMode {
    Bars,
    Surface,
}

impl FromStr for GlyphMode {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bars" => Ok(GlyphMode::Bars),
            "surface" => Ok(GlyphMode::Surface),
            _ => Err(SceneError::UnknownMode(s.to_string())),
        }
    }
}

impl GlyphMode {
    pub fn name(self) -> &'static str {
        match self {
            GlyphMode::Bars => "bars",
            GlyphMode::Surface => "surface",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub policy: NormalizationPolicy,
    pub glyph_mode: GlyphMode,
    pub cell_pitch: f64,
    pub default_bar_color: Rgb,
    pub group_cue_palette: Vec<Rgb>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            policy: NormalizationPolicy::default(),
            glyph_mode: GlyphMode::Bars,
            cell_pitch: 1.0,
            default_bar_color: Rgb::new(68, 114, 196),
            group_cue_palette: vec![
                Rgb::new(68, 114, 196),
                Rgb::new(237, 125, 49),
                Rgb::new(112, 173, 71),
                Rgb::new(255, 192, 0),
                Rgb::new(91, 155, 213),
                Rgb::new(165, 165, 165),
                Rgb::new(158, 72, 14),
            ],
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let h = self.policy.height_max;
        if !(h.is_finite() && h > 0.0) {
            return Err(SceneError::InvalidConfig(format!("height_max must be > 0, got {h}")));
        }
        let p = self.cell_pitch;
        if !(p.is_finite() && p > 0.0) {
            return Err(SceneError::InvalidConfig(format!("cell_pitch must be > 0, got {p}")));
        }
        if self.policy.mode == NormalizationMode::PerFormatGroup && self.group_cue_palette.is_empty() {
            return Err(SceneError::InvalidConfig(
                "group_cue_palette must be non-empty for per-format normalization".into(),
            ));
        }
        Ok(())
    }

    /// Bar color cue for a normalization group.
    pub fn group_color(&self, category: FormatCategory) -> Rgb {
        self.group_cue_palette[category.ordinal() % self.group_cue_palette.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphKind {
    Tile,
    Bar,
    Label,
    SurfacePatch,
}

impl GlyphKind {
    pub fn name(self) -> &'static str {
        match self {
            GlyphKind::Tile => "tile",
            GlyphKind::Bar => "bar",
            GlyphKind::Label => "label",
            GlyphKind::SurfacePatch => "surface_patch",
        }
    }
}

pub type GlyphId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub id: GlyphId,
    pub kind: GlyphKind,
    pub addr: CellAddress,
    /// Cell anchor: `x = col * pitch`, `y = 0`, `z = row * pitch`.
    pub position: [f64; 3],
    pub height: f64,
    pub color: Rgb,
    pub text: Option<String>,
    pub border: Option<Borders>,
    /// Surface patches only: heights at (r,c), (r,c+1), (r+1,c), (r+1,c+1).
    pub corner_heights: Option<[f64; 4]>,
}

impl Glyph {
    /// Axis-aligned extent of the glyph given the cell pitch.
    pub fn extent(&self, pitch: f64) -> Aabb {
        let [x, y, z] = self.position;
        let half = pitch / 2.0;
        match self.kind {
            GlyphKind::SurfacePatch => {
                let hs = self.corner_heights.unwrap_or([self.height; 4]);
                let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Aabb {
                    min: [x, y + lo, z],
                    max: [x + pitch, y + hi, z + pitch],
                }
            }
            _ => Aabb {
                min: [x - half, y + self.height.min(0.0), z - half],
                max: [x + half, y + self.height.max(0.0), z + half],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub const ZERO: Aabb = Aabb {
        min: [0.0; 3],
        max: [0.0; 3],
    };

    pub fn union(self, other: Aabb) -> Aabb {
        let mut out = self;
        for i in 0..3 {
            out.min[i] = out.min[i].min(other.min[i]);
            out.max[i] = out.max[i].max(other.max[i]);
        }
        out
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.min[i] && other.max[i] <= self.max[i])
    }
}

/// Two-way index between pickable glyphs and the cells they stand for.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PickMap {
    by_id: BTreeMap<GlyphId, CellAddress>,
    by_addr: BTreeMap<CellAddress, GlyphId>,
}

impl PickMap {
    pub fn insert(&mut self, id: GlyphId, addr: CellAddress) {
        self.by_id.insert(id, addr);
        self.by_addr.insert(addr, id);
    }

    pub fn addr(&self, id: GlyphId) -> Option<CellAddress> {
        self.by_id.get(&id).copied()
    }

    pub fn glyph(&self, addr: CellAddress) -> Option<GlyphId> {
        self.by_addr.get(&addr).copied()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GlyphId, CellAddress)> + '_ {
        self.by_id.iter().map(|(id, a)| (*id, *a))
    }

    pub fn is_bijective(&self) -> bool {
        self.by_id.len() == self.by_addr.len() && self.by_id.iter().all(|(id, a)| self.by_addr.get(a) == Some(id))
    }
}

/// Min/max of one normalization group. `group` is `None` in uniform mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupBounds {
    pub group: Option<FormatCategory>,
    pub v_min: f64,
    pub v_max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEcho {
    pub policy: NormalizationPolicy,
    pub groups: Vec<GroupBounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel {
    pub config: SceneConfig,
    pub range: CellRange,
    pub glyphs: Vec<Glyph>,
    pub pick_map: PickMap,
    pub bounds: Aabb,
    pub policy_echo: PolicyEcho,
}

impl SceneModel {
    /// A scene with no glyphs, for views that have nothing to draw.
    pub fn empty(config: SceneConfig, range: CellRange) -> Self {
        SceneModel {
            policy_echo: PolicyEcho {
                policy: config.policy,
                groups: Vec::new(),
            },
            config,
            range,
            glyphs: Vec::new(),
            pick_map: PickMap::default(),
            bounds: Aabb::ZERO,
        }
    }

    pub fn glyph(&self, id: GlyphId) -> Option<&Glyph> {
        // ids are dense and assigned in order
        self.glyphs.get(id as usize).filter(|g| g.id == id)
    }

    pub fn count(&self, kind: GlyphKind) -> usize {
        self.glyphs.iter().filter(|g| g.kind == kind).count()
    }

    pub fn glyphs_at(&self, addr: CellAddress) -> impl Iterator<Item = &Glyph> {
        self.glyphs.iter().filter(move |g| g.addr == addr)
    }

    pub fn compute_bounds(glyphs: &[Glyph], pitch: f64) -> Aabb {
        glyphs
            .iter()
            .map(|g| g.extent(pitch))
            .reduce(Aabb::union)
            .unwrap_or(Aabb::ZERO)
    }

    /// Rebuilds the pick map from glyphs: every non-tile glyph is pickable.
    pub fn derive_pick_map(glyphs: &[Glyph]) -> PickMap {
        let mut map = PickMap::default();
        for g in glyphs.iter().filter(|g| g.kind != GlyphKind::Tile) {
            map.insert(g.id, g.addr);
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    Incremental,
    FullRebuild,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDelta {
    pub kind: DeltaKind,
    pub changed: Vec<Glyph>,
    pub removed: Vec<GlyphId>,
    pub reason: String,
}

impl SceneDelta {
    pub fn full_rebuild(reason: impl Into<String>) -> Self {
        SceneDelta {
            kind: DeltaKind::FullRebuild,
            changed: Vec::new(),
            removed: Vec::new(),
            reason: reason.into(),
        }
    }
}

/// Builds a bar scene; `config.glyph_mode` must be `Bars`.
pub fn build_bar_scene(view: &GridView<'_>, config: &SceneConfig) -> Result<SceneModel, SceneError> {
    if config.glyph_mode != GlyphMode::Bars {
        return Err(SceneError::ConfigMismatch("glyph_mode is not bars".into()));
    }
    builder::build(&BarBuilder, view, config)
}

/// Builds a heightfield surface; `config.glyph_mode` must be `Surface`.
pub fn build_surface_scene(view: &GridView<'_>, config: &SceneConfig) -> Result<SceneModel, SceneError> {
    if config.glyph_mode != GlyphMode::Surface {
        return Err(SceneError::ConfigMismatch("glyph_mode is not surface".into()));
    }
    builder::build(&SurfaceBuilder, view, config)
}

/// Builds with any registered builder.
pub fn build_with(
    builder: &dyn SceneBuilder,
    view: &GridView<'_>,
    config: &SceneConfig,
) -> Result<SceneModel, SceneError> {
    builder::build(builder, view, config)
}

/// Builds with whichever builder `config.glyph_mode` selects.
pub fn build_scene(view: &GridView<'_>, config: &SceneConfig) -> Result<SceneModel, SceneError> {
    match config.glyph_mode {
        GlyphMode::Bars => build_bar_scene(view, config),
        GlyphMode::Surface => build_surface_scene(view, config),
    }
}
