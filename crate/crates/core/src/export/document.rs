use serde::{Deserialize, Serialize};

use crate::grid::{Borders, CellAddress, CellRange, Rgb};
use crate::scene::{
    Glyph, GlyphKind, GlyphMode, GroupBounds, NormalizationMode, NormalizationPolicy, PolicyEcho, SceneConfig,
    SceneModel,
};

use super::ExportError;

pub const SCHEMA_VERSION: &str = "1";

/// Wire form of a scene. Colors are sRGB bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub version: String,
    pub config: ConfigRecord,
    pub groups: Vec<GroupBounds>,
    pub glyphs: Vec<GlyphRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub glyph_mode: GlyphMode,
    pub normalization: NormalizationMode,
    pub height_max: f64,
    pub signed_baseline: bool,
    pub cell_pitch: f64,
    pub default_bar_color: [u8; 3],
    pub group_cue_palette: Vec<[u8; 3]>,
    /// Inclusive cell range the scene was built over.
    pub range: CellRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphRecord {
    pub id: u32,
    pub kind: GlyphKind,
    pub addr: CellAddress,
    pub position: [f64; 3],
    pub height: f64,
    pub color: [u8; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub border_flags: Option<Borders>,
    /// Surface patches: heights at (r,c), (r,c+1), (r+1,c), (r+1,c+1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner_heights: Option<[f64; 4]>,
}

fn bytes(c: Rgb) -> [u8; 3] {
    [c.r, c.g, c.b]
}

fn rgb([r, g, b]: [u8; 3]) -> Rgb {
    Rgb::new(r, g, b)
}

impl GlyphRecord {
    pub fn from_glyph(g: &Glyph) -> Self {
        GlyphRecord {
            id: g.id,
            kind: g.kind,
            addr: g.addr,
            position: g.position,
            height: g.height,
            color: bytes(g.color),
            text: g.text.clone(),
            border_flags: g.border,
            corner_heights: g.corner_heights,
        }
    }

    pub fn into_glyph(self) -> Glyph {
        Glyph {
            id: self.id,
            kind: self.kind,
            addr: self.addr,
            position: self.position,
            height: self.height,
            color: rgb(self.color),
            text: self.text,
            border: self.border_flags,
            corner_heights: self.corner_heights,
        }
    }
}

pub fn scene_document(scene: &SceneModel) -> SceneDocument {
    let c = &scene.config;
    SceneDocument {
        version: SCHEMA_VERSION.to_string(),
        config: ConfigRecord {
            glyph_mode: c.glyph_mode,
            normalization: c.policy.mode,
            height_max: c.policy.height_max,
            signed_baseline: c.policy.signed_baseline,
            cell_pitch: c.cell_pitch,
            default_bar_color: bytes(c.default_bar_color),
            group_cue_palette: c.group_cue_palette.iter().copied().map(bytes).collect(),
            range: scene.range,
        },
        groups: scene.policy_echo.groups.clone(),
        glyphs: scene.glyphs.iter().map(GlyphRecord::from_glyph).collect(),
    }
}

/// Compact JSON with a fixed key order; equal scenes give equal bytes.
pub fn write_scene_document(scene: &SceneModel) -> Vec<u8> {
    serde_json::to_vec(&scene_document(scene)).expect("scene documents always serialize")
}

/// Parses a document back into a scene, recomputing the pick map and bounds.
pub fn read_scene_document(bytes: &[u8]) -> Result<SceneModel, ExportError> {
    let doc: SceneDocument = serde_json::from_slice(bytes)?;
    if doc.version != SCHEMA_VERSION {
        return Err(ExportError::UnsupportedVersion(doc.version));
    }
    let c = doc.config;
    let config = SceneConfig {
        policy: NormalizationPolicy {
            mode: c.normalization,
            height_max: c.height_max,
            signed_baseline: c.signed_baseline,
        },
        glyph_mode: c.glyph_mode,
        cell_pitch: c.cell_pitch,
        default_bar_color: rgb(c.default_bar_color),
        group_cue_palette: c.group_cue_palette.into_iter().map(rgb).collect(),
    };
    let glyphs: Vec<Glyph> = doc.glyphs.into_iter().map(GlyphRecord::into_glyph).collect();
    if let Some((i, g)) = glyphs.iter().enumerate().find(|(i, g)| g.id as usize != *i) {
        return Err(ExportError::Inconsistent(format!("glyph at index {i} has id {}", g.id)));
    }
    let pick_map = SceneModel::derive_pick_map(&glyphs);
    if !pick_map.is_bijective() {
        return Err(ExportError::Inconsistent("two pickable glyphs share a cell".into()));
    }
    Ok(SceneModel {
        bounds: SceneModel::compute_bounds(&glyphs, config.cell_pitch),
        policy_echo: PolicyEcho {
            policy: config.policy,
            groups: doc.groups,
        },
        pick_map,
        glyphs,
        range: c.range,
        config,
    })
}
