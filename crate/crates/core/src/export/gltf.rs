//! Binary glTF 2.0. Bars and tiles are GPU-instanced (`EXT_mesh_gpu_instancing`)
//! unit meshes, one instanced node per (shape, color); surface patches share a
//! single indexed mesh. Instance and patch names `cell_<row>_<col>` are kept in
//! node extras so a viewer can map picks back to cells. Labels have no glTF
//! primitive and are listed in the root node's extras.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::grid::{CellAddress, Rgb};
use crate::scene::{Glyph, GlyphKind, SceneModel};

use super::ExportError;

pub const DEFAULT_INSTANCE_CAP: usize = 1_000_000;
/// Bar footprint as a fraction of the cell pitch.
pub const BAR_WIDTH: f64 = 0.8;

const ARRAY_BUFFER: u32 = 34962;
const ELEMENT_ARRAY_BUFFER: u32 = 34963;
const FLOAT: u32 = 5126;
const UNSIGNED_SHORT: u32 = 5123;
const UNSIGNED_INT: u32 = 5125;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GltfOptions {
    /// Maximum bar, tile and patch count.
    pub max_instances: usize,
}

impl Default for GltfOptions {
    fn default() -> Self {
        GltfOptions {
            max_instances: DEFAULT_INSTANCE_CAP,
        }
    }
}

/// sRGB byte to linear intensity:
/// `c/12.92` for `c <= 0.04045`, else `((c + 0.055)/1.055)^2.4`, with `c = byte/255`.
pub fn srgb_to_linear(byte: u8) -> f64 {
    let c = f64::from(byte) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

pub fn write_gltf(scene: &SceneModel) -> Result<Vec<u8>, ExportError> {
    write_gltf_with(scene, &GltfOptions::default())
}

pub fn write_gltf_with(scene: &SceneModel, opts: &GltfOptions) -> Result<Vec<u8>, ExportError> {
    let instances = scene.glyphs.iter().filter(|g| g.kind != GlyphKind::Label).count();
    if instances > opts.max_instances {
        return Err(ExportError::SceneTooLarge {
            instances,
            cap: opts.max_instances,
        });
    }
    Ok(Assembler::new(scene).finish())
}

fn cell_name(a: CellAddress) -> String {
    format!("cell_{}_{}", a.row, a.col)
}

#[derive(Default)]
struct Assembler<'s> {
    scene: Option<&'s SceneModel>,
    bin: Vec<u8>,
    views: Vec<Value>,
    accessors: Vec<Value>,
    materials: Vec<Value>,
    material_index: BTreeMap<(Rgb, bool), usize>,
    meshes: Vec<Value>,
    nodes: Vec<Value>,
    children: Vec<usize>,
    uses_instancing: bool,
}

struct UnitMesh {
    position: usize,
    normal: usize,
    indices: usize,
}

impl<'s> Assembler<'s> {
    fn new(scene: &'s SceneModel) -> Self {
        Assembler {
            scene: Some(scene),
            ..Default::default()
        }
    }

    fn scene(&self) -> &'s SceneModel {
        self.scene.expect("set in new")
    }

    fn push_view(&mut self, data: &[u8], target: Option<u32>) -> usize {
        while !self.bin.len().is_multiple_of(4) {
            self.bin.push(0);
        }
        let mut view = json!({
            "buffer": 0,
            "byteOffset": self.bin.len(),
            "byteLength": data.len(),
        });
        if let Some(t) = target {
            view["target"] = json!(t);
        }
        self.bin.extend_from_slice(data);
        self.views.push(view);
        self.views.len() - 1
    }

    fn push_accessor(&mut self, accessor: Value) -> usize {
        self.accessors.push(accessor);
        self.accessors.len() - 1
    }

    fn vec3s(&mut self, values: &[[f32; 3]], target: Option<u32>, bounds: bool) -> usize {
        let data: Vec<u8> = values.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
        let view = self.push_view(&data, target);
        let mut acc = json!({
            "bufferView": view,
            "componentType": FLOAT,
            "count": values.len(),
            "type": "VEC3",
        });
        if bounds {
            let mut min = [f32::INFINITY; 3];
            let mut max = [f32::NEG_INFINITY; 3];
            for v in values {
                for i in 0..3 {
                    min[i] = min[i].min(v[i]);
                    max[i] = max[i].max(v[i]);
                }
            }
            acc["min"] = json!(min);
            acc["max"] = json!(max);
        }
        self.push_accessor(acc)
    }

    fn scalars(&mut self, values: &[f32]) -> usize {
        let data: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let view = self.push_view(&data, None);
        self.push_accessor(json!({
            "bufferView": view,
            "componentType": FLOAT,
            "count": values.len(),
            "type": "SCALAR",
        }))
    }

    fn indices_u16(&mut self, values: &[u16]) -> usize {
        let data: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let view = self.push_view(&data, Some(ELEMENT_ARRAY_BUFFER));
        self.push_accessor(json!({
            "bufferView": view,
            "componentType": UNSIGNED_SHORT,
            "count": values.len(),
            "type": "SCALAR",
            "min": [values.iter().copied().min().unwrap_or(0)],
            "max": [values.iter().copied().max().unwrap_or(0)],
        }))
    }

    fn indices_u32(&mut self, values: &[u32]) -> usize {
        let data: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let view = self.push_view(&data, Some(ELEMENT_ARRAY_BUFFER));
        self.push_accessor(json!({
            "bufferView": view,
            "componentType": UNSIGNED_INT,
            "count": values.len(),
            "type": "SCALAR",
            "min": [values.iter().copied().min().unwrap_or(0)],
            "max": [values.iter().copied().max().unwrap_or(0)],
        }))
    }

    fn material(&mut self, color: Rgb, double_sided: bool) -> usize {
        if let Some(&i) = self.material_index.get(&(color, double_sided)) {
            return i;
        }
        let rgba = [
            srgb_to_linear(color.r),
            srgb_to_linear(color.g),
            srgb_to_linear(color.b),
            1.0,
        ];
        self.materials.push(json!({
            "name": format!("#{}", color.to_hex()),
            "pbrMetallicRoughness": {
                "baseColorFactor": rgba,
                "metallicFactor": 0.0,
                "roughnessFactor": 0.8,
            },
            "doubleSided": double_sided,
        }));
        let i = self.materials.len() - 1;
        self.material_index.insert((color, double_sided), i);
        i
    }

    /// Unit cube on the XZ footprint [-0.5, 0.5], rising from y = 0 to 1.
    fn cube(&mut self) -> UnitMesh {
        let faces: [([f32; 3], [[f32; 3]; 4]); 6] = [
            (
                [0.0, 1.0, 0.0],
                [[-0.5, 1.0, 0.5], [0.5, 1.0, 0.5], [0.5, 1.0, -0.5], [-0.5, 1.0, -0.5]],
            ),
            (
                [0.0, -1.0, 0.0],
                [[-0.5, 0.0, -0.5], [0.5, 0.0, -0.5], [0.5, 0.0, 0.5], [-0.5, 0.0, 0.5]],
            ),
            (
                [1.0, 0.0, 0.0],
                [[0.5, 0.0, 0.5], [0.5, 0.0, -0.5], [0.5, 1.0, -0.5], [0.5, 1.0, 0.5]],
            ),
            (
                [-1.0, 0.0, 0.0],
                [[-0.5, 0.0, -0.5], [-0.5, 0.0, 0.5], [-0.5, 1.0, 0.5], [-0.5, 1.0, -0.5]],
            ),
            (
                [0.0, 0.0, 1.0],
                [[-0.5, 0.0, 0.5], [0.5, 0.0, 0.5], [0.5, 1.0, 0.5], [-0.5, 1.0, 0.5]],
            ),
            (
                [0.0, 0.0, -1.0],
                [[0.5, 0.0, -0.5], [-0.5, 0.0, -0.5], [-0.5, 1.0, -0.5], [0.5, 1.0, -0.5]],
            ),
        ];
        let mut positions = Vec::with_capacity(24);
        let mut normals = Vec::with_capacity(24);
        let mut indices = Vec::with_capacity(36);
        for (n, quad) in faces {
            let base = positions.len() as u16;
            positions.extend(quad);
            normals.extend([n; 4]);
            indices.extend([base, base + 1, base + 2, base, base + 2, base + 3]);
        }
        self.unit_mesh(&positions, &normals, &indices)
    }

    /// Unit quad in the y = 0 plane facing up.
    fn quad(&mut self) -> UnitMesh {
        let positions = [[-0.5, 0.0, 0.5], [0.5, 0.0, 0.5], [0.5, 0.0, -0.5], [-0.5, 0.0, -0.5]];
        self.unit_mesh(&positions, &[[0.0, 1.0, 0.0]; 4], &[0, 1, 2, 0, 2, 3])
    }

    fn unit_mesh(&mut self, positions: &[[f32; 3]], normals: &[[f32; 3]], indices: &[u16]) -> UnitMesh {
        UnitMesh {
            position: self.vec3s(positions, Some(ARRAY_BUFFER), true),
            normal: self.vec3s(normals, Some(ARRAY_BUFFER), false),
            indices: self.indices_u16(indices),
        }
    }

    fn instanced(&mut self, kind: GlyphKind, unit: &UnitMesh, glyphs: Vec<&Glyph>, color: Rgb) {
        let pitch = self.scene().config.cell_pitch;
        let material = self.material(color, false);
        self.meshes.push(json!({
            "name": format!("{}_{}", kind.name(), color.to_hex()),
            "primitives": [{
                "attributes": {"POSITION": unit.position, "NORMAL": unit.normal},
                "indices": unit.indices,
                "material": material,
            }],
        }));
        let mesh = self.meshes.len() - 1;

        let mut translation = Vec::with_capacity(glyphs.len());
        let mut scale = Vec::with_capacity(glyphs.len());
        let mut ids = Vec::with_capacity(glyphs.len());
        let mut names = Vec::with_capacity(glyphs.len());
        for g in &glyphs {
            let [x, y, z] = g.position;
            match kind {
                GlyphKind::Bar => {
                    let w = pitch * BAR_WIDTH;
                    translation.push([x as f32, (y + g.height.min(0.0)) as f32, z as f32]);
                    scale.push([w as f32, g.height.abs() as f32, w as f32]);
                }
                _ => {
                    translation.push([x as f32, y as f32, z as f32]);
                    scale.push([pitch as f32, 1.0, pitch as f32]);
                }
            }
            ids.push(g.id as f32);
            names.push(cell_name(g.addr));
        }
        let t = self.vec3s(&translation, None, false);
        let s = self.vec3s(&scale, None, false);
        let id = self.scalars(&ids);
        self.uses_instancing = true;
        self.nodes.push(json!({
            "name": format!("{}s_{}", kind.name(), color.to_hex()),
            "mesh": mesh,
            "extensions": {
                "EXT_mesh_gpu_instancing": {
                    "attributes": {"TRANSLATION": t, "SCALE": s, "_ID": id},
                },
            },
            "extras": {"instance_names": names},
        }));
        self.children.push(self.nodes.len() - 1);
    }

    fn surface(&mut self, patches: Vec<&Glyph>) {
        let pitch = self.scene().config.cell_pitch;
        let mut vertex_of: BTreeMap<CellAddress, u32> = BTreeMap::new();
        let mut positions: Vec<[f32; 3]> = Vec::new();
        let mut by_color: BTreeMap<Rgb, (Vec<u32>, Vec<String>)> = BTreeMap::new();
        for g in &patches {
            let hs = g.corner_heights.unwrap_or([g.height; 4]);
            let [x, y, z] = g.position;
            let a = g.addr;
            let corners = [
                (CellAddress::new(a.row, a.col), [x, y + hs[0], z]),
                (CellAddress::new(a.row, a.col + 1), [x + pitch, y + hs[1], z]),
                (CellAddress::new(a.row + 1, a.col), [x, y + hs[2], z + pitch]),
                (
                    CellAddress::new(a.row + 1, a.col + 1),
                    [x + pitch, y + hs[3], z + pitch],
                ),
            ];
            let v = corners.map(|(addr, p)| {
                *vertex_of.entry(addr).or_insert_with(|| {
                    positions.push(p.map(|c| c as f32));
                    (positions.len() - 1) as u32
                })
            });
            let (indices, names) = by_color.entry(g.color).or_default();
            // TL, BL, TR and TR, BL, BR wind counter-clockwise seen from +y
            indices.extend([v[0], v[2], v[1], v[1], v[2], v[3]]);
            names.push(cell_name(a));
        }

        let mut normals = vec![[0.0f64; 3]; positions.len()];
        for (indices, _) in by_color.values() {
            for tri in indices.chunks_exact(3) {
                let tri: [u32; 3] = tri.try_into().expect("chunks of three");
                let p = tri.map(|i| positions[i as usize].map(f64::from));
                let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
                let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
                let n = [
                    e1[1] * e2[2] - e1[2] * e2[1],
                    e1[2] * e2[0] - e1[0] * e2[2],
                    e1[0] * e2[1] - e1[1] * e2[0],
                ];
                for i in tri {
                    for k in 0..3 {
                        normals[i as usize][k] += n[k];
                    }
                }
            }
        }
        let normals: Vec<[f32; 3]> = normals
            .into_iter()
            .map(|n| {
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if len > 0.0 {
                    n.map(|c| (c / len) as f32)
                } else {
                    [0.0, 1.0, 0.0]
                }
            })
            .collect();

        let position = self.vec3s(&positions, Some(ARRAY_BUFFER), true);
        let normal = self.vec3s(&normals, Some(ARRAY_BUFFER), false);
        let mut primitives = Vec::new();
        let mut patch_names = Vec::new();
        for (color, (indices, names)) in by_color {
            let idx = self.indices_u32(&indices);
            let material = self.material(color, true);
            primitives.push(json!({
                "attributes": {"POSITION": position, "NORMAL": normal},
                "indices": idx,
                "material": material,
            }));
            patch_names.push(names);
        }
        self.meshes.push(json!({"name": "surface", "primitives": primitives}));
        self.nodes.push(json!({
            "name": "surface",
            "mesh": self.meshes.len() - 1,
            // per primitive, one name per two triangles
            "extras": {"patch_names": patch_names},
        }));
        self.children.push(self.nodes.len() - 1);
    }

    fn finish(mut self) -> Vec<u8> {
        let scene = self.scene();
        let mut bars: BTreeMap<Rgb, Vec<&Glyph>> = BTreeMap::new();
        let mut tiles: BTreeMap<Rgb, Vec<&Glyph>> = BTreeMap::new();
        let mut patches = Vec::new();
        let mut labels = Vec::new();
        for g in &scene.glyphs {
            match g.kind {
                GlyphKind::Bar => bars.entry(g.color).or_default().push(g),
                GlyphKind::Tile => tiles.entry(g.color).or_default().push(g),
                GlyphKind::SurfacePatch => patches.push(g),
                GlyphKind::Label => labels.push(json!({
                    "name": cell_name(g.addr),
                    "text": g.text,
                    "position": g.position,
                    "color": g.color.to_hex(),
                })),
            }
        }
        if !tiles.is_empty() {
            let quad = self.quad();
            for (color, glyphs) in tiles {
                self.instanced(GlyphKind::Tile, &quad, glyphs, color);
            }
        }
        if !bars.is_empty() {
            let cube = self.cube();
            for (color, glyphs) in bars {
                self.instanced(GlyphKind::Bar, &cube, glyphs, color);
            }
        }
        if !patches.is_empty() {
            self.surface(patches);
        }

        let r = scene.range;
        let mut root_node = json!({
            "name": "gridscape",
            "extras": {
                "cell_pitch": scene.config.cell_pitch,
                "range": [r.top, r.left, r.bottom, r.right],
                "labels": labels,
            },
        });
        if !self.children.is_empty() {
            root_node["children"] = json!(self.children);
        }
        self.nodes.push(root_node);
        let root = self.nodes.len() - 1;

        let mut doc = json!({
            "asset": {"version": "2.0", "generator": "gridscape"},
            "scene": 0,
            "scenes": [{"nodes": [root]}],
            "nodes": self.nodes,
        });
        if self.uses_instancing {
            doc["extensionsUsed"] = json!(["EXT_mesh_gpu_instancing"]);
        }
        if !self.meshes.is_empty() {
            doc["meshes"] = json!(self.meshes);
            doc["materials"] = json!(self.materials);
            doc["accessors"] = json!(self.accessors);
            doc["bufferViews"] = json!(self.views);
            while !self.bin.len().is_multiple_of(4) {
                self.bin.push(0);
            }
            doc["buffers"] = json!([{"byteLength": self.bin.len()}]);
        }
        glb(&serde_json::to_vec(&doc).expect("json"), &self.bin)
    }
}

fn glb(json: &[u8], bin: &[u8]) -> Vec<u8> {
    let mut json = json.to_vec();
    while !json.len().is_multiple_of(4) {
        json.push(b' ');
    }
    let bin_chunk = if bin.is_empty() { 0 } else { 8 + bin.len() };
    let total = 12 + 8 + json.len() + bin_chunk;
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(b"glTF");
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(b"JSON");
    out.extend_from_slice(&json);
    if !bin.is_empty() {
        out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
        out.extend_from_slice(b"BIN\0");
        out.extend_from_slice(bin);
    }
    out
}
