//! glTF checks: the `gltf` crate's import validation plus structural checks
//! of our own, and the Khronos validator when `tools/validate-gltf` has been
//! installed with `npm install`.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

/// Parsed JSON chunk of a GLB, after `gltf` import validation passed.
pub fn parse(bytes: &[u8]) -> Result<Value, String> {
    gltf::Gltf::from_slice(bytes).map_err(|e| format!("gltf crate rejected asset: {e}"))?;
    if &bytes[0..4] != b"glTF" {
        return Err("bad magic".into());
    }
    let total = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if total != bytes.len() {
        return Err(format!("header length {total} != {}", bytes.len()));
    }
    let json_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if &bytes[16..20] != b"JSON" || !json_len.is_multiple_of(4) {
        return Err("bad JSON chunk".into());
    }
    serde_json::from_slice(&bytes[20..20 + json_len]).map_err(|e| e.to_string())
}

/// Binary chunk of a GLB (empty when absent).
pub fn bin(bytes: &[u8]) -> &[u8] {
    let json_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let start = 20 + json_len;
    if start >= bytes.len() {
        return &[];
    }
    let len = u32::from_le_bytes(bytes[start..start + 4].try_into().unwrap()) as usize;
    &bytes[start + 8..start + 8 + len]
}

/// Reads a float accessor as flat `f32`s.
pub fn read_f32(doc: &Value, bin: &[u8], accessor: usize) -> Vec<f32> {
    let acc = &doc["accessors"][accessor];
    let view = &doc["bufferViews"][acc["bufferView"].as_u64().unwrap() as usize];
    let offset = view["byteOffset"].as_u64().unwrap_or(0) as usize + acc["byteOffset"].as_u64().unwrap_or(0) as usize;
    let width = match acc["type"].as_str().unwrap() {
        "SCALAR" => 1,
        "VEC3" => 3,
        "VEC4" => 4,
        t => panic!("unexpected accessor type {t}"),
    };
    let n = acc["count"].as_u64().unwrap() as usize * width;
    (0..n)
        .map(|i| f32::from_le_bytes(bin[offset + 4 * i..offset + 4 * i + 4].try_into().unwrap()))
        .collect()
}

/// Structural checks beyond the `gltf` crate: every accessor fits its view,
/// views fit the buffer, instancing attributes agree in count, and POSITION
/// accessors carry exact min/max.
pub fn check_structure(bytes: &[u8]) -> Result<(), String> {
    let doc = parse(bytes)?;
    let bin = bin(bytes);
    let views = doc["bufferViews"].as_array().cloned().unwrap_or_default();
    for (i, v) in views.iter().enumerate() {
        let end = v["byteOffset"].as_u64().unwrap_or(0) + v["byteLength"].as_u64().unwrap();
        if end as usize > bin.len() {
            return Err(format!("bufferView {i} overruns the buffer"));
        }
        if v["byteOffset"].as_u64().unwrap_or(0) % 4 != 0 {
            return Err(format!("bufferView {i} misaligned"));
        }
    }
    let accessors = doc["accessors"].as_array().cloned().unwrap_or_default();
    for (i, a) in accessors.iter().enumerate() {
        let comp = match a["componentType"].as_u64().unwrap() {
            5126 | 5125 => 4,
            5123 => 2,
            c => return Err(format!("accessor {i} unexpected componentType {c}")),
        };
        let width = match a["type"].as_str().unwrap() {
            "SCALAR" => 1,
            "VEC3" => 3,
            "VEC4" => 4,
            t => return Err(format!("accessor {i} unexpected type {t}")),
        };
        let view = &views[a["bufferView"].as_u64().unwrap() as usize];
        let need = a["count"].as_u64().unwrap() * comp * width;
        if need > view["byteLength"].as_u64().unwrap() {
            return Err(format!("accessor {i} overruns its view"));
        }
    }
    for mesh in doc["meshes"].as_array().cloned().unwrap_or_default() {
        for p in mesh["primitives"].as_array().unwrap() {
            let pos = p["attributes"]["POSITION"].as_u64().unwrap() as usize;
            let values = read_f32(&doc, bin, pos);
            let mut min = [f32::INFINITY; 3];
            let mut max = [f32::NEG_INFINITY; 3];
            for v in values.chunks(3) {
                for k in 0..3 {
                    min[k] = min[k].min(v[k]);
                    max[k] = max[k].max(v[k]);
                }
            }
            let got_min: Vec<f32> = serde_json::from_value(accessors[pos]["min"].clone()).map_err(|e| e.to_string())?;
            let got_max: Vec<f32> = serde_json::from_value(accessors[pos]["max"].clone()).map_err(|e| e.to_string())?;
            if got_min != min || got_max != max {
                return Err(format!("POSITION accessor {pos} min/max mismatch"));
            }
        }
    }
    for (i, node) in doc["nodes"].as_array().unwrap().iter().enumerate() {
        if let Some(ext) = node["extensions"].get("EXT_mesh_gpu_instancing") {
            let counts: Vec<u64> = ext["attributes"]
                .as_object()
                .unwrap()
                .values()
                .map(|a| accessors[a.as_u64().unwrap() as usize]["count"].as_u64().unwrap())
                .collect();
            if counts.windows(2).any(|w| w[0] != w[1]) {
                return Err(format!("node {i} instancing attributes disagree in count"));
            }
            let names = node["extras"]["instance_names"].as_array().map_or(0, |n| n.len()) as u64;
            if names != counts[0] {
                return Err(format!("node {i} has {names} names for {} instances", counts[0]));
            }
        }
    }
    Ok(())
}

/// Total instance count across instanced nodes.
pub fn instance_count(doc: &Value) -> usize {
    kind_instance_count(doc, "")
}

/// Instances on nodes whose name starts with `prefix` (`bars_`, `tiles_`).
pub fn kind_instance_count(doc: &Value, prefix: &str) -> usize {
    doc["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["name"].as_str().is_some_and(|s| s.starts_with(prefix)))
        .filter_map(|n| n["extensions"].get("EXT_mesh_gpu_instancing"))
        .map(|ext| {
            let acc = ext["attributes"]["TRANSLATION"].as_u64().unwrap() as usize;
            doc["accessors"][acc]["count"].as_u64().unwrap() as usize
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct KhronosReport {
    pub errors: u64,
    pub warnings: u64,
    pub raw: String,
}

fn validator_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tools/validate-gltf")
}

/// Whether the Khronos validator is installed and `node` is on PATH.
pub fn khronos_available() -> bool {
    validator_dir().join("node_modules/gltf-validator").is_dir()
        && Command::new("node")
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
}

/// Runs the Khronos validator on `bytes`; `None` when it is not installed.
pub fn khronos_validate(bytes: &[u8]) -> Option<KhronosReport> {
    if !khronos_available() {
        return None;
    }
    let path = std::env::temp_dir().join(format!(
        "gridscape-{}-{}.glb",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::write(&path, bytes).ok()?;
    let out = Command::new("node")
        .arg(validator_dir().join("validate.mjs"))
        .arg(&path)
        .output()
        .ok()?;
    let _ = std::fs::remove_file(&path);
    let raw = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let v: Value = serde_json::from_str(&raw).ok()?;
    Some(KhronosReport {
        errors: v["numErrors"].as_u64().unwrap_or(u64::MAX),
        warnings: v["numWarnings"].as_u64().unwrap_or(0),
        raw,
    })
}
