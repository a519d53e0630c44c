//! Labelmaps on disk: `<name>.json` metadata plus `<name>.raw` holding one
//! byte per voxel, x fastest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vox2fea_core::{LabelCode, LabelVolume};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelmapMeta {
    pub dims: [usize; 3],
    pub spacing_um: [f64; 3],
    #[serde(default)]
    pub frame_positions: Vec<usize>,
    #[serde(default)]
    pub palette: BTreeMap<String, String>,
}

/// The `(json, raw)` pair for a path with or without extension.
pub fn labelmap_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("raw"))
}

pub fn palette() -> BTreeMap<String, String> {
    LabelCode::PALETTE
        .iter()
        .map(|l| (l.0.to_string(), l.name().to_string()))
        .collect()
}

pub fn load_label_volume(path: &Path) -> Result<LabelVolume> {
    let (json, raw) = labelmap_paths(path);
    let text = fs::read_to_string(&json).map_err(Error::io(&json))?;
    let meta: LabelmapMeta = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: json.clone(),
        source,
    })?;
    let bytes = fs::read(&raw).map_err(Error::io(&raw))?;
    let expected = meta.dims.iter().product::<usize>();
    if bytes.len() != expected {
        return Err(Error::Format {
            path: raw,
            message: format!(
                "holds {} bytes but dims {:?} require {expected}",
                bytes.len(),
                meta.dims
            ),
        });
    }
    let voxels = bytes
        .iter()
        .map(|&b| LabelCode::new(b))
        .collect::<vox2fea_core::Result<Vec<_>>>()?;
    let mut vol = LabelVolume::new(meta.dims, meta.spacing_um, voxels)?;
    if !meta.frame_positions.is_empty() {
        if let Some(&z) = meta.frame_positions.iter().find(|&&z| z >= meta.dims[2]) {
            return Err(Error::Format {
                path: json,
                message: format!("frame position {z} is outside the volume"),
            });
        }
        vol.set_frame_positions(Some(meta.frame_positions));
    }
    Ok(vol)
}

/// Writes both files and returns their paths.
pub fn save_label_volume(vol: &LabelVolume, path: &Path) -> Result<(PathBuf, PathBuf)> {
    let (json, raw) = labelmap_paths(path);
    let meta = LabelmapMeta {
        dims: vol.dims(),
        spacing_um: vol.spacing(),
        frame_positions: vol
            .frame_positions()
            .map(<[usize]>::to_vec)
            .unwrap_or_default(),
        palette: palette(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&json, text + "\n").map_err(Error::io(&json))?;
    let bytes: Vec<u8> = vol.voxels().iter().map(|l| l.0).collect();
    fs::write(&raw, bytes).map_err(Error::io(&raw))?;
    Ok((json, raw))
}
