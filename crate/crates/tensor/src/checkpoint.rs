use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::params::ParamStore;
use crate::{Result, Tensor, TensorError};

/// Checkpoint layout: `<stem>.json` holds the manifest, `<stem>.bin` holds
/// every parameter's data back to back as little-endian f64. Offsets count
/// f64 elements, not bytes. Manifest order is store insertion order, so a
/// save/load round trip reproduces the store exactly and reruns are
/// byte-identical.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    total_len: usize,
    params: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

fn ck_err(what: &str, path: &Path, err: impl std::fmt::Display) -> TensorError {
    TensorError::Checkpoint(format!("{what} {}: {err}", path.display()))
}

/// Write `<stem>.json` + `<stem>.bin` for every parameter in the store.
pub fn save_params(store: &ParamStore, stem: &Path) -> Result<()> {
    let mut params = Vec::new();
    let mut blob = Vec::new();
    let mut offset = 0;
    for (name, tensor) in store.iter() {
        params.push(ManifestEntry {
            name: name.to_string(),
            shape: tensor.shape.clone(),
            offset,
        });
        offset += tensor.numel();
        for v in &tensor.data {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        total_len: offset,
        params,
    };
    let json_path = stem.with_extension("json");
    let bin_path = stem.with_extension("bin");
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir).map_err(|e| ck_err("creating", dir, e))?;
    }
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ck_err("encoding", &json_path, e))?;
    fs::write(&json_path, text).map_err(|e| ck_err("writing", &json_path, e))?;
    fs::write(&bin_path, blob).map_err(|e| ck_err("writing", &bin_path, e))?;
    Ok(())
}

/// Rebuild a store from `<stem>.json` + `<stem>.bin`, in manifest order.
pub fn load_params(stem: &Path) -> Result<ParamStore> {
    let json_path = stem.with_extension("json");
    let bin_path = stem.with_extension("bin");
    let text = fs::read_to_string(&json_path).map_err(|e| ck_err("reading", &json_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| ck_err("parsing", &json_path, e))?;
    let blob = fs::read(&bin_path).map_err(|e| ck_err("reading", &bin_path, e))?;
    if blob.len() != manifest.total_len * 8 {
        return Err(TensorError::Checkpoint(format!(
            "blob {} holds {} bytes but manifest expects {}",
            bin_path.display(),
            blob.len(),
            manifest.total_len * 8
        )));
    }
    let mut store = ParamStore::new();
    for entry in &manifest.params {
        let numel: usize = entry.shape.iter().product();
        let end = entry.offset + numel;
        if end > manifest.total_len {
            return Err(TensorError::Checkpoint(format!(
                "parameter {:?} spans {}..{} beyond blob of {}",
                entry.name, entry.offset, end, manifest.total_len
            )));
        }
        let data: Vec<f64> = blob[entry.offset * 8..end * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        store.add(&entry.name, Tensor::new(entry.shape.clone(), data)?);
    }
    Ok(store)
}
