//! Model files.
//!
//! A model file is a single JSON object:
//!
//! ```text
//! {
//!   "format": "dcqec-mlp",
//!   "version": 1,
//!   "scalar": "f32",                      // precision the weights were trained in
//!   "mask_convention": "edge-anchored-transpose-v1",
//!   "config": { "l_input": 5, "hidden_layers": 3, "hidden_nodes": 128 },
//!   "init_seed": 123, "train_seed": 0,    // train_seed may be null
//!   "layers": [
//!     { "inputs": 50, "outputs": 128, "weights": [...], "biases": [...] },
//!     ...
//!   ]
//! }
//! ```
//!
//! `weights` is the `inputs x outputs` matrix flattened row-major (one row
//! per input unit). Numbers are written in shortest round-trip decimal form,
//! so loading reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, NdFloat};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mask::MASK_CONVENTION;
use super::mlp::{cast, to_f64, Dense, MlpConfig, MlpModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "dcqec-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    scalar: String,
    mask_convention: String,
    config: MlpConfig,
    init_seed: u64,
    train_seed: Option<u64>,
    layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

fn scalar_name<T>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

pub fn model_to_json<T: NdFloat>(model: &MlpModel<T>) -> Result<String> {
    let layers = model
        .layers()
        .iter()
        .map(|l| {
            let weights: Vec<f64> = l.weights.iter().map(|&w| to_f64(w)).collect();
            let biases: Vec<f64> = l.bias.iter().map(|&b| to_f64(b)).collect();
            if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
                return Err(Error::ModelFormat("model holds non-finite parameters".into()));
            }
            Ok(LayerFile {
                inputs: l.inputs(),
                outputs: l.outputs(),
                weights,
                biases,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        scalar: scalar_name::<T>().into(),
        mask_convention: model.mask_convention().into(),
        config: *model.config(),
        init_seed: model.init_seed,
        train_seed: model.train_seed,
        layers,
    };
    serde_json::to_string(&file).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn model_from_json<T: NdFloat>(text: &str) -> Result<MlpModel<T>> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!("unknown format tag {:?}", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    if file.mask_convention != MASK_CONVENTION {
        return Err(Error::ModelFormat(format!(
            "model was trained with mask convention {:?}, this build uses {MASK_CONVENTION:?}",
            file.mask_convention
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::ModelFormat(format!(
                    "layer {i} declares {}x{} but stores {} weights and {} biases",
                    l.inputs,
                    l.outputs,
                    l.weights.len(),
                    l.biases.len()
                )));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::ModelFormat(format!("layer {i} holds non-finite values")));
            }
            let weights = Array2::from_shape_vec((l.inputs, l.outputs), l.weights.into_iter().map(cast).collect())
                .map_err(|e| Error::ModelFormat(e.to_string()))?;
            let bias = Array1::from_vec(l.biases.into_iter().map(cast).collect());
            Ok(Dense { weights, bias })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut model = MlpModel::from_layers(file.config, layers)?;
    model.init_seed = file.init_seed;
    model.train_seed = file.train_seed;
    Ok(model)
}

pub fn save_model<T: NdFloat>(model: &MlpModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model<T: NdFloat>(path: impl AsRef<Path>) -> Result<MlpModel<T>> {
    model_from_json(&fs::read_to_string(path)?)
}

/// Hex SHA-256 of a file's bytes, used to tag experiment outputs.
pub fn file_checksum(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
