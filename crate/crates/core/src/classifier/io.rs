//! Versioned JSON weight files.
//!
//! Every tensor is stored by name with explicit dimensions so a file can be
//! inspected without the code. Floats are written in shortest round-trip
//! form, which makes save/load bit-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::lstm::{LstmLayer, LAYERS};
use super::{ClassifierError, ModelWeights};

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Tensor {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format_version: u32,
    hidden: usize,
    norm_mean: Vec<f64>,
    norm_std: Vec<f64>,
    tensors: Vec<Tensor>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

fn matrix(name: String, m: &Array2<f64>) -> Tensor {
    Tensor {
        name,
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.iter().copied().collect(),
    }
}

fn vector(name: String, v: &Array1<f64>) -> Tensor {
    Tensor {
        name,
        rows: v.len(),
        cols: 1,
        data: v.to_vec(),
    }
}

pub fn weights_to_json(w: &ModelWeights) -> String {
    let mut tensors = Vec::new();
    for (i, l) in w.layers.iter().enumerate() {
        tensors.push(matrix(format!("lstm{i}.w_ih"), &l.w_ih));
        tensors.push(matrix(format!("lstm{i}.w_hh"), &l.w_hh));
        tensors.push(vector(format!("lstm{i}.b"), &l.b));
    }
    tensors.push(matrix("fc.w".into(), &w.fc_w));
    tensors.push(vector("fc.b".into(), &w.fc_b));
    let file = WeightsFile {
        format_version: WEIGHTS_FORMAT_VERSION,
        hidden: w.hidden(),
        norm_mean: w.norm_mean.to_vec(),
        norm_std: w.norm_std.to_vec(),
        tensors,
    };
    serde_json::to_string(&file).expect("weights serialize")
}

pub fn weights_from_json(text: &str) -> Result<ModelWeights, ClassifierError> {
    let corrupt = |e: serde_json::Error| ClassifierError::CorruptFile(e.to_string());
    let probe: VersionProbe = serde_json::from_str(text).map_err(corrupt)?;
    if probe.format_version != WEIGHTS_FORMAT_VERSION {
        return Err(ClassifierError::VersionMismatch {
            found: probe.format_version,
            expected: WEIGHTS_FORMAT_VERSION,
        });
    }
    let file: WeightsFile = serde_json::from_str(text).map_err(corrupt)?;
    let mut tensors = file.tensors.into_iter();
    let mut take = |name: String, rows: usize, cols: usize| -> Result<Vec<f64>, ClassifierError> {
        let t = tensors
            .next()
            .ok_or_else(|| ClassifierError::CorruptFile(format!("missing tensor {name}")))?;
        if t.name != name {
            return Err(ClassifierError::CorruptFile(format!(
                "expected tensor {name}, found {}",
                t.name
            )));
        }
        if t.rows != rows || t.cols != cols || t.data.len() != rows * cols {
            return Err(ClassifierError::DimensionMismatch(format!(
                "{name}: expected {rows}x{cols}, found {}x{} with {} values",
                t.rows,
                t.cols,
                t.data.len()
            )));
        }
        Ok(t.data)
    };
    let h = file.hidden;
    let mut w = ModelWeights::zeros(h);
    for i in 0..LAYERS {
        let input = if i == 0 { super::FEATURES } else { h };
        let w_ih = take(format!("lstm{i}.w_ih"), 4 * h, input)?;
        let w_hh = take(format!("lstm{i}.w_hh"), 4 * h, h)?;
        let b = take(format!("lstm{i}.b"), 4 * h, 1)?;
        w.layers[i] = LstmLayer {
            w_ih: Array2::from_shape_vec((4 * h, input), w_ih).unwrap(),
            w_hh: Array2::from_shape_vec((4 * h, h), w_hh).unwrap(),
            b: Array1::from(b),
        };
    }
    w.fc_w = Array2::from_shape_vec((2, h), take("fc.w".into(), 2, h)?).unwrap();
    w.fc_b = Array1::from(take("fc.b".into(), 2, 1)?);
    if tensors.next().is_some() {
        return Err(ClassifierError::CorruptFile("unexpected trailing tensor".into()));
    }
    w.norm_mean = Array1::from(file.norm_mean);
    w.norm_std = Array1::from(file.norm_std);
    w.validate()?;
    Ok(w)
}

pub fn save_weights(w: &ModelWeights, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
    fs::write(path, weights_to_json(w))?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ModelWeights, ClassifierError> {
    weights_from_json(&fs::read_to_string(path)?)
}
