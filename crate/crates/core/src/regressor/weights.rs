//! Versioned JSON weight files. Arrays are base64 of little-endian f64.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::loss::LossKind;
use super::network::{Architecture, Dense, HiddenLayer, NetworkParams, OUTPUT_DIM};
use super::{InputScaler, Model};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DenseFile {
    w: String,
    b: String,
}

#[derive(Serialize, Deserialize)]
struct HiddenFile {
    linear: DenseFile,
    gamma: String,
    beta: String,
    running_mean: String,
    running_var: String,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    format_version: u32,
    architecture: Architecture,
    dim_mean: [f64; 3],
    p_drop: f64,
    loss: LossKind,
    input_mean: String,
    input_scale: String,
    hidden: Vec<HiddenFile>,
    output: DenseFile,
}

fn encode(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

fn decode(s: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| Error::Corrupt(format!("{what}: {e}")))?;
    if bytes.len() != len * 8 {
        return Err(Error::Corrupt(format!("{what}: expected {len} values, found {} bytes", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn decode1(s: &str, len: usize, what: &str) -> Result<Array1<f64>> {
    decode(s, len, what).map(Array1::from)
}

fn decode2(s: &str, shape: (usize, usize), what: &str) -> Result<Array2<f64>> {
    let v = decode(s, shape.0 * shape.1, what)?;
    Ok(Array2::from_shape_vec(shape, v).expect("length checked"))
}

fn dense_file(d: &Dense) -> DenseFile {
    DenseFile {
        w: encode(d.w.as_slice().expect("contiguous")),
        b: encode(d.b.as_slice().expect("contiguous")),
    }
}

pub fn to_json(model: &Model) -> Result<String> {
    let p = &model.params;
    let file = WeightFile {
        format_version: FORMAT_VERSION,
        architecture: p.arch,
        dim_mean: model.dim_mean,
        p_drop: p.p_drop,
        loss: model.loss,
        input_mean: encode(model.scaler.mean.as_slice().expect("contiguous")),
        input_scale: encode(model.scaler.scale.as_slice().expect("contiguous")),
        hidden: p
            .hidden
            .iter()
            .map(|h| HiddenFile {
                linear: dense_file(&h.linear),
                gamma: encode(h.gamma.as_slice().expect("contiguous")),
                beta: encode(h.beta.as_slice().expect("contiguous")),
                running_mean: encode(h.running_mean.as_slice().expect("contiguous")),
                running_var: encode(h.running_var.as_slice().expect("contiguous")),
            })
            .collect(),
        output: dense_file(&p.output),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<Model> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Corrupt(format!("not a weight file: {e}")))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupt("missing format_version".into()))?;
    if found != FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch { found: found as u32, expected: FORMAT_VERSION });
    }
    let file: WeightFile = serde_json::from_value(value).map_err(|e| Error::Corrupt(e.to_string()))?;
    let arch = file.architecture;
    arch.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
    if file.hidden.len() != arch.hidden_layers {
        return Err(Error::Corrupt(format!(
            "architecture lists {} hidden layers, file has {}",
            arch.hidden_layers,
            file.hidden.len()
        )));
    }
    if !(0.0..1.0).contains(&file.p_drop) {
        return Err(Error::Corrupt(format!("p_drop {} out of range", file.p_drop)));
    }
    let w = arch.width;
    let mut hidden = Vec::with_capacity(arch.hidden_layers);
    for (l, h) in file.hidden.iter().enumerate() {
        let n_in = if l == 0 { arch.input_dim } else { w };
        let running_var = decode1(&h.running_var, w, "running_var")?;
        if running_var.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Corrupt(format!("layer {l}: non-positive running variance")));
        }
        hidden.push(HiddenLayer {
            linear: Dense {
                w: decode2(&h.linear.w, (n_in, w), "weights")?,
                b: decode1(&h.linear.b, w, "bias")?,
            },
            gamma: decode1(&h.gamma, w, "gamma")?,
            beta: decode1(&h.beta, w, "beta")?,
            running_mean: decode1(&h.running_mean, w, "running_mean")?,
            running_var,
        });
    }
    let output = Dense {
        w: decode2(&file.output.w, (w, OUTPUT_DIM), "output weights")?,
        b: decode1(&file.output.b, OUTPUT_DIM, "output bias")?,
    };
    let scaler = InputScaler {
        mean: decode1(&file.input_mean, arch.input_dim, "input_mean")?,
        scale: decode1(&file.input_scale, arch.input_dim, "input_scale")?,
    };
    Ok(Model {
        params: NetworkParams { arch, p_drop: file.p_drop, hidden, output },
        dim_mean: file.dim_mean,
        loss: file.loss,
        scaler,
    })
}

pub fn save_weights(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
