//! JSON model files.
//!
//! Three formats, told apart by the `format` field:
//! `qproj-head-v1` (compressor angles, nested per layer and pair),
//! `qproj-classical-v1` (weight rows and bias) and `qproj-fidelity-v1`
//! (uncompressed encoding). Files written here are byte-stable for equal
//! parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::ClassicalHeadParams;
use crate::circuit::{GateParams, PairCompressorParams};
use crate::error::{Error, Result};
use crate::head::{HeadConfig, HeadParams};
use crate::model::{HeadKind, Model, DEFAULT_TEMPERATURE};
use crate::store::write_string_atomic;

pub const QUANTUM_FORMAT: &str = "qproj-head-v1";
pub const CLASSICAL_FORMAT: &str = "qproj-classical-v1";
pub const FIDELITY_FORMAT: &str = "qproj-fidelity-v1";

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

/// Per layer, per pair: `[u_ctrl, u_tgt, v_controlled]` as `[α, β, γ, δ]`.
type LayerAngles = Vec<[[f64; 4]; 3]>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantumFile {
    format: String,
    d_in: usize,
    d_out: usize,
    layers: Vec<LayerAngles>,
    tau: f64,
    #[serde(default = "default_temperature")]
    temperature: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalFile {
    format: String,
    d_in: usize,
    d_out: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    #[serde(default = "default_temperature")]
    temperature: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FidelityFile {
    format: String,
    dim: usize,
    tau: f64,
    #[serde(default = "default_temperature")]
    temperature: f64,
}

#[derive(Deserialize)]
struct FormatTag {
    format: String,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub fn model_to_json(model: &Model) -> Result<String> {
    let shape = model.shape;
    let mut s = match shape.kind {
        HeadKind::Quantum => {
            let head = model
                .quantum_head()
                .ok_or_else(|| Error::Config("quantum head layout".into()))?;
            serde_json::to_string_pretty(&QuantumFile {
                format: QUANTUM_FORMAT.into(),
                d_in: shape.d_in,
                d_out: shape.d_out,
                layers: head
                    .layers
                    .iter()
                    .map(|layer| {
                        layer
                            .iter()
                            .map(|p| [p.u_ctrl.to_array(), p.u_tgt.to_array(), p.v_controlled.to_array()])
                            .collect()
                    })
                    .collect(),
                tau: model.tau().unwrap_or_default(),
                temperature: model.temperature(),
            })?
        }
        HeadKind::Classical => {
            let head = model
                .classical_head()
                .ok_or_else(|| Error::Config("classical head layout".into()))?;
            serde_json::to_string_pretty(&ClassicalFile {
                format: CLASSICAL_FORMAT.into(),
                d_in: shape.d_in,
                d_out: shape.d_out,
                weights: (0..shape.d_out).map(|i| head.row(i).to_vec()).collect(),
                bias: head.bias.clone(),
                temperature: model.temperature(),
            })?
        }
        HeadKind::None => serde_json::to_string_pretty(&FidelityFile {
            format: FIDELITY_FORMAT.into(),
            dim: shape.d_in,
            tau: model.tau().unwrap_or_default(),
            temperature: model.temperature(),
        })?,
    };
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let tag: FormatTag = serde_json::from_str(text)?;
    match tag.format.as_str() {
        QUANTUM_FORMAT => {
            let f: QuantumFile = serde_json::from_str(text)?;
            let config = HeadConfig::new(f.d_in, f.d_out)?;
            check_len(config.num_layers(), f.layers.len())?;
            let mut layers = Vec::with_capacity(f.layers.len());
            for layer in &f.layers {
                check_len(f.d_out, layer.len())?;
                layers.push(
                    layer
                        .iter()
                        .map(|[c, t, v]| PairCompressorParams {
                            u_ctrl: GateParams::from_array(*c),
                            u_tgt: GateParams::from_array(*t),
                            v_controlled: GateParams::from_array(*v),
                        })
                        .collect(),
                );
            }
            Model::from_quantum(&HeadParams { config, layers }, f.tau, f.temperature)
        }
        CLASSICAL_FORMAT => {
            let f: ClassicalFile = serde_json::from_str(text)?;
            check_len(f.d_out, f.weights.len())?;
            check_len(f.d_out, f.bias.len())?;
            for row in &f.weights {
                check_len(f.d_in, row.len())?;
            }
            let head = ClassicalHeadParams {
                d_in: f.d_in,
                d_out: f.d_out,
                weights: f.weights.concat(),
                bias: f.bias,
            };
            Model::from_classical(&head, f.temperature)
        }
        FIDELITY_FORMAT => {
            let f: FidelityFile = serde_json::from_str(text)?;
            Model::fidelity_only(f.dim, f.tau, f.temperature)
        }
        other => Err(Error::Config(format!("unknown model format {other:?}"))),
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_string_atomic(path, &model_to_json(model)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    model_from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::Parse {
            path: path.to_path_buf(),
            line: j.line(),
            msg: j.to_string(),
        },
        other => other,
    })
}
