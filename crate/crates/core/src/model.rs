//! Trainable similarity models and their flat parameter layout.
//!
//! | kind       | flat layout                                   |
//! |------------|-----------------------------------------------|
//! | quantum    | head angles (layer, pair, 12), τ, temperature |
//! | classical  | weights (row-major), bias, temperature        |
//! | none       | τ, temperature                                |

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::autodiff::Real;
use crate::baseline::{classical_forward, classical_param_count, cosine_similarity, ClassicalHeadParams};
use crate::encoding::{encode, encode_with, log_fidelity, EncoderConfig, SeparableState};
use crate::error::{Error, Result};
use crate::head::{init_params, param_count, HeadConfig, HeadParams, PreparedHead};
use crate::store::EmbeddingStore;

pub const DEFAULT_TEMPERATURE: f64 = 0.05;
pub const DEFAULT_TAU: f64 = 1.0;
/// Floor that keeps τ and the temperature positive during training.
pub const POSITIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadKind {
    Quantum,
    Classical,
    /// Fidelity on the uncompressed encoding.
    None,
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::Quantum => "quantum",
            HeadKind::Classical => "classical",
            HeadKind::None => "none",
        })
    }
}

impl FromStr for HeadKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(HeadKind::Quantum),
            "classical" => Ok(HeadKind::Classical),
            "none" => Ok(HeadKind::None),
            other => Err(Error::Config(format!("unknown head kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub kind: HeadKind,
    pub d_in: usize,
    pub d_out: usize,
}

impl ModelShape {
    pub fn new(kind: HeadKind, d_in: usize, d_out: usize) -> Result<Self> {
        let shape = Self { kind, d_in, d_out };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            HeadKind::Quantum => HeadConfig::new(self.d_in, self.d_out).map(|_| ()),
            HeadKind::Classical if self.d_in == 0 || self.d_out == 0 => {
                Err(Error::Config("classical head dimensions must be positive".into()))
            }
            HeadKind::None if self.d_in != self.d_out => {
                Err(Error::Config("uncompressed model needs d_out == d_in".into()))
            }
            _ => Ok(()),
        }
    }

    fn head_len(&self) -> usize {
        match self.kind {
            HeadKind::Quantum => param_count(&HeadConfig {
                d_in: self.d_in,
                d_out: self.d_out,
            })
            .unwrap_or(0),
            HeadKind::Classical => classical_param_count(self.d_in, self.d_out),
            HeadKind::None => 0,
        }
    }

    pub fn num_params(&self) -> usize {
        match self.kind {
            HeadKind::Classical => self.head_len() + 1,
            _ => self.head_len() + 2,
        }
    }

    pub fn tau_index(&self) -> Option<usize> {
        match self.kind {
            HeadKind::Classical => None,
            _ => Some(self.head_len()),
        }
    }

    pub fn temperature_index(&self) -> usize {
        self.num_params() - 1
    }

    /// Typed view over a flat parameter slice.
    pub fn view<R: Real>(&self, flat: &[R]) -> Result<ModelView<R>> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let temperature = flat[self.temperature_index()];
        let head = &flat[..self.head_len()];
        Ok(match self.kind {
            HeadKind::Quantum => ModelView::Quantum {
                head: PreparedHead::new(&HeadParams::from_flat(HeadConfig::new(self.d_in, self.d_out)?, head)?),
                tau: flat[self.head_len()],
                temperature,
            },
            HeadKind::Classical => ModelView::Classical {
                head: ClassicalHeadParams::from_flat(self.d_in, self.d_out, head)?,
                temperature,
            },
            HeadKind::None => ModelView::Fidelity {
                tau: flat[0],
                temperature,
            },
        })
    }
}

/// An embedding after the model's head.
#[derive(Debug, Clone)]
pub enum Embedded<R> {
    State(SeparableState<R>),
    Vector(Vec<R>),
}

#[derive(Debug, Clone)]
pub enum ModelView<R> {
    Quantum {
        head: PreparedHead<R>,
        tau: R,
        temperature: R,
    },
    Classical {
        head: ClassicalHeadParams<R>,
        temperature: R,
    },
    Fidelity {
        tau: R,
        temperature: R,
    },
}

impl<R: Real> ModelView<R> {
    pub fn embed(&self, vec: &[f64]) -> Result<Embedded<R>> {
        if let Some(u) = vec.iter().find(|u| !u.is_finite()) {
            return Err(Error::Domain(format!("non-finite embedding component {u}")));
        }
        match self {
            ModelView::Quantum { head, tau, .. } => {
                if vec.len() != head.config().d_in {
                    return Err(Error::Dimension {
                        expected: head.config().d_in,
                        got: vec.len(),
                    });
                }
                Ok(Embedded::State(head.forward(&encode_with(vec, *tau))?))
            }
            ModelView::Classical { head, .. } => Ok(Embedded::Vector(classical_forward(vec, head)?)),
            ModelView::Fidelity { tau, .. } => {
                if vec.is_empty() {
                    return Err(Error::Domain("cannot encode an empty vector".into()));
                }
                Ok(Embedded::State(encode_with(vec, *tau)))
            }
        }
    }

    pub fn temperature(&self) -> R {
        match self {
            ModelView::Quantum { temperature, .. }
            | ModelView::Classical { temperature, .. }
            | ModelView::Fidelity { temperature, .. } => *temperature,
        }
    }

    /// Similarity before temperature scaling: log-fidelity for qubit
    /// embeddings, cosine for real ones.
    pub fn similarity(&self, a: &Embedded<R>, b: &Embedded<R>, eps: f64) -> Result<R> {
        match (a, b) {
            (Embedded::State(x), Embedded::State(y)) => log_fidelity(x, y, eps),
            (Embedded::Vector(x), Embedded::Vector(y)) => cosine_similarity(x, y),
            _ => Err(Error::Domain("cannot compare a qubit state with a real vector".into())),
        }
    }

    /// Logit = similarity / temperature.
    pub fn score(&self, a: &Embedded<R>, b: &Embedded<R>, eps: f64) -> Result<R> {
        Ok(self.similarity(a, b, eps)? / self.temperature())
    }
}

/// A model with concrete parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub shape: ModelShape,
    pub params: Vec<f64>,
    pub eps: f64,
}

impl Model {
    pub fn new(shape: ModelShape, params: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.num_params() {
            return Err(Error::Dimension {
                expected: shape.num_params(),
                got: params.len(),
            });
        }
        Ok(Self {
            shape,
            params,
            eps: EncoderConfig::default().eps,
        })
    }

    /// Seeded initial parameters, τ = 1 and the given temperature.
    pub fn init(shape: ModelShape, seed: u64, temperature: f64) -> Result<Self> {
        shape.validate()?;
        let mut params = match shape.kind {
            HeadKind::Quantum => init_params(&HeadConfig::new(shape.d_in, shape.d_out)?, seed)?.to_flat(),
            HeadKind::Classical => ClassicalHeadParams::init(shape.d_in, shape.d_out, seed)?.to_flat(),
            HeadKind::None => Vec::new(),
        };
        if shape.kind != HeadKind::Classical {
            params.push(DEFAULT_TAU);
        }
        params.push(temperature);
        Self::new(shape, params)
    }

    pub fn from_quantum(head: &HeadParams, tau: f64, temperature: f64) -> Result<Self> {
        let shape = ModelShape::new(HeadKind::Quantum, head.config.d_in, head.config.d_out)?;
        let mut params = head.to_flat();
        params.extend([tau, temperature]);
        Self::new(shape, params)
    }

    pub fn from_classical(head: &ClassicalHeadParams, temperature: f64) -> Result<Self> {
        let shape = ModelShape::new(HeadKind::Classical, head.d_in, head.d_out)?;
        let mut params = head.to_flat();
        params.push(temperature);
        Self::new(shape, params)
    }

    pub fn fidelity_only(dim: usize, tau: f64, temperature: f64) -> Result<Self> {
        Self::new(ModelShape::new(HeadKind::None, dim, dim)?, vec![tau, temperature])
    }

    pub fn view(&self) -> Result<ModelView<f64>> {
        self.shape.view(&self.params)
    }

    pub fn tau(&self) -> Option<f64> {
        self.shape.tau_index().map(|i| self.params[i])
    }

    pub fn temperature(&self) -> f64 {
        self.params[self.shape.temperature_index()]
    }

    pub fn quantum_head(&self) -> Option<HeadParams> {
        match self.shape.kind {
            HeadKind::Quantum => HeadParams::from_flat(
                HeadConfig {
                    d_in: self.shape.d_in,
                    d_out: self.shape.d_out,
                },
                &self.params[..self.shape.head_len()],
            )
            .ok(),
            _ => None,
        }
    }

    pub fn classical_head(&self) -> Option<ClassicalHeadParams> {
        match self.shape.kind {
            HeadKind::Classical => {
                ClassicalHeadParams::from_flat(self.shape.d_in, self.shape.d_out, &self.params[..self.shape.head_len()])
                    .ok()
            }
            _ => None,
        }
    }

    /// Keeps τ and the temperature at or above [`POSITIVE_FLOOR`].
    pub fn project(params: &mut [f64], shape: &ModelShape) {
        if let Some(i) = shape.tau_index() {
            params[i] = params[i].max(POSITIVE_FLOOR);
        }
        let t = shape.temperature_index();
        params[t] = params[t].max(POSITIVE_FLOOR);
    }

    /// Encoder settings used by the quantum and uncompressed kinds.
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            tau: self.tau().unwrap_or(DEFAULT_TAU),
            eps: self.eps,
        }
    }

    /// Validated single-vector encoding (before any head).
    pub fn encode_input(&self, vec: &[f64]) -> Result<SeparableState> {
        encode(vec, &self.encoder())
    }
}

/// Caches head outputs per store id while scoring with fixed parameters.
pub struct CachedScorer<'a> {
    view: ModelView<f64>,
    store: &'a EmbeddingStore,
    eps: f64,
    cache: HashMap<String, Embedded<f64>>,
}

impl<'a> CachedScorer<'a> {
    pub fn new(model: &Model, store: &'a EmbeddingStore) -> Result<Self> {
        Ok(Self {
            view: model.view()?,
            store,
            eps: model.eps,
            cache: HashMap::new(),
        })
    }

    fn embedded(&mut self, id: &str) -> Result<Embedded<f64>> {
        if let Some(e) = self.cache.get(id) {
            return Ok(e.clone());
        }
        let e = self.view.embed(self.store.require(id)?)?;
        self.cache.insert(id.to_string(), e.clone());
        Ok(e)
    }

    /// Logit of passage `b` for query `a`.
    pub fn score(&mut self, a: &str, b: &str) -> Result<f64> {
        let (ea, eb) = (self.embedded(a)?, self.embedded(b)?);
        self.view.score(&ea, &eb, self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        let q = ModelShape::new(HeadKind::Quantum, 8, 4).unwrap();
        assert_eq!(q.num_params(), 4 * 12 + 2);
        assert_eq!(q.tau_index(), Some(48));
        assert_eq!(q.temperature_index(), 49);
        let c = ModelShape::new(HeadKind::Classical, 8, 4).unwrap();
        assert_eq!(c.num_params(), 36 + 1);
        assert_eq!(c.tau_index(), None);
        let n = ModelShape::new(HeadKind::None, 8, 8).unwrap();
        assert_eq!(n.num_params(), 2);
        assert!(ModelShape::new(HeadKind::None, 8, 4).is_err());
        assert!(ModelShape::new(HeadKind::Quantum, 8, 3).is_err());
    }

    #[test]
    fn init_sets_defaults() {
        let m = Model::init(ModelShape::new(HeadKind::Quantum, 8, 2).unwrap(), 42, 0.05).unwrap();
        assert_eq!(m.tau(), Some(1.0));
        assert_eq!(m.temperature(), 0.05);
        assert_eq!(
            m.quantum_head().unwrap().to_flat(),
            init_params(&HeadConfig::new(8, 2).unwrap(), 42).unwrap().to_flat()
        );
    }

    #[test]
    fn projection_floors_positive_params() {
        let shape = ModelShape::new(HeadKind::None, 3, 3).unwrap();
        let mut p = vec![-1.0, 0.0];
        Model::project(&mut p, &shape);
        assert_eq!(p, vec![POSITIVE_FLOOR, POSITIVE_FLOOR]);
    }

    #[test]
    fn identical_inputs_score_zero_for_fidelity_models() {
        let m = Model::fidelity_only(3, 1.0, 0.05).unwrap();
        let v = m.view().unwrap();
        let e = v.embed(&[0.2, -0.7, 1.5]).unwrap();
        assert!(v.score(&e, &e, 1e-300).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_factor_hits_clamp_floor() {
        let m = Model::fidelity_only(1, 1.0, 0.5).unwrap();
        let v = m.view().unwrap();
        let a = v.embed(&[40.0]).unwrap();
        let b = v.embed(&[-40.0]).unwrap();
        let s = v.score(&a, &b, 1e-12).unwrap();
        assert!((s - (1e-12f64).ln() / 0.5).abs() < 1e-6);
    }

    #[test]
    fn derived_single_qubit_logit() {
        let t = 0.05;
        let m = Model::fidelity_only(1, 1.0, t).unwrap();
        let v = m.view().unwrap();
        let (a, b) = (v.embed(&[1.0]).unwrap(), v.embed(&[0.0]).unwrap());
        let s = v.score(&a, &b, 1e-12).unwrap();
        assert!((s - 0.682_897_576_470_633_5f64.ln() / t).abs() < 1e-9);
    }

    #[test]
    fn state_vs_vector_is_rejected() {
        let m = Model::fidelity_only(2, 1.0, 0.05).unwrap();
        let v = m.view().unwrap();
        let a = v.embed(&[0.0, 1.0]).unwrap();
        assert!(v.similarity(&a, &Embedded::Vector(vec![1.0, 0.0]), 1e-12).is_err());
    }
}
