//! Layered compression head mapping a `d_in`-qubit separable state to a
//! `d_out`-qubit one.
//!
//! The head runs `d_in/d_out − 1` layers. At a layer of current width `w`,
//! the block of qubits `[w − 2·d_out, w − d_out)` acts as controls and the
//! last block `[w − d_out, w)` as targets, paired elementwise. Each pair's
//! compressed qubit overwrites the control position and the width shrinks by
//! `d_out`. The output is the first `d_out` qubits.
//!
//! Indices in this module are zero-based.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Real;
use crate::circuit::{pair_compress_prepared, PairCompressorParams, PreparedPair, PAIR_PARAM_COUNT};
use crate::encoding::{QubitState, SeparableState};
use crate::error::{Error, Result};

/// Half-width of the uniform initialisation interval.
pub const INIT_HALF_WIDTH: f64 = PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadConfig {
    pub d_in: usize,
    pub d_out: usize,
}

impl HeadConfig {
    pub fn new(d_in: usize, d_out: usize) -> Result<Self> {
        let cfg = Self { d_in, d_out };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_out == 0 || self.d_out >= self.d_in {
            return Err(Error::Config(format!(
                "need 0 < d_out < d_in, got d_in={} d_out={}",
                self.d_in, self.d_out
            )));
        }
        if !self.d_in.is_multiple_of(self.d_out) {
            return Err(Error::Config(format!(
                "d_out={} does not divide d_in={}",
                self.d_out, self.d_in
            )));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.d_in / self.d_out - 1
    }
}

/// One layer of the pairing plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// Width of the state entering this layer.
    pub width: usize,
    /// `(control, target)` qubit indices, `d_out` of them.
    pub pairs: Vec<(usize, usize)>,
}

pub fn schedule(cfg: &HeadConfig) -> Result<Vec<Layer>> {
    cfg.validate()?;
    let d = cfg.d_out;
    Ok((0..cfg.num_layers())
        .map(|l| {
            let width = cfg.d_in - l * d;
            let pairs = (0..d).map(|k| (width - 2 * d + k, width - d + k)).collect();
            Layer { width, pairs }
        })
        .collect())
}

pub fn param_count(cfg: &HeadConfig) -> Result<usize> {
    cfg.validate()?;
    Ok(cfg.num_layers() * cfg.d_out * PAIR_PARAM_COUNT)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<R = f64> {
    pub config: HeadConfig,
    /// Application order; each layer holds `d_out` compressors.
    pub layers: Vec<Vec<PairCompressorParams<R>>>,
}

impl<R: Copy> HeadParams<R> {
    /// Rebuilds parameters from the flat layout produced by [`HeadParams::to_flat`].
    pub fn from_flat(config: HeadConfig, flat: &[R]) -> Result<Self> {
        let expected = param_count(&config)?;
        if flat.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: flat.len(),
            });
        }
        let per_layer = config.d_out * PAIR_PARAM_COUNT;
        let layers = flat
            .chunks(per_layer)
            .map(|layer| {
                layer
                    .chunks(PAIR_PARAM_COUNT)
                    .map(PairCompressorParams::from_slice)
                    .collect()
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn to_flat(&self) -> Vec<R> {
        self.layers
            .iter()
            .flat_map(|layer| layer.iter().flat_map(|p| p.to_array()))
            .collect()
    }
}

impl HeadParams<f64> {
    pub fn identity(config: HeadConfig) -> Result<Self> {
        Self::filled(config, PairCompressorParams::IDENTITY)
    }

    pub fn filled(config: HeadConfig, p: PairCompressorParams) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            layers: vec![vec![p; config.d_out]; config.num_layers()],
        })
    }
}

/// Angles drawn uniformly from `[−π/8, π/8]`, deterministic in `seed`.
pub fn init_params(cfg: &HeadConfig, seed: u64) -> Result<HeadParams> {
    let n = param_count(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-INIT_HALF_WIDTH..=INIT_HALF_WIDTH))
        .collect();
    HeadParams::from_flat(*cfg, &flat)
}

/// Gate matrices for every compressor of a head.
#[derive(Debug, Clone)]
pub struct PreparedHead<R> {
    config: HeadConfig,
    layers: Vec<Vec<PreparedPair<R>>>,
}

impl<R: Real> PreparedHead<R> {
    pub fn new(params: &HeadParams<R>) -> Self {
        Self {
            config: params.config,
            layers: params
                .layers
                .iter()
                .map(|l| l.iter().map(PreparedPair::new).collect())
                .collect(),
        }
    }

    pub fn config(&self) -> HeadConfig {
        self.config
    }

    fn run(&self, input: &[QubitState<R>], mut trace: Option<&mut Vec<Vec<(R, R)>>>) -> Vec<QubitState<R>> {
        let d = self.config.d_out;
        let mut state = input.to_vec();
        for layer in &self.layers {
            let w = state.len();
            let mut probs = Vec::with_capacity(d);
            for (k, prep) in layer.iter().enumerate() {
                let (c, t) = (w - 2 * d + k, w - d + k);
                let out = pair_compress_prepared(&state[c], &state[t], prep);
                state[c] = out.qubit;
                probs.push((out.p0, out.p1));
            }
            state.truncate(w - d);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(probs);
            }
        }
        state
    }

    pub fn forward(&self, state: &SeparableState<R>) -> Result<SeparableState<R>> {
        if state.len() != self.config.d_in {
            return Err(Error::Dimension {
                expected: self.config.d_in,
                got: state.len(),
            });
        }
        Ok(SeparableState::from_qubits_unchecked(self.run(state.qubits(), None)))
    }
}

pub fn head_forward(state: &SeparableState, params: &HeadParams) -> Result<SeparableState> {
    PreparedHead::new(params).forward(state)
}

/// Measurement probabilities `(p0, p1)` of every pair, layer by layer.
pub type PairTrace = Vec<Vec<(f64, f64)>>;

/// The final state together with its [`PairTrace`].
pub fn head_forward_trace(state: &SeparableState, params: &HeadParams) -> Result<(SeparableState, PairTrace)> {
    let prep = PreparedHead::new(params);
    if state.len() != params.config.d_in {
        return Err(Error::Dimension {
            expected: params.config.d_in,
            got: state.len(),
        });
    }
    let mut trace = Vec::new();
    let out = prep.run(state.qubits(), Some(&mut trace));
    Ok((SeparableState::from_qubits_unchecked(out), trace))
}
