//! Classical projection head (`tanh(W·e + b)`) and cosine similarity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalHeadParams<R = f64> {
    pub d_in: usize,
    pub d_out: usize,
    /// Row-major `d_out × d_in`.
    pub weights: Vec<R>,
    pub bias: Vec<R>,
}

pub fn classical_param_count(d_in: usize, d_out: usize) -> usize {
    d_in * d_out + d_out
}

impl<R: Copy> ClassicalHeadParams<R> {
    pub fn from_flat(d_in: usize, d_out: usize, flat: &[R]) -> Result<Self> {
        let expected = classical_param_count(d_in, d_out);
        if flat.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: flat.len(),
            });
        }
        let (w, b) = flat.split_at(d_in * d_out);
        Ok(Self {
            d_in,
            d_out,
            weights: w.to_vec(),
            bias: b.to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<R> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.weights[i * self.d_in..(i + 1) * self.d_in]
    }
}

impl ClassicalHeadParams<f64> {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            d_in,
            d_out,
            weights: vec![0.0; d_in * d_out],
            bias: vec![0.0; d_out],
        }
    }

    /// Uniform fan-in initialisation in `[−1/√d_in, 1/√d_in]`.
    pub fn init(d_in: usize, d_out: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Config("classical head dimensions must be positive".into()));
        }
        let bound = 1.0 / (d_in as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..classical_param_count(d_in, d_out))
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self::from_flat(d_in, d_out, &flat)
    }
}

pub fn classical_forward<R: Real>(e: &[f64], p: &ClassicalHeadParams<R>) -> Result<Vec<R>> {
    if e.len() != p.d_in {
        return Err(Error::Dimension {
            expected: p.d_in,
            got: e.len(),
        });
    }
    Ok((0..p.d_out)
        .map(|i| {
            let acc = p.row(i).iter().zip(e).fold(p.bias[i], |acc, (&w, &x)| acc + w * x);
            acc.tanh()
        })
        .collect())
}

pub fn cosine_similarity<R: Real>(u: &[R], v: &[R]) -> Result<R> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (first_u, first_v) = match (u.first(), v.first()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::Domain("cosine similarity of empty vectors".into())),
    };
    let mut dot = first_u * first_v;
    let mut nu = first_u * first_u;
    let mut nv = first_v * first_v;
    for (&a, &b) in u.iter().zip(v).skip(1) {
        dot = dot + a * b;
        nu = nu + a * a;
        nv = nv + b * b;
    }
    if nu.value() == 0.0 || nv.value() == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}
