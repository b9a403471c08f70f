//! Brute-force dense state-vector simulation, used as ground truth for the
//! separable fast path.
//!
//! Bit ordering: qubit 0 is the most significant bit of the basis index.
//! Two-qubit gates act on `targets = [a, b]` with `a` as the high bit of the
//! gate's local index, matching [`crate::circuit`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{controlled_matrix, zyz_matrix, Unitary2, Unitary4};
use crate::complex::Cplx;
use crate::encoding::{encode, fidelity, EncoderConfig, QubitState, SeparableState};
use crate::error::{Error, Result};
use crate::head::{head_forward_trace, schedule, HeadConfig, HeadParams, PairTrace};

pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy)]
pub enum DenseGate {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl From<&Unitary2> for DenseGate {
    fn from(u: &Unitary2) -> Self {
        DenseGate::One(u.0.map(|row| row.map(Complex64::from)))
    }
}

impl From<&Unitary4> for DenseGate {
    fn from(u: &Unitary4) -> Self {
        DenseGate::Two(u.0.map(|row| row.map(Complex64::from)))
    }
}

impl DenseState {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        if amps.len() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        self.n - 1 - qubit
    }
}

/// Kronecker product of the qubit amplitudes in qubit order.
pub fn densify(s: &SeparableState) -> Result<DenseState> {
    let n = s.len();
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n,
            max: MAX_QUBITS,
        });
    }
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for q in s.qubits() {
        let (a0, a1) = (Complex64::from(q.a0), Complex64::from(q.a1));
        amps = amps.iter().flat_map(|&x| [x * a0, x * a1]).collect();
    }
    Ok(DenseState { n, amps })
}

pub fn dense_apply(psi: &DenseState, gate: &DenseGate, targets: &[usize]) -> Result<DenseState> {
    let arity = match gate {
        DenseGate::One(_) => 1,
        DenseGate::Two(_) => 2,
    };
    if targets.len() != arity {
        return Err(Error::Domain(format!(
            "gate acts on {arity} qubits, {} targets given",
            targets.len()
        )));
    }
    if targets.iter().any(|&t| t >= psi.n) {
        return Err(Error::Domain(format!("target out of range for {} qubits", psi.n)));
    }
    if arity == 2 && targets[0] == targets[1] {
        return Err(Error::Domain("targets must be distinct".into()));
    }
    let masks: Vec<usize> = targets.iter().map(|&t| 1 << psi.bit(t)).collect();
    let all: usize = masks.iter().sum();
    let dim = 1 << arity;
    let mut out = psi.amps.clone();
    for base in 0..psi.amps.len() {
        if base & all != 0 {
            continue;
        }
        // local index bit (arity-1-k) corresponds to targets[k]
        let index = |local: usize| {
            (0..arity).fold(base, |acc, k| {
                if local >> (arity - 1 - k) & 1 == 1 {
                    acc | masks[k]
                } else {
                    acc
                }
            })
        };
        let input: Vec<Complex64> = (0..dim).map(|l| psi.amps[index(l)]).collect();
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, x) in input.iter().enumerate() {
                let m = match gate {
                    DenseGate::One(m) => m[r][c],
                    DenseGate::Two(m) => m[r][c],
                };
                acc += m * x;
            }
            out[index(r)] = acc;
        }
    }
    Ok(DenseState { n: psi.n, amps: out })
}

pub fn dense_marginal(psi: &DenseState, qubit: usize) -> Result<(f64, f64)> {
    if qubit >= psi.n {
        return Err(Error::Domain(format!(
            "qubit {qubit} out of range for {} qubits",
            psi.n
        )));
    }
    let mask = 1 << psi.bit(qubit);
    let (mut p0, mut p1) = (0.0, 0.0);
    for (i, a) in psi.amps.iter().enumerate() {
        if i & mask == 0 {
            p0 += a.norm_sqr();
        } else {
            p1 += a.norm_sqr();
        }
    }
    Ok((p0, p1))
}

pub fn dense_fidelity(psi: &DenseState, phi: &DenseState) -> Result<f64> {
    if psi.n != phi.n {
        return Err(Error::Dimension {
            expected: psi.n,
            got: phi.n,
        });
    }
    let inner: Complex64 = psi.amps.iter().zip(&phi.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(inner.norm_sqr())
}

/// Runs a head on the dense state: each layer is densified, all of its gates
/// are applied to the full register, the target marginals are read off, and
/// the survivors are re-encoded for the next layer. Returns per-layer
/// probabilities in the same shape as [`crate::head::head_forward_trace`].
pub fn dense_head_trace(state: &SeparableState, params: &HeadParams) -> Result<PairTrace> {
    let plan = schedule(&params.config)?;
    if state.len() != params.config.d_in {
        return Err(Error::Dimension {
            expected: params.config.d_in,
            got: state.len(),
        });
    }
    let mut current: Vec<QubitState> = state.qubits().to_vec();
    let mut trace = Vec::with_capacity(plan.len());
    for (layer, gates) in plan.iter().zip(&params.layers) {
        let mut psi = densify(&SeparableState::new(current.clone())?)?;
        for (&(c, t), p) in layer.pairs.iter().zip(gates) {
            psi = dense_apply(&psi, &DenseGate::from(&zyz_matrix(&p.u_ctrl)), &[c])?;
            psi = dense_apply(&psi, &DenseGate::from(&zyz_matrix(&p.u_tgt)), &[t])?;
            psi = dense_apply(&psi, &DenseGate::from(&controlled_matrix(&p.v_controlled)), &[c, t])?;
        }
        let mut probs = Vec::with_capacity(layer.pairs.len());
        for &(c, t) in &layer.pairs {
            let (p0, p1) = dense_marginal(&psi, t)?;
            current[c] = QubitState {
                a0: Cplx::new(p0.sqrt(), 0.0),
                a1: Cplx::new(p1.sqrt(), 0.0),
            };
            probs.push((p0, p1));
        }
        current.truncate(layer.width - params.config.d_out);
        trace.push(probs);
    }
    Ok(trace)
}

/// Largest deviations seen by [`oracle_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub trials: usize,
    pub fidelity_dev: f64,
    pub marginal_dev: f64,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        self.fidelity_dev.max(self.marginal_dev)
    }
}

/// Compares the separable fast path with the dense simulation on `trials`
/// seeded draws of `n`-qubit inputs and head parameters. Each draw picks an
/// output width among the divisors `d` of `n` with `n / d >= 2`.
pub fn oracle_check(n: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::Domain(format!(
            "oracle check needs 2 <= n <= {MAX_QUBITS}, got {n}"
        )));
    }
    let widths: Vec<usize> = (1..=n / 2).filter(|&d| n.is_multiple_of(d)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        fidelity_dev: 0.0,
        marginal_dev: 0.0,
    };
    for _ in 0..trials {
        let enc = EncoderConfig::new(rng.random_range(0.2..3.0), crate::encoding::DEFAULT_EPS)?;
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (su, sv) = (encode(&u, &enc)?, encode(&v, &enc)?);
        let dense = dense_fidelity(&densify(&su)?, &densify(&sv)?)?;
        report.fidelity_dev = report.fidelity_dev.max((fidelity(&su, &sv)? - dense).abs());

        let d_out = widths[rng.random_range(0..widths.len())];
        let config = HeadConfig::new(n, d_out)?;
        let flat: Vec<f64> = (0..crate::head::param_count(&config)?)
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let params = HeadParams::from_flat(config, &flat)?;
        let (_, fast) = head_forward_trace(&su, &params)?;
        let slow = dense_head_trace(&su, &params)?;
        for (lf, ls) in fast.iter().zip(&slow) {
            for (&(a0, a1), &(b0, b1)) in lf.iter().zip(ls) {
                report.marginal_dev = report.marginal_dev.max((a0 - b0).abs()).max((a1 - b1).abs());
            }
        }
    }
    Ok(report)
}
