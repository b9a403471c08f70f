//! Bloch-sphere encoding of real vectors as fully separable qubit states, and
//! the product-form fidelity between such states.
//!
//! A real component `u` maps to the polar angle
//! `θ = tanh(τ·u)·π/2 + π/2` with fixed phase `φ = π`, giving the qubit
//! `cos(θ/2)|0⟩ − sin(θ/2)|1⟩`. Fidelity of two product states is the product
//! of the per-qubit overlaps, so it costs `O(n)` instead of `O(2^n)`.

use std::f64::consts::FRAC_PI_2;

use crate::autodiff::Real;
use crate::complex::Cplx;
use crate::error::{Error, Result};

/// Default clamp added inside the logarithm of each overlap factor.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Tolerance used when validating unit norm.
pub const NORM_TOL: f64 = 1e-12;

/// Single-qubit pure state `a0|0⟩ + a1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState<R = f64> {
    pub a0: Cplx<R>,
    pub a1: Cplx<R>,
}

impl QubitState<f64> {
    /// Validated constructor; amplitudes must have unit norm within 1e-12.
    pub fn new(a0: Cplx<f64>, a1: Cplx<f64>) -> Result<Self> {
        let q = Self { a0, a1 };
        let n = q.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("qubit norm² {n} is not 1")));
        }
        Ok(q)
    }

    pub fn from_real(a0: f64, a1: f64) -> Result<Self> {
        Self::new(Cplx::new(a0, 0.0), Cplx::new(a1, 0.0))
    }

    pub fn zero() -> Self {
        Self {
            a0: Cplx::ONE,
            a1: Cplx::ZERO,
        }
    }

    pub fn one() -> Self {
        Self {
            a0: Cplx::ZERO,
            a1: Cplx::ONE,
        }
    }

    /// Polar angle `θ ∈ [0, π]` of the Bloch vector.
    pub fn polar_angle(&self) -> f64 {
        2.0 * self.a1.norm_sqr().sqrt().atan2(self.a0.norm_sqr().sqrt())
    }
}

impl<R: Real> QubitState<R> {
    pub fn norm_sqr(&self) -> R {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn value(&self) -> QubitState<f64> {
        QubitState {
            a0: self.a0.value(),
            a1: self.a1.value(),
        }
    }
}

/// Ordered tensor product of single-qubit states.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableState<R = f64> {
    qubits: Vec<QubitState<R>>,
}

impl<R: Real> SeparableState<R> {
    pub(crate) fn from_qubits_unchecked(qubits: Vec<QubitState<R>>) -> Self {
        Self { qubits }
    }

    pub fn qubits(&self) -> &[QubitState<R>] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn into_qubits(self) -> Vec<QubitState<R>> {
        self.qubits
    }

    pub fn value(&self) -> SeparableState<f64> {
        SeparableState {
            qubits: self.qubits.iter().map(QubitState::value).collect(),
        }
    }
}

impl SeparableState<f64> {
    /// Builds a state from validated qubits; rejects an empty list.
    pub fn new(qubits: Vec<QubitState<f64>>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Domain("separable state needs at least one qubit".into()));
        }
        for q in &qubits {
            QubitState::new(q.a0, q.a1)?;
        }
        Ok(Self { qubits })
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        Self { qubits }
    }

    pub fn polar_angles(&self) -> Vec<f64> {
        self.qubits.iter().map(QubitState::polar_angle).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub tau: f64,
    pub eps: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            eps: DEFAULT_EPS,
        }
    }
}

impl EncoderConfig {
    pub fn new(tau: f64, eps: f64) -> Result<Self> {
        let cfg = Self { tau, eps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eps > 0.0 && self.eps <= 1e-6) {
            return Err(Error::Config(format!("eps must lie in (0, 1e-6], got {}", self.eps)));
        }
        Ok(())
    }
}

/// Polar angle for one component.
pub fn polar_angle<R: Real>(u: f64, tau: R) -> R {
    (tau * u).tanh() * FRAC_PI_2 + FRAC_PI_2
}

pub(crate) fn encode_component_with<R: Real>(u: f64, tau: R) -> QubitState<R> {
    let half = polar_angle(u, tau) * 0.5;
    let zero = tau.constant(0.0);
    // e^{iπ} is taken as exactly −1
    QubitState {
        a0: Cplx::new(half.cos(), zero),
        a1: Cplx::new(-half.sin(), zero),
    }
}

pub(crate) fn encode_with<R: Real>(vec: &[f64], tau: R) -> SeparableState<R> {
    SeparableState {
        qubits: vec.iter().map(|&u| encode_component_with(u, tau)).collect(),
    }
}

/// Encoding that is differentiable in the input components rather than in
/// τ. Inputs are assumed finite.
pub fn encode_input_generic<R: Real>(vec: &[R], tau: f64) -> SeparableState<R> {
    SeparableState {
        qubits: vec
            .iter()
            .map(|&u| {
                let half = ((u * tau).tanh() * FRAC_PI_2 + FRAC_PI_2) * 0.5;
                let zero = u.constant(0.0);
                QubitState {
                    a0: Cplx::new(half.cos(), zero),
                    a1: Cplx::new(-half.sin(), zero),
                }
            })
            .collect(),
    }
}

pub fn encode_component(u: f64, cfg: &EncoderConfig) -> Result<QubitState> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("cannot encode non-finite value {u}")));
    }
    Ok(encode_component_with(u, cfg.tau))
}

pub fn encode(vec: &[f64], cfg: &EncoderConfig) -> Result<SeparableState> {
    if vec.is_empty() {
        return Err(Error::Domain("cannot encode an empty vector".into()));
    }
    if let Some(u) = vec.iter().find(|u| !u.is_finite()) {
        return Err(Error::Domain(format!("cannot encode non-finite value {u}")));
    }
    Ok(encode_with(vec, cfg.tau))
}

/// `|⟨q1|q2⟩|²`.
pub fn qubit_overlap<R: Real>(q1: &QubitState<R>, q2: &QubitState<R>) -> R {
    (q1.a0.conj() * q2.a0 + q1.a1.conj() * q2.a1).norm_sqr()
}

fn check_lengths<R: Real>(s1: &SeparableState<R>, s2: &SeparableState<R>) -> Result<()> {
    if s1.len() != s2.len() {
        return Err(Error::Dimension {
            expected: s1.len(),
            got: s2.len(),
        });
    }
    Ok(())
}

/// Product of per-qubit overlaps.
pub fn fidelity<R: Real>(s1: &SeparableState<R>, s2: &SeparableState<R>) -> Result<R> {
    check_lengths(s1, s2)?;
    let mut it = s1.qubits.iter().zip(&s2.qubits).map(|(a, b)| qubit_overlap(a, b));
    let first = it.next().ok_or_else(|| Error::Domain("empty state".into()))?;
    Ok(it.fold(first, |acc, f| acc * f))
}

/// `Σ ln(overlap_i + eps)`, the underflow-free, order-equivalent form of
/// [`fidelity`].
pub fn log_fidelity<R: Real>(s1: &SeparableState<R>, s2: &SeparableState<R>, eps: f64) -> Result<R> {
    check_lengths(s1, s2)?;
    let mut it = s1
        .qubits
        .iter()
        .zip(&s2.qubits)
        .map(|(a, b)| (qubit_overlap(a, b) + eps).ln());
    let first = it.next().ok_or_else(|| Error::Domain("empty state".into()))?;
    Ok(it.fold(first, |acc, f| acc + f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    // Independent evaluation of the encoding map, written out term by term.
    fn oracle_amplitudes(u: f64) -> (f64, f64) {
        let theta = u.tanh() * PI / 2.0 + PI / 2.0;
        let phase = num_complex::Complex64::from_polar(1.0, PI);
        let a1 = phase * (theta / 2.0).sin();
        ((theta / 2.0).cos(), a1.re)
    }

    const ENC1: (f64, f64) = (0.186_151_298_073_119_3, -0.982_521_090_982_627_5);
    const OVERLAP_1_0: f64 = 0.682_897_576_470_633_5;

    #[test]
    fn frozen_oracle_values() {
        let (a0, a1) = oracle_amplitudes(1.0);
        assert!((a0 - ENC1.0).abs() < 1e-15);
        assert!((a1 - ENC1.1).abs() < 1e-15);
        let (b0, b1) = oracle_amplitudes(0.0);
        assert!(((a0 * b0 + a1 * b1).powi(2) - OVERLAP_1_0).abs() < 1e-15);
    }

    #[test]
    fn encode_component_examples() {
        let cfg = EncoderConfig::default();
        let q = encode_component(0.0, &cfg).unwrap();
        assert!((q.a0.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((q.a1.re + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((polar_angle(0.0, 1.0) - PI / 2.0).abs() < 1e-15);

        let q = encode_component(1.0, &cfg).unwrap();
        assert!((polar_angle(1.0, 1.0) - 2.767_105_629_478_672).abs() < 1e-12);
        assert!((q.a0.re - ENC1.0).abs() < 1e-12);
        assert!((q.a1.re - ENC1.1).abs() < 1e-12);
        assert_eq!(q.a0.im, 0.0);
        assert_eq!(q.a1.im, 0.0);

        // tanh saturates to 1 in double precision
        let q = encode_component(40.0, &cfg).unwrap();
        assert!(q.a0.re.abs() < 1e-12);
        assert!((q.a1.re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_rejects_bad_input() {
        let cfg = EncoderConfig::default();
        assert!(matches!(encode_component(f64::NAN, &cfg), Err(Error::Domain(_))));
        assert!(matches!(encode(&[1.0, f64::INFINITY], &cfg), Err(Error::Domain(_))));
        assert!(matches!(encode(&[], &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::new(1.0, 1e-12).is_ok());
        assert!(EncoderConfig::new(0.0, 1e-12).is_err());
        assert!(EncoderConfig::new(1.0, 0.0).is_err());
        assert!(EncoderConfig::new(1.0, 1e-5).is_err());
    }

    #[test]
    fn encode_examples() {
        let cfg = EncoderConfig::default();
        let s = encode(&[0.0, 0.0], &cfg).unwrap();
        assert_eq!(s.len(), 2);
        for q in s.qubits() {
            assert!((q.a0.re - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((q.a1.re + FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let s = encode(&[1.0], &cfg).unwrap();
        assert!((s.qubits()[0].a0.re - ENC1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let cfg = EncoderConfig::default();
        let q0 = encode_component(0.0, &cfg).unwrap();
        let q1 = encode_component(1.0, &cfg).unwrap();
        assert!((qubit_overlap(&q1, &q1) - 1.0).abs() < 1e-15);
        assert_eq!(
            qubit_overlap(&QubitState::zero(), &QubitState::from_real(0.0, -1.0).unwrap()),
            0.0
        );
        assert!((qubit_overlap(&q1, &q0) - OVERLAP_1_0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let cfg = EncoderConfig::default();
        let a = encode(&[1.0, 1.0], &cfg).unwrap();
        let b = encode(&[0.0, 0.0], &cfg).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&a, &b).unwrap() - OVERLAP_1_0 * OVERLAP_1_0).abs() < 1e-12);
        assert!((fidelity(&a, &b).unwrap() - 0.466_349).abs() < 1e-6);

        let ortho1 = SeparableState::new(vec![q_of(0.3), QubitState::zero()]).unwrap();
        let ortho2 = SeparableState::new(vec![q_of(0.3), QubitState::one()]).unwrap();
        assert_eq!(fidelity(&ortho1, &ortho2).unwrap(), 0.0);

        let c = encode(&[1.0], &cfg).unwrap();
        assert!(matches!(
            fidelity(&a, &c),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
    }

    fn q_of(u: f64) -> QubitState {
        encode_component(u, &EncoderConfig::default()).unwrap()
    }

    #[test]
    fn log_fidelity_examples() {
        let cfg = EncoderConfig::default();
        let a = encode(&[1.0], &cfg).unwrap();
        let b = encode(&[0.0], &cfg).unwrap();
        assert!(log_fidelity(&a, &a, 1e-300).unwrap().abs() < 1e-15);
        let lf = log_fidelity(&a, &b, 1e-12).unwrap();
        assert!((lf - OVERLAP_1_0.ln()).abs() < 1e-11);
        assert!((lf + 0.381_410).abs() < 1e-6);

        let c = encode(&[0.4, -2.0], &cfg).unwrap();
        let d = encode(&[-0.1, 0.9], &cfg).unwrap();
        let joined = log_fidelity(&a.tensor(&c), &b.tensor(&d), 1e-12).unwrap();
        let parts = log_fidelity(&a, &b, 1e-12).unwrap() + log_fidelity(&c, &d, 1e-12).unwrap();
        assert!((joined - parts).abs() < 1e-14);

        assert!(matches!(log_fidelity(&a, &c, 1e-12), Err(Error::Dimension { .. })));
    }

    #[test]
    fn overlap_is_monotone_in_angle_gap() {
        let base = QubitState::from_real((0.3f64).cos(), -(0.3f64).sin()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=200 {
            let gap = PI * k as f64 / 200.0;
            let theta = 0.6 + gap;
            let other = QubitState::from_real((theta / 2.0).cos(), -(theta / 2.0).sin()).unwrap();
            let f = qubit_overlap(&base, &other);
            assert!(f < prev, "not strictly decreasing at gap {gap}");
            prev = f;
        }
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..24).prop_flat_map(|n| {
            (
                prop::collection::vec(-4.0f64..4.0, n),
                prop::collection::vec(-4.0f64..4.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn fidelity_bounds_and_symmetry((u, v) in vec_pair(), tau in 0.1f64..3.0) {
            let cfg = EncoderConfig::new(tau, 1e-12).unwrap();
            let su = encode(&u, &cfg).unwrap();
            let sv = encode(&v, &cfg).unwrap();
            let f = fidelity(&su, &sv).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            prop_assert!((f - fidelity(&sv, &su).unwrap()).abs() < 1e-15);
            prop_assert!((fidelity(&su, &su).unwrap() - 1.0).abs() < 1e-12);
            for q in su.qubits() {
                prop_assert!((q.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn overlap_is_cos_squared_of_half_gap(u in -5.0f64..5.0, v in -5.0f64..5.0) {
            let cfg = EncoderConfig::default();
            let qu = encode_component(u, &cfg).unwrap();
            let qv = encode_component(v, &cfg).unwrap();
            let gap = polar_angle(u, 1.0) - polar_angle(v, 1.0);
            prop_assert!((qubit_overlap(&qu, &qv) - (gap / 2.0).cos().powi(2)).abs() < 1e-12);
        }

        #[test]
        fn log_fidelity_preserves_order(
            a in prop::collection::vec(-1.0f64..1.0, 6),
            b in prop::collection::vec(-1.0f64..1.0, 6),
            c in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let cfg = EncoderConfig::default();
            let (sa, sb, sc) = (encode(&a, &cfg).unwrap(), encode(&b, &cfg).unwrap(), encode(&c, &cfg).unwrap());
            let (fab, fac) = (fidelity(&sa, &sb).unwrap(), fidelity(&sa, &sc).unwrap());
            let (lab, lac) = (log_fidelity(&sa, &sb, cfg.eps).unwrap(), log_fidelity(&sa, &sc, cfg.eps).unwrap());
            prop_assume!((fab - fac).abs() > 1e-12);
            prop_assert_eq!(fab < fac, lab < lac);
        }

        #[test]
        fn log_fidelity_upper_bound((u, v) in vec_pair()) {
            let cfg = EncoderConfig::default();
            let lf = log_fidelity(&encode(&u, &cfg).unwrap(), &encode(&v, &cfg).unwrap(), cfg.eps).unwrap();
            prop_assert!(lf <= u.len() as f64 * (1.0 + cfg.eps).ln() + 1e-15);
        }
    }
}
