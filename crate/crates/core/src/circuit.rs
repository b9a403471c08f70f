//! ZYZ single-qubit unitaries, controlled two-qubit unitaries and the
//! pair-compression primitive.
//!
//! Two-qubit amplitudes are ordered `|control, target⟩`, with the target as
//! the low-order bit: index `2·c + t`.

use crate::autodiff::Real;
use crate::complex::Cplx;
use crate::encoding::QubitState;

pub type Mat2<R> = [[Cplx<R>; 2]; 2];

/// Angles of `e^{iα}·R_Z(β)·R_Y(γ)·R_Z(δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams<R = f64> {
    pub alpha: R,
    pub beta: R,
    pub gamma: R,
    pub delta: R,
}

impl GateParams<f64> {
    pub const IDENTITY: Self = Self {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
        delta: 0.0,
    };

    /// One exact ZYZ solution for Pauli-X.
    pub const PAULI_X: Self = Self {
        alpha: std::f64::consts::FRAC_PI_2,
        beta: 0.0,
        gamma: std::f64::consts::PI,
        delta: std::f64::consts::PI,
    };

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            delta: a[3],
        }
    }
}

impl<R: Copy> GateParams<R> {
    pub fn to_array(&self) -> [R; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn from_slice(s: &[R]) -> Self {
        Self {
            alpha: s[0],
            beta: s[1],
            gamma: s[2],
            delta: s[3],
        }
    }
}

/// Parameters of one pair compressor: a gate on the control, a gate on the
/// target, and the controlled gate `V`. Twelve reals in total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCompressorParams<R = f64> {
    pub u_ctrl: GateParams<R>,
    pub u_tgt: GateParams<R>,
    pub v_controlled: GateParams<R>,
}

pub const PAIR_PARAM_COUNT: usize = 12;

impl PairCompressorParams<f64> {
    pub const IDENTITY: Self = Self {
        u_ctrl: GateParams::IDENTITY,
        u_tgt: GateParams::IDENTITY,
        v_controlled: GateParams::IDENTITY,
    };

    pub const CNOT: Self = Self {
        u_ctrl: GateParams::IDENTITY,
        u_tgt: GateParams::IDENTITY,
        v_controlled: GateParams::PAULI_X,
    };
}

impl<R: Copy> PairCompressorParams<R> {
    /// Layout: `u_ctrl`, `u_tgt`, `v_controlled`, each as `(α, β, γ, δ)`.
    pub fn from_slice(s: &[R]) -> Self {
        Self {
            u_ctrl: GateParams::from_slice(&s[0..4]),
            u_tgt: GateParams::from_slice(&s[4..8]),
            v_controlled: GateParams::from_slice(&s[8..12]),
        }
    }

    pub fn to_array(&self) -> [R; PAIR_PARAM_COUNT] {
        let mut out = [self.u_ctrl.alpha; PAIR_PARAM_COUNT];
        out[0..4].copy_from_slice(&self.u_ctrl.to_array());
        out[4..8].copy_from_slice(&self.u_tgt.to_array());
        out[8..12].copy_from_slice(&self.v_controlled.to_array());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(pub Mat2<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary4(pub [[Cplx<f64>; 4]; 4]);

fn unitarity_error<const N: usize>(m: &[[Cplx<f64>; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let mut acc = Cplx::ZERO;
            for row in m {
                acc = acc + row[i].conj() * row[j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc.re - target).abs()).max(acc.im.abs());
        }
    }
    worst
}

impl Unitary2 {
    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.0)
    }
}

impl Unitary4 {
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.0)
    }
}

/// Closed-form entries of `e^{iα} R_Z(β) R_Y(γ) R_Z(δ)`.
pub(crate) fn zyz_elements<R: Real>(p: &GateParams<R>) -> Mat2<R> {
    let c = (p.gamma * 0.5).cos();
    let s = (p.gamma * 0.5).sin();
    let sum = (p.beta + p.delta) * 0.5;
    let diff = (p.beta - p.delta) * 0.5;
    [
        [Cplx::expi(p.alpha - sum).scale(c), Cplx::expi(p.alpha - diff).scale(-s)],
        [Cplx::expi(p.alpha + diff).scale(s), Cplx::expi(p.alpha + sum).scale(c)],
    ]
}

pub fn zyz_matrix(p: &GateParams) -> Unitary2 {
    Unitary2(zyz_elements(p))
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ V`, with `V = zyz_matrix(p)`.
pub fn controlled_matrix(p: &GateParams) -> Unitary4 {
    let v = zyz_elements(p);
    let mut m = [[Cplx::ZERO; 4]; 4];
    m[0][0] = Cplx::ONE;
    m[1][1] = Cplx::ONE;
    for r in 0..2 {
        for c in 0..2 {
            m[2 + r][2 + c] = v[r][c];
        }
    }
    Unitary4(m)
}

fn apply<R: Real>(m: &Mat2<R>, q: &QubitState<R>) -> [Cplx<R>; 2] {
    [m[0][0] * q.a0 + m[0][1] * q.a1, m[1][0] * q.a0 + m[1][1] * q.a1]
}

/// Gate matrices of one pair compressor, built once and reused across
/// samples.
#[derive(Debug, Clone, Copy)]
pub struct PreparedPair<R> {
    u_ctrl: Mat2<R>,
    u_tgt: Mat2<R>,
    v: Mat2<R>,
}

impl<R: Real> PreparedPair<R> {
    pub fn new(p: &PairCompressorParams<R>) -> Self {
        Self {
            u_ctrl: zyz_elements(&p.u_ctrl),
            u_tgt: zyz_elements(&p.u_tgt),
            v: zyz_elements(&p.v_controlled),
        }
    }
}

/// Result of compressing one (control, target) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOutcome<R = f64> {
    /// Re-initialised qubit `(√p0, √p1)`.
    pub qubit: QubitState<R>,
    pub p0: R,
    pub p1: R,
}

pub(crate) fn pair_compress_prepared<R: Real>(
    qi: &QubitState<R>,
    qj: &QubitState<R>,
    prep: &PreparedPair<R>,
) -> PairOutcome<R> {
    let a = apply(&prep.u_ctrl, qi);
    let b = apply(&prep.u_tgt, qj);
    // control-on block: a1 · V·b
    let vb = [
        prep.v[0][0] * b[0] + prep.v[0][1] * b[1],
        prep.v[1][0] * b[0] + prep.v[1][1] * b[1],
    ];
    let pa0 = a[0].norm_sqr();
    let pa1 = a[1].norm_sqr();
    let p0 = pa0 * b[0].norm_sqr() + pa1 * vb[0].norm_sqr();
    let p1 = pa0 * b[1].norm_sqr() + pa1 * vb[1].norm_sqr();
    let qubit = QubitState {
        a0: Cplx::real(p0.sqrt()),
        a1: Cplx::real(p1.sqrt()),
    };
    PairOutcome { qubit, p0, p1 }
}

/// Entangles `qi` (control) with `qj` (target), takes the target's
/// computational-basis marginal and re-encodes it as `(√p0, √p1)`. The
/// control qubit is discarded.
pub fn pair_compress(qi: &QubitState, qj: &QubitState, p: &PairCompressorParams) -> PairOutcome {
    pair_compress_prepared(qi, qj, &PreparedPair::new(p))
}

/// Full pre-measurement two-qubit state `CU · (U_c qi ⊗ U_t qj)`.
pub fn pair_state(qi: &QubitState, qj: &QubitState, p: &PairCompressorParams) -> [Cplx<f64>; 4] {
    let prep = PreparedPair::new(p);
    let a = apply(&prep.u_ctrl, qi);
    let b = apply(&prep.u_tgt, qj);
    let cu = controlled_matrix(&p.v_controlled).0;
    let prod = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut out = [Cplx::ZERO; 4];
    for (r, o) in out.iter_mut().enumerate() {
        for (c, x) in prod.iter().enumerate() {
            *o = *o + cu[r][c] * *x;
        }
    }
    out
}
