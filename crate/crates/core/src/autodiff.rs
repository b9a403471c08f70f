//! Reverse-mode automatic differentiation on a flat scalar tape.
//!
//! Every forward computation in this crate is written once, generically over
//! [`Real`]. Running it on `f64` gives plain values; running it on [`Var`]
//! records a tape that [`backward`] sweeps in reverse to obtain exact
//! gradients. Complex quantities are carried as `(re, im)` pairs of reals, so
//! no holomorphicity is ever assumed.
//!
//! ```
//! use qproj::autodiff::{Tape, Real};
//!
//! let tape = Tape::new();
//! let x = tape.input(3.0);
//! let y = x * x + x.sin();
//! let grads = tape.gradient(y).unwrap();
//! assert!((grads[x.index()] - (6.0 + 3.0f64.cos())).abs() < 1e-12);
//! ```

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Lower bound applied to the argument when differentiating `sqrt`, so the
/// derivative stays finite at zero.
pub const SQRT_GRAD_FLOOR: f64 = 1e-12;

/// Scalar type the forward pipeline is generic over.
pub trait Real:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    /// A constant living in the same evaluation context as `self`.
    fn constant(self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    /// Square root. On a tape the derivative uses `max(x, SQRT_GRAD_FLOOR)`.
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn constant(self, c: f64) -> Self {
        c
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Operation that produced a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Input,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddConst,
    MulConst,
    Sin,
    Cos,
    Tanh,
    Exp,
    Ln,
    Sqrt,
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    op: Op,
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Append-only record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers an independent variable.
    pub fn input(&self, value: f64) -> Var<'_> {
        self.push(value, Op::Input, [NO_PARENT; 2], [0.0; 2])
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, Op::Const, [NO_PARENT; 2], [0.0; 2])
    }

    fn push(&self, value: f64, op: Op, parents: [u32; 2], partials: [f64; 2]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node {
            value,
            op,
            parents,
            partials,
        });
        Var { tape: self, idx }
    }

    fn unary(&self, x: Var<'_>, value: f64, op: Op, d: f64) -> Var<'_> {
        self.push(value, op, [x.idx, NO_PARENT], [d, 0.0])
    }

    fn binary(&self, x: Var<'_>, y: Var<'_>, value: f64, op: Op, dx: f64, dy: f64) -> Var<'_> {
        self.push(value, op, [x.idx, y.idx], [dx, dy])
    }

    /// Adjoints of every node with respect to `output`, indexed by
    /// [`Var::index`].
    pub fn gradient(&self, output: Var<'_>) -> Result<Vec<f64>> {
        let nodes = self.nodes.borrow();
        if let Some((node, n)) = nodes.iter().enumerate().find(|(_, n)| !n.value.is_finite()) {
            return Err(Error::NonFinite { op: n.op, node });
        }
        let out = output.idx as usize;
        let mut adj = vec![0.0; nodes.len()];
        adj[out] = 1.0;
        for i in (0..=out).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..2 {
                let p = node.parents[k];
                if p == NO_PARENT {
                    break;
                }
                let contrib = a * node.partials[k];
                if !contrib.is_finite() {
                    return Err(Error::NonFinite { op: node.op, node: i });
                }
                adj[p as usize] += contrib;
            }
        }
        Ok(adj)
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.val())
    }
}

impl<'t> Var<'t> {
    pub fn index(self) -> usize {
        self.idx as usize
    }

    fn val(self) -> f64 {
        self.tape.nodes.borrow()[self.idx as usize].value
    }
}

impl Add for Var<'_> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let v = self.val() + rhs.val();
        self.tape.binary(self, rhs, v, Op::Add, 1.0, 1.0)
    }
}

impl Sub for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let v = self.val() - rhs.val();
        self.tape.binary(self, rhs, v, Op::Sub, 1.0, -1.0)
    }
}

impl Mul for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.val(), rhs.val());
        self.tape.binary(self, rhs, a * b, Op::Mul, b, a)
    }
}

impl Div for Var<'_> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let (a, b) = (self.val(), rhs.val());
        let q = a / b;
        self.tape.binary(self, rhs, q, Op::Div, 1.0 / b, -q / b)
    }
}

impl Neg for Var<'_> {
    type Output = Self;
    fn neg(self) -> Self {
        let v = -self.val();
        self.tape.unary(self, v, Op::Neg, -1.0)
    }
}

impl Add<f64> for Var<'_> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        let v = self.val() + rhs;
        self.tape.unary(self, v, Op::AddConst, 1.0)
    }
}

impl Sub<f64> for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        let v = self.val() - rhs;
        self.tape.unary(self, v, Op::AddConst, 1.0)
    }
}

impl Mul<f64> for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        let v = self.val() * rhs;
        self.tape.unary(self, v, Op::MulConst, rhs)
    }
}

impl Div<f64> for Var<'_> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        let v = self.val() / rhs;
        self.tape.unary(self, v, Op::MulConst, 1.0 / rhs)
    }
}

impl Real for Var<'_> {
    fn value(self) -> f64 {
        self.val()
    }

    fn constant(self, c: f64) -> Self {
        self.tape.constant(c)
    }

    fn sin(self) -> Self {
        let x = self.val();
        self.tape.unary(self, x.sin(), Op::Sin, x.cos())
    }

    fn cos(self) -> Self {
        let x = self.val();
        self.tape.unary(self, x.cos(), Op::Cos, -x.sin())
    }

    fn tanh(self) -> Self {
        let t = self.val().tanh();
        self.tape.unary(self, t, Op::Tanh, 1.0 - t * t)
    }

    fn exp(self) -> Self {
        let e = self.val().exp();
        self.tape.unary(self, e, Op::Exp, e)
    }

    fn ln(self) -> Self {
        let x = self.val();
        self.tape.unary(self, x.ln(), Op::Ln, 1.0 / x)
    }

    fn sqrt(self) -> Self {
        let x = self.val();
        let d = 0.5 / x.max(SQRT_GRAD_FLOOR).sqrt();
        self.tape.unary(self, x.sqrt(), Op::Sqrt, d)
    }
}

/// A scalar function of a flat parameter vector, evaluable on any [`Real`].
pub trait Objective {
    fn eval<R: Real>(&self, params: &[R]) -> Result<R>;
}

/// Gradient of an [`Objective`] at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub value: f64,
    pub grads: Vec<f64>,
    pub max_abs_grad: f64,
    /// Maximum relative error against finite differences, once checked.
    pub checked_against: Option<f64>,
}

/// Evaluates `objective` on a fresh tape and returns its exact gradient.
pub fn backward<O: Objective + ?Sized>(objective: &O, params: &[f64]) -> Result<GradientReport> {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.input(p)).collect();
    let loss = objective.eval(&vars)?;
    let adj = tape.gradient(loss)?;
    let grads: Vec<f64> = vars.iter().map(|v| adj[v.index()]).collect();
    let max_abs_grad = grads.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(GradientReport {
        value: loss.value(),
        grads,
        max_abs_grad,
        checked_against: None,
    })
}

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub passed: bool,
    pub max_rel_err: f64,
    /// Parameter index with the largest relative error.
    pub worst: Option<usize>,
    pub report: GradientReport,
    pub numeric: Vec<f64>,
}

/// Compares reverse-mode gradients against central differences.
///
/// Relative error per parameter is `|g_ad − g_fd| / max(1, |g_ad|, |g_fd|)`;
/// the check passes iff the maximum is at most `tol`.
pub fn grad_check<O: Objective + ?Sized>(objective: &O, params: &[f64], h: f64, tol: f64) -> Result<GradCheck> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Config(format!(
            "finite-difference step {h} outside [1e-7, 1e-3]"
        )));
    }
    let mut report = backward(objective, params)?;
    let mut probe = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let mut max_rel_err = 0.0f64;
    let mut worst = None;
    for i in 0..params.len() {
        probe[i] = params[i] + h;
        let up = objective.eval(&probe)?;
        probe[i] = params[i] - h;
        let down = objective.eval(&probe)?;
        probe[i] = params[i];
        let fd = (up - down) / (2.0 * h);
        let ad = report.grads[i];
        let rel = (ad - fd).abs() / 1f64.max(ad.abs()).max(fd.abs());
        if worst.is_none() || rel > max_rel_err {
            max_rel_err = rel;
            worst = Some(i);
        }
        numeric.push(fd);
    }
    report.checked_against = Some(max_rel_err);
    Ok(GradCheck {
        passed: max_rel_err <= tol,
        max_rel_err,
        worst,
        report,
        numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl Objective for Quadratic {
        fn eval<R: Real>(&self, p: &[R]) -> Result<R> {
            Ok(p[0] * p[0])
        }
    }

    struct Identity;
    impl Objective for Identity {
        fn eval<R: Real>(&self, p: &[R]) -> Result<R> {
            Ok(p[0])
        }
    }

    struct Mixed;
    impl Objective for Mixed {
        fn eval<R: Real>(&self, p: &[R]) -> Result<R> {
            let (x, y) = (p[0], p[1]);
            Ok((x * y).sin() + (x / y).exp() - (y * y + 1.0).ln() * x.tanh() + (x * x).sqrt() * 0.5)
        }
    }

    #[test]
    fn quadratic_central_difference_is_exact() {
        let check = grad_check(&Quadratic, &[3.0], 1e-5, 1e-9).unwrap();
        assert!((check.numeric[0] - 6.0).abs() < 1e-9);
        assert_eq!(check.report.grads, vec![6.0]);
        assert!(check.passed);
    }

    #[test]
    fn identity_loss_has_unit_gradient() {
        let r = backward(&Identity, &[0.7]).unwrap();
        assert_eq!(r.grads, vec![1.0]);
        assert_eq!(r.value, 0.7);
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let check = grad_check(&Mixed, &[0.4, 1.3], 1e-5, 1e-7).unwrap();
        assert!(check.passed, "max rel err {}", check.max_rel_err);
    }

    #[test]
    fn step_outside_range_is_rejected() {
        assert!(matches!(
            grad_check(&Quadratic, &[1.0], 1e-2, 1e-4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            grad_check(&Quadratic, &[1.0], 1e-9, 1e-4),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_tolerance_reports_worst_offender() {
        let check = grad_check(&Mixed, &[0.4, 1.3], 1e-5, 0.0).unwrap();
        assert!(!check.passed);
        assert!(check.worst.is_some());
        assert!(check.max_rel_err > 0.0);
    }

    #[test]
    fn sqrt_gradient_at_zero_is_finite() {
        let tape = Tape::new();
        let x = tape.input(0.0);
        let y = x.sqrt();
        let g = tape.gradient(y).unwrap();
        assert!(g[x.index()].is_finite());
        assert_eq!(g[x.index()], 0.5 / SQRT_GRAD_FLOOR.sqrt());
    }

    #[test]
    fn non_finite_intermediate_names_the_op() {
        let tape = Tape::new();
        let x = tape.input(0.0);
        let y = x.ln() * 2.0;
        match tape.gradient(y) {
            Err(Error::NonFinite { op, node }) => {
                assert_eq!(op, Op::Ln);
                assert_eq!(node, 1);
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn unrelated_inputs_get_zero_gradient() {
        let tape = Tape::new();
        let x = tape.input(2.0);
        let z = tape.input(5.0);
        let y = x * 3.0 - 1.0;
        let g = tape.gradient(y).unwrap();
        assert_eq!(g[x.index()], 3.0);
        assert_eq!(g[z.index()], 0.0);
    }
}
