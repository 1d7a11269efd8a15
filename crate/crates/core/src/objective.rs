//! Scalar objectives for the nonsmooth machinery.
//!
//! Everything that samples gradients, probes coercivity, or runs descent
//! works against this trait. Expression-built objectives supply exact
//! smooth-selection gradients; ad-hoc closures fall back to central
//! differences.

use crate::expr::{EvalError, ProblemDef};

pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Gradient at a point of differentiability (defined a.e. for locally
    /// Lipschitz objectives).
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// False when the point sits on a kink, so gradient samplers can
    /// perturb away from it.
    fn is_smooth_at(&self, _x: &[f64]) -> bool {
        true
    }
}

/// Closure-backed objective with a finite-difference gradient.
pub struct FnObjective<V> {
    dim: usize,
    value: V,
}

impl<V: Fn(&[f64]) -> f64 + Sync> FnObjective<V> {
    pub fn new(dim: usize, value: V) -> Self {
        FnObjective { dim, value }
    }
}

impl<V: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<V> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        central_difference_gradient(|p| (self.value)(p), x)
    }
}

/// Closure objective with an exact gradient closure.
pub struct GradObjective<V, G> {
    dim: usize,
    value: V,
    grad: G,
}

impl<V, G> GradObjective<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, value: V, grad: G) -> Self {
        GradObjective { dim, value, grad }
    }
}

impl<V, G> Objective for GradObjective<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// The least-squares functional phi_y(x) = 1/2 ||r(x)||^2 for the residual of
/// a parsed problem (implicit, algebraic, or inversion form), with the exact
/// smooth-selection gradient J_sel(x)^T r(x).
pub struct ResidualObjective<'a> {
    problem: &'a ProblemDef,
    y: Vec<f64>,
    target: Option<Vec<f64>>,
}

impl<'a> ResidualObjective<'a> {
    /// phi_y for F(x, y) = 0 (or G(x) = Ax - F(x) - xi = 0 in algebraic mode).
    pub fn implicit(problem: &'a ProblemDef, y: &[f64]) -> Self {
        ResidualObjective {
            problem,
            y: y.to_vec(),
            target: None,
        }
    }

    /// phi for the inversion problem f(x) = target (m = 0 maps).
    pub fn inversion(problem: &'a ProblemDef, target: &[f64]) -> Self {
        assert_eq!(problem.m(), 0, "inversion requires a pure map (m = 0)");
        assert_eq!(target.len(), problem.n());
        ResidualObjective {
            problem,
            y: Vec::new(),
            target: Some(target.to_vec()),
        }
    }

    pub fn problem(&self) -> &ProblemDef {
        self.problem
    }

    pub fn parameter(&self) -> &[f64] {
        &self.y
    }

    /// Residual r(x) of the equation being solved.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut r = self.problem.residual(x, &self.y)?;
        if let Some(t) = &self.target {
            for (ri, ti) in r.iter_mut().zip(t) {
                *ri -= ti;
            }
        }
        Ok(r)
    }

    /// x-block Jacobian of the residual for the smooth selection with signs
    /// matching the abs arguments at x.
    pub fn residual_jacobian(&self, x: &[f64]) -> Result<nalgebra::DMatrix<f64>, EvalError> {
        let args = self.problem.abs_arguments(x, &self.y)?;
        let signs: Vec<f64> = args
            .iter()
            .map(|a| if *a < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let jf = self.problem.selection_jacobian(x, &self.y, &signs)?;
        Ok(match self.problem.matrix_a() {
            None => jf,
            Some(a) => a - jf,
        })
    }
}

impl Objective for ResidualObjective<'_> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.residual(x) {
            Ok(r) => 0.5 * r.iter().map(|v| v * v).sum::<f64>(),
            Err(_) => f64::INFINITY,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = match self.residual(x) {
            Ok(r) => r,
            Err(_) => return vec![f64::NAN; self.dim()],
        };
        let j = match self.residual_jacobian(x) {
            Ok(j) => j,
            Err(_) => return vec![f64::NAN; self.dim()],
        };
        let mut g = vec![0.0; self.dim()];
        for (col, gc) in g.iter_mut().enumerate() {
            *gc = (0..r.len()).map(|row| j[(row, col)] * r[row]).sum();
        }
        g
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        let eta = ProblemDef::default_activity_tol(x, &self.y) * 1e-2;
        match self.problem.activity(x, &self.y, eta) {
            Ok(recs) => recs.iter().all(|r| !r.active),
            Err(_) => false,
        }
    }
}

/// Objective precomposed with a translation: value(x) = inner(x + shift).
/// Used by the uniqueness probe, which moves one root to the origin.
pub struct ShiftObjective<O> {
    inner: O,
    shift: Vec<f64>,
}

impl<O: Objective> ShiftObjective<O> {
    pub fn new(inner: O, shift: Vec<f64>) -> Self {
        ShiftObjective { inner, shift }
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, s)| a + s).collect()
    }
}

impl<O: Objective> Objective for ShiftObjective<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.shifted(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(&self.shifted(x))
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        self.inner.is_smooth_at(&self.shifted(x))
    }
}

/// Central-difference gradient with per-coordinate scale-aware steps.
pub fn central_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for d in 0..x.len() {
        let h = 6e-6 * (1.0 + x[d].abs());
        let old = xp[d];
        xp[d] = old + h;
        let fp = f(&xp);
        xp[d] = old - h;
        let fm = f(&xp);
        xp[d] = old;
        g[d] = (fp - fm) / (2.0 * h);
    }
    g
}
