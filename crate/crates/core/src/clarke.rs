//! Clarke generalized-Jacobian families and sampled subdifferentials.
//!
//! A family is stored as an affine bundle J0 + sum_i t_i E_i with one
//! direction per contributing abs node and t_i in [-1, 1]. For a single
//! active kink with nondegenerate argument this is the generalized Jacobian
//! itself; in every other case the family is reported as an outer object and
//! never silently treated as exact.

use crate::expr::{EvalError, NodeId, ProblemDef};
use crate::objective::Objective;
use crate::sample;
use nalgebra::DMatrix;
use thiserror::Error;

/// Which abs nodes contribute a family parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMode {
    /// Only nodes active at the anchor (|argument| <= eta); inactive nodes
    /// are folded into the base with their fixed sign.
    Pointwise,
    /// Every abs node contributes regardless of activity. This reproduces
    /// the conservative family used to certify rank over whole regions.
    OuterGlobal,
}

/// Whether the affine family is known to equal the generalized Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Outer,
}

/// Affine matrix family J0 + sum t_i E_i, t_i in [-1, 1].
#[derive(Debug, Clone)]
pub struct JacobianFamily {
    pub base: DMatrix<f64>,
    /// (abs node, direction matrix), one per contributing node.
    pub directions: Vec<(NodeId, DMatrix<f64>)>,
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
    pub mode: FamilyMode,
    pub exactness: Exactness,
}

impl JacobianFamily {
    /// Member for a particular parameter vector (entries clamped to [-1,1]).
    pub fn member(&self, t: &[f64]) -> DMatrix<f64> {
        assert_eq!(t.len(), self.directions.len());
        let mut m = self.base.clone();
        for (ti, (_, e)) in t.iter().zip(&self.directions) {
            m += e * ti.clamp(-1.0, 1.0);
        }
        m
    }

    /// All 2^k vertex members (t in {-1, +1}^k); the singleton base when the
    /// family has no directions.
    pub fn vertices(&self) -> Vec<DMatrix<f64>> {
        let k = self.directions.len();
        assert!(k <= 20, "vertex enumeration limited to 20 parameters");
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let t: Vec<f64> = (0..k)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            out.push(self.member(&t));
        }
        out
    }

    /// Smallest singular value over the vertex members.
    pub fn min_sigma_over_vertices(&self) -> f64 {
        self.vertices()
            .iter()
            .map(crate::linalg::sigma_min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_singleton(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Gradients of the smooth selection sampled in a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub center: Vec<f64>,
    pub radius: f64,
    pub gradients: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Projection of the origin onto the convex hull of a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityMeasure {
    pub min_norm_element: Vec<f64>,
    pub norm: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClarkeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("gradient sampling kept hitting nonsmooth points after {0} resamples")]
    NonsmoothSamples(usize),
    #[error("bundle is empty")]
    EmptyBundle,
}

/// Build the Jacobian family of the x-block of F (or of G = Ax - F - xi when
/// the problem carries a matrix A) at the anchor (x, y).
pub fn jacobian_family(
    p: &ProblemDef,
    x: &[f64],
    y: &[f64],
    eta: f64,
    mode: FamilyMode,
) -> Result<JacobianFamily, ClarkeError> {
    let args = p.abs_arguments(x, y)?;
    let k = args.len();
    let contributing: Vec<bool> = match mode {
        FamilyMode::OuterGlobal => vec![true; k],
        FamilyMode::Pointwise => args.iter().map(|a| a.abs() <= eta).collect(),
    };

    // Base: contributing nodes get slot 0, the rest their fixed sign.
    let base_slots: Vec<f64> = args
        .iter()
        .zip(&contributing)
        .map(|(a, c)| {
            if *c {
                0.0
            } else if *a < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let n = p.n();
    let base_full = p.slot_jacobian_full(x, y, &base_slots)?;
    let to_x_block = |m: &DMatrix<f64>| m.columns(0, n).into_owned();
    let mut base = to_x_block(&base_full);

    let mut directions = Vec::new();
    for (i, &c) in contributing.iter().enumerate() {
        if !c {
            continue;
        }
        let mut slots = base_slots.clone();
        slots[i] = 1.0;
        let ji = to_x_block(&p.slot_jacobian_full(x, y, &slots)?);
        directions.push((p.abs_nodes()[i], ji - &base));
    }

    // Algebraic mode solves G = Ax - F - xi, whose family is A - (J0 + sum tE).
    if let Some(a) = p.matrix_a() {
        base = a - base;
        for (_, e) in &mut directions {
            *e = -e.clone();
        }
    }

    // Exactness: a single contributing kink whose argument has a
    // nonvanishing gradient is the textbook case where the affine family is
    // the generalized Jacobian; anything richer is only ever an outer bundle.
    let exactness = if directions.is_empty() {
        Exactness::Exact
    } else if directions.len() == 1 {
        let grads = p.abs_argument_gradients(x, y)?;
        let idx = contributing.iter().position(|c| *c).unwrap();
        if sample::norm(&grads[idx]) > 1e-12 {
            Exactness::Exact
        } else {
            Exactness::Outer
        }
    } else {
        Exactness::Outer
    };

    Ok(JacobianFamily {
        base,
        directions,
        anchor_x: x.to_vec(),
        anchor_y: y.to_vec(),
        mode,
        exactness,
    })
}

/// Sample `k` selection gradients at points of the ball B(u, radius).
/// Deterministic for a fixed seed; points that land on kinks are resampled
/// up to ten times each.
pub fn sample_gradients(
    objective: &dyn Objective,
    u: &[f64],
    radius: f64,
    k: usize,
    seed: u64,
) -> Result<GradientBundle, ClarkeError> {
    assert!(radius > 0.0, "sampling radius must be positive");
    assert!(k >= u.len() + 1, "need at least n + 1 samples");
    let mut gradients = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        let mut point = None;
        for attempt in 0..10 {
            let cand = sample::ball_point(seed, u, radius, i + attempt * k);
            if objective.is_smooth_at(&cand) {
                point = Some(cand);
                break;
            }
        }
        let pt = point.ok_or(ClarkeError::NonsmoothSamples(10))?;
        values.push(objective.value(&pt));
        gradients.push(objective.gradient(&pt));
    }
    Ok(GradientBundle {
        center: u.to_vec(),
        radius,
        gradients,
        values,
    })
}

/// Default bundle size, 2(n + 1).
pub fn default_bundle_size(n: usize) -> usize {
    2 * (n + 1)
}

/// Nearest point to the origin in the convex hull of the bundle gradients,
/// by Mitchell-Demyanov-Malozemov mass transfer. Iteration cap 1e5; failure
/// to meet `tol` is reported through `converged`, never a panic.
pub fn min_norm_element(bundle: &GradientBundle, tol: f64) -> Result<StationarityMeasure, ClarkeError> {
    min_norm_of_points(&bundle.gradients, tol)
}

pub fn min_norm_of_points(points: &[Vec<f64>], tol: f64) -> Result<StationarityMeasure, ClarkeError> {
    if points.is_empty() {
        return Err(ClarkeError::EmptyBundle);
    }
    let k = points.len();
    let dim = points[0].len();
    let mut lambda = vec![1.0 / k as f64; k];
    let v = |lambda: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (l, g) in lambda.iter().zip(points) {
            for d in 0..dim {
                v[d] += l * g[d];
            }
        }
        v
    };
    let scale = points
        .iter()
        .map(|g| sample::norm(g))
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let cap = 100_000;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        iterations += 1;
        let cur = v(&lambda);
        let dots: Vec<f64> = points
            .iter()
            .map(|g| g.iter().zip(&cur).map(|(a, b)| a * b).sum())
            .collect();
        // most promising incoming vertex and heaviest outgoing vertex
        let (i_min, _) = dots
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (i_max, _) = dots
            .iter()
            .enumerate()
            .filter(|(i, _)| lambda[*i] > 0.0)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        // duality gap bounds ||v - v*||^2, so tol^2 targets tol accuracy
        let gap = dots[i_max] - dots[i_min];
        if gap <= (tol * tol).max(4.0 * f64::EPSILON * scale * scale) {
            converged = true;
            break;
        }
        // optimal transfer of mass from i_max to i_min along the segment
        let diff: Vec<f64> = (0..dim)
            .map(|d| points[i_max][d] - points[i_min][d])
            .collect();
        let denom: f64 = diff.iter().map(|a| a * a).sum();
        if denom <= f64::EPSILON * scale * scale {
            converged = true;
            break;
        }
        let numer: f64 = diff.iter().zip(&cur).map(|(a, b)| a * b).sum();
        let step = (numer / denom).clamp(0.0, lambda[i_max]);
        if step == 0.0 {
            converged = true;
            break;
        }
        lambda[i_max] -= step;
        lambda[i_min] += step;
    }
    let vfin = v(&lambda);
    Ok(StationarityMeasure {
        norm: sample::norm(&vfin),
        min_norm_element: vfin,
        coefficients: lambda,
        iterations,
        converged,
    })
}

/// Distance from a point to the convex hull of the given points.
pub fn distance_to_hull(point: &[f64], hull_points: &[Vec<f64>], tol: f64) -> f64 {
    let shifted: Vec<Vec<f64>> = hull_points
        .iter()
        .map(|g| g.iter().zip(point).map(|(a, b)| a - b).collect())
        .collect();
    min_norm_of_points(&shifted, tol).map(|m| m.norm).unwrap_or(f64::INFINITY)
}

/// The residual r = F(x, y) (or G in algebraic mode) together with the set
/// {B^T r : B in the family}: the chain-rule superset of the subdifferential
/// of phi_y at x. If the family has maximal rank and the min-norm over the
/// set vanishes, the residual must vanish.
#[derive(Debug, Clone)]
pub struct PhiSubgradients {
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub family: JacobianFamily,
    /// B^T r over the family vertices.
    pub vertex_images: Vec<Vec<f64>>,
    pub min_norm: StationarityMeasure,
    /// min-norm <= tol
    pub stationary: bool,
    /// ||r|| <= tol
    pub residual_zero: bool,
    /// smallest vertex sigma_min; <= tol flags a rank-deficient family
    pub family_min_sigma: f64,
}

pub fn phi_subgradients(
    p: &ProblemDef,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<PhiSubgradients, ClarkeError> {
    let eta = ProblemDef::default_activity_tol(x, y);
    let family = jacobian_family(p, x, y, eta, FamilyMode::Pointwise)?;
    let r = p.residual(x, y)?;
    let vertex_images: Vec<Vec<f64>> = family
        .vertices()
        .iter()
        .map(|b| {
            (0..p.n())
                .map(|col| (0..p.n()).map(|row| b[(row, col)] * r[row]).sum())
                .collect()
        })
        .collect();
    let min_norm = min_norm_of_points(&vertex_images, 1e-10)?;
    let rnorm = sample::norm(&r);
    Ok(PhiSubgradients {
        residual_norm: rnorm,
        residual: r,
        family_min_sigma: family.min_sigma_over_vertices(),
        family,
        stationary: min_norm.norm <= tol,
        residual_zero: rnorm <= tol,
        vertex_images,
        min_norm,
    })
}
