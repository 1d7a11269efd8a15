//! Quantities behind the classical global-inversion conditions, evaluated by
//! sampling on a concrete map: the smallest-singular-value profile m(t) over
//! balls, the sphere-minimum of ||J(x)^-1||^-1 per radius, the modulus of
//! surjection by image coverage, and a side-by-side comparison driver.
//!
//! Integral divergence is undecidable from finite data, so profile verdicts
//! come from a power-law fit of the tail and are always "likely".

use crate::certify::{self, CoercivityVerdict, RankCertificate};
use crate::clarke::{self, FamilyMode};
use crate::expr::{EvalError, ProblemDef};
use crate::linalg;
use crate::objective::Objective;
use crate::sample;
use crate::solve::{self, SolveOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoremsError {
    #[error("image-coverage sampling supports n <= 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("operation requires a pure map (m = 0)")]
    NotAMap,
    #[error("grid must be increasing and positive")]
    BadGrid,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Certify(#[from] certify::CertifyError),
}

/// `[A]` = inf over unit vectors of ||A u||: the smallest singular value.
pub fn matrix_lower_bound(a: &DMatrix<f64>) -> f64 {
    linalg::sigma_min(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralVerdict {
    DivergesLikely,
    ConvergesLikely,
    Inconclusive,
}

/// A sampled integrand profile with its cumulative integral and the
/// power-law model fitted to the tail.
#[derive(Debug, Clone)]
pub struct ConditionProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub fit_residual: f64,
    pub verdict: IntegralVerdict,
}

const FIT_MARGIN: f64 = 0.1;
const FIT_RESIDUAL_CAP: f64 = 0.5;

fn profile_from(grid: &[f64], values: Vec<f64>) -> ConditionProfile {
    let mut cumulative = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        cumulative.push(acc);
    }

    // fit c * t^p on the upper half of the grid (geometric tail)
    let t_mid = (grid[0] * grid[grid.len() - 1]).sqrt();
    let tail: Vec<(f64, f64)> = grid
        .iter()
        .zip(&values)
        .filter(|(&t, &v)| t >= t_mid && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    let (p, c, resid) = if tail.len() >= 3 {
        let n = tail.len() as f64;
        let sx: f64 = tail.iter().map(|q| q.0).sum();
        let sy: f64 = tail.iter().map(|q| q.1).sum();
        let sxx: f64 = tail.iter().map(|q| q.0 * q.0).sum();
        let sxy: f64 = tail.iter().map(|q| q.0 * q.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-30 {
            let slope = (n * sxy - sx * sy) / denom;
            let icept = (sy - slope * sx) / n;
            let rss: f64 = tail
                .iter()
                .map(|(x, y)| {
                    let e = y - (slope * x + icept);
                    e * e
                })
                .sum::<f64>()
                / n;
            (slope, icept.exp(), rss.sqrt())
        } else {
            (f64::NAN, f64::NAN, f64::INFINITY)
        }
    } else {
        (f64::NAN, f64::NAN, f64::INFINITY)
    };

    let verdict = if !p.is_finite() || resid > FIT_RESIDUAL_CAP {
        IntegralVerdict::Inconclusive
    } else if p >= -1.0 + FIT_MARGIN {
        IntegralVerdict::DivergesLikely
    } else if p <= -1.0 - FIT_MARGIN {
        IntegralVerdict::ConvergesLikely
    } else {
        IntegralVerdict::Inconclusive
    };

    ConditionProfile {
        grid: grid.to_vec(),
        values,
        cumulative,
        fitted_exponent: p,
        fitted_constant: c,
        fit_residual: resid,
        verdict,
    }
}

pub fn default_t_grid() -> Vec<f64> {
    (0..24)
        .map(|i| 0.5 * (200.0_f64).powf(i as f64 / 23.0))
        .collect()
}

/// m(t) = inf over the ball ||z|| <= t of the smallest singular value over
/// the Jacobian family, sampled with boundary emphasis and family vertices,
/// and forced monotone nonincreasing in t.
pub fn pourciau_m(
    p: &ProblemDef,
    t_grid: &[f64],
    samples_per_t: usize,
    seed: u64,
) -> Result<ConditionProfile, TheoremsError> {
    if p.m() != 0 {
        return Err(TheoremsError::NotAMap);
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(TheoremsError::BadGrid);
    }
    let n = p.n();
    let per_t: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let mut pts: Vec<Vec<f64>> = Vec::new();
            // boundary emphasis: signed axis points plus sphere directions
            for d in sample::directions_with_axes(seed, n, samples_per_t / 2) {
                pts.push(d.iter().map(|c| c * t).collect());
            }
            for i in 0..samples_per_t / 2 {
                pts.push(sample::ball_point(seed, &vec![0.0; n], t, i));
            }
            pts.push(vec![0.0; n]);
            let mut min_sigma = f64::INFINITY;
            for z in &pts {
                let eta = ProblemDef::default_activity_tol(z, &[]);
                if let Ok(fam) = clarke::jacobian_family(p, z, &[], eta, FamilyMode::OuterGlobal) {
                    min_sigma = min_sigma.min(fam.min_sigma_over_vertices());
                }
            }
            min_sigma
        })
        .collect();
    let mut values = per_t;
    for i in 1..values.len() {
        values[i] = values[i].min(values[i - 1]);
    }
    Ok(profile_from(t_grid, values))
}

/// min over the sphere ||x|| = r of sigma_min(J(x)), the reciprocal operator
/// norm of the inverse Jacobian in the Euclidean norm. Kink hits are
/// perturbed off the nonsmooth set before differentiating.
pub fn hadamard_levy_integrand(
    p: &ProblemDef,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, TheoremsError> {
    if p.m() != 0 {
        return Err(TheoremsError::NotAMap);
    }
    let n = p.n();
    let sigma = SigmaMinObjective { p };
    let dirs = sample::directions_with_axes(seed, n, samples.max(4 * n));
    let mut best = f64::INFINITY;
    let mut best_dir = dirs[0].clone();
    for d in &dirs {
        let x: Vec<f64> = d.iter().map(|c| c * r).collect();
        let v = sigma.value(&x);
        if v < best {
            best = v;
            best_dir = d.clone();
        }
    }
    if n >= 2 {
        let (v, _) = sphere_min(&sigma, r, &best_dir);
        best = best.min(v);
    }
    Ok(best)
}

/// Profile of the sphere minima over an r-grid.
pub fn hadamard_levy_profile(
    p: &ProblemDef,
    r_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ConditionProfile, TheoremsError> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(TheoremsError::BadGrid);
    }
    let values = r_grid
        .par_iter()
        .map(|&r| hadamard_levy_integrand(p, r, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(profile_from(r_grid, values))
}

struct SigmaMinObjective<'a> {
    p: &'a ProblemDef,
}

impl Objective for SigmaMinObjective<'_> {
    fn dim(&self) -> usize {
        self.p.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        // nudge off the kink set so the classical Jacobian exists
        let eta = ProblemDef::default_activity_tol(x, &[]);
        let mut pt = x.to_vec();
        if let Ok(recs) = self.p.activity(&pt, &[], eta) {
            if recs.iter().any(|r| r.active) {
                let bump = 1e-8 * (1.0 + sample::norm(x));
                for (i, c) in pt.iter_mut().enumerate() {
                    *c += bump * if i % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
        }
        let Ok(args) = self.p.abs_arguments(&pt, &[]) else {
            return f64::INFINITY;
        };
        let signs: Vec<f64> = args.iter().map(|a| if *a < 0.0 { -1.0 } else { 1.0 }).collect();
        match self.p.selection_jacobian(&pt, &[], &signs) {
            Ok(j) => linalg::sigma_min(&j),
            Err(_) => f64::INFINITY,
        }
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        crate::objective::central_difference_gradient(|q| self.value(q), x)
    }
}

fn sphere_min(obj: &dyn Objective, r: f64, dir0: &[f64]) -> (f64, Vec<f64>) {
    let n = dir0.len();
    let point = |dir: &[f64]| -> Vec<f64> { dir.iter().map(|c| c * r).collect() };
    let mut dir = dir0.to_vec();
    let mut best = obj.value(&point(&dir));
    let mut step = 0.25;
    for _ in 0..30 {
        let mut improved = false;
        for axis in 0..n {
            for s in [step, -step] {
                let mut cand = dir.clone();
                cand[axis] += s;
                let norm = sample::norm(&cand);
                if norm < 1e-12 {
                    continue;
                }
                for c in cand.iter_mut() {
                    *c /= norm;
                }
                let v = obj.value(&point(&cand));
                if v < best {
                    best = v;
                    dir = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-7 {
                break;
            }
        }
    }
    (best, point(&dir))
}

/// Sampled modulus of surjection: the largest radius r with the closed ball
/// B[f(x), r] inside the image of B(x, t).
#[derive(Debug, Clone)]
pub struct SurEstimate {
    pub value: f64,
    /// Half of the longest boundary-image segment: one-bin uncertainty.
    pub uncertainty: f64,
    pub resolution: usize,
    /// Winding of the boundary image around f(x); +-1 certifies coverage
    /// at the sampled resolution (2-D only; 1 in 1-D).
    pub winding: i64,
}

pub const DEFAULT_SUR_RESOLUTION: usize = 720;

pub fn ioffe_sur(
    p: &ProblemDef,
    x: &[f64],
    t: f64,
    resolution: usize,
    _seed: u64,
) -> Result<SurEstimate, TheoremsError> {
    if p.m() != 0 {
        return Err(TheoremsError::NotAMap);
    }
    assert!(t > 0.0, "ball radius must be positive");
    let n = p.n();
    let fx = p.eval(x, &[])?;
    match n {
        1 => {
            let res = resolution.max(64);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..=res {
                let u = x[0] - t + 2.0 * t * i as f64 / res as f64;
                let v = p.eval(&[u], &[])?[0];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let value = (fx[0] - lo).min(hi - fx[0]).max(0.0);
            Ok(SurEstimate {
                value,
                uncertainty: t / res as f64,
                resolution: res,
                winding: 1,
            })
        }
        2 => {
            let res = resolution.max(64);
            let mut boundary = Vec::with_capacity(res);
            for i in 0..res {
                let theta = std::f64::consts::TAU * i as f64 / res as f64;
                let u = [x[0] + t * theta.cos(), x[1] + t * theta.sin()];
                boundary.push(p.eval(&u, &[])?);
            }
            let mut winding_turns = 0.0_f64;
            let mut min_dist = f64::INFINITY;
            let mut max_seg = 0.0_f64;
            for i in 0..res {
                let a = &boundary[i];
                let b = &boundary[(i + 1) % res];
                min_dist = min_dist.min(segment_distance(&fx, a, b));
                max_seg = max_seg.max(sample::dist(a, b));
                let va = (a[0] - fx[0], a[1] - fx[1]);
                let vb = (b[0] - fx[0], b[1] - fx[1]);
                winding_turns += (va.0 * vb.1 - va.1 * vb.0).atan2(va.0 * vb.0 + va.1 * vb.1);
            }
            let winding = (winding_turns / std::f64::consts::TAU).round() as i64;
            let value = if winding.abs() == 1 { min_dist } else { 0.0 };
            Ok(SurEstimate {
                value,
                uncertainty: 0.5 * max_seg,
                resolution: res,
                winding,
            })
        }
        other => Err(TheoremsError::UnsupportedDimension(other)),
    }
}

fn segment_distance(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let aq = [q[0] - a[0], q[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 {
        ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let proj = [a[0] + s * ab[0], a[1] + s * ab[1]];
    sample::dist(q, &proj)
}

/// Sur(f, x)(t) / t at shrinking radii, extrapolated to 0; at a smooth local
/// diffeomorphism point the limit is sigma_min of the Jacobian.
#[derive(Debug, Clone)]
pub struct LiusternikCheck {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub jacobian_sigma_min: f64,
    pub relative_gap: f64,
}

pub fn liusternik_check(
    p: &ProblemDef,
    x: &[f64],
    radii: &[f64],
    resolution: usize,
    seed: u64,
) -> Result<LiusternikCheck, TheoremsError> {
    let mut ratios = Vec::with_capacity(radii.len());
    for &t in radii {
        let est = ioffe_sur(p, x, t, resolution, seed)?;
        ratios.push(est.value / t);
    }
    let k = ratios.len();
    let extrapolated = if k >= 2 {
        // linear-in-t model through the two smallest radii
        let (t1, r1) = (radii[k - 2], ratios[k - 2]);
        let (t2, r2) = (radii[k - 1], ratios[k - 1]);
        r2 + (r2 - r1) * t2 / (t1 - t2)
    } else {
        ratios[k - 1]
    };
    let sigma = SigmaMinObjective { p }.value(x);
    Ok(LiusternikCheck {
        point: x.to_vec(),
        radii: radii.to_vec(),
        ratios,
        extrapolated,
        jacobian_sigma_min: sigma,
        relative_gap: (extrapolated - sigma).abs() / sigma.max(1e-300),
    })
}

// --- comparison driver -------------------------------------------------------

#[derive(Debug, Clone)]
pub struct InversionAudit {
    pub targets: usize,
    pub unique_roots: usize,
    pub max_roundtrip_error: f64,
    pub failed_targets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub problem: String,
    pub rank: RankCertificate,
    /// (target y, coercivity verdict) for the sampled shifted functionals.
    pub coercivity_runs: Vec<(Vec<f64>, CoercivityVerdict)>,
    pub pourciau: ConditionProfile,
    pub hadamard_levy: ConditionProfile,
    pub liusternik: Option<LiusternikCheck>,
    pub inversion_audit: InversionAudit,
}

impl ComparisonReport {
    pub fn coercive_everywhere(&self) -> bool {
        self.coercivity_runs
            .iter()
            .all(|(_, v)| *v == CoercivityVerdict::CoerciveEvidence)
    }

    /// The sufficient conditions of the coercivity+rank route hold.
    pub fn homeomorphism_route_holds(&self) -> bool {
        self.rank.is_maximal_rank() && self.coercive_everywhere()
    }
}

pub struct CompareOptions {
    pub t_grid: Vec<f64>,
    pub coercivity_targets: usize,
    pub inversion_targets: usize,
    pub target_box: Option<Vec<(f64, f64)>>,
    pub sur_resolution: usize,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            t_grid: default_t_grid(),
            coercivity_targets: 5,
            inversion_targets: 50,
            target_box: None,
            sur_resolution: DEFAULT_SUR_RESOLUTION,
            seed: 0,
        }
    }
}

/// Run every condition on one map and collect the verdicts side by side.
pub fn compare_conditions(
    p: &ProblemDef,
    opts: &CompareOptions,
) -> Result<ComparisonReport, TheoremsError> {
    if p.m() != 0 {
        return Err(TheoremsError::NotAMap);
    }
    let n = p.n();
    let region = p.cert_box_or_default();
    let rank = certify::rank_certificate(p, &region, FamilyMode::OuterGlobal, certify::DEFAULT_MAX_DEPTH)?;

    let target_box = opts
        .target_box
        .clone()
        .unwrap_or_else(|| vec![(-3.0, 3.0); n]);
    let schedule = certify::default_coercivity_schedule();
    let mut coercivity_runs = Vec::new();
    for i in 0..opts.coercivity_targets {
        let y = sample::halton_in_box(sample::mix_seed(opts.seed, 0xC0), i, &target_box);
        let obj = crate::objective::ResidualObjective::inversion(p, &y);
        let rep = certify::coercivity_probe(&obj, n, &schedule, 32 * n, sample::mix_seed(opts.seed, i as u64))?;
        coercivity_runs.push((y, rep.verdict));
    }

    let pourciau = pourciau_m(p, &opts.t_grid, 96, sample::mix_seed(opts.seed, 0x504D))?;
    let hadamard_levy = hadamard_levy_profile(p, &opts.t_grid, 64, sample::mix_seed(opts.seed, 0x484C))?;

    let liusternik = if n <= 2 {
        let mut x = vec![1.0; n];
        x[0] = 2.0;
        Some(liusternik_check(
            p,
            &x,
            &[0.1, 0.01, 0.001],
            opts.sur_resolution,
            opts.seed,
        )?)
    } else {
        None
    };

    let solve_opts = SolveOptions::with_seed(sample::mix_seed(opts.seed, 0x1A7));
    let mut unique_roots = 0;
    let mut max_err = 0.0_f64;
    let mut failed = Vec::new();
    for i in 0..opts.inversion_targets {
        let y = sample::halton_in_box(sample::mix_seed(opts.seed, 0x7A6), i, &target_box);
        match solve::invert(p, &y, &solve_opts) {
            Ok(root) => {
                unique_roots += 1;
                let fx = p.eval(&root.x, &[])?;
                max_err = max_err.max(sample::dist(&fx, &y));
            }
            Err(_) => failed.push(y),
        }
    }
    let inversion_audit = InversionAudit {
        targets: opts.inversion_targets,
        unique_roots,
        max_roundtrip_error: max_err,
        failed_targets: failed,
    };

    Ok(ComparisonReport {
        problem: p.name.clone(),
        rank,
        coercivity_runs,
        pourciau,
        hadamard_levy,
        liusternik,
        inversion_audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn fa(a: f64) -> ProblemDef {
        parse_problem(&format!(
            "n = 2\nm = 0\nbox = [-10,10]x[-10,10]\nF1 = x1 + {a}*abs(x1)\nF2 = x1^3 + x2\n"
        ))
        .unwrap()
    }

    #[test]
    fn lower_bound_known_matrices() {
        assert_relative_eq!(matrix_lower_bound(&DMatrix::identity(3, 3)), 1.0);
        assert_relative_eq!(matrix_lower_bound(&dmatrix![2.0, 0.0; 0.0, 5.0]), 2.0);
        // sigma_min of [[1,0],[12,1]]: det = 1, so sigma_min = 1 / sigma_max
        let q = dmatrix![1.0, 0.0; 12.0, 1.0];
        let s = matrix_lower_bound(&q);
        assert_relative_eq!(s * linalg::sigma_max(&q), 1.0, epsilon = 1e-9);
        assert!((s - 0.0830).abs() < 5e-4);
    }

    #[test]
    fn pourciau_identity_diverges() {
        let p = parse_problem("n = 1\nm = 0\nF1 = x1\n").unwrap();
        let prof = pourciau_m(&p, &default_t_grid(), 32, 1).unwrap();
        assert!(prof.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(prof.verdict, IntegralVerdict::DivergesLikely);
    }

    #[test]
    fn pourciau_linear_2d() {
        let p = parse_problem("n = 2\nm = 0\nF1 = 2*x1\nF2 = 2*x2\n").unwrap();
        let prof = pourciau_m(&p, &default_t_grid(), 32, 1).unwrap();
        assert!(prof.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn pourciau_fa_decays_quadratically() {
        let prof = pourciau_m(&fa(0.5), &default_t_grid(), 96, 1).unwrap();
        assert_eq!(prof.verdict, IntegralVerdict::ConvergesLikely);
        assert!(
            prof.fitted_exponent > -2.3 && prof.fitted_exponent < -1.7,
            "exponent {}",
            prof.fitted_exponent
        );
        // m(t) * t^2 stays within a constant band on the tail
        let band: Vec<f64> = prof
            .grid
            .iter()
            .zip(&prof.values)
            .filter(|(&t, _)| (10.0..=100.0).contains(&t))
            .map(|(&t, &v)| v * t * t)
            .collect();
        let (lo, hi) = band
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo <= 3.0, "band ratio {}", hi / lo);
    }

    #[test]
    fn monotone_m() {
        let prof = pourciau_m(&fa(-0.5), &default_t_grid(), 48, 5).unwrap();
        for w in prof.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for w in prof.cumulative.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn hl_integrand_identity_and_scaled() {
        let p = parse_problem("n = 1\nm = 0\nF1 = x1\n").unwrap();
        assert_relative_eq!(hadamard_levy_integrand(&p, 3.0, 16, 1).unwrap(), 1.0);
        let p = parse_problem("n = 2\nm = 0\nF1 = 2*x1\nF2 = 2*x2\n").unwrap();
        assert_relative_eq!(hadamard_levy_integrand(&p, 5.0, 32, 1).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn hl_integrand_smooth_fa_at_r2() {
        // a = 0: minimum of sigma_min([[1,0],[3x^2,1]]) over the circle of
        // radius 2 is at |x| = 2
        let p = fa(0.0);
        let v = hadamard_levy_integrand(&p, 2.0, 64, 1).unwrap();
        let expect = matrix_lower_bound(&dmatrix![1.0, 0.0; 12.0, 1.0]);
        assert_relative_eq!(v, expect, max_relative = 1e-3);
    }

    #[test]
    fn sur_identity_and_linear() {
        let p = parse_problem("n = 1\nm = 0\nF1 = x1\n").unwrap();
        let est = ioffe_sur(&p, &[0.7], 1.0, 512, 1).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-9);

        // linear 2-D map: Sur = t * sigma_min
        let p = parse_problem("n = 2\nm = 0\nF1 = 3*x1 + x2\nF2 = x2\n").unwrap();
        let a = dmatrix![3.0, 1.0; 0.0, 1.0];
        let est = ioffe_sur(&p, &[0.2, -0.4], 1.0, 1440, 1).unwrap();
        assert_eq!(est.winding, 1);
        let expect = matrix_lower_bound(&a);
        assert!((est.value - expect).abs() / expect < 0.02, "{} vs {expect}", est.value);
    }

    #[test]
    fn liusternik_limit_matches_sigma_min() {
        let p = fa(0.5);
        let chk = liusternik_check(&p, &[2.0, 1.0], &[0.1, 0.01, 0.001], 720, 1).unwrap();
        let expect = matrix_lower_bound(&dmatrix![1.5, 0.0; 12.0, 1.0]);
        assert!(
            (chk.extrapolated - expect).abs() / expect < 0.05,
            "extrapolated {} vs {}",
            chk.extrapolated,
            expect
        );
        assert_relative_eq!(chk.jacobian_sigma_min, expect, max_relative = 1e-9);
    }
}
