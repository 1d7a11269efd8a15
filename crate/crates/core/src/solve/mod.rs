//! Global implicit function and global inverse by coercive least-squares
//! minimization: multistart nonsmooth descent, root clustering and auditing,
//! and warm-started continuation over the parameter.
//!
//! "Unique" always means *audited* uniqueness: one cluster absorbed every
//! converged start and no stationary nonroot survived verification. The rank
//! certificate, not the audit, is what upgrades that to a claim.

mod minimize;

pub use minimize::{
    measure_stationarity, minimize_nonsmooth, polish_critical_point, polish_root, GsOptions,
    MinimizeResult,
};

use crate::certify::{
    self, CertifyError, CoercivityReport, CoercivityVerdict, GrowthReport, RankCertificate,
    SpectralReport,
};
use crate::clarke::{self, ClarkeError, FamilyMode};
use crate::expr::{EvalError, ProblemDef};
use crate::objective::ResidualObjective;
use crate::sample;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Multistart count; defaults to 64 for n <= 2 and 32 * 2^n above.
    pub multistart: Option<usize>,
    /// Start region for the multistart; defaults to the problem's
    /// certification box (x-block).
    pub start_region: Option<Vec<(f64, f64)>>,
    pub residual_tol: f64,
    pub stationarity_tol: f64,
    /// Base cluster radius; the effective radius is scaled by (1 + ||x||).
    pub cluster_radius: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            multistart: None,
            start_region: None,
            residual_tol: 1e-9,
            stationarity_tol: 1e-8,
            cluster_radius: 1e-6,
            max_iters: 300,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn with_seed(seed: u64) -> Self {
        SolveOptions {
            seed,
            ..Default::default()
        }
    }

    fn starts_for(&self, n: usize) -> usize {
        self.multistart
            .unwrap_or_else(|| if n <= 2 { 64 } else { 32usize << n })
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.residual_tol <= 0.0 || self.stationarity_tol <= 0.0 || self.cluster_radius <= 0.0 {
            return Err(SolveError::BadOptions(
                "tolerances and cluster radius must be positive".into(),
            ));
        }
        Ok(())
    }

    fn cluster_tol(&self, x: &[f64]) -> f64 {
        self.cluster_radius * (1.0 + sample::norm(x))
    }
}

#[derive(Debug, Clone)]
pub struct Root {
    pub x: Vec<f64>,
    pub residual: f64,
    pub stationarity: f64,
    pub basin_count: usize,
}

/// A verified Clarke-stationary point whose residual is *not* zero. By the
/// chain-rule inference these can only exist where the Jacobian family loses
/// rank, so each one is evidence against the maximal-rank hypothesis.
#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub x: Vec<f64>,
    /// ||r(x)||
    pub residual: f64,
    /// 1/2 ||r(x)||^2, the least-squares objective at the point.
    pub phi_value: f64,
    pub stationarity: f64,
    pub family_min_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditVerdict {
    Unique,
    Multiple,
    NoneFound,
}

#[derive(Debug, Clone)]
pub struct RootSet {
    /// Parameter the solve ran at (y, the inversion target, or empty).
    pub y: Vec<f64>,
    pub roots: Vec<Root>,
    pub stationary_nonroots: Vec<StationaryPoint>,
    pub verdict: AuditVerdict,
}

#[derive(Debug, Clone)]
pub struct AtlasSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: f64,
    pub stationarity: f64,
    /// ||x_k - x_{k-1}|| / ||y_k - y_{k-1}||; 0 at the first sample.
    pub ratio: f64,
    pub break_flag: bool,
    pub audited: bool,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    pub samples: Vec<AtlasSample>,
    pub breaks: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("multiple stationary clusters found: {} roots, {} stationary nonroots", roots.len(), stationary_nonroots.len())]
    MultipleRoots {
        roots: Vec<Root>,
        stationary_nonroots: Vec<StationaryPoint>,
    },
    #[error("no root found: {hint}")]
    NoRootFound { hint: String },
    #[error("continuation audit failed: {0}")]
    AuditFailure(String),
    #[error("inversion requires a pure map (m = 0)")]
    NotInversion,
    #[error("algebraic solve requires the matrix A")]
    NotAlgebraic,
    #[error("bad options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Clarke(#[from] ClarkeError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

// --- multistart core -------------------------------------------------------

/// Multistart minimize of phi(x) = 1/2 ||r(x)||^2, cluster the converged
/// points, split by residual into roots and stationary nonroots, and audit.
/// A second sweep minimizes the squared selection-gradient norm so critical
/// points that descent cannot reach (maxima, saddles of phi) are found too.
pub fn find_roots(p: &ProblemDef, y: &[f64], opts: &SolveOptions) -> Result<RootSet, SolveError> {
    let obj = ResidualObjective::implicit(p, y);
    find_roots_of(&obj, y.to_vec(), opts)
}

fn find_roots_of(
    obj: &ResidualObjective<'_>,
    label: Vec<f64>,
    opts: &SolveOptions,
) -> Result<RootSet, SolveError> {
    opts.validate()?;
    let p = obj.problem();
    let n = p.n();
    let region = opts
        .start_region
        .clone()
        .unwrap_or_else(|| p.start_region());
    if region.len() != n {
        return Err(SolveError::BadOptions(format!(
            "start region must have {n} intervals"
        )));
    }
    let starts = opts.starts_for(n);

    // descent phase: coarse gradient sampling, then residual polish
    let descent: Vec<(usize, Vec<f64>, f64)> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let x0 = sample::halton_in_box(opts.seed, i, &region);
            let local = GsOptions {
                stationarity_tol: 1e-4,
                max_iters: opts.max_iters,
                initial_radius: None,
                seed: sample::mix_seed(opts.seed, 1000 + i as u64),
            };
            let coarse = minimize_nonsmooth(obj, &x0, &local);
            let (xp, rnorm) = polish_root(obj, &coarse.x, opts.residual_tol * 1e-2);
            (i, xp, rnorm)
        })
        .collect();

    // stationary sweep: critical points of phi via the gradient field
    let sweep_starts = (starts / 2).max(8);
    let sweep: Vec<(usize, Vec<f64>, f64)> = (0..sweep_starts)
        .into_par_iter()
        .map(|i| {
            let x0 = sample::halton_in_box(sample::mix_seed(opts.seed, 77), i, &region);
            let (xc, gnorm) = polish_critical_point(obj, &x0, 1e-12);
            (starts + i, xc, gnorm)
        })
        .collect();

    // deterministic clustering in start order
    let mut clusters: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut add_to_cluster = |x: &[f64]| {
        for (cx, count) in clusters.iter_mut() {
            if sample::dist(cx, x) <= opts.cluster_tol(x) {
                *count += 1;
                return;
            }
        }
        clusters.push((x.to_vec(), 1));
    };
    for (_, x, rnorm) in &descent {
        if !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        // keep descent results that either hit a root or at least stopped
        // moving; far-off stalls are discarded by the stationarity check below
        if *rnorm <= opts.residual_tol || in_region(x, &region, 10.0) {
            add_to_cluster(x);
        }
    }
    for (_, x, gnorm) in &sweep {
        if x.iter().all(|v| v.is_finite()) && *gnorm <= 1e-8 {
            add_to_cluster(x);
        }
    }

    // verify each cluster representative independently
    let mut roots = Vec::new();
    let mut nonroots = Vec::new();
    for (x, count) in clusters {
        let r = obj.residual(&x)?;
        let rnorm = sample::norm(&r);
        let stat = measure_stationarity(
            obj,
            &x,
            opts.stationarity_tol,
            sample::mix_seed(opts.seed, 0x5354),
        );
        if rnorm <= opts.residual_tol {
            roots.push(Root {
                x,
                residual: rnorm,
                stationarity: stat.norm,
                basin_count: count,
            });
        } else if stat.norm <= opts.stationarity_tol {
            let eta = ProblemDef::default_activity_tol(&x, obj.parameter());
            let family = clarke::jacobian_family(p, &x, obj.parameter(), eta, FamilyMode::Pointwise)?;
            nonroots.push(StationaryPoint {
                x,
                residual: rnorm,
                phi_value: 0.5 * rnorm * rnorm,
                stationarity: stat.norm,
                family_min_sigma: family.min_sigma_over_vertices(),
            });
        }
        // anything else was a non-converged stall; drop it
    }

    let verdict = match (roots.len(), nonroots.len()) {
        (0, _) => AuditVerdict::NoneFound,
        (1, 0) => AuditVerdict::Unique,
        _ => AuditVerdict::Multiple,
    };
    Ok(RootSet {
        y: label,
        roots,
        stationary_nonroots: nonroots,
        verdict,
    })
}

fn in_region(x: &[f64], region: &[(f64, f64)], slack_factor: f64) -> bool {
    x.iter().zip(region).all(|(v, (lo, hi))| {
        let w = (hi - lo).abs().max(1.0) * slack_factor;
        *v >= lo - w && *v <= hi + w
    })
}

/// The implicit function value f(y): the unique audited root of F(., y).
pub fn implicit_eval(p: &ProblemDef, y: &[f64], opts: &SolveOptions) -> Result<Root, SolveError> {
    let set = find_roots(p, y, opts)?;
    single_root(set)
}

fn single_root(set: RootSet) -> Result<Root, SolveError> {
    match set.verdict {
        AuditVerdict::Unique => Ok(set.roots.into_iter().next().unwrap()),
        AuditVerdict::NoneFound => Err(SolveError::NoRootFound {
            hint: "no converged start reached the residual tolerance; \
                   run the coercivity probe to check the objective grows"
                .into(),
        }),
        AuditVerdict::Multiple => Err(SolveError::MultipleRoots {
            roots: set.roots,
            stationary_nonroots: set.stationary_nonroots,
        }),
    }
}

/// Global inverse evaluation: the unique audited solution of f(x) = target.
pub fn invert(p: &ProblemDef, target: &[f64], opts: &SolveOptions) -> Result<Root, SolveError> {
    if p.m() != 0 {
        return Err(SolveError::NotInversion);
    }
    if target.len() != p.n() {
        return Err(SolveError::BadOptions(format!(
            "target must have dimension {}",
            p.n()
        )));
    }
    let obj = ResidualObjective::inversion(p, target);
    let set = find_roots_of(&obj, target.to_vec(), opts)?;
    single_root(set)
}

// --- continuation ------------------------------------------------------------

/// Warm-started continuation over an ordered parameter path. Every 10th
/// sample (and the last) re-runs the full multistart audit; a break is any
/// sample where the warm start and the audit disagree, the audit is not
/// unique, or the step ratio explodes.
pub fn implicit_atlas(
    p: &ProblemDef,
    y_samples: &[Vec<f64>],
    opts: &SolveOptions,
) -> Result<Atlas, SolveError> {
    let objectives: Vec<ResidualObjective<'_>> = y_samples
        .iter()
        .map(|y| ResidualObjective::implicit(p, y))
        .collect();
    atlas_core(&objectives, y_samples, opts)
}

/// Continuation over xi for an algebraic problem: xi plays the parameter
/// role, everything else matches `implicit_atlas`.
pub fn xi_atlas(
    p: &ProblemDef,
    xi_samples: &[Vec<f64>],
    opts: &SolveOptions,
) -> Result<Atlas, SolveError> {
    if p.matrix_a().is_none() {
        return Err(SolveError::NotAlgebraic);
    }
    let problems: Vec<ProblemDef> = xi_samples.iter().map(|xi| p.with_xi(xi.clone())).collect();
    let objectives: Vec<ResidualObjective<'_>> = problems
        .iter()
        .map(|pk| ResidualObjective::implicit(pk, &[]))
        .collect();
    atlas_core(&objectives, xi_samples, opts)
}

fn atlas_core(
    objectives: &[ResidualObjective<'_>],
    labels: &[Vec<f64>],
    opts: &SolveOptions,
) -> Result<Atlas, SolveError> {
    const RATIO_BREAK: f64 = 1e6;
    if objectives.is_empty() {
        return Err(SolveError::BadOptions("empty sample path".into()));
    }
    opts.validate()?;
    let first = single_root(find_roots_of(&objectives[0], labels[0].clone(), opts)?)?;
    let mut samples = Vec::with_capacity(objectives.len());
    samples.push(AtlasSample {
        y: labels[0].clone(),
        x: first.x.clone(),
        residual: first.residual,
        stationarity: first.stationarity,
        ratio: 0.0,
        break_flag: false,
        audited: true,
    });

    let mut prev_x = first.x;
    for (k, obj) in objectives.iter().enumerate().skip(1) {
        let dy = sample::dist(&labels[k], &labels[k - 1]);
        // warm start: tight gradient sampling around the previous root, then
        // the usual polish
        let gs = GsOptions {
            stationarity_tol: 1e-6,
            max_iters: 60,
            initial_radius: Some((1e-3 * dy).max(1e-9)),
            seed: sample::mix_seed(opts.seed, 0xA710 + k as u64),
        };
        let warm = minimize_nonsmooth(obj, &prev_x, &gs);
        let (x, rnorm) = polish_root(obj, &warm.x, opts.residual_tol * 1e-2);
        if rnorm > opts.residual_tol {
            return Err(SolveError::NoRootFound {
                hint: format!("continuation lost the root at sample {k}"),
            });
        }
        let ratio = if dy > 0.0 {
            sample::dist(&x, &prev_x) / dy
        } else {
            0.0
        };
        let mut break_flag = ratio > RATIO_BREAK;
        let audited = k % 10 == 0 || k == objectives.len() - 1;
        if audited {
            let set = find_roots_of(obj, labels[k].clone(), opts)?;
            match set.verdict {
                AuditVerdict::Unique => {
                    if sample::dist(&set.roots[0].x, &x) > opts.cluster_tol(&x) {
                        break_flag = true;
                    }
                }
                _ => {
                    break_flag = true;
                }
            }
        }
        let stat = measure_stationarity(
            obj,
            &x,
            opts.stationarity_tol,
            sample::mix_seed(opts.seed, 0xA711 + k as u64),
        );
        samples.push(AtlasSample {
            y: labels[k].clone(),
            x: x.clone(),
            residual: rnorm,
            stationarity: stat.norm,
            ratio,
            break_flag,
            audited,
        });
        prev_x = x;
    }

    let breaks = samples.iter().filter(|s| s.break_flag).count();
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(Atlas {
        samples,
        breaks,
        max_ratio,
    })
}

// --- algebraic equations -------------------------------------------------------

/// Which set of hypotheses backed the uniqueness claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremRoute {
    /// A^T A positive definite and ||F(x)|| <= a ||x|| with a < sqrt(lambda_1).
    SublinearGrowth,
    /// A^T A positive definite and ||F(x)|| >= b ||x|| with b > sqrt(lambda_N).
    SuperlinearGrowth,
    /// Direct coercivity of ||Ax - F(x)|| plus the rank certificate.
    DirectCoercivity,
    /// No hypothesis set was evidenced; uniqueness is audit-only.
    AuditedOnly,
}

impl TheoremRoute {
    pub fn label(&self) -> &'static str {
        match self {
            TheoremRoute::SublinearGrowth => "sublinear-growth",
            TheoremRoute::SuperlinearGrowth => "superlinear-growth",
            TheoremRoute::DirectCoercivity => "direct-coercivity",
            TheoremRoute::AuditedOnly => "audited-only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraicChecklist {
    pub spectral: SpectralReport,
    pub growth: GrowthReport,
    pub rank: RankCertificate,
    pub coercivity: CoercivityReport,
    pub route: TheoremRoute,
}

#[derive(Debug, Clone)]
pub struct AlgebraicSolution {
    pub checklist: AlgebraicChecklist,
    pub root_set: RootSet,
}

/// Hypothesis checklist plus the audited solve of A x = F(x) + xi.
pub fn solve_algebraic(p: &ProblemDef, opts: &SolveOptions) -> Result<AlgebraicSolution, SolveError> {
    let Some(a) = p.matrix_a() else {
        return Err(SolveError::NotAlgebraic);
    };
    let spectral = certify::spectral_report(a);
    let schedule = certify::default_coercivity_schedule();
    let growth = certify::growth_constants(p, &schedule, 64, sample::mix_seed(opts.seed, 0x47))?;
    let region = p.cert_box_or_default();
    let rank = certify::rank_certificate(p, &region, FamilyMode::OuterGlobal, certify::DEFAULT_MAX_DEPTH)?;
    let obj = ResidualObjective::implicit(p, &[]);
    let coercivity = certify::coercivity_probe(
        &obj,
        p.n(),
        &schedule,
        64,
        sample::mix_seed(opts.seed, 0x43),
    )?;

    let rank_ok = rank.is_maximal_rank();
    let coercive = coercivity.verdict == CoercivityVerdict::CoerciveEvidence;
    let route = if spectral.a1_holds && rank_ok && growth.upper_route_applies == Some(true) {
        TheoremRoute::SublinearGrowth
    } else if spectral.a1_holds && rank_ok && growth.lower_route_applies == Some(true) {
        TheoremRoute::SuperlinearGrowth
    } else if rank_ok && coercive {
        TheoremRoute::DirectCoercivity
    } else {
        TheoremRoute::AuditedOnly
    };

    let root_set = find_roots(p, &[], opts)?;
    Ok(AlgebraicSolution {
        checklist: AlgebraicChecklist {
            spectral,
            growth,
            rank,
            coercivity,
            route,
        },
        root_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;

    fn opts() -> SolveOptions {
        SolveOptions::with_seed(42)
    }

    #[test]
    fn linear_implicit_function() {
        let p = parse_problem("n = 1\nm = 1\nbox = [-10,10]x[-10,10]\nF1 = x1 - y1\n").unwrap();
        let r = implicit_eval(&p, &[7.0], &opts()).unwrap();
        assert!((r.x[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_roots() {
        let p = parse_problem("n = 1\nm = 1\nbox = [-3,3]x[-2,2]\nF1 = x1^3 + x1 - y1\n").unwrap();
        let r = implicit_eval(&p, &[0.0], &opts()).unwrap();
        assert!(r.x[0].abs() < 1e-9);
        let r = implicit_eval(&p, &[2.0], &opts()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_well_multiple_roots_and_stationary_nonroot() {
        let p = parse_problem("n = 1\nm = 0\nbox = [-2,2]\nF1 = x1^2 - 1\n").unwrap();
        let set = find_roots(&p, &[], &opts()).unwrap();
        assert_eq!(set.verdict, AuditVerdict::Multiple);
        assert_eq!(set.roots.len(), 2);
        let mut xs: Vec<f64> = set.roots.iter().map(|r| r.x[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 1.0).abs() < 1e-8 && (xs[1] - 1.0).abs() < 1e-8);
        assert_eq!(set.stationary_nonroots.len(), 1);
        let sp = &set.stationary_nonroots[0];
        assert!(sp.x[0].abs() <= 1e-6);
        assert!((sp.residual - 1.0).abs() < 1e-8);
        assert!((sp.phi_value - 0.5).abs() < 1e-8);
        assert!(sp.family_min_sigma <= 1e-6);
        match implicit_eval(&p, &[], &opts()) {
            Err(SolveError::MultipleRoots { roots, .. }) => assert_eq!(roots.len(), 2),
            other => panic!("expected MultipleRoots, got {other:?}"),
        }
    }

    #[test]
    fn invert_fa_by_hand() {
        let p = parse_problem(
            "n = 2\nm = 0\nbox = [-10,10]x[-10,10]\nF1 = x1 + 0.5*abs(x1)\nF2 = x1^3 + x2\n",
        )
        .unwrap();
        let r = invert(&p, &[0.0, 0.0], &opts()).unwrap();
        assert!(sample::norm(&r.x) < 1e-8);
        // x + 0.5|x| = 3 => x = 2; 8 + y = 9 => y = 1
        let r = invert(&p, &[3.0, 9.0], &opts()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn invert_identity() {
        let p = parse_problem("n = 1\nm = 0\nbox = [-10,10]\nF1 = x1\n").unwrap();
        let r = invert(&p, &[4.0], &opts()).unwrap();
        assert!((r.x[0] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn atlas_of_cubic_is_monotone_and_unbroken() {
        let p = parse_problem("n = 1\nm = 1\nbox = [-3,3]x[-2,2]\nF1 = x1^3 + x1 - y1\n").unwrap();
        let ys: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
        let atlas = implicit_atlas(&p, &ys, &opts()).unwrap();
        assert_eq!(atlas.samples.len(), 41);
        assert_eq!(atlas.breaks, 0);
        for w in atlas.samples.windows(2) {
            assert!(w[1].x[0] >= w[0].x[0] - 1e-9, "monotone path");
        }
        assert!(atlas.samples.iter().all(|s| s.residual <= 1e-9));
    }

    #[test]
    fn atlas_of_identity_ratios_one() {
        let p = parse_problem("n = 1\nm = 1\nbox = [-3,3]x[-2,2]\nF1 = x1 - y1\n").unwrap();
        let ys: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let atlas = implicit_atlas(&p, &ys, &opts()).unwrap();
        for s in atlas.samples.iter().skip(1) {
            assert!((s.ratio - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn xi_sweep_atlas_from_origin() {
        let p = parse_problem(
            "n = 2\nm = 0\nA = [[-2, 1], [4, -3]]\nxi = [0, 0]\nbox = [-10,10]x[-10,10]\n\
             F1 = x1^3 + abs(x2)\nF2 = 4*x1 + abs(x2) + x2^3\n",
        )
        .unwrap();
        let xis: Vec<Vec<f64>> = (0..11).map(|i| vec![0.1 * i as f64, 0.0]).collect();
        let atlas = xi_atlas(&p, &xis, &opts()).unwrap();
        assert_eq!(atlas.breaks, 0);
        assert!(sample::norm(&atlas.samples[0].x) <= 1e-8, "path starts at the origin");
        assert!(atlas.max_ratio.is_finite() && atlas.max_ratio < 10.0);
    }

    #[test]
    fn algebraic_trivial_linear() {
        // A = 2I, F = 0, xi = (6, -2): solution (3, -1)
        let p = parse_problem(
            "n = 2\nm = 0\nA = [[2, 0], [0, 2]]\nxi = [6, -2]\nbox = [-10,10]x[-10,10]\n\
             F1 = 0\nF2 = 0\n",
        )
        .unwrap();
        let sol = solve_algebraic(&p, &opts()).unwrap();
        assert_eq!(sol.root_set.verdict, AuditVerdict::Unique);
        let r = &sol.root_set.roots[0];
        assert!((r.x[0] - 3.0).abs() < 1e-9 && (r.x[1] + 1.0).abs() < 1e-9);
        assert!(sol.checklist.rank.is_maximal_rank());
    }
}
