//! Oracle tests: independent computations (bisection, closed forms, dense
//! grids, exact ellipse geometry) frozen against the solver/probe outputs.

use implifit::certify::{self, CoercivityVerdict};
use implifit::expr::{parse_problem, ProblemDef};
use implifit::linalg;
use implifit::mpass::{self, MpassOptions};
use implifit::sample;
use implifit::solve::{self, AuditVerdict, SolveOptions};
use implifit::theorems;
use nalgebra::dmatrix;

/// Sign-change scan plus bisection; independent of the solver path.
fn bisect_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let steps = ((hi - lo) / pitch).ceil() as usize;
    let mut prev_x = lo;
    let mut prev_f = f(lo);
    for i in 1..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let fx = f(x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f * fx < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            let (mut fa, _) = (prev_f, fx);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = fx;
    }
    if prev_f == 0.0 {
        roots.push(prev_x);
    }
    roots
}

fn cubic() -> ProblemDef {
    parse_problem("n = 1\nm = 1\nbox = [-3,3]x[-2,2]\nF1 = x1^3 + x1 - y1\n").unwrap()
}

#[test]
fn atlas_matches_bisection_oracle() {
    let p = cubic();
    let ys: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
    let atlas = solve::implicit_atlas(&p, &ys, &SolveOptions::with_seed(9)).unwrap();
    for s in &atlas.samples {
        let y = s.y[0];
        let oracle = bisect_roots(&|x| x.powi(3) + x - y, -3.0, 3.0, 1e-3);
        assert_eq!(oracle.len(), 1, "cubic is strictly increasing");
        assert!(
            (s.x[0] - oracle[0]).abs() <= 1e-6,
            "y={y}: atlas {} vs bisection {}",
            s.x[0],
            oracle[0]
        );
    }
}

#[test]
fn atlas_consistency_full_resolve() {
    // re-solving an atlas sample from scratch lands on the same root
    let p = cubic();
    let ys: Vec<Vec<f64>> = (0..11).map(|i| vec![-1.0 + 0.2 * i as f64]).collect();
    let opts = SolveOptions::with_seed(3);
    let atlas = solve::implicit_atlas(&p, &ys, &opts).unwrap();
    for s in atlas.samples.iter().step_by(3) {
        let fresh = solve::implicit_eval(&p, &s.y, &opts).unwrap();
        assert!(sample::dist(&fresh.x, &s.x) <= 1e-6 * (1.0 + sample::norm(&s.x)));
    }
}

#[test]
fn twowell_root_set_matches_dense_grid() {
    let p = parse_problem("n = 1\nm = 0\nbox = [-2,2]\nF1 = x1^2 - 1\n").unwrap();
    let set = solve::find_roots(&p, &[], &SolveOptions::with_seed(11)).unwrap();
    let oracle = bisect_roots(&|x| x * x - 1.0, -2.0, 2.0, 1e-3);
    assert_eq!(set.roots.len(), oracle.len());
    let mut xs: Vec<f64> = set.roots.iter().map(|r| r.x[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (found, want) in xs.iter().zip(&oracle) {
        assert!((found - want).abs() <= 1e-6);
    }
}

#[test]
fn example1_unique_root_matches_triangular_oracle() {
    // G2 depends only on x2: solve it by bisection, then G1 given x2
    let p = parse_problem(
        "n = 2\nm = 0\nA = [[-2, 1], [4, -3]]\nxi = [0, 0]\nbox = [-10,10]x[-10,10]\n\
         F1 = x1^3 + abs(x2)\nF2 = 4*x1 + abs(x2) + x2^3\n",
    )
    .unwrap();
    let g2 = |y: f64| -3.0 * y - y.abs() - y.powi(3);
    let ys = bisect_roots(&g2, -10.0, 10.0, 1e-3);
    assert_eq!(ys.len(), 1);
    let ystar = ys[0];
    let g1 = |x: f64| -2.0 * x + ystar - x.powi(3) - ystar.abs();
    let xs = bisect_roots(&g1, -10.0, 10.0, 1e-3);
    assert_eq!(xs.len(), 1);

    let set = solve::find_roots(&p, &[], &SolveOptions::with_seed(21)).unwrap();
    assert_eq!(set.verdict, AuditVerdict::Unique);
    let r = &set.roots[0];
    assert!((r.x[0] - xs[0]).abs() <= 1e-6 && (r.x[1] - ystar).abs() <= 1e-6);
    assert!(sample::norm(&r.x) <= 1e-8, "root should be the origin");
}

#[test]
fn example2_corollary_route() {
    let p = parse_problem(
        "n = 2\nm = 0\nA = [[-1.5, 4], [5, -13.333333333333334]]\nxi = [0, 0]\nbox = [-5,5]x[-5,5]\n\
         F1 = x1^5 + abs(x2)\nF2 = 4*x1 + abs(x2) + x2^5\n",
    )
    .unwrap();
    let sol = solve::solve_algebraic(&p, &SolveOptions::with_seed(5)).unwrap();
    assert!(!sol.checklist.spectral.a1_holds);
    assert!(sol.checklist.spectral.det_a.abs() <= 1e-12);
    assert!(sol.checklist.rank.is_maximal_rank());
    assert_eq!(
        sol.checklist.coercivity.verdict,
        CoercivityVerdict::CoerciveEvidence
    );
    assert_eq!(sol.checklist.route, solve::TheoremRoute::DirectCoercivity);
    assert_eq!(sol.root_set.verdict, AuditVerdict::Unique);
    assert!(sample::norm(&sol.root_set.roots[0].x) <= 1e-8);
    // paper-derived bound: (a-4)(a-1) peaks at 10 on [-1,1], base term >= 20
    assert!(sol.checklist.rank.det_range.lo >= 9.9);
}

#[test]
fn mountain_pass_matches_analytic_critical_set() {
    // J = 1/2 (x^2-1)^2 has critical points {-1, 0, 1} at levels {0, 1/2, 0};
    // dense-grid scan of the interior max confirms the saddle level
    let obj = implifit::objective::GradObjective::new(
        1,
        |x: &[f64]| {
            let t = x[0] * x[0] - 1.0;
            0.5 * t * t
        },
        |x| vec![2.0 * x[0] * (x[0] * x[0] - 1.0)],
    );
    let mut grid_max: f64 = f64::NEG_INFINITY;
    for i in 0..=4000 {
        let x = -1.0 + 2.0 * i as f64 / 4000.0;
        let t: f64 = x * x - 1.0;
        grid_max = grid_max.max(0.5 * t * t);
    }
    assert!((grid_max - 0.5).abs() < 1e-9, "oracle max {grid_max}");
    let est = mpass::mountain_pass(&obj, &[-1.0], &[1.0], 16, 200, &MpassOptions::default()).unwrap();
    assert!((est.value - grid_max).abs() <= 1e-6);
}

#[test]
fn sur_linear_map_ellipse_oracle() {
    // image of the unit circle under A is an ellipse with semi-axes the
    // singular values; Sur equals t * sigma_min exactly
    let p = parse_problem("n = 2\nm = 0\nF1 = 2*x1 + x2\nF2 = x1 - x2\n").unwrap();
    let a = dmatrix![2.0, 1.0; 1.0, -1.0];
    let smin = linalg::sigma_min(&a);
    for t in [0.5, 1.0, 2.0] {
        let est = theorems::ioffe_sur(&p, &[0.3, 0.1], t, 1440, 1).unwrap();
        assert_eq!(est.winding.abs(), 1);
        assert!(
            (est.value - t * smin).abs() / (t * smin) <= 0.02,
            "t={t}: {} vs {}",
            est.value,
            t * smin
        );
    }
}

#[test]
fn profile_integral_stable_under_grid_refinement() {
    let p = parse_problem(
        "n = 2\nm = 0\nbox = [-10,10]x[-10,10]\nF1 = x1 + 0.5*abs(x1)\nF2 = x1^3 + x2\n",
    )
    .unwrap();
    let coarse_grid = theorems::default_t_grid();
    let fine_grid: Vec<f64> = (0..48)
        .map(|i| 0.5 * (200.0_f64).powf(i as f64 / 47.0))
        .collect();
    let coarse = theorems::pourciau_m(&p, &coarse_grid, 96, 2).unwrap();
    let fine = theorems::pourciau_m(&p, &fine_grid, 96, 2).unwrap();
    let ic = *coarse.cumulative.last().unwrap();
    let iff = *fine.cumulative.last().unwrap();
    assert!(
        (ic - iff).abs() / iff.max(1e-300) <= 0.05,
        "coarse {ic} vs fine {iff}"
    );
}

#[test]
fn coercivity_fixture_example2_lower_bound_form() {
    // the map norm dominates sqrt(x^10 + y^10) minus linear terms, which
    // grows; the probe must see that growth on the standard schedule
    let p = parse_problem(
        "n = 2\nm = 0\nA = [[-1.5, 4], [5, -13.333333333333334]]\nxi = [0, 0]\n\
         F1 = x1^5 + abs(x2)\nF2 = 4*x1 + abs(x2) + x2^5\n",
    )
    .unwrap();
    let obj = implifit::objective::ResidualObjective::implicit(&p, &[]);
    let rep = certify::coercivity_probe(
        &obj,
        2,
        &certify::default_coercivity_schedule(),
        64,
        7,
    )
    .unwrap();
    assert_eq!(rep.verdict, CoercivityVerdict::CoerciveEvidence);
    // phi ~ r^10 at the far end of the schedule
    assert!(rep.fitted_exponent > 5.0);
}

#[test]
fn theorem_contrapositive_never_contradicts() {
    // (rank certificate holds on box) and (two roots in box) and
    // (saddle with positive level) can never hold together
    struct Case {
        text: &'static str,
    }
    for case in [
        Case {
            text: "n = 1\nm = 0\nbox = [-2,2]\nF1 = x1^2 - 1\n",
        },
        Case {
            text: "n = 2\nm = 0\nbox = [-10,10]x[-10,10]\nF1 = x1 + 0.5*abs(x1)\nF2 = x1^3 + x2\n",
        },
    ] {
        let p = parse_problem(case.text).unwrap();
        let region = p.cert_box_or_default();
        let cert = certify::rank_certificate(
            &p,
            &region,
            implifit::clarke::FamilyMode::OuterGlobal,
            certify::DEFAULT_MAX_DEPTH,
        )
        .unwrap();
        let set = solve::find_roots(&p, &[], &SolveOptions::with_seed(31)).unwrap();
        let two_roots = set.roots.len() >= 2;
        let saddle_positive = if two_roots {
            let est = mpass::uniqueness_probe(
                &p,
                &[],
                &set.roots[0].x,
                &set.roots[1].x,
                32,
                200,
                &MpassOptions::default(),
            )
            .unwrap();
            est.verdict == mpass::SaddleVerdict::SaddleFound && est.value > 0.0
        } else {
            false
        };
        assert!(
            !(cert.is_maximal_rank() && two_roots && saddle_positive),
            "fixture {:?} contradicts the uniqueness argument",
            p.name
        );
    }
}
