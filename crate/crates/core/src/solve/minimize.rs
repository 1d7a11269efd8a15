//! Gradient-sampling descent for locally Lipschitz objectives, plus damped
//! least-squares polishers for residual roots and critical points.
//!
//! Gradient sampling is the globalizer and the stationarity certifier: its
//! bundles work at kinks where classical descent stalls. The polishers give
//! the quadratic local tail that plain sampling descent lacks; every polished
//! point is re-verified by an independent bundle measurement afterwards.

use crate::clarke::{self, StationarityMeasure};
use crate::objective::{central_difference_gradient, Objective, ResidualObjective};
use crate::sample;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub stationarity: StationarityMeasure,
    pub converged: bool,
    pub iterations: usize,
}

pub struct GsOptions {
    pub stationarity_tol: f64,
    pub max_iters: usize,
    pub initial_radius: Option<f64>,
    pub seed: u64,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            stationarity_tol: 1e-8,
            max_iters: 400,
            initial_radius: None,
            seed: 0,
        }
    }
}

/// Gradient-sampling descent: build a bundle, step against its min-norm
/// element with Armijo backtracking (c = 1e-4, halving, with doubling
/// expansion while the decrease keeps improving), shrink the sampling radius
/// once the min-norm falls below it, stop when both the stationarity measure
/// and the radius are below tolerance.
pub fn minimize_nonsmooth(objective: &dyn Objective, x0: &[f64], opts: &GsOptions) -> MinimizeResult {
    let n = objective.dim();
    assert_eq!(x0.len(), n);
    let k = clarke::default_bundle_size(n);
    let eps = opts.stationarity_tol;
    let mut u = x0.to_vec();
    let mut fu = objective.value(&u);
    let mut radius = opts
        .initial_radius
        .unwrap_or_else(|| 0.1 * (1.0 + sample::norm(x0)));
    let mut last_measure = StationarityMeasure {
        min_norm_element: vec![f64::INFINITY; n],
        norm: f64::INFINITY,
        coefficients: vec![],
        iterations: 0,
        converged: false,
    };

    for iter in 0..opts.max_iters {
        let bundle = match clarke::sample_gradients(
            objective,
            &u,
            radius,
            k,
            sample::mix_seed(opts.seed, iter as u64),
        ) {
            Ok(b) => b,
            Err(_) => {
                radius *= 0.5;
                continue;
            }
        };
        let measure = match clarke::min_norm_element(&bundle, 1e-10) {
            Ok(m) => m,
            Err(_) => break,
        };
        let vnorm = measure.norm;
        last_measure = measure;

        if vnorm <= eps && radius <= eps {
            return MinimizeResult {
                x: u,
                value: fu,
                stationarity: last_measure,
                converged: true,
                iterations: iter,
            };
        }
        if vnorm <= radius {
            radius = (radius * 0.5).max(eps * 0.5);
            continue;
        }

        let dir: Vec<f64> = last_measure
            .min_norm_element
            .iter()
            .map(|g| -g / vnorm)
            .collect();
        match line_search(objective, &u, fu, &dir, vnorm) {
            Some((t, fnew)) => {
                for (ui, di) in u.iter_mut().zip(&dir) {
                    *ui += t * di;
                }
                fu = fnew;
            }
            None => {
                // pinched at a kink; resolve it with a tighter bundle
                radius = (radius * 0.5).max(eps * 0.5);
            }
        }
    }

    MinimizeResult {
        x: u,
        value: fu,
        stationarity: last_measure,
        converged: false,
        iterations: opts.max_iters,
    }
}

/// Armijo with doubling expansion; returns (step, new value).
fn line_search(
    objective: &dyn Objective,
    u: &[f64],
    fu: f64,
    dir: &[f64],
    vnorm: f64,
) -> Option<(f64, f64)> {
    const C: f64 = 1e-4;
    let probe = |t: f64| -> f64 {
        let pt: Vec<f64> = u.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        objective.value(&pt)
    };
    let ok = |t: f64, ft: f64| ft <= fu - C * t * vnorm;
    let mut t = 1.0;
    let mut ft = probe(t);
    if ok(t, ft) {
        for _ in 0..40 {
            let t2 = 2.0 * t;
            let ft2 = probe(t2);
            if ok(t2, ft2) && ft2 < ft {
                t = t2;
                ft = ft2;
            } else {
                break;
            }
        }
        return Some((t, ft));
    }
    let tmin = 1e-16 * (1.0 + sample::norm(u));
    while t > tmin {
        t *= 0.5;
        ft = probe(t);
        if ok(t, ft) {
            return Some((t, ft));
        }
    }
    None
}

/// Levenberg-Marquardt on the residual with the smooth-selection Jacobian.
/// Quadratic near a root with a nonsingular branch Jacobian; returns the
/// final point and residual norm.
pub fn polish_root(obj: &ResidualObjective, x0: &[f64], target_rnorm: f64) -> (Vec<f64>, f64) {
    let n = obj.dim();
    let mut x = DVector::from_column_slice(x0);
    let mut r = match obj.residual(x.as_slice()) {
        Ok(r) => DVector::from_vec(r),
        Err(_) => return (x0.to_vec(), f64::INFINITY),
    };
    let mut rnorm = r.norm();
    let mut lambda = 1e-10;
    for _ in 0..80 {
        if rnorm <= target_rnorm {
            break;
        }
        let j = match obj.residual_jacobian(x.as_slice()) {
            Ok(j) => j,
            Err(_) => break,
        };
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &r;
        let scale = jtj.diagonal().amax().max(1e-300);
        let mut accepted = false;
        for _ in 0..25 {
            let damped = &jtj + DMatrix::identity(n, n) * (lambda * scale);
            let Some(step) = damped.lu().solve(&(-&jtr)) else {
                lambda = (lambda * 10.0).min(1e10);
                continue;
            };
            let cand = &x + &step;
            match obj.residual(cand.as_slice()) {
                Ok(rc) => {
                    let rc = DVector::from_vec(rc);
                    let cnorm = rc.norm();
                    if cnorm < rnorm {
                        x = cand;
                        r = rc;
                        rnorm = cnorm;
                        lambda = (lambda * 0.25).max(1e-14);
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            lambda = (lambda * 10.0).min(1e10);
        }
        if !accepted {
            break;
        }
    }
    (x.as_slice().to_vec(), rnorm)
}

/// Polish toward a critical point of the objective by damped least squares on
/// its gradient (Jacobian by central differences). Used for the stationary
/// sweep and the saddle refinement; the returned point still has to pass the
/// bundle stationarity check to count.
pub fn polish_critical_point(
    objective: &dyn Objective,
    x0: &[f64],
    target_gnorm: f64,
) -> (Vec<f64>, f64) {
    let n = objective.dim();
    let g_of = |x: &[f64]| DVector::from_vec(objective.gradient(x));
    let mut x = DVector::from_column_slice(x0);
    let mut g = g_of(x.as_slice());
    let mut gnorm = g.norm();
    let mut lambda = 1e-8;
    for _ in 0..60 {
        if gnorm <= target_gnorm || !gnorm.is_finite() {
            break;
        }
        // FD Jacobian of the gradient field
        let mut jg = DMatrix::zeros(n, n);
        for d in 0..n {
            let h = 1e-6 * (1.0 + x[d].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[d] += h;
            xm[d] -= h;
            let gp = g_of(xp.as_slice());
            let gm = g_of(xm.as_slice());
            for row in 0..n {
                jg[(row, d)] = (gp[row] - gm[row]) / (2.0 * h);
            }
        }
        let jtj = jg.transpose() * &jg;
        let jtg = jg.transpose() * &g;
        let scale = jtj.diagonal().amax().max(1e-300);
        let mut accepted = false;
        for _ in 0..25 {
            let damped = &jtj + DMatrix::identity(n, n) * (lambda * scale);
            let Some(step) = damped.lu().solve(&(-&jtg)) else {
                lambda = (lambda * 10.0).min(1e10);
                continue;
            };
            let cand = &x + &step;
            let gc = g_of(cand.as_slice());
            let cnorm = gc.norm();
            if cnorm < gnorm {
                x = cand;
                g = gc;
                gnorm = cnorm;
                lambda = (lambda * 0.25).max(1e-12);
                accepted = true;
                break;
            }
            lambda = (lambda * 10.0).min(1e10);
        }
        if !accepted {
            break;
        }
    }
    (x.as_slice().to_vec(), gnorm)
}

/// Bundle stationarity at a fixed point, measured at the given radius.
/// The point's own selection gradient joins the bundle, which sharpens the
/// measure at polished roots where that gradient is already near zero.
pub fn measure_stationarity(
    objective: &dyn Objective,
    x: &[f64],
    radius: f64,
    seed: u64,
) -> StationarityMeasure {
    let k = clarke::default_bundle_size(objective.dim());
    match clarke::sample_gradients(objective, x, radius, k, seed).and_then(|mut b| {
        let g = objective.gradient(x);
        if g.iter().all(|v| v.is_finite()) {
            b.values.push(objective.value(x));
            b.gradients.push(g);
        }
        clarke::min_norm_element(&b, 1e-10)
    }) {
        Ok(m) => m,
        Err(_) => StationarityMeasure {
            min_norm_element: central_difference_gradient(|p| objective.value(p), x),
            norm: f64::INFINITY,
            coefficients: vec![],
            iterations: 0,
            converged: false,
        },
    }
}
