//! Discretized mountain-pass probe: an elastic string of beads between two
//! minimizers, descended perpendicular to the path and reparametrized to
//! uniform spacing, with a climbing refinement of the max bead.
//!
//! The probe gives an upper-bound estimate of the min-max level together
//! with a bundle-certified stationarity measure at the reported point. It is
//! the numerical face of the zero-altitude min-max argument: two distinct
//! roots of a coercive least-squares functional force a third critical point
//! at a positive level, which is impossible under a maximal-rank family.

use crate::expr::ProblemDef;
use crate::objective::{Objective, ResidualObjective, ShiftObjective};
use crate::sample;
use crate::solve::{measure_stationarity, polish_critical_point};
use thiserror::Error;

/// Bead chain between two pinned endpoints.
#[derive(Debug, Clone)]
pub struct PathState {
    pub beads: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub max_value: f64,
    pub argmax: usize,
    pub iterations: usize,
    /// Running max after each iteration; non-increasing by construction.
    pub max_history: Vec<f64>,
    /// Per-iteration snapshots (bead coordinates and values) when history
    /// recording is on; empty otherwise.
    pub history: Vec<Vec<(Vec<f64>, f64)>>,
}

impl PathState {
    fn refresh(&mut self, objective: &dyn Objective) {
        for (v, b) in self.values.iter_mut().zip(&self.beads) {
            *v = objective.value(b);
        }
        let (argmax, max) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, v)| (i, *v))
            .unwrap();
        self.argmax = argmax;
        self.max_value = max;
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.beads.windows(2).map(|w| sample::dist(&w[0], &w[1])).collect()
    }

    fn snapshot(&mut self) {
        self.history.push(
            self.beads
                .iter()
                .zip(&self.values)
                .map(|(b, v)| (b.clone(), *v))
                .collect(),
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleVerdict {
    SaddleFound,
    Degenerate,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct SaddleEstimate {
    pub point: Vec<f64>,
    pub value: f64,
    pub stationarity: f64,
    /// (rho, ring infimum) from the separating-ring search, when one exists.
    pub ring_evidence: Option<(f64, f64)>,
    pub verdict: SaddleVerdict,
    pub path: PathState,
}

#[derive(Debug, Clone)]
pub struct MpassOptions {
    pub stationarity_tol: f64,
    pub cluster_radius: f64,
    pub seed: u64,
    /// Ring radii to probe; defaults to 9 log-spaced radii in
    /// (0.05, 0.95) * ||u2 - u1||.
    pub ring_schedule: Option<Vec<f64>>,
    /// Keep per-iteration bead snapshots for plotting.
    pub record_history: bool,
}

impl Default for MpassOptions {
    fn default() -> Self {
        MpassOptions {
            stationarity_tol: 1e-8,
            cluster_radius: 1e-6,
            seed: 0,
            ring_schedule: None,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpassError {
    #[error("endpoints coincide; the probe needs two distinct points")]
    CoincidentEndpoints,
    #[error("need at least 8 beads, got {0}")]
    TooFewBeads(usize),
    #[error("ring radius {0} outside (0, ||u2 - u1||)")]
    BadRingRadius(f64),
}

/// Estimated infimum of the objective on the sphere ||u - center|| = rho,
/// by sampled directions plus tangential pattern descent.
pub fn ring_infimum(
    objective: &dyn Objective,
    center: &[f64],
    rho: f64,
    samples: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    assert!(rho > 0.0);
    let n = center.len();
    if n == 1 {
        let lo = vec![center[0] - rho];
        let hi = vec![center[0] + rho];
        let (vl, vh) = (objective.value(&lo), objective.value(&hi));
        return if vl <= vh { (vl, lo) } else { (vh, hi) };
    }
    let count = samples.max(16 * n);
    let dirs = sample::directions_with_axes(seed, n, count);
    let mut best = f64::INFINITY;
    let mut best_dir = dirs[0].clone();
    for d in &dirs {
        let pt: Vec<f64> = center.iter().zip(d).map(|(c, di)| c + rho * di).collect();
        let v = objective.value(&pt);
        if v < best {
            best = v;
            best_dir = d.clone();
        }
    }
    let (v, pt) = sphere_pattern_min(objective, center, rho, &best_dir);
    if v < best {
        (v, pt)
    } else {
        (
            best,
            center.iter().zip(&best_dir).map(|(c, d)| c + rho * d).collect(),
        )
    }
}

fn sphere_pattern_min(
    objective: &dyn Objective,
    center: &[f64],
    rho: f64,
    dir0: &[f64],
) -> (f64, Vec<f64>) {
    let n = center.len();
    let point = |dir: &[f64]| -> Vec<f64> {
        center.iter().zip(dir).map(|(c, d)| c + rho * d).collect()
    };
    let mut dir = dir0.to_vec();
    let mut best = objective.value(&point(&dir));
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
                let v = objective.value(&point(&cand));
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

/// First radius in the schedule whose ring infimum strictly exceeds both
/// endpoint values; evidence for the separating-ring hypothesis.
pub fn find_mountain_ring(
    objective: &dyn Objective,
    u1: &[f64],
    u2: &[f64],
    schedule: &[f64],
    seed: u64,
) -> Result<Option<(f64, f64)>, MpassError> {
    let gap = sample::dist(u1, u2);
    if gap == 0.0 {
        return Err(MpassError::CoincidentEndpoints);
    }
    if let Some(&bad) = schedule.iter().find(|&&r| r <= 0.0 || r >= gap) {
        return Err(MpassError::BadRingRadius(bad));
    }
    let top = objective.value(u1).max(objective.value(u2));
    let eps = 1e-12 * (1.0 + top.abs());
    for &rho in schedule {
        let (inf, _) = ring_infimum(objective, u1, rho, 16 * u1.len(), seed);
        if inf > top + eps {
            return Ok(Some((rho, inf)));
        }
    }
    Ok(None)
}

pub fn default_ring_schedule(u1: &[f64], u2: &[f64]) -> Vec<f64> {
    let gap = sample::dist(u1, u2);
    let (lo, hi) = (0.05 * gap, 0.95 * gap);
    (0..9)
        .map(|i| lo * (hi / lo).powf(i as f64 / 8.0))
        .collect()
}

/// Elastic-string min-max search between two points, followed by a climbing
/// polish of the max bead. K + 1 beads start on the straight segment;
/// interior beads take bundle-descent steps projected orthogonally to the
/// path tangent, then the chain is resampled to uniform arc length whenever
/// that does not raise the running max.
pub fn mountain_pass(
    objective: &dyn Objective,
    u1: &[f64],
    u2: &[f64],
    k_beads: usize,
    max_iters: usize,
    opts: &MpassOptions,
) -> Result<SaddleEstimate, MpassError> {
    if sample::dist(u1, u2) == 0.0 {
        return Err(MpassError::CoincidentEndpoints);
    }
    if k_beads < 8 {
        return Err(MpassError::TooFewBeads(k_beads));
    }
    let n = u1.len();
    let beads: Vec<Vec<f64>> = (0..=k_beads)
        .map(|i| {
            let t = i as f64 / k_beads as f64;
            u1.iter().zip(u2).map(|(a, b)| a + t * (b - a)).collect()
        })
        .collect();
    let mut path = PathState {
        values: vec![0.0; beads.len()],
        beads,
        max_value: 0.0,
        argmax: 0,
        iterations: 0,
        max_history: Vec::new(),
        history: Vec::new(),
    };
    path.refresh(objective);
    path.max_history.push(path.max_value);
    if opts.record_history {
        path.snapshot();
    }

    let endpoint_top = path.values[0].max(path.values[k_beads]);
    let mut stall = 0usize;
    for iter in 0..max_iters {
        path.iterations = iter + 1;
        let spacing = sample::dist(u1, u2) / k_beads as f64;
        let radius = (0.05 * spacing).max(1e-12);
        let prev_max = path.max_value;

        // perpendicular bundle-descent move per interior bead
        for i in 1..k_beads {
            let tangent = {
                let mut t: Vec<f64> = path.beads[i + 1]
                    .iter()
                    .zip(&path.beads[i - 1])
                    .map(|(a, b)| a - b)
                    .collect();
                let nrm = sample::norm(&t);
                if nrm > 0.0 {
                    for c in t.iter_mut() {
                        *c /= nrm;
                    }
                }
                t
            };
            let m = measure_stationarity(
                objective,
                &path.beads[i],
                radius,
                sample::mix_seed(opts.seed, (iter * 1000 + i) as u64),
            );
            let v = &m.min_norm_element;
            if !v.iter().all(|c| c.is_finite()) {
                continue;
            }
            let along: f64 = v.iter().zip(&tangent).map(|(a, b)| a * b).sum();
            let perp: Vec<f64> = v
                .iter()
                .zip(&tangent)
                .map(|(a, t)| a - along * t)
                .collect();
            let pnorm = sample::norm(&perp);
            if pnorm <= 1e-14 {
                continue;
            }
            // Armijo along the perpendicular descent direction, step capped
            // at half the spacing to keep the chain coherent
            let dir: Vec<f64> = perp.iter().map(|c| -c / pnorm).collect();
            let f0 = path.values[i];
            let mut t = (0.5 * spacing).min(1.0);
            for _ in 0..30 {
                let cand: Vec<f64> = path.beads[i]
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| a + t * d)
                    .collect();
                let fv = objective.value(&cand);
                if fv <= f0 - 1e-4 * t * pnorm {
                    path.beads[i] = cand;
                    path.values[i] = fv;
                    break;
                }
                t *= 0.5;
                if t < 1e-14 * (1.0 + spacing) {
                    break;
                }
            }
        }
        path.refresh(objective);

        // reparametrize unless interpolation would raise the max
        let resampled = resample_uniform(&path.beads);
        let res_values: Vec<f64> = resampled.iter().map(|b| objective.value(b)).collect();
        let res_max = res_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if res_max <= prev_max + 1e-15 * (1.0 + prev_max.abs()) {
            path.beads = resampled;
            path.values = res_values;
            path.refresh(objective);
        }
        path.max_history.push(path.max_value);
        if opts.record_history {
            path.snapshot();
        }

        let drop = prev_max - path.max_value;
        if drop.abs() <= 1e-14 * (1.0 + prev_max.abs()) {
            stall += 1;
            if stall >= 5 {
                break;
            }
        } else {
            stall = 0;
        }
    }

    // climbing refinement: polish the max bead to a genuine critical point
    let (argmax, _) = path
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut point = path.beads[argmax].clone();
    let mut value = path.values[argmax];
    if argmax > 0 && argmax < k_beads {
        let (cand, _gnorm) = polish_critical_point(objective, &point, 1e-13);
        let moved = sample::dist(&cand, &point);
        let sane = moved <= 4.0 * sample::dist(u1, u2) / k_beads as f64;
        if sane && cand.iter().all(|c| c.is_finite()) {
            let cv = objective.value(&cand);
            if cv <= path.max_history[0] + 1e-12 {
                point = cand;
                value = cv;
            }
        }
    }

    let stat = measure_stationarity(
        objective,
        &point,
        opts.stationarity_tol,
        sample::mix_seed(opts.seed, 0x53414444),
    );
    let cluster_tol = opts.cluster_radius * (1.0 + sample::norm(&point));
    let distinct =
        sample::dist(&point, u1) > cluster_tol && sample::dist(&point, u2) > cluster_tol;
    let verdict = if value <= endpoint_top + 1e-12 {
        SaddleVerdict::Degenerate
    } else if stat.norm <= opts.stationarity_tol && distinct {
        SaddleVerdict::SaddleFound
    } else {
        SaddleVerdict::BudgetExhausted
    };

    let ring_schedule = opts
        .ring_schedule
        .clone()
        .unwrap_or_else(|| default_ring_schedule(u1, u2));
    let ring_evidence = find_mountain_ring(objective, u1, u2, &ring_schedule, opts.seed)?;

    let _ = n;
    Ok(SaddleEstimate {
        point,
        value,
        stationarity: stat.norm,
        ring_evidence,
        verdict,
        path,
    })
}

/// Resample the polyline at uniform arc length, endpoints pinned.
fn resample_uniform(beads: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = beads.len() - 1;
    let mut cum = vec![0.0];
    for w in beads.windows(2) {
        cum.push(cum.last().unwrap() + sample::dist(&w[0], &w[1]));
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return beads.to_vec();
    }
    let mut out = Vec::with_capacity(beads.len());
    out.push(beads[0].clone());
    let mut seg = 0usize;
    for i in 1..k {
        let target = total * i as f64 / k as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(
            beads[seg]
                .iter()
                .zip(&beads[seg + 1])
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        );
    }
    out.push(beads[k].clone());
    out
}

/// The uniqueness probe of the global implicit-function argument: shift the
/// residual objective so the two roots sit at 0 and e = x1 - x2, then run
/// the mountain pass between them on psi(x) = 1/2 ||F(x + x2, y)||^2.
pub fn uniqueness_probe(
    p: &ProblemDef,
    y: &[f64],
    root1: &[f64],
    root2: &[f64],
    k_beads: usize,
    max_iters: usize,
    opts: &MpassOptions,
) -> Result<SaddleEstimate, MpassError> {
    let inner = ResidualObjective::implicit(p, y);
    let shifted = ShiftObjective::new(inner, root2.to_vec());
    let e: Vec<f64> = root1.iter().zip(root2).map(|(a, b)| a - b).collect();
    let zero = vec![0.0; p.n()];
    mountain_pass(&shifted, &zero, &e, k_beads, max_iters, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{FnObjective, GradObjective};

    fn two_well_1d() -> impl Objective {
        GradObjective::new(
            1,
            |x: &[f64]| {
                let t = x[0] * x[0] - 1.0;
                0.5 * t * t
            },
            |x| vec![2.0 * x[0] * (x[0] * x[0] - 1.0)],
        )
    }

    #[test]
    fn ring_on_quadratic_sphere() {
        let obj = FnObjective::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let (inf, _) = ring_infimum(&obj, &[0.0, 0.0], 1.0, 32, 3);
        assert!((inf - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ring_two_point_sphere_in_1d() {
        let obj = two_well_1d();
        // shifted convention: endpoints at -1 and 1, ring around -1
        let (inf, argmin) = ring_infimum(&obj, &[-1.0], 0.5, 16, 3);
        let left = obj.value(&[-1.5]);
        let right = obj.value(&[-0.5]);
        assert!((inf - left.min(right)).abs() < 1e-12);
        assert_eq!(argmin.len(), 1);
    }

    #[test]
    fn mountain_ring_found_for_two_well() {
        let obj = two_well_1d();
        let sched = default_ring_schedule(&[-1.0], &[1.0]);
        let found = find_mountain_ring(&obj, &[-1.0], &[1.0], &sched, 3).unwrap();
        let (rho, inf) = found.expect("two-well has a separating ring");
        assert!(rho > 0.0 && rho < 2.0);
        assert!(inf > 0.0);
    }

    #[test]
    fn ring_none_when_endpoint_dominates() {
        let obj = FnObjective::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        // J(u2) is huge, every ring infimum sits below it
        let found =
            find_mountain_ring(&obj, &[0.0, 0.0], &[10.0, 0.0], &[1.0, 2.0, 5.0], 3).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn saddle_of_1d_two_well() {
        let obj = two_well_1d();
        let est = mountain_pass(&obj, &[-1.0], &[1.0], 16, 200, &MpassOptions::default()).unwrap();
        assert_eq!(est.verdict, SaddleVerdict::SaddleFound);
        assert!(est.point[0].abs() <= 1e-4, "saddle at {}", est.point[0]);
        assert!((est.value - 0.5).abs() <= 1e-4, "level {}", est.value);
        assert!(est.stationarity <= 1e-8);
        for w in est.path.max_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-13, "max must not increase");
        }
    }

    #[test]
    fn saddle_of_2d_two_well() {
        let obj = GradObjective::new(
            2,
            |x: &[f64]| {
                let t = x[0] * x[0] - 1.0;
                0.5 * (t * t + x[1] * x[1])
            },
            |x| {
                vec![
                    2.0 * x[0] * (x[0] * x[0] - 1.0),
                    x[1],
                ]
            },
        );
        let est = mountain_pass(&obj, &[-1.0, 0.0], &[1.0, 0.0], 32, 200, &MpassOptions::default())
            .unwrap();
        assert_eq!(est.verdict, SaddleVerdict::SaddleFound);
        assert!(sample::norm(&est.point) <= 1e-3);
        assert!((est.value - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn curved_valley_bends_the_string() {
        // saddle at (0, 0.3) with value 1/2; the straight segment starts higher
        let obj = FnObjective::new(2, |x: &[f64]| {
            let t = x[0] * x[0] - 1.0;
            let w = x[1] - 0.3 * (1.0 - x[0] * x[0]);
            0.5 * (t * t + w * w)
        });
        let est = mountain_pass(&obj, &[-1.0, 0.0], &[1.0, 0.0], 32, 300, &MpassOptions::default())
            .unwrap();
        assert_eq!(est.verdict, SaddleVerdict::SaddleFound);
        assert!((est.value - 0.5).abs() <= 1e-3, "level {}", est.value);
        assert!((est.point[0]).abs() <= 1e-2 && (est.point[1] - 0.3).abs() <= 1e-2);
    }

    #[test]
    fn convex_objective_is_degenerate() {
        let obj = FnObjective::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let est = mountain_pass(&obj, &[0.0, 0.0], &[1.0, 0.0], 16, 100, &MpassOptions::default())
            .unwrap();
        assert_eq!(est.verdict, SaddleVerdict::Degenerate);
    }

    #[test]
    fn swap_symmetry() {
        let obj = two_well_1d();
        let a = mountain_pass(&obj, &[-1.0], &[1.0], 16, 200, &MpassOptions::default()).unwrap();
        let b = mountain_pass(&obj, &[1.0], &[-1.0], 16, 200, &MpassOptions::default()).unwrap();
        assert!((a.value - b.value).abs() <= 1e-6);
        assert!(sample::dist(&a.point, &b.point) <= 1e-6 * (1.0 + sample::norm(&a.point)));
    }

    #[test]
    fn spacing_stays_near_uniform() {
        let obj = two_well_1d();
        let est = mountain_pass(&obj, &[-1.0], &[1.0], 16, 60, &MpassOptions::default()).unwrap();
        let spacings = est.path.spacings();
        let uniform = 2.0 / 16.0;
        for s in spacings {
            assert!(s >= 0.5 * uniform - 1e-9 && s <= 2.0 * uniform + 1e-9);
        }
    }
}
