//! Text rendering of certificates, checklists, and profiles.
//!
//! Report files have a header block (`key: value` lines), a verdict line,
//! and an evidence table as an embedded CSV section. CSV payloads use CRLF
//! line endings and `{:?}` float formatting, so identical runs produce
//! byte-identical files.

use crate::certify::{CoercivityReport, CoercivityVerdict, RankCertificate, RankVerdict, SpectralReport};
use crate::clarke::FamilyMode;
use crate::solve::{AlgebraicChecklist, Atlas, AuditVerdict, RootSet};
use crate::theorems::{ComparisonReport, ConditionProfile, IntegralVerdict};
use std::fmt::Write;

pub const CSV_EOL: &str = "\r\n";

fn fnum(v: f64) -> String {
    format!("{v:?}")
}

fn region_str(region: &[(f64, f64)]) -> String {
    region
        .iter()
        .map(|(lo, hi)| format!("[{lo:?},{hi:?}]"))
        .collect::<Vec<_>>()
        .join("x")
}

fn mode_str(mode: FamilyMode) -> &'static str {
    match mode {
        FamilyMode::Pointwise => "pointwise",
        FamilyMode::OuterGlobal => "outer-global",
    }
}

pub fn rank_verdict_str(v: &RankVerdict) -> &'static str {
    match v {
        RankVerdict::MaximalRank => "maximal-rank",
        RankVerdict::RankDeficientWitness { .. } => "rank-deficient-witness",
        RankVerdict::Inconclusive { .. } => "inconclusive",
    }
}

pub fn coercivity_verdict_str(v: CoercivityVerdict) -> &'static str {
    match v {
        CoercivityVerdict::CoerciveEvidence => "coercive-evidence",
        CoercivityVerdict::NonCoerciveWitness => "non-coercive-witness",
        CoercivityVerdict::Inconclusive => "inconclusive",
    }
}

pub fn integral_verdict_str(v: IntegralVerdict) -> &'static str {
    match v {
        IntegralVerdict::DivergesLikely => "diverges-likely",
        IntegralVerdict::ConvergesLikely => "converges-likely",
        IntegralVerdict::Inconclusive => "inconclusive",
    }
}

pub fn rank_report(cert: &RankCertificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "report: rank-certificate");
    let _ = writeln!(out, "problem: {}", cert.problem);
    let _ = writeln!(out, "mode: {}", mode_str(cert.mode));
    let _ = writeln!(out, "region: {}", region_str(&cert.region));
    let _ = writeln!(out, "verdict: {}", rank_verdict_str(&cert.verdict));
    let _ = writeln!(
        out,
        "det-range: [{}, {}]",
        fnum(cert.det_range.lo),
        fnum(cert.det_range.hi)
    );
    let _ = writeln!(out, "subdivisions: {}", cert.subdivisions);
    match &cert.verdict {
        RankVerdict::RankDeficientWitness { point, parameters, det } => {
            let _ = writeln!(
                out,
                "witness: point=({}) t=({}) det={}",
                point.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", "),
                parameters.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", "),
                fnum(*det)
            );
        }
        RankVerdict::Inconclusive { leaf, det } => {
            let _ = writeln!(
                out,
                "offending-leaf: {} det=[{}, {}]",
                region_str(leaf),
                fnum(det.lo),
                fnum(det.hi)
            );
        }
        RankVerdict::MaximalRank => {}
    }
    let _ = writeln!(out, "evidence:");
    let dim = cert.region.len();
    let mut header: Vec<String> = Vec::new();
    for d in 0..dim {
        header.push(format!("lo{}", d + 1));
        header.push(format!("hi{}", d + 1));
    }
    header.push("det_lo".into());
    header.push("det_hi".into());
    out.push_str(&header.join(","));
    out.push_str(CSV_EOL);
    for leaf in &cert.leaves {
        let mut row: Vec<String> = Vec::new();
        for (lo, hi) in &leaf.region {
            row.push(fnum(*lo));
            row.push(fnum(*hi));
        }
        row.push(fnum(leaf.det.lo));
        row.push(fnum(leaf.det.hi));
        out.push_str(&row.join(","));
        out.push_str(CSV_EOL);
    }
    out
}

pub fn coercivity_report(name: &str, rep: &CoercivityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "report: coercivity-probe");
    let _ = writeln!(out, "problem: {name}");
    let _ = writeln!(out, "verdict: {}", coercivity_verdict_str(rep.verdict));
    let _ = writeln!(
        out,
        "fit: exponent={} constant={}",
        fnum(rep.fitted_exponent),
        fnum(rep.fitted_constant)
    );
    if let Some(w) = &rep.witness_direction {
        let _ = writeln!(
            out,
            "witness-direction: ({}) bound={}",
            w.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", "),
            fnum(rep.witness_bound.unwrap_or(f64::NAN))
        );
    }
    let _ = writeln!(out, "evidence:");
    out.push_str("radius,sphere_inf");
    out.push_str(CSV_EOL);
    for (r, v) in rep.radii.iter().zip(&rep.sphere_infima) {
        out.push_str(&format!("{},{}", fnum(*r), fnum(*v)));
        out.push_str(CSV_EOL);
    }
    out
}

pub fn spectral_section(rep: &SpectralReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "eigenvalues(AtA): {}",
        rep.eigenvalues
            .iter()
            .map(|v| fnum(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(out, "det(A): {}", fnum(rep.det_a));
    let _ = writeln!(
        out,
        "spectral-condition: {} (sqrt(l_min)={}, sqrt(l_max)={})",
        if rep.a1_holds { "holds" } else { "fails" },
        fnum(rep.sqrt_lambda_min),
        fnum(rep.sqrt_lambda_max)
    );
    out
}

pub fn algebraic_report(name: &str, checklist: &AlgebraicChecklist, roots: &RootSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "report: algebraic-solve");
    let _ = writeln!(out, "problem: {name}");
    out.push_str(&spectral_section(&checklist.spectral));
    let g = &checklist.growth;
    let _ = writeln!(
        out,
        "growth: a_est={} b_est={} gamma_fit={} theta_fit={}",
        fnum(g.a_est),
        fnum(g.b_est),
        fnum(g.gamma_fit),
        fnum(g.theta_fit)
    );
    if let (Some(up), Some(low)) = (g.upper_route_applies, g.lower_route_applies) {
        let _ = writeln!(out, "growth-routes: sublinear={up} superlinear={low}");
    }
    let _ = writeln!(
        out,
        "rank: {} det-range=[{}, {}] on {}",
        rank_verdict_str(&checklist.rank.verdict),
        fnum(checklist.rank.det_range.lo),
        fnum(checklist.rank.det_range.hi),
        region_str(&checklist.rank.region)
    );
    let _ = writeln!(
        out,
        "coercivity: {}",
        coercivity_verdict_str(checklist.coercivity.verdict)
    );
    let _ = writeln!(out, "route: {}", checklist.route.label());
    out.push_str(&root_set_section(roots));
    out
}

pub fn root_set_section(set: &RootSet) -> String {
    let mut out = String::new();
    let verdict = match set.verdict {
        AuditVerdict::Unique => "unique (audited)",
        AuditVerdict::Multiple => "multiple",
        AuditVerdict::NoneFound => "none-found",
    };
    let _ = writeln!(out, "audit: {verdict}");
    for r in &set.roots {
        let _ = writeln!(
            out,
            "root: x=({}) residual={} stationarity={} basins={}",
            r.x.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", "),
            fnum(r.residual),
            fnum(r.stationarity),
            r.basin_count
        );
    }
    for s in &set.stationary_nonroots {
        let _ = writeln!(
            out,
            "stationary-nonroot: x=({}) residual={} phi={} stationarity={} family_min_sigma={}",
            s.x.iter().map(|v| fnum(*v)).collect::<Vec<_>>().join(", "),
            fnum(s.residual),
            fnum(s.phi_value),
            fnum(s.stationarity),
            fnum(s.family_min_sigma)
        );
    }
    out
}

/// RootSet CSV: y columns, x columns, residual, stationarity, basin_count.
pub fn root_set_csv(set: &RootSet, m: usize, n: usize) -> String {
    let mut out = String::new();
    let mut header = Vec::new();
    for i in 0..m {
        header.push(format!("y{}", i + 1));
    }
    for i in 0..n {
        header.push(format!("x{}", i + 1));
    }
    header.extend(["residual".to_string(), "stationarity".to_string(), "basin_count".to_string()]);
    out.push_str(&header.join(","));
    out.push_str(CSV_EOL);
    for r in &set.roots {
        let mut row: Vec<String> = set.y.iter().map(|v| fnum(*v)).collect();
        row.extend(r.x.iter().map(|v| fnum(*v)));
        row.push(fnum(r.residual));
        row.push(fnum(r.stationarity));
        row.push(r.basin_count.to_string());
        out.push_str(&row.join(","));
        out.push_str(CSV_EOL);
    }
    out
}

/// Atlas CSV: y columns, x columns, residual, stationarity, ratio, break.
pub fn atlas_csv(atlas: &Atlas, m: usize, n: usize) -> String {
    let mut out = String::new();
    let mut header = Vec::new();
    for i in 0..m {
        header.push(format!("y{}", i + 1));
    }
    for i in 0..n {
        header.push(format!("x{}", i + 1));
    }
    header.extend([
        "residual".to_string(),
        "stationarity".to_string(),
        "ratio".to_string(),
        "break".to_string(),
    ]);
    out.push_str(&header.join(","));
    out.push_str(CSV_EOL);
    for s in &atlas.samples {
        let mut row: Vec<String> = s.y.iter().map(|v| fnum(*v)).collect();
        row.extend(s.x.iter().map(|v| fnum(*v)));
        row.push(fnum(s.residual));
        row.push(fnum(s.stationarity));
        row.push(fnum(s.ratio));
        row.push(if s.break_flag { "1".into() } else { "0".into() });
        out.push_str(&row.join(","));
        out.push_str(CSV_EOL);
    }
    out
}

/// Profile CSV: grid value, integrand value, cumulative integral.
pub fn profile_csv(profile: &ConditionProfile, grid_name: &str, value_name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("{grid_name},{value_name},integral"));
    out.push_str(CSV_EOL);
    for ((t, v), c) in profile
        .grid
        .iter()
        .zip(&profile.values)
        .zip(&profile.cumulative)
    {
        out.push_str(&format!("{},{},{}", fnum(*t), fnum(*v), fnum(*c)));
        out.push_str(CSV_EOL);
    }
    out
}

pub fn comparison_report(rep: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "report: condition-comparison");
    let _ = writeln!(out, "problem: {}", rep.problem);
    let _ = writeln!(out, "{:<34} {:<24} {}", "condition", "verdict", "detail");
    let _ = writeln!(out, "{}", "-".repeat(84));
    let _ = writeln!(
        out,
        "{:<34} {:<24} det-range=[{}, {}]",
        "maximal rank over region",
        rank_verdict_str(&rep.rank.verdict),
        fnum(rep.rank.det_range.lo),
        fnum(rep.rank.det_range.hi)
    );
    let n_coercive = rep
        .coercivity_runs
        .iter()
        .filter(|(_, v)| *v == CoercivityVerdict::CoerciveEvidence)
        .count();
    let _ = writeln!(
        out,
        "{:<34} {:<24} {}/{} sampled targets coercive",
        "coercivity of 1/2||f(x)-y||^2",
        if n_coercive == rep.coercivity_runs.len() {
            "coercive-evidence"
        } else {
            "mixed"
        },
        n_coercive,
        rep.coercivity_runs.len()
    );
    let _ = writeln!(
        out,
        "{:<34} {:<24} route holds: {}",
        "coercivity + rank route",
        if rep.homeomorphism_route_holds() {
            "invertible (evidence)"
        } else {
            "not evidenced"
        },
        rep.homeomorphism_route_holds()
    );
    let _ = writeln!(
        out,
        "{:<34} {:<24} exponent={} integral(tail)={}",
        "ball-infimum integral m(t)",
        integral_verdict_str(rep.pourciau.verdict),
        fnum(rep.pourciau.fitted_exponent),
        fnum(*rep.pourciau.cumulative.last().unwrap_or(&f64::NAN))
    );
    let _ = writeln!(
        out,
        "{:<34} {:<24} exponent={}",
        "sphere-minimum integral",
        integral_verdict_str(rep.hadamard_levy.verdict),
        fnum(rep.hadamard_levy.fitted_exponent)
    );
    if let Some(l) = &rep.liusternik {
        let _ = writeln!(
            out,
            "{:<34} {:<24} Sur/t -> {} vs sigma_min={} (gap {:.2}%)",
            "surjection-modulus limit",
            if l.relative_gap <= 0.05 { "consistent" } else { "mismatch" },
            fnum(l.extrapolated),
            fnum(l.jacobian_sigma_min),
            100.0 * l.relative_gap
        );
    }
    let a = &rep.inversion_audit;
    let _ = writeln!(
        out,
        "{:<34} {:<24} {}/{} targets, max roundtrip error {}",
        "audited inversion",
        if a.unique_roots == a.targets {
            "all-unique"
        } else {
            "failures"
        },
        a.unique_roots,
        a.targets,
        fnum(a.max_roundtrip_error)
    );
    out
}
