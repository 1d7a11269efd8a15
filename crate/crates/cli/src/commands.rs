use crate::{fixtures, output::RunDir, Cli, Cmd};
use anyhow::{anyhow, bail, Context, Result};
use implifit::certify::{self, CoercivityVerdict};
use implifit::clarke::FamilyMode;
use implifit::expr::{parse_problem, ProblemDef};
use implifit::mpass::{self, MpassOptions, SaddleVerdict};
use implifit::objective::ResidualObjective;
use implifit::report;
use implifit::sample;
use implifit::solve::{self, AuditVerdict, SolveError, SolveOptions, TheoremRoute};
use implifit::theorems::{self, CompareOptions, IntegralVerdict};
use std::fmt::Write as _;
use std::fs;

const EXIT_OK: u8 = 0;
const EXIT_HYPOTHESIS_FAIL: u8 = 1;

pub fn run(cli: &Cli) -> Result<u8> {
    let mut run = RunDir::create(&cli.out)?;
    run.record("seed", cli.seed);
    if let Some(t) = cli.threads {
        run.record("threads", t);
    }
    if let Some(a) = cli.a {
        run.record("a", format!("{a:?}"));
    }
    let code = match &cli.cmd {
        Cmd::Check { problem, mode } => cmd_check(cli, &mut run, problem, mode)?,
        Cmd::Solve {
            problem,
            y,
            multistart,
        } => cmd_solve(cli, &mut run, problem, y, *multistart)?,
        Cmd::Atlas { problem, path } => cmd_atlas(cli, &mut run, problem, path)?,
        Cmd::Invert { problem, target } => cmd_invert(cli, &mut run, problem, target)?,
        Cmd::Algebraic { problem, xi } => cmd_algebraic(cli, &mut run, problem, xi.as_deref())?,
        Cmd::Mpass {
            problem,
            y,
            beads,
            max_iters,
        } => cmd_mpass(cli, &mut run, problem, y, *beads, *max_iters)?,
        Cmd::Compare { problem, targets } => cmd_compare(cli, &mut run, problem, *targets)?,
        Cmd::Fixtures { list, verify } => cmd_fixtures(cli, &mut run, *list, *verify)?,
    };
    run.write_manifest()?;
    Ok(code)
}

fn load_problem(cli: &Cli, run: &mut RunDir, spec: &str) -> Result<ProblemDef> {
    let raw = match fs::read_to_string(spec) {
        Ok(text) => text,
        Err(_) => fixtures::lookup(spec)
            .map(str::to_string)
            .ok_or_else(|| anyhow!("cannot read problem file `{spec}`"))?,
    };
    run.record("problem", spec);
    let text = if raw.contains("$a") {
        let a = cli
            .a
            .ok_or_else(|| anyhow!("problem `{spec}` is parameterized; pass --a <value>"))?;
        raw.replace("$a", &format!("({a:?})"))
    } else {
        raw
    };
    let p = parse_problem(&text).map_err(anyhow::Error::new)?;
    run.record("problem_name", &p.name);
    run.record("n", p.n());
    run.record("m", p.m());
    Ok(p)
}

fn parse_mode(mode: &str) -> Result<FamilyMode> {
    match mode {
        "pointwise" => Ok(FamilyMode::Pointwise),
        "outer-global" => Ok(FamilyMode::OuterGlobal),
        other => bail!("unknown family mode `{other}` (use pointwise or outer-global)"),
    }
}

/// `start:end:count`, vector components comma separated.
fn parse_path(spec: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("path must be `start:end:count`, got `{spec}`");
    }
    let parse_vec = |s: &str| -> Result<Vec<f64>> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().context("bad number in path"))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != dim {
            bail!("path endpoint needs {dim} components, got {}", v.len());
        }
        Ok(v)
    };
    let start = parse_vec(parts[0])?;
    let end = parse_vec(parts[1])?;
    let count: usize = parts[2].parse().context("bad sample count")?;
    if count < 2 {
        bail!("path needs at least 2 samples");
    }
    Ok((0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            start
                .iter()
                .zip(&end)
                .map(|(s, e)| s + t * (e - s))
                .collect()
        })
        .collect())
}

fn solve_options(cli: &Cli) -> SolveOptions {
    SolveOptions::with_seed(cli.seed)
}

fn cmd_check(cli: &Cli, run: &mut RunDir, problem: &str, mode: &str) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    let mode = parse_mode(mode)?;
    run.record("subcommand", "check");
    run.record("mode", if mode == FamilyMode::Pointwise { "pointwise" } else { "outer-global" });

    let mut text = String::new();
    let mut failed = false;

    if let Some(a) = p.matrix_a() {
        let spec = certify::spectral_report(a);
        text.push_str(&report::spectral_section(&spec));
    }

    let region = p.cert_box_or_default();
    let rank = certify::rank_certificate(&p, &region, mode, certify::DEFAULT_MAX_DEPTH)?;
    failed |= matches!(rank.verdict, certify::RankVerdict::RankDeficientWitness { .. });
    text.push_str(&report::rank_report(&rank));

    let y0 = vec![0.0; p.m()];
    let obj = ResidualObjective::implicit(&p, &y0);
    let coer = certify::coercivity_probe(
        &obj,
        p.n(),
        &certify::default_coercivity_schedule(),
        32 * p.n(),
        sample::mix_seed(cli.seed, 0x43),
    )?;
    failed |= coer.verdict == CoercivityVerdict::NonCoerciveWitness;
    text.push_str(&report::coercivity_report(&p.name, &coer));

    if p.m() == 0 {
        let growth = certify::growth_constants(
            &p,
            &certify::default_coercivity_schedule(),
            64,
            sample::mix_seed(cli.seed, 0x47),
        )?;
        let _ = writeln!(
            text,
            "growth: a_est={:?} b_est={:?} gamma_fit={:?} theta_fit={:?}",
            growth.a_est, growth.b_est, growth.gamma_fit, growth.theta_fit
        );
    }

    print!("{text}");
    run.write("check_report.txt", &text)?;
    Ok(if failed { EXIT_HYPOTHESIS_FAIL } else { EXIT_OK })
}

fn cmd_solve(
    cli: &Cli,
    run: &mut RunDir,
    problem: &str,
    y: &[f64],
    multistart: Option<usize>,
) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    run.record("subcommand", "solve");
    run.record("y", format!("{y:?}"));
    let mut opts = solve_options(cli);
    opts.multistart = multistart;
    if let Some(ms) = multistart {
        run.record("multistart", ms);
    }
    let set = solve::find_roots(&p, y, &opts)?;
    let text = report::root_set_section(&set);
    print!("{text}");
    run.write("solve_report.txt", &text)?;
    run.write("roots.csv", &report::root_set_csv(&set, p.m(), p.n()))?;
    let bad = set.verdict == AuditVerdict::NoneFound || !set.stationary_nonroots.is_empty();
    Ok(if bad { EXIT_HYPOTHESIS_FAIL } else { EXIT_OK })
}

fn cmd_atlas(cli: &Cli, run: &mut RunDir, problem: &str, path: &str) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    run.record("subcommand", "atlas");
    run.record("path", path);
    let opts = solve_options(cli);
    let atlas = if p.matrix_a().is_some() {
        let samples = parse_path(path, p.n())?;
        solve::xi_atlas(&p, &samples, &opts)?
    } else {
        if p.m() == 0 {
            bail!("atlas needs a parameter block (m >= 1) or algebraic mode");
        }
        let samples = parse_path(path, p.m())?;
        solve::implicit_atlas(&p, &samples, &opts)?
    };
    let label_dim = atlas.samples[0].y.len();
    println!(
        "atlas: {} samples, {} breaks, max ratio {:?}",
        atlas.samples.len(),
        atlas.breaks,
        atlas.max_ratio
    );
    run.write("atlas.csv", &report::atlas_csv(&atlas, label_dim, p.n()))?;
    Ok(if atlas.breaks > 0 { EXIT_HYPOTHESIS_FAIL } else { EXIT_OK })
}

fn cmd_invert(cli: &Cli, run: &mut RunDir, problem: &str, target: &[f64]) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    run.record("subcommand", "invert");
    run.record("target", format!("{target:?}"));
    match solve::invert(&p, target, &solve_options(cli)) {
        Ok(root) => {
            let text = format!(
                "inverse: x=({}) residual={:?} stationarity={:?}\n",
                root.x
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                root.residual,
                root.stationarity
            );
            print!("{text}");
            run.write("invert_report.txt", &text)?;
            Ok(EXIT_OK)
        }
        Err(e @ (SolveError::MultipleRoots { .. } | SolveError::NoRootFound { .. })) => {
            let text = format!("inversion failed: {e}\n");
            print!("{text}");
            run.write("invert_report.txt", &text)?;
            Ok(EXIT_HYPOTHESIS_FAIL)
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_algebraic(cli: &Cli, run: &mut RunDir, problem: &str, xi: Option<&[f64]>) -> Result<u8> {
    let mut p = load_problem(cli, run, problem)?;
    run.record("subcommand", "algebraic");
    if let Some(xi) = xi {
        run.record("xi", format!("{xi:?}"));
        p = p.with_xi(xi.to_vec());
    }
    let sol = solve::solve_algebraic(&p, &solve_options(cli))?;
    let text = report::algebraic_report(&p.name, &sol.checklist, &sol.root_set);
    print!("{text}");
    run.write("algebraic_report.txt", &text)?;
    run.write(
        "roots.csv",
        &report::root_set_csv(&sol.root_set, 0, p.n()),
    )?;
    let ok = sol.root_set.verdict == AuditVerdict::Unique;
    Ok(if ok { EXIT_OK } else { EXIT_HYPOTHESIS_FAIL })
}

fn cmd_mpass(
    cli: &Cli,
    run: &mut RunDir,
    problem: &str,
    y: &[f64],
    beads: usize,
    max_iters: usize,
) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    run.record("subcommand", "mpass");
    run.record("y", format!("{y:?}"));
    run.record("beads", beads);
    run.record("max_iters", max_iters);
    let set = solve::find_roots(&p, y, &solve_options(cli))?;
    if set.roots.len() < 2 {
        let text = format!(
            "mountain pass not applicable: audit found {} root(s); the probe needs two.\n",
            set.roots.len()
        );
        print!("{text}");
        run.write("mpass_report.txt", &text)?;
        return Ok(EXIT_HYPOTHESIS_FAIL);
    }
    let opts = MpassOptions {
        seed: cli.seed,
        record_history: true,
        ..Default::default()
    };
    let est = mpass::uniqueness_probe(
        &p,
        y,
        &set.roots[0].x,
        &set.roots[1].x,
        beads,
        max_iters,
        &opts,
    )?;
    let verdict = match est.verdict {
        SaddleVerdict::SaddleFound => "saddle-found",
        SaddleVerdict::Degenerate => "degenerate",
        SaddleVerdict::BudgetExhausted => "budget-exhausted",
    };
    let mut text = String::new();
    let _ = writeln!(
        text,
        "probe between roots ({}) and ({}), shifted so the second sits at the origin",
        set.roots[0]
            .x
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(", "),
        set.roots[1]
            .x
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(text, "verdict: {verdict}");
    let unshifted: Vec<f64> = est
        .point
        .iter()
        .zip(&set.roots[1].x)
        .map(|(a, b)| a + b)
        .collect();
    let _ = writeln!(
        text,
        "saddle: x=({}) shifted=({}) level={:?} stationarity={:?}",
        unshifted
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(", "),
        est.point
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(", "),
        est.value,
        est.stationarity
    );
    if let Some((rho, inf)) = est.ring_evidence {
        let _ = writeln!(text, "ring: rho={rho:?} infimum={inf:?}");
    }
    print!("{text}");
    run.write("mpass_report.txt", &text)?;

    let mut csv = String::from("iteration,bead,");
    for d in 0..p.n() {
        csv.push_str(&format!("x{},", d + 1));
    }
    csv.push_str("value");
    csv.push_str(report::CSV_EOL);
    for (it, snap) in est.path.history.iter().enumerate() {
        for (bi, (b, v)) in snap.iter().enumerate() {
            let coords = b
                .iter()
                .map(|c| format!("{c:?}"))
                .collect::<Vec<_>>()
                .join(",");
            csv.push_str(&format!("{it},{bi},{coords},{v:?}"));
            csv.push_str(report::CSV_EOL);
        }
    }
    run.write("path.csv", &csv)?;
    Ok(EXIT_OK)
}

fn cmd_compare(cli: &Cli, run: &mut RunDir, problem: &str, targets: usize) -> Result<u8> {
    let p = load_problem(cli, run, problem)?;
    run.record("subcommand", "compare");
    run.record("targets", targets);
    let opts = CompareOptions {
        inversion_targets: targets,
        seed: cli.seed,
        ..Default::default()
    };
    let rep = theorems::compare_conditions(&p, &opts)?;
    let text = report::comparison_report(&rep);
    print!("{text}");
    run.write("compare_report.txt", &text)?;
    run.write(
        "pourciau.csv",
        &report::profile_csv(&rep.pourciau, "t", "m"),
    )?;
    run.write(
        "hadamard_levy.csv",
        &report::profile_csv(&rep.hadamard_levy, "r", "min_sigma"),
    )?;
    let failed = matches!(
        rep.rank.verdict,
        certify::RankVerdict::RankDeficientWitness { .. }
    ) || !rep.coercive_everywhere()
        || rep.inversion_audit.unique_roots != rep.inversion_audit.targets;
    Ok(if failed { EXIT_HYPOTHESIS_FAIL } else { EXIT_OK })
}

// --- fixtures ----------------------------------------------------------------

fn cmd_fixtures(cli: &Cli, run: &mut RunDir, list: bool, verify: bool) -> Result<u8> {
    run.record("subcommand", "fixtures");
    if list || !verify {
        for (name, _) in fixtures::FIXTURES {
            println!("fixtures/{name}.prob");
        }
        if !verify {
            return Ok(EXIT_OK);
        }
    }
    let mut all_ok = true;
    let mut check = |label: &str, ok: bool| {
        println!("{}: {}", label, if ok { "ok" } else { "FAIL" });
        all_ok &= ok;
    };
    let seed = cli.seed;
    let opts = SolveOptions::with_seed(seed);

    // example1: spectral condition, rank bound, coercivity, origin root
    {
        let p = parse_problem(fixtures::lookup("example1").unwrap()).unwrap();
        let sol = solve::solve_algebraic(&p, &opts)?;
        check("example1 spectral holds", sol.checklist.spectral.a1_holds);
        check(
            "example1 lambda_min in [0.133, 0.135]",
            (0.133..=0.135).contains(&sol.checklist.spectral.eigenvalues[0]),
        );
        check(
            "example1 rank certified with det lower bound >= 3.9",
            sol.checklist.rank.is_maximal_rank() && sol.checklist.rank.det_range.lo >= 3.9,
        );
        check(
            "example1 coercive evidence",
            sol.checklist.coercivity.verdict == CoercivityVerdict::CoerciveEvidence,
        );
        let unique_origin = sol.root_set.verdict == AuditVerdict::Unique
            && sample::norm(&sol.root_set.roots[0].x) <= 1e-8;
        check("example1 unique root at the origin", unique_origin);
    }

    // example2: singular A, corollary route, unique root
    {
        let p = parse_problem(fixtures::lookup("example2").unwrap()).unwrap();
        let sol = solve::solve_algebraic(&p, &opts)?;
        check(
            "example2 det A = 0 and spectral condition fails",
            sol.checklist.spectral.det_a.abs() <= 1e-12 && !sol.checklist.spectral.a1_holds,
        );
        check(
            "example2 direct-coercivity route",
            sol.checklist.route == TheoremRoute::DirectCoercivity,
        );
        check(
            "example2 unique root at the origin",
            sol.root_set.verdict == AuditVerdict::Unique
                && sample::norm(&sol.root_set.roots[0].x) <= 1e-8,
        );
    }

    // fa (a = 0.5): rank range, decaying m(t), invert a known point
    {
        let text = fixtures::lookup("fa").unwrap().replace("$a", "0.5");
        let p = parse_problem(&text).unwrap();
        let region = p.cert_box_or_default();
        let cert =
            certify::rank_certificate(&p, &region, FamilyMode::OuterGlobal, certify::DEFAULT_MAX_DEPTH)?;
        check(
            "fa rank det range [0.5, 1.5]",
            cert.is_maximal_rank()
                && (cert.det_range.lo - 0.5).abs() < 1e-9
                && (cert.det_range.hi - 1.5).abs() < 1e-9,
        );
        let prof = theorems::pourciau_m(&p, &theorems::default_t_grid(), 96, seed)?;
        check(
            "fa ball-infimum profile converges-likely",
            prof.verdict == IntegralVerdict::ConvergesLikely,
        );
        let root = solve::invert(&p, &[3.0, 9.0], &opts)?;
        check(
            "fa inverse of (3, 9) is (2, 1)",
            (root.x[0] - 2.0).abs() <= 1e-8 && (root.x[1] - 1.0).abs() <= 1e-8,
        );
    }

    // cubic: unbroken atlas
    {
        let p = parse_problem(fixtures::lookup("cubic").unwrap()).unwrap();
        let ys: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
        let atlas = solve::implicit_atlas(&p, &ys, &opts)?;
        check(
            "cubic atlas has 41 samples and no breaks",
            atlas.samples.len() == 41 && atlas.breaks == 0,
        );
    }

    // twowell: two roots plus the rank-deficient stationary point
    {
        let p = parse_problem(fixtures::lookup("twowell").unwrap()).unwrap();
        let set = solve::find_roots(&p, &[], &opts)?;
        let mut xs: Vec<f64> = set.roots.iter().map(|r| r.x[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        check(
            "twowell roots are -1 and +1",
            xs.len() == 2 && (xs[0] + 1.0).abs() <= 1e-8 && (xs[1] - 1.0).abs() <= 1e-8,
        );
        let nonroot_ok = set.stationary_nonroots.len() == 1 && {
            let s = &set.stationary_nonroots[0];
            s.x[0].abs() <= 1e-6 && s.family_min_sigma <= 1e-6
        };
        check("twowell stationary nonroot is rank-deficient", nonroot_ok);
    }

    Ok(if all_ok { EXIT_OK } else { EXIT_HYPOTHESIS_FAIL })
}
