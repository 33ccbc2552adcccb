use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use asmd_core::problems::{make_example1, make_example2, make_fts, make_simplex, Distribution, ProblemInstance};
use asmd_core::solver::{solve, Algorithm, SolverConfig, StopReason};
use asmd_core::verify::{audit_expectation, audit_lemma1, audit_solution, grid_search_reference, multi_seed_gaps, resolution_for_slack, GRID_MAX_DIM};
use asmd_core::ProxKind;

use crate::bench::{run_bench, RunManifest};
use crate::error::{usage, CliError, CliResult};
use crate::records::{write_trace, ResultFile, SolveRow};
use crate::{BenchArgs, Command, GenerateArgs, SolveArgs, VerifyArgs, OUT_DIR_ENV};

/// Grid searches above this many points are refused rather than left to run for hours.
const MAX_GRID_POINTS: f64 = 5e7;

pub fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    }
}

fn out_base() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn parse_dist(s: &str) -> CliResult<Distribution> {
    s.parse().map_err(|_| usage(format!("unknown distribution `{s}` (gumbel, exponential, uniform)")))
}

pub fn build_instance(a: &GenerateArgs) -> CliResult<ProblemInstance> {
    let need_n = || a.summands.ok_or_else(|| usage(format!("--N is required for --example {}", a.example)));
    let dist = || a.dist.as_deref().map_or(Ok(Distribution::Gumbel), parse_dist);
    Ok(match a.example.as_str() {
        "1" | "example1" => make_example1(need_n()?, a.n, a.m, dist()?, a.seed)?,
        "2" | "example2" => make_example2(need_n()?, a.n, a.m, dist()?, a.seed)?,
        "fts" => {
            if a.dist.is_some() {
                return Err(usage("--dist does not apply to fts (anchors are uniform on [0,1)^n)"));
            }
            make_fts(need_n()?, a.n, a.m, a.seed)?
        }
        "simplex" => {
            if a.summands.is_some_and(|k| k != 1) {
                return Err(usage("--N does not apply to simplex"));
            }
            make_simplex(a.n, a.m, dist()?, a.seed)?
        }
        other => return Err(usage(format!("unknown example `{other}` (1, 2, fts, simplex)"))),
    })
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let inst = build_instance(a)?;
    let path = a.out.clone().unwrap_or_else(|| out_base().join("instances").join(format!("{}.prob", inst.auto_name())));
    inst.save(&path)?;
    writeln!(out, "{}", inst.summary())?;
    writeln!(out, "  written: {}", path.display())?;
    Ok(())
}

fn parse_alg(s: &str) -> CliResult<Algorithm> {
    s.parse().map_err(|_| usage(format!("unknown algorithm `{s}` (standard, modified)")))
}

fn start_point(inst: &ProblemInstance, x0: Option<&str>) -> CliResult<Vec<f64>> {
    match x0 {
        None => Ok(inst.default_start()),
        Some(name) => inst.named_start(name).map_err(|_| usage(format!("unknown --x0 `{name}` (uniform-norm, origin, center)"))),
    }
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let t0 = Instant::now();
    let inst = ProblemInstance::load(&a.instance)?;
    let id = inst.id();
    let mut cfg = SolverConfig::new(a.eps, parse_alg(&a.alg)?, start_point(&inst, a.x0.as_deref())?, a.seed);
    cfg.theta0 = a.theta0;
    cfg.max_iterations = a.cap;
    cfg.exact_subgradients = a.exact;
    cfg.record_iterates = a.iterates;
    cfg.record_objective = a.record_objective;
    let (f, g) = inst.oracles()?;
    let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg)?;
    if let Some(p) = &a.trace {
        write_trace(p, &sol)?;
    }
    let total = t0.elapsed().as_secs_f64();
    if let Some(p) = &a.result {
        ResultFile::new(&id, cfg, sol.clone(), total).save(p)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(!a.no_header).from_writer(&mut *out);
    w.serialize(SolveRow::new(&id, &sol, total))?;
    w.flush()?;
    drop(w);
    if sol.stopped_by == StopReason::Cap && !a.allow_cap {
        return Err(CliError::Cap(sol.iterations));
    }
    Ok(())
}

/// Parses `0.5,1/64,0.01`.
pub fn parse_eps_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v = match t.split_once('/') {
                Some((p, q)) => p.trim().parse::<f64>().ok().zip(q.trim().parse::<f64>().ok()).map(|(p, q)| p / q),
                None => t.parse().ok(),
            };
            v.filter(|v| *v > 0.0 && v.is_finite()).ok_or_else(|| usage(format!("bad epsilon `{t}`")))
        })
        .collect()
}

/// Parses `0..5,9,12..14` (ranges are half-open).
pub fn parse_seed_list(s: &str) -> CliResult<Vec<u64>> {
    let mut seeds = Vec::new();
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match t.split_once("..") {
            Some((lo, hi)) => {
                let lo: u64 = lo.parse().map_err(|_| usage(format!("bad seed range `{t}`")))?;
                let hi: u64 = hi.parse().map_err(|_| usage(format!("bad seed range `{t}`")))?;
                seeds.extend(lo..hi);
            }
            None => seeds.push(t.parse().map_err(|_| usage(format!("bad seed `{t}`")))?),
        }
    }
    Ok(seeds)
}

pub fn manifest_from_args(a: &BenchArgs) -> CliResult<RunManifest> {
    if let Some(p) = &a.manifest {
        return Ok(serde_json::from_slice(&std::fs::read(p)?)?);
    }
    let instance = a.instance.clone().ok_or_else(|| usage("bench needs --instance or --manifest"))?;
    let algorithms = a.alg.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_alg).collect::<CliResult<_>>()?;
    let out_dir = match &a.out {
        Some(d) => d.clone(),
        None => {
            let stem = instance.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
            out_base().join("bench").join(stem)
        }
    };
    Ok(RunManifest {
        instance,
        algorithms,
        epsilons: parse_eps_list(&a.eps)?,
        seeds: parse_seed_list(&a.seeds)?,
        out_dir,
        repeat: a.repeat,
        emit_trace: a.trace,
        exact: a.exact,
        x0: a.x0.clone(),
        cap: a.cap,
        theta0: a.theta0,
    })
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = manifest_from_args(a)?;
    let outcome = run_bench(&m, a.jobs)?;
    writeln!(out, "instance {}: {} cells -> {}", outcome.instance_id, outcome.rows.len(), m.out_dir.display())?;
    for s in &outcome.summary {
        writeln!(
            out,
            "  {:<9} eps={:<10} ok={}/{} median_iterations={} median_wall_time_s={}",
            s.algorithm,
            s.epsilon,
            s.ok,
            s.runs,
            s.median_iterations.map_or("-".into(), |v| v.to_string()),
            s.median_wall_time_s.map_or("-".into(), |v| format!("{v:.6}")),
        )?;
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &outcome.scaling {
        if seen.insert(s.algorithm.clone()) {
            if let Some(slope) = s.iterations_slope {
                writeln!(out, "  {:<9} log-log slope of iterations vs 1/eps: {slope:.3}", s.algorithm)?;
            }
        }
    }
    Ok(())
}

fn grid_points(inst: &ProblemInstance, resolution: usize) -> f64 {
    let n = inst.dim() as i32;
    (resolution as f64 + 1.0).powi(n)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let inst = ProblemInstance::load(&a.instance)?;
    let res = ResultFile::load(&a.result)?;
    if res.instance_id != inst.id() {
        return Err(asmd_core::Error::InstanceMismatch(format!(
            "result was produced on instance {}, not {}",
            res.instance_id,
            inst.id()
        ))
        .into());
    }
    let gridable = inst.dim() <= GRID_MAX_DIM && matches!(inst.setup.kind(), ProxKind::EuclideanBall { .. } | ProxKind::EntropySimplex);
    let reference = if gridable {
        let r = match a.resolution {
            Some(r) => r,
            None => resolution_for_slack(&inst, a.slack)?,
        };
        if grid_points(&inst, r) > MAX_GRID_POINTS {
            return Err(usage(format!("grid resolution {r} is too fine for n = {}; pass a coarser --resolution", inst.dim())));
        }
        Some(grid_search_reference(&inst, r)?)
    } else {
        None
    };

    let mut report = audit_solution(&res.solution, &inst, reference.as_ref())?;
    if a.lemma1 {
        let x_star = reference
            .as_ref()
            .map(|r| r.x_star.clone())
            .ok_or_else(|| usage("--lemma1 needs a reference point (n <= 3, ball or simplex)"))?;
        let (f, g) = inst.oracles()?;
        let lemma = audit_lemma1(&res.solution, &inst.setup, f.as_ref(), g.as_ref(), &x_star).map_err(|e| match e {
            asmd_core::Error::TraceUnavailable => usage("--lemma1 needs a result from `solve --exact --iterates` with a complete trace"),
            other => other.into(),
        })?;
        report.extend(lemma);
    }
    if let Some(k) = a.seeds {
        let r = reference.as_ref().ok_or_else(|| usage("--seeds needs a reference optimum (n <= 3, ball or simplex)"))?;
        let seeds: Vec<u64> = (0..k as u64).collect();
        let mut base = res.config.clone();
        base.record_iterates = false;
        base.record_objective = false;
        let gaps = multi_seed_gaps(&inst, &base, &seeds, r.f_star)?;
        report.push(audit_expectation(&gaps, res.config.epsilon, r.slack)?);
    }

    if a.json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        write!(out, "{}", report.to_text())?;
        writeln!(out, "{}", if report.passed() { "verdict PASS" } else { "verdict FAIL" })?;
    }
    if !report.passed() {
        let names: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
        return Err(CliError::Verification(names.join(", ")));
    }
    Ok(())
}

