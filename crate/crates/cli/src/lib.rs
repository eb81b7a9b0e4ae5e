//! Building blocks of the `mao` command-line tool: run configuration,
//! experiment drivers and CSV persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mao_core::feasible_start::{log_beta, FeasibleStart, Grid1d};
use mao_core::grid_oracle::{discretize, discretize_start, mixing_trajectory, stationary};
use mao_core::optimizer::{find_mode, OptimizerConfig};
use mao_core::rng::stream_rng;
use mao_core::samplers::{
    run_chain, KernelKind, ProposalKernel, SamplerConfig, StepOutcome, Trace,
};
use mao_core::schedules::{
    delta_tolerance, predicted_bounds, step_size, Assumption, Schedule, ScheduleInputs,
};
use mao_core::{summarize, Potential, TargetKind};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetName {
    Pi1,
    Pi2,
    Radial,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Rwm,
    Mala,
    Mao,
}

impl From<Algo> for KernelKind {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Rwm => KernelKind::Rwm,
            Algo::Mala => KernelKind::Mala,
            Algo::Mao => KernelKind::Mao,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleChoice {
    A,
    B,
}

impl From<ScheduleChoice> for Assumption {
    fn from(s: ScheduleChoice) -> Self {
        match s {
            ScheduleChoice::A => Assumption::A,
            ScheduleChoice::B => Assumption::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeSource {
    /// Use the target's known minimizer.
    Exact,
    /// Run the Bregman optimizer to accuracy `delta` first.
    Optimize,
}

/// `auto` or an explicit positive step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Auto,
    Fixed(f64),
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Step::Auto);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Step::Fixed(h)),
            _ => Err(format!("expected `auto` or a positive number, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    #[arg(long, value_enum, default_value = "pi1")]
    pub target: TargetName,
    /// Quadratic weight of pi1.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Exponent of the radial target.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Precision of the gaussian target.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
}

impl TargetArgs {
    pub fn kind(&self) -> TargetKind {
        match self.target {
            TargetName::Pi1 => TargetKind::Pi1 { a: self.a },
            TargetName::Pi2 => TargetKind::Pi2,
            TargetName::Radial => TargetKind::RadialAlpha { alpha: self.alpha },
            TargetName::Gaussian => TargetKind::Gaussian { m: self.m },
        }
    }

    pub fn build(&self, dim: usize) -> Result<Potential> {
        Ok(Potential::builtin(self.kind(), dim)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, value_enum, default_value = "mao")]
    pub algo: Algo,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burnin: usize,
    #[arg(long, default_value = "auto")]
    pub step: Step,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Lazy-hold probability; 0 for benchmarking, 0.5 for theory-mode runs.
    #[arg(long, default_value_t = 0.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "b")]
    pub schedule: ScheduleChoice,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode_source: ModeSource,
    /// Mode accuracy for `--mode-source optimize`; defaults to the schedule's δ.
    #[arg(long)]
    pub delta: Option<f64>,
}

/// Step-size resolution and mode estimate shared by `sample` and `bench`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub h: f64,
    pub mode: Vec<f64>,
    /// Distance from the mode estimate to the true minimizer.
    pub mode_error: f64,
    pub x0: Vec<f64>,
}

pub fn resolve_step(args: &ChainArgs, target: &Potential) -> Result<f64> {
    match args.step {
        Step::Fixed(h) => Ok(h),
        Step::Auto => Ok(schedule_for(args.eps, args.beta, args.c, args.schedule, target)?.h),
    }
}

pub fn schedule_for(
    eps: f64,
    beta: f64,
    c: f64,
    which: ScheduleChoice,
    target: &Potential,
) -> Result<Schedule> {
    let k = target.constants();
    let inputs = ScheduleInputs::new(eps, beta, target.dim(), k.alpha, k.gamma)
        .with_c(c)
        .with_assumption(which.into());
    Ok(step_size(inputs)?)
}

/// Resolves `h`, draws the feasible start and computes the mode estimate.
/// Randomness comes from `(seed, stream)` only.
pub fn prepare(args: &ChainArgs, target: &Potential, stream: u64) -> Result<Prepared> {
    let h = resolve_step(args, target)?;
    let fs = FeasibleStart::for_target(target)?;
    let x0 = fs.sample_one(&mut stream_rng(args.seed, stream ^ (1 << 63)));
    let truth = target.mode().to_vec();
    let (mode, mode_error) = match args.mode_source {
        ModeSource::Exact => (truth, 0.0),
        ModeSource::Optimize => {
            let delta = args
                .delta
                .unwrap_or_else(|| delta_tolerance(h, args.eps, args.c));
            let mut cfg = OptimizerConfig::for_target(target);
            // strong convexity turns a gradient bound into a distance bound
            cfg.grad_tol = delta * target.constants().m;
            let est = find_mode(target, &x0, &cfg)?;
            let err = est
                .x_tilde
                .iter()
                .zip(&truth)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (est.x_tilde, err)
        }
    };
    Ok(Prepared {
        h,
        mode,
        mode_error,
        x0,
    })
}

pub fn sampler_config(args: &ChainArgs, prepared: &Prepared, stream: u64) -> Result<SamplerConfig> {
    let kernel = ProposalKernel::new(args.algo.into(), prepared.h, prepared.mode.clone())?;
    Ok(SamplerConfig::new(kernel, args.iters)
        .zeta(args.zeta)
        .burn_in(args.burnin)
        .seed(args.seed)
        .stream(stream))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn outcome_code(o: StepOutcome) -> &'static str {
    match o {
        StepOutcome::Accepted => "1",
        StepOutcome::Rejected => "0",
        StepOutcome::Lazy => "-1",
    }
}

/// Writes `iter, x_0..x_{d−1}, accepted, log_pi`. Lazy holds are marked `-1`.
pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..trace.dim()).map(|j| format!("x_{j}")));
    header.push("accepted".into());
    header.push("log_pi".into());
    w.write_record(&header)?;
    for t in 0..trace.len() {
        let mut row = vec![trace.iterations[t].to_string()];
        row.extend(trace.state(t).iter().map(|v| fmt_f64(*v)));
        row.push(outcome_code(trace.outcomes[t]).into());
        row.push(fmt_f64(trace.log_densities[t]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a trace file, as written by [`write_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRows {
    pub iterations: Vec<usize>,
    pub states: Vec<Vec<f64>>,
    pub outcomes: Vec<StepOutcome>,
    pub log_pi: Vec<f64>,
}

pub fn read_trace(path: &Path) -> Result<TraceRows> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let width = r.headers()?.len();
    if width < 4 {
        bail!("trace file has {width} columns, expected at least 4");
    }
    let dim = width - 3;
    let mut rows = TraceRows {
        iterations: Vec::new(),
        states: Vec::new(),
        outcomes: Vec::new(),
        log_pi: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("row {}", line + 1);
        rows.iterations.push(rec[0].parse().with_context(ctx)?);
        let state = (1..=dim)
            .map(|j| rec[j].parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(ctx)?;
        rows.states.push(state);
        rows.outcomes.push(match &rec[dim + 1] {
            "1" => StepOutcome::Accepted,
            "0" => StepOutcome::Rejected,
            "-1" => StepOutcome::Lazy,
            other => bail!("row {}: bad accepted flag `{other}`", line + 1),
        });
        rows.log_pi.push(rec[dim + 2].parse().with_context(ctx)?);
    }
    Ok(rows)
}

/// Summary of a `sample` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub ess: Vec<f64>,
    pub accept_rate: f64,
    pub runtime_seconds: f64,
    pub h: f64,
    pub mode_error: f64,
}

/// Runs one chain, writing `trace.csv` and `report.csv` into `out_dir`.
pub fn cmd_sample(
    target_args: &TargetArgs,
    dim: usize,
    args: &ChainArgs,
    out_dir: &Path,
) -> Result<SampleSummary> {
    let target = target_args.build(dim)?;
    let start = Instant::now();
    let prepared = prepare(args, &target, 0)?;
    let cfg = sampler_config(args, &prepared, 0)?;
    let trace = run_chain(&cfg, &target, &prepared.x0)?;
    let report = summarize(&trace)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_trace(&trace, &out_dir.join("trace.csv"))?;
    let mut w = csv::Writer::from_path(out_dir.join("report.csv"))?;
    w.write_record([
        "coordinate",
        "ess",
        "accept_rate",
        "runtime_seconds",
        "h_used",
        "mode_error",
    ])?;
    for (j, e) in report.ess.iter().enumerate() {
        w.write_record([
            j.to_string(),
            fmt_f64(*e),
            fmt_f64(report.accept_rate),
            fmt_f64(runtime_seconds),
            fmt_f64(prepared.h),
            fmt_f64(prepared.mode_error),
        ])?;
    }
    w.flush()?;
    Ok(SampleSummary {
        ess: report.ess,
        accept_rate: report.accept_rate,
        runtime_seconds,
        h: prepared.h,
        mode_error: prepared.mode_error,
    })
}

/// One row of `bench.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub algo: Algo,
    pub dim: usize,
    pub result: std::result::Result<BenchCell, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub ess_x1: f64,
    pub ess_x2: Option<f64>,
    pub accept_rate: f64,
    pub h_used: f64,
}

/// Stream id of a bench cell; distinct for every `(algo, dim)`.
pub fn cell_stream(algo: Algo, dim: usize) -> u64 {
    ((algo as u64 + 1) << 40) | dim as u64
}

fn bench_cell(
    target_args: &TargetArgs,
    args: &ChainArgs,
    algo: Algo,
    dim: usize,
) -> Result<BenchCell> {
    let target = target_args.build(dim)?;
    let args = ChainArgs {
        algo,
        ..args.clone()
    };
    let stream = cell_stream(algo, dim);
    let prepared = prepare(&args, &target, stream)?;
    let cfg = sampler_config(&args, &prepared, stream)?;
    let trace = run_chain(&cfg, &target, &prepared.x0)?;
    let report = summarize(&trace)?;
    Ok(BenchCell {
        ess_x1: report.ess[0],
        ess_x2: report.ess.get(1).copied(),
        accept_rate: report.accept_rate,
        h_used: prepared.h,
    })
}

/// Runs every `(algo, dim)` cell in parallel; failures become error rows.
pub fn run_bench(
    target_args: &TargetArgs,
    args: &ChainArgs,
    algos: &[Algo],
    dims: &[usize],
) -> Result<Vec<BenchRow>> {
    if dims.is_empty() {
        bail!("--dims must list at least one dimension");
    }
    if algos.is_empty() {
        bail!("--algos must list at least one algorithm");
    }
    let cells: Vec<(Algo, usize)> = algos
        .iter()
        .flat_map(|a| dims.iter().map(move |d| (*a, *d)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(algo, dim)| BenchRow {
            algo,
            dim,
            result: bench_cell(target_args, args, algo, dim).map_err(|e| format!("{e:#}")),
        })
        .collect())
}

pub fn write_bench(rows: &[BenchRow], target: &str, seed: u64, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "algo",
        "target",
        "dim",
        "ess_x1",
        "ess_x2",
        "accept_rate",
        "h_used",
        "seed",
        "error",
    ])?;
    for row in rows {
        let algo = KernelKind::from(row.algo).name();
        let (dim, seed) = (row.dim.to_string(), seed.to_string());
        let record: Vec<String> = match &row.result {
            Ok(c) => vec![
                algo.into(),
                target.into(),
                dim,
                fmt_f64(c.ess_x1),
                c.ess_x2.map(fmt_f64).unwrap_or_default(),
                fmt_f64(c.accept_rate),
                fmt_f64(c.h_used),
                seed,
                String::new(),
            ],
            Err(msg) => vec![
                algo.into(),
                target.into(),
                dim,
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                seed,
                msg.clone(),
            ],
        };
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Output of `oracle`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub h: f64,
    pub tv_to_target: f64,
    pub reversibility: f64,
    pub leakage: f64,
    pub t_mix: Option<usize>,
    pub predicted_bound: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 512)]
    pub cells: usize,
    /// Divergence threshold for the mixing time.
    #[arg(long, default_value_t = 0.1)]
    pub mix_eps: f64,
    /// Order of the divergence (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
}

/// Discretizes the one-dimensional kernel and writes `stationary.csv` and
/// `trajectory.csv` into `out_dir`.
pub fn cmd_oracle(
    target_args: &TargetArgs,
    args: &ChainArgs,
    grid_args: &GridArgs,
    out_dir: &Path,
) -> Result<OracleSummary> {
    let target = target_args.build(1)?;
    let h = resolve_step(args, &target)?;
    let kernel = ProposalKernel::new(args.algo.into(), h, target.mode().to_vec())?;
    let grid = Grid1d::new(grid_args.lo, grid_args.hi, grid_args.cells)?;
    let gk = discretize(&kernel, &target, args.zeta, &grid)?;
    let st = stationary(&gk)?;
    let fs = FeasibleStart::for_target(&target)?;
    let mu0 = discretize_start(&fs, &grid)?;
    let traj = mixing_trajectory(
        &gk,
        &mu0,
        grid_args.mix_eps,
        grid_args.p,
        grid_args.max_steps,
    )?;
    let sched = schedule_for(args.eps, args.beta, args.c, args.schedule, &target)?;

    std::fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join("stationary.csv"))?;
    w.write_record(["x", "pi_disc", "stationary"])?;
    for ((x, p), s) in grid.points().iter().zip(&gk.pi_disc).zip(&st.distribution) {
        w.write_record([fmt_f64(*x), fmt_f64(*p), fmt_f64(*s)])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out_dir.join("trajectory.csv"))?;
    w.write_record(["step", "divergence"])?;
    for (k, v) in traj.divergences.iter().enumerate() {
        w.write_record([k.to_string(), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(OracleSummary {
        h,
        tv_to_target: st.tv_to_target,
        reversibility: gk.reversibility_residual(),
        leakage: gk.leakage,
        t_mix: traj.t_mix,
        predicted_bound: sched.predicted_mixing_bound,
    })
}

/// Optimizer run from a feasible-start draw; writes `optimize.csv`.
pub fn cmd_optimize(
    target_args: &TargetArgs,
    dim: usize,
    seed: u64,
    cfg: &OptimizerConfig,
    out_dir: &Path,
) -> Result<mao_core::ModeEstimate> {
    let target = target_args.build(dim)?;
    let fs = FeasibleStart::for_target(&target)?;
    let x0 = fs.sample_one(&mut stream_rng(seed, 1 << 63));
    let est = find_mode(&target, &x0, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join("optimize.csv"))?;
    w.write_record(["iter", "f"])?;
    for (k, v) in est.values.iter().enumerate() {
        w.write_record([k.to_string(), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(est)
}

/// Lines printed by `schedule`.
pub fn schedule_report(
    target_args: &TargetArgs,
    dim: usize,
    eps: f64,
    beta: f64,
    c: f64,
    which: ScheduleChoice,
) -> Result<Vec<(String, f64)>> {
    let target = target_args.build(dim)?;
    let s = schedule_for(eps, beta, c, which, &target)?;
    let k = target.constants();
    let bounds = predicted_bounds(&s, s.radius);
    Ok(vec![
        ("h".into(), s.h),
        ("omega".into(), s.omega),
        ("radius".into(), s.radius),
        ("tail_mass".into(), s.s),
        ("log_beta".into(), log_beta(k.k2, k.alpha, k.m, dim)),
        ("mixing_bound".into(), s.predicted_mixing_bound),
        ("warm_log_log".into(), bounds.warm_log_log),
        ("delta".into(), delta_tolerance(s.h, eps, c)),
    ])
}

/// Reads a flat `key = value` file into `--key value` arguments. Blank
/// lines and `#` comments are skipped.
pub fn config_file_args(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening config {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), n + 1);
        };
        out.push(format!("--{}", k.trim().replace('_', "-")));
        out.push(v.trim().to_string());
    }
    Ok(out)
}

pub fn print_pairs(out: &mut impl Write, pairs: &[(String, f64)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(out, "{k} = {}", fmt_f64(*v))?;
    }
    Ok(())
}
