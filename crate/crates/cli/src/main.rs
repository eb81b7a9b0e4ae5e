use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use mao_cli::{
    cmd_optimize, cmd_oracle, cmd_sample, config_file_args, print_pairs, run_bench,
    schedule_report, write_bench, Algo, ChainArgs, GridArgs, ScheduleChoice, TargetArgs,
};
use mao_core::optimizer::OptimizerConfig;

#[derive(Parser)]
#[command(
    name = "mao",
    version,
    about = "Metropolized samplers for thin-tailed targets",
    args_override_self = true
)]
struct Cli {
    /// Flat `key = value` file; entries are applied before command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain and write trace.csv and report.csv.
    #[command(args_override_self = true)]
    Sample {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep algorithms and dimensions and write bench.csv.
    #[command(args_override_self = true)]
    Bench {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64,128")]
        dims: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "mala,mao")]
        algos: Vec<Algo>,
        #[command(flatten)]
        chain: ChainArgs,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
    },
    /// Find the mode with the Bregman gradient scheme.
    #[command(args_override_self = true)]
    Optimize {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative-smoothness constant; defaults to a bound from the target's constants.
        #[arg(long)]
        l_rel: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        grad_tol: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Discretize a one-dimensional kernel and check stationarity and mixing.
    #[command(args_override_self = true)]
    Oracle {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the step size, warmness and predicted bounds.
    #[command(args_override_self = true)]
    Schedule {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, value_enum, default_value = "b")]
        schedule: ScheduleChoice,
    },
}

fn parse() -> Result<Cli> {
    let raw: Vec<String> = std::env::args().collect();
    let first = Cli::parse_from(&raw);
    let Some(path) = first.config else {
        return Ok(first);
    };
    // config entries go right after the subcommand so explicit flags win
    let sub_at = raw
        .iter()
        .position(|a| ["sample", "bench", "optimize", "oracle", "schedule"].contains(&a.as_str()))
        .unwrap_or(raw.len() - 1);
    let mut merged = raw[..=sub_at].to_vec();
    merged.extend(config_file_args(&path)?);
    merged.extend_from_slice(&raw[sub_at + 1..]);
    Ok(Cli::parse_from(merged))
}

fn run() -> Result<()> {
    let cli = parse()?;
    let stdout = &mut std::io::stdout();
    match cli.command {
        Command::Sample {
            target,
            dim,
            chain,
            out,
        } => {
            let s = cmd_sample(&target, dim, &chain, &out)?;
            let mut pairs = vec![
                ("h".to_string(), s.h),
                ("accept_rate".to_string(), s.accept_rate),
                ("runtime_seconds".to_string(), s.runtime_seconds),
                ("mode_error".to_string(), s.mode_error),
            ];
            pairs.extend(
                s.ess
                    .iter()
                    .take(8)
                    .enumerate()
                    .map(|(j, e)| (format!("ess_x{}", j + 1), *e)),
            );
            print_pairs(stdout, &pairs)?;
        }
        Command::Bench {
            target,
            dims,
            algos,
            chain,
            threads,
            out,
        } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()?;
            let rows = pool.install(|| run_bench(&target, &chain, &algos, &dims))?;
            write_bench(&rows, target.kind().name(), chain.seed, &out)?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            println!(
                "wrote {} rows to {} ({failed} failed)",
                rows.len(),
                out.display()
            );
        }
        Command::Optimize {
            target,
            dim,
            seed,
            l_rel,
            max_iters,
            grad_tol,
            out,
        } => {
            let potential = target.build(dim)?;
            let mut cfg = OptimizerConfig::for_target(&potential);
            if let Some(l) = l_rel {
                cfg.l_rel = l;
            }
            cfg.max_iters = max_iters;
            cfg.grad_tol = grad_tol;
            let est = cmd_optimize(&target, dim, seed, &cfg, &out)?;
            let dist = est.x_tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("iters = {}", est.iters);
            println!("converged = {}", est.converged);
            print_pairs(
                stdout,
                &[
                    ("grad_norm".into(), est.grad_norm),
                    ("x_tilde_norm".into(), dist),
                ],
            )?;
        }
        Command::Oracle {
            target,
            chain,
            grid,
            out,
        } => {
            let s = cmd_oracle(&target, &chain, &grid, &out)?;
            print_pairs(
                stdout,
                &[
                    ("h".into(), s.h),
                    ("tv_to_target".into(), s.tv_to_target),
                    ("reversibility_residual".into(), s.reversibility),
                    ("leakage".into(), s.leakage),
                    ("predicted_bound".into(), s.predicted_bound),
                ],
            )?;
            match s.t_mix {
                Some(t) => println!("t_mix = {t}"),
                None => println!("t_mix = unreached"),
            }
        }
        Command::Schedule {
            target,
            dim,
            eps,
            beta,
            c,
            schedule,
        } => {
            print_pairs(
                stdout,
                &schedule_report(&target, dim, eps, beta, c, schedule)?,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
