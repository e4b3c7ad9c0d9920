use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use solar_core::harness::{self, AggregateMode, ExperimentConfig, RunMeta};
use solar_core::testbed::{self, instance_by_name};
use solar_core::{Error, SolarConfig, Trace};

#[derive(Parser)]
#[command(name = "solar", version, about = "Random-subspace optimisation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed the per-run streams are derived from.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarise the traces in a results directory.
    Aggregate {
        #[arg(long, value_parser = ["stddev", "minmax"])]
        mode: String,
        dir: PathBuf,
    },
    /// Final suboptimality of Solar across base-dimension ratios b/n.
    SweepB {
        #[arg(long)]
        instance: String,
        /// Comma-separated b/n ratios, e.g. 0.1,0.5,0.9
        #[arg(long, value_delimiter = ',', required = true)]
        b_grid: Vec<f64>,
        #[arg(long)]
        budget: u64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Outer iterations K.
        #[arg(long, default_value_t = 100)]
        outer: usize,
        /// Probes per inner iteration.
        #[arg(long, default_value_t = 1)]
        probes: usize,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a linear convergence rate on an iteration window of a trace.
    FitRate {
        #[arg(long)]
        trace: PathBuf,
        /// Inclusive inner-iteration window `lo:hi`.
        #[arg(long)]
        window: String,
        /// Optimal value; read from the trace's sidecar JSON when omitted.
        #[arg(long)]
        f_star: Option<f64>,
    },
    /// Print the instance catalogue as JSON.
    Catalogue,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::UnknownInstance(_)
            | Error::ZeroBudget
            | Error::InvalidBase { .. }
            | Error::GradientUnavailable
            | Error::InvalidWindow { .. }
            | Error::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn parse_window(s: &str) -> Result<(u64, u64), Failure> {
    let bad = || Failure::Config(format!("window must look like lo:hi, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            cfg.validate()?;
            let files = harness::run_experiment(&cfg)?;
            info!("wrote {} traces to {}", files.len(), cfg.output_dir.display());
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Aggregate { mode, dir } => {
            let mode: AggregateMode = mode.parse()?;
            let summaries = harness::aggregate_dir(&dir, mode)?;
            for s in &summaries {
                let last = s.evals.len() - 1;
                println!(
                    "{}: mean {} [{}, {}] at {} evals",
                    s.algorithm, s.mean[last], s.lower[last], s.upper[last], s.evals[last]
                );
            }
        }
        Command::SweepB {
            instance,
            b_grid,
            budget,
            seeds,
            master_seed,
            outer,
            probes,
            out,
        } => {
            let inst = instance_by_name(&instance)?;
            let template = SolarConfig {
                outer_iterations: outer,
                inner_iterations: budget.max(outer as u64) as usize,
                probes,
                ..SolarConfig::default()
            };
            let bs = harness::ratios_to_b(&b_grid, inst.dim());
            let rows = harness::sweep_b(&inst, &template, &bs, budget, &seeds, master_seed)?;
            let table = harness::sweep_table_csv(&rows);
            match out {
                Some(path) => std::fs::write(&path, table).map_err(Error::from)?,
                None => print!("{table}"),
            }
        }
        Command::FitRate {
            trace,
            window,
            f_star,
        } => {
            let (lo, hi) = parse_window(&window)?;
            let t = Trace::from_csv(&std::fs::read_to_string(&trace).map_err(Error::from)?)?;
            let f_star = match f_star {
                Some(v) => v,
                None => {
                    let meta: RunMeta = serde_json::from_str(
                        &std::fs::read_to_string(trace.with_extension("json")).map_err(Error::from)?,
                    )
                    .map_err(Error::from)?;
                    meta.f_star.ok_or_else(|| {
                        Failure::Config("instance has no known optimum; pass --f-star".into())
                    })?
                }
            };
            let fit = harness::fit_linear_rate(&t, lo, hi, f_star)?;
            if fit.r_squared < 0.8 {
                warn!("poor log-linear fit (R^2 = {})", fit.r_squared);
            }
            println!("{}", serde_json::to_string(&fit).map_err(Error::from)?);
        }
        Command::Catalogue => {
            let list: Vec<_> = testbed::catalogue().iter().map(|p| p.descriptor()).collect();
            println!("{}", serde_json::to_string_pretty(&list).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
