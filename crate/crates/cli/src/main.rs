//! `labelshift`: run label-shift excess-risk simulations.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 when any cell
//! recorded a fitting failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use labelshift::experiments::{
    run_cell, run_grid, summarize, write_csv, write_csv_to, ExperimentConfig, ExperimentRecord, Method, Preset,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_CELL_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "labelshift",
    version,
    about = "Excess-risk simulations for label-shift classifiers"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed from which every data stream is derived.
    #[arg(long, global = true)]
    master_seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one of the built-in experiment grids.
    Simulate {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        test_n: Option<usize>,
        /// CSV output path; the summary table is printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write wallclock_ms as 0 so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run a grid described by a TOML config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one method on a single (n_P, n_Q, seed) cell.
    Evaluate {
        #[arg(long)]
        method: Method,
        #[arg(long = "n-p")]
        n_p: usize,
        #[arg(long = "n-q")]
        n_q: usize,
        #[arg(long, default_value_t = 0)]
        seed: usize,
        #[arg(long)]
        test_n: Option<usize>,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn config_error<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(records) => {
            if records.iter().any(ExperimentRecord::failed) {
                ExitCode::from(EXIT_CELL_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<Vec<ExperimentRecord>, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(config_error(anyhow::anyhow!("--threads must be at least 1")));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let master_seed = cli.global.master_seed;
    pool.install(|| match cli.command {
        Command::Simulate {
            preset,
            seeds,
            test_n,
            out,
            no_timing,
        } => {
            let mut cfg = ExperimentConfig::preset(preset);
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(t) = test_n {
                cfg.test_n = t;
            }
            if let Some(m) = master_seed {
                cfg.master_seed = m;
            }
            cfg.record_timing = !no_timing;
            run_and_report(cfg, out)
        }
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(config_error)?;
            let mut cfg: ExperimentConfig = toml::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))
                .map_err(config_error)?;
            if let Some(m) = master_seed {
                cfg.master_seed = m;
            }
            run_and_report(cfg, out)
        }
        Command::Evaluate {
            method,
            n_p,
            n_q,
            seed,
            test_n,
        } => {
            let mut cfg = ExperimentConfig {
                n_p_grid: vec![n_p],
                n_q_grid: vec![n_q],
                methods: vec![method],
                seeds: seed + 1,
                ..ExperimentConfig::default()
            };
            if let Some(t) = test_n {
                cfg.test_n = t;
            }
            if let Some(m) = master_seed {
                cfg.master_seed = m;
            }
            let cfg = cfg.resolve().map_err(config_error)?;
            let records = run_cell(&cfg, n_p, n_q, seed)?;
            write_csv_to(&records, std::io::stdout().lock())?;
            for r in &records {
                if let Some(risk) = &r.risk {
                    println!(
                        "# method_risk={:.6} bayes_risk={:.6} test_n={}",
                        risk.method_risk, risk.bayes_risk, risk.test_n
                    );
                }
            }
            Ok(records)
        }
    })
}

fn run_and_report(cfg: ExperimentConfig, out: Option<PathBuf>) -> Result<Vec<ExperimentRecord>, Failure> {
    let cfg = cfg.resolve().map_err(config_error)?;
    log::info!(
        "running {} cells x {} seeds, methods {:?}",
        cfg.cells().len(),
        cfg.seeds,
        cfg.methods
    );
    let records = run_grid(&cfg)?;
    if let Some(path) = out {
        write_csv(&records, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", summarize(&records));
    Ok(records)
}
