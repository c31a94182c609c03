use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osmd::runner::{self, Fig1Options, RunConfig, Summary, SweepConfig};
use osmd::suites::{run_suite, Suite};
use osmd::Error;

#[derive(Parser)]
#[command(name = "osmd", version, about = "Online stochastic mirror descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Plain versus shifted INF on the five-armed Bernoulli instance.
    Fig1 {
        #[arg(long, default_value_t = 100)]
        repeats: u64,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Run every point of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Run numerical check suites; exits nonzero if any check fails.
    Check {
        /// unbiased, exp3, lemma4, graph, lp, bayes or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn print_summary(s: &Summary) {
    println!("{} (n = {}, {} runs)", s.experiment, s.horizon, s.repeats);
    for a in &s.algorithms {
        println!(
            "  {:<16} eta = {:<12.6e} final regret {:.3} ± {:.3} (se)",
            a.name, a.eta, a.final_mean, a.final_se
        );
    }
    println!("  uniform player final regret {:.3}", s.uninformed_final_mean);
    if !s.extra.is_null() {
        println!("  {}", s.extra);
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, workers } => {
            let cfg = RunConfig::load(&config)?;
            print_summary(&runner::run_experiment(&cfg, workers)?);
        }
        Command::Fig1 {
            repeats,
            horizon,
            seed,
            out,
            workers,
        } => {
            let opts = Fig1Options {
                repeats,
                horizon,
                seed,
                out,
            };
            print_summary(&runner::run_fig1(&opts, workers)?);
        }
        Command::Sweep { config, workers } => {
            let (sweep, dir) = SweepConfig::load(&config)?;
            for s in runner::run_sweep(&sweep, dir.as_deref(), workers)? {
                print_summary(&s);
            }
        }
        Command::Check {
            suite,
            seed,
            workers,
            json,
        } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::parse(&suite)?]
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut reports = Vec::new();
            for s in suites {
                let report = pool.install(|| run_suite(s, seed))?;
                for c in &report.checks {
                    println!(
                        "{} {}: {}: observed {:.6e}, threshold {:.6e} ({})",
                        if c.passed { "PASS" } else { "FAIL" },
                        s.name(),
                        c.name,
                        c.observed,
                        c.threshold,
                        c.detail
                    );
                }
                println!("{} finished in {:.2} s", s.name(), report.elapsed_secs);
                reports.push(report);
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&reports)?;
                std::fs::write(&path, text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            }
            return Ok(reports.iter().all(|r| r.passed()));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Error::Config(errors)) => {
            eprintln!("invalid configuration:");
            for e in errors {
                eprintln!("  {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
