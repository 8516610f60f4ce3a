use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathspeed::cli::{self, RunConfig};

#[derive(Parser)]
#[command(name = "pathspeed", version, about = "Time-optimal speed planning along a fixed path")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Number of discretization nodes (overrides the config).
    #[arg(long)]
    n: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the profile and trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Time the solver at several sizes.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        include_discretization: bool,
    },
    /// Cross-check the solver against bound propagation on random chains.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(common: &Common) -> pathspeed::Result<RunConfig> {
    let mut config = RunConfig::from_file(&common.config)?;
    if let Some(n) = common.n {
        config.n = n;
    }
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> pathspeed::Result<i32> {
    match command {
        Command::Solve { common } => {
            let config = load(&common)?;
            let outcome = cli::run_solve(&config)?;
            let s = &outcome.summary;
            match s.travel_time {
                Some(t) => println!("n={} travel_time={t:.9}", s.n),
                None => println!("n={} travel_time=inf", s.n),
            }
            println!(
                "solve {:.3} ms, audit max violation {:.3e}",
                outcome.timing.solve_seconds * 1e3,
                s.audit.torque.relative.max(s.audit.acceleration.relative).max(s.audit.velocity.relative)
            );
            if let Some(msg) = &s.stall {
                eprintln!("trajectory skipped: {msg}");
            }
            println!("wrote {}", config.output.display());
            Ok(0)
        }
        Command::Bench {
            common,
            sizes,
            repeats,
            include_discretization,
        } => {
            let mut config = load(&common)?;
            if let Some(sizes) = sizes {
                config.benchmark.sizes = sizes;
            }
            if let Some(r) = repeats {
                config.benchmark.repeats = r;
            }
            config.benchmark.include_discretization |= include_discretization;
            config.validate()?;
            let report = cli::run_benchmark(&config)?;
            for r in &report.rows {
                print!("n={:>7} median {:>10.4} ms", r.n, r.median_seconds * 1e3);
                if let Some(o) = r.oracle_median_seconds {
                    print!("  propagation {:>10.4} ms ({} sweeps)", o * 1e3, r.oracle_sweeps.unwrap_or(0));
                }
                println!();
            }
            Ok(0)
        }
        Command::Check { common, trials, seed } => {
            let mut config = load(&common)?;
            if let Some(t) = trials {
                config.check.trials = t;
            }
            if let Some(s) = seed {
                config.check.seed = s;
            }
            let report = cli::run_oracle_check(&config)?;
            let failures = report.failures().count();
            println!(
                "{} instances, max deviation {:.3e}, {} failed",
                report.instances.len(),
                report.max_deviation,
                failures
            );
            for f in report.failures().take(10) {
                eprintln!("  {}: deviation {:.3e}, converged {}", f.name, f.deviation, f.converged);
            }
            Ok(if failures == 0 { 0 } else { cli::EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
