//! Pipelines behind the `pathspeed` binary: solve, benchmark and
//! oracle-check. Each takes a [`RunConfig`] and writes its results below
//! `config.output`.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{propagate_bounds, solve_chain, Subsolver};
use crate::check::{self, CheckInstance, CheckReport, RandomChainSpec};
use crate::discretize::discretize;
use crate::error::{Error, Result};
use crate::profile::{audit_feasibility, time_parametrize, AuditReport, SpeedProfile};

pub use config::{BenchmarkConfig, CheckConfig, ConstantModelSpec, Mode, ModelSpec, RunConfig};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::AssumptionViolated { .. }
        | Error::InvalidModel(_)
        | Error::InvalidPath(_)
        | Error::CoincidentWaypoints { .. } => EXIT_ASSUMPTION,
        _ => EXIT_FAILURE,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySummary {
    pub relative: f64,
    pub position: f64,
    pub joint: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSummary {
    pub grid: usize,
    pub torque: FamilySummary,
    pub acceleration: FamilySummary,
    pub velocity: FamilySummary,
    pub at_samples: f64,
    pub undershoot: f64,
}

impl From<&AuditReport> for AuditSummary {
    fn from(r: &AuditReport) -> Self {
        let family = |f: &crate::profile::FamilyViolation| FamilySummary {
            relative: f.relative,
            position: f.position,
            joint: f.joint,
        };
        Self {
            grid: r.grid,
            torque: family(&r.torque),
            acceleration: family(&r.acceleration),
            velocity: family(&r.velocity),
            at_samples: r.at_samples,
            undershoot: r.undershoot,
        }
    }
}

/// Deterministic part of a solve: identical configs give identical values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub model: String,
    pub dof: usize,
    pub n: usize,
    pub path_length: f64,
    pub step: f64,
    pub constraints: usize,
    /// `None` when the profile never leaves rest.
    pub travel_time: Option<f64>,
    pub iterations: usize,
    pub max_iterations: usize,
    pub trajectory_duration: Option<f64>,
    pub trajectory_samples: usize,
    pub stall: Option<String>,
    pub audit: AuditSummary,
}

/// Wall-clock timings of a solve, kept apart from the summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveTiming {
    pub discretize_seconds: f64,
    pub solve_seconds: f64,
    pub trajectory_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub summary: SolveSummary,
    pub timing: SolveTiming,
    pub files: Vec<PathBuf>,
}

/// Discretizes, solves, lifts and time-parametrizes; writes `profile.csv`,
/// `trajectory.csv`, `summary.json` and `timing.json`.
pub fn run_solve(config: &RunConfig) -> Result<SolveOutcome> {
    let model = config.build_model()?;
    let path = config.build_path()?;

    let t0 = Instant::now();
    let problem = discretize(&model, &path, config.n)?;
    let discretize_seconds = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let solution = solve_chain(problem.chain(), Subsolver::Linear)?;
    let solve_seconds = t0.elapsed().as_secs_f64();

    let profile = SpeedProfile::new(&problem, solution.v.clone())?;
    let audit = audit_feasibility(&profile, &problem, config.audit_grid());
    let out = &config.output;
    let mut files = vec![write_profile(out, &profile)?];

    let t0 = Instant::now();
    let (trajectory, stall) = if profile.travel_time.is_finite() {
        match time_parametrize(&profile, &path, config.dt) {
            Ok(t) => (Some(t), None),
            Err(e @ Error::Stall { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    } else {
        (None, Some("profile is at rest everywhere".to_string()))
    };
    let trajectory_seconds = t0.elapsed().as_secs_f64();

    let (tpath, mut w) = create(out, "trajectory.csv")?;
    let p = problem.dof();
    let mut header = vec!["t".to_string(), "s".to_string()];
    header.extend((1..=p).map(|j| format!("q{j}")));
    header.extend((1..=p).map(|j| format!("qd{j}")));
    header.extend((1..=p).map(|j| format!("tau{j}")));
    writeln!(w, "{}", header.join(","))?;
    if let Some(traj) = &trajectory {
        for smp in &traj.samples {
            let mut row = vec![fmt(smp.t), fmt(smp.s)];
            row.extend(smp.position.iter().map(|x| fmt(*x)));
            row.extend(smp.velocity.iter().map(|x| fmt(*x)));
            row.extend(smp.torque.iter().map(|x| fmt(*x)));
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    files.push(tpath);

    let summary = SolveSummary {
        model: model.dynamics().name().to_string(),
        dof: p,
        n: config.n,
        path_length: path.length(),
        step: problem.step(),
        constraints: problem.chain().constraint_count(),
        travel_time: profile.travel_time.is_finite().then_some(profile.travel_time),
        iterations: solution.stats.iterations,
        max_iterations: solution.stats.max_iterations,
        trajectory_duration: trajectory.as_ref().map(|t| t.duration),
        trajectory_samples: trajectory.as_ref().map_or(0, |t| t.samples.len()),
        stall,
        audit: AuditSummary::from(&audit),
    };
    let timing = SolveTiming {
        discretize_seconds,
        solve_seconds,
        trajectory_seconds,
    };
    files.push(write_json(out, "summary.json", &summary)?);
    files.push(write_json(out, "timing.json", &timing)?);
    Ok(SolveOutcome {
        summary,
        timing,
        files,
    })
}

/// `s, b, v, a, tau…` per node; the last node repeats the last edge's `a`
/// and torques.
fn write_profile(dir: &Path, profile: &SpeedProfile) -> Result<PathBuf> {
    let (path, mut w) = create(dir, "profile.csv")?;
    let p = profile.torque.first().map_or(0, |t| t.len());
    let mut header = vec!["s".to_string(), "b".into(), "v".into(), "a".into()];
    header.extend((1..=p).map(|j| format!("tau{j}")));
    writeln!(w, "{}", header.join(","))?;
    let n = profile.nodes();
    for i in 0..n {
        let e = i.min(n - 2);
        let mut row = vec![
            fmt(profile.s[i]),
            fmt(profile.b[i]),
            fmt(profile.b[i].max(0.0).sqrt()),
            fmt(profile.a[e]),
        ];
        row.extend(profile.torque[e].iter().map(|x| fmt(*x)));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub n: usize,
    pub constraints: usize,
    pub repeats: usize,
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub oracle_median_seconds: Option<f64>,
    pub oracle_sweeps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub include_discretization: bool,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    /// Ratio of median times between sizes `large` and `small`.
    pub fn ratio(&self, large: usize, small: usize) -> Option<f64> {
        let find = |n| self.rows.iter().find(|r| r.n == n).map(|r| r.median_seconds);
        Some(find(large)? / find(small)?)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Times the solve at every configured size (median of the repeats) and
/// the propagation oracle for contrast; writes `benchmark.csv`.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkReport> {
    let model = config.build_model()?;
    let path = config.build_path()?;
    let bench = &config.benchmark;
    let problems = bench
        .sizes
        .iter()
        .map(|&n| discretize(&model, &path, n))
        .collect::<Result<Vec<_>>>()?;
    for problem in &problems {
        // warm-up
        std::hint::black_box(solve_chain(problem.chain(), Subsolver::Linear)?);
    }
    // sizes are interleaved within each repeat so that drift in machine load
    // affects all of them alike
    let mut times = vec![Vec::with_capacity(bench.repeats); problems.len()];
    for _ in 0..bench.repeats {
        for (k, problem) in problems.iter().enumerate() {
            let t0 = Instant::now();
            if bench.include_discretization {
                let p = discretize(&model, &path, problem.nodes())?;
                std::hint::black_box(solve_chain(p.chain(), Subsolver::Linear)?);
            } else {
                std::hint::black_box(solve_chain(problem.chain(), Subsolver::Linear)?);
            }
            times[k].push(t0.elapsed().as_secs_f64());
        }
    }
    let mut rows = Vec::new();
    for (problem, times) in problems.iter().zip(times) {
        let n = problem.nodes();
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let (oracle_median_seconds, oracle_sweeps) = if n <= bench.oracle_max_n {
            let mut otimes = Vec::new();
            let mut sweeps = 0;
            for _ in 0..bench.repeats.min(3) {
                let t0 = Instant::now();
                let r = propagate_bounds(problem.chain(), usize::MAX);
                otimes.push(t0.elapsed().as_secs_f64());
                sweeps = r.sweeps;
            }
            (Some(median(otimes)), Some(sweeps))
        } else {
            (None, None)
        };
        rows.push(BenchmarkRow {
            n,
            constraints: problem.chain().constraint_count(),
            repeats: bench.repeats,
            median_seconds: median(times),
            min_seconds: min,
            oracle_median_seconds,
            oracle_sweeps,
        });
    }

    let (_, mut w) = create(&config.output, "benchmark.csv")?;
    writeln!(w, "n,constraints,repeats,median_seconds,min_seconds,oracle_median_seconds,oracle_sweeps")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            r.constraints,
            r.repeats,
            fmt(r.median_seconds),
            fmt(r.min_seconds),
            r.oracle_median_seconds.map(fmt).unwrap_or_default(),
            r.oracle_sweeps.map(|s| s.to_string()).unwrap_or_default()
        )?;
    }
    w.flush()?;
    Ok(BenchmarkReport {
        include_discretization: bench.include_discretization,
        rows,
    })
}

/// Instances of an oracle check: the worked two-node instance, an all-zero
/// box instance, `trials` random linear chains and, if enabled, the
/// discretized model at `config.n`.
pub fn check_instances(config: &RunConfig) -> Result<Vec<CheckInstance>> {
    let c = &config.check;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let spec = RandomChainSpec {
        max_nodes: c.max_nodes,
        max_forward: c.max_constraints,
        max_backward: c.max_constraints,
        ..Default::default()
    };
    let mut instances = vec![CheckInstance {
        name: "worked".into(),
        problem: check::worked_instance(),
    }];
    let zero = check::random_chain(&mut rng, &spec);
    instances.push(CheckInstance {
        name: "all-zero".into(),
        problem: zero.with_upper(vec![0.0; zero.len()])?,
    });
    for k in 0..c.trials {
        instances.push(CheckInstance {
            name: format!("random-{k}"),
            problem: check::random_chain(&mut rng, &spec),
        });
    }
    if c.include_model {
        let problem = discretize(&config.build_model()?, &config.build_path()?, config.n)?;
        instances.push(CheckInstance {
            name: format!("model-n{}", config.n),
            problem: problem.chain().clone(),
        });
    }
    Ok(instances)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct CheckSummary {
    instances: usize,
    failures: usize,
    max_deviation: f64,
    tolerance: f64,
    passed: bool,
}

/// Cross-checks all instances; writes `check.csv` and `check.json`.
pub fn run_oracle_check(config: &RunConfig) -> Result<CheckReport> {
    let instances = check_instances(config)?;
    let report = check::run_checks(&instances, config.check.max_sweeps, check::worker_count())?;
    let (_, mut w) = create(&config.output, "check.csv")?;
    writeln!(w, "name,nodes,deviation,sweeps,converged")?;
    for r in &report.instances {
        writeln!(w, "{},{},{},{},{}", r.name, r.nodes, fmt(r.deviation), r.sweeps, r.converged)?;
    }
    w.flush()?;
    write_json(
        &config.output,
        "check.json",
        &CheckSummary {
            instances: report.instances.len(),
            failures: report.failures().count(),
            max_deviation: report.max_deviation,
            tolerance: check::CHECK_TOLERANCE,
            passed: report.passed(),
        },
    )?;
    Ok(report)
}
