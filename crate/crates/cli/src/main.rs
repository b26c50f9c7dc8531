use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use ltlcoord::planner::PrefixSuffixPlan;
use ltlcoord::report::{self, PLANS_FILE};
use ltlcoord::scenario::Scenario;
use ltlcoord::simulator::{Simulator, Termination};

/// Log verbosity, in `env_logger` filter syntax (`error`, `info`, `ltlcoord=debug`, ...).
const LOG_ENV: &str = "LTLCOORD_LOG";

/// Exit status when some formula has no plan.
const EXIT_INFEASIBLE: u8 = 2;
/// Exit status when a run stopped on a violation or a guarantee check failed.
const EXIT_VIOLATION: u8 = 3;
/// Exit status when `check` recomputes a different summary.
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "ltlcoord",
    version,
    about = "Plan, simulate and verify LTL-driven multi-agent coordination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize and print one plan per agent.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        /// Also write plans.tsv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan, simulate and export all artifacts.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-evaluate the monitors on exported artifacts and compare with summary.tsv.
    Check {
        /// Directory written by `run`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several scenarios (and/or seeds) concurrently, one subdirectory each.
    Batch {
        /// May be repeated.
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Number of consecutive seeds per scenario, starting at --seed (or the file's seed).
        #[arg(long, default_value_t = 1)]
        runs: u64,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct Overrides {
    /// Integrator step size.
    #[arg(long)]
    h: Option<f64>,
    /// Final time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Seed for randomized model parameters.
    #[arg(long)]
    seed: Option<u64>,
    /// Delay before agents learn of a counter update.
    #[arg(long = "broadcast-delay")]
    broadcast_delay: Option<f64>,
}

impl Overrides {
    fn apply(&self, scenario: Scenario) -> Result<Scenario> {
        let scenario = match self.seed {
            Some(s) => scenario.with_seed(s)?,
            None => scenario,
        };
        Ok(scenario.with_integrator(self.h, self.t_end, self.broadcast_delay)?)
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let scenario = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    for w in &scenario.warnings {
        warn!("{}: {w}", path.display());
    }
    Ok(scenario)
}

fn print_plans(scenario: &Scenario, plans: &[Option<PrefixSuffixPlan>]) {
    for (i, p) in plans.iter().enumerate() {
        let f = &scenario.agents[i].formula_text;
        match p {
            Some(p) => println!("agent {}: {p}    [{f}]", i + 1),
            None => println!("agent {}: infeasible    [{f}]", i + 1),
        }
    }
}

/// Plans for every agent, or the 1-based indices of infeasible ones.
fn feasible_plans(
    plans: Vec<Option<PrefixSuffixPlan>>,
) -> Result<Vec<PrefixSuffixPlan>, Vec<usize>> {
    let missing: Vec<usize> = plans
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(i, _)| i + 1)
        .collect();
    if missing.is_empty() {
        Ok(plans.into_iter().flatten().collect())
    } else {
        Err(missing)
    }
}

fn cmd_plan(path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let scenario = load(path)?;
    let plans = scenario.synthesize_plans();
    print_plans(&scenario, &plans);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        report::write_plans(&dir.join(PLANS_FILE), &scenario, &plans)?;
    }
    Ok(match feasible_plans(plans) {
        Ok(_) => ExitCode::SUCCESS,
        Err(missing) => {
            eprintln!("no plan for agent(s) {missing:?}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
    })
}

enum RunOutcome {
    Ok,
    Infeasible,
    Failed,
}

impl RunOutcome {
    fn code(&self) -> ExitCode {
        match self {
            RunOutcome::Ok => ExitCode::SUCCESS,
            RunOutcome::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
            RunOutcome::Failed => ExitCode::from(EXIT_VIOLATION),
        }
    }
}

fn run_one(scenario: &Scenario, out: &Path, quiet: bool) -> Result<RunOutcome> {
    let plans = match feasible_plans(scenario.synthesize_plans()) {
        Ok(p) => p,
        Err(missing) => {
            eprintln!("{}: no plan for agent(s) {missing:?}", out.display());
            return Ok(RunOutcome::Infeasible);
        }
    };
    let start = Instant::now();
    let sim = Simulator::<f64>::new(scenario.sim_setup(plans.clone()), scenario.sim_config())?;
    let log = sim.run();
    info!(
        "{}: simulated {} s with h = {} in {:.2?}",
        out.display(),
        scenario.t_end,
        scenario.h,
        start.elapsed()
    );
    let verdict = report::evaluate_run(scenario, &plans, &log);
    report::write_run(out, scenario, &plans, &log, &verdict)?;
    if !quiet {
        for (k, v) in report::summary_rows(&log, &verdict) {
            println!("{k}\t{v}");
        }
    }
    if let Termination::Violation { t, detail } = &log.termination {
        eprintln!("{}: stopped at t = {t}: {detail}", out.display());
        return Ok(RunOutcome::Failed);
    }
    Ok(if verdict.all_ok() {
        RunOutcome::Ok
    } else {
        RunOutcome::Failed
    })
}

fn cmd_run(path: &Path, out: &Path, overrides: Overrides) -> Result<ExitCode> {
    let scenario = overrides.apply(load(path)?)?;
    Ok(run_one(&scenario, out, false)?.code())
}

fn cmd_check(dir: &Path) -> Result<ExitCode> {
    let outcome = report::check_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for (k, v) in &outcome.recomputed {
        println!("{k}\t{v}");
    }
    if !outcome.matches() {
        eprintln!("summary mismatch in: {}", outcome.mismatches().join(", "));
        return Ok(ExitCode::from(EXIT_MISMATCH));
    }
    Ok(if outcome.verdict.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VIOLATION)
    })
}

fn cmd_batch(
    paths: &[PathBuf],
    out: &Path,
    runs: u64,
    jobs: Option<usize>,
    overrides: Overrides,
) -> Result<ExitCode> {
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let mut tasks = Vec::new();
    for path in paths {
        let base = overrides.apply(load(path)?)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        for k in 0..runs {
            let seed = base.seed + k;
            let scenario = base.with_seed(seed)?;
            let name = if runs == 1 {
                stem.clone()
            } else {
                format!("{stem}-seed{seed}")
            };
            tasks.push((out.join(name), scenario));
        }
    }
    let workers = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, tasks.len());
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some((dir, scenario)) = tasks.get(k) else {
                    break;
                };
                let r = run_one(scenario, dir, true);
                results.lock().unwrap().push((k, r));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(k, _)| *k);
    let mut code = ExitCode::SUCCESS;
    for (k, r) in results {
        let dir = tasks[k].0.display();
        match r {
            Ok(RunOutcome::Ok) => println!("{dir}\tok"),
            Ok(o @ (RunOutcome::Infeasible | RunOutcome::Failed)) => {
                println!(
                    "{dir}\t{}",
                    if matches!(o, RunOutcome::Infeasible) {
                        "infeasible"
                    } else {
                        "failed"
                    }
                );
                code = o.code();
            }
            Err(e) => {
                println!("{dir}\terror: {e:#}");
                code = ExitCode::FAILURE;
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { scenario, out } => cmd_plan(scenario, out.as_deref()),
        Command::Run {
            scenario,
            out,
            overrides,
        } => cmd_run(scenario, out, *overrides),
        Command::Check { out } => cmd_check(out),
        Command::Batch {
            scenario,
            out,
            runs,
            jobs,
            overrides,
        } => cmd_batch(scenario, out, *runs, *jobs, *overrides),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
