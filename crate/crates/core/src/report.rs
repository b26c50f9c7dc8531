//! Run artifacts on disk: tab-separated tables with a header row, one file
//! per artifact class, plus a copy of the scenario. `docs/FORMATS.md`
//! describes every column. Floats are written in Rust's shortest
//! round-trip form, so reading a table back reproduces the values exactly.

use std::collections::BTreeMap;
use std::path::Path;

use crate::ltl::Formula;
use crate::monitor::{evaluate, MonitorInput, Verdict};
use crate::planner::{PlanStep, PrefixSuffixPlan};
use crate::scalar::{dist_sq, SpdMatrix};
use crate::scenario::{Scenario, ScenarioError};
use crate::simulator::{
    EventKind, LyapunovStep, Sample, SimError, SimEvent, Simulator, Termination, TrajectoryLog,
};

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const PLANS_FILE: &str = "plans.tsv";
pub const TRAJECTORY_FILE: &str = "trajectory.tsv";
pub const EVENTS_FILE: &str = "events.tsv";
pub const MONITOR_FILE: &str = "monitor.tsv";
pub const LYAPUNOV_FILE: &str = "lyapunov.tsv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}, row {row}: {msg}")]
    Format {
        path: String,
        row: usize,
        msg: String,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ReportError> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(csv_err(path))
}

fn join(services: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    services
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn split(field: &str) -> Vec<String> {
    if field.is_empty() {
        Vec::new()
    } else {
        field.split(',').map(str::to_string).collect()
    }
}

/// Header-indexed rows of one table.
struct Table {
    path: String,
    columns: BTreeMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, ReportError> {
        let mut r = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(csv_err(path))?;
        let columns = r
            .headers()
            .map_err(csv_err(path))?
            .iter()
            .enumerate()
            .map(|(k, h)| (h.to_string(), k))
            .collect();
        let rows = r
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(csv_err(path))?;
        Ok(Self {
            path: path.display().to_string(),
            columns,
            rows,
        })
    }

    fn err(&self, row: usize, msg: impl Into<String>) -> ReportError {
        ReportError::Format {
            path: self.path.clone(),
            row: row + 1,
            msg: msg.into(),
        }
    }

    fn str(&self, row: usize, col: &str) -> Result<&str, ReportError> {
        let k = *self
            .columns
            .get(col)
            .ok_or_else(|| self.err(row, format!("missing column {col}")))?;
        self.rows[row]
            .get(k)
            .ok_or_else(|| self.err(row, format!("missing field {col}")))
    }

    fn parse<V: std::str::FromStr>(&self, row: usize, col: &str) -> Result<V, ReportError> {
        let s = self.str(row, col)?;
        s.parse()
            .map_err(|_| self.err(row, format!("cannot parse {col} = {s:?}")))
    }

    fn opt<V: std::str::FromStr>(&self, row: usize, col: &str) -> Result<Option<V>, ReportError> {
        if self.str(row, col)?.is_empty() {
            Ok(None)
        } else {
            self.parse(row, col).map(Some)
        }
    }
}

/// Writes `plans.tsv`; `None` entries are recorded as infeasible.
pub fn write_plans(
    path: &Path,
    scenario: &Scenario,
    plans: &[Option<PrefixSuffixPlan>],
) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let e = csv_err(path);
    w.write_record(["agent", "formula", "index", "part", "point", "services"])
        .map_err(e)?;
    for (i, plan) in plans.iter().enumerate() {
        let agent = (i + 1).to_string();
        let formula = scenario.agents[i].formula_text.as_str();
        match plan {
            None => w
                .write_record([agent.as_str(), formula, "", "infeasible", "", ""])
                .map_err(csv_err(path))?,
            Some(p) => {
                for s in 1..=p.len() {
                    let part = if s <= p.prefix_len() {
                        "prefix"
                    } else {
                        "suffix"
                    };
                    let step = p.step(s);
                    w.write_record([
                        agent.as_str(),
                        formula,
                        &s.to_string(),
                        part,
                        &step.point,
                        &join(&step.services),
                    ])
                    .map_err(csv_err(path))?;
                }
            }
        }
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_plans(path: &Path) -> Result<Vec<Option<PrefixSuffixPlan>>, ReportError> {
    let t = Table::read(path)?;
    let mut per_agent: BTreeMap<usize, (bool, Vec<PlanStep>, Vec<PlanStep>)> = BTreeMap::new();
    for row in 0..t.rows.len() {
        let agent: usize = t.parse(row, "agent")?;
        let entry = per_agent.entry(agent).or_insert((true, vec![], vec![]));
        let step = PlanStep::new(t.str(row, "point")?, split(t.str(row, "services")?));
        match t.str(row, "part")? {
            "infeasible" => entry.0 = false,
            "prefix" => entry.1.push(step),
            "suffix" => entry.2.push(step),
            other => return Err(t.err(row, format!("unknown part {other:?}"))),
        }
    }
    let mut out = Vec::new();
    for (k, (agent, (feasible, prefix, suffix))) in per_agent.into_iter().enumerate() {
        if agent != k + 1 {
            return Err(t.err(0, format!("agent {} missing", k + 1)));
        }
        out.push(if feasible {
            Some(PrefixSuffixPlan::new(prefix, suffix).map_err(|e| t.err(0, e.to_string()))?)
        } else {
            None
        });
    }
    Ok(out)
}

fn write_trajectory(path: &Path, dim: usize, log: &TrajectoryLog<f64>) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    header.extend((1..=dim).map(|k| format!("v{k}")));
    header.extend(["a_hat", "mode", "s", "goal"].map(String::from));
    w.write_record(&header).map_err(csv_err(path))?;
    for s in &log.samples {
        for i in 0..s.x.len() {
            let mut row = vec![s.t.to_string(), (i + 1).to_string()];
            row.extend(s.x[i].iter().map(f64::to_string));
            row.extend(s.v[i].iter().map(f64::to_string));
            row.push(s.a_hat[i].to_string());
            row.push(if s.active[i] { "active" } else { "passive" }.to_string());
            row.push(s.s[i].to_string());
            row.push(s.goal[i].clone());
            w.write_record(&row).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_trajectory(path: &Path, n: usize, dim: usize) -> Result<Vec<Sample<f64>>, ReportError> {
    let t = Table::read(path)?;
    if t.rows.len() % n != 0 {
        return Err(t.err(
            t.rows.len(),
            format!("row count is not a multiple of {n} agents"),
        ));
    }
    let mut samples = Vec::with_capacity(t.rows.len() / n);
    for first in (0..t.rows.len()).step_by(n) {
        let time: f64 = t.parse(first, "t")?;
        let mut s = Sample {
            t: time,
            x: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            a_hat: Vec::with_capacity(n),
            active: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            goal: Vec::with_capacity(n),
        };
        for i in 0..n {
            let row = first + i;
            if t.parse::<usize>(row, "agent")? != i + 1 || t.parse::<f64>(row, "t")? != time {
                return Err(t.err(row, "rows must be grouped by time, agents in order"));
            }
            s.x.push(
                (1..=dim)
                    .map(|k| t.parse(row, &format!("x{k}")))
                    .collect::<Result<_, _>>()?,
            );
            s.v.push(
                (1..=dim)
                    .map(|k| t.parse(row, &format!("v{k}")))
                    .collect::<Result<_, _>>()?,
            );
            s.a_hat.push(t.parse(row, "a_hat")?);
            s.active.push(match t.str(row, "mode")? {
                "active" => true,
                "passive" => false,
                other => return Err(t.err(row, format!("unknown mode {other:?}"))),
            });
            s.s.push(t.parse(row, "s")?);
            s.goal.push(t.str(row, "goal")?.to_string());
        }
        samples.push(s);
    }
    Ok(samples)
}

fn write_events(path: &Path, log: &TrajectoryLog<f64>) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record([
        "t", "agent", "kind", "point", "services", "kappa", "s", "detail",
    ])
    .map_err(csv_err(path))?;
    for e in &log.events {
        let (point, services, kappa, s, detail) = match &e.kind {
            EventKind::GoalReached { point, s } => (
                point.clone(),
                String::new(),
                String::new(),
                s.to_string(),
                String::new(),
            ),
            EventKind::ServicesProvided { point, services } => (
                point.clone(),
                join(services),
                String::new(),
                String::new(),
                String::new(),
            ),
            EventKind::CounterUpdate { kappa, s } => (
                String::new(),
                String::new(),
                kappa.to_string(),
                s.to_string(),
                String::new(),
            ),
            EventKind::InvariantViolation { detail } => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                detail.clone(),
            ),
        };
        w.write_record([
            e.t.to_string(),
            (e.agent + 1).to_string(),
            e.kind.name().to_string(),
            point,
            services,
            kappa,
            s,
            detail,
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_events(path: &Path) -> Result<Vec<SimEvent<f64>>, ReportError> {
    let t = Table::read(path)?;
    let mut out = Vec::with_capacity(t.rows.len());
    for row in 0..t.rows.len() {
        let agent: usize = t.parse(row, "agent")?;
        if agent == 0 {
            return Err(t.err(row, "agents are numbered from 1"));
        }
        let need =
            |v: Option<usize>, col: &str| v.ok_or_else(|| t.err(row, format!("{col} required")));
        let kind = match t.str(row, "kind")? {
            "goal_reached" => EventKind::GoalReached {
                point: t.str(row, "point")?.to_string(),
                s: need(t.opt(row, "s")?, "s")?,
            },
            "services_provided" => EventKind::ServicesProvided {
                point: t.str(row, "point")?.to_string(),
                services: split(t.str(row, "services")?).into_iter().collect(),
            },
            "counter_update" => EventKind::CounterUpdate {
                kappa: need(t.opt(row, "kappa")?, "kappa")?,
                s: need(t.opt(row, "s")?, "s")?,
            },
            "invariant_violation" => EventKind::InvariantViolation {
                detail: t.str(row, "detail")?.to_string(),
            },
            other => return Err(t.err(row, format!("unknown event kind {other:?}"))),
        };
        out.push(SimEvent {
            t: t.parse(row, "t")?,
            agent: agent - 1,
            kind,
        });
    }
    Ok(out)
}

fn write_lyapunov(path: &Path, log: &TrajectoryLog<f64>) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["t", "segment", "active", "v_before", "v_after"])
        .map_err(csv_err(path))?;
    for l in &log.lyapunov {
        w.write_record([
            l.t.to_string(),
            l.segment.to_string(),
            l.active.map_or(String::new(), |a| (a + 1).to_string()),
            l.before.to_string(),
            l.after.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_lyapunov(path: &Path) -> Result<Vec<LyapunovStep<f64>>, ReportError> {
    let t = Table::read(path)?;
    (0..t.rows.len())
        .map(|row| {
            Ok(LyapunovStep {
                t: t.parse(row, "t")?,
                segment: t.parse(row, "segment")?,
                active: t.opt::<usize>(row, "active")?.map(|a| a - 1),
                before: t.parse(row, "v_before")?,
                after: t.parse(row, "v_after")?,
            })
        })
        .collect()
}

fn write_edges(
    path: &Path,
    scenario: &Scenario,
    log: &TrajectoryLog<f64>,
) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["set", "index", "tail", "head", "d_con_min", "min_beta"])
        .map_err(csv_err(path))?;
    let d = |a: usize, b: usize| {
        scenario.agents[a]
            .model
            .d_con
            .min(scenario.agents[b].model.d_con)
    };
    for (set, edges, minima) in [
        ("initial", &log.initial_edges, &log.barrier_min_con),
        ("complete", &log.complete_edges, &log.barrier_min_col),
    ] {
        for (m, &(a, b)) in edges.iter().enumerate() {
            w.write_record([
                set.to_string(),
                (m + 1).to_string(),
                (a + 1).to_string(),
                (b + 1).to_string(),
                d(a, b).to_string(),
                minima[m].to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

type EdgeTables = (Vec<(usize, usize)>, Vec<f64>, Vec<(usize, usize)>, Vec<f64>);

fn read_edges(path: &Path) -> Result<EdgeTables, ReportError> {
    let t = Table::read(path)?;
    let (mut e0, mut con, mut eb, mut col) = (vec![], vec![], vec![], vec![]);
    for row in 0..t.rows.len() {
        let tail: usize = t.parse(row, "tail")?;
        let head: usize = t.parse(row, "head")?;
        if tail == 0 || head == 0 {
            return Err(t.err(row, "agents are numbered from 1"));
        }
        let edge = (tail - 1, head - 1);
        let min: f64 = t.parse(row, "min_beta")?;
        match t.str(row, "set")? {
            "initial" => {
                e0.push(edge);
                con.push(min);
            }
            "complete" => {
                eb.push(edge);
                col.push(min);
            }
            other => return Err(t.err(row, format!("unknown edge set {other:?}"))),
        }
    }
    Ok((e0, con, eb, col))
}

/// Per-sample series: every `β_col,m`, `β_con,m`, `md_i ‖γ_i‖` and `V`.
fn write_monitor(
    path: &Path,
    scenario: &Scenario,
    plans: &[PrefixSuffixPlan],
    log: &TrajectoryLog<f64>,
) -> Result<(), ReportError> {
    let sim = Simulator::<f64>::new(scenario.sim_setup(plans.to_vec()), scenario.sim_config())?;
    let ctx = sim.context();
    let n = scenario.num_agents();
    let inertia: Vec<SpdMatrix<f64>> = sim.models().iter().map(|m| m.inertia.clone()).collect();
    let a_true: Vec<f64> = sim
        .models()
        .iter()
        .map(|m| m.uncertainty.bound_constant())
        .collect();
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=log.complete_edges.len()).map(|m| format!("beta_col_{m}")));
    header.extend((1..=log.initial_edges.len()).map(|m| format!("beta_con_{m}")));
    header.extend((1..=n).map(|i| format!("md_gamma_{i}")));
    header.push("V".into());
    w.write_record(&header).map_err(csv_err(path))?;
    for s in &log.samples {
        let (col, con) = ctx.barrier_values(&s.x);
        let mut row = vec![s.t.to_string()];
        row.extend(col.iter().map(f64::to_string));
        row.extend(con.iter().map(f64::to_string));
        let mut active = None;
        for i in 0..n {
            let goal = scenario.point(&s.goal[i]).unwrap_or(&s.x[i]);
            let g = if s.active[i] {
                active = Some((i, goal));
                ctx.gains().agents[i].mu_c * dist_sq(&s.x[i], goal).sqrt()
            } else {
                0.0
            };
            row.push(g.to_string());
        }
        let v = ctx
            .lyapunov_value(&s.x, &s.v, &s.a_hat, &a_true, active, &inertia)
            .map_or(String::new(), |v| v.to_string());
        row.push(v);
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Summary rows in file order.
pub fn summary_rows(log: &TrajectoryLog<f64>, verdict: &Verdict) -> Vec<(String, String)> {
    let g = &verdict.guarantees;
    let mut rows: Vec<(String, String)> = vec![
        ("completed".into(), verdict.completed.to_string()),
        (
            "termination".into(),
            match &log.termination {
                Termination::Completed => "completed".into(),
                Termination::Violation { t, detail } => format!("violation at t={t}: {detail}"),
            },
        ),
        (
            "goal_order".into(),
            join(log.goal_events().map(|e| (e.agent + 1).to_string())),
        ),
        ("collision_free".into(), g.collision_free.to_string()),
        (
            "connectivity_maintained".into(),
            g.connectivity_maintained.to_string(),
        ),
        ("lyapunov_monotone".into(), g.lyapunov_monotone.to_string()),
        (
            "adaptation_nondecreasing".into(),
            g.adaptation_nondecreasing.to_string(),
        ),
        ("signals_bounded".into(), g.signals_bounded.to_string()),
        ("min_beta_col".into(), g.min_beta_col.to_string()),
        ("min_beta_con".into(), g.min_beta_con.to_string()),
        ("min_clearance".into(), g.min_clearance.to_string()),
        (
            "min_connectivity_slack".into(),
            g.min_connectivity_slack.to_string(),
        ),
        ("max_a_hat".into(), g.max_a_hat.to_string()),
        ("max_speed".into(), g.max_speed.to_string()),
        ("lyapunov_steps".into(), g.lyapunov.steps.to_string()),
        (
            "lyapunov_within_tolerance".into(),
            g.lyapunov.within_tolerance.to_string(),
        ),
        (
            "lyapunov_max_increase".into(),
            g.lyapunov.max_increase.to_string(),
        ),
        ("lyapunov_v0".into(), g.lyapunov.v0.to_string()),
    ];
    for (i, a) in verdict.agents.iter().enumerate() {
        let k = i + 1;
        rows.push((
            format!("agent_{k}_plan_followed"),
            a.plan_followed.to_string(),
        ));
        rows.push((
            format!("agent_{k}_services_only_when_active"),
            a.services_only_when_active.to_string(),
        ));
        rows.push((format!("agent_{k}_matched"), a.matched.to_string()));
        rows.push((format!("agent_{k}_status"), a.status.to_string()));
    }
    rows.push(("all_ok".into(), verdict.all_ok().to_string()));
    rows
}

fn write_summary(path: &Path, rows: &[(String, String)]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["key", "value"]).map_err(csv_err(path))?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_summary(path: &Path) -> Result<Vec<(String, String)>, ReportError> {
    let t = Table::read(path)?;
    (0..t.rows.len())
        .map(|row| {
            Ok((
                t.str(row, "key")?.to_string(),
                t.str(row, "value")?.to_string(),
            ))
        })
        .collect()
}

/// Runs every monitor on a finished episode.
pub fn evaluate_run(
    scenario: &Scenario,
    plans: &[PrefixSuffixPlan],
    log: &TrajectoryLog<f64>,
) -> Verdict {
    let radii: Vec<f64> = scenario.agents.iter().map(|a| a.model.radius).collect();
    let d_con: Vec<f64> = scenario.agents.iter().map(|a| a.model.d_con).collect();
    let priorities: Vec<usize> = scenario.agents.iter().map(|a| a.model.priority).collect();
    let formulas: Vec<Formula> = scenario.agents.iter().map(|a| a.formula.clone()).collect();
    evaluate(
        log,
        &MonitorInput {
            points: &scenario.points,
            radii: &radii,
            d_con: &d_con,
            priorities: &priorities,
            plans,
            formulas: &formulas,
        },
    )
}

/// Writes all run artifacts into `dir`, creating it if needed.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    plans: &[PrefixSuffixPlan],
    log: &TrajectoryLog<f64>,
    verdict: &Verdict,
) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let scenario_path = dir.join(SCENARIO_FILE);
    std::fs::write(&scenario_path, scenario.to_toml_string()).map_err(io(&scenario_path))?;
    let options: Vec<Option<PrefixSuffixPlan>> = plans.iter().cloned().map(Some).collect();
    write_plans(&dir.join(PLANS_FILE), scenario, &options)?;
    write_trajectory(&dir.join(TRAJECTORY_FILE), scenario.dimension, log)?;
    write_events(&dir.join(EVENTS_FILE), log)?;
    write_lyapunov(&dir.join(LYAPUNOV_FILE), log)?;
    write_edges(&dir.join(EDGES_FILE), scenario, log)?;
    write_monitor(&dir.join(MONITOR_FILE), scenario, plans, log)?;
    write_summary(&dir.join(SUMMARY_FILE), &summary_rows(log, verdict))
}

/// Everything `write_run` stored, read back.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub scenario: Scenario,
    pub plans: Vec<PrefixSuffixPlan>,
    pub log: TrajectoryLog<f64>,
    pub summary: Vec<(String, String)>,
}

pub fn read_run(dir: &Path) -> Result<StoredRun, ReportError> {
    let scenario = Scenario::load(dir.join(SCENARIO_FILE))?;
    let plans_path = dir.join(PLANS_FILE);
    let plans = read_plans(&plans_path)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| ReportError::Format {
                path: plans_path.display().to_string(),
                row: 0,
                msg: format!("agent {} has no plan", i + 1),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let samples = read_trajectory(
        &dir.join(TRAJECTORY_FILE),
        scenario.num_agents(),
        scenario.dimension,
    )?;
    let events = read_events(&dir.join(EVENTS_FILE))?;
    let lyapunov = read_lyapunov(&dir.join(LYAPUNOV_FILE))?;
    let (initial_edges, barrier_min_con, complete_edges, barrier_min_col) =
        read_edges(&dir.join(EDGES_FILE))?;
    let termination = events
        .iter()
        .find_map(|e| match &e.kind {
            EventKind::InvariantViolation { detail } => Some(Termination::Violation {
                t: e.t,
                detail: detail.clone(),
            }),
            _ => None,
        })
        .unwrap_or(Termination::Completed);
    let log = TrajectoryLog {
        h: scenario.h,
        t_end: scenario.t_end,
        samples,
        events,
        lyapunov,
        barrier_min_col,
        barrier_min_con,
        initial_edges,
        complete_edges,
        termination,
    };
    let summary = read_summary(&dir.join(SUMMARY_FILE))?;
    Ok(StoredRun {
        scenario,
        plans,
        log,
        summary,
    })
}

/// Result of re-deriving the verdict from stored artifacts.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub recomputed: Vec<(String, String)>,
    pub stored: Vec<(String, String)>,
}

impl CheckOutcome {
    pub fn matches(&self) -> bool {
        self.recomputed == self.stored
    }

    /// Keys whose stored and recomputed values differ.
    pub fn mismatches(&self) -> Vec<String> {
        let stored: BTreeMap<_, _> = self.stored.iter().cloned().collect();
        let mut out: Vec<String> = self
            .recomputed
            .iter()
            .filter(|(k, v)| stored.get(k) != Some(v))
            .map(|(k, _)| k.clone())
            .collect();
        let recomputed: BTreeMap<_, _> = self.recomputed.iter().cloned().collect();
        out.extend(
            stored
                .keys()
                .filter(|k| !recomputed.contains_key(*k))
                .cloned(),
        );
        out
    }
}

pub fn check_dir(dir: &Path) -> Result<CheckOutcome, ReportError> {
    let run = read_run(dir)?;
    let verdict = evaluate_run(&run.scenario, &run.plans, &run.log);
    Ok(CheckOutcome {
        recomputed: summary_rows(&run.log, &verdict),
        stored: run.summary,
        verdict,
    })
}
