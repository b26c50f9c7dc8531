//! Post-hoc checks on a finished episode: behaviors, plan satisfaction and
//! the safety/stability guarantees. Everything here is a pure function of
//! the log.

use std::collections::BTreeSet;
use std::fmt;

use crate::ltl::Formula;
use crate::planner::{verify_plan, PrefixSuffixPlan};
use crate::scalar::{dist_sq, norm, Scalar};
use crate::simulator::{EventKind, Termination, TrajectoryLog};

/// One visit of an agent to a point of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorEntry {
    pub point: String,
    pub services: BTreeSet<String>,
    /// The visit was a planned goal at which services were provided.
    pub planned: bool,
    pub t_start: f64,
    pub t_end: f64,
}

/// Per-agent time-ordered visits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Behavior {
    pub agents: Vec<Vec<BehaviorEntry>>,
}

/// Maximal time intervals during which a point lies inside an agent's
/// sphere, with services attached from `ServicesProvided` events. Visits
/// without such an event carry no services.
pub fn extract_behavior<T: Scalar>(
    log: &TrajectoryLog<T>,
    points: &[(String, Vec<T>)],
    radii: &[T],
) -> Behavior {
    let n = radii.len();
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let mut entries = Vec::new();
        for (id, c) in points {
            // (time, inside, services provided here)
            let mut obs: Vec<(f64, bool, Option<&BTreeSet<String>>)> = log
                .samples
                .iter()
                .map(|s| {
                    (
                        s.t.to_f64_lossy(),
                        dist_sq(&s.x[i], c) < radii[i] * radii[i],
                        None,
                    )
                })
                .collect();
            for e in &log.events {
                if let EventKind::ServicesProvided { point, services } = &e.kind {
                    if e.agent == i && point == id {
                        obs.push((e.t.to_f64_lossy(), true, Some(services)));
                    }
                }
            }
            obs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut current: Option<BehaviorEntry> = None;
            for (t, inside, services) in obs {
                if !inside {
                    entries.extend(current.take());
                    continue;
                }
                let entry = current.get_or_insert_with(|| BehaviorEntry {
                    point: id.clone(),
                    services: BTreeSet::new(),
                    planned: false,
                    t_start: t,
                    t_end: t,
                });
                entry.t_end = t;
                if let Some(s) = services {
                    entry.planned = true;
                    entry.services.extend(s.iter().cloned());
                }
            }
            entries.extend(current);
        }
        entries.sort_by(|a, b| {
            a.t_start
                .total_cmp(&b.t_start)
                .then_with(|| a.point.cmp(&b.point))
        });
        agents.push(entries);
    }
    Behavior { agents }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Satisfaction {
    /// At least one full suffix cycle observed and the plan's lasso word
    /// satisfies the formula.
    Satisfied,
    Violated,
    /// Observed progress through the first `L` plan steps.
    Inconclusive {
        progress: f64,
    },
}

impl fmt::Display for Satisfaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Satisfaction::Satisfied => f.write_str("satisfied"),
            Satisfaction::Violated => f.write_str("violated"),
            Satisfaction::Inconclusive { progress } => write!(f, "inconclusive({progress})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionCheck {
    pub plan_followed: bool,
    /// Planned entries matching the unrolled plan, in order.
    pub matched: usize,
    pub status: Satisfaction,
}

/// Checks that the planned visits of `entries` spell a prefix of the
/// unrolled plan; satisfied once `L` steps have been observed.
pub fn check_satisfaction(
    entries: &[BehaviorEntry],
    plan: &PrefixSuffixPlan,
    f: &Formula,
) -> SatisfactionCheck {
    let mut matched = 0;
    for e in entries.iter().filter(|e| e.planned) {
        let step = plan.unrolled(matched);
        if step.point != e.point || step.services != e.services {
            return SatisfactionCheck {
                plan_followed: false,
                matched,
                status: Satisfaction::Violated,
            };
        }
        matched += 1;
    }
    let status = if matched >= plan.len() {
        if verify_plan(plan, f) {
            Satisfaction::Satisfied
        } else {
            Satisfaction::Violated
        }
    } else {
        Satisfaction::Inconclusive {
            progress: matched as f64 / plan.len() as f64,
        }
    };
    SatisfactionCheck {
        plan_followed: true,
        matched,
        status,
    }
}

/// Services were provided only by the agent whose cycle counter equalled
/// its priority. Counters are replayed from the event log.
pub fn services_only_when_active<T: Scalar>(
    log: &TrajectoryLog<T>,
    priorities: &[usize],
) -> Vec<bool> {
    let n = priorities.len();
    let mut kappa = vec![1usize; n];
    let mut ok = vec![true; n];
    for e in &log.events {
        match &e.kind {
            EventKind::CounterUpdate { kappa: k, .. } => kappa[e.agent] = *k,
            EventKind::ServicesProvided { .. } if kappa[e.agent] != priorities[e.agent] => {
                ok[e.agent] = false;
            }
            _ => {}
        }
    }
    ok
}

/// Allowed increase of `V` over one step: `max(1e-8, 10·h⁵·|V̇|)`, with
/// `|V̇|` estimated from the previous step of the same segment.
pub fn lyapunov_tolerance(h: f64, v_dot: f64) -> f64 {
    (10.0 * h.powi(5) * v_dot.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovStats {
    pub steps: usize,
    pub within_tolerance: usize,
    pub max_increase: f64,
    pub v0: f64,
}

impl LyapunovStats {
    pub fn fraction_within(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.within_tolerance as f64 / self.steps as f64
        }
    }

    /// At least 99.9% of steps within tolerance and no increase above
    /// `10⁻⁴ V(t₀)`.
    pub fn monotone(&self) -> bool {
        self.fraction_within() >= 0.999 && self.max_increase <= 1e-4 * self.v0
    }
}

pub fn lyapunov_stats<T: Scalar>(log: &TrajectoryLog<T>) -> LyapunovStats {
    let h = log.h.to_f64_lossy();
    let mut stats = LyapunovStats {
        steps: log.lyapunov.len(),
        within_tolerance: 0,
        max_increase: f64::NEG_INFINITY,
        v0: log
            .lyapunov
            .first()
            .map_or(0.0, |l| l.before.to_f64_lossy()),
    };
    let mut prev: Option<(usize, f64)> = None;
    for l in &log.lyapunov {
        let (before, after) = (l.before.to_f64_lossy(), l.after.to_f64_lossy());
        let inc = after - before;
        let v_dot = match prev {
            Some((seg, d)) if seg == l.segment => d / h,
            _ => inc / h,
        };
        if inc <= lyapunov_tolerance(h, v_dot) {
            stats.within_tolerance += 1;
        }
        stats.max_increase = stats.max_increase.max(inc);
        prev = Some((l.segment, inc));
    }
    if stats.steps == 0 {
        stats.max_increase = 0.0;
    }
    stats
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuaranteeVerdict {
    pub collision_free: bool,
    pub connectivity_maintained: bool,
    pub lyapunov_monotone: bool,
    pub adaptation_nondecreasing: bool,
    pub signals_bounded: bool,
    /// Minimum over all steps of `β_col` / `β_con`.
    pub min_beta_col: f64,
    pub min_beta_con: f64,
    /// Smallest `‖x_i − x_j‖ − (r_i + r_j)` over samples and pairs.
    pub min_clearance: f64,
    /// Smallest `d̲_con − ‖x_{m₁} − x_{m₂}‖` over samples and initial edges.
    pub min_connectivity_slack: f64,
    pub max_a_hat: f64,
    pub max_speed: f64,
    pub lyapunov: LyapunovStats,
}

/// Safety and boundedness checks over every logged sample and step.
pub fn check_guarantees<T: Scalar>(
    log: &TrajectoryLog<T>,
    radii: &[T],
    d_con: &[T],
    initial_edges: &[(usize, usize)],
) -> GuaranteeVerdict {
    let f = |v: T| v.to_f64_lossy();
    let n = radii.len();
    let mut min_clearance = f64::INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut max_a_hat = f64::NEG_INFINITY;
    let mut max_speed: f64 = 0.0;
    let mut nondecreasing = true;
    let mut finite = true;
    for (k, s) in log.samples.iter().enumerate() {
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(dist_sq(&s.x[i], &s.x[j])).sqrt();
                min_clearance = min_clearance.min(d - f(radii[i] + radii[j]));
            }
        }
        for &(a, b) in initial_edges {
            let d = f(dist_sq(&s.x[a], &s.x[b])).sqrt();
            min_slack = min_slack.min(f(d_con[a].min(d_con[b])) - d);
        }
        for i in 0..n {
            let a = f(s.a_hat[i]);
            let speed = f(norm(&s.v[i]));
            finite &= a.is_finite() && speed.is_finite() && s.x[i].iter().all(|c| c.is_finite());
            max_a_hat = max_a_hat.max(a);
            max_speed = max_speed.max(speed);
            if k > 0 && s.a_hat[i] < log.samples[k - 1].a_hat[i] {
                nondecreasing = false;
            }
        }
    }
    let min_beta_col = log
        .barrier_min_col
        .iter()
        .map(|&b| f(b))
        .fold(f64::INFINITY, f64::min);
    let min_beta_con = log
        .barrier_min_con
        .iter()
        .map(|&b| f(b))
        .fold(f64::INFINITY, f64::min);
    let violated = matches!(log.termination, Termination::Violation { .. });
    let lyapunov = lyapunov_stats(log);
    GuaranteeVerdict {
        collision_free: !violated && min_clearance > 0.0 && min_beta_col > 0.0,
        connectivity_maintained: !violated && min_slack > 0.0 && min_beta_con > 0.0,
        lyapunov_monotone: lyapunov.monotone(),
        adaptation_nondecreasing: nondecreasing,
        signals_bounded: finite,
        min_beta_col,
        min_beta_con,
        min_clearance,
        min_connectivity_slack: min_slack,
        max_a_hat,
        max_speed,
        lyapunov,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentVerdict {
    pub plan_followed: bool,
    pub services_only_when_active: bool,
    pub matched: usize,
    pub status: Satisfaction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub completed: bool,
    pub agents: Vec<AgentVerdict>,
    pub guarantees: GuaranteeVerdict,
}

impl Verdict {
    /// Every guarantee holds and no agent deviated from its plan.
    pub fn all_ok(&self) -> bool {
        let g = &self.guarantees;
        self.completed
            && g.collision_free
            && g.connectivity_maintained
            && g.lyapunov_monotone
            && g.adaptation_nondecreasing
            && g.signals_bounded
            && self.agents.iter().all(|a| {
                a.plan_followed && a.services_only_when_active && a.status != Satisfaction::Violated
            })
    }
}

/// Per-agent data the monitor needs besides the log.
#[derive(Debug, Clone)]
pub struct MonitorInput<'a, T> {
    pub points: &'a [(String, Vec<T>)],
    pub radii: &'a [T],
    pub d_con: &'a [T],
    pub priorities: &'a [usize],
    pub plans: &'a [PrefixSuffixPlan],
    pub formulas: &'a [Formula],
}

pub fn evaluate<T: Scalar>(log: &TrajectoryLog<T>, input: &MonitorInput<'_, T>) -> Verdict {
    let behavior = extract_behavior(log, input.points, input.radii);
    let active_ok = services_only_when_active(log, input.priorities);
    let agents = behavior
        .agents
        .iter()
        .enumerate()
        .map(|(i, entries)| {
            let c = check_satisfaction(entries, &input.plans[i], &input.formulas[i]);
            AgentVerdict {
                plan_followed: c.plan_followed,
                services_only_when_active: active_ok[i],
                matched: c.matched,
                status: c.status,
            }
        })
        .collect();
    Verdict {
        completed: log.termination == Termination::Completed,
        agents,
        guarantees: check_guarantees(log, input.radii, input.d_con, &log.initial_edges),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl_unchecked;
    use crate::planner::PlanStep;
    use crate::simulator::{LyapunovStep, Sample, SimEvent};

    fn sample(t: f64, x: Vec<Vec<f64>>) -> Sample<f64> {
        let n = x.len();
        Sample {
            t,
            v: vec![vec![0.0; x[0].len()]; n],
            x,
            a_hat: vec![0.0; n],
            active: vec![false; n],
            s: vec![1; n],
            goal: vec!["p".into(); n],
        }
    }

    fn log(samples: Vec<Sample<f64>>, events: Vec<SimEvent<f64>>) -> TrajectoryLog<f64> {
        TrajectoryLog {
            h: 0.1,
            t_end: 1.0,
            samples,
            events,
            lyapunov: vec![],
            barrier_min_col: vec![0.5],
            barrier_min_con: vec![0.5],
            initial_edges: vec![(0, 1)],
            complete_edges: vec![(0, 1)],
            termination: Termination::Completed,
        }
    }

    fn provided(t: f64, agent: usize, point: &str, s: &str) -> SimEvent<f64> {
        SimEvent {
            t,
            agent,
            kind: EventKind::ServicesProvided {
                point: point.into(),
                services: [s.to_string()].into(),
            },
        }
    }

    #[test]
    fn unplanned_crossing_has_no_services() {
        let points = vec![("p".to_string(), vec![5.0, 0.0])];
        let traj = log(
            (0..=10)
                .map(|k| {
                    let t = f64::from(k);
                    sample(t, vec![vec![t, 0.0], vec![t, 3.0]])
                })
                .collect(),
            vec![],
        );
        let b = extract_behavior(&traj, &points, &[1.0, 1.0]);
        assert_eq!(b.agents[0].len(), 1);
        let e = &b.agents[0][0];
        assert!(e.services.is_empty() && !e.planned);
        assert_eq!((e.t_start, e.t_end), (5.0, 5.0));
        assert!(b.agents[1].is_empty());
        assert_eq!(extract_behavior(&traj, &points, &[1.0, 1.0]), b);
    }

    #[test]
    fn services_attach_to_the_visit() {
        let points = vec![
            ("p".to_string(), vec![0.0, 0.0]),
            ("q".to_string(), vec![9.0, 0.0]),
        ];
        let traj = log(
            vec![
                sample(0.0, vec![vec![0.1, 0.0], vec![0.0, 3.0]]),
                sample(1.0, vec![vec![0.2, 0.0], vec![0.0, 3.0]]),
                sample(2.0, vec![vec![4.0, 0.0], vec![0.0, 3.0]]),
            ],
            vec![provided(0.5, 0, "p", "a")],
        );
        let b = extract_behavior(&traj, &points, &[1.0, 1.0]);
        assert_eq!(b.agents[0].len(), 1);
        assert!(b.agents[0][0].planned);
        assert_eq!(b.agents[0][0].services, ["a".to_string()].into());
        assert_eq!((b.agents[0][0].t_start, b.agents[0][0].t_end), (0.0, 1.0));
    }

    fn entry(point: &str, s: &str) -> BehaviorEntry {
        BehaviorEntry {
            point: point.into(),
            services: [s.to_string()].into(),
            planned: true,
            t_start: 0.0,
            t_end: 0.0,
        }
    }

    #[test]
    fn satisfaction_tri_state() {
        let plan = PrefixSuffixPlan::new(
            vec![PlanStep::new("p", ["a"])],
            vec![PlanStep::new("q", ["b"])],
        )
        .unwrap();
        let f = parse_ltl_unchecked("a & G F b").unwrap();
        let full = [entry("p", "a"), entry("q", "b"), entry("q", "b")];
        assert_eq!(
            check_satisfaction(&full, &plan, &f).status,
            Satisfaction::Satisfied
        );
        let wrong = [entry("q", "b")];
        let c = check_satisfaction(&wrong, &plan, &f);
        assert_eq!(c.status, Satisfaction::Violated);
        assert!(!c.plan_followed);
        let partial = [entry("p", "a")];
        assert_eq!(
            check_satisfaction(&partial, &plan, &f).status,
            Satisfaction::Inconclusive { progress: 0.5 }
        );
        let mut with_crossing = vec![entry("p", "a")];
        with_crossing.push(BehaviorEntry {
            planned: false,
            services: BTreeSet::new(),
            ..entry("p", "a")
        });
        with_crossing.push(entry("q", "b"));
        assert_eq!(
            check_satisfaction(&with_crossing, &plan, &f).status,
            Satisfaction::Satisfied
        );
    }

    #[test]
    fn connectivity_break_detected() {
        let traj = log(
            vec![
                sample(0.0, vec![vec![0.0, 0.0], vec![3.0, 0.0]]),
                sample(1.0, vec![vec![0.0, 0.0], vec![4.5, 0.0]]),
            ],
            vec![],
        );
        let g = check_guarantees(&traj, &[1.0, 1.0], &[4.0, 4.0], &[(0, 1)]);
        assert!(!g.connectivity_maintained);
        assert!(g.collision_free);
        assert!((g.min_connectivity_slack + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_jump_detected() {
        let mut traj = log(
            vec![sample(0.0, vec![vec![0.0, 0.0], vec![3.0, 0.0]])],
            vec![],
        );
        let step = |t: f64, before: f64, after: f64| LyapunovStep {
            t,
            segment: 0,
            active: Some(0),
            before,
            after,
        };
        traj.lyapunov = vec![
            step(0.0, 10.0, 9.0),
            step(0.1, 9.0, 8.5),
            step(0.2, 8.5, 8.0),
        ];
        assert!(check_guarantees(&traj, &[1.0, 1.0], &[4.0, 4.0], &[(0, 1)]).lyapunov_monotone);
        traj.lyapunov.push(step(0.3, 8.0, 9.0));
        let g = check_guarantees(&traj, &[1.0, 1.0], &[4.0, 4.0], &[(0, 1)]);
        assert!(!g.lyapunov_monotone);
        assert_eq!(g.lyapunov.max_increase, 1.0);
    }

    #[test]
    fn services_outside_turn_flagged() {
        let traj = log(
            vec![sample(0.0, vec![vec![0.0, 0.0], vec![3.0, 0.0]])],
            vec![provided(1.0, 1, "p", "b")],
        );
        assert_eq!(services_only_when_active(&traj, &[1, 2]), vec![true, false]);
    }
}
