//! Closed-loop integration of the second-order agent dynamics together with
//! the priority-based switching between active and passive modes.
//!
//! Each agent obeys `ẋ = v`, `B v̇ + f(t, x, v) + g = u`, `â̇ = μ_a f̄(x)‖v‖²`.
//! The coupled system is advanced with classical RK4; inputs are recomputed
//! at every stage while modes and goals stay fixed over the step. Goal
//! arrival is checked once per completed step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::controller::{
    AgentGains, ControlContext, ControlError, Mode, TeamParams, UncertaintyBound,
};
use crate::planner::PrefixSuffixPlan;
use crate::scalar::{dist_sq, norm, Scalar, SpdMatrix};

/// Model of the uncertainty `f_i(t, x, v)` acting on an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UncertaintyModel<T> {
    None,
    /// `α ‖x‖ sin(w₁ t + w₂) v`
    SinusoidalNorm {
        alpha: T,
        w1: T,
        w2: T,
    },
}

impl<T: Scalar> UncertaintyModel<T> {
    pub fn force(&self, t: T, x: &[T], v: &[T]) -> Vec<T> {
        match *self {
            UncertaintyModel::None => vec![T::zero(); v.len()],
            UncertaintyModel::SinusoidalNorm { alpha, w1, w2 } => {
                let k = alpha * norm(x) * (w1 * t + w2).sin();
                v.iter().map(|&vi| k * vi).collect()
            }
        }
    }

    /// The constant `a` with `‖f(t, x, v)‖ ≤ a ‖x‖ ‖v‖`.
    pub fn bound_constant(&self) -> T {
        match *self {
            UncertaintyModel::None => T::zero(),
            UncertaintyModel::SinusoidalNorm { alpha, .. } => alpha.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel<T> {
    pub radius: T,
    pub d_con: T,
    pub inertia: SpdMatrix<T>,
    pub gravity: Vec<T>,
    pub uncertainty: UncertaintyModel<T>,
    pub fbar: UncertaintyBound<T>,
    pub gains: AgentGains<T>,
    /// 1-based
    pub priority: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentInit<T> {
    pub x: Vec<T>,
    pub v: Vec<T>,
    pub a_hat: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub h: T,
    pub t_end: T,
    /// Time between logged samples.
    pub decimation: T,
    /// Delay before agents other than the one that reached its goal see the
    /// counter update. Zero means instantaneous.
    pub broadcast_delay: T,
}

/// Everything needed to start an episode.
#[derive(Debug, Clone)]
pub struct SimSetup<T> {
    pub models: Vec<AgentModel<T>>,
    pub init: Vec<AgentInit<T>>,
    pub plans: Vec<PrefixSuffixPlan>,
    pub points: BTreeMap<String, Vec<T>>,
    pub mu_col: T,
    pub mu_con: T,
    pub beta_bar_col: T,
    pub beta_bar_con: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("initial condition: {0}")]
    InitialCondition(ControlError),
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("barrier violated at t = {t}: {source}")]
    Violation { t: f64, source: ControlError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T> {
    pub t: T,
    pub x: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub a_hat: Vec<T>,
    /// 1-based plan indices
    pub s: Vec<usize>,
    /// 1-based cycle counters
    pub kappa: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    GoalReached {
        point: String,
        s: usize,
    },
    ServicesProvided {
        point: String,
        services: BTreeSet<String>,
    },
    CounterUpdate {
        kappa: usize,
        s: usize,
    },
    InvariantViolation {
        detail: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::GoalReached { .. } => "goal_reached",
            EventKind::ServicesProvided { .. } => "services_provided",
            EventKind::CounterUpdate { .. } => "counter_update",
            EventKind::InvariantViolation { .. } => "invariant_violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<T> {
    pub t: T,
    /// 0-based
    pub agent: usize,
    pub kind: EventKind,
}

/// Logged snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub x: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub a_hat: Vec<T>,
    pub active: Vec<bool>,
    pub s: Vec<usize>,
    /// Goal point of every agent.
    pub goal: Vec<String>,
}

/// `V` before and after one integration step, evaluated with the modes and
/// goals that were in force during the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovStep<T> {
    pub t: T,
    /// Counts goal switches; `V` is comparable only within a segment.
    pub segment: usize,
    pub active: Option<usize>,
    pub before: T,
    pub after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Violation { t: f64, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T> {
    pub h: T,
    pub t_end: T,
    pub samples: Vec<Sample<T>>,
    pub events: Vec<SimEvent<T>>,
    pub lyapunov: Vec<LyapunovStep<T>>,
    /// Minimum over all steps of `β_col,m`, per complete-graph edge.
    pub barrier_min_col: Vec<T>,
    /// Minimum over all steps of `β_con,m`, per initial edge.
    pub barrier_min_con: Vec<T>,
    pub initial_edges: Vec<(usize, usize)>,
    pub complete_edges: Vec<(usize, usize)>,
    pub termination: Termination,
}

impl<T: Scalar> TrajectoryLog<T> {
    pub fn goal_events(&self) -> impl Iterator<Item = &SimEvent<T>> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::GoalReached { .. }))
    }
}

/// Time derivatives of the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative<T> {
    pub dx: Vec<Vec<T>>,
    pub dv: Vec<Vec<T>>,
    pub da: Vec<T>,
}

/// `ẋ = v`, `v̇ = B⁻¹(u − f − g)`, `â̇ = μ_a f̄(x)‖v‖²`.
pub fn dynamics_rhs<T: Scalar>(
    t: T,
    x: &[Vec<T>],
    v: &[Vec<T>],
    u: &[Vec<T>],
    models: &[AgentModel<T>],
) -> Derivative<T> {
    let mut dv = Vec::with_capacity(models.len());
    let mut da = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let f = m.uncertainty.force(t, &x[i], &v[i]);
        let rhs: Vec<T> = (0..u[i].len())
            .map(|k| u[i][k] - f[k] - m.gravity[k])
            .collect();
        dv.push(m.inertia.solve(&rhs));
        da.push(crate::controller::adaptation_rate(
            &x[i],
            &v[i],
            m.gains.mu_a,
            &m.fbar,
        ));
    }
    Derivative {
        dx: v.to_vec(),
        dv,
        da,
    }
}

/// Continuous part of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysState<T> {
    pub x: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub a_hat: Vec<T>,
}

fn closed_loop_rhs<T: Scalar>(
    ctx: &ControlContext<T>,
    models: &[AgentModel<T>],
    t: T,
    y: &PhysState<T>,
    goals: &[&[T]],
    modes: &[Mode],
) -> Result<Derivative<T>, ControlError> {
    let u = (0..models.len())
        .map(|i| ctx.control_input(i, goals[i], modes[i], &y.x, &y.v[i], y.a_hat[i]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dynamics_rhs(t, &y.x, &y.v, &u, models))
}

fn offset<T: Scalar>(y: &PhysState<T>, d: &Derivative<T>, k: T) -> PhysState<T> {
    let shift = |a: &[Vec<T>], b: &[Vec<T>]| -> Vec<Vec<T>> {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.iter().zip(q).map(|(&p, &q)| p + k * q).collect())
            .collect()
    };
    PhysState {
        x: shift(&y.x, &d.dx),
        v: shift(&y.v, &d.dv),
        a_hat: y
            .a_hat
            .iter()
            .zip(&d.da)
            .map(|(&a, &b)| a + k * b)
            .collect(),
    }
}

/// One classical RK4 step with inputs recomputed at each stage.
pub fn rk4_step<T: Scalar>(
    ctx: &ControlContext<T>,
    models: &[AgentModel<T>],
    t: T,
    y: &PhysState<T>,
    goals: &[&[T]],
    modes: &[Mode],
    h: T,
) -> Result<PhysState<T>, ControlError> {
    let half = T::lit(0.5) * h;
    let k1 = closed_loop_rhs(ctx, models, t, y, goals, modes)?;
    let k2 = closed_loop_rhs(ctx, models, t + half, &offset(y, &k1, half), goals, modes)?;
    let k3 = closed_loop_rhs(ctx, models, t + half, &offset(y, &k2, half), goals, modes)?;
    let k4 = closed_loop_rhs(ctx, models, t + h, &offset(y, &k3, h), goals, modes)?;
    let w = h / T::lit(6.0);
    let two = T::lit(2.0);
    let comb = |a: T, b1: T, b2: T, b3: T, b4: T| a + w * (b1 + two * b2 + two * b3 + b4);
    let vecs = |a: &[Vec<T>], s1: &[Vec<T>], s2: &[Vec<T>], s3: &[Vec<T>], s4: &[Vec<T>]| {
        (0..a.len())
            .map(|i| {
                (0..a[i].len())
                    .map(|k| comb(a[i][k], s1[i][k], s2[i][k], s3[i][k], s4[i][k]))
                    .collect()
            })
            .collect()
    };
    Ok(PhysState {
        x: vecs(&y.x, &k1.dx, &k2.dx, &k3.dx, &k4.dx),
        v: vecs(&y.v, &k1.dv, &k2.dv, &k3.dv, &k4.dv),
        a_hat: (0..y.a_hat.len())
            .map(|i| comb(y.a_hat[i], k1.da[i], k2.da[i], k3.da[i], k4.da[i]))
            .collect(),
    })
}

struct PendingUpdate<T> {
    due: T,
    agent: usize,
}

/// Episode driver: integrates, switches modes and records the log.
pub struct Simulator<T> {
    ctx: ControlContext<T>,
    models: Vec<AgentModel<T>>,
    plans: Vec<PrefixSuffixPlan>,
    points: BTreeMap<String, Vec<T>>,
    a_true: Vec<T>,
    config: SimConfig<T>,
    state: WorldState<T>,
    step_count: usize,
    segment: usize,
    pending: VecDeque<PendingUpdate<T>>,
}

impl<T: Scalar> Simulator<T> {
    pub fn new(setup: SimSetup<T>, config: SimConfig<T>) -> Result<Self, SimError> {
        let n = setup.models.len();
        if n == 0 {
            return Err(SimError::Setup("no agents".into()));
        }
        if setup.init.len() != n || setup.plans.len() != n {
            return Err(SimError::Setup(format!(
                "{n} agents but {} initial states and {} plans",
                setup.init.len(),
                setup.plans.len()
            )));
        }
        if !(config.h > T::zero()) || !(config.decimation > T::zero()) {
            return Err(SimError::Setup(
                "step size and decimation must be positive".into(),
            ));
        }
        if !(config.t_end >= T::zero()) || !(config.broadcast_delay >= T::zero()) {
            return Err(SimError::Setup(
                "horizon and broadcast delay must be nonnegative".into(),
            ));
        }
        let mut priorities: Vec<usize> = setup.models.iter().map(|m| m.priority).collect();
        priorities.sort_unstable();
        if priorities != (1..=n).collect::<Vec<_>>() {
            return Err(SimError::Setup(
                "priorities must be a permutation of 1..N".into(),
            ));
        }
        for (i, plan) in setup.plans.iter().enumerate() {
            for s in 1..=plan.len() {
                if !setup.points.contains_key(&plan.step(s).point) {
                    return Err(SimError::Setup(format!(
                        "plan of agent {} visits unknown point {}",
                        i + 1,
                        plan.step(s).point
                    )));
                }
            }
        }
        let x0: Vec<Vec<T>> = setup.init.iter().map(|a| a.x.clone()).collect();
        let dim = x0[0].len();
        for (i, m) in setup.models.iter().enumerate() {
            if m.inertia.dim() != dim || m.gravity.len() != dim || setup.init[i].v.len() != dim {
                return Err(SimError::Setup(format!(
                    "agent {} has inconsistent dimensions",
                    i + 1
                )));
            }
        }
        if setup.points.values().any(|p| p.len() != dim) {
            return Err(SimError::Setup(format!("points must have dimension {dim}")));
        }
        let params = TeamParams {
            radii: setup.models.iter().map(|m| m.radius).collect(),
            d_con: setup.models.iter().map(|m| m.d_con).collect(),
            gravity: setup.models.iter().map(|m| m.gravity.clone()).collect(),
            fbar: setup.models.iter().map(|m| m.fbar).collect(),
            agent_gains: setup.models.iter().map(|m| m.gains).collect(),
            mu_col: setup.mu_col,
            mu_con: setup.mu_con,
            beta_bar_col: setup.beta_bar_col,
            beta_bar_con: setup.beta_bar_con,
        };
        let ctx = ControlContext::new(params, &x0).map_err(|e| match e {
            ControlError::InvalidGain { .. } | ControlError::Shape(_) => {
                SimError::Setup(e.to_string())
            }
            other => SimError::InitialCondition(other),
        })?;
        let state = WorldState {
            t: T::zero(),
            x: x0,
            v: setup.init.iter().map(|a| a.v.clone()).collect(),
            a_hat: setup.init.iter().map(|a| a.a_hat).collect(),
            s: vec![1; n],
            kappa: vec![1; n],
        };
        Ok(Self {
            a_true: setup
                .models
                .iter()
                .map(|m| m.uncertainty.bound_constant())
                .collect(),
            ctx,
            models: setup.models,
            plans: setup.plans,
            points: setup.points,
            config,
            state,
            step_count: 0,
            segment: 0,
            pending: VecDeque::new(),
        })
    }

    pub fn context(&self) -> &ControlContext<T> {
        &self.ctx
    }

    pub fn state(&self) -> &WorldState<T> {
        &self.state
    }

    pub fn models(&self) -> &[AgentModel<T>] {
        &self.models
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.models
            .iter()
            .zip(&self.state.kappa)
            .map(|(m, &k)| {
                if k == m.priority {
                    Mode::Active
                } else {
                    Mode::Passive
                }
            })
            .collect()
    }

    fn goal_point(&self, i: usize) -> &str {
        &self.plans[i].step(self.state.s[i]).point
    }

    fn goal_coords(&self, i: usize) -> &[T] {
        &self.points[self.goal_point(i)]
    }

    fn phys(&self) -> PhysState<T> {
        PhysState {
            x: self.state.x.clone(),
            v: self.state.v.clone(),
            a_hat: self.state.a_hat.clone(),
        }
    }

    /// `V` for the current state, with the goal of the unique active agent.
    pub fn lyapunov(&self) -> Result<T, ControlError> {
        let modes = self.modes();
        let active = modes.iter().position(|&m| m == Mode::Active);
        let inertia: Vec<SpdMatrix<T>> = self.models.iter().map(|m| m.inertia.clone()).collect();
        self.ctx.lyapunov_value(
            &self.state.x,
            &self.state.v,
            &self.state.a_hat,
            &self.a_true,
            active.map(|j| (j, self.goal_coords(j))),
            &inertia,
        )
    }

    /// Advances the continuous state by one step of size `h`.
    pub fn step(&mut self) -> Result<(), ControlError> {
        let modes = self.modes();
        let goals: Vec<&[T]> = (0..self.models.len())
            .map(|i| self.goal_coords(i))
            .collect();
        let next = rk4_step(
            &self.ctx,
            &self.models,
            self.state.t,
            &self.phys(),
            &goals,
            &modes,
            self.config.h,
        )?;
        self.step_count += 1;
        self.state.t = T::lit(self.step_count as f64) * self.config.h;
        self.state.x = next.x;
        self.state.v = next.v;
        self.state.a_hat = next.a_hat;
        if let Some(err) = self.ctx.first_violation(&self.state.x) {
            return Err(err);
        }
        Ok(())
    }

    /// Applies pending counter broadcasts, then lets every active agent that
    /// sits inside its goal provide its services and advance.
    pub fn hybrid_tick(&mut self) -> Vec<SimEvent<T>> {
        let mut events = Vec::new();
        let n = self.models.len();
        let t = self.state.t;
        while self.pending.front().is_some_and(|p| p.due <= t) {
            let p = self.pending.pop_front().expect("front exists");
            self.advance_counter(p.agent);
            events.push(SimEvent {
                t,
                agent: p.agent,
                kind: EventKind::CounterUpdate {
                    kappa: self.state.kappa[p.agent],
                    s: self.state.s[p.agent],
                },
            });
        }
        let modes = self.modes();
        for cur in 0..n {
            if modes[cur] != Mode::Active {
                continue;
            }
            let r = self.models[cur].radius;
            if !(dist_sq(&self.state.x[cur], self.goal_coords(cur)) < r * r) {
                continue;
            }
            let step = self.plans[cur].step(self.state.s[cur]).clone();
            events.push(SimEvent {
                t,
                agent: cur,
                kind: EventKind::GoalReached {
                    point: step.point.clone(),
                    s: self.state.s[cur],
                },
            });
            events.push(SimEvent {
                t,
                agent: cur,
                kind: EventKind::ServicesProvided {
                    point: step.point,
                    services: step.services,
                },
            });
            self.state.s[cur] = self.plans[cur].next_index(self.state.s[cur]);
            let delayed = self.config.broadcast_delay > T::zero();
            for i in 0..n {
                if i == cur || !delayed {
                    self.advance_counter(i);
                    events.push(SimEvent {
                        t,
                        agent: i,
                        kind: EventKind::CounterUpdate {
                            kappa: self.state.kappa[i],
                            s: self.state.s[i],
                        },
                    });
                } else {
                    self.pending.push_back(PendingUpdate {
                        due: t + self.config.broadcast_delay,
                        agent: i,
                    });
                }
            }
        }
        events
    }

    fn advance_counter(&mut self, i: usize) {
        let n = self.models.len();
        self.state.kappa[i] = self.state.kappa[i] % n + 1;
    }

    fn sample(&self) -> Sample<T> {
        Sample {
            t: self.state.t,
            x: self.state.x.clone(),
            v: self.state.v.clone(),
            a_hat: self.state.a_hat.clone(),
            active: self
                .modes()
                .into_iter()
                .map(|m| m == Mode::Active)
                .collect(),
            s: self.state.s.clone(),
            goal: (0..self.models.len())
                .map(|i| self.goal_point(i).to_string())
                .collect(),
        }
    }

    /// Runs until `t_end` or the first barrier violation.
    pub fn run(mut self) -> TrajectoryLog<T> {
        let h = self.config.h;
        let steps = (self.config.t_end / h).round().to_usize().unwrap_or(0);
        let every = (self.config.decimation / h)
            .round()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let (col0, con0) = self.ctx.barrier_values(&self.state.x);
        let mut log = TrajectoryLog {
            h,
            t_end: self.config.t_end,
            samples: vec![self.sample()],
            events: Vec::new(),
            lyapunov: Vec::with_capacity(steps),
            barrier_min_col: col0,
            barrier_min_con: con0,
            initial_edges: self.ctx.initial_edges().edges().to_vec(),
            complete_edges: self.ctx.complete_edges().edges().to_vec(),
            termination: Termination::Completed,
        };
        let mut v_prev = self.lyapunov().ok();
        for k in 1..=steps {
            let t0 = self.state.t;
            let active = self.modes().iter().position(|&m| m == Mode::Active);
            if let Err(err) = self.step() {
                let detail = err.to_string();
                log.events.push(SimEvent {
                    t: self.state.t,
                    agent: violating_agent(&err),
                    kind: EventKind::InvariantViolation {
                        detail: detail.clone(),
                    },
                });
                log.termination = Termination::Violation {
                    t: self.state.t.to_f64_lossy(),
                    detail,
                };
                log.samples.push(self.sample());
                return log;
            }
            let (col, con) = self.ctx.barrier_values(&self.state.x);
            for (lo, b) in log.barrier_min_col.iter_mut().zip(col) {
                *lo = lo.min(b);
            }
            for (lo, b) in log.barrier_min_con.iter_mut().zip(con) {
                *lo = lo.min(b);
            }
            let v_after = self.lyapunov().ok();
            if let (Some(before), Some(after)) = (v_prev, v_after) {
                log.lyapunov.push(LyapunovStep {
                    t: t0,
                    segment: self.segment,
                    active,
                    before,
                    after,
                });
            }
            let events = self.hybrid_tick();
            v_prev = if events.is_empty() {
                v_after
            } else {
                self.segment += 1;
                self.lyapunov().ok()
            };
            log.events.extend(events);
            if k % every == 0 || k == steps {
                log.samples.push(self.sample());
            }
        }
        log
    }
}

fn violating_agent(err: &ControlError) -> usize {
    match err {
        ControlError::Singular { edge, .. } => edge.0,
        _ => 0,
    }
}

/// Builds the simulator and runs the whole episode.
pub fn run_episode<T: Scalar>(
    setup: SimSetup<T>,
    t_end: T,
    h: T,
) -> Result<TrajectoryLog<T>, SimError> {
    let config = SimConfig {
        h,
        t_end,
        decimation: T::lit(0.5),
        broadcast_delay: T::zero(),
    };
    Ok(Simulator::new(setup, config)?.run())
}
