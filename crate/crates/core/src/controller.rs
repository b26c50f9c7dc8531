//! Barrier functions, the decentralized control law, the adaptation law and
//! the Lyapunov function used as a runtime monitor.

use std::fmt;

use crate::graph::{
    complete_edges, first_collision, incidence, is_connected, sense_edges, EdgeSet,
};
use crate::scalar::{dist_sq, norm, norm_sq, Scalar, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierKind {
    Collision,
    Connectivity,
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierKind::Collision => "collision",
            BarrierKind::Connectivity => "connectivity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("barrier argument {0} is negative")]
    NegativeArgument(f64),
    #[error("{kind} barrier of edge ({},{}) is singular (argument {value})", .edge.0 + 1, .edge.1 + 1)]
    Singular {
        kind: BarrierKind,
        edge: (usize, usize),
        value: f64,
    },
    #[error("barrier argument {0} is not positive")]
    NonPositiveArgument(f64),
    #[error("gain {name} must be positive")]
    InvalidGain { name: String },
    #[error("agents {} and {} overlap initially", .0 + 1, .1 + 1)]
    InitialCollision(usize, usize),
    #[error("initial proximity graph {0} is not connected")]
    Disconnected(String),
    #[error("sensing radius of agents {} and {} does not exceed r_i + r_j", .0 + 1, .1 + 1)]
    SensingTooShort(usize, usize),
    #[error("{0}")]
    Shape(String),
}

/// Piecewise barrier: `ϑ(s) = β̄(1 − (1 − s/d̄)²)` below `d̄`, `β̄` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec<T> {
    pub kind: BarrierKind,
    pub d_bar: T,
    pub beta_bar: T,
}

impl<T: Scalar> BarrierSpec<T> {
    /// `d̄ = d̲² − (r₁ + r₂)²`
    pub fn collision(r1: T, r2: T, d_con_min: T, beta_bar: T) -> Self {
        let rr = r1 + r2;
        Self {
            kind: BarrierKind::Collision,
            d_bar: d_con_min * d_con_min - rr * rr,
            beta_bar,
        }
    }

    /// `d̄ = d̲²`
    pub fn connectivity(d_con_min: T, beta_bar: T) -> Self {
        Self {
            kind: BarrierKind::Connectivity,
            d_bar: d_con_min * d_con_min,
            beta_bar,
        }
    }

    /// Coefficients of `ϑ` in the monomial basis, constant term first.
    pub fn polynomial(&self) -> [T; 3] {
        let two = T::lit(2.0);
        [
            T::zero(),
            two * self.beta_bar / self.d_bar,
            -self.beta_bar / (self.d_bar * self.d_bar),
        ]
    }
}

/// `β(s)`
pub fn theta<T: Scalar>(s: T, spec: &BarrierSpec<T>) -> Result<T, ControlError> {
    if s < T::zero() {
        return Err(ControlError::NegativeArgument(s.to_f64_lossy()));
    }
    if s >= spec.d_bar {
        return Ok(spec.beta_bar);
    }
    let q = T::one() - s / spec.d_bar;
    Ok(spec.beta_bar * (T::one() - q * q))
}

/// `dβ/ds`, zero on the plateau.
pub fn theta_prime<T: Scalar>(s: T, spec: &BarrierSpec<T>) -> T {
    if s >= spec.d_bar {
        return T::zero();
    }
    let q = T::one() - s / spec.d_bar;
    T::lit(2.0) * spec.beta_bar * q / spec.d_bar
}

/// `d/ds (1/β(s)) = −β′(s)/β(s)²`
pub fn recip_barrier_grad<T: Scalar>(s: T, spec: &BarrierSpec<T>) -> Result<T, ControlError> {
    if !(s > T::zero()) {
        return Err(ControlError::NonPositiveArgument(s.to_f64_lossy()));
    }
    if s >= spec.d_bar {
        return Ok(T::zero());
    }
    let b = theta(s, spec)?;
    Ok(-theta_prime(s, spec) / (b * b))
}

/// Pairwise barrier arguments and their gradients with respect to the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierArgs<T> {
    /// `ι = ‖x₁ − x₂‖² − (r₁ + r₂)²`
    pub iota: T,
    /// `η = d̲² − ‖x₁ − x₂‖²`
    pub eta: T,
    pub d_iota: Vec<T>,
    pub d_eta: Vec<T>,
}

pub fn barrier_args<T: Scalar>(x1: &[T], x2: &[T], r1: T, r2: T, d_con_min: T) -> BarrierArgs<T> {
    let d2 = dist_sq(x1, x2);
    let rr = r1 + r2;
    let two = T::lit(2.0);
    let d_iota: Vec<T> = x1.iter().zip(x2).map(|(&a, &b)| two * (a - b)).collect();
    let d_eta = d_iota.iter().map(|&g| -g).collect();
    BarrierArgs {
        iota: d2 - rr * rr,
        eta: d_con_min * d_con_min - d2,
        d_iota,
        d_eta,
    }
}

/// `f̄_i`, the known bound shape of the unknown uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UncertaintyBound<T> {
    /// `f̄(x) = ‖x‖`
    Norm,
    /// `f̄(x) = c`
    Constant { value: T },
}

impl<T: Scalar> UncertaintyBound<T> {
    pub fn eval(&self, x: &[T]) -> T {
        match *self {
            UncertaintyBound::Norm => norm(x),
            UncertaintyBound::Constant { value } => value,
        }
    }
}

/// `â̇ = μ_a f̄(x) ‖v‖²`
pub fn adaptation_rate<T: Scalar>(x_i: &[T], v_i: &[T], mu_a: T, fbar: &UncertaintyBound<T>) -> T {
    mu_a * fbar.eval(x_i) * norm_sq(v_i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentGains<T> {
    /// goal attraction `μ_c`
    pub mu_c: T,
    /// velocity damping `μ`
    pub mu: T,
    /// adaptation `μ_a`
    pub mu_a: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlGains<T> {
    pub agents: Vec<AgentGains<T>>,
    /// per complete-graph edge
    pub mu_col: Vec<T>,
    /// per initial edge
    pub mu_con: Vec<T>,
}

impl<T: Scalar> ControlGains<T> {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |name: String| Err(ControlError::InvalidGain { name });
        for (i, g) in self.agents.iter().enumerate() {
            for (name, v) in [("mu_c", g.mu_c), ("mu", g.mu), ("mu_a", g.mu_a)] {
                if !(v > T::zero()) {
                    return bad(format!("{name} of agent {}", i + 1));
                }
            }
        }
        for (m, &v) in self.mu_col.iter().enumerate() {
            if !(v > T::zero()) {
                return bad(format!("mu_col of edge {}", m + 1));
            }
        }
        for (m, &v) in self.mu_con.iter().enumerate() {
            if !(v > T::zero()) {
                return bad(format!("mu_con of edge {}", m + 1));
            }
        }
        Ok(())
    }
}

/// Active (`md = 1`, goal attraction on) or passive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Passive,
    Active,
}

impl Mode {
    pub fn md<T: Scalar>(self) -> T {
        match self {
            Mode::Passive => T::zero(),
            Mode::Active => T::one(),
        }
    }
}

/// Team-wide quantities fixed at `t₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamParams<T> {
    pub radii: Vec<T>,
    pub d_con: Vec<T>,
    pub gravity: Vec<Vec<T>>,
    pub fbar: Vec<UncertaintyBound<T>>,
    pub agent_gains: Vec<AgentGains<T>>,
    pub mu_col: T,
    pub mu_con: T,
    pub beta_bar_col: T,
    pub beta_bar_con: T,
}

/// Everything the control law needs besides the instantaneous state: edge
/// sets, barrier specifications, gains.
#[derive(Debug, Clone)]
pub struct ControlContext<T> {
    dim: usize,
    radii: Vec<T>,
    gravity: Vec<Vec<T>>,
    fbar: Vec<UncertaintyBound<T>>,
    gains: ControlGains<T>,
    e0: EdgeSet,
    e_bar: EdgeSet,
    d_con_min_col: Vec<T>,
    d_con_min_con: Vec<T>,
    col_specs: Vec<BarrierSpec<T>>,
    con_specs: Vec<BarrierSpec<T>>,
    incident_col: Vec<Vec<usize>>,
    incident_con: Vec<Vec<usize>>,
}

impl<T: Scalar> ControlContext<T> {
    /// Fixes `E₀ = E(x(t₀))` and the complete-graph numbering, after checking
    /// that the initial configuration is collision-free and connected.
    pub fn new(params: TeamParams<T>, x0: &[Vec<T>]) -> Result<Self, ControlError> {
        let n = x0.len();
        let dim = x0.first().map_or(0, Vec::len);
        let lens = [
            params.radii.len(),
            params.d_con.len(),
            params.gravity.len(),
            params.fbar.len(),
            params.agent_gains.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(ControlError::Shape(format!(
                "per-agent parameter lists must have {n} entries"
            )));
        }
        if x0.iter().chain(&params.gravity).any(|v| v.len() != dim) {
            return Err(ControlError::Shape(format!(
                "all vectors must have dimension {dim}"
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let reach = params.radii[i] + params.radii[j];
                if !(params.d_con[i].min(params.d_con[j]) > reach) {
                    return Err(ControlError::SensingTooShort(i, j));
                }
            }
        }
        if let Some((i, j)) = first_collision(x0, &params.radii) {
            return Err(ControlError::InitialCollision(i, j));
        }
        let e0 = sense_edges(x0, &params.d_con);
        if !is_connected(&e0, n) {
            return Err(ControlError::Disconnected(e0.to_string()));
        }
        let e_bar = complete_edges(n, &e0);
        let dmin = |&(a, b): &(usize, usize)| params.d_con[a].min(params.d_con[b]);
        let d_con_min_col: Vec<T> = e_bar.edges().iter().map(dmin).collect();
        let d_con_min_con: Vec<T> = e0.edges().iter().map(dmin).collect();
        let col_specs = e_bar
            .edges()
            .iter()
            .zip(&d_con_min_col)
            .map(|(&(a, b), &d)| {
                BarrierSpec::collision(params.radii[a], params.radii[b], d, params.beta_bar_col)
            })
            .collect();
        let con_specs = d_con_min_con
            .iter()
            .map(|&d| BarrierSpec::connectivity(d, params.beta_bar_con))
            .collect();
        let gains = ControlGains {
            agents: params.agent_gains,
            mu_col: vec![params.mu_col; e_bar.len()],
            mu_con: vec![params.mu_con; e0.len()],
        };
        gains.validate()?;
        for (name, b) in [
            ("beta_bar_col", params.beta_bar_col),
            ("beta_bar_con", params.beta_bar_con),
        ] {
            if !(b > T::zero()) {
                return Err(ControlError::InvalidGain { name: name.into() });
            }
        }
        let incident_col = (0..n).map(|i| e_bar.incident(i)).collect();
        let incident_con = (0..n).map(|i| e0.incident(i)).collect();
        Ok(Self {
            dim,
            radii: params.radii,
            gravity: params.gravity,
            fbar: params.fbar,
            gains,
            e0,
            e_bar,
            d_con_min_col,
            d_con_min_con,
            col_specs,
            con_specs,
            incident_col,
            incident_con,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.radii.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn gravity(&self, i: usize) -> &[T] {
        &self.gravity[i]
    }

    pub fn fbar(&self, i: usize) -> &UncertaintyBound<T> {
        &self.fbar[i]
    }

    pub fn gains(&self) -> &ControlGains<T> {
        &self.gains
    }

    pub fn initial_edges(&self) -> &EdgeSet {
        &self.e0
    }

    pub fn complete_edges(&self) -> &EdgeSet {
        &self.e_bar
    }

    pub fn col_spec(&self, m: usize) -> &BarrierSpec<T> {
        &self.col_specs[m]
    }

    pub fn con_spec(&self, m: usize) -> &BarrierSpec<T> {
        &self.con_specs[m]
    }

    /// `d̲_con` of initial edge `m`.
    pub fn con_range(&self, m: usize) -> T {
        self.d_con_min_con[m]
    }

    fn col_args(&self, m: usize, x: &[Vec<T>]) -> BarrierArgs<T> {
        let (a, b) = self.e_bar.get(m);
        barrier_args(
            &x[a],
            &x[b],
            self.radii[a],
            self.radii[b],
            self.d_con_min_col[m],
        )
    }

    fn con_args(&self, m: usize, x: &[Vec<T>]) -> BarrierArgs<T> {
        let (a, b) = self.e0.get(m);
        barrier_args(
            &x[a],
            &x[b],
            self.radii[a],
            self.radii[b],
            self.d_con_min_con[m],
        )
    }

    /// `β′_col,m · ∂ι_m/∂x_{m₁}` for every complete-graph edge.
    fn col_force(&self, m: usize, x: &[Vec<T>]) -> Result<Vec<T>, ControlError> {
        let args = self.col_args(m, x);
        let g = recip_barrier_grad(args.iota, &self.col_specs[m]).map_err(|_| {
            ControlError::Singular {
                kind: BarrierKind::Collision,
                edge: self.e_bar.get(m),
                value: args.iota.to_f64_lossy(),
            }
        })?;
        Ok(args.d_iota.into_iter().map(|d| g * d).collect())
    }

    fn con_force(&self, m: usize, x: &[Vec<T>]) -> Result<Vec<T>, ControlError> {
        let args = self.con_args(m, x);
        let g = recip_barrier_grad(args.eta, &self.con_specs[m]).map_err(|_| {
            ControlError::Singular {
                kind: BarrierKind::Connectivity,
                edge: self.e0.get(m),
                value: args.eta.to_f64_lossy(),
            }
        })?;
        Ok(args.d_eta.into_iter().map(|d| g * d).collect())
    }

    /// Barrier part of agent `i`'s input, summed over its incident edges.
    pub fn interaction_term(&self, i: usize, x: &[Vec<T>]) -> Result<Vec<T>, ControlError> {
        let mut out = vec![T::zero(); self.dim];
        for &m in &self.incident_col[i] {
            let (tail, _) = self.e_bar.get(m);
            let alpha = if i == tail {
                -self.gains.mu_col[m]
            } else {
                self.gains.mu_col[m]
            };
            for (o, f) in out.iter_mut().zip(self.col_force(m, x)?) {
                *o = *o + alpha * f;
            }
        }
        for &m in &self.incident_con[i] {
            let (tail, _) = self.e0.get(m);
            let alpha = if i == tail {
                -self.gains.mu_con[m]
            } else {
                self.gains.mu_con[m]
            };
            for (o, f) in out.iter_mut().zip(self.con_force(m, x)?) {
                *o = *o + alpha * f;
            }
        }
        Ok(out)
    }

    /// Stacked barrier inputs of all agents through the incidence matrices,
    /// `(D(G₀)⊗I) μ_con β_con + (D(Ḡ)⊗I) μ_col β_col`.
    pub fn interaction_vector_form(&self, x: &[Vec<T>]) -> Result<Vec<T>, ControlError> {
        let n = self.num_agents();
        let mut stacked_col = Vec::with_capacity(self.e_bar.len() * self.dim);
        for m in 0..self.e_bar.len() {
            let f = self.col_force(m, x)?;
            stacked_col.extend(f.into_iter().map(|v| self.gains.mu_col[m] * v));
        }
        let mut stacked_con = Vec::with_capacity(self.e0.len() * self.dim);
        for m in 0..self.e0.len() {
            let f = self.con_force(m, x)?;
            stacked_con.extend(f.into_iter().map(|v| self.gains.mu_con[m] * v));
        }
        let a = incidence(&self.e_bar, n).kron_mul(self.dim, &stacked_col);
        let b = incidence(&self.e0, n).kron_mul(self.dim, &stacked_con);
        Ok(a.into_iter().zip(b).map(|(p, q)| p + q).collect())
    }

    /// `γ_i(c) = μ_c,i (x_i − c)`
    pub fn goal_term(&self, i: usize, x_i: &[T], goal: &[T]) -> Vec<T> {
        let k = self.gains.agents[i].mu_c;
        x_i.iter().zip(goal).map(|(&a, &c)| k * (a - c)).collect()
    }

    /// Agent `i`'s input for the given goal and mode. Reads `x` only at `i`
    /// and at agents sharing an edge with `i`; barrier terms of agents beyond
    /// sensing range vanish.
    pub fn control_input(
        &self,
        i: usize,
        goal: &[T],
        mode: Mode,
        x: &[Vec<T>],
        v_i: &[T],
        a_hat_i: T,
    ) -> Result<Vec<T>, ControlError> {
        let mut u = self.interaction_term(i, x)?;
        let damping = a_hat_i * self.fbar[i].eval(&x[i]) + self.gains.agents[i].mu;
        let md: T = mode.md();
        let gamma = self.goal_term(i, &x[i], goal);
        for k in 0..self.dim {
            u[k] = u[k] - md * gamma[k] + self.gravity[i][k] - damping * v_i[k];
        }
        Ok(u)
    }

    pub fn adaptation_rate(&self, i: usize, x_i: &[T], v_i: &[T]) -> T {
        adaptation_rate(x_i, v_i, self.gains.agents[i].mu_a, &self.fbar[i])
    }

    /// `ι_m` for every complete-graph edge and `η_m` for every initial edge.
    pub fn edge_arguments(&self, x: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
        let iota = (0..self.e_bar.len())
            .map(|m| self.col_args(m, x).iota)
            .collect();
        let eta = (0..self.e0.len())
            .map(|m| self.con_args(m, x).eta)
            .collect();
        (iota, eta)
    }

    /// First violated barrier, if any: `ι_m ≤ 0` or `η_m ≤ 0`.
    pub fn first_violation(&self, x: &[Vec<T>]) -> Option<ControlError> {
        let (iota, eta) = self.edge_arguments(x);
        if let Some(m) = iota.iter().position(|&s| !(s > T::zero())) {
            return Some(ControlError::Singular {
                kind: BarrierKind::Collision,
                edge: self.e_bar.get(m),
                value: iota[m].to_f64_lossy(),
            });
        }
        eta.iter()
            .position(|&s| !(s > T::zero()))
            .map(|m| ControlError::Singular {
                kind: BarrierKind::Connectivity,
                edge: self.e0.get(m),
                value: eta[m].to_f64_lossy(),
            })
    }

    /// `β_col,m(ι_m)` and `β_con,m(η_m)`, clamped to zero at or past a
    /// violation so they can always be logged.
    pub fn barrier_values(&self, x: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
        let (iota, eta) = self.edge_arguments(x);
        let eval = |s: T, spec: &BarrierSpec<T>| theta(s.max(T::zero()), spec).unwrap_or(T::zero());
        let col = iota
            .iter()
            .zip(&self.col_specs)
            .map(|(&s, sp)| eval(s, sp))
            .collect();
        let con = eta
            .iter()
            .zip(&self.con_specs)
            .map(|(&s, sp)| eval(s, sp))
            .collect();
        (col, con)
    }

    /// `V = μ_c,j/2 ‖x_j − c_j‖² + Σ (½ vᵢᵀBᵢvᵢ + ãᵢ²/(2μ_a,i)) + Σ μ_col/β_col + Σ μ_con/β_con`
    ///
    /// `active` is the active agent and its goal; without one the goal term
    /// is dropped.
    pub fn lyapunov_value(
        &self,
        x: &[Vec<T>],
        v: &[Vec<T>],
        a_hat: &[T],
        a_true: &[T],
        active: Option<(usize, &[T])>,
        inertia: &[SpdMatrix<T>],
    ) -> Result<T, ControlError> {
        if let Some(err) = self.first_violation(x) {
            return Err(err);
        }
        let half = T::lit(0.5);
        let mut total = T::zero();
        if let Some((j, c)) = active {
            total = total + half * self.gains.agents[j].mu_c * dist_sq(&x[j], c);
        }
        for i in 0..self.num_agents() {
            let at = a_hat[i] - a_true[i];
            total = total
                + half * inertia[i].quad_form(&v[i])
                + at * at / (T::lit(2.0) * self.gains.agents[i].mu_a);
        }
        let (col, con) = self.barrier_values(x);
        for (m, b) in col.into_iter().enumerate() {
            total = total + self.gains.mu_col[m] / b;
        }
        for (m, b) in con.into_iter().enumerate() {
            total = total + self.gains.mu_con[m] / b;
        }
        Ok(total)
    }
}
