//! Scenario files: a TOML description of agents, points of interest, gains
//! and integrator settings. The schema is documented in `docs/FORMATS.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{AgentGains, UncertaintyBound};
use crate::graph::{first_collision, is_connected, sense_edges};
use crate::ltl::{parse_ltl_unchecked, Formula};
use crate::planner::{
    build_transition_system, synthesize_plan, PrefixSuffixPlan, TransitionSystem,
};
use crate::scalar::{Scalar, SpdMatrix};
use crate::simulator::{AgentInit, AgentModel, SimConfig, SimSetup, UncertaintyModel};

pub const DEFAULT_H: f64 = 0.005;
pub const DEFAULT_BETA_BAR: f64 = 1.0;
pub const DEFAULT_DECIMATION: f64 = 0.5;
pub const DEFAULT_T_END: f64 = 1000.0;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("initial configuration: {0}")]
    InitialCondition(String),
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        msg: msg.into(),
    }
}

/// A number, or the string `"random"` for a draw from `(1, 2)` seeded by the
/// scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Named(String),
}

/// Scalar multiple of the identity (fixed or random) or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Scale(Param),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum UncertaintySpec {
    None,
    Sinusoidal { alpha: f64, w1: Param, w2: Param },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadcast_delay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub mu_col: f64,
    pub mu_con: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_bar_col: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_bar_con: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub id: String,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<usize>,
    pub position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_hat: Option<f64>,
    pub radius: f64,
    pub d_con: f64,
    pub inertia: InertiaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<Vec<f64>>,
    pub mu_c: f64,
    pub mu: f64,
    pub mu_a: f64,
    pub formula: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty_bound: Option<UncertaintyBound<f64>>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
}

/// The file as written, before defaults and random draws are resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    pub barrier: BarrierSection,
    #[serde(rename = "point")]
    pub points: Vec<PointSpec>,
    #[serde(rename = "agent")]
    pub agents: Vec<AgentSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioAgent {
    pub model: AgentModel<f64>,
    pub init: AgentInit<f64>,
    pub formula_text: String,
    pub formula: Formula,
    /// Services per point, in point declaration order.
    pub labels: Vec<(String, BTreeSet<String>)>,
}

impl ScenarioAgent {
    pub fn services(&self) -> BTreeSet<String> {
        self.labels
            .iter()
            .flat_map(|(_, l)| l.iter().cloned())
            .collect()
    }
}

/// Fully validated scenario with every default and random draw resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub dimension: usize,
    pub seed: u64,
    pub points: Vec<(String, Vec<f64>)>,
    pub agents: Vec<ScenarioAgent>,
    pub h: f64,
    pub t_end: f64,
    pub decimation: f64,
    pub broadcast_delay: f64,
    pub mu_col: f64,
    pub mu_con: f64,
    pub beta_bar_col: f64,
    pub beta_bar_con: f64,
    /// Non-fatal findings, e.g. formula atoms no point offers.
    pub warnings: Vec<String>,
}

fn draw_open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.gen_range(1.0..2.0);
        if v > 1.0 {
            return v;
        }
    }
}

fn resolve(p: &Param, drawn: f64, path: &str) -> Result<f64, ScenarioError> {
    match p {
        Param::Value(v) => Ok(*v),
        Param::Named(s) if s == "random" => Ok(drawn),
        Param::Named(s) => Err(invalid(
            path,
            format!("expected a number or \"random\", got {s:?}"),
        )),
    }
}

fn positive(v: f64, path: &str) -> Result<f64, ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            path,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

fn vector(v: &[f64], dim: usize, path: &str) -> Result<Vec<f64>, ScenarioError> {
    if v.len() != dim {
        return Err(invalid(
            path,
            format!("expected {dim} components, got {}", v.len()),
        ));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(invalid(path, "components must be finite"));
    }
    Ok(v.to_vec())
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.file).expect("scenario files always serialize")
    }

    /// Same scenario with random parameters redrawn from another seed.
    pub fn with_seed(&self, seed: u64) -> Result<Self, ScenarioError> {
        let mut file = self.file.clone();
        file.seed = seed;
        Self::from_file(file)
    }

    pub fn with_integrator(
        &self,
        h: Option<f64>,
        t_end: Option<f64>,
        broadcast_delay: Option<f64>,
    ) -> Result<Self, ScenarioError> {
        let mut file = self.file.clone();
        file.integrator.h = h.or(file.integrator.h);
        file.integrator.t_end = t_end.or(file.integrator.t_end);
        file.integrator.broadcast_delay = broadcast_delay.or(file.integrator.broadcast_delay);
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let dim = file.dimension;
        if dim == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        let int = &file.integrator;
        let h = positive(int.h.unwrap_or(DEFAULT_H), "integrator.h")?;
        let t_end = int.t_end.unwrap_or(DEFAULT_T_END);
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(invalid(
                "integrator.t_end",
                "must be a nonnegative finite number",
            ));
        }
        let decimation = positive(
            int.decimation.unwrap_or(DEFAULT_DECIMATION),
            "integrator.decimation",
        )?;
        let broadcast_delay = int.broadcast_delay.unwrap_or(0.0);
        if !(broadcast_delay >= 0.0 && broadcast_delay.is_finite()) {
            return Err(invalid(
                "integrator.broadcast_delay",
                "must be a nonnegative finite number",
            ));
        }
        let b = &file.barrier;
        let mu_col = positive(b.mu_col, "barrier.mu_col")?;
        let mu_con = positive(b.mu_con, "barrier.mu_con")?;
        let beta_bar_col = positive(
            b.beta_bar_col.unwrap_or(DEFAULT_BETA_BAR),
            "barrier.beta_bar_col",
        )?;
        let beta_bar_con = positive(
            b.beta_bar_con.unwrap_or(DEFAULT_BETA_BAR),
            "barrier.beta_bar_con",
        )?;

        if file.points.is_empty() {
            return Err(invalid(
                "point",
                "at least one point of interest is required",
            ));
        }
        let mut points = Vec::with_capacity(file.points.len());
        for (k, p) in file.points.iter().enumerate() {
            let path = format!("point[{k}]");
            if points
                .iter()
                .any(|(id, _): &(String, Vec<f64>)| *id == p.id)
            {
                return Err(invalid(
                    format!("{path}.id"),
                    format!("duplicate point id {:?}", p.id),
                ));
            }
            if p.id == crate::planner::INITIAL_STATE {
                return Err(invalid(
                    format!("{path}.id"),
                    "id is reserved for the initial state",
                ));
            }
            points.push((
                p.id.clone(),
                vector(&p.position, dim, &format!("{path}.position"))?,
            ));
        }

        let n = file.agents.len();
        if n == 0 {
            return Err(invalid("agent", "at least one agent is required"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(file.seed);
        let mut agents = Vec::with_capacity(n);
        let mut warnings = Vec::new();
        let mut owner: BTreeMap<String, usize> = BTreeMap::new();
        for (i, a) in file.agents.iter().enumerate() {
            let path = format!("agent[{i}]");
            // three draws per agent, always, so each agent's values do not
            // depend on how its neighbours are configured
            let drawn = [
                draw_open_unit(&mut rng),
                draw_open_unit(&mut rng),
                draw_open_unit(&mut rng),
            ];
            let radius = positive(a.radius, &format!("{path}.radius"))?;
            let d_con = positive(a.d_con, &format!("{path}.d_con"))?;
            let inertia = match &a.inertia {
                InertiaSpec::Scale(p) => {
                    let s = positive(
                        resolve(p, drawn[0], &format!("{path}.inertia"))?,
                        &format!("{path}.inertia"),
                    )?;
                    SpdMatrix::scaled_identity(dim, s)
                }
                InertiaSpec::Matrix(rows) => {
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(invalid(
                            format!("{path}.inertia"),
                            format!("expected a {dim}x{dim} matrix"),
                        ));
                    }
                    SpdMatrix::new(dim, rows.concat())
                }
            }
            .map_err(|e| invalid(format!("{path}.inertia"), e.to_string()))?;
            let uncertainty = match &a.uncertainty {
                None | Some(UncertaintySpec::None) => UncertaintyModel::None,
                Some(UncertaintySpec::Sinusoidal { alpha, w1, w2 }) => {
                    UncertaintyModel::SinusoidalNorm {
                        alpha: *alpha,
                        w1: resolve(w1, drawn[1], &format!("{path}.uncertainty.w1"))?,
                        w2: resolve(w2, drawn[2], &format!("{path}.uncertainty.w2"))?,
                    }
                }
            };
            let gains = AgentGains {
                mu_c: positive(a.mu_c, &format!("{path}.mu_c"))?,
                mu: positive(a.mu, &format!("{path}.mu"))?,
                mu_a: positive(a.mu_a, &format!("{path}.mu_a"))?,
            };
            let model = AgentModel {
                radius,
                d_con,
                inertia,
                gravity: match &a.gravity {
                    Some(g) => vector(g, dim, &format!("{path}.gravity"))?,
                    None => vec![0.0; dim],
                },
                uncertainty,
                fbar: a.uncertainty_bound.unwrap_or(UncertaintyBound::Norm),
                gains,
                priority: a.priority.unwrap_or(i + 1),
            };
            let init = AgentInit {
                x: vector(&a.position, dim, &format!("{path}.position"))?,
                v: match &a.velocity {
                    Some(v) => vector(v, dim, &format!("{path}.velocity"))?,
                    None => vec![0.0; dim],
                },
                a_hat: a.a_hat.unwrap_or(0.0),
            };
            if !init.a_hat.is_finite() {
                return Err(invalid(format!("{path}.a_hat"), "must be finite"));
            }
            for key in a.labels.keys() {
                if !points.iter().any(|(id, _)| id == key) {
                    return Err(invalid(format!("{path}.labels.{key}"), "unknown point"));
                }
            }
            let labels: Vec<(String, BTreeSet<String>)> = points
                .iter()
                .map(|(id, _)| {
                    let l = a
                        .labels
                        .get(id)
                        .map(|v| v.iter().cloned().collect())
                        .unwrap_or_default();
                    (id.clone(), l)
                })
                .collect();
            for service in labels.iter().flat_map(|(_, l)| l) {
                if let Some(&other) = owner.get(service) {
                    if other != i {
                        return Err(invalid(
                            format!("{path}.labels"),
                            format!("service {service:?} already belongs to agent {}", other + 1),
                        ));
                    }
                }
                owner.insert(service.clone(), i);
            }
            let formula = parse_ltl_unchecked(&a.formula)
                .map_err(|e| invalid(format!("{path}.formula"), e.to_string()))?;
            let offered: BTreeSet<&String> = labels.iter().flat_map(|(_, l)| l).collect();
            for atom in formula.atoms() {
                if !offered.contains(&atom) {
                    let msg = format!(
                        "agent {}: atom {atom:?} in the formula is not offered at any point",
                        i + 1
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
            agents.push(ScenarioAgent {
                model,
                init,
                formula_text: a.formula.clone(),
                formula,
                labels,
            });
        }
        let mut prio: Vec<usize> = agents.iter().map(|a| a.model.priority).collect();
        prio.sort_unstable();
        if prio != (1..=n).collect::<Vec<_>>() {
            return Err(invalid(
                "agent[*].priority",
                format!("must be a permutation of 1..{n}"),
            ));
        }

        let x0: Vec<Vec<f64>> = agents.iter().map(|a| a.init.x.clone()).collect();
        let radii: Vec<f64> = agents.iter().map(|a| a.model.radius).collect();
        let d_con: Vec<f64> = agents.iter().map(|a| a.model.d_con).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if !(d_con[i].min(d_con[j]) > radii[i] + radii[j]) {
                    return Err(invalid(
                        format!("agent[{i}].d_con"),
                        format!(
                            "agents {} and {} cannot sense each other before touching",
                            i + 1,
                            j + 1
                        ),
                    ));
                }
            }
        }
        if let Some((i, j)) = first_collision(&x0, &radii) {
            return Err(ScenarioError::InitialCondition(format!(
                "agents {} and {} overlap",
                i + 1,
                j + 1
            )));
        }
        let e0 = sense_edges(&x0, &d_con);
        if !is_connected(&e0, n) {
            return Err(ScenarioError::InitialCondition(format!(
                "proximity graph {e0} is not connected"
            )));
        }

        Ok(Self {
            dimension: dim,
            seed: file.seed,
            points,
            agents,
            h,
            t_end,
            decimation,
            broadcast_delay,
            mu_col,
            mu_con,
            beta_bar_col,
            beta_bar_con,
            warnings,
            file,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn point(&self, id: &str) -> Option<&[f64]> {
        self.points
            .iter()
            .find(|(p, _)| p == id)
            .map(|(_, x)| x.as_slice())
    }

    pub fn transition_system(&self, i: usize) -> TransitionSystem {
        build_transition_system(&self.agents[i].labels, None).expect("points validated at load")
    }

    /// One plan per agent, `None` where the formula is infeasible.
    pub fn synthesize_plans(&self) -> Vec<Option<PrefixSuffixPlan>> {
        (0..self.num_agents())
            .map(|i| synthesize_plan(&self.transition_system(i), &self.agents[i].formula))
            .collect()
    }

    pub fn sim_setup<T: Scalar>(&self, plans: Vec<PrefixSuffixPlan>) -> SimSetup<T> {
        let v = |xs: &[f64]| xs.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let models = self
            .agents
            .iter()
            .map(|a| {
                let m = &a.model;
                AgentModel {
                    radius: T::lit(m.radius),
                    d_con: T::lit(m.d_con),
                    inertia: SpdMatrix::new(self.dimension, v(m.inertia.entries()))
                        .expect("validated at load"),
                    gravity: v(&m.gravity),
                    uncertainty: match m.uncertainty {
                        UncertaintyModel::None => UncertaintyModel::None,
                        UncertaintyModel::SinusoidalNorm { alpha, w1, w2 } => {
                            UncertaintyModel::SinusoidalNorm {
                                alpha: T::lit(alpha),
                                w1: T::lit(w1),
                                w2: T::lit(w2),
                            }
                        }
                    },
                    fbar: match m.fbar {
                        UncertaintyBound::Norm => UncertaintyBound::Norm,
                        UncertaintyBound::Constant { value } => UncertaintyBound::Constant {
                            value: T::lit(value),
                        },
                    },
                    gains: AgentGains {
                        mu_c: T::lit(m.gains.mu_c),
                        mu: T::lit(m.gains.mu),
                        mu_a: T::lit(m.gains.mu_a),
                    },
                    priority: m.priority,
                }
            })
            .collect();
        SimSetup {
            models,
            init: self
                .agents
                .iter()
                .map(|a| AgentInit {
                    x: v(&a.init.x),
                    v: v(&a.init.v),
                    a_hat: T::lit(a.init.a_hat),
                })
                .collect(),
            plans,
            points: self
                .points
                .iter()
                .map(|(id, x)| (id.clone(), v(x)))
                .collect(),
            mu_col: T::lit(self.mu_col),
            mu_con: T::lit(self.mu_con),
            beta_bar_col: T::lit(self.beta_bar_col),
            beta_bar_con: T::lit(self.beta_bar_con),
        }
    }

    pub fn sim_config<T: Scalar>(&self) -> SimConfig<T> {
        SimConfig {
            h: T::lit(self.h),
            t_end: T::lit(self.t_end),
            decimation: T::lit(self.decimation),
            broadcast_delay: T::lit(self.broadcast_delay),
        }
    }
}
