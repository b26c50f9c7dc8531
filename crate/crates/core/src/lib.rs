//! Temporal-logic-driven coordination of spherical agents: LTL parsing and
//! semantics, Büchi automata, prefix–suffix plan synthesis, a decentralized
//! barrier/adaptive controller, a hybrid simulator and post-hoc monitors.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod buchi;
pub mod controller;
pub mod graph;
pub mod ltl;
pub mod monitor;
pub mod planner;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod simulator;

pub use scalar::Scalar;

/// Double-precision instantiations.
pub type ControlContextF64 = controller::ControlContext<f64>;
pub type AgentModelF64 = simulator::AgentModel<f64>;
pub type TrajectoryLogF64 = simulator::TrajectoryLog<f64>;
pub type SimulatorF64 = simulator::Simulator<f64>;

/// Single-precision instantiations.
pub type ControlContextF32 = controller::ControlContext<f32>;
pub type AgentModelF32 = simulator::AgentModel<f32>;
pub type TrajectoryLogF32 = simulator::TrajectoryLog<f32>;
pub type SimulatorF32 = simulator::Simulator<f32>;
