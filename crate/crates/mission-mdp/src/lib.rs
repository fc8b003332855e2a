//! Factored-MDP mission planning toolkit.
//!
//! Builds large goal-based Markov decision processes over a factored
//! mission state (fault mode, per-goal range and priority, grid location,
//! commitment, threat, navigation mode), solves them by value iteration,
//! decomposes them into small sub-MDPs, recombines the sub-policies into
//! a global policy, and verifies that the recombined policy reproduces
//! the globally optimal one.
//!
//! Start with the runnable programs under `examples/`; each one exercises
//! a single capability end to end. The `mission-mdp` binary wires the same
//! capabilities into a small command-line pipeline.

pub mod config;
pub mod decompose;
pub mod error;
pub mod io;
pub mod mdp;
pub mod model;
pub mod recombine;
pub mod rng;
pub mod scaling;
pub mod sim;
pub mod solver;
pub mod state;
pub mod verify;

pub use config::{DistanceMetric, FaultKernels, GridDims, ModelConfig, RangeDynamics};
pub use decompose::{
    decompose, partition, score_candidate, CandidateScore, Criterion, DecompositionPlan,
    ScoreWeights, SubMdp, SubMdpKind,
};
pub use error::{Error, Result};
pub use mdp::{Mdp, TabularMdp};
pub use model::{
    global_cost, local_cost, transition_distribution, validate_model, Action, MdpModel,
    ValidationReport,
};
pub use recombine::{
    assign_agents, build_combined_policy, map_local_action, meta_policy_action, priority_score,
    replan, solve_all, update_progress, Agent, GlobalPolicy, MetaMode, PriorityParams,
    SubSolution,
};
pub use scaling::{
    compare_global_vs_decomposed, fit_power_law, sweep_goals, PipelineComparison, PowerLawFit,
    ScalePoint, SweepResult,
};
pub use sim::{
    check_milestones, event_order_check, run_mission, step, trajectory_csv, Milestone,
    MissionEvent, Scenario, TrajectoryRecord,
};
pub use solver::{
    bellman_residual, evaluate_policy, extract_policy, state_action_values, value_iteration,
    Policy, SolveOptions, SolveReport, ValueFunction,
};
pub use state::{
    decode_state, encode_state, enumerate_states, state_count, MissionState, StateIndex,
    StateLayout,
};
pub use verify::{
    build_product_mdp, compare_next_state, compare_policies, complexity_reduction, random_product,
    verify_additive_value, verify_policy_equivalence, EquivalenceReport, NextStateDiff,
    PolicyComparisonReport, ProductMdp,
};
