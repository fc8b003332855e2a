//! Value iteration on the single-goal mission: convergence, policy
//! extraction and state-action scores.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example solve_mission
//! ```

use mission_mdp::solver::{
    bellman_residual, extract_policy, state_action_values, value_iteration, SolveOptions,
};
use mission_mdp::{encode_state, MdpModel, MissionState, ModelConfig};

fn main() {
    let model = MdpModel::build(ModelConfig::paper_single_goal()).unwrap();
    let (v, report) = value_iteration(&model, SolveOptions::with_tolerance(1e-8));
    println!(
        "converged: {} after {} sweeps in {:.3}s",
        report.converged, report.iterations, report.wall_time_seconds
    );

    // Residuals contract geometrically (the Bellman operator is a
    // gamma-contraction); print every tenth sweep.
    println!("\nsweep  sup-norm residual");
    for (i, r) in report.residual_history.iter().enumerate() {
        if i % 10 == 0 || i + 1 == report.residual_history.len() {
            println!("{:>5}  {r:.3e}", i + 1);
        }
    }
    println!(
        "final Bellman residual: {:.3e}",
        bellman_residual(&model, &v)
    );

    let policy = extract_policy(&model, &v);

    // What does the optimal policy do with a high-priority goal in range?
    let state = MissionState {
        fault: 1,
        range_flags: vec![true],
        goal_priorities: vec![2],
        location: 1,
        commitment: 0,
        threat: 0,
        nav_mode: 0,
    };
    let idx = encode_state(&state, model.layout()).unwrap();
    let chosen = model.action_from_index(policy.action(idx));
    println!("\nat base with the goal hot: {}", chosen.label());

    // Return-form scores: the argmax coincides with the policy's argmin.
    println!("action scores (higher is better):");
    let scores = state_action_values(&model, &v, idx);
    for (i, s) in scores.iter().enumerate() {
        let marker = if i == policy.action(idx) { "  <- chosen" } else { "" };
        println!(
            "  {:<28} {s:>10.3}{marker}",
            model.action_from_index(i).label()
        );
    }
}
