//! Building a mission model from a configuration document and checking
//! its integrity.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example build_and_validate
//! ```

use mission_mdp::{
    global_cost, transition_distribution, validate_model, Action, MdpModel, MissionState,
    ModelConfig,
};

fn main() {
    // The shipped three-goal configuration round-trips through JSON; the
    // same document drives the CLI.
    let config = ModelConfig::paper_three_goal();
    let text = serde_json::to_string_pretty(&config).unwrap();
    println!("config document is {} bytes of JSON", text.len());
    let config: ModelConfig = serde_json::from_str(&text).unwrap();

    let model = MdpModel::build(config.clone()).unwrap();
    println!(
        "model: {} states x {} actions, discount {}",
        mission_mdp::mdp::Mdp::num_states(&model),
        mission_mdp::mdp::Mdp::num_actions(&model),
        config.discount
    );
    for action in model.actions() {
        println!("  action {:>2}: {}", action.id(3), action.label());
    }

    // Costs follow the mission cost function term by term.
    let state = MissionState {
        fault: 1,
        range_flags: vec![true, true, true],
        goal_priorities: vec![2, 0, 0],
        location: 1,
        commitment: 0,
        threat: 0,
        nav_mode: 0,
    };
    let idle = Action::NoCommit { agile: false };
    println!(
        "\nhigh-priority unserved goal 1 costs {} per epoch",
        global_cost(&state, idle, &config).unwrap()
    );

    // Transitions factor per variable; with the shipped kernels a commit
    // action yields one successor per goal-priority outcome.
    let commit = Action::Commit {
        goal: 1,
        agile: false,
    };
    let successors = transition_distribution(&state, commit, &config).unwrap();
    println!("commit-to-goal-1 successors: {}", successors.len());
    for (next, p) in &successors {
        println!(
            "  p={p:.2}: l={} c={} g={:?}",
            next.location, next.commitment, next.goal_priorities
        );
    }

    // Model-level validation sweeps every (state, action) pair.
    let report = validate_model(&model);
    println!(
        "\nvalidation: {} pairs checked, {} defects",
        report.pairs_checked,
        report.bad_distribution_count + report.negative_cost_count
    );

    // A corrupted kernel row is caught at build time with its JSON path.
    let mut broken = config;
    broken.fault_kernel.normal[2][2] = 0.5;
    match MdpModel::build(broken) {
        Err(e) => println!("\ncorrupted config rejected:\n{e}"),
        Ok(_) => unreachable!("validation must reject the broken row"),
    }
}
