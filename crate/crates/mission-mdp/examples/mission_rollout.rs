//! A complete single-goal duty cycle under the optimal policy: priority
//! raise, commitment, transit, goal completion, threat evasion, return.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example mission_rollout
//! ```

use mission_mdp::sim::{check_milestones, run_mission, trajectory_csv, Milestone, Scenario, TrajectoryRecord};
use mission_mdp::solver::{extract_policy, value_iteration, SolveOptions};
use mission_mdp::{MdpModel, ModelConfig};

fn main() {
    let model = MdpModel::build(ModelConfig::paper_single_goal()).unwrap();
    let (v, _) = value_iteration(&model, SolveOptions::with_tolerance(1e-8));
    let policy = extract_policy(&model, &v);

    let scenario = Scenario::case_one();
    println!("events: {:?}\n", scenario.events);
    let traj = run_mission(&scenario, &policy, &model).unwrap();

    println!("epoch  g1  l  c  t  m  action                        cost");
    for r in &traj {
        println!(
            "{:>5}  {:>2}  {}  {}  {}  {}  {:<28} {:>7.2}{}",
            r.epoch,
            r.state.goal_priorities[0],
            r.state.location,
            r.state.commitment,
            r.state.threat,
            r.state.nav_mode,
            model.action_from_index(r.action as usize - 1).label(),
            r.cost,
            r.event_applied
                .map(|e| format!("   <- {}", e.label()))
                .unwrap_or_default()
        );
    }

    let milestones = [
        Milestone::new("priority raised", |r: &TrajectoryRecord| {
            r.state.goal_priorities[0] == 2
        }),
        Milestone::new("committed", |r: &TrajectoryRecord| r.state.commitment == 1),
        Milestone::new("arrived at goal cell", |r: &TrajectoryRecord| {
            r.state.location == 5
        }),
        Milestone::new("goal + commitment reset", |r: &TrajectoryRecord| {
            r.state.goal_priorities[0] == 0 && r.state.commitment == 0
        }),
        Milestone::new("agile under threat", |r: &TrajectoryRecord| {
            r.state.threat == 2 && r.state.nav_mode == 1
        }),
        Milestone::new("reverted to normal", |r: &TrajectoryRecord| {
            r.state.threat == 0 && r.state.nav_mode == 0
        }),
        Milestone::new("back at base", |r: &TrajectoryRecord| r.state.location == 1),
    ];
    println!("\nmilestones:");
    for (label, epoch) in check_milestones(&traj, &milestones).unwrap() {
        println!("  epoch {epoch:>2}: {label}");
    }

    // The same trajectory as a plot-ready CSV with provenance headers.
    let csv = trajectory_csv(&traj, model.layout(), scenario.seed, 0, 0);
    println!("\nfirst CSV lines:");
    for line in csv.lines().take(8) {
        println!("  {line}");
    }
}
