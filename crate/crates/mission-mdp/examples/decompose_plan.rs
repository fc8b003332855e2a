//! Factor-based decomposition of the three-goal mission into candidate
//! sub-MDPs, with scores and the complexity-reduction arithmetic.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example decompose_plan
//! ```

use mission_mdp::decompose::{decompose, Criterion, ScoreWeights};
use mission_mdp::verify::complexity_reduction;
use mission_mdp::{MdpModel, ModelConfig};

fn main() {
    let model = MdpModel::build(ModelConfig::paper_three_goal()).unwrap();
    let weights = ScoreWeights::default();

    for criterion in [Criterion::Goal, Criterion::Location, Criterion::Fault] {
        let plan = decompose(&model, criterion, 100_000, weights, 0.0).unwrap();
        let summary = plan.summary();
        println!("\n== {criterion:?} decomposition ==");
        println!(
            "{:<4} {:<22} {:>8} {:>8} {:>10}",
            "id", "focus", "states", "actions", "score"
        );
        for sub in &summary.subs {
            println!(
                "{:<4} {:<22} {:>8} {:>8} {:>10.3}",
                sub.id, sub.focus, sub.states, sub.actions, sub.score.total
            );
        }
        println!(
            "phi: every state maps to {:.2} sub-MDP(s) on average",
            summary.mean_subs_per_state
        );
        let (global, decomposed, ratio) =
            complexity_reduction(&plan, mission_mdp::mdp::Mdp::num_states(&model) as u128);
        println!("complexity proxy |S|^2 = {global} vs sum |S_i|^2 = {decomposed} (x{ratio:.0})");
    }

    // The goal plan is the one the mission pipeline uses: three 4,608-state
    // single-goal sub-MDPs against the 331,776-state global model.
    let plan = decompose(&model, Criterion::Goal, 5_000, weights, 0.0).unwrap();
    assert_eq!(plan.sub_mdps.len(), 3);
    assert!(plan
        .sub_mdps
        .iter()
        .all(|s| s.model.num_states() == 4_608));
}
