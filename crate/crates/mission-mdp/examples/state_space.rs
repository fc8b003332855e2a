//! The factored state space: layouts, exact counts, index encoding.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example state_space
//! ```

use mission_mdp::{
    decode_state, encode_state, enumerate_states, state_count, MissionState, StateLayout,
};

fn main() {
    // The three-goal mission layout: 8 fault modes, per-goal range flags
    // and priorities, a 4x2 grid, three threat levels, two nav modes.
    let layout = StateLayout::new(8, 3, 8, 3, 2).unwrap();
    println!("three-goal mission: {} states", state_count(&layout));

    // State counts explode in the goal count, not the grid.
    println!("\ngoals  states");
    for g in 1..=10 {
        let l = StateLayout::new(8, g, 8, 3, 2).unwrap();
        println!("{g:>5}  {}", state_count(&l));
    }

    // Structured states map to dense indices and back, bijectively.
    let state = MissionState {
        fault: 1,
        range_flags: vec![true, false, true],
        goal_priorities: vec![0, 2, 1],
        location: 1,
        commitment: 0,
        threat: 2,
        nav_mode: 1,
    };
    let idx = encode_state(&state, &layout).unwrap();
    println!("\nexample state encodes to index {idx}");
    assert_eq!(decode_state(idx, &layout).unwrap(), state);

    // Enumeration streams every state exactly once, in index order.
    let single = layout.with_single_goal();
    let n = enumerate_states(&single).unwrap().count();
    println!("single-goal enumeration yields {n} states");

    // Out-of-range fields are rejected with the field named.
    let mut bad = state.clone();
    bad.location = 99;
    println!("validation: {}", encode_state(&bad, &layout).unwrap_err());
}
