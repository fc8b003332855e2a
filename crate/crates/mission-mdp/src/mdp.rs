//! Minimal interface the solver needs from any finite MDP, plus a dense
//! tabular implementation used for fixtures, oracles and product factors.

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// A finite discounted-cost MDP with dense state and action indices.
///
/// Costs are non-negative and minimized. `q_value` and `min_q` have
/// straightforward default implementations; models with exploitable
/// structure override them (the mission model shares per-state work
/// across its actions, the product model contracts factor by factor).
pub trait Mdp: Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn discount(&self) -> f64;

    /// Immediate cost J(s, a).
    fn cost(&self, state: usize, action: usize) -> f64;

    /// Invoke `visit(successor, probability)` for every successor with
    /// positive probability. Probabilities sum to 1 per (s, a).
    fn for_each_successor(&self, state: usize, action: usize, visit: &mut dyn FnMut(usize, f64));

    /// Q(s, a) = J(s, a) + gamma * sum_s' P(s'|s,a) V(s').
    fn q_value(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        let mut expect = 0.0;
        self.for_each_successor(state, action, &mut |sp, p| expect += p * values[sp]);
        self.cost(state, action) + self.discount() * expect
    }

    /// Minimum Q over actions and its argmin; ties resolve to the lowest
    /// action index so results are reproducible.
    fn min_q(&self, state: usize, values: &[f64]) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        for a in 0..self.num_actions() {
            let q = self.q_value(state, a, values);
            if q < best {
                best = q;
                arg = a;
            }
        }
        (best, arg)
    }

    /// Successor distribution as an explicit sparse vector.
    fn successors(&self, state: usize, action: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_successor(state, action, &mut |sp, p| out.push((sp, p)));
        out
    }
}

/// Dense tabular MDP: per (state, action) a sparse successor list and a cost.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    /// `transitions[s][a]` = list of (successor, probability).
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// `costs[s][a]`.
    pub costs: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        transitions: Vec<Vec<Vec<(usize, f64)>>>,
        costs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::contract(format!(
                "discount must be in [0, 1), got {discount}"
            )));
        }
        if transitions.len() != num_states || costs.len() != num_states {
            return Err(Error::contract("transition/cost tables must cover every state"));
        }
        for s in 0..num_states {
            if transitions[s].len() != num_actions || costs[s].len() != num_actions {
                return Err(Error::contract(format!(
                    "state {s}: every state needs {num_actions} actions"
                )));
            }
            for a in 0..num_actions {
                let sum: f64 = transitions[s][a].iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::contract(format!(
                        "transition row (s={s}, a={a}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(TabularMdp {
            num_states,
            num_actions,
            discount,
            transitions,
            costs,
        })
    }

    /// Uniform-cost deterministic chain used in small fixtures.
    pub fn two_state_chain(cost_a: f64, cost_b: f64, discount: f64) -> TabularMdp {
        TabularMdp::new(
            2,
            1,
            discount,
            vec![vec![vec![(1, 1.0)]], vec![vec![(1, 1.0)]]],
            vec![vec![cost_a], vec![cost_b]],
        )
        .expect("fixed fixture is well-formed")
    }

    /// Random MDP with Dirichlet-style transition rows and uniform costs
    /// in `[0, max_cost]`. Used by oracle tests and the product generator.
    pub fn random(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        max_cost: f64,
        rng: &mut SimRng,
    ) -> TabularMdp {
        let mut transitions = Vec::with_capacity(num_states);
        let mut costs = Vec::with_capacity(num_states);
        for _ in 0..num_states {
            let mut row_t = Vec::with_capacity(num_actions);
            let mut row_c = Vec::with_capacity(num_actions);
            for _ in 0..num_actions {
                // Dirichlet(1,...,1) row via normalized exponentials.
                let mut weights: Vec<f64> = (0..num_states)
                    .map(|_| -(1.0 - rng.next_f64()).ln())
                    .collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                // Renormalize exactly so the row passes the 1e-9 gate.
                let sum: f64 = weights.iter().sum();
                let row: Vec<(usize, f64)> =
                    weights.iter().enumerate().map(|(i, &p)| (i, p / sum)).collect();
                row_t.push(row);
                row_c.push(rng.next_f64() * max_cost);
            }
            transitions.push(row_t);
            costs.push(row_c);
        }
        TabularMdp::new(num_states, num_actions, discount, transitions, costs)
            .expect("generated rows are stochastic by construction")
    }
}

impl Mdp for TabularMdp {
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn discount(&self) -> f64 {
        self.discount
    }
    fn cost(&self, state: usize, action: usize) -> f64 {
        self.costs[state][action]
    }
    fn for_each_successor(&self, state: usize, action: usize, visit: &mut dyn FnMut(usize, f64)) {
        for &(sp, p) in &self.transitions[state][action] {
            visit(sp, p);
        }
    }
}
