//! Independence verification: product MDPs built from independent
//! factors, policy-concatenation checks against brute-force global
//! solves, additive-value checks, and policy/next-state comparison
//! reports.
//!
//! A product MDP has joint states `S_1 x ... x S_n`, joint actions
//! `A_1 x ... x A_n`, additive cost and multiplicative transitions.
//! Solving it globally is the oracle side of the check; the factored
//! Bellman backup contracts one factor at a time, which keeps the oracle
//! exact while avoiding enumeration of the full joint successor set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, TabularMdp};
use crate::model::MdpModel;
use crate::rng::SimRng;
use crate::solver::{value_iteration, Policy, SolveOptions, SolveReport, ValueFunction};
use crate::state::{MissionState, StateIndex};

pub use crate::decompose::complexity_reduction;

/// Hard cap on brute-force product solves.
pub const DEFAULT_PRODUCT_CAP: usize = 100_000;

/// Product of independent factor MDPs with a shared discount.
pub struct ProductMdp {
    factors: Vec<TabularMdp>,
    state_strides: Vec<usize>,
    action_strides: Vec<usize>,
    num_states: usize,
    num_actions: usize,
    discount: f64,
}

fn strides_of(sizes: &[usize]) -> (Vec<usize>, usize) {
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let total = sizes.iter().product::<usize>();
    (strides, total)
}

impl ProductMdp {
    /// Build the product of `factors`. All factors must share the same
    /// discount factor.
    pub fn new(factors: Vec<TabularMdp>) -> Result<ProductMdp> {
        if factors.is_empty() {
            return Err(Error::contract("a product needs at least one factor"));
        }
        let discount = factors[0].discount();
        for (i, f) in factors.iter().enumerate() {
            if (f.discount() - discount).abs() > 0.0 {
                return Err(Error::contract(format!(
                    "factor {i} has discount {}, factor 0 has {discount}",
                    f.discount()
                )));
            }
        }
        let (state_strides, num_states) =
            strides_of(&factors.iter().map(|f| f.num_states()).collect::<Vec<_>>());
        let (action_strides, num_actions) =
            strides_of(&factors.iter().map(|f| f.num_actions()).collect::<Vec<_>>());
        Ok(ProductMdp {
            factors,
            state_strides,
            action_strides,
            num_states,
            num_actions,
            discount,
        })
    }

    pub fn factors(&self) -> &[TabularMdp] {
        &self.factors
    }

    /// Per-factor components of a joint state index.
    pub fn split_state(&self, state: usize) -> Vec<usize> {
        let mut rem = state;
        self.state_strides
            .iter()
            .map(|&w| {
                let d = rem / w;
                rem %= w;
                d
            })
            .collect()
    }

    /// Per-factor components of a joint action index.
    pub fn split_action(&self, action: usize) -> Vec<usize> {
        let mut rem = action;
        self.action_strides
            .iter()
            .map(|&w| {
                let d = rem / w;
                rem %= w;
                d
            })
            .collect()
    }

    /// Joint action index from per-factor actions.
    pub fn join_action(&self, parts: &[usize]) -> usize {
        parts
            .iter()
            .zip(&self.action_strides)
            .map(|(&a, &w)| a * w)
            .sum()
    }

    /// Value iteration specialized to the product structure: the joint
    /// Bellman backup is evaluated by contracting one factor kernel at a
    /// time, which is exact and far cheaper than enumerating the joint
    /// successor set. Synchronous sweeps, zero initialization, sup-norm
    /// stop — identical semantics to the generic solver.
    pub fn solve_factored(&self, tolerance: f64, max_sweeps: usize) -> (ValueFunction, SolveReport) {
        let started = std::time::Instant::now();
        let n = self.num_states;
        let mut v = vec![0.0f64; n];
        let mut v_next = vec![0.0f64; n];
        let mut history = Vec::new();
        let mut converged = false;
        let mut scratch = ContractionScratch::new(self);

        for _ in 0..max_sweeps {
            let mut residual = 0.0f64;
            scratch.backup(self, &v, |s, q, _| {
                residual = residual.max((q - v[s]).abs());
                v_next[s] = q;
            });
            history.push(residual);
            std::mem::swap(&mut v, &mut v_next);
            if residual < tolerance {
                converged = true;
                break;
            }
        }
        (
            ValueFunction { values: v },
            SolveReport {
                iterations: history.len(),
                residual_history: history,
                wall_time_seconds: started.elapsed().as_secs_f64(),
                converged,
            },
        )
    }

    /// Greedy policy via the factored backup.
    pub fn extract_policy_factored(&self, v: &ValueFunction) -> Policy {
        let mut actions = vec![0u16; self.num_states];
        let mut scratch = ContractionScratch::new(self);
        scratch.backup(self, &v.values, |s, _, a| {
            actions[s] = a as u16;
        });
        Policy { actions }
    }
}

/// Scratch buffers for the factored Bellman backup: expectation tensors
/// per joint-action prefix, reused across sweeps.
struct ContractionScratch {
    /// `expect[a]` holds `E[V(s') | s, a]` for every joint state `s`.
    expect: Vec<Vec<f64>>,
    buffers: Vec<Vec<f64>>,
}

impl ContractionScratch {
    fn new(product: &ProductMdp) -> ContractionScratch {
        ContractionScratch {
            expect: vec![vec![0.0; product.num_states]; product.num_actions],
            buffers: Vec::new(),
        }
    }

    /// Compute, for every state, the minimum joint-action backup and feed
    /// `(state, q, argmin)` to `emit`. Ties resolve to the lowest joint
    /// action index.
    fn backup(
        &mut self,
        product: &ProductMdp,
        v: &[f64],
        mut emit: impl FnMut(usize, f64, usize),
    ) {
        // Stage 1: expectation tensors, contracting one factor per level.
        self.contract_level(product, v, 0, &[]);

        // Stage 2: per-state minimum over joint actions. Action splits
        // are precomputed; state digits advance odometer-style.
        let n = product.num_states;
        let gamma = product.discount;
        let n_factors = product.factors.len();
        let action_parts: Vec<Vec<usize>> = (0..product.num_actions)
            .map(|a| product.split_action(a))
            .collect();
        let sizes: Vec<usize> = product.factors.iter().map(|f| f.num_states()).collect();
        let mut digits = vec![0usize; n_factors];
        for s in 0..n {
            let mut best = f64::INFINITY;
            let mut arg = 0usize;
            for (a, parts) in action_parts.iter().enumerate() {
                let mut cost = 0.0;
                for i in 0..n_factors {
                    cost += product.factors[i].costs[digits[i]][parts[i]];
                }
                let q = cost + gamma * self.expect[a][s];
                if q < best {
                    best = q;
                    arg = a;
                }
            }
            emit(s, best, arg);
            for pos in (0..n_factors).rev() {
                digits[pos] += 1;
                if digits[pos] < sizes[pos] {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    /// Recursive contraction: at `level` we still need to contract factor
    /// `level`; `prefix_actions` fixes the actions of factors `0..level`.
    /// Writes fully contracted tensors into `self.expect`.
    fn contract_level(
        &mut self,
        product: &ProductMdp,
        input: &[f64],
        level: usize,
        prefix_actions: &[usize],
    ) {
        if level == product.factors.len() {
            let a = product.join_action(prefix_actions);
            self.expect[a].copy_from_slice(input);
            return;
        }
        let factor = &product.factors[level];
        let stride = product.state_strides[level];
        let size = factor.num_states();
        let n = product.num_states;
        let mut out = if let Some(buf) = self.buffers.pop() {
            buf
        } else {
            vec![0.0; n]
        };
        for a in 0..factor.num_actions() {
            out.iter_mut().for_each(|x| *x = 0.0);
            // out[.., s_level, ..] = sum_x P(x | s_level, a) input[.., x, ..]
            for src in 0..size {
                for &(dst, p) in &factor.transitions[src][a] {
                    // add p * input slice at digit dst into out slice at digit src
                    add_axis_slice(&mut out, input, n, stride, size, src, dst, p);
                }
            }
            let mut next_prefix = prefix_actions.to_vec();
            next_prefix.push(a);
            self.contract_level(product, &out, level + 1, &next_prefix);
        }
        self.buffers.push(out);
    }
}

/// `out[.., src, ..] += p * input[.., dst, ..]` along the axis with the
/// given stride and size.
fn add_axis_slice(
    out: &mut [f64],
    input: &[f64],
    total: usize,
    stride: usize,
    size: usize,
    src: usize,
    dst: usize,
    p: f64,
) {
    let block = stride * size;
    let mut base = 0usize;
    while base < total {
        let o = base + src * stride;
        let i = base + dst * stride;
        for k in 0..stride {
            out[o + k] += p * input[i + k];
        }
        base += block;
    }
}

impl Mdp for ProductMdp {
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
        let s = self.split_state(state);
        let a = self.split_action(action);
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.cost(s[i], a[i]))
            .sum()
    }

    fn for_each_successor(&self, state: usize, action: usize, visit: &mut dyn FnMut(usize, f64)) {
        let s = self.split_state(state);
        let a = self.split_action(action);
        // Depth-first product over per-factor successor lists.
        fn recurse(
            product: &ProductMdp,
            s: &[usize],
            a: &[usize],
            level: usize,
            idx: usize,
            prob: f64,
            visit: &mut dyn FnMut(usize, f64),
        ) {
            if level == product.factors.len() {
                visit(idx, prob);
                return;
            }
            let f = &product.factors[level];
            for &(dst, p) in &f.transitions[s[level]][a[level]] {
                recurse(
                    product,
                    s,
                    a,
                    level + 1,
                    idx + dst * product.state_strides[level],
                    prob * p,
                    visit,
                );
            }
        }
        recurse(self, &s, &a, 0, 0, 1.0, visit);
    }
}

/// Build a product MDP from independent factors (shared discount).
pub fn build_product_mdp(factors: Vec<TabularMdp>) -> Result<ProductMdp> {
    ProductMdp::new(factors)
}

/// Generate a random independence-compliant product: `n_factors` factors with
/// 2..=20 states and 2..=4 actions each, uniform costs in [0, 10],
/// Dirichlet transition rows, discount 0.9.
pub fn random_product(n_factors: usize, rng: &mut SimRng) -> ProductMdp {
    let factors: Vec<TabularMdp> = (0..n_factors)
        .map(|_| {
            let states = rng.gen_range(2, 21);
            let actions = rng.gen_range(2, 5);
            TabularMdp::random(states, actions, 0.9, 10.0, rng)
        })
        .collect();
    ProductMdp::new(factors).expect("same discount by construction")
}

/// Per-state agreement statistics between two policies.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyComparisonReport {
    pub total_states: usize,
    pub matching: usize,
    pub mismatching: usize,
    pub match_percent: f64,
    /// Tie tolerance used to count equal-value actions as matches, if any.
    pub tie_tolerance: Option<f64>,
    /// Raw action-id agreement before tie forgiveness.
    pub exact_matching: usize,
    /// Up to 100 mismatching `(state, action_a, action_b)` triples.
    pub mismatch_samples: Vec<(StateIndex, u16, u16)>,
}

impl PolicyComparisonReport {
    fn assemble(
        total: usize,
        exact: usize,
        tie_forgiven: usize,
        tie_tolerance: Option<f64>,
        samples: Vec<(StateIndex, u16, u16)>,
    ) -> PolicyComparisonReport {
        let matching = exact + tie_forgiven;
        PolicyComparisonReport {
            total_states: total,
            matching,
            mismatching: total - matching,
            match_percent: 100.0 * matching as f64 / total as f64,
            tie_tolerance,
            exact_matching: exact,
            mismatch_samples: samples,
        }
    }
}

const MISMATCH_SAMPLE_CAP: usize = 100;

/// Compare two policies over a model state-by-state. With a value
/// function given, a differing pair still counts as a match when both
/// actions attain the same Bellman backup within `tie_tolerance`.
pub fn compare_policies<M: Mdp>(
    a: &Policy,
    b: &Policy,
    model: &M,
    tie: Option<(&ValueFunction, f64)>,
) -> Result<PolicyComparisonReport> {
    if a.actions.len() != b.actions.len() || a.actions.len() != model.num_states() {
        return Err(Error::contract(format!(
            "policy layouts disagree: {} vs {} actions over {} states",
            a.actions.len(),
            b.actions.len(),
            model.num_states()
        )));
    }
    let mut exact = 0usize;
    let mut forgiven = 0usize;
    let mut samples = Vec::new();
    for s in 0..model.num_states() {
        let (aa, ab) = (a.action(s), b.action(s));
        if aa == ab {
            exact += 1;
            continue;
        }
        if let Some((v, tol)) = tie {
            let qa = model.q_value(s, aa, &v.values);
            let qb = model.q_value(s, ab, &v.values);
            if (qa - qb).abs() <= tol {
                forgiven += 1;
                continue;
            }
        }
        if samples.len() < MISMATCH_SAMPLE_CAP {
            samples.push((s, aa as u16, ab as u16));
        }
    }
    Ok(PolicyComparisonReport::assemble(
        model.num_states(),
        exact,
        forgiven,
        tie.map(|(_, t)| t),
        samples,
    ))
}

/// Everything produced by a policy-equivalence verification run.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub agreement: PolicyComparisonReport,
    pub additive_value_deviation: f64,
    pub global_sup_norm: f64,
    pub factor_state_counts: Vec<usize>,
    pub factor_action_counts: Vec<usize>,
}

/// Solve each factor independently, concatenate the local policies, solve
/// the product globally (the brute-force oracle), and report tie-aware
/// agreement between the concatenation and the global optimum.
pub fn verify_policy_equivalence(
    product: &ProductMdp,
    tolerance: f64,
) -> Result<EquivalenceReport> {
    verify_policy_equivalence_capped(product, tolerance, DEFAULT_PRODUCT_CAP)
}

pub fn verify_policy_equivalence_capped(
    product: &ProductMdp,
    tolerance: f64,
    cap: usize,
) -> Result<EquivalenceReport> {
    if product.num_states() > cap {
        return Err(Error::capacity(format!(
            "product has {} states, brute-force cap is {cap}",
            product.num_states()
        )));
    }
    let vi_tol = 1e-10;

    // Local side: independent factor solves and their concatenation.
    let mut local_policies = Vec::new();
    let mut local_values = Vec::new();
    for f in product.factors() {
        let (v, report) = value_iteration(f, SolveOptions::with_tolerance(vi_tol));
        if !report.converged {
            return Err(Error::contract("factor solve did not converge"));
        }
        local_policies.push(crate::solver::extract_policy(f, &v));
        local_values.push(v);
    }
    let concatenated = {
        let mut actions = vec![0u16; product.num_states()];
        for (s, slot) in actions.iter_mut().enumerate() {
            let parts = product.split_state(s);
            let a_parts: Vec<usize> = parts
                .iter()
                .zip(&local_policies)
                .map(|(&si, p)| p.action(si))
                .collect();
            *slot = product.join_action(&a_parts) as u16;
        }
        Policy { actions }
    };

    // Global side: the oracle solve over the joint space.
    let (v_global, report) = product.solve_factored(vi_tol, 100_000);
    if !report.converged {
        return Err(Error::contract("global product solve did not converge"));
    }
    let global = product.extract_policy_factored(&v_global);

    let agreement = compare_policies(&concatenated, &global, product, Some((&v_global, tolerance)))?;

    // Additive value: V*(s) vs sum of factor values.
    let mut deviation = 0.0f64;
    for s in 0..product.num_states() {
        let parts = product.split_state(s);
        let sum: f64 = parts
            .iter()
            .zip(&local_values)
            .map(|(&si, v)| v.values[si])
            .sum();
        deviation = deviation.max((v_global.values[s] - sum).abs());
    }

    Ok(EquivalenceReport {
        agreement,
        additive_value_deviation: deviation,
        global_sup_norm: v_global.sup_norm(),
        factor_state_counts: product.factors().iter().map(|f| f.num_states()).collect(),
        factor_action_counts: product.factors().iter().map(|f| f.num_actions()).collect(),
    })
}

/// Max absolute deviation between the product's optimal value and the sum
/// of its factor values.
pub fn verify_additive_value(product: &ProductMdp, cap: usize) -> Result<f64> {
    let report = verify_policy_equivalence_capped(product, 1e-9, cap)?;
    Ok(report.additive_value_deviation)
}

/// Successor-distribution comparison of two policies at one state.
#[derive(Debug, Clone, Serialize)]
pub struct NextStateDiff {
    pub state: MissionState,
    /// 1-based action ids as written in policy files.
    pub action_a: u32,
    pub action_b: u32,
    pub successors_a: Vec<(StateIndex, f64)>,
    pub successors_b: Vec<(StateIndex, f64)>,
    pub identical: bool,
}

/// Evaluate both policies at `state` and compare the induced successor
/// distributions; identical iff the actions agree and every probability
/// matches within 1e-9.
pub fn compare_next_state(
    state: &MissionState,
    policy_a: &Policy,
    policy_b: &Policy,
    model: &MdpModel,
) -> Result<NextStateDiff> {
    let idx = crate::state::encode_state(state, model.layout())?;
    let a = policy_a.action(idx);
    let b = policy_b.action(idx);
    let mut succ_a = model.successors(idx, a);
    let mut succ_b = model.successors(idx, b);
    succ_a.sort_by_key(|&(s, _)| s);
    succ_b.sort_by_key(|&(s, _)| s);
    let identical = a == b
        && succ_a.len() == succ_b.len()
        && succ_a
            .iter()
            .zip(&succ_b)
            .all(|(&(sa, pa), &(sb, pb))| sa == sb && (pa - pb).abs() <= 1e-9);
    Ok(NextStateDiff {
        state: state.clone(),
        action_a: a as u32 + 1,
        action_b: b as u32 + 1,
        successors_a: succ_a,
        successors_b: succ_b,
        identical,
    })
}
