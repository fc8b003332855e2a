//! Priority-based recombination: rank sub-MDPs, solve them offline, queue
//! agents, and synthesize a global policy from the local ones.
//!
//! Two conflict-resolution modes exist. `Priority` executes the local
//! action of the highest-priority eligible sub-MDP. `BestValue` scores
//! each sub-MDP's recommended global action by summing the return-form
//! state-action values that every sub-MDP assigns to its own share of
//! that action, then executes the best-scoring candidate — the additive
//! evaluation mirrors how the global value function splits across
//! independent sub-problems, and it is the mode used for the
//! policy-agreement experiments.

use std::collections::BTreeMap;

use crate::decompose::{DecompositionPlan, Focus, SubMdp, SubModel};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::model::MdpModel;
use crate::solver::{value_iteration, Policy, SolveOptions, ValueFunction};
use crate::state::{MissionState, StateIndex, PRIORITY_LEVELS};

/// A global policy assembled from sub-MDP policies; indexed by global
/// state, storing 0-based action indices like [`Policy`].
pub type GlobalPolicy = Policy;

/// Weights of the priority score plus bookkeeping defaults.
#[derive(Debug, Clone)]
pub struct PriorityParams {
    /// Weight of the maximum attainable reward inside the sub-MDP.
    pub w_reward: f64,
    /// Weight of the urgency term (goal priority present).
    pub w_urgency: f64,
    /// Weight of the fault/threat penalty exposure term.
    pub w_risk: f64,
    /// Mission state whose priorities inform the urgency term, when known.
    pub anchor: Option<MissionState>,
    /// Completion threshold `C_min` copied onto fresh solutions.
    pub completion_threshold: f64,
}

impl Default for PriorityParams {
    fn default() -> Self {
        PriorityParams {
            w_reward: 1.0,
            w_urgency: 1.0,
            w_risk: 1.0,
            anchor: None,
            completion_threshold: f64::INFINITY,
        }
    }
}

/// Solved sub-MDP with its rank inputs and online progress state.
#[derive(Debug, Clone)]
pub struct SubSolution {
    pub sub_id: usize,
    pub policy: Policy,
    pub value: ValueFunction,
    /// Mean of `-V` over the sub's states: the expected return under a
    /// uniform start distribution.
    pub expected_return: f64,
    /// Priority score rho.
    pub priority: f64,
    /// Completion flag `C`; latches once progress reaches the threshold.
    pub completion: bool,
    /// Running mean `E` of realized per-epoch rewards.
    pub progress: f64,
    progress_samples: usize,
    pub completion_threshold: f64,
    /// Dense `Q[s * num_actions + a]` table of the sub, for scoring.
    q_table: Vec<f64>,
    num_actions: usize,
}

impl SubSolution {
    /// Return-form score `-Q(s, a)` of a local state-action pair.
    pub fn score(&self, local_state: usize, local_action: usize) -> f64 {
        -self.q_table[local_state * self.num_actions + local_action]
    }

    pub fn local_action(&self, local_state: usize) -> usize {
        self.policy.action(local_state)
    }

    /// Assemble a solution from precomputed parts — for loading stored
    /// solutions or building fixtures with pinned action values.
    pub fn from_parts(
        sub_id: usize,
        policy: Policy,
        value: ValueFunction,
        q_table: Vec<f64>,
        num_actions: usize,
        priority: f64,
    ) -> SubSolution {
        let n = value.len();
        assert_eq!(q_table.len(), n * num_actions, "q table shape");
        assert_eq!(policy.actions.len(), n, "policy shape");
        let expected_return = if n == 0 {
            0.0
        } else {
            -value.values.iter().sum::<f64>() / n as f64
        };
        SubSolution {
            sub_id,
            policy,
            value,
            expected_return,
            priority,
            completion: false,
            progress: 0.0,
            progress_samples: 0,
            completion_threshold: f64::INFINITY,
            q_table,
            num_actions,
        }
    }
}

/// Priority score of a candidate sub-MDP: weighted sum of its maximum
/// attainable reward, the goal priority present (from the anchor state
/// when given), and its mean fault/threat penalty exposure.
pub fn priority_score(sub: &SubMdp, params: &PriorityParams) -> f64 {
    // Goal subs carry their own single-goal config; subset subs see the
    // parent's. Either way the cost tables below are the mission's own.
    let config = match &sub.model {
        SubModel::Projected(m) => m.config(),
        SubModel::Restricted(r) => r.parent().config(),
    };
    let top = (PRIORITY_LEVELS - 1) as f64;
    let reward = config.goal_weights.iter().sum::<f64>() * top;

    let urgency = match (&params.anchor, &sub.focus) {
        (Some(anchor), Focus::Goal(j)) => anchor.goal_priorities[*j as usize - 1] as f64,
        (Some(anchor), _) => anchor
            .goal_priorities
            .iter()
            .map(|&g| g as f64)
            .fold(0.0, f64::max),
        (None, _) => top,
    };

    let modes: Vec<usize> = match &sub.focus {
        Focus::FaultMode(f) => vec![*f as usize - 1],
        _ => (0..config.layout.fault_count() as usize).collect(),
    };
    let fault_exposure = modes
        .iter()
        .map(|&f| (config.fault_penalties[f][0] + config.fault_penalties[f][1]) / 2.0)
        .sum::<f64>()
        / modes.len() as f64;
    let threat_exposure = config
        .threat_penalties
        .iter()
        .flat_map(|row| row.iter())
        .sum::<f64>()
        / config
            .threat_penalties
            .iter()
            .map(|r| r.len())
            .sum::<usize>() as f64;
    let risk = fault_exposure + threat_exposure;

    params.w_reward * reward + params.w_urgency * urgency + params.w_risk * risk
}

/// Solve every sub-MDP of the plan independently and return the solutions
/// sorted by descending priority (ties by ascending sub id). Errors when
/// any sub-solve fails to converge, naming the sub.
pub fn solve_all(
    plan: &DecompositionPlan,
    tolerance: f64,
    params: &PriorityParams,
) -> Result<Vec<SubSolution>> {
    let mut solutions = Vec::with_capacity(plan.sub_mdps.len());
    for sub in &plan.sub_mdps {
        solutions.push(solve_one(sub, tolerance, params)?);
    }
    sort_by_priority(&mut solutions);
    Ok(solutions)
}

fn solve_one(sub: &SubMdp, tolerance: f64, params: &PriorityParams) -> Result<SubSolution> {
    let mdp = sub.model.as_mdp();
    let opts = SolveOptions {
        tolerance,
        ..Default::default()
    };
    let (value, report) = match &sub.model {
        SubModel::Projected(m) => value_iteration(m, opts),
        SubModel::Restricted(r) => value_iteration(r, opts),
    };
    if !report.converged {
        return Err(Error::SubSolveDiverged {
            sub_id: sub.id,
            sweeps: report.iterations,
            residual: report.residual_history.last().copied().unwrap_or(f64::NAN),
        });
    }
    let policy = match &sub.model {
        SubModel::Projected(m) => crate::solver::extract_policy(m, &value),
        SubModel::Restricted(r) => crate::solver::extract_policy(r, &value),
    };
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let mut q_table = vec![0.0; n * na];
    for s in 0..n {
        for a in 0..na {
            q_table[s * na + a] = match &sub.model {
                SubModel::Projected(m) => m.q_value(s, a, &value.values),
                SubModel::Restricted(r) => r.q_value(s, a, &value.values),
            };
        }
    }
    let expected_return = -value.values.iter().sum::<f64>() / n as f64;
    let priority = priority_score(sub, params);
    Ok(SubSolution {
        sub_id: sub.id,
        policy,
        value,
        expected_return,
        priority,
        completion: false,
        progress: 0.0,
        progress_samples: 0,
        completion_threshold: params.completion_threshold,
        q_table,
        num_actions: na,
    })
}

fn sort_by_priority(solutions: &mut [SubSolution]) {
    solutions.sort_by(|a, b| {
        b.priority
            .partial_cmp(&a.priority)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.sub_id.cmp(&b.sub_id))
    });
}

/// Return-form scores of the goal-free background mission: the same
/// layout flown with every goal weight and range penalty zeroed, so its
/// value captures exactly the fault/threat penalty streams every goal
/// sub-MDP counts on top of its own goal terms.
///
/// When several goal sub-MDP scores are summed, those shared streams are
/// counted once per sub; subtracting the background `(n-1)` times leaves
/// each stream counted exactly once, which is what the global cost does.
#[derive(Debug, Clone)]
pub struct BackgroundScores {
    q_table: Vec<f64>,
    local_strides: Vec<usize>,
    num_actions: usize,
}

impl BackgroundScores {
    /// Local background state of predecoded parent digits: goal digits
    /// pinned to zero, everything shared kept.
    fn project_digits(&self, parent: &crate::state::StateLayout, digits: &[u32]) -> usize {
        let ls = &self.local_strides;
        digits[parent.fault_pos()] as usize * ls[0]
            + digits[parent.location_pos()] as usize * ls[3]
            + digits[parent.threat_pos()] as usize * ls[5]
            + digits[parent.mode_pos()] as usize * ls[6]
    }

    /// Return-form score of the background under an action's class.
    fn score(&self, local_state: usize, global_action_id: u32, goal_count: u32) -> f64 {
        let k = goal_count;
        let local_action = match global_action_id {
            a if a <= k + 1 => 0,             // normal flight
            a if a <= 2 * k + 2 => 2,         // agile flight
            a if a == 2 * k + 3 => 4,         // recharge
            _ => 5,                           // repair
        };
        -self.q_table[local_state * self.num_actions + local_action]
    }
}

/// Solve the goal-free background mission of a global model.
pub fn solve_background(model_global: &MdpModel, tolerance: f64) -> Result<BackgroundScores> {
    let parent = model_global.config();
    let mut cfg = parent.clone();
    cfg.layout = parent.layout.with_single_goal();
    cfg.goal_cells = vec![parent.goal_cells[0]];
    cfg.goal_weights = vec![0.0];
    cfg.range_penalties = vec![0.0];
    cfg.priority_kernels = vec![parent.priority_kernels[0].clone()];
    let bg = MdpModel::build_local(cfg)?;
    let (value, report) = value_iteration(&bg, SolveOptions::with_tolerance(tolerance));
    if !report.converged {
        return Err(Error::contract(
            "background mission did not converge within the sweep budget",
        ));
    }
    let n = bg.num_states();
    let na = bg.num_actions();
    let mut q_table = vec![0.0; n * na];
    for s in 0..n {
        for a in 0..na {
            q_table[s * na + a] = bg.q_value(s, a, &value.values);
        }
    }
    Ok(BackgroundScores {
        q_table,
        local_strides: bg.layout().strides().to_vec(),
        num_actions: na,
    })
}

/// Map a local (single-goal) action id onto the global action set for
/// goal `d`: `1 -> 1`, `2 -> 1+d`, `3 -> k+2`, `4 -> k+2+d`,
/// `5 -> 2k+3`, `6 -> 2k+4` — for the three-goal mission that is the
/// fixed `1, 1+d, 5, 5+d, 9, 10` table.
pub fn map_local_action(local_action: u32, goal_index: u32, goal_count: u32) -> Result<u32> {
    if !(1..=6).contains(&local_action) {
        return Err(Error::contract(format!(
            "local action {local_action} outside [1, 6]"
        )));
    }
    if !(1..=goal_count).contains(&goal_index) {
        return Err(Error::contract(format!(
            "goal index {goal_index} outside [1, {goal_count}]"
        )));
    }
    let k = goal_count;
    let d = goal_index;
    Ok(match local_action {
        1 => 1,
        2 => 1 + d,
        3 => k + 2,
        4 => k + 2 + d,
        5 => 2 * k + 3,
        _ => 2 * k + 4,
    })
}

/// Inverse direction: the local action sub-goal `d` experiences when the
/// global action executes. Commits to other goals look like holding (in
/// the matching navigation mode).
pub fn local_view_of_global(global_action: u32, goal_index: u32, goal_count: u32) -> u32 {
    let k = goal_count;
    let d = goal_index;
    match global_action {
        1 => 1,
        a if (2..=k + 1).contains(&a) => {
            if a == 1 + d {
                2
            } else {
                1
            }
        }
        a if a == k + 2 => 3,
        a if (k + 3..=2 * k + 2).contains(&a) => {
            if a == k + 2 + d {
                4
            } else {
                3
            }
        }
        a if a == 2 * k + 3 => 5,
        _ => 6,
    }
}

/// A mission agent with its current state and ranked queue memberships.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    pub state: MissionState,
    /// Sub ids this agent is queued for, in descending priority order.
    pub assigned_subs: Vec<usize>,
}

/// Queue each agent to every incomplete sub-MDP whose precondition subs
/// are all complete, scanning the ranked solutions in order. Returns the
/// per-sub agent queues and records the assignment on each agent.
pub fn assign_agents(
    agents: &mut [Agent],
    ranked: &[SubSolution],
    preconditions: &BTreeMap<usize, Vec<usize>>,
) -> BTreeMap<usize, Vec<usize>> {
    let complete: BTreeMap<usize, bool> =
        ranked.iter().map(|s| (s.sub_id, s.completion)).collect();
    let mut queues: BTreeMap<usize, Vec<usize>> =
        ranked.iter().map(|s| (s.sub_id, Vec::new())).collect();
    for agent in agents.iter_mut() {
        agent.assigned_subs.clear();
        for sol in ranked {
            if sol.completion {
                continue;
            }
            let gated = preconditions
                .get(&sol.sub_id)
                .map(|pres| pres.iter().any(|p| !complete.get(p).copied().unwrap_or(false)))
                .unwrap_or(false);
            if gated {
                continue;
            }
            queues.get_mut(&sol.sub_id).expect("queue exists").push(agent.id);
            agent.assigned_subs.push(sol.sub_id);
        }
    }
    queues
}

/// Feed realized per-epoch rewards into a solution's progress mean; the
/// completion flag latches once the mean reaches the threshold.
pub fn update_progress(solution: &mut SubSolution, realized_rewards: &[f64]) {
    for &r in realized_rewards {
        solution.progress_samples += 1;
        solution.progress += (r - solution.progress) / solution.progress_samples as f64;
    }
    if solution.progress >= solution.completion_threshold {
        solution.completion = true;
    }
}

/// Conflict-resolution mode of the meta-policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMode {
    /// Execute the highest-priority eligible sub-MDP's action.
    Priority,
    /// Execute the candidate action with the best summed return-form
    /// score across all eligible sub-MDPs.
    BestValue,
}

/// Pick the global action for one global state. Returns the 0-based
/// global action index and the sub id it came from.
///
/// Eligibility means: not complete, and the state belongs to the sub.
/// Errors when no sub is eligible (the mission is complete).
pub fn meta_policy_action(
    global_state: StateIndex,
    plan: &DecompositionPlan,
    solutions: &[SubSolution],
    model_global: &MdpModel,
    mode: MetaMode,
    background: Option<&BackgroundScores>,
) -> Result<(usize, usize)> {
    let k = model_global.layout().goal_count();
    let mut digits = vec![0u32; model_global.layout().digit_count()];
    model_global
        .layout()
        .digits_of_index(global_state, &mut digits);

    // Eligible (solution, sub, local state) triples in solution order.
    let mut eligible: Vec<(&SubSolution, &SubMdp, usize)> = Vec::new();
    for sol in solutions {
        if sol.completion {
            continue;
        }
        let sub = plan.sub(sol.sub_id);
        let local = match &sub.model {
            SubModel::Projected(_) => Some(sub.project_digits(&digits)),
            SubModel::Restricted(r) => r.rank_of(global_state),
        };
        if let Some(ls) = local {
            eligible.push((sol, sub, ls));
        }
    }
    if eligible.is_empty() {
        return Err(Error::contract(
            "no eligible sub-MDP for this state: mission complete",
        ));
    }

    match mode {
        MetaMode::Priority => {
            // Solutions are ranked; the first eligible is the max-rho one
            // (ties already resolved to the lowest sub id by the sort).
            let (sol, sub, local_state) = eligible[0];
            let global_action = globalize(sub, sol.local_action(local_state), k)?;
            Ok((global_action, sol.sub_id))
        }
        MetaMode::BestValue => {
            let goal_subs = eligible
                .iter()
                .filter(|(_, sub, _)| matches!(sub.focus, Focus::Goal(_)))
                .count();
            let bg_state = background
                .map(|bg| bg.project_digits(model_global.layout(), &digits));
            let mut best: Option<(f64, usize, usize)> = None;
            for &(sol, sub, local_state) in &eligible {
                let local_action = sol.local_action(local_state);
                let candidate = globalize(sub, local_action, k)?;
                let mut score = additive_score(candidate, &eligible, k)?;
                // Shared fault/threat streams appear in every goal sub's
                // score; keep them counted exactly once.
                if goal_subs > 1 {
                    if let (Some(bg), Some(bs)) = (background, bg_state) {
                        score -= (goal_subs - 1) as f64
                            * bg.score(bs, candidate as u32 + 1, k);
                    }
                }
                let better = match best {
                    None => true,
                    Some((bs, _, bid)) => score > bs || (score == bs && sol.sub_id < bid),
                };
                if better {
                    best = Some((score, candidate, sol.sub_id));
                }
            }
            let (_, action, sub_id) = best.expect("eligible set is non-empty");
            Ok((action, sub_id))
        }
    }
}

/// Summed return-form score of a global action across eligible subs.
fn additive_score(
    global_action_index: usize,
    eligible: &[(&SubSolution, &SubMdp, usize)],
    goal_count: u32,
) -> Result<f64> {
    let global_id = global_action_index as u32 + 1;
    let mut score = 0.0;
    for &(sol, sub, local_state) in eligible {
        let local_action = match &sub.focus {
            Focus::Goal(d) => local_view_of_global(global_id, *d, goal_count) as usize - 1,
            _ => global_action_index,
        };
        score += sol.score(local_state, local_action);
    }
    Ok(score)
}

/// Map a sub's local action index to the global action index.
fn globalize(sub: &SubMdp, local_action: usize, goal_count: u32) -> Result<usize> {
    match &sub.focus {
        Focus::Goal(d) => {
            let id = map_local_action(local_action as u32 + 1, *d, goal_count)?;
            Ok(id as usize - 1)
        }
        // Subset sub-MDPs keep the global action set.
        _ => Ok(local_action),
    }
}

/// Assemble the combined global policy: the meta-policy evaluated at
/// every global state with every sub eligible. In best-value mode the
/// background correction is solved once and shared across states.
pub fn build_combined_policy(
    plan: &DecompositionPlan,
    solutions: &[SubSolution],
    model_global: &MdpModel,
    mode: MetaMode,
) -> Result<GlobalPolicy> {
    let goal_subs = plan
        .sub_mdps
        .iter()
        .filter(|s| matches!(s.focus, Focus::Goal(_)))
        .count();
    let background = if mode == MetaMode::BestValue && goal_subs > 1 {
        Some(solve_background(model_global, 1e-9)?)
    } else {
        None
    };
    build_combined_policy_with(plan, solutions, model_global, mode, background.as_ref())
}

/// [`build_combined_policy`] with a caller-provided background solution.
pub fn build_combined_policy_with(
    plan: &DecompositionPlan,
    solutions: &[SubSolution],
    model_global: &MdpModel,
    mode: MetaMode,
    background: Option<&BackgroundScores>,
) -> Result<GlobalPolicy> {
    let n = model_global.num_states();
    let mut actions = vec![0u16; n];
    for (s, slot) in actions.iter_mut().enumerate() {
        let (a, _) = meta_policy_action(s, plan, solutions, model_global, mode, background)?;
        *slot = a as u16;
    }
    Ok(Policy { actions })
}

/// Outcome of a replan pass: which subs were re-solved.
#[derive(Debug, Clone)]
pub struct ReplanReport {
    pub resolved_ids: Vec<usize>,
}

/// Re-solve only the changed subs, reuse every other solution unchanged,
/// and re-rank. Solutions are matched to subs by id.
pub fn replan(
    plan: &DecompositionPlan,
    solutions: &mut Vec<SubSolution>,
    changed_subs: &[usize],
    tolerance: f64,
    params: &PriorityParams,
) -> Result<ReplanReport> {
    let mut resolved = Vec::new();
    for &id in changed_subs {
        let sub = plan
            .sub_mdps
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::contract(format!("changed sub {id} is not in the plan")))?;
        let fresh = solve_one(sub, tolerance, params)?;
        match solutions.iter_mut().find(|s| s.sub_id == id) {
            Some(slot) => *slot = fresh,
            None => solutions.push(fresh),
        }
        resolved.push(id);
    }
    sort_by_priority(solutions);
    Ok(ReplanReport {
        resolved_ids: resolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::decompose::{decompose, Criterion, ScoreWeights};

    fn tiny_two_goal_model() -> MdpModel {
        use crate::config::{DistanceMetric, FaultKernels, GridDims, RangeDynamics};
        use crate::state::StateLayout;
        let layout = StateLayout::new(2, 2, 4, 2, 2).unwrap();
        let idk = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        };
        MdpModel::build(ModelConfig {
            layout,
            grid: GridDims { rows: 2, cols: 2 },
            goal_cells: vec![3, 2],
            base_cell: 0,
            discount: 0.9,
            goal_weights: vec![10.0, 5.0],
            range_penalties: vec![15.0, 15.0],
            fault_penalties: vec![[0.0, 0.0], [4.0, 4.0]],
            threat_penalties: vec![vec![0.0, 5.0], vec![40.0, 10.0]],
            distance_metric: DistanceMetric::Manhattan,
            distance_scale: 0.0,
            fault_kernel: FaultKernels::uniform(idk(2)),
            priority_kernels: vec![idk(3); 2],
            threat_kernel: idk(2),
            range_dynamics: RangeDynamics::StaticUntilRecharge,
        })
        .unwrap()
    }

    proptest::proptest! {
        #[test]
        fn mapping_total_and_invertible(
            k in 1u32..8,
            d_seed in proptest::prelude::any::<u32>(),
            local in 1u32..7,
        ) {
            let d = 1 + d_seed % k;
            let global = map_local_action(local, d, k).unwrap();
            proptest::prop_assert!((1..=2 * k + 4).contains(&global));
            proptest::prop_assert_eq!(local_view_of_global(global, d, k), local);
        }
    }

    #[test]
    fn action_mapping_matches_fixed_table() {
        // Exhaustive (local, d) grid for the three-goal mission.
        let expect = |local: u32, d: u32| match local {
            1 => 1,
            2 => 1 + d,
            3 => 5,
            4 => 5 + d,
            5 => 9,
            _ => 10,
        };
        for d in 1..=3u32 {
            for local in 1..=6u32 {
                assert_eq!(map_local_action(local, d, 3).unwrap(), expect(local, d));
            }
        }
        assert_eq!(map_local_action(2, 2, 3).unwrap(), 3);
        assert_eq!(map_local_action(4, 3, 3).unwrap(), 8);
        assert_eq!(map_local_action(1, 2, 3).unwrap(), 1);
        assert_eq!(map_local_action(5, 1, 3).unwrap(), 9);
        assert_eq!(map_local_action(6, 3, 3).unwrap(), 10);
    }

    #[test]
    fn action_mapping_rejects_out_of_range() {
        assert!(map_local_action(0, 1, 3).is_err());
        assert!(map_local_action(7, 1, 3).is_err());
        assert!(map_local_action(2, 0, 3).is_err());
        assert!(map_local_action(2, 4, 3).is_err());
    }

    #[test]
    fn mapping_is_injective_per_goal() {
        for d in 1..=3u32 {
            let mut seen = std::collections::BTreeSet::new();
            for local in 1..=6u32 {
                assert!(seen.insert(map_local_action(local, d, 3).unwrap()));
            }
        }
    }

    #[test]
    fn local_view_inverts_the_mapping() {
        for k in 1..=4u32 {
            for d in 1..=k {
                for local in 1..=6u32 {
                    let global = map_local_action(local, d, k).unwrap();
                    assert_eq!(local_view_of_global(global, d, k), local);
                }
            }
        }
        // A commit to another goal looks like holding in the same mode.
        assert_eq!(local_view_of_global(3, 1, 3), 1); // commit g2 normal -> nc
        assert_eq!(local_view_of_global(7, 1, 3), 3); // commit g2 agile -> nc agile
    }

    #[test]
    fn solve_all_ranks_by_priority() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        assert_eq!(sols.len(), 2);
        // Goal 1 carries the higher weight -> higher rho -> first.
        assert_eq!(sols[0].sub_id, 0);
        assert!(sols[0].priority > sols[1].priority);
        for s in &sols {
            assert_eq!(s.value.len(), plan.sub(s.sub_id).model.num_states());
        }
    }

    #[test]
    fn equal_subs_tie_break_by_sub_id() {
        let mut cfg = ModelConfig::paper_three_goal();
        cfg.goal_weights = vec![10.0, 10.0, 10.0];
        let model = MdpModel::build(cfg).unwrap();
        let plan = decompose(&model, Criterion::Goal, 5_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-6, &PriorityParams::default()).unwrap();
        let ids: Vec<usize> = sols.iter().map(|s| s.sub_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(sols[0].priority, sols[1].priority);
    }

    #[test]
    fn zero_weights_zero_priority() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let params = PriorityParams {
            w_reward: 0.0,
            w_urgency: 0.0,
            w_risk: 0.0,
            ..Default::default()
        };
        for sub in &plan.sub_mdps {
            assert_eq!(priority_score(sub, &params), 0.0);
        }
    }

    #[test]
    fn urgency_separates_anchored_priorities() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let mut anchor = crate::state::MissionState::minimal(model.layout());
        anchor.goal_priorities = vec![2, 0];
        let params = PriorityParams {
            w_reward: 0.0,
            w_urgency: 1.0,
            w_risk: 0.0,
            anchor: Some(anchor),
            ..Default::default()
        };
        let hi = priority_score(&plan.sub_mdps[0], &params);
        let lo = priority_score(&plan.sub_mdps[1], &params);
        assert!(hi > lo, "{hi} vs {lo}");
    }

    #[test]
    fn agents_queue_to_every_open_sub() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        let mut agents = vec![Agent {
            id: 0,
            state: crate::state::MissionState::minimal(model.layout()),
            assigned_subs: Vec::new(),
        }];
        let queues = assign_agents(&mut agents, &sols, &BTreeMap::new());
        assert_eq!(queues[&0], vec![0]);
        assert_eq!(queues[&1], vec![0]);
        assert_eq!(agents[0].assigned_subs.len(), 2);
    }

    #[test]
    fn unmet_precondition_gates_the_queue() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        let mut agents = vec![Agent {
            id: 0,
            state: crate::state::MissionState::minimal(model.layout()),
            assigned_subs: Vec::new(),
        }];
        // Sub 1 requires sub 0 complete; nothing is complete yet.
        let mut pre = BTreeMap::new();
        pre.insert(1usize, vec![0usize]);
        let queues = assign_agents(&mut agents, &sols, &pre);
        assert_eq!(queues[&0], vec![0]);
        assert!(queues[&1].is_empty());
    }

    #[test]
    fn met_precondition_opens_the_queue() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let mut sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        // Mark sub 0 complete (threshold 0 latches immediately).
        for s in sols.iter_mut() {
            if s.sub_id == 0 {
                s.completion_threshold = 0.0;
                update_progress(s, &[0.0]);
            }
        }
        let mut agents = vec![Agent {
            id: 7,
            state: crate::state::MissionState::minimal(model.layout()),
            assigned_subs: Vec::new(),
        }];
        let mut pre = BTreeMap::new();
        pre.insert(1usize, vec![0usize]);
        let queues = assign_agents(&mut agents, &sols, &pre);
        assert!(queues[&0].is_empty(), "complete subs take no agents");
        assert_eq!(queues[&1], vec![7]);
    }

    #[test]
    fn progress_running_mean_and_latch() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let mut sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        let s = &mut sols[0];
        s.completion_threshold = 1.0;
        update_progress(s, &[1.0, 1.0, 1.0]);
        assert_eq!(s.progress, 1.0);
        assert!(s.completion, "mean 1.0 reaches threshold 1.0");
        // Later bad rewards never clear the flag.
        update_progress(s, &[-10.0]);
        assert!(s.completion);
        assert!(s.progress < 1.0);
    }

    #[test]
    fn zero_threshold_completes_on_first_update() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let mut sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        sols[0].completion_threshold = 0.0;
        update_progress(&mut sols[0], &[0.5]);
        assert!(sols[0].completion);
    }

    #[test]
    fn replan_resolves_only_changed_subs() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let params = PriorityParams::default();
        let mut sols = solve_all(&plan, 1e-8, &params).unwrap();
        let before: Vec<Vec<f64>> = sols.iter().map(|s| s.value.values.clone()).collect();
        let report = replan(&plan, &mut sols, &[1], 1e-8, &params).unwrap();
        assert_eq!(report.resolved_ids, vec![1]);
        // Unchanged sub's numbers are bit-identical.
        let after0 = &sols.iter().find(|s| s.sub_id == 0).unwrap().value.values;
        assert_eq!(*after0, before[if sols[0].sub_id == 0 { 0 } else { 0 }]);
        // The list stays ranked after the re-score.
        for w in sols.windows(2) {
            assert!(w[0].priority >= w[1].priority);
        }
    }

    #[test]
    fn empty_change_set_is_a_no_op() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let params = PriorityParams::default();
        let mut sols = solve_all(&plan, 1e-8, &params).unwrap();
        let before: Vec<Vec<f64>> = sols.iter().map(|s| s.value.values.clone()).collect();
        let report = replan(&plan, &mut sols, &[], 1e-8, &params).unwrap();
        assert!(report.resolved_ids.is_empty());
        let after: Vec<Vec<f64>> = sols.iter().map(|s| s.value.values.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn single_eligible_sub_maps_through_table() {
        // One-goal plan: local recommendation 2 (commit) -> global 2 (d=1).
        let model = MdpModel::build(ModelConfig::paper_single_goal()).unwrap();
        let plan = decompose(&model, Criterion::Goal, 5_000, ScoreWeights::default(), 0.0)
            .unwrap();
        assert_eq!(plan.sub_mdps.len(), 1);
        let sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        // Find a state whose local policy commits in normal mode.
        let mut picked = None;
        for s in 0..model.num_states() {
            let local = plan.sub(0).project(s).unwrap();
            if sols[0].local_action(local) == 1 {
                picked = Some(s);
                break;
            }
        }
        let s = picked.expect("some state commits");
        let (a, sub_id) =
            meta_policy_action(s, &plan, &sols, &model, MetaMode::Priority, None).unwrap();
        assert_eq!(sub_id, 0);
        assert_eq!(a, 1); // 0-based index of global action id 2
    }

    #[test]
    fn priority_mode_always_picks_top_ranked_sub() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        let top = sols[0].sub_id;
        let mut rng = crate::rng::SimRng::new(17);
        for _ in 0..200 {
            let s = rng.gen_range(0, model.num_states());
            let (_, sub_id) =
                meta_policy_action(s, &plan, &sols, &model, MetaMode::Priority, None).unwrap();
            assert_eq!(sub_id, top);
        }
    }

    #[test]
    fn all_complete_means_mission_complete() {
        let model = tiny_two_goal_model();
        let plan = decompose(&model, Criterion::Goal, 10_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let mut sols = solve_all(&plan, 1e-8, &PriorityParams::default()).unwrap();
        for s in sols.iter_mut() {
            s.completion_threshold = 0.0;
            update_progress(s, &[1.0]);
        }
        assert!(matches!(
            meta_policy_action(0, &plan, &sols, &model, MetaMode::BestValue, None),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn best_value_picks_the_top_scoring_candidate() {
        // Pinned action values over a real three-goal plan: subs 1 and 3
        // recommend agile commits but their own tables price committing
        // badly; sub 2 recommends holding in agile mode and scores best.
        // The meta-policy must choose sub 2 and map local 3 to global 5.
        let model = MdpModel::build(ModelConfig::paper_three_goal()).unwrap();
        let plan = decompose(&model, Criterion::Goal, 5_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let n = 4_608usize;
        let build = |sub_id: usize, local_action: usize, q_row: [f64; 6], rho: f64| {
            let mut q = vec![0.0; n * 6];
            for s in 0..n {
                q[s * 6..s * 6 + 6].copy_from_slice(&q_row);
            }
            SubSolution::from_parts(
                sub_id,
                Policy {
                    actions: vec![local_action as u16; n],
                },
                ValueFunction::zeros(n),
                q,
                6,
                rho,
            )
        };
        // Local actions (4, 3, 4) as indices (3, 2, 3).
        let sols = vec![
            build(1, 2, [50.0, 50.0, 0.5, 50.0, 50.0, 50.0], 0.9),
            build(2, 3, [50.0, 50.0, 1.0, 9.0, 50.0, 50.0], 0.5),
            build(0, 3, [50.0, 50.0, 1.0, 10.0, 50.0, 50.0], 0.3),
        ];
        let (action, chosen) =
            meta_policy_action(0, &plan, &sols, &model, MetaMode::BestValue, None).unwrap();
        assert_eq!(chosen, 1, "sub 2 (id 1) holds the best joint score");
        assert_eq!(action + 1, 5, "local 3 maps to global 5");

        // Two subs with identical scores: the lower sub id wins.
        let tied = vec![
            build(0, 2, [50.0, 50.0, 1.0, 50.0, 50.0, 50.0], 0.5),
            build(1, 2, [50.0, 50.0, 1.0, 50.0, 50.0, 50.0], 0.5),
            build(2, 2, [50.0, 50.0, 1.0, 50.0, 50.0, 50.0], 0.5),
        ];
        let (_, chosen) =
            meta_policy_action(0, &plan, &tied, &model, MetaMode::BestValue, None).unwrap();
        assert_eq!(chosen, 0);
    }

    #[test]
    fn degenerate_single_goal_plan_reproduces_global_policy() {
        // For a single-goal global model with zero movement cost the only
        // goal sub IS the global model, so the combined policy must equal
        // the globally optimal one everywhere.
        let model = MdpModel::build(ModelConfig::paper_single_goal()).unwrap();
        let plan = decompose(&model, Criterion::Goal, 5_000, ScoreWeights::default(), 0.0)
            .unwrap();
        let sols = solve_all(&plan, 1e-9, &PriorityParams::default()).unwrap();
        let combined =
            build_combined_policy(&plan, &sols, &model, MetaMode::BestValue).unwrap();
        let (v, _) = value_iteration(&model, SolveOptions::with_tolerance(1e-9));
        let global = crate::solver::extract_policy(&model, &v);
        let mismatches = combined
            .actions
            .iter()
            .zip(&global.actions)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(mismatches, 0);
    }
}
