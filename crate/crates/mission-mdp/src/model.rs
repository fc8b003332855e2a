//! The concrete mission MDP: action set, cost function and factorized
//! transition kernel, built from a [`ModelConfig`].
//!
//! Transitions factor per state variable. Location, commitment, range
//! flags and navigation mode evolve deterministically from the chosen
//! action; fault mode, goal priorities and threat level evolve through
//! their configured kernels, independently of each other. A successor
//! distribution is therefore a product over a handful of sparse "axes",
//! each axis contributing `(index delta, probability)` pairs with the
//! mixed-radix stride already baked in.

use serde::Serialize;

use crate::config::{DecisionClass, ModelConfig, RangeDynamics};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::state::{MissionState, StateIndex, StateLayout};

/// One decision of the mission MDP.
///
/// For a `k`-goal layout the set has `2(k+1)+2` members. The 1-based id
/// order is: no commitment, commit to goal 1..k (normal mode), no
/// commitment agile, commit to goal 1..k (agile), recharge, repair —
/// so the three-goal mission has actions 1..=10 and the single-goal
/// mission (and every goal sub-MDP) has actions 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Action {
    NoCommit { agile: bool },
    /// `goal` is 1-based.
    Commit { goal: u32, agile: bool },
    Recharge,
    Repair,
}

impl Action {
    /// All actions of a `k`-goal mission in id order.
    pub fn all(goal_count: u32) -> Vec<Action> {
        let mut out = Vec::with_capacity(2 * (goal_count as usize + 1) + 2);
        for agile in [false, true] {
            out.push(Action::NoCommit { agile });
            for goal in 1..=goal_count {
                out.push(Action::Commit { goal, agile });
            }
        }
        out.push(Action::Recharge);
        out.push(Action::Repair);
        out
    }

    /// 1-based id within a `k`-goal action set.
    pub fn id(&self, goal_count: u32) -> u32 {
        let k = goal_count;
        match *self {
            Action::NoCommit { agile: false } => 1,
            Action::Commit { goal, agile: false } => 1 + goal,
            Action::NoCommit { agile: true } => k + 2,
            Action::Commit { goal, agile: true } => k + 2 + goal,
            Action::Recharge => 2 * k + 3,
            Action::Repair => 2 * k + 4,
        }
    }

    pub fn from_id(id: u32, goal_count: u32) -> Result<Action> {
        let k = goal_count;
        let a = match id {
            1 => Action::NoCommit { agile: false },
            i if (2..=k + 1).contains(&i) => Action::Commit {
                goal: i - 1,
                agile: false,
            },
            i if i == k + 2 => Action::NoCommit { agile: true },
            i if (k + 3..=2 * k + 2).contains(&i) => Action::Commit {
                goal: i - k - 2,
                agile: true,
            },
            i if i == 2 * k + 3 => Action::Recharge,
            i if i == 2 * k + 4 => Action::Repair,
            _ => {
                return Err(Error::bounds(format!(
                    "action id {id} outside [1, {}] for {k} goals",
                    2 * k + 4
                )))
            }
        };
        Ok(a)
    }

    pub fn is_agile(&self) -> bool {
        matches!(
            self,
            Action::NoCommit { agile: true } | Action::Commit { agile: true, .. }
        )
    }

    pub fn decision_class(&self) -> DecisionClass {
        match self {
            Action::Recharge => DecisionClass::Recharge,
            Action::Repair => DecisionClass::Repair,
            a if a.is_agile() => DecisionClass::Agile,
            _ => DecisionClass::Normal,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Action::NoCommit { agile: false } => "no commitment".into(),
            Action::NoCommit { agile: true } => "no commitment (agile)".into(),
            Action::Commit { goal, agile: false } => format!("commit to goal {goal}"),
            Action::Commit { goal, agile: true } => format!("commit to goal {goal} (agile)"),
            Action::Recharge => "recharge".into(),
            Action::Repair => "repair".into(),
        }
    }
}

/// Which cost the model charges: the full mission cost including the
/// movement term, or the single-goal restriction without it (the form
/// goal sub-MDPs are solved with).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostForm {
    Global,
    Local,
}

/// Sparse transition axis: `(index delta, probability)` per outcome.
type Axis = Vec<(usize, f64)>;

const FORCED_ACHIEVED: &[(usize, f64)] = &[(0, 1.0)];

/// A fully built, immutable mission MDP.
#[derive(Clone)]
pub struct MdpModel {
    config: ModelConfig,
    layout: StateLayout,
    actions: Vec<Action>,
    cost_form: CostForm,
    num_states: usize,
    /// `fault_axis[class][f0]` with strides baked in.
    fault_axis: [Vec<Axis>; 4],
    /// `priority_axis[goal][g]`.
    priority_axis: Vec<Vec<Axis>>,
    /// `threat_axis[t]`.
    threat_axis: Vec<Axis>,
    /// `step_toward[target][cell]`: one-cell move; targets are the `k`
    /// goal cells followed by the base cell.
    step_toward: Vec<Vec<u32>>,
    /// Movement cost `h` per target and cell, same target order.
    travel: Vec<Vec<f64>>,
}

fn kernel_axis(kernel: &[Vec<f64>], stride: usize) -> Vec<Axis> {
    kernel
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(j, &p)| (j * stride, p))
                .collect()
        })
        .collect()
}

impl MdpModel {
    /// Build the mission MDP with the full (global) cost.
    pub fn build(config: ModelConfig) -> Result<MdpModel> {
        config.validate()?;
        Self::assemble(config, CostForm::Global)
    }

    /// Build a single-goal mission MDP with the local cost (no movement
    /// term) — the form used for goal sub-MDPs.
    pub fn build_local(config: ModelConfig) -> Result<MdpModel> {
        if config.layout.goal_count() != 1 {
            return Err(Error::contract(format!(
                "local cost form requires a single-goal layout, got {} goals",
                config.layout.goal_count()
            )));
        }
        config.validate()?;
        Self::assemble(config, CostForm::Local)
    }

    /// Build without validating the configuration. Exists so that tests
    /// can hand [`validate_model`] a deliberately corrupted model.
    pub fn build_unchecked(config: ModelConfig) -> Result<MdpModel> {
        Self::assemble(config, CostForm::Global)
    }

    fn assemble(config: ModelConfig, cost_form: CostForm) -> Result<MdpModel> {
        let layout = config.layout.clone();
        let num_states = layout.dense_count()?;
        let k = layout.goal_count() as usize;
        let strides = layout.strides().to_vec();

        let fault_stride = strides[layout.fault_pos()];
        let fault_axis = [
            kernel_axis(&config.fault_kernel.normal, fault_stride),
            kernel_axis(&config.fault_kernel.agile, fault_stride),
            kernel_axis(&config.fault_kernel.recharge, fault_stride),
            kernel_axis(&config.fault_kernel.repair, fault_stride),
        ];
        let priority_axis = (0..k)
            .map(|j| kernel_axis(&config.priority_kernels[j], strides[layout.priority_pos(j)]))
            .collect();
        let threat_axis = kernel_axis(&config.threat_kernel, strides[layout.threat_pos()]);

        let mut targets: Vec<u32> = config.goal_cells.clone();
        targets.push(config.base_cell);
        let cells = layout.location_count();
        let step_toward = targets
            .iter()
            .map(|&t| (0..cells).map(|c| config.grid.step_toward(c, t)).collect())
            .collect();
        let travel = targets
            .iter()
            .map(|&t| (0..cells).map(|c| config.travel_cost(c, t)).collect())
            .collect();

        let actions = Action::all(layout.goal_count());
        Ok(MdpModel {
            config,
            layout,
            actions,
            cost_form,
            num_states,
            fault_axis,
            priority_axis,
            threat_axis,
            step_toward,
            travel,
        })
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }
    pub fn cost_form(&self) -> CostForm {
        self.cost_form
    }

    pub fn action_from_index(&self, index: usize) -> Action {
        self.actions[index]
    }

    fn class_index(class: DecisionClass) -> usize {
        match class {
            DecisionClass::Normal => 0,
            DecisionClass::Agile => 1,
            DecisionClass::Recharge => 2,
            DecisionClass::Repair => 3,
        }
    }

    /// Action-independent part of the cost: goal, fault, range and threat
    /// terms. Only the movement term depends on the action.
    fn base_cost_digits(&self, digits: &[u32]) -> f64 {
        let l = &self.layout;
        let k = l.goal_count() as usize;
        let c = digits[l.commitment_pos()];
        let mut cost = 0.0;
        let mut all_in_range = true;
        for j in 0..k {
            let r = digits[l.range_pos(j)];
            let g = digits[l.priority_pos(j)] as f64;
            all_in_range &= r == 1;
            if r == 1 && c != (j as u32 + 1) {
                cost += self.config.goal_weights[j] * g;
            }
            if r == 0 {
                cost += self.config.range_penalties[j] * g;
            }
        }
        let f0 = digits[l.fault_pos()] as usize;
        cost += self.config.fault_penalties[f0][all_in_range as usize];
        let t = digits[l.threat_pos()] as usize;
        let m = digits[l.mode_pos()] as usize;
        cost += self.config.threat_penalties[t][m];
        cost
    }

    fn movement_cost(&self, action: Action, cell: u32) -> f64 {
        if self.cost_form == CostForm::Local {
            return 0.0;
        }
        let k = self.layout.goal_count() as usize;
        match action {
            Action::Commit { goal, .. } => self.travel[goal as usize - 1][cell as usize],
            Action::Recharge | Action::Repair => self.travel[k][cell as usize],
            Action::NoCommit { .. } => 0.0,
        }
    }

    fn cost_digits(&self, digits: &[u32], action: Action) -> f64 {
        self.base_cost_digits(digits) + self.movement_cost(action, digits[self.layout.location_pos()])
    }

    /// Deterministic digit updates for an action: next location, next
    /// commitment, next mode, next range bits (ignoring decay), and
    /// whether the vehicle moved.
    fn deterministic_update(&self, digits: &[u32], action: Action) -> DetUpdate {
        let l = &self.layout;
        let k = l.goal_count() as usize;
        let cell = digits[l.location_pos()];
        let (next_cell, next_commit) = match action {
            Action::Commit { goal, .. } => {
                (self.step_toward[goal as usize - 1][cell as usize], goal)
            }
            Action::Recharge | Action::Repair => (self.step_toward[k][cell as usize], 0),
            Action::NoCommit { .. } => (cell, 0),
        };
        let next_mode = if action.is_agile() && l.mode_count() > 1 {
            1
        } else {
            0
        };
        let mut range_bits = 0u32;
        for j in 0..k {
            let bit = if matches!(action, Action::Recharge) {
                1
            } else {
                digits[l.range_pos(j)]
            };
            range_bits |= bit << j;
        }
        DetUpdate {
            next_cell,
            next_commit,
            next_mode,
            range_bits,
            moved: next_cell != cell,
        }
    }

    /// Build the transition axes of `(digits, action)` and hand them to
    /// `consume` together with the deterministic base index.
    fn with_axes<R>(
        &self,
        digits: &[u32],
        action: Action,
        consume: impl FnOnce(&[&[(usize, f64)]], usize) -> R,
    ) -> R {
        let l = &self.layout;
        let k = l.goal_count() as usize;
        let strides = l.strides();
        let up = self.deterministic_update(digits, action);

        // Base index: deterministic digits, stochastic digits at zero.
        let mut base = up.next_cell as usize * strides[l.location_pos()]
            + up.next_commit as usize * strides[l.commitment_pos()]
            + up.next_mode as usize * strides[l.mode_pos()];

        // Stochastic axes. Worst case: fault + k priorities + threat + decay.
        let mut axes: Vec<&[(usize, f64)]> = Vec::with_capacity(k + 3);
        let class = Self::class_index(action.decision_class());
        axes.push(&self.fault_axis[class][digits[l.fault_pos()] as usize]);

        let cell = digits[l.location_pos()];
        let commit = digits[l.commitment_pos()];
        for j in 0..k {
            let achieved = cell == self.config.goal_cells[j] && commit == j as u32 + 1;
            if achieved {
                axes.push(FORCED_ACHIEVED);
            } else {
                axes.push(&self.priority_axis[j][digits[l.priority_pos(j)] as usize]);
            }
        }
        axes.push(&self.threat_axis[digits[l.threat_pos()] as usize]);

        // Range flags: deterministic unless decay fires on a move.
        let decay_axis: Option<Axis> = match self.config.range_dynamics {
            RangeDynamics::Decay { probability }
                if probability > 0.0 && up.moved && !matches!(action, Action::Recharge) =>
            {
                let full: usize = (0..k)
                    .filter(|&j| up.range_bits >> j & 1 == 1)
                    .map(|j| strides[l.range_pos(j)])
                    .sum();
                let set: Vec<usize> = (0..k).filter(|&j| up.range_bits >> j & 1 == 1).collect();
                if set.is_empty() {
                    None
                } else {
                    let mut axis = Vec::with_capacity(set.len() + 1);
                    axis.push((full, 1.0 - probability));
                    let each = probability / set.len() as f64;
                    for &j in &set {
                        axis.push((full - strides[l.range_pos(j)], each));
                    }
                    Some(axis)
                }
            }
            _ => None,
        };
        match &decay_axis {
            Some(axis) => axes.push(axis),
            None => {
                for j in 0..k {
                    if up.range_bits >> j & 1 == 1 {
                        base += strides[l.range_pos(j)];
                    }
                }
            }
        }

        consume(&axes, base)
    }

    /// Walk every successor of `(digits, action)` with its probability.
    fn for_each_successor_digits(
        &self,
        digits: &[u32],
        action: Action,
        visit: &mut dyn FnMut(usize, f64),
    ) {
        self.with_axes(digits, action, |axes, base| {
            product_visit(axes, base, 1.0, visit)
        });
    }

    /// Expected value of `values` over the successors of `(digits, action)`.
    fn expectation_digits(&self, digits: &[u32], action: Action, values: &[f64]) -> f64 {
        self.with_axes(digits, action, |axes, base| {
            product_expectation(axes, base, values)
        })
    }

    /// Successor distribution of a structured state, sparse, summing to 1.
    pub fn distribution(&self, state: &MissionState, action: Action) -> Result<Vec<(MissionState, f64)>> {
        state.validate(&self.layout)?;
        let mut digits = vec![0u32; self.layout.digit_count()];
        state.write_digits(&self.layout, &mut digits);
        let mut out = Vec::new();
        self.for_each_successor_digits(&digits, action, &mut |sp, p| out.push((sp, p)));
        let mut scratch = vec![0u32; self.layout.digit_count()];
        Ok(out
            .into_iter()
            .map(|(sp, p)| {
                self.layout.digits_of_index(sp, &mut scratch);
                (MissionState::from_digits(&self.layout, &scratch), p)
            })
            .collect())
    }

    /// Cost of a structured state/action pair under this model's form.
    pub fn cost_of(&self, state: &MissionState, action: Action) -> Result<f64> {
        state.validate(&self.layout)?;
        let mut digits = vec![0u32; self.layout.digit_count()];
        state.write_digits(&self.layout, &mut digits);
        Ok(self.cost_digits(&digits, action))
    }
}

struct DetUpdate {
    next_cell: u32,
    next_commit: u32,
    next_mode: u32,
    range_bits: u32,
    moved: bool,
}

/// Depth-first product over sparse axes, emitting each composite
/// successor exactly once.
fn product_visit(axes: &[&[(usize, f64)]], base: usize, prob: f64, visit: &mut dyn FnMut(usize, f64)) {
    match axes.split_first() {
        None => visit(base, prob),
        Some((axis, rest)) => {
            for &(delta, p) in *axis {
                product_visit(rest, base + delta, prob * p, visit);
            }
        }
    }
}

/// Expected value over the product of axes without materializing it.
fn product_expectation(axes: &[&[(usize, f64)]], base: usize, values: &[f64]) -> f64 {
    match axes.split_first() {
        None => values[base],
        Some((axis, rest)) => {
            let mut acc = 0.0;
            for &(delta, p) in *axis {
                acc += p * product_expectation(rest, base + delta, values);
            }
            acc
        }
    }
}

const MAX_DIGITS: usize = 64;

impl Mdp for MdpModel {
    fn num_states(&self) -> usize {
        self.num_states
    }
    fn num_actions(&self) -> usize {
        self.actions.len()
    }
    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn cost(&self, state: usize, action: usize) -> f64 {
        let mut digits = [0u32; MAX_DIGITS];
        let n = self.layout.digit_count();
        self.layout.digits_of_index(state, &mut digits[..n]);
        self.cost_digits(&digits[..n], self.actions[action])
    }

    fn for_each_successor(&self, state: usize, action: usize, visit: &mut dyn FnMut(usize, f64)) {
        let mut digits = [0u32; MAX_DIGITS];
        let n = self.layout.digit_count();
        self.layout.digits_of_index(state, &mut digits[..n]);
        self.for_each_successor_digits(&digits[..n], self.actions[action], visit);
    }

    fn q_value(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        let mut digits = [0u32; MAX_DIGITS];
        let n = self.layout.digit_count();
        self.layout.digits_of_index(state, &mut digits[..n]);
        let a = self.actions[action];
        self.cost_digits(&digits[..n], a)
            + self.config.discount * self.expectation_digits(&digits[..n], a, values)
    }

    fn min_q(&self, state: usize, values: &[f64]) -> (f64, usize) {
        let mut digits = [0u32; MAX_DIGITS];
        let n = self.layout.digit_count();
        self.layout.digits_of_index(state, &mut digits[..n]);
        let digits = &digits[..n];
        let base_cost = self.base_cost_digits(digits);
        let cell = digits[self.layout.location_pos()];
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        for (i, &a) in self.actions.iter().enumerate() {
            let q = base_cost
                + self.movement_cost(a, cell)
                + self.config.discount * self.expectation_digits(digits, a, values);
            if q < best {
                best = q;
                arg = i;
            }
        }
        (best, arg)
    }
}

/// Mission cost of `(state, action)` under the full cost, evaluated
/// straight from the configuration. Serves as an independent route
/// against [`MdpModel::cost_of`] in tests.
pub fn global_cost(state: &MissionState, action: Action, config: &ModelConfig) -> Result<f64> {
    state.validate(&config.layout)?;
    let k = config.layout.goal_count() as usize;
    let mut cost = 0.0;
    let mut all_in_range = true;
    for j in 0..k {
        let r = state.range_flags[j];
        let g = state.goal_priorities[j] as f64;
        all_in_range &= r;
        if r && state.commitment != j as u32 + 1 {
            cost += config.goal_weights[j] * g;
        }
        if !r {
            cost += config.range_penalties[j] * g;
        }
    }
    cost += match action {
        Action::Commit { goal, .. } => config.travel_cost(state.location, config.goal_cells[goal as usize - 1]),
        Action::Recharge | Action::Repair => config.travel_cost(state.location, config.base_cell),
        Action::NoCommit { .. } => 0.0,
    };
    cost += config.fault_penalties[state.fault as usize - 1][all_in_range as usize];
    cost += config.threat_penalties[state.threat as usize][state.nav_mode as usize];
    Ok(cost)
}

/// Single-goal restriction of the mission cost: goal-1 terms only and no
/// movement term. Errors on multi-goal layouts.
pub fn local_cost(state: &MissionState, action: Action, config: &ModelConfig) -> Result<f64> {
    if config.layout.goal_count() != 1 {
        return Err(Error::contract(format!(
            "local cost is defined for single-goal layouts, got {} goals",
            config.layout.goal_count()
        )));
    }
    let _ = action;
    state.validate(&config.layout)?;
    let r = state.range_flags[0];
    let g = state.goal_priorities[0] as f64;
    let mut cost = 0.0;
    if r && state.commitment != 1 {
        cost += config.goal_weights[0] * g;
    }
    if !r {
        cost += config.range_penalties[0] * g;
    }
    cost += config.fault_penalties[state.fault as usize - 1][r as usize];
    cost += config.threat_penalties[state.threat as usize][state.nav_mode as usize];
    Ok(cost)
}

/// Successor distribution computed through a freshly built model. Hold an
/// [`MdpModel`] and call [`MdpModel::distribution`] in a loop instead.
pub fn transition_distribution(
    state: &MissionState,
    action: Action,
    config: &ModelConfig,
) -> Result<Vec<(MissionState, f64)>> {
    MdpModel::build(config.clone())?.distribution(state, action)
}

/// Defect report of a built model: transition rows that fail to sum to 1
/// and state-action pairs with negative cost. Sample lists are capped;
/// the totals count everything.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pairs_checked: usize,
    pub bad_distribution_count: usize,
    pub negative_cost_count: usize,
    /// Up to `sample_cap` offending `(state, action, row sum)` triples.
    pub bad_distributions: Vec<(StateIndex, u32, f64)>,
    /// Up to `sample_cap` offending `(state, action, cost)` triples.
    pub negative_costs: Vec<(StateIndex, u32, f64)>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.bad_distribution_count == 0 && self.negative_cost_count == 0
    }
}

const VALIDATION_SAMPLE_CAP: usize = 1000;

/// Sweep every (state, action) pair of a model, flagging distributions
/// that deviate from 1 by more than 1e-9 and negative costs.
pub fn validate_model(model: &MdpModel) -> ValidationReport {
    let mut report = ValidationReport {
        pairs_checked: 0,
        bad_distribution_count: 0,
        negative_cost_count: 0,
        bad_distributions: Vec::new(),
        negative_costs: Vec::new(),
    };
    for s in 0..model.num_states() {
        for a in 0..model.num_actions() {
            report.pairs_checked += 1;
            let mut sum = 0.0;
            model.for_each_successor(s, a, &mut |_, p| sum += p);
            if (sum - 1.0).abs() > 1e-9 {
                report.bad_distribution_count += 1;
                if report.bad_distributions.len() < VALIDATION_SAMPLE_CAP {
                    report.bad_distributions.push((s, a as u32 + 1, sum));
                }
            }
            let cost = model.cost(s, a);
            if cost < 0.0 {
                report.negative_cost_count += 1;
                if report.negative_costs.len() < VALIDATION_SAMPLE_CAP {
                    report.negative_costs.push((s, a as u32 + 1, cost));
                }
            }
        }
    }
    report
}
