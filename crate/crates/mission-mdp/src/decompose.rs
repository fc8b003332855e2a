//! Factor-based decomposition of the mission MDP into candidate sub-MDPs
//! with scoring, merging and overlap pruning.
//!
//! Three partitioning criteria are supported. Goal partitioning is a
//! marginal projection: sub-MDP `j` keeps the digits
//! `(f, r_j, g_j, l, c in {0, j}, t, m)`, drops every other goal and is
//! solved as a single-goal model with the local cost — for the paper
//! layout that is exactly the 4,608-state sub-MDP with 6 actions. Location
//! and fault partitioning restrict the global state set instead: the
//! sub-MDP keeps the global action set and redirects any transition mass
//! that would leave the member set back to the source state.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::model::MdpModel;
use crate::state::{StateIndex, StateLayout, PRIORITY_LEVELS};

/// Partitioning criterion for factor-based decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Goal,
    Location,
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubMdpKind {
    Goal,
    Location,
    Fault,
    Mixed,
}

/// What a candidate focuses on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Focus {
    /// 1-based goal index.
    Goal(u32),
    /// Set of grid cells.
    Region(Vec<u32>),
    /// Fault mode (1-based).
    FaultMode(u32),
    /// Union of two merged candidates, by their focus labels.
    Merged(String),
}

impl Focus {
    pub fn label(&self) -> String {
        match self {
            Focus::Goal(j) => format!("goal {j}"),
            Focus::Region(cells) => format!("region {cells:?}"),
            Focus::FaultMode(f) => format!("fault mode {f}"),
            Focus::Merged(l) => format!("merged [{l}]"),
        }
    }

    /// Stable ordering key for deterministic plans.
    fn order_key(&self) -> (u8, u32, String) {
        match self {
            Focus::Goal(j) => (0, *j, String::new()),
            Focus::Region(cells) => (1, cells.first().copied().unwrap_or(0), format!("{cells:?}")),
            Focus::FaultMode(f) => (2, *f, String::new()),
            Focus::Merged(l) => (3, 0, l.clone()),
        }
    }
}

/// Subset restriction of a parent mission model: the member states keep
/// the full action set; successors outside the member set fold back onto
/// the source state, preserving row-stochasticity.
#[derive(Clone)]
pub struct RestrictedMdp {
    parent: MdpModel,
    /// Sorted parent indices of the member states.
    members: Vec<StateIndex>,
    /// Parent index -> local rank, `u32::MAX` for non-members.
    rank: Vec<u32>,
}

impl RestrictedMdp {
    pub fn new(parent: MdpModel, mut members: Vec<StateIndex>) -> RestrictedMdp {
        members.sort_unstable();
        members.dedup();
        let mut rank = vec![u32::MAX; parent.num_states()];
        for (i, &m) in members.iter().enumerate() {
            rank[m] = i as u32;
        }
        RestrictedMdp {
            parent,
            members,
            rank,
        }
    }

    pub fn members(&self) -> &[StateIndex] {
        &self.members
    }

    pub fn rank_of(&self, parent_state: StateIndex) -> Option<usize> {
        match self.rank.get(parent_state) {
            Some(&r) if r != u32::MAX => Some(r as usize),
            _ => None,
        }
    }

    pub fn parent(&self) -> &MdpModel {
        &self.parent
    }
}

impl Mdp for RestrictedMdp {
    fn num_states(&self) -> usize {
        self.members.len()
    }
    fn num_actions(&self) -> usize {
        self.parent.num_actions()
    }
    fn discount(&self) -> f64 {
        self.parent.discount()
    }
    fn cost(&self, state: usize, action: usize) -> f64 {
        self.parent.cost(self.members[state], action)
    }
    fn for_each_successor(&self, state: usize, action: usize, visit: &mut dyn FnMut(usize, f64)) {
        let parent_state = self.members[state];
        let mut escaped = 0.0;
        self.parent
            .for_each_successor(parent_state, action, &mut |sp, p| {
                match self.rank_of(sp) {
                    Some(local) => visit(local, p),
                    None => escaped += p,
                }
            });
        if escaped > 0.0 {
            visit(state, escaped);
        }
    }
}

/// The model behind a sub-MDP: a marginal single-goal projection or a
/// subset restriction of the parent.
pub enum SubModel {
    Projected(MdpModel),
    Restricted(RestrictedMdp),
}

impl SubModel {
    pub fn as_mdp(&self) -> &dyn Mdp {
        match self {
            SubModel::Projected(m) => m,
            SubModel::Restricted(r) => r,
        }
    }

    pub fn num_states(&self) -> usize {
        self.as_mdp().num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.as_mdp().num_actions()
    }
}

/// One candidate sub-MDP with its restriction semantics.
pub struct SubMdp {
    pub id: usize,
    pub kind: SubMdpKind,
    pub focus: Focus,
    pub model: SubModel,
    parent_layout: StateLayout,
    /// Strides of the local single-goal layout (goal kind only).
    local_strides: Option<Vec<usize>>,
}

impl SubMdp {
    /// True when the global state belongs to this sub-MDP. Goal subs are
    /// marginal projections, so every global state belongs to them.
    pub fn contains(&self, global_state: StateIndex) -> bool {
        match &self.model {
            SubModel::Projected(_) => true,
            SubModel::Restricted(r) => r.rank_of(global_state).is_some(),
        }
    }

    /// Local state index of a global state, if the state is a member.
    pub fn project(&self, global_state: StateIndex) -> Option<usize> {
        match &self.model {
            SubModel::Projected(_) => {
                let mut digits = vec![0u32; self.parent_layout.digit_count()];
                self.parent_layout.digits_of_index(global_state, &mut digits);
                Some(self.project_digits(&digits))
            }
            SubModel::Restricted(r) => r.rank_of(global_state),
        }
    }

    /// Projection from predecoded parent digits (goal kind only).
    pub(crate) fn project_digits(&self, digits: &[u32]) -> usize {
        let Focus::Goal(goal) = self.focus else {
            panic!("digit projection applies to goal sub-MDPs only");
        };
        let j = goal as usize - 1;
        let pl = &self.parent_layout;
        let ls = self
            .local_strides
            .as_ref()
            .expect("goal subs carry local strides");
        let commit = (digits[pl.commitment_pos()] == goal) as usize;
        digits[pl.fault_pos()] as usize * ls[0]
            + digits[pl.range_pos(j)] as usize * ls[1]
            + digits[pl.priority_pos(j)] as usize * ls[2]
            + digits[pl.location_pos()] as usize * ls[3]
            + commit * ls[4]
            + digits[pl.threat_pos()] as usize * ls[5]
            + digits[pl.mode_pos()] as usize * ls[6]
    }

}

/// Components of a candidate score.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CandidateScore {
    pub reward_impact: f64,
    pub spatial_coherence: f64,
    pub fault_sensitivity: f64,
    pub total: f64,
}

/// Weights `(w_g, w_l, w_f)` of the candidate scoring function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScoreWeights {
    pub reward: f64,
    pub spatial: f64,
    pub fault: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            reward: 1.0,
            spatial: 1.0,
            fault: 1.0,
        }
    }
}

/// Result of one partitioning pass: the candidates that fit the size
/// bound plus human-readable diagnostics for everything skipped.
pub struct Partitioned {
    pub candidates: Vec<SubMdp>,
    pub warnings: Vec<String>,
}

/// Jaccard similarity above which two subset candidates count as
/// excessively overlapping.
pub const OVERLAP_JACCARD: f64 = 0.5;
/// Candidates smaller than this may be merged even without overlap.
pub const MIN_SIZE_FLOOR: usize = 32;

fn goal_sub_config(config: &ModelConfig, goal: usize) -> ModelConfig {
    let mut cfg = config.clone();
    cfg.layout = config.layout.with_single_goal();
    cfg.goal_cells = vec![config.goal_cells[goal]];
    cfg.goal_weights = vec![config.goal_weights[goal]];
    cfg.range_penalties = vec![config.range_penalties[goal]];
    cfg.priority_kernels = vec![config.priority_kernels[goal].clone()];
    cfg
}

/// Default location regions: grid quadrants (halved rows x halved cols).
pub fn default_regions(config: &ModelConfig) -> Vec<Vec<u32>> {
    let rows = config.grid.rows;
    let cols = config.grid.cols;
    let row_split = (rows / 2).max(1);
    let col_split = (cols / 2).max(1);
    let mut regions: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for cell in 0..config.grid.cell_count() {
        let (r, c) = config.grid.coords(cell);
        let key = (
            if (r as u32) < row_split { 0 } else { 1 },
            if (c as u32) < col_split { 0 } else { 1 },
        );
        regions.entry(key).or_default().push(cell);
    }
    regions.into_values().collect()
}

/// Partition the model by one criterion, using default regions for the
/// location criterion. Candidates larger than `t_max` are skipped with a
/// warning; an empty candidate list is not an error.
pub fn partition(model: &MdpModel, criterion: Criterion, t_max: usize) -> Result<Partitioned> {
    let regions = default_regions(model.config());
    partition_with_regions(model, criterion, t_max, &regions)
}

/// Partition with explicit location regions (cell sets).
pub fn partition_with_regions(
    model: &MdpModel,
    criterion: Criterion,
    t_max: usize,
    regions: &[Vec<u32>],
) -> Result<Partitioned> {
    if t_max == 0 {
        return Err(Error::contract("t_max must be positive"));
    }
    let config = model.config();
    let layout = model.layout();
    let mut candidates = Vec::new();
    let mut warnings = Vec::new();
    let mut next_id = 0usize;

    match criterion {
        Criterion::Goal => {
            for j in 0..layout.goal_count() as usize {
                let cfg = goal_sub_config(config, j);
                let count = cfg.layout.state_count();
                if count > t_max as u128 {
                    warnings.push(format!(
                        "goal {} candidate has {count} states, over t_max {t_max}",
                        j + 1
                    ));
                    continue;
                }
                let sub_model = MdpModel::build_local(cfg)?;
                let local_strides = sub_model.layout().strides().to_vec();
                candidates.push(SubMdp {
                    id: next_id,
                    kind: SubMdpKind::Goal,
                    focus: Focus::Goal(j as u32 + 1),
                    model: SubModel::Projected(sub_model),
                    parent_layout: layout.clone(),
                    local_strides: Some(local_strides),
                });
                next_id += 1;
            }
        }
        Criterion::Location => {
            let per_cell = layout.state_count() / layout.location_count() as u128;
            for region in regions {
                let count = per_cell * region.len() as u128;
                if count > t_max as u128 {
                    warnings.push(format!(
                        "region {region:?} candidate has {count} states, over t_max {t_max}"
                    ));
                    continue;
                }
                let members = members_with(model, |digits| {
                    region.contains(&digits[layout.location_pos()])
                })?;
                candidates.push(SubMdp {
                    id: next_id,
                    kind: SubMdpKind::Location,
                    focus: Focus::Region(region.clone()),
                    model: SubModel::Restricted(RestrictedMdp::new(model.clone(), members)),
                    parent_layout: layout.clone(),
                    local_strides: None,
                });
                next_id += 1;
            }
        }
        Criterion::Fault => {
            let per_mode = layout.state_count() / layout.fault_count() as u128;
            for f in 0..layout.fault_count() {
                if per_mode > t_max as u128 {
                    warnings.push(format!(
                        "fault mode {} candidate has {per_mode} states, over t_max {t_max}",
                        f + 1
                    ));
                    continue;
                }
                let members = members_with(model, |digits| digits[layout.fault_pos()] == f)?;
                candidates.push(SubMdp {
                    id: next_id,
                    kind: SubMdpKind::Fault,
                    focus: Focus::FaultMode(f + 1),
                    model: SubModel::Restricted(RestrictedMdp::new(model.clone(), members)),
                    parent_layout: layout.clone(),
                    local_strides: None,
                });
                next_id += 1;
            }
        }
    }

    if candidates.is_empty() {
        warnings.push(format!(
            "no {criterion:?}-criterion candidate fits t_max {t_max}"
        ));
    }
    Ok(Partitioned {
        candidates,
        warnings,
    })
}

fn members_with(model: &MdpModel, keep: impl Fn(&[u32]) -> bool) -> Result<Vec<StateIndex>> {
    let layout = model.layout();
    let n = layout.dense_count()?;
    let mut digits = vec![0u32; layout.digit_count()];
    let mut members = Vec::new();
    for s in 0..n {
        layout.digits_of_index(s, &mut digits);
        if keep(&digits) {
            members.push(s);
        }
    }
    Ok(members)
}

/// Score one candidate. Reward impact is the largest attainable
/// single-step goal term inside the candidate; spatial coherence is the
/// inverse grid diameter of its reachable cells; fault sensitivity is the
/// mean fault penalty over its fault modes.
pub fn score_candidate(sub: &SubMdp, config: &ModelConfig, weights: ScoreWeights) -> CandidateScore {
    let top = (PRIORITY_LEVELS - 1) as f64;
    let reward_impact = match &sub.focus {
        Focus::Goal(j) => config.goal_weights[*j as usize - 1] * top,
        _ => config.goal_weights.iter().sum::<f64>() * top,
    };

    let cells: Vec<u32> = match &sub.focus {
        Focus::Region(cells) => cells.clone(),
        _ => (0..config.grid.cell_count()).collect(),
    };
    let mut diameter = 0u32;
    for &a in &cells {
        for &b in &cells {
            diameter = diameter.max(config.grid.manhattan(a, b));
        }
    }
    let spatial_coherence = 1.0 / (1.0 + diameter as f64);

    let modes: Vec<usize> = match &sub.focus {
        Focus::FaultMode(f) => vec![*f as usize - 1],
        _ => (0..config.layout.fault_count() as usize).collect(),
    };
    let fault_sensitivity = modes
        .iter()
        .map(|&f| (config.fault_penalties[f][0] + config.fault_penalties[f][1]) / 2.0)
        .sum::<f64>()
        / modes.len() as f64;

    let total = weights.reward * reward_impact
        + weights.spatial * spatial_coherence
        + weights.fault * fault_sensitivity;
    CandidateScore {
        reward_impact,
        spatial_coherence,
        fault_sensitivity,
        total,
    }
}

/// Attempt to merge two subset candidates into one mixed candidate.
///
/// Eligible when their member sets overlap or both are below the size
/// floor. Returns `Ok(None)` when the pair is ineligible or the merged
/// score stays under `threshold`; errors when the union exceeds `t_max`.
/// Goal candidates are marginal projections, not subsets, and cannot be
/// merged.
pub fn merge_candidates(
    a: &SubMdp,
    b: &SubMdp,
    threshold: f64,
    weights: ScoreWeights,
    t_max: usize,
    next_id: usize,
) -> Result<Option<SubMdp>> {
    let (SubModel::Restricted(ra), SubModel::Restricted(rb)) = (&a.model, &b.model) else {
        return Err(Error::contract(
            "merge applies to subset candidates; goal candidates are marginal projections",
        ));
    };
    let overlap = intersection_size(ra.members(), rb.members());
    let tiny = ra.members().len() < MIN_SIZE_FLOOR && rb.members().len() < MIN_SIZE_FLOOR;
    if overlap == 0 && !tiny {
        return Ok(None);
    }
    let union: Vec<StateIndex> = {
        let mut u = ra.members().to_vec();
        u.extend_from_slice(rb.members());
        u.sort_unstable();
        u.dedup();
        u
    };
    if union.len() > t_max {
        return Err(Error::capacity(format!(
            "merged candidate has {} states, over t_max {t_max}",
            union.len()
        )));
    }
    let merged = SubMdp {
        id: next_id,
        kind: SubMdpKind::Mixed,
        focus: Focus::Merged(format!("{} + {}", a.focus.label(), b.focus.label())),
        model: SubModel::Restricted(RestrictedMdp::new(ra.parent().clone(), union)),
        parent_layout: a.parent_layout.clone(),
        local_strides: None,
    };
    let score = score_candidate(&merged, ra.parent().config(), weights);
    if score.total >= threshold {
        Ok(Some(merged))
    } else {
        Ok(None)
    }
}

fn intersection_size(a: &[StateIndex], b: &[StateIndex]) -> usize {
    let (mut i, mut j, mut n) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn jaccard(a: &[StateIndex], b: &[StateIndex]) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// A complete decomposition: scored sub-MDPs plus the state-to-sub
/// mapping, with pruning already applied.
pub struct DecompositionPlan {
    pub sub_mdps: Vec<SubMdp>,
    pub scores: Vec<CandidateScore>,
    pub criterion: Criterion,
    pub t_max: usize,
    pub weights: ScoreWeights,
    pub threshold: f64,
    pub warnings: Vec<String>,
    global_states: usize,
}

impl DecompositionPlan {
    /// Sub-MDP ids containing a global state (the mapping phi).
    pub fn subs_for(&self, global_state: StateIndex) -> Vec<usize> {
        self.sub_mdps
            .iter()
            .filter(|s| s.contains(global_state))
            .map(|s| s.id)
            .collect()
    }

    pub fn global_state_count(&self) -> usize {
        self.global_states
    }

    pub fn sub(&self, id: usize) -> &SubMdp {
        self.sub_mdps
            .iter()
            .find(|s| s.id == id)
            .expect("plan sub ids are dense")
    }

    /// Serializable summary: per sub-MDP kind, focus, size and score,
    /// plus phi statistics.
    pub fn summary(&self) -> PlanSummary {
        let subs = self
            .sub_mdps
            .iter()
            .zip(&self.scores)
            .map(|(s, score)| SubSummary {
                id: s.id,
                kind: s.kind,
                focus: s.focus.label(),
                states: s.model.num_states(),
                actions: s.model.num_actions(),
                score: *score,
            })
            .collect();
        // phi statistics from membership cardinalities.
        let per_state_subs: f64 = self
            .sub_mdps
            .iter()
            .map(|s| s.activity_membership_len(self.global_states) as f64)
            .sum::<f64>()
            / self.global_states as f64;
        PlanSummary {
            criterion: self.criterion,
            t_max: self.t_max,
            global_states: self.global_states,
            sub_count: self.sub_mdps.len(),
            mean_subs_per_state: per_state_subs,
            warnings: self.warnings.clone(),
            subs,
        }
    }
}

impl SubMdp {
    fn activity_membership_len(&self, parent_states: usize) -> usize {
        match &self.model {
            SubModel::Projected(_) => parent_states,
            SubModel::Restricted(r) => r.members().len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubSummary {
    pub id: usize,
    pub kind: SubMdpKind,
    pub focus: String,
    pub states: usize,
    pub actions: usize,
    pub score: CandidateScore,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub criterion: Criterion,
    pub t_max: usize,
    pub global_states: usize,
    pub sub_count: usize,
    pub mean_subs_per_state: f64,
    pub warnings: Vec<String>,
    pub subs: Vec<SubSummary>,
}

/// Run the full decomposition: partition, score, merge eligible pairs,
/// prune excessive overlaps and verify coverage.
pub fn decompose(
    model: &MdpModel,
    criterion: Criterion,
    t_max: usize,
    weights: ScoreWeights,
    threshold: f64,
) -> Result<DecompositionPlan> {
    let regions = default_regions(model.config());
    decompose_with_regions(model, criterion, t_max, weights, threshold, &regions)
}

/// [`decompose`] with explicit location regions.
pub fn decompose_with_regions(
    model: &MdpModel,
    criterion: Criterion,
    t_max: usize,
    weights: ScoreWeights,
    threshold: f64,
    regions: &[Vec<u32>],
) -> Result<DecompositionPlan> {
    let partitioned = partition_with_regions(model, criterion, t_max, regions)?;
    let mut candidates = partitioned.candidates;
    let mut warnings = partitioned.warnings;

    // Mixed step: try merging overlapping or tiny subset pairs.
    let subset_ids: Vec<usize> = candidates
        .iter()
        .filter(|c| matches!(c.model, SubModel::Restricted(_)))
        .map(|c| c.id)
        .collect();
    let mut next_id = candidates.len();
    let mut merged_new = Vec::new();
    for (i, &ia) in subset_ids.iter().enumerate() {
        for &ib in subset_ids.iter().skip(i + 1) {
            let a = &candidates[ia];
            let b = &candidates[ib];
            match merge_candidates(a, b, threshold, weights, t_max, next_id) {
                Ok(Some(m)) => {
                    merged_new.push(m);
                    next_id += 1;
                }
                Ok(None) => {}
                Err(e) => warnings.push(format!(
                    "merge of {} and {} rejected: {e}",
                    a.focus.label(),
                    b.focus.label()
                )),
            }
        }
    }
    candidates.extend(merged_new);

    // Score everything.
    let config = model.config();
    let scored: Vec<(SubMdp, CandidateScore)> = candidates
        .into_iter()
        .map(|c| {
            let s = score_candidate(&c, config, weights);
            (c, s)
        })
        .collect();

    // Overlap pruning among subset candidates: drop the lower-scored of
    // any pair whose member Jaccard similarity exceeds the threshold.
    // Goal candidates are distinct marginals and are kept as a family.
    let mut dropped = vec![false; scored.len()];
    for i in 0..scored.len() {
        for j in (i + 1)..scored.len() {
            if dropped[i] || dropped[j] {
                continue;
            }
            let (a, sa) = (&scored[i].0, scored[i].1.total);
            let (b, sb) = (&scored[j].0, scored[j].1.total);
            let overlapping = match (&a.model, &b.model) {
                (SubModel::Restricted(ra), SubModel::Restricted(rb)) => {
                    jaccard(ra.members(), rb.members()) > OVERLAP_JACCARD
                }
                _ => a.kind == b.kind && a.focus == b.focus,
            };
            if overlapping {
                let drop = if sa >= sb { j } else { i };
                warnings.push(format!(
                    "pruned {} (score {:.3}) overlapping {} (score {:.3})",
                    scored[drop].0.focus.label(),
                    scored[drop].1.total,
                    if drop == j {
                        scored[i].0.focus.label()
                    } else {
                        scored[j].0.focus.label()
                    },
                    if drop == j { sa } else { sb },
                ));
                dropped[drop] = true;
            }
        }
    }

    let mut kept: Vec<(SubMdp, CandidateScore)> = scored
        .into_iter()
        .zip(dropped)
        .filter(|(_, d)| !d)
        .map(|(cs, _)| cs)
        .collect();

    // Stable order: kind family then focus, then reassign dense ids.
    kept.sort_by(|a, b| a.0.focus.order_key().cmp(&b.0.focus.order_key()));
    for (i, (sub, _)) in kept.iter_mut().enumerate() {
        sub.id = i;
    }

    // Coverage check over the global space.
    let global_states = model.num_states();
    let mut uncovered = Vec::new();
    if !kept.iter().any(|(s, _)| matches!(s.model, SubModel::Projected(_))) {
        let mut covered = vec![false; global_states];
        for (sub, _) in &kept {
            if let SubModel::Restricted(r) = &sub.model {
                for &m in r.members() {
                    covered[m] = true;
                }
            }
        }
        for (s, c) in covered.iter().enumerate() {
            if !c {
                uncovered.push(s);
                if uncovered.len() >= 100 {
                    break;
                }
            }
        }
    }
    if !uncovered.is_empty() {
        return Err(Error::contract(format!(
            "decomposition leaves states uncovered (first {}): {:?}",
            uncovered.len(),
            &uncovered[..uncovered.len().min(10)]
        )));
    }

    let (sub_mdps, scores): (Vec<SubMdp>, Vec<CandidateScore>) = kept.into_iter().unzip();
    Ok(DecompositionPlan {
        sub_mdps,
        scores,
        criterion,
        t_max,
        weights,
        threshold,
        warnings,
        global_states,
    })
}

/// `|S|^2` versus `sum |S_i|^2` and their ratio — the quadratic
/// per-sweep work proxies of the global and decomposed solves.
pub fn complexity_reduction(plan: &DecompositionPlan, global_count: u128) -> (u128, u128, f64) {
    let global_proxy = global_count * global_count;
    let decomposed_proxy: u128 = plan
        .sub_mdps
        .iter()
        .map(|s| {
            let n = s.model.num_states() as u128;
            n * n
        })
        .sum();
    let ratio = global_proxy as f64 / decomposed_proxy as f64;
    (global_proxy, decomposed_proxy, ratio)
}
