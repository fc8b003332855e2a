//! Declarative mission model configuration.
//!
//! A [`ModelConfig`] is a single JSON-compatible document describing the
//! state layout, the grid, cost tables and the stochastic kernels. All
//! matrices are row-major; probabilities are plain decimals. Validation
//! reports every violation at once, each prefixed with the document path
//! of the offending field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::StateLayout;

/// Row-stochasticity gate for every kernel row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: u32,
    pub cols: u32,
}

impl GridDims {
    pub fn cell_count(&self) -> u32 {
        self.rows * self.cols
    }

    /// (row, col) of a row-major cell index.
    pub fn coords(&self, cell: u32) -> (i32, i32) {
        ((cell / self.cols) as i32, (cell % self.cols) as i32)
    }

    pub fn manhattan(&self, a: u32, b: u32) -> u32 {
        let (ar, ac) = self.coords(a);
        let (br, bc) = self.coords(b);
        ((ar - br).abs() + (ac - bc).abs()) as u32
    }

    pub fn euclidean(&self, a: u32, b: u32) -> f64 {
        let (ar, ac) = self.coords(a);
        let (br, bc) = self.coords(b);
        (((ar - br).pow(2) + (ac - bc).pow(2)) as f64).sqrt()
    }

    /// One cell along a shortest grid path from `from` toward `to`,
    /// reducing the row gap first, then the column gap. Returns `from`
    /// when already there.
    pub fn step_toward(&self, from: u32, to: u32) -> u32 {
        let (fr, fc) = self.coords(from);
        let (tr, tc) = self.coords(to);
        if fr != tr {
            let nr = if tr > fr { fr + 1 } else { fr - 1 };
            (nr as u32) * self.cols + fc as u32
        } else if fc != tc {
            let nc = if tc > fc { fc + 1 } else { fc - 1 };
            (fr as u32) * self.cols + nc as u32
        } else {
            from
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Manhattan,
    Euclidean,
}

/// How per-goal range flags evolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeDynamics {
    /// Flags are frozen; the recharge action sets all of them.
    StaticUntilRecharge,
    /// On every epoch where the vehicle moves, one currently-set flag
    /// drops with the given probability (uniform over set flags).
    /// Recharge still restores all flags.
    Decay { probability: f64 },
}

/// Per-decision-class fault transition kernels, each a row-stochastic
/// `fault_count x fault_count` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultKernels {
    pub normal: Vec<Vec<f64>>,
    pub agile: Vec<Vec<f64>>,
    pub recharge: Vec<Vec<f64>>,
    pub repair: Vec<Vec<f64>>,
}

impl FaultKernels {
    /// The same kernel for every decision class.
    pub fn uniform(kernel: Vec<Vec<f64>>) -> FaultKernels {
        FaultKernels {
            normal: kernel.clone(),
            agile: kernel.clone(),
            recharge: kernel.clone(),
            repair: kernel,
        }
    }

    pub fn class(&self, class: DecisionClass) -> &Vec<Vec<f64>> {
        match class {
            DecisionClass::Normal => &self.normal,
            DecisionClass::Agile => &self.agile,
            DecisionClass::Recharge => &self.recharge,
            DecisionClass::Repair => &self.repair,
        }
    }
}

/// Which fault kernel a decision engages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionClass {
    Normal,
    Agile,
    Recharge,
    Repair,
}

/// Complete declarative description of a mission MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layout: StateLayout,
    pub grid: GridDims,
    /// Grid cell of each goal, length `goal_count`.
    pub goal_cells: Vec<u32>,
    /// Repair/recharge cell.
    pub base_cell: u32,
    /// Discount factor in (0, 1).
    pub discount: f64,
    /// Goal weights (eta), length `goal_count`, each >= 0.
    pub goal_weights: Vec<f64>,
    /// Out-of-range penalties (delta), length `goal_count`, each >= 0.
    pub range_penalties: Vec<f64>,
    /// Fault penalty table: `fault_penalties[f-1][flag]`, flag 1 when the
    /// mission is fully in range, 0 otherwise. Entries >= 0.
    pub fault_penalties: Vec<[f64; 2]>,
    /// Threat penalty table: `threat_penalties[t][m]`, entries >= 0.
    pub threat_penalties: Vec<Vec<f64>>,
    pub distance_metric: DistanceMetric,
    /// Multiplier on the metric distance in the movement cost term.
    pub distance_scale: f64,
    pub fault_kernel: FaultKernels,
    /// One 3x3 row-stochastic priority kernel per goal.
    pub priority_kernels: Vec<Vec<Vec<f64>>>,
    /// Row-stochastic `threat_count x threat_count` kernel.
    pub threat_kernel: Vec<Vec<f64>>,
    pub range_dynamics: RangeDynamics,
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Graded fault penalties used by the shipped configurations: zero when
/// healthy, rising with severity, identical in and out of range.
fn default_fault_penalties(fault_count: u32) -> Vec<[f64; 2]> {
    let grades = [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0];
    (0..fault_count as usize)
        .map(|f| {
            let v = if f < grades.len() {
                grades[f]
            } else {
                grades[grades.len() - 1]
            };
            [v, v]
        })
        .collect()
}

/// Threat/mode penalties: free in calm normal flight, a small toll for
/// unnecessary agility, steep for facing a high threat in normal mode.
fn default_threat_penalties() -> Vec<Vec<f64>> {
    vec![vec![0.0, 5.0], vec![15.0, 8.0], vec![40.0, 10.0]]
}

/// Priority churn: high-priority goals occasionally get downgraded or
/// withdrawn by the base station; achieved goals stay achieved.
fn default_priority_kernel() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 0.0, 0.0],
        vec![0.05, 0.95, 0.0],
        vec![0.02, 0.08, 0.90],
    ]
}

impl ModelConfig {
    /// Three-goal mission on the 4x2 grid: 331,776 states, 10 actions.
    pub fn paper_three_goal() -> ModelConfig {
        let layout = StateLayout::new(8, 3, 8, 3, 2).expect("static layout");
        ModelConfig {
            layout,
            grid: GridDims { rows: 4, cols: 2 },
            goal_cells: vec![5, 6, 2],
            base_cell: 1,
            discount: 0.9,
            // One order of magnitude between tiers: mission-critical,
            // standard, opportunistic. Strict tiers keep the optimal
            // service order unambiguous at every state.
            goal_weights: vec![100.0, 10.0, 1.0],
            range_penalties: vec![0.0, 0.0, 0.0],
            fault_penalties: default_fault_penalties(8),
            threat_penalties: default_threat_penalties(),
            distance_metric: DistanceMetric::Manhattan,
            distance_scale: 0.0,
            fault_kernel: FaultKernels::uniform(identity(8)),
            priority_kernels: vec![default_priority_kernel(); 3],
            threat_kernel: identity(3),
            range_dynamics: RangeDynamics::StaticUntilRecharge,
        }
    }

    /// Single-goal mission used for duty-cycle rollouts: 4,608 states,
    /// 6 actions, goal at cell 5, base at cell 1, slow fault drift that
    /// the repair action reverses.
    pub fn paper_single_goal() -> ModelConfig {
        let layout = StateLayout::new(8, 1, 8, 3, 2).expect("static layout");
        let drift = {
            // Each epoch of flight: stay with 0.98, degrade one mode with 0.02.
            let n = 8usize;
            (0..n)
                .map(|f| {
                    let mut row = vec![0.0; n];
                    if f + 1 < n {
                        row[f] = 0.98;
                        row[f + 1] = 0.02;
                    } else {
                        row[f] = 1.0;
                    }
                    row
                })
                .collect::<Vec<_>>()
        };
        let repair = {
            // Repair pulls hard toward the healthy mode.
            let n = 8usize;
            (0..n)
                .map(|f| {
                    let mut row = vec![0.0; n];
                    if f == 0 {
                        row[0] = 1.0;
                    } else {
                        row[0] = 0.9;
                        row[f] = 0.1;
                    }
                    row
                })
                .collect::<Vec<_>>()
        };
        ModelConfig {
            layout,
            grid: GridDims { rows: 4, cols: 2 },
            goal_cells: vec![5],
            base_cell: 1,
            discount: 0.9,
            goal_weights: vec![10.0],
            range_penalties: vec![15.0],
            fault_penalties: default_fault_penalties(8),
            threat_penalties: default_threat_penalties(),
            distance_metric: DistanceMetric::Manhattan,
            distance_scale: 0.0,
            fault_kernel: FaultKernels {
                normal: drift.clone(),
                agile: drift.clone(),
                recharge: drift,
                repair,
            },
            priority_kernels: vec![identity(3)],
            threat_kernel: identity(3),
            range_dynamics: RangeDynamics::StaticUntilRecharge,
        }
    }

    /// Default-parameter mission with `goals` goals on the 4x2 grid,
    /// used by the scaling sweep. Goal cells cycle over the grid.
    pub fn for_goals(goals: u32) -> Result<ModelConfig> {
        let layout = StateLayout::new(8, goals, 8, 3, 2)?;
        let base = ModelConfig::paper_three_goal();
        let cells: Vec<u32> = (0..goals).map(|j| [5u32, 6, 2, 7, 0, 3, 4, 1][j as usize % 8]).collect();
        Ok(ModelConfig {
            layout,
            goal_cells: cells,
            goal_weights: (0..goals).map(|j| 16.0 - (j as f64) * 2.0).map(|w| w.max(2.0)).collect(),
            range_penalties: vec![15.0; goals as usize],
            priority_kernels: vec![default_priority_kernel(); goals as usize],
            ..base
        })
    }

    /// Check every field; returns the full list of violations with
    /// document paths.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let k = self.layout.goal_count() as usize;
        let cells = self.layout.location_count();

        if self.grid.cell_count() != cells {
            v.push(format!(
                "grid: {}x{} has {} cells, layout.location_count is {cells}",
                self.grid.rows,
                self.grid.cols,
                self.grid.cell_count()
            ));
        }
        if self.goal_cells.len() != k {
            v.push(format!(
                "goal_cells: expected length {k}, got {}",
                self.goal_cells.len()
            ));
        }
        for (j, &c) in self.goal_cells.iter().enumerate() {
            if c >= cells {
                v.push(format!("goal_cells[{j}]: cell {c} outside [0, {cells})"));
            }
        }
        if self.base_cell >= cells {
            v.push(format!(
                "base_cell: cell {} outside [0, {cells})",
                self.base_cell
            ));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            v.push(format!("discount: {} outside (0, 1)", self.discount));
        }
        Self::check_weights(&mut v, "goal_weights", &self.goal_weights, k);
        Self::check_weights(&mut v, "range_penalties", &self.range_penalties, k);
        if self.fault_penalties.len() != self.layout.fault_count() as usize {
            v.push(format!(
                "fault_penalties: expected {} rows, got {}",
                self.layout.fault_count(),
                self.fault_penalties.len()
            ));
        }
        for (f, row) in self.fault_penalties.iter().enumerate() {
            for (flag, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    v.push(format!("fault_penalties[{f}][{flag}]: {p} is negative"));
                }
            }
        }
        if self.threat_penalties.len() != self.layout.threat_count() as usize {
            v.push(format!(
                "threat_penalties: expected {} rows, got {}",
                self.layout.threat_count(),
                self.threat_penalties.len()
            ));
        }
        for (t, row) in self.threat_penalties.iter().enumerate() {
            if row.len() != self.layout.mode_count() as usize {
                v.push(format!(
                    "threat_penalties[{t}]: expected {} modes, got {}",
                    self.layout.mode_count(),
                    row.len()
                ));
            }
            for (m, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    v.push(format!("threat_penalties[{t}][{m}]: {p} is negative"));
                }
            }
        }
        if self.distance_scale < 0.0 {
            v.push(format!(
                "distance_scale: {} is negative",
                self.distance_scale
            ));
        }

        let fc = self.layout.fault_count() as usize;
        for (name, kernel) in [
            ("fault_kernel.normal", &self.fault_kernel.normal),
            ("fault_kernel.agile", &self.fault_kernel.agile),
            ("fault_kernel.recharge", &self.fault_kernel.recharge),
            ("fault_kernel.repair", &self.fault_kernel.repair),
        ] {
            Self::check_kernel(&mut v, name, kernel, fc);
        }
        if self.priority_kernels.len() != k {
            v.push(format!(
                "priority_kernels: expected {k} kernels, got {}",
                self.priority_kernels.len()
            ));
        }
        for (j, kernel) in self.priority_kernels.iter().enumerate() {
            Self::check_kernel(&mut v, &format!("priority_kernels[{j}]"), kernel, 3);
        }
        Self::check_kernel(
            &mut v,
            "threat_kernel",
            &self.threat_kernel,
            self.layout.threat_count() as usize,
        );
        if let RangeDynamics::Decay { probability } = self.range_dynamics {
            if !(0.0..=1.0).contains(&probability) {
                v.push(format!(
                    "range_dynamics.probability: {probability} outside [0, 1]"
                ));
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    fn check_weights(v: &mut Vec<String>, name: &str, weights: &[f64], expect: usize) {
        if weights.len() != expect {
            v.push(format!(
                "{name}: expected length {expect}, got {}",
                weights.len()
            ));
        }
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 {
                v.push(format!("{name}[{i}]: {w} is negative"));
            }
        }
    }

    fn check_kernel(v: &mut Vec<String>, name: &str, kernel: &[Vec<f64>], n: usize) {
        if kernel.len() != n {
            v.push(format!("{name}: expected {n} rows, got {}", kernel.len()));
            return;
        }
        for (i, row) in kernel.iter().enumerate() {
            if row.len() != n {
                v.push(format!(
                    "{name}[{i}]: expected {n} entries, got {}",
                    row.len()
                ));
                continue;
            }
            let mut sum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    v.push(format!("{name}[{i}][{j}]: {p} outside [0, 1]"));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                v.push(format!("{name}[{i}]: row sums to {sum}, expected 1"));
            }
        }
    }

    /// Distance from `cell` to `target` under the configured metric,
    /// scaled by `distance_scale`.
    pub fn travel_cost(&self, cell: u32, target: u32) -> f64 {
        let d = match self.distance_metric {
            DistanceMetric::Manhattan => self.grid.manhattan(cell, target) as f64,
            DistanceMetric::Euclidean => self.grid.euclidean(cell, target),
        };
        self.distance_scale * d
    }
}
