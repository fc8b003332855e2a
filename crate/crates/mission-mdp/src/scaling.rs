//! Scalability harness: goal-count sweeps with exact state counts and
//! measured solve times, a log-log power-law fit, and a desk-scale
//! global-vs-decomposed pipeline comparison.

use std::time::Instant;

use serde::Serialize;

use crate::config::ModelConfig;
use crate::decompose::{decompose, Criterion, ScoreWeights};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::model::MdpModel;
use crate::recombine::{build_combined_policy, solve_all, MetaMode, PriorityParams};
use crate::solver::{extract_policy, value_iteration, SolveOptions};
use crate::state::{MissionState, StateLayout};
use crate::verify::{compare_next_state, compare_policies, NextStateDiff, PolicyComparisonReport};

/// One goal count in a scalability sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ScalePoint {
    pub goals: u32,
    /// Exact state count (closed form, unbounded precision).
    pub state_count: u128,
    /// Wall-clock seconds of a converged solve, when measured.
    pub measured_solve_seconds: Option<f64>,
    /// True when the point's time is beyond the measurement range and
    /// only the fit speaks for it.
    pub extrapolated: bool,
}

/// Least-squares power law `T = coefficient * N^exponent` on log-log axes.
#[derive(Debug, Clone, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn predict(&self, state_count: f64) -> f64 {
        self.coefficient * state_count.powf(self.exponent)
    }
}

/// Sweep results plus diagnostics for skipped measurements.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<ScalePoint>,
    pub diagnostics: Vec<String>,
}

/// Count states for every goal count in `[g_min, g_max]` and measure
/// solve times up to `solve_up_to` goals (median of three runs for small
/// cases, single run above). A wall-clock budget, when given, cuts the
/// measuring short with a diagnostic instead of failing the sweep.
pub fn sweep_goals(
    g_min: u32,
    g_max: u32,
    solve_up_to: u32,
    budget_seconds: Option<f64>,
) -> Result<SweepResult> {
    if g_min < 1 || g_min > g_max {
        return Err(Error::contract(format!(
            "goal range [{g_min}, {g_max}] is empty or starts below 1"
        )));
    }
    let started = Instant::now();
    let mut points = Vec::new();
    let mut diagnostics = Vec::new();
    for goals in g_min..=g_max {
        let layout = StateLayout::new(8, goals, 8, 3, 2)?;
        let state_count = layout.state_count();
        let mut measured = None;
        if goals <= solve_up_to {
            if let Some(budget) = budget_seconds {
                if started.elapsed().as_secs_f64() > budget {
                    diagnostics.push(format!(
                        "budget of {budget}s exhausted before solving g={goals}"
                    ));
                    points.push(ScalePoint {
                        goals,
                        state_count,
                        measured_solve_seconds: None,
                        extrapolated: true,
                    });
                    continue;
                }
            }
            match measure_solve(goals) {
                Ok(seconds) => measured = Some(seconds),
                Err(e) => diagnostics.push(format!("g={goals} not measured: {e}")),
            }
        }
        points.push(ScalePoint {
            goals,
            state_count,
            measured_solve_seconds: measured,
            extrapolated: measured.is_none(),
        });
    }
    Ok(SweepResult {
        points,
        diagnostics,
    })
}

fn measure_solve(goals: u32) -> Result<f64> {
    let config = ModelConfig::for_goals(goals)?;
    let model = MdpModel::build(config)?;
    // Timings stay honest on small cases by taking the median of three.
    let runs = if goals <= 2 { 3 } else { 1 };
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let t = Instant::now();
        let (_, report) = value_iteration(&model, SolveOptions::with_tolerance(1e-6));
        if !report.converged {
            return Err(Error::contract(format!(
                "g={goals} solve did not converge"
            )));
        }
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(times[times.len() / 2])
}

/// Fit `log T = exponent * log N + log coefficient` by least squares over
/// `(state_count, seconds)` pairs. Needs at least two points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::contract(format!(
            "power-law fit needs at least 2 measured points, got {}",
            points.len()
        )));
    }
    for &(n, t) in points {
        if n <= 0.0 || t <= 0.0 {
            return Err(Error::contract(
                "power-law fit needs positive counts and times",
            ));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::contract(
            "power-law fit is degenerate: all state counts equal",
        ));
    }
    let exponent = (m * sxy - sx * sy) / denom;
    let intercept = (sy - exponent * sx) / m;
    let mean_y = sy / m;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (exponent * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_res < 1e-24 {
        1.0
    } else if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(PowerLawFit {
        exponent,
        coefficient: intercept.exp(),
        r_squared,
    })
}

/// Sweep rendered as CSV: `goals,states,seconds,extrapolated`, with
/// fitted estimates filling unmeasured rows when a fit exists.
pub fn sweep_csv(sweep: &SweepResult, fit: Option<&PowerLawFit>) -> String {
    let mut out = String::from("goals,states,seconds,extrapolated\n");
    for p in &sweep.points {
        let seconds = match (p.measured_solve_seconds, fit) {
            (Some(s), _) => format!("{s:.6}"),
            (None, Some(f)) => format!("{:.6}", f.predict(p.state_count as f64)),
            (None, None) => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.goals, p.state_count, seconds, p.extrapolated
        ));
    }
    out
}

/// Side-by-side record of one global solve versus the full
/// decompose-solve-recombine pipeline on the same configuration.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineComparison {
    pub global_states: usize,
    pub sub_state_counts: Vec<usize>,
    pub global_solve_seconds: f64,
    pub decomposed_pipeline_seconds: f64,
    pub speedup: f64,
    /// Solver working set: two value buffers plus one policy array per
    /// solved MDP, in bytes. Recombination outputs are excluded on both
    /// sides so the proxies compare like with like.
    pub global_memory_proxy_bytes: u128,
    pub decomposed_memory_proxy_bytes: u128,
    pub memory_ratio: f64,
    pub agreement: PolicyComparisonReport,
    /// Successor comparison of the two policies at one representative
    /// state (three-goal configurations only).
    pub representative_state_diff: Option<NextStateDiff>,
}

/// The representative test state used for the next-state spot check on
/// three-goal missions, in flat field order `(f, r1..r3, g1..g3, l, c,
/// t, m)`.
pub const REPRESENTATIVE_TEST_STATE: [u32; 11] = [1, 1, 0, 1, 0, 2, 1, 1, 0, 2, 1];

fn solver_bytes(states: usize) -> u128 {
    // Two f64 value buffers and one u16 policy entry per state.
    (states as u128) * (2 * 8 + 2)
}

/// Solve the configuration globally, run the goal-decomposition pipeline,
/// and compare wall time, memory proxies and tie-aware policy agreement.
pub fn compare_global_vs_decomposed(
    config: &ModelConfig,
    tolerance: f64,
    tie_tolerance: f64,
) -> Result<PipelineComparison> {
    let model = MdpModel::build(config.clone())?;

    let t = Instant::now();
    let (v_global, report) = value_iteration(&model, SolveOptions::with_tolerance(tolerance));
    if !report.converged {
        return Err(Error::contract("global solve did not converge"));
    }
    let global_policy = extract_policy(&model, &v_global);
    let global_solve_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let t_max = StateLayout::new(
        config.layout.fault_count(),
        1,
        config.layout.location_count(),
        config.layout.threat_count(),
        config.layout.mode_count(),
    )?
    .state_count() as usize;
    let plan = decompose(&model, Criterion::Goal, t_max, ScoreWeights::default(), 0.0)?;
    let solutions = solve_all(&plan, tolerance, &PriorityParams::default())?;
    let combined = build_combined_policy(&plan, &solutions, &model, MetaMode::BestValue)?;
    let decomposed_pipeline_seconds = t.elapsed().as_secs_f64();

    let agreement = compare_policies(
        &combined,
        &global_policy,
        &model,
        Some((&v_global, tie_tolerance)),
    )?;

    let global_memory = solver_bytes(model.num_states());
    // Sub solves plus the goal-free background solve the pipeline runs.
    let decomposed_memory: u128 = plan
        .sub_mdps
        .iter()
        .map(|s| solver_bytes(s.model.num_states()))
        .sum::<u128>()
        + solver_bytes(t_max);

    // Spot check: do the two policies induce the same successor set at
    // the representative state?
    let representative_state_diff = if config.layout.goal_count() == 3 {
        let state = MissionState::from_flat(&REPRESENTATIVE_TEST_STATE, &config.layout)?;
        Some(compare_next_state(&state, &combined, &global_policy, &model)?)
    } else {
        None
    };

    Ok(PipelineComparison {
        global_states: model.num_states(),
        sub_state_counts: plan.sub_mdps.iter().map(|s| s.model.num_states()).collect(),
        global_solve_seconds,
        decomposed_pipeline_seconds,
        speedup: global_solve_seconds / decomposed_pipeline_seconds,
        global_memory_proxy_bytes: global_memory,
        decomposed_memory_proxy_bytes: decomposed_memory,
        memory_ratio: global_memory as f64 / decomposed_memory as f64,
        agreement,
        representative_state_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_counts_match_closed_form() {
        let sweep = sweep_goals(1, 10, 0, None).unwrap();
        let expected: Vec<u128> = (1..=10u32)
            .map(|g| 8 * 6u128.pow(g) * (g as u128 + 1) * 8 * 3 * 2)
            .collect();
        let got: Vec<u128> = sweep.points.iter().map(|p| p.state_count).collect();
        assert_eq!(got, expected);
        assert_eq!(got[0], 4_608);
        assert_eq!(got[1], 41_472);
        assert_eq!(got[2], 331_776);
        assert_eq!(got[3], 2_488_320);
        assert!(sweep.points.iter().all(|p| p.extrapolated));
    }

    #[test]
    fn measured_points_are_marked_and_monotone() {
        let sweep = sweep_goals(1, 3, 2, None).unwrap();
        let t1 = sweep.points[0].measured_solve_seconds.unwrap();
        let t2 = sweep.points[1].measured_solve_seconds.unwrap();
        assert!(!sweep.points[0].extrapolated);
        assert!(!sweep.points[1].extrapolated);
        assert!(sweep.points[2].extrapolated);
        assert!(t1 > 0.0);
        // Solve time grows with the state count (4,608 vs 41,472 states).
        assert!(t1 <= t2, "t(g=1)={t1:.3}s vs t(g=2)={t2:.3}s");
    }

    #[test]
    fn quadratic_synthetic_data_fits_exactly() {
        let points: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 5000.0]
            .iter()
            .map(|&n| (n, n * n))
            .collect();
        let fit = fit_power_law(&points).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_synthetic_data_recovers_coefficient() {
        let points: Vec<(f64, f64)> = [4.0, 32.0, 700.0].iter().map(|&n| (n, 3.0 * n)).collect();
        let fit = fit_power_law(&points).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9);
        assert!((fit.coefficient - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_point_slope_identity() {
        // Slope through (4608, t1), (331776, t2) is log(t2/t1)/log(72).
        let (t1, t2) = (0.8, 900.0);
        let fit = fit_power_law(&[(4_608.0, t1), (331_776.0, t2)]).unwrap();
        let expect = (t2 / t1).ln() / 72.0f64.ln();
        assert!((fit.exponent - expect).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(matches!(
            fit_power_law(&[(10.0, 1.0)]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn csv_covers_every_goal() {
        let sweep = sweep_goals(1, 5, 0, None).unwrap();
        let csv = sweep_csv(&sweep, None);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("goals,states,seconds,extrapolated"));
        assert!(csv.contains("3,331776"));
    }

    #[test]
    fn zero_budget_skips_measuring_with_diagnostics() {
        let sweep = sweep_goals(1, 2, 2, Some(0.0)).unwrap();
        assert!(sweep.points.iter().all(|p| p.extrapolated));
        assert!(!sweep.diagnostics.is_empty());
    }
}
