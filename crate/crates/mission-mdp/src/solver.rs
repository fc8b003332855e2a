//! Value iteration with sup-norm convergence, greedy policy extraction
//! and state-action value scoring.
//!
//! Sweeps are synchronous (Jacobi) over a double-buffered value array:
//! every state of sweep `t+1` reads only sweep `t`, so sweeps can be
//! split across threads over disjoint index ranges with one join per
//! sweep, and the result is identical for any thread count.

use std::time::Instant;

use crate::mdp::Mdp;

/// Expected discounted cost-to-go per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(n: usize) -> ValueFunction {
        ValueFunction {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// One action index per state (0-based; add 1 for the table ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<u16>,
}

impl Policy {
    pub fn action(&self, state: usize) -> usize {
        self.actions[state] as usize
    }
}

/// Convergence record of one value-iteration run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm of the update per sweep; contracts by gamma each sweep.
    pub residual_history: Vec<f64>,
    pub wall_time_seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Worker threads for sweeps; 0 means use the host parallelism.
    pub threads: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-6,
            max_sweeps: 10_000,
            threads: 0,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerance(tolerance: f64) -> SolveOptions {
        SolveOptions {
            tolerance,
            ..Default::default()
        }
    }

    fn effective_threads(&self, states: usize) -> usize {
        let hw = if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        };
        // Small problems are faster on one thread.
        if states < 16_384 {
            1
        } else {
            hw.max(1)
        }
    }
}

/// One synchronous sweep: `out[s] = min_a Q(s, a | v)`. Returns the
/// sup-norm of the update. Deterministic for any thread count.
fn sweep<M: Mdp>(model: &M, v: &[f64], out: &mut [f64], threads: usize) -> f64 {
    let n = v.len();
    if threads <= 1 || n < 2 * threads {
        let mut residual = 0.0f64;
        for s in 0..n {
            let (q, _) = model.min_q(s, v);
            residual = residual.max((q - v[s]).abs());
            out[s] = q;
        }
        return residual;
    }
    let chunk = n.div_ceil(threads);
    let mut residual = 0.0f64;
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for (i, slot) in out.chunks_mut(chunk).enumerate() {
            let start = i * chunk;
            handles.push(scope.spawn(move || {
                let mut local = 0.0f64;
                for (off, cell) in slot.iter_mut().enumerate() {
                    let s = start + off;
                    let (q, _) = model.min_q(s, v);
                    local = local.max((q - v[s]).abs());
                    *cell = q;
                }
                local
            }));
        }
        for h in handles {
            residual = residual.max(h.join().expect("sweep worker panicked"));
        }
    });
    residual
}

/// Solve `model` by value iteration from the zero value function.
///
/// Terminates when the sup-norm of an update falls below the tolerance,
/// or after `max_sweeps` sweeps with `converged = false` — running out
/// of budget is reported, not raised.
pub fn value_iteration<M: Mdp>(model: &M, opts: SolveOptions) -> (ValueFunction, SolveReport) {
    assert!(opts.tolerance > 0.0, "tolerance must be positive");
    let n = model.num_states();
    let threads = opts.effective_threads(n);
    let started = Instant::now();

    let mut v = vec![0.0f64; n];
    let mut v_next = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_sweeps {
        let residual = sweep(model, &v, &mut v_next, threads);
        history.push(residual);
        std::mem::swap(&mut v, &mut v_next);
        if residual < opts.tolerance {
            converged = true;
            break;
        }
    }

    let report = SolveReport {
        iterations: history.len(),
        residual_history: history,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        converged,
    };
    (ValueFunction { values: v }, report)
}

/// Greedy policy of a converged value function: per state the action
/// minimizing `J + gamma * sum P V`, ties to the lowest action index.
pub fn extract_policy<M: Mdp>(model: &M, v: &ValueFunction) -> Policy {
    let n = model.num_states();
    assert_eq!(v.len(), n, "value function does not match the model");
    let threads = SolveOptions::default().effective_threads(n);
    let mut actions = vec![0u16; n];
    if threads <= 1 {
        for (s, slot) in actions.iter_mut().enumerate() {
            let (_, a) = model.min_q(s, &v.values);
            *slot = a as u16;
        }
        return Policy { actions };
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (i, slot) in actions.chunks_mut(chunk).enumerate() {
            let start = i * chunk;
            let values = &v.values;
            scope.spawn(move || {
                for (off, cell) in slot.iter_mut().enumerate() {
                    let (_, a) = model.min_q(start + off, values);
                    *cell = a as u16;
                }
            });
        }
    });
    Policy { actions }
}

/// State-action scores in return form: `-J(s,a) + gamma * sum P W` with
/// `W = -V`, so the argmax over actions coincides with the policy's
/// argmin over costs.
pub fn state_action_values<M: Mdp>(model: &M, v: &ValueFunction, state: usize) -> Vec<f64> {
    (0..model.num_actions())
        .map(|a| -model.q_value(state, a, &v.values))
        .collect()
}

/// Sup-norm Bellman residual `max_s |V(s) - min_a Q(s, a | V)|`.
pub fn bellman_residual<M: Mdp>(model: &M, v: &ValueFunction) -> f64 {
    let n = model.num_states();
    assert_eq!(v.len(), n, "value function does not match the model");
    let mut residual = 0.0f64;
    for s in 0..n {
        let (q, _) = model.min_q(s, &v.values);
        residual = residual.max((v.values[s] - q).abs());
    }
    residual
}

/// Value of a fixed policy by iterative policy evaluation.
pub fn evaluate_policy<M: Mdp>(
    model: &M,
    policy: &Policy,
    tolerance: f64,
    max_sweeps: usize,
) -> ValueFunction {
    let n = model.num_states();
    assert_eq!(policy.actions.len(), n, "policy does not match the model");
    let mut v = vec![0.0f64; n];
    let mut v_next = vec![0.0f64; n];
    for _ in 0..max_sweeps {
        let mut residual = 0.0f64;
        for s in 0..n {
            let q = model.q_value(s, policy.action(s), &v);
            residual = residual.max((q - v[s]).abs());
            v_next[s] = q;
        }
        std::mem::swap(&mut v, &mut v_next);
        if residual < tolerance {
            break;
        }
    }
    ValueFunction { values: v }
}
