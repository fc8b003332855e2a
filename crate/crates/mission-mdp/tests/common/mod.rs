//! Brute-force oracles shared by the oracle and acceptance suites.
//!
//! Everything here is deliberately independent of the solver under test:
//! policies are enumerated exhaustively and evaluated by dense Gaussian
//! elimination on `(I - gamma * P_pi) V = J_pi`.

use mission_mdp::mdp::{Mdp, TabularMdp};

/// Solve a dense linear system in place; panics on singular input
/// (cannot happen for gamma < 1 transition matrices).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        // Partial pivot.
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 1e-12, "singular policy-evaluation system");
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// Exact value of a fixed stationary policy.
pub fn evaluate_policy_exact(mdp: &TabularMdp, policy: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let gamma = mdp.discount();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        for &(sp, p) in &mdp.transitions[s][policy[s]] {
            a[s][sp] -= gamma * p;
        }
        b[s] = mdp.cost(s, policy[s]);
    }
    solve_dense(a, b)
}

/// Enumerate every one of the `|A|^|S|` stationary deterministic policies,
/// evaluate each exactly, and return the pointwise-minimal value function
/// together with a policy attaining it.
pub fn enumerate_optimal(mdp: &TabularMdp) -> (Vec<f64>, Vec<usize>) {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let total = na.checked_pow(n as u32).expect("policy space fits");
    let mut best_values = vec![f64::INFINITY; n];
    let mut best_policy = vec![0usize; n];
    let mut best_sum = f64::INFINITY;
    for code in 0..total {
        let mut rem = code;
        let policy: Vec<usize> = (0..n)
            .map(|_| {
                let a = rem % na;
                rem /= na;
                a
            })
            .collect();
        let values = evaluate_policy_exact(mdp, &policy);
        let sum: f64 = values.iter().sum();
        for s in 0..n {
            if values[s] < best_values[s] {
                best_values[s] = values[s];
            }
        }
        if sum < best_sum {
            best_sum = sum;
            best_policy = policy;
        }
    }
    (best_values, best_policy)
}
