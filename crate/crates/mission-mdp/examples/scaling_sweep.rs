//! Scalability: exact state counts for 1..=10 goals, measured solve times
//! where feasible, and the log-log power-law fit.
//!
//! ```bash
//! cargo run --release -p mission-mdp --example scaling_sweep
//! ```

use mission_mdp::scaling::{fit_power_law, sweep_csv, sweep_goals};

fn main() {
    // Exact counts everywhere; wall-time measurements up to two goals
    // (the three-goal solve alone takes over a minute).
    let sweep = sweep_goals(1, 10, 2, None).unwrap();
    println!("goals  states           measured");
    for p in &sweep.points {
        println!(
            "{:>5}  {:<15}  {}",
            p.goals,
            p.state_count,
            match p.measured_solve_seconds {
                Some(t) => format!("{t:.3}s"),
                None => "-".into(),
            }
        );
    }

    let measured: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .filter_map(|p| p.measured_solve_seconds.map(|t| (p.state_count as f64, t)))
        .collect();
    let fit = fit_power_law(&measured).unwrap();
    println!(
        "\npower law through the measured points: T = {:.3e} * N^{:.3} (r^2 = {:.4})",
        fit.coefficient, fit.exponent, fit.r_squared
    );
    println!("extrapolated solve times:");
    for p in &sweep.points {
        if p.extrapolated {
            println!(
                "  g={:<2} ~{:.1e} s",
                p.goals,
                fit.predict(p.state_count as f64)
            );
        }
    }

    // The CSV the bench verb writes for external plotting.
    println!("\nsweep.csv:\n{}", sweep_csv(&sweep, Some(&fit)));
}
