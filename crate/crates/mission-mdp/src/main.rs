//! Command-line front end: build/validate mission models, solve them,
//! decompose, recombine, verify, simulate and benchmark. Each verb is a
//! thin wrapper over the library; the runnable examples cover the same
//! ground with commentary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use mission_mdp::decompose::{decompose, Criterion, ScoreWeights};
use mission_mdp::io::{agreement_csvs, fnv1a64, policy_from_str, policy_to_string, residual_csv};
use mission_mdp::mdp::Mdp;
use mission_mdp::recombine::{build_combined_policy, solve_all, MetaMode, PriorityParams};
use mission_mdp::rng::SimRng;
use mission_mdp::scaling::{compare_global_vs_decomposed, fit_power_law, sweep_csv, sweep_goals};
use mission_mdp::sim::{run_mission, trajectory_csv, Scenario};
use mission_mdp::solver::{extract_policy, value_iteration, SolveOptions};
use mission_mdp::verify::{random_product, verify_policy_equivalence_capped};
use mission_mdp::{compare_policies, validate_model, Error, MdpModel, ModelConfig};

#[derive(Parser)]
#[command(
    name = "mission-mdp",
    version,
    about = "Factored-MDP mission planning: build, solve, decompose, recombine, verify",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Goal,
    Location,
    Fault,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Criterion {
        match c {
            CriterionArg::Goal => Criterion::Goal,
            CriterionArg::Location => Criterion::Location,
            CriterionArg::Fault => Criterion::Fault,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Priority,
    BestValue,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Sweep,
    Pipeline,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model configuration and the model built from it.
    Validate {
        /// Config path or builtin name (paper1goal, paper3goal).
        #[arg(long)]
        config: String,
    },
    /// Solve a configuration by value iteration.
    Solve {
        #[arg(long)]
        config: String,
        /// Sup-norm convergence tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_sweeps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver worker threads (0 = host parallelism).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Partition a model into sub-MDPs and print the plan.
    Decompose {
        #[arg(long)]
        config: String,
        #[arg(long, value_enum, default_value_t = CriterionArg::Goal)]
        criterion: CriterionArg,
        #[arg(long, default_value_t = 100_000)]
        t_max: usize,
        /// Merge-score threshold for the mixed step.
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every sub-MDP and assemble the combined global policy.
    Recombine {
        #[arg(long)]
        config: String,
        #[arg(long, value_enum, default_value_t = ModeArg::BestValue)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify policy equivalence on random independent-factor products.
    Verify {
        /// Number of independent factors per product.
        #[arg(long, default_value_t = 3)]
        factors: usize,
        /// Number of random products to check.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Brute-force cap on the product state count.
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a scenario under a solved policy.
    Simulate {
        #[arg(long)]
        config: String,
        /// Policy file produced by `solve` or `recombine`; solved fresh
        /// when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Scenario JSON path, or the builtin name `case1`.
        #[arg(long, default_value = "case1")]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scalability sweep or global-vs-decomposed pipeline comparison.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchMode::Sweep)]
        mode: BenchMode,
        #[arg(long, default_value_t = 1)]
        g_min: u32,
        #[arg(long, default_value_t = 10)]
        g_max: u32,
        /// Solve (and time) models up to this goal count.
        #[arg(long, default_value_t = 1)]
        solve_up_to: u32,
        /// Wall-clock budget in seconds for the measuring phase.
        #[arg(long)]
        budget: Option<f64>,
        /// Config for pipeline mode.
        #[arg(long, default_value = "paper3goal")]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two policy files state-by-state.
    Compare {
        #[arg(long)]
        config: String,
        #[arg(long)]
        policy_a: PathBuf,
        #[arg(long)]
        policy_b: PathBuf,
        /// Count equal-value actions as matches (solves the model once).
        #[arg(long, default_value_t = false)]
        tie_aware: bool,
        /// Exit nonzero unless the match is 100%.
        #[arg(long, default_value_t = false)]
        require_exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

/// Resolve `--config`: builtin names first, then a JSON file path.
fn load_config(spec: &str) -> Result<ModelConfig, Error> {
    match spec {
        "paper3goal" | "paper_three_goal" => Ok(ModelConfig::paper_three_goal()),
        "paper1goal" | "paper_single_goal" => Ok(ModelConfig::paper_single_goal()),
        path => {
            let text = std::fs::read_to_string(path)?;
            let config: ModelConfig = serde_json::from_str(&text)?;
            Ok(config)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, Error> {
    let dir = flag
        .or_else(|| std::env::var_os("MISSION_MDP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn env_threads(flag: usize) -> usize {
    if flag != 0 {
        return flag;
    }
    std::env::var("MISSION_MDP_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

/// Written files plus provenance, emitted as `manifest.json`.
struct Manifest {
    command: String,
    config_hash: Option<u64>,
    seed: Option<u64>,
    outputs: Vec<(String, u64)>,
}

impl Manifest {
    fn new(command: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            config_hash: None,
            seed: None,
            outputs: Vec::new(),
        }
    }

    fn config(mut self, config: &ModelConfig) -> Manifest {
        let bytes = serde_json::to_vec(config).expect("config serializes");
        self.config_hash = Some(fnv1a64(&bytes));
        self
    }

    fn seed(mut self, seed: u64) -> Manifest {
        self.seed = Some(seed);
        self
    }

    fn write_text(&mut self, dir: &Path, name: &str, content: &str) -> Result<(), Error> {
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        self.outputs
            .push((name.to_string(), fnv1a64(content.as_bytes())));
        println!("wrote {}", path.display());
        Ok(())
    }

    fn finish(&self, dir: &Path) -> Result<(), Error> {
        let mut doc = BTreeMap::new();
        doc.insert("tool_version", serde_json::json!(env!("CARGO_PKG_VERSION")));
        doc.insert("command", serde_json::json!(self.command));
        if let Some(h) = self.config_hash {
            doc.insert("config_hash", serde_json::json!(format!("{h:016x}")));
        }
        if let Some(s) = self.seed {
            doc.insert("seed", serde_json::json!(s));
        }
        doc.insert(
            "outputs",
            serde_json::json!(self
                .outputs
                .iter()
                .map(|(name, hash)| {
                    serde_json::json!({ "path": name, "fnv1a64": format!("{hash:016x}") })
                })
                .collect::<Vec<_>>()),
        );
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            cfg.validate()?;
            let model = MdpModel::build(cfg)?;
            let report = validate_model(&model);
            if report.is_empty() {
                println!(
                    "ok: {} states x {} actions, all transition rows stochastic, all costs non-negative",
                    model.num_states(),
                    model.num_actions()
                );
                Ok(0)
            } else {
                eprintln!(
                    "model defects: {} bad distributions, {} negative costs",
                    report.bad_distribution_count, report.negative_cost_count
                );
                Ok(1)
            }
        }

        Command::Solve {
            config,
            tol,
            max_sweeps,
            out,
            threads,
        } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out)?;
            let model = MdpModel::build(cfg.clone())?;
            let opts = SolveOptions {
                tolerance: tol,
                max_sweeps,
                threads: env_threads(threads),
            };
            let (v, report) = value_iteration(&model, opts);
            let policy = extract_policy(&model, &v);
            println!(
                "solved {} states in {} sweeps ({:.2}s), converged: {}",
                model.num_states(),
                report.iterations,
                report.wall_time_seconds,
                report.converged
            );
            let mut manifest = Manifest::new("solve").config(&cfg);
            manifest.write_text(
                &dir,
                "policy.txt",
                &policy_to_string(&policy, model.layout(), model.num_actions()),
            )?;
            manifest.write_text(&dir, "residuals.csv", &residual_csv(&report.residual_history))?;
            manifest.finish(&dir)?;
            if report.converged {
                Ok(0)
            } else {
                eprintln!("warning: not converged within {max_sweeps} sweeps");
                Ok(2)
            }
        }

        Command::Decompose {
            config,
            criterion,
            t_max,
            threshold,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out)?;
            let model = MdpModel::build(cfg.clone())?;
            let plan = decompose(
                &model,
                criterion.into(),
                t_max,
                ScoreWeights::default(),
                threshold,
            )?;
            let summary = plan.summary();
            println!(
                "{:<4} {:<10} {:<22} {:>10} {:>8} {:>12}",
                "id", "kind", "focus", "states", "actions", "score"
            );
            for sub in &summary.subs {
                println!(
                    "{:<4} {:<10} {:<22} {:>10} {:>8} {:>12.4}",
                    sub.id,
                    format!("{:?}", sub.kind).to_lowercase(),
                    sub.focus,
                    sub.states,
                    sub.actions,
                    sub.score.total
                );
            }
            for w in &summary.warnings {
                println!("note: {w}");
            }
            let mut manifest = Manifest::new("decompose").config(&cfg);
            manifest.write_text(&dir, "plan.json", &serde_json::to_string_pretty(&summary)?)?;
            manifest.finish(&dir)?;
            Ok(0)
        }

        Command::Recombine {
            config,
            mode,
            tol,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out)?;
            let model = MdpModel::build(cfg.clone())?;
            let t_max = model.num_states();
            let plan = decompose(&model, Criterion::Goal, t_max, ScoreWeights::default(), 0.0)?;
            let solutions = solve_all(&plan, tol, &PriorityParams::default())?;
            for s in &solutions {
                println!(
                    "sub {}: priority {:.3}, expected return {:.3}",
                    s.sub_id, s.priority, s.expected_return
                );
            }
            let meta = match mode {
                ModeArg::Priority => MetaMode::Priority,
                ModeArg::BestValue => MetaMode::BestValue,
            };
            let combined = build_combined_policy(&plan, &solutions, &model, meta)?;
            let mut manifest = Manifest::new("recombine").config(&cfg);
            manifest.write_text(
                &dir,
                "combined_policy.txt",
                &policy_to_string(&combined, model.layout(), model.num_actions()),
            )?;
            manifest.write_text(
                &dir,
                "plan.json",
                &serde_json::to_string_pretty(&plan.summary())?,
            )?;
            manifest.finish(&dir)?;
            Ok(0)
        }

        Command::Verify {
            factors,
            count,
            max_states,
            seed,
            out,
        } => {
            let dir = out_dir(out)?;
            let mut rng = SimRng::new(seed);
            let mut reports = Vec::new();
            let mut all_match = true;
            for i in 0..count {
                let product = loop {
                    let p = random_product(factors, &mut rng);
                    if mission_mdp::mdp::Mdp::num_states(&p) <= max_states {
                        break p;
                    }
                };
                let report = verify_policy_equivalence_capped(&product, 1e-6, max_states)?;
                println!(
                    "product {i}: {} states, agreement {:.4}%, additive deviation {:.3e}",
                    report.factor_state_counts.iter().product::<usize>(),
                    report.agreement.match_percent,
                    report.additive_value_deviation
                );
                all_match &= report.agreement.match_percent == 100.0;
                reports.push(report);
            }
            let doc = serde_json::json!({
                "seed": seed,
                "factors": factors,
                "count": count,
                "reports": reports,
            });
            let mut manifest = Manifest::new("verify").seed(seed);
            manifest.write_text(&dir, "equivalence.json", &serde_json::to_string_pretty(&doc)?)?;
            manifest.finish(&dir)?;
            Ok(if all_match { 0 } else { 1 })
        }

        Command::Simulate {
            config,
            policy,
            scenario,
            seed,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out)?;
            let model = MdpModel::build(cfg.clone())?;
            let (pol, policy_hash) = match policy {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    let (p, layout, _) = policy_from_str(&text)?;
                    if &layout != model.layout() {
                        return Err(Error::contract(
                            "policy file layout does not match the configuration",
                        ));
                    }
                    (p, fnv1a64(text.as_bytes()))
                }
                None => {
                    let (v, _) = value_iteration(&model, SolveOptions::with_tolerance(1e-9));
                    let p = extract_policy(&model, &v);
                    let text = policy_to_string(&p, model.layout(), model.num_actions());
                    (p, fnv1a64(text.as_bytes()))
                }
            };
            let mut scn: Scenario = match scenario.as_str() {
                "case1" => Scenario::case_one(),
                path => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            };
            if let Some(s) = seed {
                scn.seed = s;
            }
            let traj = run_mission(&scn, &pol, &model)?;
            for r in &traj {
                println!(
                    "epoch {:>2}: l={} c={} g={:?} t={} m={} action {:>2} cost {:>7.2}{}",
                    r.epoch,
                    r.state.location,
                    r.state.commitment,
                    r.state.goal_priorities,
                    r.state.threat,
                    r.state.nav_mode,
                    r.action,
                    r.cost,
                    r.event_applied
                        .map(|e| format!("  [{}]", e.label()))
                        .unwrap_or_default()
                );
            }
            let config_hash = fnv1a64(&serde_json::to_vec(&cfg)?);
            let csv = trajectory_csv(&traj, model.layout(), scn.seed, config_hash, policy_hash);
            let mut manifest = Manifest::new("simulate").config(&cfg).seed(scn.seed);
            manifest.write_text(&dir, "trajectory.csv", &csv)?;
            manifest.finish(&dir)?;
            Ok(0)
        }

        Command::Bench {
            mode,
            g_min,
            g_max,
            solve_up_to,
            budget,
            config,
            out,
        } => {
            let dir = out_dir(out)?;
            match mode {
                BenchMode::Sweep => {
                    let sweep = sweep_goals(g_min, g_max, solve_up_to, budget)?;
                    let measured: Vec<(f64, f64)> = sweep
                        .points
                        .iter()
                        .filter_map(|p| p.measured_solve_seconds.map(|t| (p.state_count as f64, t)))
                        .collect();
                    let fit = if measured.len() >= 2 {
                        Some(fit_power_law(&measured)?)
                    } else {
                        None
                    };
                    for p in &sweep.points {
                        println!(
                            "g={:<2} states={:<15} {}",
                            p.goals,
                            p.state_count,
                            match p.measured_solve_seconds {
                                Some(t) => format!("measured {t:.3}s"),
                                None => "extrapolated".to_string(),
                            }
                        );
                    }
                    if let Some(f) = &fit {
                        println!(
                            "power law: T = {:.3e} * N^{:.3} (r^2 = {:.6})",
                            f.coefficient, f.exponent, f.r_squared
                        );
                    }
                    for d in &sweep.diagnostics {
                        println!("note: {d}");
                    }
                    let mut manifest = Manifest::new("bench sweep");
                    manifest.write_text(&dir, "sweep.csv", &sweep_csv(&sweep, fit.as_ref()))?;
                    if let Some(f) = &fit {
                        manifest.write_text(&dir, "fit.json", &serde_json::to_string_pretty(f)?)?;
                    }
                    manifest.finish(&dir)?;
                    Ok(0)
                }
                BenchMode::Pipeline => {
                    let cfg = load_config(&config)?;
                    let record = compare_global_vs_decomposed(&cfg, 1e-9, 1e-9)?;
                    println!(
                        "global: {} states, {:.2}s; decomposed: {:?} states, {:.2}s; speedup x{:.0}",
                        record.global_states,
                        record.global_solve_seconds,
                        record.sub_state_counts,
                        record.decomposed_pipeline_seconds,
                        record.speedup
                    );
                    println!(
                        "memory proxy: {} vs {} bytes (x{:.1}); agreement {:.4}% (tie-aware)",
                        record.global_memory_proxy_bytes,
                        record.decomposed_memory_proxy_bytes,
                        record.memory_ratio,
                        record.agreement.match_percent
                    );
                    let mut manifest = Manifest::new("bench pipeline").config(&cfg);
                    manifest.write_text(
                        &dir,
                        "pipeline.json",
                        &serde_json::to_string_pretty(&record)?,
                    )?;
                    manifest.finish(&dir)?;
                    Ok(0)
                }
            }
        }

        Command::Compare {
            config,
            policy_a,
            policy_b,
            tie_aware,
            require_exact,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dir = out_dir(out)?;
            let model = MdpModel::build(cfg.clone())?;
            let (pa, la, _) = policy_from_str(&std::fs::read_to_string(&policy_a)?)?;
            let (pb, lb, _) = policy_from_str(&std::fs::read_to_string(&policy_b)?)?;
            if &la != model.layout() || &lb != model.layout() {
                return Err(Error::contract(
                    "policy file layouts do not match the configuration",
                ));
            }
            let tie = if tie_aware {
                let (v, _) = value_iteration(&model, SolveOptions::with_tolerance(1e-9));
                Some(v)
            } else {
                None
            };
            let report = compare_policies(&pa, &pb, &model, tie.as_ref().map(|v| (v, 1e-9)))?;
            println!(
                "{} / {} matching ({:.4}%), {} mismatching",
                report.matching, report.total_states, report.match_percent, report.mismatching
            );
            let (counts, percent) = agreement_csvs(&report);
            let mut manifest = Manifest::new("compare").config(&cfg);
            manifest.write_text(&dir, "agreement.json", &serde_json::to_string_pretty(&report)?)?;
            manifest.write_text(&dir, "agreement_counts.csv", &counts)?;
            manifest.write_text(&dir, "agreement_percent.csv", &percent)?;
            manifest.finish(&dir)?;
            if require_exact && report.match_percent < 100.0 {
                Ok(1)
            } else {
                Ok(0)
            }
        }
    }
}
