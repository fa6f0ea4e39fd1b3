//! `acbug` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::{design_bound, design_sequence, gap_estimates, ols, Embedding, MarginalActionSet};
use crate::env::ScmEnv;
use crate::error::{Error, Result};
use crate::gen::{gen_scm, GenConfig};
use crate::harness::{aggregate, records_csv, run_experiment, summary_csv, ExperimentConfig, RunOptions};
use crate::modl::{run_modl, theoretical_complexity, ModlParams};
use crate::scm::{best_global, Scm};

#[derive(Parser, Debug)]
#[command(name = "acbug", version, about = "Additive causal bandits with unknown graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one random SCM and write it as JSON.
    Gen {
        /// Generator config, or an experiment config whose `gen` block is used.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment sweep and write records, summary and choices.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Write per-phase MODL logs to phases.jsonl.
        #[arg(long)]
        dump_phases: bool,
    },
    /// Print the theoretical sample complexity for a saved SCM.
    Bound {
        #[arg(long)]
        scm: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Reward bound B; defaults to the generator's scale, else 5.
        #[arg(long)]
        reward_bound: Option<f64>,
    },
    /// Run built-in self-checks on small random instances.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Config(msg)) => {
            eprintln!("acbug: config error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("acbug: {msg}");
            1
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: Error) -> Failure {
    match e {
        Error::Input(m) => Failure::Config(m),
        other => Failure::Runtime(other.to_string()),
    }
}

fn read_config(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> std::result::Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Gen { config, out, seed } => {
            let text = read_config(&config)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(config_err)?;
            let block = value.get("gen").cloned().unwrap_or(value);
            let mut cfg: GenConfig = serde_json::from_value(block).map_err(config_err)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(config_err)?;
            let scm = gen_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).map_err(runtime_err)?;
            write_file(&out, &scm.to_json().map_err(runtime_err)?)
        }
        Command::Run { config, out, seed, jobs, dump_phases } => {
            let text = read_config(&config)?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(config_err)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.validate().map_err(config_err)?;
            if jobs == Some(0) {
                return Err(config_err("--jobs must be at least 1"));
            }
            let output = run_experiment(&cfg, &RunOptions { jobs, dump_phases }).map_err(runtime_err)?;
            fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            write_file(&out.join("records.csv"), &records_csv(&output.records))?;
            let summary = aggregate(&output.records).map_err(runtime_err)?;
            write_file(&out.join("summary.csv"), &summary_csv(&summary))?;
            let mut choices = String::new();
            for r in &output.records {
                let line = serde_json::json!({
                    "sweep_value": r.sweep_value,
                    "scm_idx": r.scm_idx,
                    "run_idx": r.run_idx,
                    "algorithm": r.algorithm,
                    "chosen": r.chosen,
                });
                choices.push_str(&line.to_string());
                choices.push('\n');
            }
            write_file(&out.join("choices.jsonl"), &choices)?;
            if dump_phases {
                let mut text = String::new();
                for d in &output.phases {
                    text.push_str(&serde_json::to_string(d).map_err(|e| Failure::Runtime(e.to_string()))?);
                    text.push('\n');
                }
                write_file(&out.join("phases.jsonl"), &text)?;
            }
            if output.skipped > 0 {
                eprintln!("acbug: skipped {} runs whose action space exceeds the arm cap", output.skipped);
            }
            Ok(())
        }
        Command::Bound { scm, epsilon, delta, reward_bound } => {
            let text = read_config(&scm)?;
            let scm = Scm::from_json(&text).map_err(config_err)?;
            let b = reward_bound
                .or_else(|| scm.meta.config.as_ref().map(|c| c.reward_scale))
                .unwrap_or(5.0);
            let params = ModlParams::new(epsilon, delta, scm.outcome.noise_sigma2, b);
            params.validate(scm.num_vars()).map_err(config_err)?;
            let bound = theoretical_complexity(&scm, &params).map_err(runtime_err)?;
            println!("h_eps {}", bound.h_eps);
            println!("h_eps_known_parents {}", bound.h_eps_known_py);
            println!("delta_min {}", bound.delta_min);
            Ok(())
        }
        Command::Validate { seed } => {
            let results = self_checks(seed).map_err(runtime_err)?;
            let mut stdout = std::io::stdout().lock();
            let mut all = true;
            for (name, ok) in &results {
                all &= ok;
                let _ = writeln!(stdout, "{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            if all {
                Ok(())
            } else {
                Err(Failure::Runtime("self-checks failed".into()))
            }
        }
    }
}

/// Fast sanity checks with exact expectations.
pub fn self_checks(seed: u64) -> Result<Vec<(&'static str, bool)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut gaps_ok = true;
    for i in 0..20 {
        let cfg = GenConfig { num_vars: 4, num_parents: 4, support_lo: 2, support_hi: 5, noise_sigma2: 0.0, seed: seed ^ i, ..GenConfig::default() };
        let scm = gen_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let supports = scm.supports();
        let set = MarginalActionSet::full(&supports);
        let n = crate::modl::min_phase_size(&set) * rng.random_range(2..5);
        let emb = Embedding::new(&supports);
        let actions = design_sequence(&set, n, &mut rng)?;
        let ys: Vec<f64> = actions.iter().map(|a| scm.outcome_mean(a)).collect();
        let est = ols(&actions, &ys, &emb)?;
        let gaps = gap_estimates(&est, &set, &emb);
        for (k, g) in gaps.vars.iter().enumerate() {
            let best = (0..supports[k]).map(|v| scm.effect(k, v)).fold(f64::NEG_INFINITY, f64::max);
            for (p, &v) in g.values.iter().enumerate() {
                gaps_ok &= (g.gaps[p] - (best - scm.effect(k, v))).abs() < 1e-8;
            }
        }
        gaps_ok &= design_bound(&set, n).is_ok_and(f64::is_finite);
    }
    out.push(("noiseless gaps are exact", gaps_ok));

    let mut modl_ok = true;
    for i in 0..5 {
        let cfg = GenConfig { num_vars: 5, num_parents: 3, noise_sigma2: 1e-6, seed: seed + i, ..GenConfig::default() };
        let scm = gen_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let params = ModlParams::new(0.5, 0.1, 1e-6, cfg.reward_scale);
        let mut env = ScmEnv::global(&scm, seed + i);
        let res = run_modl(&mut env, &params, &mut rng)?;
        let (_, best) = best_global(&scm)?;
        let got = crate::scm::interventional_mean(&scm, &env.intervention(&res.chosen), 0)?.0;
        modl_ok &= best - got <= 0.5;
    }
    out.push(("MODL is epsilon-optimal at low noise", modl_ok));
    Ok(out)
}
