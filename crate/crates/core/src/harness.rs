//! Experiment sweeps: seeded SCM generation, algorithm runs, ground-truth
//! evaluation, CSV output and aggregation.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_oracle, run_p1, run_se, ParentsTestConfig, DEFAULT_ARM_CAP};
use crate::env::ScmEnv;
use crate::error::{input, Error, Result};
use crate::gen::{gen_scm, GenConfig};
use crate::modl::{run_modl, ModlParams, PhaseLog, Schedule};
use crate::scm::{best_global, best_global_exhaustive, interventional_mean, Intervention, Scm};

pub const RECORDS_HEADER: &str =
    "sweep_param,sweep_value,scm_idx,run_idx,algorithm,samples,true_gap,success,pa_precision,pa_recall,wall_ms";
pub const SUMMARY_HEADER: &str = "sweep_param,sweep_value,algorithm,count,samples_mean,samples_stderr,true_gap_mean,true_gap_stderr,failure_rate,pa_precision_mean,pa_recall_mean";

/// Monte Carlo budget for ground-truth means that cannot be enumerated.
pub const EVAL_BUDGET: usize = 100_000;
/// Parent configurations enumerated when locating the optimum of a
/// non-additive outcome.
pub const EXHAUSTIVE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Modl,
    /// MODL told the true parent count.
    ModlKnownPy,
    P1,
    Oracle,
    Se,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Modl => "modl",
            Algorithm::ModlKnownPy => "modl_known_py",
            Algorithm::P1 => "p1",
            Algorithm::Oracle => "oracle",
            Algorithm::Se => "se",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NumParents,
    /// Shifts `support_hi` along so the template's width is kept.
    SupportLo,
    Degree,
    Alpha,
    NumVars,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NumParents => "num_parents",
            SweepParam::SupportLo => "support_lo",
            SweepParam::Degree => "degree",
            SweepParam::Alpha => "alpha",
            SweepParam::NumVars => "num_vars",
        }
    }

    pub fn apply(self, template: &GenConfig, value: f64) -> Result<GenConfig> {
        let mut cfg = template.clone();
        let as_count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                input(format!("sweep value {value} for {} must be a non-negative integer", self.name()))
            }
        };
        match self {
            SweepParam::NumParents => cfg.num_parents = as_count()?,
            SweepParam::SupportLo => {
                let width = template.support_hi.saturating_sub(template.support_lo);
                cfg.support_lo = as_count()?;
                cfg.support_hi = cfg.support_lo + width;
            }
            SweepParam::Degree => cfg.degree = value,
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::NumVars => cfg.num_vars = as_count()?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

fn default_arm_cap() -> usize {
    DEFAULT_ARM_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub gen: GenConfig,
    pub sweep: Sweep,
    pub algorithms: Vec<Algorithm>,
    pub epsilon: f64,
    pub delta: f64,
    pub num_scms: usize,
    pub runs_per_scm: usize,
    pub master_seed: u64,
    #[serde(default = "default_arm_cap")]
    pub arm_cap: usize,
    #[serde(default)]
    pub schedule: Schedule,
    /// Give every algorithm the same random streams within a run.
    #[serde(default)]
    pub common_random_numbers: bool,
    /// Fill the `wall_ms` column. Off by default so output is reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.values.is_empty() {
            return input("sweep needs at least one value");
        }
        if self.algorithms.is_empty() {
            return input("at least one algorithm is required");
        }
        if self.num_scms == 0 || self.runs_per_scm == 0 {
            return input("num_scms and runs_per_scm must be at least 1");
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return input("epsilon must be positive and delta in (0, 1)");
        }
        for &v in &self.sweep.values {
            self.sweep.param.apply(&self.gen, v)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn modl_params(&self, gen: &GenConfig) -> ModlParams {
        ModlParams::new(self.epsilon, self.delta, gen.noise_sigma2, gen.reward_scale).with_schedule(self.schedule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scm_idx: usize,
    pub run_idx: usize,
    pub algorithm: Algorithm,
    pub samples: usize,
    pub true_gap: f64,
    pub success: bool,
    pub pa_precision: Option<f64>,
    pub pa_recall: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Intervention the algorithm returned.
    pub chosen: Intervention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDump {
    pub sweep_value: f64,
    pub scm_idx: usize,
    pub run_idx: usize,
    pub algorithm: Algorithm,
    pub phases: Vec<PhaseLog>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub dump_phases: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    /// Runs refused because the product action space exceeded the arm cap.
    pub skipped: usize,
    pub phases: Vec<PhaseDump>,
    /// Generated models, indexed `[sweep_idx][scm_idx]`.
    pub scms: Vec<Vec<Scm>>,
}

/// Stable 64-bit seed from labelled parts.
pub fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn scm_seed(master: u64, sweep_value: f64, scm_idx: usize) -> u64 {
    derive_seed(&[b"scm", &master.to_le_bytes(), &sweep_value.to_bits().to_le_bytes(), &(scm_idx as u64).to_le_bytes()])
}

pub fn run_seed(master: u64, sweep_value: f64, scm_idx: usize, run_idx: usize, algorithm: Option<Algorithm>) -> u64 {
    let alg = algorithm.map_or("", Algorithm::name);
    derive_seed(&[
        b"run",
        &master.to_le_bytes(),
        &sweep_value.to_bits().to_le_bytes(),
        &(scm_idx as u64).to_le_bytes(),
        &(run_idx as u64).to_le_bytes(),
        alg.as_bytes(),
    ])
}

fn stream(seed: u64, label: &str) -> u64 {
    derive_seed(&[&seed.to_le_bytes(), label.as_bytes()])
}

/// Streams of one run: algorithm randomness, primary environment noise and
/// a second environment stream for two-stage methods.
#[derive(Debug, Clone, Copy)]
pub struct RunSeeds {
    pub algo: u64,
    pub env: u64,
    pub env2: u64,
}

impl RunSeeds {
    pub fn from_run_seed(seed: u64) -> Self {
        Self { algo: stream(seed, "algo"), env: stream(seed, "env"), env2: stream(seed, "env2") }
    }
}

struct Outcome {
    samples: usize,
    chosen: Intervention,
    recovered: Option<BTreeSet<usize>>,
    phases: Vec<PhaseLog>,
}

fn execute(
    algorithm: Algorithm,
    scm: &Scm,
    params: &ModlParams,
    cfg: &ExperimentConfig,
    seeds: RunSeeds,
) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.algo);
    let parents: BTreeSet<usize> = scm.outcome_parents().iter().copied().collect();
    match algorithm {
        Algorithm::Modl | Algorithm::ModlKnownPy => {
            let p = if algorithm == Algorithm::ModlKnownPy {
                params.clone().with_parents_bound(Some(parents.len()))
            } else {
                params.clone()
            };
            let mut env = ScmEnv::global(scm, seeds.env);
            let res = run_modl(&mut env, &p, &mut rng)?;
            Ok(Outcome {
                samples: res.samples_used,
                chosen: env.intervention(&res.chosen),
                recovered: Some(res.recovered_parents()),
                phases: res.phase_logs,
            })
        }
        Algorithm::Oracle => {
            let res = run_oracle(scm, &parents, params, seeds.env, &mut rng)?;
            Ok(Outcome { samples: res.run.samples_used, chosen: res.intervention, recovered: None, phases: res.run.phase_logs })
        }
        Algorithm::P1 => {
            let test = ParentsTestConfig::with_default_baseline(cfg.epsilon, cfg.delta, params.sigma2, scm.num_vars());
            let res = run_p1(scm, params, &test, (seeds.env, seeds.env2), &mut rng)?;
            Ok(Outcome {
                samples: res.samples_used,
                chosen: res.intervention,
                recovered: Some(res.parents.parents),
                phases: res.stage2.map(|s| s.phase_logs).unwrap_or_default(),
            })
        }
        Algorithm::Se => {
            let mut env = ScmEnv::global(scm, seeds.env);
            let res = run_se(&mut env, cfg.epsilon, cfg.delta, params.sigma2, cfg.arm_cap)?;
            Ok(Outcome { samples: res.samples_used, chosen: env.intervention(&res.chosen), recovered: None, phases: Vec::new() })
        }
    }
}

/// Value of the best intervention of a model.
pub fn optimal_value(scm: &Scm) -> Result<f64> {
    if scm.is_additive() {
        best_global(scm).map(|(_, v)| v)
    } else {
        best_global_exhaustive(scm, EXHAUSTIVE_CAP).map(|(_, v)| v)
    }
}

/// Optimal value minus `E[Y | do(iv)]`.
pub fn true_gap(scm: &Scm, optimum: f64, iv: &Intervention) -> Result<f64> {
    let (mean, _) = interventional_mean(scm, iv, EVAL_BUDGET)?;
    Ok(optimum - mean)
}

fn parent_metrics(found: &BTreeSet<usize>, truth: &[usize]) -> (Option<f64>, Option<f64>) {
    let hits = truth.iter().filter(|p| found.contains(p)).count() as f64;
    let precision = (!found.is_empty()).then(|| hits / found.len() as f64);
    let recall = (!truth.is_empty()).then(|| hits / truth.len() as f64);
    (precision, recall)
}

pub fn generate_scms(cfg: &ExperimentConfig) -> Result<Vec<Vec<Scm>>> {
    cfg.sweep
        .values
        .iter()
        .map(|&v| {
            let gen = cfg.sweep.param.apply(&cfg.gen, v)?;
            (0..cfg.num_scms)
                .map(|i| {
                    let seed = scm_seed(cfg.master_seed, v, i);
                    let g = GenConfig { seed, ..gen.clone() };
                    gen_scm(&g, &mut ChaCha8Rng::seed_from_u64(seed))
                })
                .collect()
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let scms = generate_scms(cfg)?;
    let optima: Vec<Vec<f64>> = scms
        .iter()
        .map(|row| row.iter().map(optimal_value).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for si in 0..cfg.sweep.values.len() {
        for scm_idx in 0..cfg.num_scms {
            for run_idx in 0..cfg.runs_per_scm {
                for (ai, &alg) in cfg.algorithms.iter().enumerate() {
                    jobs.push((si, scm_idx, run_idx, ai, alg));
                }
            }
        }
    }

    let work = |&(si, scm_idx, run_idx, ai, alg): &(usize, usize, usize, usize, Algorithm)| -> Result<Option<(usize, RunRecord, Option<PhaseDump>)>> {
        let v = cfg.sweep.values[si];
        let scm = &scms[si][scm_idx];
        let gen = scm.meta.config.clone().unwrap_or_else(|| cfg.gen.clone());
        let params = cfg.modl_params(&gen);
        let seed = run_seed(cfg.master_seed, v, scm_idx, run_idx, (!cfg.common_random_numbers).then_some(alg));
        let started = Instant::now();
        let out = match execute(alg, scm, &params, cfg, RunSeeds::from_run_seed(seed)) {
            Ok(o) => o,
            Err(Error::Unsupported(_)) if alg == Algorithm::Se => return Ok(None),
            Err(e) => return Err(e),
        };
        let wall = started.elapsed().as_secs_f64() * 1e3;
        let gap = true_gap(scm, optima[si][scm_idx], &out.chosen)?;
        let (pa_precision, pa_recall) = match &out.recovered {
            Some(found) => parent_metrics(found, scm.outcome_parents()),
            None => (None, None),
        };
        let order = ((si * cfg.num_scms + scm_idx) * cfg.runs_per_scm + run_idx) * cfg.algorithms.len() + ai;
        let dump = (opts.dump_phases && !out.phases.is_empty()).then(|| PhaseDump {
            sweep_value: v,
            scm_idx,
            run_idx,
            algorithm: alg,
            phases: out.phases.clone(),
        });
        let record = RunRecord {
            sweep_param: cfg.sweep.param.name().to_string(),
            sweep_value: v,
            scm_idx,
            run_idx,
            algorithm: alg,
            samples: out.samples,
            true_gap: gap,
            success: gap <= cfg.epsilon,
            pa_precision,
            pa_recall,
            wall_ms: cfg.record_wall_time.then_some(wall),
            chosen: out.chosen,
        };
        Ok(Some((order, record, dump)))
    };

    let results: Vec<Result<Option<(usize, RunRecord, Option<PhaseDump>)>>> = match opts.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(work).collect())
        }
        None => jobs.par_iter().map(work).collect(),
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for r in results {
        match r? {
            Some(row) => rows.push(row),
            None => skipped += 1,
        }
    }
    rows.sort_by_key(|(order, _, _)| *order);
    let mut records = Vec::with_capacity(rows.len());
    let mut phases = Vec::new();
    for (_, rec, dump) in rows {
        records.push(rec);
        phases.extend(dump);
    }
    Ok(ExperimentOutput { records, skipped, phases, scms })
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g9).unwrap_or_default()
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_param,
            fmt_g9(r.sweep_value),
            r.scm_idx,
            r.run_idx,
            r.algorithm.name(),
            r.samples,
            fmt_g9(r.true_gap),
            r.success,
            opt(r.pa_precision),
            opt(r.pa_recall),
            opt(r.wall_ms),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub count: usize,
    pub samples_mean: f64,
    pub samples_stderr: f64,
    pub true_gap_mean: f64,
    pub true_gap_stderr: f64,
    pub failure_rate: f64,
    pub pa_precision_mean: Option<f64>,
    pub pa_recall_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn get(&self, sweep_value: f64, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.algorithm == algorithm)
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = xs.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Group by `(sweep_value, algorithm)` in first-appearance order.
pub fn aggregate(records: &[RunRecord]) -> Result<Summary> {
    if records.is_empty() {
        return input("no records to aggregate");
    }
    let mut keys: Vec<(u64, Algorithm)> = Vec::new();
    for r in records {
        let key = (r.sweep_value.to_bits(), r.algorithm);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let rows = keys
        .into_iter()
        .map(|(bits, alg)| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.sweep_value.to_bits() == bits && r.algorithm == alg)
                .collect();
            let samples: Vec<f64> = group.iter().map(|r| r.samples as f64).collect();
            let gaps: Vec<f64> = group.iter().map(|r| r.true_gap).collect();
            let (samples_mean, samples_stderr) = mean_stderr(&samples);
            let (true_gap_mean, true_gap_stderr) = mean_stderr(&gaps);
            let failures = group.iter().filter(|r| !r.success).count();
            SummaryRow {
                sweep_param: group[0].sweep_param.clone(),
                sweep_value: f64::from_bits(bits),
                algorithm: alg,
                count: group.len(),
                samples_mean,
                samples_stderr,
                true_gap_mean,
                true_gap_stderr,
                failure_rate: failures as f64 / group.len() as f64,
                pa_precision_mean: mean_of(group.iter().map(|r| r.pa_precision)),
                pa_recall_mean: mean_of(group.iter().map(|r| r.pa_recall)),
            }
        })
        .collect();
    Ok(Summary { rows })
}

pub fn summary_csv(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_param,
            fmt_g9(r.sweep_value),
            r.algorithm.name(),
            r.count,
            fmt_g9(r.samples_mean),
            fmt_g9(r.samples_stderr),
            fmt_g9(r.true_gap_mean),
            fmt_g9(r.true_gap_stderr),
            fmt_g9(r.failure_rate),
            opt(r.pa_precision_mean),
            opt(r.pa_recall_mean),
        );
    }
    out
}
