//! Comparison methods: the interval-intersection parents test, the
//! parents-first pipeline, the oracle that knows the parents, and successive
//! elimination over the full product of supports.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, ScmEnv};
use crate::error::{input, Error, Result};
use crate::modl::{run_modl, ModlParams, ModlResult};
use crate::scm::{Intervention, Scm};

pub const DEFAULT_ARM_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentsTestConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub sigma2: f64,
    /// Baseline global assignment the single-variable tests deviate from.
    pub x0: Vec<usize>,
    #[serde(default)]
    pub parents_bound: Option<usize>,
}

impl ParentsTestConfig {
    /// Baseline of all zeros (the first value of every variable).
    pub fn with_default_baseline(epsilon: f64, delta: f64, sigma2: f64, num_vars: usize) -> Self {
        Self { epsilon, delta, sigma2, x0: vec![0; num_vars], parents_bound: None }
    }
}

/// Samples per tested value, `ceil(8 sigma^2 / eps^2 * ln(2 K M_k / delta))`.
pub fn parents_test_sample_size(cfg: &ParentsTestConfig, num_vars: usize, support: usize) -> usize {
    let raw = 8.0 * cfg.sigma2 / (cfg.epsilon * cfg.epsilon)
        * (2.0 * num_vars as f64 * support as f64 / cfg.delta).ln();
    (raw.ceil().max(1.0)) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentsTestResult {
    pub parents: BTreeSet<usize>,
    pub samples_used: usize,
    /// Variables in the order they were tested.
    pub tested: Vec<usize>,
}

/// Flags `X_k` when the intersection of the `(mean - eps/2, mean + eps/2)`
/// intervals over `do(X_k = j, X_-k = x0_-k)` becomes empty.
pub fn find_parents<E: Environment + ?Sized, R: Rng + ?Sized>(
    env: &mut E,
    cfg: &ParentsTestConfig,
    rng: &mut R,
) -> Result<ParentsTestResult> {
    let supports = env.supports().to_vec();
    let k = supports.len();
    if cfg.x0.len() != k {
        return input(format!("baseline assigns {} of {k} variables", cfg.x0.len()));
    }
    if let Some(v) = cfg.x0.iter().zip(&supports).position(|(x, m)| x >= m) {
        return input(format!("baseline value outside the support of variable {v}"));
    }
    if !(cfg.epsilon > 0.0) || !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return input("parents test needs epsilon > 0 and delta in (0, 1)");
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let half = cfg.epsilon / 2.0;
    let mut parents = BTreeSet::new();
    let mut samples_used = 0;
    let mut tested = Vec::new();
    let mut x = cfg.x0.clone();
    for &var in &order {
        if cfg.parents_bound.is_some_and(|b| parents.len() >= b) {
            break;
        }
        tested.push(var);
        let n = parents_test_sample_size(cfg, k, supports[var]);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for j in 0..supports[var] {
            x[var] = j;
            let mut sum = 0.0;
            for _ in 0..n {
                sum += env.pull(&x)?;
            }
            samples_used += n;
            let mean = sum / n as f64;
            lo = lo.max(mean - half);
            hi = hi.min(mean + half);
            if lo >= hi {
                parents.insert(var);
                break;
            }
        }
        x[var] = cfg.x0[var];
    }
    Ok(ParentsTestResult { parents, samples_used, tested })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1Result {
    pub parents: ParentsTestResult,
    /// Elimination run over the detected parents; absent when none were found.
    pub stage2: Option<ModlResult>,
    /// Final partial intervention on the detected parents.
    pub intervention: Intervention,
    pub samples_used: usize,
}

/// Parents test followed by elimination over partial interventions on the
/// detected parents. `seed` keys the stage-2 environment stream.
pub fn run_p1<R: Rng + ?Sized>(
    scm: &Scm,
    params: &ModlParams,
    cfg: &ParentsTestConfig,
    env_seeds: (u64, u64),
    rng: &mut R,
) -> Result<P1Result> {
    let mut stage1_env = ScmEnv::global(scm, env_seeds.0);
    let found = find_parents(&mut stage1_env, cfg, rng)?;
    if found.parents.is_empty() {
        return Ok(P1Result {
            samples_used: found.samples_used,
            parents: found,
            stage2: None,
            intervention: Intervention::default(),
        });
    }
    let targets: Vec<usize> = found.parents.iter().copied().collect();
    let mut env = ScmEnv::partial(scm, targets.clone(), env_seeds.1)?;
    let stage_params = ModlParams {
        parents_bound: params.parents_bound.map(|b| b.min(targets.len())),
        ..params.clone()
    };
    let res = run_modl(&mut env, &stage_params, rng)?;
    let intervention = env.intervention(&res.chosen);
    Ok(P1Result {
        samples_used: found.samples_used + res.samples_used,
        parents: found,
        intervention,
        stage2: Some(res),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub run: ModlResult,
    /// Global intervention: chosen parent values, zero elsewhere.
    pub intervention: Intervention,
}

/// Elimination over the true parents only, non-parents fixed to value 0.
pub fn run_oracle<R: Rng + ?Sized>(
    scm: &Scm,
    true_parents: &BTreeSet<usize>,
    params: &ModlParams,
    env_seed: u64,
    rng: &mut R,
) -> Result<OracleResult> {
    let targets: Vec<usize> = true_parents.iter().copied().collect();
    let mut env = ScmEnv::completed(scm, targets, vec![0; scm.num_vars()], env_seed)?;
    let run = run_modl(&mut env, params, rng)?;
    let intervention = env.intervention(&run.chosen);
    Ok(OracleResult { run, intervention })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub action: Vec<usize>,
    pub count: usize,
    pub mean: f64,
}

/// Every value map of the product space with running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductArmSet {
    pub arms: Vec<Arm>,
}

impl ProductArmSet {
    pub fn new(supports: &[usize], cap: usize) -> Result<Self> {
        let size = supports
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .filter(|&s| s <= cap)
            .ok_or_else(|| Error::Unsupported(format!("product action space exceeds the arm cap of {cap}")))?;
        let mut arms = Vec::with_capacity(size);
        let mut current = vec![0usize; supports.len()];
        for _ in 0..size {
            arms.push(Arm { action: current.clone(), count: 0, mean: 0.0 });
            for (c, &m) in current.iter_mut().zip(supports).rev() {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
        Ok(Self { arms })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeResult {
    pub chosen: Vec<usize>,
    pub samples_used: usize,
    pub passes: usize,
    pub survivors: usize,
}

/// `r_t = sqrt(2 sigma^2 ln(4 |A| t^2 / delta) / t)`.
pub fn se_radius(num_arms: usize, t: usize, sigma2: f64, delta: f64) -> f64 {
    let t = t as f64;
    (2.0 * sigma2 * (4.0 * num_arms as f64 * t * t / delta).ln() / t).sqrt()
}

/// Successive elimination over the full product space: one sample of each
/// surviving arm per pass, dropping arms more than `2 r_t` below the
/// empirical best, until one arm is left or `2 r_t <= eps`.
pub fn run_se<E: Environment + ?Sized>(env: &mut E, epsilon: f64, delta: f64, sigma2: f64, arm_cap: usize) -> Result<SeResult> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return input("successive elimination needs epsilon > 0 and delta in (0, 1)");
    }
    let supports = env.supports().to_vec();
    let mut arms = ProductArmSet::new(&supports, arm_cap)?.arms;
    let total_arms = arms.len();
    let mut alive: Vec<usize> = (0..total_arms).collect();
    let mut samples = 0;
    let mut t = 0;
    while alive.len() > 1 {
        t += 1;
        for &a in &alive {
            let y = env.pull(&arms[a].action)?;
            let arm = &mut arms[a];
            arm.count += 1;
            arm.mean += (y - arm.mean) / arm.count as f64;
            samples += 1;
        }
        let r = se_radius(total_arms, t, sigma2, delta);
        let best = alive.iter().map(|&a| arms[a].mean).fold(f64::NEG_INFINITY, f64::max);
        alive.retain(|&a| best - arms[a].mean <= 2.0 * r);
        if 2.0 * r <= epsilon {
            break;
        }
    }
    let mut chosen = alive[0];
    for &a in &alive[1..] {
        if arms[a].mean > arms[chosen].mean {
            chosen = a;
        }
    }
    Ok(SeResult { chosen: arms[chosen].action.clone(), samples_used: samples, passes: t, survivors: alive.len() })
}
