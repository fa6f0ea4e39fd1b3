//! Phased elimination over marginal action sets with marginally uniform
//! designs, parent recovery from the phase logs, and the instance-dependent
//! sample-complexity bound.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{design_with_covariance, gap_estimates, ols_with_covariance, Embedding, GapTables, MarginalActionSet};
use crate::env::Environment;
use crate::error::{input, Error, Result};
use crate::scm::{argmax, Scm};

/// Tolerance schedule of the phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `gamma(l) = eps / (2K) * 2^(L - l)`, ending at `eps / (2K)`.
    #[default]
    ProofConsistent,
    /// `gamma(l) = eps / K * 2^(L - l + 1)`, ending at `2 eps / K`.
    VerbatimPseudocode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModlParams {
    pub epsilon: f64,
    pub delta: f64,
    pub sigma2: f64,
    pub reward_bound: f64,
    /// Known upper bound on the number of outcome parents.
    #[serde(default)]
    pub parents_bound: Option<usize>,
    #[serde(default)]
    pub schedule: Schedule,
}

impl ModlParams {
    pub fn new(epsilon: f64, delta: f64, sigma2: f64, reward_bound: f64) -> Self {
        Self { epsilon, delta, sigma2, reward_bound, parents_bound: None, schedule: Schedule::default() }
    }

    pub fn with_parents_bound(mut self, bound: Option<usize>) -> Self {
        self.parents_bound = bound;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self, num_vars: usize) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return input("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return input("delta must lie in (0, 1)");
        }
        if !(self.sigma2 >= 0.0) {
            return input("sigma2 must be non-negative");
        }
        if !(self.reward_bound > 0.0) {
            return input("reward bound must be positive");
        }
        if let Some(b) = self.parents_bound {
            if b < 1 || b > num_vars.max(1) {
                return input(format!("parents bound {b} outside [1, {num_vars}]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    /// `floor(log2(2BK / eps))`, zero when that is negative.
    pub num_phases: usize,
    /// Tolerances actually run; a single `eps / (2K)` phase when `num_phases` is 0.
    pub gammas: Vec<f64>,
}

impl PhaseSchedule {
    /// Phase count entering the `ln(L / delta)` factor.
    pub fn effective_phases(&self) -> usize {
        self.gammas.len()
    }
}

pub fn phase_schedule(params: &ModlParams, num_vars: usize) -> PhaseSchedule {
    let k = num_vars.max(1) as f64;
    let eps = params.epsilon;
    let ratio = 2.0 * params.reward_bound * k / eps;
    let l = if ratio >= 1.0 { ratio.log2().floor() as usize } else { 0 };
    if l == 0 {
        return PhaseSchedule { num_phases: 0, gammas: vec![eps / (2.0 * k)] };
    }
    let gammas = (1..=l)
        .map(|ell| match params.schedule {
            Schedule::ProofConsistent => eps / (2.0 * k) * 2f64.powi((l - ell) as i32),
            Schedule::VerbatimPseudocode => eps / k * 2f64.powi((l - ell + 1) as i32),
        })
        .collect();
    PhaseSchedule { num_phases: l, gammas }
}

const MAX_DESIGN_DOUBLINGS: usize = 6;

/// `ceil(4 sigma^2 sum_k |S_k| / gamma^2 * ln(L / delta))`, raised to
/// [`min_phase_size`] when smaller.
pub fn phase_sample_size(set: &MarginalActionSet, gamma: f64, sigma2: f64, delta: f64, num_phases: usize) -> usize {
    let l = num_phases.max(1) as f64;
    let raw = 4.0 * sigma2 * set.total_size() as f64 / (gamma * gamma) * (l / delta).ln();
    let n = raw.ceil();
    let n = if n.is_finite() && n > 0.0 { n as usize } else { 0 };
    n.max(min_phase_size(set))
}

/// Smallest design that can identify every within-variable contrast: more
/// rounds than any marginal has values, and enough for the contrasts'
/// rank `sum_k (|S_k| - 1)` plus the intercept direction.
pub fn min_phase_size(set: &MarginalActionSet) -> usize {
    let rank = set.total_size() - set.num_vars() + 1;
    (set.max_size() + 1).max(rank)
}

/// Keep the values whose empirical gap is below `gamma`.
pub fn eliminate(set: &MarginalActionSet, gaps: &GapTables, gamma: f64) -> MarginalActionSet {
    let sets = set
        .sets
        .iter()
        .zip(&gaps.vars)
        .map(|(s, g)| {
            let kept: Vec<usize> = s
                .iter()
                .zip(&g.gaps)
                .filter(|(_, &gap)| gap < gamma)
                .map(|(&v, _)| v)
                .collect();
            if kept.is_empty() {
                // gamma <= 0: keep the first empirical maximiser
                let (i, _) = argmax(&g.theta);
                vec![s[i]]
            } else {
                kept
            }
        })
        .collect();
    MarginalActionSet { sets }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub ell: usize,
    pub gamma: f64,
    pub n_ell: usize,
    /// Action set the phase sampled from.
    pub action_set: MarginalActionSet,
    pub theta_hat: Vec<f64>,
    pub gaps: GapTables,
    /// Action set after elimination.
    pub survivors: MarginalActionSet,
    /// Singleton marginals after elimination.
    pub p_hat_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModlResult {
    pub chosen: Vec<usize>,
    pub theta_final: Vec<f64>,
    pub phase_logs: Vec<PhaseLog>,
    pub samples_used: usize,
    pub final_set: MarginalActionSet,
}

impl ModlResult {
    pub fn recovered_parents(&self) -> BTreeSet<usize> {
        recover_parents(&self.phase_logs)
    }
}

pub fn run_modl<E: Environment + ?Sized, R: Rng + ?Sized>(env: &mut E, params: &ModlParams, rng: &mut R) -> Result<ModlResult> {
    let supports = env.supports().to_vec();
    let k = supports.len();
    params.validate(k)?;
    if k == 0 {
        return Ok(ModlResult {
            chosen: Vec::new(),
            theta_final: Vec::new(),
            phase_logs: Vec::new(),
            samples_used: 0,
            final_set: MarginalActionSet { sets: Vec::new() },
        });
    }
    let emb = Embedding::new(&supports);
    let schedule = phase_schedule(params, k);
    let l_eff = schedule.effective_phases();
    let mut set = MarginalActionSet::full(&supports);
    let mut logs = Vec::with_capacity(l_eff);
    let mut samples_used = 0usize;
    let mut theta = vec![0.0; emb.dim()];
    let mut last_gaps: Option<GapTables> = None;

    for (idx, &gamma) in schedule.gammas.iter().enumerate() {
        let ell = idx + 1;
        let mut n = phase_sample_size(&set, gamma, params.sigma2, params.delta, l_eff);
        // Near the rank floor a random design can be singular; more rounds
        // only tighten the estimates, so double until one is estimable.
        let mut attempt = 0;
        let (actions, v) = loop {
            match design_with_covariance(&set, n, &emb, rng) {
                Ok(d) => break d,
                Err(Error::Internal(msg)) if attempt == MAX_DESIGN_DOUBLINGS => {
                    return Err(Error::Internal(format!("phase {ell}: {msg}")));
                }
                Err(Error::Internal(_)) => {
                    attempt += 1;
                    n *= 2;
                }
                Err(other) => return Err(other),
            }
        };
        let mut ys = Vec::with_capacity(n);
        for x in &actions {
            ys.push(env.pull(x)?);
        }
        samples_used += n;
        let est = ols_with_covariance(&actions, &ys, &emb, v);
        let gaps = gap_estimates(&est, &set, &emb);
        let survivors = eliminate(&set, &gaps, gamma);
        let p_hat = survivors.singletons();
        theta = est.theta_hat.as_slice().to_vec();
        logs.push(PhaseLog {
            ell,
            gamma,
            n_ell: n,
            action_set: set.clone(),
            theta_hat: theta.clone(),
            gaps: gaps.clone(),
            survivors: survivors.clone(),
            p_hat_y: p_hat,
        });
        last_gaps = Some(gaps);
        set = survivors;
        if p_hat == k || params.parents_bound.is_some_and(|b| p_hat >= b) {
            break;
        }
    }

    let gaps = last_gaps.expect("at least one phase");
    let chosen = set
        .sets
        .iter()
        .zip(&gaps.vars)
        .map(|(s, g)| {
            // argmax over survivors; the first maximiser wins ties
            let mut best: Option<(usize, f64)> = None;
            for &v in s {
                let pos = g.values.iter().position(|&u| u == v).expect("survivor was sampled");
                let t = g.theta[pos];
                if best.is_none_or(|(_, b)| t > b) {
                    best = Some((v, t));
                }
            }
            best.expect("non-empty marginal").0
        })
        .collect();
    Ok(ModlResult { chosen, theta_final: theta, phase_logs: logs, samples_used, final_set: set })
}

/// Variables flagged as outcome parents: a within-variable difference of the
/// estimates exceeded `2 gamma` at some phase, or the marginal ended as a singleton.
pub fn recover_parents(logs: &[PhaseLog]) -> BTreeSet<usize> {
    let mut found = BTreeSet::new();
    let Some(last) = logs.last() else {
        return found;
    };
    for log in logs {
        for (k, g) in log.gaps.vars.iter().enumerate() {
            if g.spread() > 2.0 * log.gamma {
                found.insert(k);
            }
        }
    }
    for (k, s) in last.survivors.sets.iter().enumerate() {
        if s.len() == 1 && log_support(logs, k) > 1 {
            found.insert(k);
        }
    }
    found
}

fn log_support(logs: &[PhaseLog], k: usize) -> usize {
    logs[0].action_set.sets[k].len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBound {
    /// Bound without knowledge of the parent count.
    pub h_eps: f64,
    /// Bound when the parent count is supplied.
    pub h_eps_known_py: f64,
    /// Smallest positive per-value gap among the parents.
    pub delta_min: f64,
}

/// Instance-dependent expected sample-complexity bound
/// `16 sigma^2 / 3 * ln(log2(BK/eps) / delta) * sum_k sum_i (max(D_min, D_k^i, eps/K))^-2`.
pub fn theoretical_complexity(scm: &Scm, params: &ModlParams) -> Result<ComplexityBound> {
    let k = scm.num_vars();
    params.validate(k)?;
    let kf = k as f64;
    let floor = params.epsilon / kf;
    let mut gaps = Vec::new();
    let mut delta_min = f64::INFINITY;
    for var in 0..k {
        let m = scm.specs[var].support_size;
        let f: Vec<f64> = (0..m).map(|j| scm.effect(var, j)).collect();
        let best = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let var_gaps: Vec<f64> = f.iter().map(|x| best - x).collect();
        if scm.outcome_parents().binary_search(&var).is_ok() {
            for &g in &var_gaps {
                if g > 0.0 {
                    delta_min = delta_min.min(g);
                }
            }
        }
        gaps.extend(var_gaps);
    }
    if !delta_min.is_finite() {
        delta_min = 0.0;
    }
    let log_term = (params.reward_bound * kf / params.epsilon).log2().max(1.0);
    let lead = 16.0 * params.sigma2 / 3.0 * (log_term / params.delta).ln();
    let sum = |dmin: f64| -> f64 { gaps.iter().map(|&g| 1.0 / g.max(dmin).max(floor).powi(2)).sum() };
    Ok(ComplexityBound { h_eps: lead * sum(0.0), h_eps_known_py: lead * sum(delta_min), delta_min })
}
