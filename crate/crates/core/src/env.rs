//! Sampling interfaces that bandit algorithms pull from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Result};
use crate::scm::{Intervention, Scm};

/// A bandit environment over the value maps of a fixed list of variables.
pub trait Environment {
    /// Support size of each controllable variable.
    fn supports(&self) -> &[usize];

    /// One noisy outcome for the action `x` (one value per controllable variable).
    fn pull(&mut self, x: &[usize]) -> Result<f64>;
}

/// Environment backed by an [`Scm`], controlling a subset of its variables.
///
/// With a `completion`, every other variable is fixed to the completion's
/// value, so each pull is a global intervention. Without one, the other
/// variables are drawn from their conditionals.
pub struct ScmEnv<'a> {
    scm: &'a Scm,
    targets: Vec<usize>,
    supports: Vec<usize>,
    completion: Option<Vec<usize>>,
    /// For each outcome parent, its position among `targets`.
    parent_slots: Vec<Option<usize>>,
    rng: ChaCha8Rng,
    pulls: u64,
}

impl<'a> ScmEnv<'a> {
    /// Global interventions on every variable.
    pub fn global(scm: &'a Scm, seed: u64) -> Self {
        let targets: Vec<usize> = (0..scm.num_vars()).collect();
        let completion = Some(vec![0; scm.num_vars()]);
        Self::build(scm, targets, completion, seed)
    }

    /// Interventions on `targets` only, remaining variables fixed to `completion`.
    pub fn completed(scm: &'a Scm, targets: Vec<usize>, completion: Vec<usize>, seed: u64) -> Result<Self> {
        if completion.len() != scm.num_vars() {
            return input("completion must assign every variable");
        }
        Self::check_targets(scm, &targets)?;
        Ok(Self::build(scm, targets, Some(completion), seed))
    }

    /// Partial interventions on `targets`; the rest follow the model.
    pub fn partial(scm: &'a Scm, targets: Vec<usize>, seed: u64) -> Result<Self> {
        Self::check_targets(scm, &targets)?;
        Ok(Self::build(scm, targets, None, seed))
    }

    fn check_targets(scm: &Scm, targets: &[usize]) -> Result<()> {
        if let Some(t) = targets.iter().find(|&&t| t >= scm.num_vars()) {
            return input(format!("target variable {t} out of range"));
        }
        let mut sorted = targets.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != targets.len() {
            return input("target variables must be distinct");
        }
        Ok(())
    }

    fn build(scm: &'a Scm, targets: Vec<usize>, completion: Option<Vec<usize>>, seed: u64) -> Self {
        let supports = targets.iter().map(|&t| scm.specs[t].support_size).collect();
        let parent_slots = scm
            .outcome_parents()
            .iter()
            .map(|p| targets.iter().position(|t| t == p))
            .collect();
        Self { scm, targets, supports, completion, parent_slots, rng: ChaCha8Rng::seed_from_u64(seed), pulls: 0 }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    /// The model-level intervention an action corresponds to.
    pub fn intervention(&self, x: &[usize]) -> Intervention {
        match &self.completion {
            Some(base) => {
                let mut full = base.clone();
                for (&t, &v) in self.targets.iter().zip(x) {
                    full[t] = v;
                }
                Intervention::global(&full)
            }
            None => Intervention::partial(self.targets.iter().copied().zip(x.iter().copied())),
        }
    }
}

impl Environment for ScmEnv<'_> {
    fn supports(&self) -> &[usize] {
        &self.supports
    }

    fn pull(&mut self, x: &[usize]) -> Result<f64> {
        if x.len() != self.targets.len() {
            return input(format!("action has {} values for {} targets", x.len(), self.targets.len()));
        }
        self.pulls += 1;
        if let Some(base) = &self.completion {
            for (&t, &v) in self.targets.iter().zip(x) {
                if v >= self.scm.specs[t].support_size {
                    return input(format!("value {v} outside the support of variable {t}"));
                }
            }
            let pv: Vec<usize> = self
                .scm
                .outcome_parents()
                .iter()
                .zip(&self.parent_slots)
                .map(|(&p, slot)| slot.map_or(base[p], |i| x[i]))
                .collect();
            return Ok(self.scm.outcome_mean_from_parents(&pv) + self.scm.outcome.draw_noise(&mut self.rng));
        }
        let iv = self.intervention(x);
        self.scm.sample_outcome(&iv, &mut self.rng)
    }
}
