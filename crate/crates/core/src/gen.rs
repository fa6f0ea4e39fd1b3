//! Random SCM instances: Erdős–Rényi DAGs, Beta(2,5) conditionals and
//! Beta(2,5)-scaled additive effects, optionally with interaction terms.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::scm::{beta_row, Cpd, Dag, Interaction, Node, NoiseKind, OutcomeModel, Scm, ScmMeta, VariableSpec};

/// Parent configurations above which a conditional is stored lazily instead
/// of as an explicit table.
pub const MAX_TABLE_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub num_vars: usize,
    pub num_parents: usize,
    pub support_lo: usize,
    pub support_hi: usize,
    /// Expected node degree of the graph over the intervenable variables.
    pub degree: f64,
    pub reward_scale: f64,
    pub noise_sigma2: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_vars: 10,
            num_parents: 5,
            support_lo: 3,
            support_hi: 6,
            degree: 3.0,
            reward_scale: 5.0,
            noise_sigma2: 1.0,
            alpha: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return input("num_vars must be at least 1");
        }
        if self.num_parents < 1 || self.num_parents > self.num_vars {
            return input(format!("num_parents must lie in [1, {}]", self.num_vars));
        }
        if self.support_lo < 2 || self.support_lo > self.support_hi {
            return input("supports need 2 <= support_lo <= support_hi");
        }
        if !(self.degree >= 0.0) {
            return input("degree must be non-negative");
        }
        if !(self.reward_scale > 0.0) {
            return input("reward_scale must be positive");
        }
        if !(self.noise_sigma2 >= 0.0) {
            return input("noise_sigma2 must be non-negative");
        }
        if !(self.alpha >= 0.0) {
            return input("alpha must be non-negative");
        }
        Ok(())
    }

    /// Edge probability between two ordered variables.
    pub fn edge_probability(&self) -> f64 {
        if self.num_vars < 2 {
            0.0
        } else {
            (self.degree / (self.num_vars - 1) as f64).min(1.0)
        }
    }
}

/// Random graph: variables in a uniformly random order, each forward pair
/// joined with [`GenConfig::edge_probability`], a uniform subset of
/// `num_parents` variables feeding `Y`, `Y` placed right after its last
/// parent, and every later variable made a child of `Y` with probability 1/2.
pub fn gen_dag<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<Dag> {
    cfg.validate()?;
    let k = cfg.num_vars;
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let p = cfg.edge_probability();

    let mut parent_lists: Vec<Vec<Node>> = vec![Vec::new(); k];
    for j in 1..k {
        for i in 0..j {
            if rng.random_bool(p) {
                parent_lists[order[j]].push(Node::Var(order[i]));
            }
        }
    }

    let mut outcome_parents = index::sample(rng, k, cfg.num_parents).into_vec();
    outcome_parents.sort_unstable();
    let mut rank = vec![0usize; k];
    for (pos, &v) in order.iter().enumerate() {
        rank[v] = pos;
    }
    let y_pos = outcome_parents.iter().map(|&v| rank[v]).max().unwrap_or(0) + 1;

    for &v in &order[y_pos..] {
        if rng.random_bool(0.5) {
            parent_lists[v].push(Node::Outcome);
        }
    }

    let mut topo_order: Vec<Node> = order.iter().map(|&v| Node::Var(v)).collect();
    topo_order.insert(y_pos, Node::Outcome);

    let dag = Dag { num_vars: k, outcome_parents, parent_lists, topo_order };
    dag.validate()?;
    Ok(dag)
}

pub fn gen_scm<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<Scm> {
    cfg.validate()?;
    let dag = gen_dag(cfg, rng)?;
    let specs: Vec<VariableSpec> = (0..cfg.num_vars)
        .map(|_| VariableSpec { support_size: rng.random_range(cfg.support_lo..=cfg.support_hi) })
        .collect();

    let mut cpds = Vec::with_capacity(cfg.num_vars);
    for (v, parents) in dag.parent_lists.iter().enumerate() {
        let m = specs[v].support_size;
        let rows = parents.iter().try_fold(1usize, |acc, p| match p {
            Node::Var(pv) => acc.checked_mul(specs[*pv].support_size).filter(|&r| r <= MAX_TABLE_ROWS),
            Node::Outcome => None,
        });
        cpds.push(match rows {
            Some(r) => Cpd::Table { rows: (0..r).map(|_| beta_row(rng, m)).collect() },
            None => Cpd::Lazy { key_seed: rng.random() },
        });
    }

    let beta = Beta::new(2.0, 5.0).expect("valid beta parameters");
    let effects = dag
        .outcome_parents
        .iter()
        .map(|&p| (0..specs[p].support_size).map(|_| cfg.reward_scale * beta.sample(rng)).collect())
        .collect();
    let outcome = OutcomeModel {
        effects,
        noise_sigma2: cfg.noise_sigma2,
        noise_kind: NoiseKind::Gaussian,
        interaction: None,
    };
    let meta = ScmMeta { seed: Some(cfg.seed), config: Some(cfg.clone()) };
    let scm = Scm::new(dag, specs, cpds, outcome, meta)?;
    if cfg.alpha > 0.0 {
        gen_misspecification(&scm, cfg.alpha, rng)
    } else {
        Ok(scm)
    }
}

/// Attach interaction groups of sizes 4, 3 and 2 over the outcome parents.
///
/// With at least nine parents the nine indices are distinct. With fewer,
/// indices are distinct within a group and may repeat across groups; a group
/// larger than the parent count draws with replacement.
pub fn gen_misspecification<R: Rng + ?Sized>(scm: &Scm, alpha: f64, rng: &mut R) -> Result<Scm> {
    let py = scm.outcome_parents().len();
    if py < 2 {
        return input(format!("interaction terms need at least 2 outcome parents, got {py}"));
    }
    if !(alpha >= 0.0) {
        return input("alpha must be non-negative");
    }
    const SIZES: [usize; 3] = [4, 3, 2];
    let index_groups: Vec<Vec<usize>> = if py >= 9 {
        let picked = index::sample(rng, py, 9).into_vec();
        vec![picked[..4].to_vec(), picked[4..7].to_vec(), picked[7..].to_vec()]
    } else {
        SIZES
            .iter()
            .map(|&size| {
                if size <= py {
                    index::sample(rng, py, size).into_vec()
                } else {
                    (0..size).map(|_| rng.random_range(0..py)).collect()
                }
            })
            .collect()
    };
    let (reward_scale, m_max) = match &scm.meta.config {
        Some(cfg) => (cfg.reward_scale, cfg.support_hi),
        None => (
            scm.outcome.effects.iter().flatten().copied().fold(0.0, f64::max),
            scm.specs.iter().map(|s| s.support_size).max().unwrap_or(2),
        ),
    };
    let mut out = scm.clone();
    out.outcome.interaction = Some(Interaction { alpha, reward_scale, m_max, index_groups });
    if let Some(cfg) = out.meta.config.as_mut() {
        cfg.alpha = alpha;
    }
    Ok(out)
}
