//! Discrete structural causal models with an additive outcome.
//!
//! Variables are indexed `0..K` and take values `0..M_k`. The outcome `Y` is a
//! distinguished node; it depends on its parents through
//! `Y = sum_k f_k(X_k) + interaction + noise`. Variables downstream of `Y`
//! condition on `Y` rounded half away from zero.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::gen::GenConfig;

/// Configurations enumerated exactly by [`interventional_mean`] before it
/// falls back to Monte Carlo.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Var(usize),
    Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dag {
    pub num_vars: usize,
    /// Sorted, duplicate free.
    pub outcome_parents: Vec<usize>,
    /// Parents of each variable, ordered by position in `topo_order`.
    pub parent_lists: Vec<Vec<Node>>,
    pub topo_order: Vec<Node>,
}

impl Dag {
    pub fn validate(&self) -> Result<()> {
        let k = self.num_vars;
        if self.parent_lists.len() != k {
            return input(format!("dag has {} parent lists for {k} variables", self.parent_lists.len()));
        }
        if self.topo_order.len() != k + 1 {
            return input("topological order must list every variable and the outcome once");
        }
        let mut position = BTreeMap::new();
        for (i, node) in self.topo_order.iter().enumerate() {
            if let Node::Var(v) = node {
                if *v >= k {
                    return input(format!("variable {v} out of range"));
                }
            }
            if position.insert(*node, i).is_some() {
                return input(format!("node {node:?} repeated in topological order"));
            }
        }
        let outcome_pos = position[&Node::Outcome];
        for w in self.outcome_parents.windows(2) {
            if w[0] >= w[1] {
                return input("outcome parents must be sorted and unique");
            }
        }
        for &p in &self.outcome_parents {
            if p >= k {
                return input(format!("outcome parent {p} out of range"));
            }
            if position[&Node::Var(p)] > outcome_pos {
                return input(format!("outcome parent {p} placed after the outcome"));
            }
        }
        for (v, parents) in self.parent_lists.iter().enumerate() {
            let own = position[&Node::Var(v)];
            for p in parents {
                if let Node::Var(pv) = p {
                    if *pv >= k {
                        return input(format!("parent {pv} of variable {v} out of range"));
                    }
                }
                if position[p] >= own {
                    return input(format!("edge {p:?} -> {v} violates the topological order"));
                }
            }
        }
        Ok(())
    }

    /// Edges among the intervenable variables (edges into or out of `Y` excluded).
    pub fn variable_edge_count(&self) -> usize {
        self.parent_lists
            .iter()
            .map(|ps| ps.iter().filter(|p| matches!(p, Node::Var(_))).count())
            .sum()
    }

    pub fn children_of_outcome(&self) -> Vec<usize> {
        (0..self.num_vars)
            .filter(|&v| self.parent_lists[v].contains(&Node::Outcome))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub support_size: usize,
}

/// Conditional distribution of a variable given its parents.
///
/// `Table` rows are indexed by the mixed-radix encoding of the parent values
/// (first parent most significant). `Lazy` rows are regenerated on demand from
/// `key_seed` and the parent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cpd {
    Table { rows: Vec<Vec<f64>> },
    Lazy { key_seed: u64 },
}

impl Cpd {
    /// Probability row for a parent configuration. Parent values are the
    /// variable values, or the rounded outcome for `Node::Outcome` parents.
    pub fn row(&self, parent_values: &[i64], parent_supports: &[usize], support: usize) -> Vec<f64> {
        match self {
            Cpd::Table { rows } => rows[table_index(parent_values, parent_supports)].clone(),
            Cpd::Lazy { key_seed } => lazy_row(*key_seed, parent_values, support),
        }
    }
}

fn table_index(parent_values: &[i64], parent_supports: &[usize]) -> usize {
    parent_values
        .iter()
        .zip(parent_supports)
        .fold(0usize, |acc, (&v, &m)| acc * m + v as usize)
}

/// Deterministic Beta(2,5)-proportional row for a keyed configuration.
pub fn lazy_row(key_seed: u64, parent_values: &[i64], support: usize) -> Vec<f64> {
    let mut h = splitmix(key_seed ^ 0x5851_f42d_4c95_7f2d);
    for &v in parent_values {
        h = splitmix(h ^ (v as u64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    beta_row(&mut rng, support)
}

pub(crate) fn beta_row<R: Rng + ?Sized>(rng: &mut R, support: usize) -> Vec<f64> {
    let beta = Beta::new(2.0, 5.0).expect("valid beta parameters");
    let raw: Vec<f64> = (0..support).map(|_| beta.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on `[-a, a]` with `a = sqrt(3 sigma^2)`, so its variance is `sigma^2`.
    UniformBounded,
}

/// Multiplicative interaction added to the additive outcome:
/// `alpha * B * m_max^-4 * (prod over group 0 + prod over group 1 + prod over group 2)`,
/// where each product runs over the one-based values of the listed parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub alpha: f64,
    pub reward_scale: f64,
    pub m_max: usize,
    /// Positions into `Dag::outcome_parents`, sizes 4, 3 and 2.
    pub index_groups: Vec<Vec<usize>>,
}

impl Interaction {
    pub fn coefficient(&self) -> f64 {
        self.alpha * self.reward_scale * (self.m_max as f64).powi(-4)
    }

    /// Interaction term given parent values ordered like `outcome_parents`.
    pub fn term(&self, parent_values: &[usize]) -> f64 {
        let products: f64 = self
            .index_groups
            .iter()
            .map(|g| g.iter().map(|&i| (parent_values[i] + 1) as f64).product::<f64>())
            .sum();
        self.coefficient() * products
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    /// `effects[i][j] = f_k(j)` for `k = outcome_parents[i]`.
    pub effects: Vec<Vec<f64>>,
    pub noise_sigma2: f64,
    pub noise_kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<Interaction>,
}

impl OutcomeModel {
    pub fn is_additive(&self) -> bool {
        self.interaction.as_ref().is_none_or(|i| i.alpha == 0.0)
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.noise_sigma2 == 0.0 {
            return 0.0;
        }
        match self.noise_kind {
            NoiseKind::Gaussian => {
                let sd = self.noise_sigma2.sqrt();
                Normal::new(0.0, sd).expect("positive sd").sample(rng)
            }
            NoiseKind::UniformBounded => {
                let a = (3.0 * self.noise_sigma2).sqrt();
                rng.random_range(-a..=a)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScmMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<GenConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scm {
    pub dag: Dag,
    pub specs: Vec<VariableSpec>,
    pub cpds: Vec<Cpd>,
    pub outcome: OutcomeModel,
    #[serde(default)]
    pub meta: ScmMeta,
}

/// Partial assignment of variables to values; global when it covers every variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub assignments: BTreeMap<usize, usize>,
}

impl Intervention {
    pub fn global(values: &[usize]) -> Self {
        Self { assignments: values.iter().copied().enumerate().collect() }
    }

    pub fn partial(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { assignments: pairs.into_iter().collect() }
    }

    pub fn is_global(&self, num_vars: usize) -> bool {
        self.assignments.len() == num_vars
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.assignments.get(&var).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<usize>,
    pub y: f64,
}

/// Round half away from zero.
pub fn round_outcome(y: f64) -> i64 {
    y.round() as i64
}

impl Scm {
    pub fn new(dag: Dag, specs: Vec<VariableSpec>, cpds: Vec<Cpd>, outcome: OutcomeModel, meta: ScmMeta) -> Result<Self> {
        let scm = Self { dag, specs, cpds, outcome, meta };
        scm.validate()?;
        Ok(scm)
    }

    pub fn num_vars(&self) -> usize {
        self.dag.num_vars
    }

    pub fn supports(&self) -> Vec<usize> {
        self.specs.iter().map(|s| s.support_size).collect()
    }

    pub fn outcome_parents(&self) -> &[usize] {
        &self.dag.outcome_parents
    }

    pub fn is_additive(&self) -> bool {
        self.outcome.is_additive()
    }

    /// `f_k(j)`; zero for variables that are not parents of the outcome.
    pub fn effect(&self, var: usize, value: usize) -> f64 {
        match self.dag.outcome_parents.binary_search(&var) {
            Ok(i) => self.outcome.effects[i][value],
            Err(_) => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dag.validate()?;
        let k = self.dag.num_vars;
        if self.specs.len() != k || self.cpds.len() != k {
            return input("specs and cpds must have one entry per variable");
        }
        if let Some(s) = self.specs.iter().position(|s| s.support_size < 2) {
            return input(format!("variable {s} has support smaller than 2"));
        }
        for (v, cpd) in self.cpds.iter().enumerate() {
            let m = self.specs[v].support_size;
            match cpd {
                Cpd::Table { rows } => {
                    let parents = &self.dag.parent_lists[v];
                    if parents.contains(&Node::Outcome) {
                        return input(format!("variable {v} has the outcome as parent and needs a lazy cpd"));
                    }
                    let expected: usize = parents.iter().map(|p| self.node_support(*p)).product();
                    if rows.len() != expected {
                        return input(format!("variable {v}: {} cpd rows, expected {expected}", rows.len()));
                    }
                    for row in rows {
                        check_row(v, row, m)?;
                    }
                }
                Cpd::Lazy { .. } => {}
            }
        }
        let pa = &self.dag.outcome_parents;
        if self.outcome.effects.len() != pa.len() {
            return input("outcome effects must have one table per outcome parent");
        }
        for (i, &p) in pa.iter().enumerate() {
            if self.outcome.effects[i].len() != self.specs[p].support_size {
                return input(format!("effect table of parent {p} has the wrong length"));
            }
        }
        if !(self.outcome.noise_sigma2 >= 0.0) || !self.outcome.noise_sigma2.is_finite() {
            return input("noise variance must be finite and non-negative");
        }
        if let Some(int) = &self.outcome.interaction {
            if int.index_groups.iter().flatten().any(|&i| i >= pa.len()) {
                return input("interaction index outside the outcome parents");
            }
        }
        Ok(())
    }

    fn node_support(&self, node: Node) -> usize {
        match node {
            Node::Var(v) => self.specs[v].support_size,
            Node::Outcome => 0,
        }
    }

    fn check_intervention(&self, iv: &Intervention) -> Result<()> {
        for (&var, &val) in &iv.assignments {
            if var >= self.num_vars() {
                return input(format!("intervention on unknown variable {var}"));
            }
            if val >= self.specs[var].support_size {
                return input(format!(
                    "value {val} outside the support of variable {var} (size {})",
                    self.specs[var].support_size
                ));
            }
        }
        Ok(())
    }

    /// Noise-free outcome given the values of every outcome parent, ordered like
    /// `outcome_parents`.
    pub fn outcome_mean_from_parents(&self, parent_values: &[usize]) -> f64 {
        let additive: f64 = self
            .outcome
            .effects
            .iter()
            .zip(parent_values)
            .map(|(f, &v)| f[v])
            .sum();
        match &self.outcome.interaction {
            Some(int) if int.alpha != 0.0 => additive + int.term(parent_values),
            _ => additive,
        }
    }

    /// Noise-free outcome for a full value map.
    pub fn outcome_mean(&self, values: &[usize]) -> f64 {
        let pv: Vec<usize> = self.dag.outcome_parents.iter().map(|&p| values[p]).collect();
        self.outcome_mean_from_parents(&pv)
    }

    fn parent_values(&self, var: usize, values: &[usize], y_rounded: i64) -> (Vec<i64>, Vec<usize>) {
        let parents = &self.dag.parent_lists[var];
        let mut vals = Vec::with_capacity(parents.len());
        let mut sups = Vec::with_capacity(parents.len());
        for p in parents {
            match *p {
                Node::Var(pv) => {
                    vals.push(values[pv] as i64);
                    sups.push(self.specs[pv].support_size);
                }
                Node::Outcome => {
                    vals.push(y_rounded);
                    sups.push(0);
                }
            }
        }
        (vals, sups)
    }

    fn draw_variable<R: Rng + ?Sized>(&self, var: usize, values: &[usize], y_rounded: i64, rng: &mut R) -> usize {
        let (vals, sups) = self.parent_values(var, values, y_rounded);
        let m = self.specs[var].support_size;
        let row = self.cpds[var].row(&vals, &sups, m);
        draw_categorical(&row, rng)
    }

    /// Ancestral sample under `do(iv)`.
    pub fn sample<R: Rng + ?Sized>(&self, iv: &Intervention, rng: &mut R) -> Result<Sample> {
        self.check_intervention(iv)?;
        let mut values = vec![0usize; self.num_vars()];
        let mut y = 0.0;
        let mut y_rounded = 0i64;
        for node in &self.dag.topo_order {
            match *node {
                Node::Var(v) => {
                    values[v] = match iv.get(v) {
                        Some(x) => x,
                        None => self.draw_variable(v, &values, y_rounded, rng),
                    };
                }
                Node::Outcome => {
                    y = self.outcome_mean(&values) + self.outcome.draw_noise(rng);
                    y_rounded = round_outcome(y);
                }
            }
        }
        Ok(Sample { values, y })
    }

    /// Outcome-only sample: skips every node after `Y`. Produces the same `y`
    /// distribution as [`Scm::sample`] at lower cost.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, iv: &Intervention, rng: &mut R) -> Result<f64> {
        self.check_intervention(iv)?;
        if self.dag.outcome_parents.iter().all(|p| iv.assignments.contains_key(p)) {
            let pv: Vec<usize> = self.dag.outcome_parents.iter().map(|p| iv.assignments[p]).collect();
            return Ok(self.outcome_mean_from_parents(&pv) + self.outcome.draw_noise(rng));
        }
        let mut values = vec![0usize; self.num_vars()];
        for node in &self.dag.topo_order {
            match *node {
                Node::Var(v) => {
                    values[v] = match iv.get(v) {
                        Some(x) => x,
                        None => self.draw_variable(v, &values, 0, rng),
                    };
                }
                Node::Outcome => return Ok(self.outcome_mean(&values) + self.outcome.draw_noise(rng)),
            }
        }
        Err(Error::Internal("outcome missing from topological order".into()))
    }

    /// Unassigned variables that causally precede some unassigned outcome parent.
    fn relevant_unassigned(&self, iv: &Intervention) -> BTreeSet<usize> {
        let mut stack: Vec<usize> = self
            .dag
            .outcome_parents
            .iter()
            .copied()
            .filter(|p| !iv.assignments.contains_key(p))
            .collect();
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            for p in &self.dag.parent_lists[v] {
                if let Node::Var(pv) = *p {
                    if !iv.assignments.contains_key(&pv) && !seen.contains(&pv) {
                        stack.push(pv);
                    }
                }
            }
        }
        seen
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scm: Scm = serde_json::from_str(text)?;
        scm.validate()?;
        Ok(scm)
    }
}

fn check_row(var: usize, row: &[f64], m: usize) -> Result<()> {
    if row.len() != m {
        return input(format!("variable {var}: cpd row of length {} for support {m}", row.len()));
    }
    if row.iter().any(|p| !(*p >= 0.0)) {
        return input(format!("variable {var}: negative probability"));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return input(format!("variable {var}: cpd row sums to {total}"));
    }
    Ok(())
}

fn draw_categorical<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.len() - 1
}

/// `E[Y | do(iv)]` with its standard error.
///
/// Exact when `iv` fixes every outcome parent, or when the unassigned
/// ancestors of the outcome have at most [`ENUMERATION_LIMIT`] joint
/// configurations. Otherwise `budget` Monte Carlo draws from a stream keyed by
/// the model seed.
pub fn interventional_mean(scm: &Scm, iv: &Intervention, budget: usize) -> Result<(f64, f64)> {
    scm.check_intervention(iv)?;
    let pa = scm.outcome_parents();
    if pa.iter().all(|p| iv.assignments.contains_key(p)) {
        let pv: Vec<usize> = pa.iter().map(|p| iv.assignments[p]).collect();
        return Ok((scm.outcome_mean_from_parents(&pv), 0.0));
    }
    let free = scm.relevant_unassigned(iv);
    let configs = free
        .iter()
        .try_fold(1u64, |acc, &v| acc.checked_mul(scm.specs[v].support_size as u64))
        .unwrap_or(u64::MAX);
    if configs <= ENUMERATION_LIMIT {
        let order: Vec<usize> = scm
            .dag
            .topo_order
            .iter()
            .filter_map(|n| match n {
                Node::Var(v) if free.contains(v) => Some(*v),
                _ => None,
            })
            .collect();
        let mut values = vec![0usize; scm.num_vars()];
        for (&v, &x) in &iv.assignments {
            values[v] = x;
        }
        let mean = enumerate_mean(scm, &order, 0, &mut values, 1.0);
        return Ok((mean, 0.0));
    }
    if budget < 2 {
        return input("monte carlo fallback needs a budget of at least 2 draws");
    }
    let seed = splitmix(scm.meta.seed.unwrap_or(0) ^ 0x6d63_6d65_616e);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..budget {
        let y = scm.sample_outcome(iv, &mut rng)?;
        sum += y;
        sum_sq += y * y;
    }
    let n = budget as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

fn enumerate_mean(scm: &Scm, order: &[usize], depth: usize, values: &mut [usize], weight: f64) -> f64 {
    if depth == order.len() {
        return weight * scm.outcome_mean(values);
    }
    let v = order[depth];
    let (vals, sups) = scm.parent_values(v, values, 0);
    let row = scm.cpds[v].row(&vals, &sups, scm.specs[v].support_size);
    let mut total = 0.0;
    for (j, p) in row.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        values[v] = j;
        total += enumerate_mean(scm, order, depth + 1, values, weight * p);
    }
    values[v] = 0;
    total
}

/// Best global intervention of an additive model: per-parent argmax of `f_k`
/// (smallest index on ties) and value 0 for non-parents.
pub fn best_global(scm: &Scm) -> Result<(Vec<usize>, f64)> {
    if !scm.is_additive() {
        return Err(Error::Unsupported(
            "exact argmax of a model with interaction terms; use best_global_exhaustive".into(),
        ));
    }
    let mut x = vec![0usize; scm.num_vars()];
    let mut value = 0.0;
    for (i, &p) in scm.outcome_parents().iter().enumerate() {
        let (j, best) = argmax(&scm.outcome.effects[i]);
        x[p] = j;
        value += best;
    }
    Ok((x, value))
}

/// Best global intervention by enumeration. Parents linked through an
/// interaction group are searched jointly over the product of their supports;
/// every other parent is maximised on its own. Refuses any jointly searched
/// block whose product exceeds `cap`.
pub fn best_global_exhaustive(scm: &Scm, cap: u64) -> Result<(Vec<usize>, f64)> {
    let pa = scm.outcome_parents();
    let groups: &[Vec<usize>] = match &scm.outcome.interaction {
        Some(int) if int.alpha != 0.0 => &int.index_groups,
        _ => &[],
    };
    let coef = scm.outcome.interaction.as_ref().map_or(0.0, Interaction::coefficient);

    // Union-find over parent positions.
    let mut root: Vec<usize> = (0..pa.len()).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for g in groups {
        for w in g.windows(2) {
            let (a, b) = (find(&mut root, w[0]), find(&mut root, w[1]));
            root[a.max(b)] = a.min(b);
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![usize::MAX; pa.len()];
    for i in 0..pa.len() {
        let r = find(&mut root, i);
        if block_of[r] == usize::MAX {
            block_of[r] = blocks.len();
            blocks.push(Vec::new());
        }
        block_of[i] = block_of[r];
        blocks[block_of[i]].push(i);
    }

    let mut best_pv = vec![0usize; pa.len()];
    let mut total = 0.0;
    for block in &blocks {
        let sups: Vec<usize> = block.iter().map(|&i| scm.specs[pa[i]].support_size).collect();
        let size = sups
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m as u64))
            .unwrap_or(u64::MAX);
        if size > cap {
            return Err(Error::Unsupported(format!("{size} joint parent configurations exceed the cap of {cap}")));
        }
        let block_groups: Vec<&Vec<usize>> = groups.iter().filter(|g| g.first().is_some_and(|i| block.contains(i))).collect();
        let mut pv = vec![0usize; pa.len()];
        let score = |pv: &[usize]| -> f64 {
            let additive: f64 = block.iter().map(|&i| scm.outcome.effects[i][pv[i]]).sum();
            let inter: f64 = block_groups.iter().map(|g| g.iter().map(|&i| (pv[i] + 1) as f64).product::<f64>()).sum();
            additive + coef * inter
        };
        let mut best_value = score(&pv);
        let mut best_local: Vec<usize> = block.iter().map(|&i| pv[i]).collect();
        'outer: loop {
            let mut d = block.len();
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                pv[block[d]] += 1;
                if pv[block[d]] < sups[d] {
                    break;
                }
                pv[block[d]] = 0;
            }
            let v = score(&pv);
            if v > best_value {
                best_value = v;
                best_local = block.iter().map(|&i| pv[i]).collect();
            }
        }
        for (&i, &v) in block.iter().zip(&best_local) {
            best_pv[i] = v;
        }
        total += best_value;
    }
    let mut x = vec![0usize; scm.num_vars()];
    for (i, &p) in pa.iter().enumerate() {
        x[p] = best_pv[i];
    }
    // Report the value the model itself assigns, so it is consistent with
    // interventional means.
    let value = scm.outcome_mean_from_parents(&best_pv);
    debug_assert!((value - total).abs() <= 1e-9 * value.abs().max(1.0));
    Ok((x, value))
}

/// Smallest, over outcome parents, of the largest within-variable spread of `f_k`.
/// `+inf` when the outcome has no parents.
pub fn epsilon_min(scm: &Scm) -> f64 {
    scm.outcome
        .effects
        .iter()
        .map(|f| {
            let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Index and value of the maximum, first index on ties.
pub(crate) fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, xs[0]);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Independent variables, no edges, `Y` last; `effects` keyed by parent.
    pub fn independent(supports: &[usize], parents: &[(usize, Vec<f64>)], sigma2: f64) -> Scm {
        let k = supports.len();
        let mut topo: Vec<Node> = (0..k).map(Node::Var).collect();
        topo.push(Node::Outcome);
        let dag = Dag {
            num_vars: k,
            outcome_parents: parents.iter().map(|(p, _)| *p).collect(),
            parent_lists: vec![Vec::new(); k],
            topo_order: topo,
        };
        let specs = supports.iter().map(|&m| VariableSpec { support_size: m }).collect();
        let cpds = supports
            .iter()
            .map(|&m| Cpd::Table { rows: vec![vec![1.0 / m as f64; m]] })
            .collect();
        let outcome = OutcomeModel {
            effects: parents.iter().map(|(_, f)| f.clone()).collect(),
            noise_sigma2: sigma2,
            noise_kind: NoiseKind::Gaussian,
            interaction: None,
        };
        Scm::new(dag, specs, cpds, outcome, ScmMeta::default()).unwrap()
    }

    /// `X0 -> X1 -> Y`, with `p(X1 | X0)` given by `rows`.
    pub fn chain(rows: Vec<Vec<f64>>, f1: Vec<f64>, sigma2: f64) -> Scm {
        let dag = Dag {
            num_vars: 2,
            outcome_parents: vec![1],
            parent_lists: vec![vec![], vec![Node::Var(0)]],
            topo_order: vec![Node::Var(0), Node::Var(1), Node::Outcome],
        };
        let m1 = f1.len();
        let specs = vec![VariableSpec { support_size: rows.len() }, VariableSpec { support_size: m1 }];
        let cpds = vec![
            Cpd::Table { rows: vec![vec![1.0 / rows.len() as f64; rows.len()]] },
            Cpd::Table { rows },
        ];
        let outcome = OutcomeModel { effects: vec![f1], noise_sigma2: sigma2, noise_kind: NoiseKind::Gaussian, interaction: None };
        Scm::new(dag, specs, cpds, outcome, ScmMeta::default()).unwrap()
    }
}
