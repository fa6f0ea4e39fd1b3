//! One-hot linear-bandit machinery: embeddings, marginal action sets,
//! marginally uniform designs, pseudoinverse least squares and gap estimates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Redraws attempted before a design is declared non-estimable.
pub const MAX_DESIGN_REDRAWS: usize = 16;

const ESTIMABILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    supports: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Embedding {
    pub fn new(supports: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(supports.len());
        let mut dim = 0;
        for &m in supports {
            offsets.push(dim);
            dim += m;
        }
        Self { supports: supports.to_vec(), offsets, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vars(&self) -> usize {
        self.supports.len()
    }

    pub fn supports(&self) -> &[usize] {
        &self.supports
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinate of `(var, value)`.
    pub fn coord(&self, var: usize, value: usize) -> usize {
        self.offsets[var] + value
    }

    pub fn check(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.supports.len() {
            return input(format!("action has {} entries for {} variables", x.len(), self.supports.len()));
        }
        if let Some(k) = x.iter().zip(&self.supports).position(|(v, m)| v >= m) {
            return input(format!("value {} outside the support of variable {k}", x[k]));
        }
        Ok(())
    }

    pub fn embed(&self, x: &[usize]) -> Result<DVector<f64>> {
        self.check(x)?;
        let mut e = DVector::zeros(self.dim);
        for (k, &v) in x.iter().enumerate() {
            e[self.coord(k, v)] = 1.0;
        }
        Ok(e)
    }
}

/// Cartesian product `S_1 x ... x S_K` of per-variable value sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalActionSet {
    /// Sorted, non-empty value lists.
    pub sets: Vec<Vec<usize>>,
}

impl MarginalActionSet {
    pub fn full(supports: &[usize]) -> Self {
        Self { sets: supports.iter().map(|&m| (0..m).collect()).collect() }
    }

    pub fn new(mut sets: Vec<Vec<usize>>) -> Result<Self> {
        for (k, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return input(format!("marginal {k} is empty"));
            }
        }
        Ok(Self { sets })
    }

    pub fn num_vars(&self) -> usize {
        self.sets.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    /// `sum_k |S_k|`.
    pub fn total_size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn max_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn singletons(&self) -> usize {
        self.sets.iter().filter(|s| s.len() == 1).count()
    }

    pub fn contains(&self, x: &[usize]) -> bool {
        x.len() == self.sets.len() && x.iter().zip(&self.sets).all(|(v, s)| s.binary_search(v).is_ok())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.sets.len() == other.sets.len()
            && self.sets.iter().zip(&other.sets).all(|(a, b)| a.iter().all(|v| b.binary_search(v).is_ok()))
    }

    /// Every action of the product, in lexicographic order. Exponential in K.
    pub fn actions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(self.sets.len())];
        for s in &self.sets {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    s.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// `counts[k][j]`: rounds of a design with `x_k = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignCounts {
    pub counts: Vec<Vec<usize>>,
}

impl DesignCounts {
    pub fn from_actions(actions: &[Vec<usize>], supports: &[usize]) -> Self {
        let mut counts: Vec<Vec<usize>> = supports.iter().map(|&m| vec![0; m]).collect();
        for x in actions {
            for (k, &v) in x.iter().enumerate() {
                counts[k][v] += 1;
            }
        }
        Self { counts }
    }
}

/// `V_n = sum_t e(x_t) e(x_t)^T`.
///
/// Singleton variables in `set` contribute a column that equals the per-value
/// counts of the other variables, so only non-singleton pairs are accumulated
/// per round.
pub fn covariance(actions: &[Vec<usize>], emb: &Embedding) -> DMatrix<f64> {
    let d = emb.dim();
    let k = emb.num_vars();
    let mut v = DMatrix::<f64>::zeros(d, d);
    if actions.is_empty() {
        return v;
    }
    let first = &actions[0];
    let constant: Vec<bool> = (0..k).map(|i| actions.iter().all(|x| x[i] == first[i])).collect();
    let active: Vec<usize> = (0..k).filter(|&i| !constant[i]).collect();
    let counts = DesignCounts::from_actions(actions, emb.supports());

    let mut acc = vec![0u32; d * d];
    let mut coords = vec![0usize; active.len()];
    for x in actions {
        for (c, &i) in coords.iter_mut().zip(&active) {
            *c = emb.coord(i, x[i]);
        }
        for (a, &ca) in coords.iter().enumerate() {
            let row = ca * d;
            for &cb in &coords[a..] {
                acc[row + cb] += 1;
            }
        }
    }
    for r in 0..d {
        for c in r..d {
            let val = acc[r * d + c].max(acc[c * d + r]) as f64;
            if val != 0.0 {
                v[(r, c)] = val;
                v[(c, r)] = val;
            }
        }
    }
    let n = actions.len() as f64;
    for i in (0..k).filter(|&i| constant[i]) {
        let ci = emb.coord(i, first[i]);
        for (j, cj) in counts.counts.iter().enumerate() {
            for (val, &cnt) in cj.iter().enumerate() {
                let c = emb.coord(j, val);
                let w = if j == i { if val == first[i] { n } else { 0.0 } } else { cnt as f64 };
                v[(ci, c)] = w;
                v[(c, ci)] = w;
            }
        }
    }
    v
}

/// Moore–Penrose pseudoinverse of a symmetric PSD matrix through its
/// eigendecomposition, discarding eigenvalues below `dim * eps * lambda_max`.
///
/// Rows with a zero diagonal are identically zero in a PSD matrix; they are
/// dropped before decomposing, which leaves the result unchanged and avoids
/// the eigen solver stalling on large null blocks.
pub fn pseudo_inverse(v: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let d = v.nrows();
    let live: Vec<usize> = (0..d).filter(|&i| v[(i, i)] != 0.0).collect();
    let mut pinv = DMatrix::<f64>::zeros(d, d);
    if live.is_empty() {
        return (pinv, 0.0);
    }
    let sub = v.select_rows(&live).select_columns(&live);
    let (values, vectors) = symmetric_spectrum(&sub);
    let lmax = values.iter().copied().fold(0.0, f64::max);
    let tol = d as f64 * f64::EPSILON * lmax;
    let mut sub_pinv = DMatrix::<f64>::zeros(live.len(), live.len());
    for (i, &lambda) in values.iter().enumerate() {
        if lambda > tol {
            let u = vectors.column(i);
            sub_pinv += (u * u.transpose()) / lambda;
        }
    }
    for (a, &ra) in live.iter().enumerate() {
        for (b, &rb) in live.iter().enumerate() {
            pinv[(ra, rb)] = sub_pinv[(a, b)];
        }
    }
    (pinv, tol)
}

/// Eigenpairs of a symmetric PSD matrix; falls back to the SVD if the
/// symmetric solver returns non-finite values.
fn symmetric_spectrum(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|x| x.is_finite()) && eig.eigenvectors.iter().all(|x| x.is_finite()) {
        return (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    (svd.singular_values.iter().copied().collect(), u)
}

/// True when every within-variable contrast `e_k(i) - e_k(j)`, `i, j in S_k`,
/// lies in the range of `v`.
pub fn contrasts_estimable(v: &DMatrix<f64>, pinv: &DMatrix<f64>, set: &MarginalActionSet, emb: &Embedding) -> bool {
    let proj = v * pinv;
    for (k, s) in set.sets.iter().enumerate() {
        let base = emb.coord(k, s[0]);
        for &j in &s[1..] {
            let c = emb.coord(k, j);
            for r in 0..emb.dim() {
                let z_r = if r == base { 1.0 } else if r == c { -1.0 } else { 0.0 };
                let pz = proj[(r, base)] - proj[(r, c)];
                if (pz - z_r).abs() > ESTIMABILITY_TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// Design whose every marginal cycles through fresh random permutations of
/// `S_k`, so per-value counts differ by at most one.
pub fn design_sequence<R: Rng + ?Sized>(set: &MarginalActionSet, n: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let supports: Vec<usize> = set.sets.iter().map(|s| s.last().map_or(1, |m| m + 1)).collect();
    let emb = Embedding::new(&supports);
    design_with_covariance(set, n, &emb, rng).map(|(actions, _)| actions)
}

pub(crate) fn design_with_covariance<R: Rng + ?Sized>(
    set: &MarginalActionSet,
    n: usize,
    emb: &Embedding,
    rng: &mut R,
) -> Result<(Vec<Vec<usize>>, DMatrix<f64>)> {
    if n < set.max_size() {
        return input(format!("design of {n} rounds cannot cover a marginal of size {}", set.max_size()));
    }
    for _ in 0..=MAX_DESIGN_REDRAWS {
        let actions = balanced_actions(set, n, rng);
        let v = covariance(&actions, emb);
        let (pinv, _) = pseudo_inverse(&v);
        if contrasts_estimable(&v, &pinv, set, emb) {
            return Ok((actions, v));
        }
    }
    Err(Error::Internal(format!(
        "no estimable design after {MAX_DESIGN_REDRAWS} redraws (n = {n}, marginal sizes {:?})",
        set.sizes()
    )))
}

fn balanced_actions<R: Rng + ?Sized>(set: &MarginalActionSet, n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut actions = vec![vec![0usize; set.num_vars()]; n];
    for (k, s) in set.sets.iter().enumerate() {
        if s.len() == 1 {
            for x in actions.iter_mut() {
                x[k] = s[0];
            }
            continue;
        }
        let mut perm = s.clone();
        for (t, x) in actions.iter_mut().enumerate() {
            if t % s.len() == 0 {
                perm.shuffle(rng);
            }
            x[k] = perm[t % s.len()];
        }
    }
    actions
}

/// `sum_k 2|S_k| / (n - |S_k|)`.
pub fn design_bound(set: &MarginalActionSet, n: usize) -> Result<f64> {
    if n <= set.max_size() {
        return input(format!("bound needs n > max |S_k| = {}", set.max_size()));
    }
    Ok(set
        .sets
        .iter()
        .map(|s| 2.0 * s.len() as f64 / (n - s.len()) as f64)
        .sum())
}

#[derive(Debug, Clone)]
pub struct OlsEstimate {
    pub theta_hat: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub n: usize,
    pub pinv_tol: f64,
}

impl OlsEstimate {
    /// `||z||^2` in the `V_n^+` metric.
    pub fn norm_sq(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.pinv * z))
    }

    /// Theta entries of one variable.
    pub fn theta_var<'a>(&'a self, emb: &Embedding, var: usize) -> &'a [f64] {
        let start = emb.offsets()[var];
        &self.theta_hat.as_slice()[start..start + emb.supports()[var]]
    }
}

/// Least squares `theta = V_n^+ sum_t e(x_t) y_t`.
pub fn ols(actions: &[Vec<usize>], ys: &[f64], emb: &Embedding) -> Result<OlsEstimate> {
    if actions.len() != ys.len() {
        return input(format!("{} actions but {} outcomes", actions.len(), ys.len()));
    }
    if actions.is_empty() {
        return input("least squares needs at least one observation");
    }
    for x in actions {
        emb.check(x)?;
    }
    let v = covariance(actions, emb);
    Ok(ols_with_covariance(actions, ys, emb, v))
}

pub(crate) fn ols_with_covariance(actions: &[Vec<usize>], ys: &[f64], emb: &Embedding, v: DMatrix<f64>) -> OlsEstimate {
    let mut b = DVector::<f64>::zeros(emb.dim());
    for (x, &y) in actions.iter().zip(ys) {
        for (k, &val) in x.iter().enumerate() {
            b[emb.coord(k, val)] += y;
        }
    }
    let (pinv, tol) = pseudo_inverse(&v);
    let theta_hat = &pinv * b;
    OlsEstimate { theta_hat, covariance: v, pinv, n: actions.len(), pinv_tol: tol }
}

/// Per-variable empirical gaps over a marginal action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTables {
    pub vars: Vec<VariableGaps>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableGaps {
    /// Surviving values `S_k`.
    pub values: Vec<usize>,
    /// `theta_k^j` for each surviving value.
    pub theta: Vec<f64>,
    /// `max_{i in S_k} theta_k^i - theta_k^j` for each surviving value.
    pub gaps: Vec<f64>,
}

impl VariableGaps {
    /// `theta_k^i - theta_k^j` by position in `values`.
    pub fn pairwise(&self, i: usize, j: usize) -> f64 {
        self.theta[i] - self.theta[j]
    }

    /// Largest within-variable difference of the estimates.
    pub fn spread(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    pub fn gap_of(&self, value: usize) -> Option<f64> {
        self.values.iter().position(|&v| v == value).map(|p| self.gaps[p])
    }
}

impl GapTables {
    /// Empirical gap between two actions of the set, `sum_k theta_k^{x_k} - theta_k^{x'_k}`.
    pub fn action_gap(&self, x: &[usize], x2: &[usize]) -> f64 {
        self.vars
            .iter()
            .zip(x.iter().zip(x2))
            .map(|(g, (a, b))| {
                let pa = g.values.iter().position(|v| v == a).expect("value in set");
                let pb = g.values.iter().position(|v| v == b).expect("value in set");
                g.pairwise(pa, pb)
            })
            .sum()
    }
}

pub fn gap_estimates(est: &OlsEstimate, set: &MarginalActionSet, emb: &Embedding) -> GapTables {
    let vars = set
        .sets
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let theta: Vec<f64> = s.iter().map(|&j| est.theta_hat[emb.coord(k, j)]).collect();
            let best = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let gaps = theta.iter().map(|t| best - t).collect();
            VariableGaps { values: s.clone(), theta, gaps }
        })
        .collect();
    GapTables { vars }
}

/// Phase-wide bound on gap errors, `sqrt(4 sigma^2 (sum_k |S_k| / n) ln(1/delta))`.
pub fn confidence_radius(set: &MarginalActionSet, n: usize, sigma2: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return input(format!("delta must lie in (0, 1), got {delta}"));
    }
    if n == 0 {
        return input("radius needs n >= 1");
    }
    Ok((4.0 * sigma2 * set.total_size() as f64 / n as f64 * (1.0 / delta).ln()).sqrt())
}
