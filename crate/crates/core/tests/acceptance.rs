//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 regardless of outcome so the workspace test run stays usable;
//! set `ACCEPTANCE_STRICT=1` to exit 1 on any failure. A positional argument
//! runs only criteria whose name contains it.
//!
//! Ground truth (optimal values, gaps of global interventions, the design
//! norm) is recomputed here from the raw model parameters rather than through
//! the library's evaluation helpers.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use acbug::baselines::{find_parents, ParentsTestConfig};
use acbug::design::{design_bound, design_sequence, gap_estimates, ols, Embedding, MarginalActionSet};
use acbug::env::ScmEnv;
use acbug::gen::{gen_scm, GenConfig};
use acbug::harness::{run_experiment, Algorithm, ExperimentConfig, ExperimentOutput, RunOptions, RunRecord, Sweep, SweepParam};
use acbug::modl::{min_phase_size, run_modl, theoretical_complexity, ModlParams, Schedule};
use acbug::scm::Scm;

const EPSILON: f64 = 0.5;
const DELTA: f64 = 0.1;
const MASTER_SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- oracles

/// `E[Y | do(x)]` for a global intervention, straight from the outcome
/// parameters.
fn oracle_value(scm: &Scm, x: &[usize]) -> f64 {
    let pa = &scm.dag.outcome_parents;
    let mut y: f64 = pa.iter().enumerate().map(|(i, &p)| scm.outcome.effects[i][x[p]]).sum();
    if let Some(int) = &scm.outcome.interaction {
        let coef = int.alpha * int.reward_scale / (int.m_max as f64).powi(4);
        for g in &int.index_groups {
            y += coef * g.iter().map(|&i| (x[pa[i]] + 1) as f64).product::<f64>();
        }
    }
    y
}

/// Optimal value. Parents sharing an interaction group (transitively) are
/// enumerated jointly; all others are maximised one at a time.
fn oracle_optimum(scm: &Scm) -> f64 {
    let pa = &scm.dag.outcome_parents;
    let groups: Vec<Vec<usize>> = match &scm.outcome.interaction {
        Some(int) if int.alpha != 0.0 => int.index_groups.clone(),
        _ => Vec::new(),
    };
    // Merge overlapping groups into blocks of parent positions.
    let mut blocks: Vec<BTreeSet<usize>> = Vec::new();
    for g in &groups {
        let mut merged: BTreeSet<usize> = g.iter().copied().collect();
        blocks.retain(|b| {
            if b.is_disjoint(&merged) {
                true
            } else {
                merged.extend(b);
                false
            }
        });
        blocks.push(merged);
    }
    let in_block: BTreeSet<usize> = blocks.iter().flatten().copied().collect();
    let mut best: f64 = (0..pa.len())
        .filter(|i| !in_block.contains(i))
        .map(|i| scm.outcome.effects[i].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum();
    let coef = scm.outcome.interaction.as_ref().map_or(0.0, |i| i.alpha * i.reward_scale / (i.m_max as f64).powi(4));
    for block in &blocks {
        let members: Vec<usize> = block.iter().copied().collect();
        let sizes: Vec<usize> = members.iter().map(|&i| scm.specs[pa[i]].support_size).collect();
        let total: usize = sizes.iter().product();
        assert!(total <= 5_000_000, "oracle enumeration too large: {total}");
        let inner: Vec<&Vec<usize>> = groups.iter().filter(|g| block.contains(&g[0])).collect();
        let mut values = vec![0usize; pa.len()];
        let mut block_best = f64::NEG_INFINITY;
        for mut code in 0..total {
            for (slot, &i) in members.iter().enumerate() {
                values[i] = code % sizes[slot];
                code /= sizes[slot];
            }
            let additive: f64 = members.iter().map(|&i| scm.outcome.effects[i][values[i]]).sum();
            let products: f64 = inner.iter().map(|g| g.iter().map(|&i| (values[i] + 1) as f64).product::<f64>()).sum();
            block_best = block_best.max(additive + coef * products);
        }
        best += block_best;
    }
    best
}

fn global_values(r: &RunRecord, k: usize) -> Vec<usize> {
    assert_eq!(r.chosen.assignments.len(), k, "expected a global intervention");
    (0..k).map(|v| r.chosen.assignments[&v]).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

// ------------------------------------------------------------ experiments

fn base_config(gen: GenConfig, sweep: Sweep, algorithms: Vec<Algorithm>, scms: usize, runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        gen,
        sweep,
        algorithms,
        epsilon: EPSILON,
        delta: DELTA,
        num_scms: scms,
        runs_per_scm: runs,
        master_seed: MASTER_SEED,
        arm_cap: 100_000,
        schedule: Schedule::ProofConsistent,
        common_random_numbers: true,
        record_wall_time: false,
    }
}

fn k10(num_parents: usize) -> GenConfig {
    GenConfig { num_vars: 10, num_parents, support_lo: 3, support_hi: 6, degree: 3.0, ..GenConfig::default() }
}

struct Run {
    cfg: ExperimentConfig,
    out: ExperimentOutput,
}

impl Run {
    fn new(cfg: ExperimentConfig) -> Self {
        let out = run_experiment(&cfg, &RunOptions::default()).expect("experiment runs");
        Run { cfg, out }
    }

    fn scm(&self, r: &RunRecord) -> &Scm {
        let si = self.cfg.sweep.values.iter().position(|&v| v == r.sweep_value).unwrap();
        &self.out.scms[si][r.scm_idx]
    }

    fn records(&self, v: f64, alg: Algorithm) -> Vec<&RunRecord> {
        self.out.records.iter().filter(|r| r.sweep_value == v && r.algorithm == alg).collect()
    }

    /// Oracle gap of a global-intervention record.
    fn gap(&self, r: &RunRecord) -> f64 {
        let scm = self.scm(r);
        oracle_optimum(scm) - oracle_value(scm, &global_values(r, scm.num_vars()))
    }

    fn samples(&self, v: f64, alg: Algorithm) -> (f64, f64) {
        mean_se(&self.records(v, alg).iter().map(|r| r.samples as f64).collect::<Vec<_>>())
    }

    /// Mean oracle gap; P1 returns partial interventions, whose value
    /// depends on the model's conditionals, so its gap comes from the record.
    fn gaps(&self, v: f64, alg: Algorithm) -> (f64, f64) {
        let g: Vec<f64> = self
            .records(v, alg)
            .iter()
            .map(|r| if alg == Algorithm::P1 { r.true_gap } else { self.gap(r) })
            .collect();
        mean_se(&g)
    }

    /// Largest disagreement between the harness's and the oracle's gaps on
    /// global interventions.
    fn gap_disagreement(&self) -> f64 {
        self.out
            .records
            .iter()
            .filter(|r| r.algorithm != Algorithm::P1)
            .map(|r| (r.true_gap - self.gap(r)).abs())
            .fold(0.0, f64::max)
    }
}

// --------------------------------------------------------------- criteria

fn pac() -> Verdict {
    let cfg = base_config(
        k10(5),
        Sweep { param: SweepParam::NumParents, values: vec![5.0] },
        vec![Algorithm::Modl],
        20,
        20,
    );
    let run = Run::new(cfg);
    let recs = run.records(5.0, Algorithm::Modl);
    let failures = recs.iter().filter(|r| run.gap(r) > EPSILON).count();
    let rate = failures as f64 / recs.len() as f64;
    let worst = recs.iter().map(|r| run.gap(r)).fold(0.0, f64::max);
    let ceiling = ceiling_violations(&run, &recs);
    CEILING_LOG.with(|c| c.borrow_mut().push(("pac", ceiling)));
    verdict(
        recs.len() == 400 && rate <= DELTA + 0.05,
        format!(
            "failure rate {rate:.4} <= 0.15 over {} runs (worst gap {worst:.4}, harness gap mismatch {:.1e})",
            recs.len(),
            run.gap_disagreement()
        ),
    )
}

/// `(violations, runs, worst samples / 4H)` for the given MODL records.
fn ceiling_violations(run: &Run, recs: &[&RunRecord]) -> (usize, usize, f64) {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for r in recs {
        let scm = run.scm(r);
        let gen = scm.meta.config.as_ref().unwrap();
        let params = ModlParams::new(run.cfg.epsilon, run.cfg.delta, gen.noise_sigma2, gen.reward_scale);
        let h = theoretical_complexity(scm, &params).unwrap();
        let bound = match r.algorithm {
            Algorithm::ModlKnownPy => h.h_eps_known_py,
            _ => h.h_eps,
        };
        let ratio = r.samples as f64 / (4.0 * bound);
        worst = worst.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    (violations, recs.len(), worst)
}

thread_local! {
    static CEILING_LOG: std::cell::RefCell<Vec<(&'static str, (usize, usize, f64))>> = const { std::cell::RefCell::new(Vec::new()) };
    static PARENTS_SWEEP: std::cell::RefCell<Option<std::rc::Rc<Run>>> = const { std::cell::RefCell::new(None) };
}

const PARENT_COUNTS: [f64; 5] = [2.0, 4.0, 6.0, 8.0, 10.0];

fn parents_sweep() -> std::rc::Rc<Run> {
    PARENTS_SWEEP.with(|cell| {
        cell.borrow_mut()
            .get_or_insert_with(|| {
                let cfg = base_config(
                    k10(2),
                    Sweep { param: SweepParam::NumParents, values: PARENT_COUNTS.to_vec() },
                    vec![Algorithm::Modl, Algorithm::ModlKnownPy, Algorithm::Oracle, Algorithm::P1],
                    8,
                    3,
                );
                std::rc::Rc::new(Run::new(cfg))
            })
            .clone()
    })
}

fn ordering() -> Verdict {
    let run = parents_sweep();
    let mut ok = true;
    let mut cells = Vec::new();
    let (mut go, mut gm, mut gp) = (0.0, 0.0, 0.0);
    for &v in &PARENT_COUNTS {
        let (o, _) = run.samples(v, Algorithm::Oracle);
        let (m, _) = run.samples(v, Algorithm::Modl);
        let (p, _) = run.samples(v, Algorithm::P1);
        ok &= o <= m && m <= p;
        cells.push(format!("P_Y={v}: {o:.0}/{m:.0}/{p:.0}"));
        go += run.gaps(v, Algorithm::Oracle).0;
        gm += run.gaps(v, Algorithm::Modl).0;
        gp += run.gaps(v, Algorithm::P1).0;
    }
    let n = PARENT_COUNTS.len() as f64;
    let (go, gm, gp) = (go / n, gm / n, gp / n);
    let gap_ok = (gm - go).abs() <= (gm - gp).abs();
    verdict(
        ok && gap_ok,
        format!(
            "mean samples oracle/MODL/P1 [{}]; mean gaps oracle {go:.4}, MODL {gm:.4}, P1 {gp:.4}",
            cells.join(", ")
        ),
    )
}

fn coincidence() -> Verdict {
    let run = parents_sweep();
    let modl = run.records(10.0, Algorithm::Modl);
    let oracle = run.records(10.0, Algorithm::Oracle);
    let mismatches = modl
        .iter()
        .zip(&oracle)
        .filter(|(a, b)| a.samples != b.samples || a.chosen != b.chosen)
        .count();
    verdict(
        !modl.is_empty() && modl.len() == oracle.len() && mismatches == 0,
        format!("{mismatches} mismatches over {} paired runs at P_Y=K=10", modl.len()),
    )
}

fn monotonicity() -> Verdict {
    let run = parents_sweep();
    let stats: Vec<(f64, f64)> = PARENT_COUNTS.iter().map(|&v| run.samples(v, Algorithm::Modl)).collect();
    let mut inversions = 0;
    let mut ok = true;
    for w in stats.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        if b >= a {
            inversions += 1;
            ok &= b - a <= (sa * sa + sb * sb).sqrt();
        }
    }
    ok &= inversions <= 1;
    let cells: Vec<String> = stats.iter().map(|(m, s)| format!("{m:.0}±{s:.0}")).collect();
    verdict(ok, format!("MODL mean samples over P_Y 2..10: [{}], {inversions} inversions", cells.join(", ")))
}

fn se_blowup() -> Verdict {
    let gen = GenConfig { num_vars: 4, num_parents: 2, support_lo: 3, support_hi: 3, degree: 3.0, ..GenConfig::default() };
    let cfg = base_config(
        gen,
        Sweep { param: SweepParam::NumParents, values: vec![2.0] },
        vec![Algorithm::Modl, Algorithm::Se],
        10,
        4,
    );
    let run = Run::new(cfg);
    let (m, _) = run.samples(2.0, Algorithm::Modl);
    let (s, _) = run.samples(2.0, Algorithm::Se);
    let modl = run.records(2.0, Algorithm::Modl);
    CEILING_LOG.with(|c| c.borrow_mut().push(("se", ceiling_violations(&run, &modl))));
    verdict(s >= 20.0 * m, format!("SE {s:.0} vs MODL {m:.0} mean samples: ratio {:.2} (need >= 20)", s / m))
}

fn ceiling() -> Verdict {
    let run = parents_sweep();
    let modl: Vec<&RunRecord> = run.out.records.iter().filter(|r| r.algorithm == Algorithm::Modl).collect();
    let known: Vec<&RunRecord> = run.out.records.iter().filter(|r| r.algorithm == Algorithm::ModlKnownPy).collect();
    let mut parts = vec![("sweep", ceiling_violations(&run, &modl)), ("sweep_known_py", ceiling_violations(&run, &known))];
    CEILING_LOG.with(|c| parts.extend(c.borrow().iter().copied()));
    let violations: usize = parts.iter().map(|(_, (v, _, _))| v).sum();
    let cells: Vec<String> = parts
        .iter()
        .map(|(name, (v, n, w))| format!("{name}: {v}/{n} over, worst ratio {w:.4}"))
        .collect();
    verdict(violations == 0, format!("samples <= 4H on every run; {}", cells.join("; ")))
}

/// `max_{x, x'} ||e(x) - e(x')||^2` under the pseudoinverse of the realised
/// design covariance, computed by SVD and exhaustive pair enumeration.
fn realised_design_norm(set: &MarginalActionSet, supports: &[usize], actions: &[Vec<usize>]) -> f64 {
    let d: usize = supports.iter().sum();
    let offsets: Vec<usize> = supports.iter().scan(0, |acc, &m| { let o = *acc; *acc += m; Some(o) }).collect();
    let embed = |x: &[usize]| {
        let mut e = DVector::zeros(d);
        for (k, &v) in x.iter().enumerate() {
            e[offsets[k] + v] = 1.0;
        }
        e
    };
    let mut v = DMatrix::zeros(d, d);
    for a in actions {
        let e = embed(a);
        v += &e * e.transpose();
    }
    let pinv = v.pseudo_inverse(1e-9).expect("svd");
    let all = set.actions();
    let mut worst: f64 = 0.0;
    for a in &all {
        for b in &all {
            let z = embed(a) - embed(b);
            worst = worst.max((z.transpose() * &pinv * &z)[0]);
        }
    }
    worst
}

fn design_variance_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 3);
    let (mut violations, mut design_errors, mut worst) = (0, 0, 0.0f64);
    for _ in 0..200 {
        let k = rng.random_range(1..=3);
        let supports: Vec<usize> = (0..k).map(|_| rng.random_range(2..=3)).collect();
        let sets: Vec<Vec<usize>> = supports
            .iter()
            .map(|&m| {
                let s: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.75)).collect();
                if s.is_empty() { vec![rng.random_range(0..m)] } else { s }
            })
            .collect();
        let set = MarginalActionSet::new(sets).unwrap();
        let n = rng.random_range(min_phase_size(&set)..=24);
        let Ok(actions) = design_sequence(&set, n, &mut rng) else {
            design_errors += 1;
            continue;
        };
        let bound = design_bound(&set, n).unwrap();
        let norm = realised_design_norm(&set, &supports, &actions);
        worst = worst.max(norm / bound);
        if norm > bound * (1.0 + 1e-9) {
            violations += 1;
        }
    }
    verdict(
        violations == 0 && design_errors == 0,
        format!("{violations} violations, {design_errors} infeasible designs over 200 (S, n); worst norm/bound {worst:.3}"),
    )
}

fn gap_unbiasedness() -> Verdict {
    let supports = [3usize, 4, 2];
    // Variable 2 is a non-parent: all its effects are zero.
    let effects: [&[f64]; 3] = [&[0.3, 1.7, 0.9], &[2.2, 0.1, 1.0, 1.9], &[0.0, 0.0]];
    let set = MarginalActionSet::full(&supports);
    let emb = Embedding::new(&supports);
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 5);
    let actions = design_sequence(&set, 30, &mut rng).unwrap();
    let means: Vec<f64> = actions.iter().map(|a| a.iter().enumerate().map(|(k, &v)| effects[k][v]).sum()).collect();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let refits = 2000;
    // contrasts (k, i, j): truth f_k(i) - f_k(j)
    let mut contrasts = Vec::new();
    for (k, f) in effects.iter().enumerate() {
        for i in 0..f.len() {
            for j in 0..f.len() {
                if i < j {
                    contrasts.push((k, i, j, f[i] - f[j]));
                }
            }
        }
    }
    let mut samples = vec![Vec::with_capacity(refits); contrasts.len()];
    for _ in 0..refits {
        let ys: Vec<f64> = means.iter().map(|m| m + noise.sample(&mut rng)).collect();
        let est = ols(&actions, &ys, &emb).unwrap();
        let gaps = gap_estimates(&est, &set, &emb);
        for (c, &(k, i, j, _)) in contrasts.iter().enumerate() {
            samples[c].push(gaps.vars[k].pairwise(i, j));
        }
    }
    let mut worst_z: f64 = 0.0;
    for (c, &(_, _, _, truth)) in contrasts.iter().enumerate() {
        let (m, se) = mean_se(&samples[c]);
        worst_z = worst_z.max((m - truth).abs() / se);
    }
    verdict(worst_z <= 4.0, format!("{} contrasts, {refits} refits; worst |mean - truth| = {worst_z:.2} stderr", contrasts.len()))
}

fn parent_recovery() -> Verdict {
    let gen = GenConfig { num_vars: 5, num_parents: 3, support_lo: 3, support_hi: 4, degree: 2.0, ..GenConfig::default() };
    let (scms, runs) = (20u64, 20u64);
    let (mut modl_hits, mut fp_hits, mut total) = (0, 0, 0);
    let mut eps_used = Vec::new();
    for s in 0..scms {
        let seed = MASTER_SEED.wrapping_add(1000 + s);
        let cfg = GenConfig { seed, ..gen.clone() };
        let scm = gen_scm(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let truth: BTreeSet<usize> = scm.dag.outcome_parents.iter().copied().collect();
        // Smallest parent spread, recomputed from the effect tables.
        let eps_min = scm
            .outcome
            .effects
            .iter()
            .map(|f| f.iter().copied().fold(f64::MIN, f64::max) - f.iter().copied().fold(f64::MAX, f64::min))
            .fold(f64::INFINITY, f64::min);
        let eps = eps_min.min(EPSILON);
        eps_used.push(eps);
        let params = ModlParams::new(eps, DELTA, cfg.noise_sigma2, cfg.reward_scale);
        let test = ParentsTestConfig::with_default_baseline(eps, DELTA, cfg.noise_sigma2, scm.num_vars());
        for r in 0..runs {
            let run_seed = seed.wrapping_mul(31).wrapping_add(r);
            let mut env = ScmEnv::global(&scm, run_seed);
            let res = run_modl(&mut env, &params, &mut ChaCha8Rng::seed_from_u64(run_seed ^ 0xabc)).unwrap();
            modl_hits += usize::from(res.recovered_parents() == truth);
            let mut env = ScmEnv::global(&scm, run_seed ^ 0x55);
            let found = find_parents(&mut env, &test, &mut ChaCha8Rng::seed_from_u64(run_seed ^ 0xdef)).unwrap();
            fp_hits += usize::from(found.parents == truth);
            total += 1;
        }
    }
    let bar = 0.9 - 0.05;
    let (a, b) = (modl_hits as f64 / total as f64, fp_hits as f64 / total as f64);
    let eps_lo = eps_used.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        a >= bar && b >= bar,
        format!("exact recovery MODL {a:.4}, parents test {b:.4} over {total} runs (need >= {bar:.2}); eps in [{eps_lo:.3}, 0.5]"),
    )
}

fn degree_insensitivity() -> Verdict {
    let degrees = [1.0, 2.0, 3.0, 4.0];
    let cfg = base_config(
        k10(5),
        Sweep { param: SweepParam::Degree, values: degrees.to_vec() },
        vec![Algorithm::Modl],
        8,
        3,
    );
    let run = Run::new(cfg);
    let means: Vec<f64> = degrees.iter().map(|&d| run.samples(d, Algorithm::Modl).0).collect();
    let hi = means.iter().copied().fold(f64::MIN, f64::max);
    let lo = means.iter().copied().fold(f64::MAX, f64::min);
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    let spread = (hi - lo) / avg;
    let modl: Vec<&RunRecord> = run.out.records.iter().collect();
    CEILING_LOG.with(|c| c.borrow_mut().push(("degree", ceiling_violations(&run, &modl))));
    let cells: Vec<String> = means.iter().map(|m| format!("{m:.0}")).collect();
    verdict(spread < 0.15, format!("MODL mean samples over degree 1..4: [{}], relative spread {spread:.4} (< 0.15)", cells.join(", ")))
}

fn misspecification() -> Verdict {
    let alphas = [0.0, 0.5, 1.0];
    let cfg = base_config(
        k10(10),
        Sweep { param: SweepParam::Alpha, values: alphas.to_vec() },
        vec![Algorithm::Modl, Algorithm::P1],
        16,
        4,
    );
    let run = Run::new(cfg);
    let modl: Vec<(f64, f64)> = alphas.iter().map(|&a| run.gaps(a, Algorithm::Modl)).collect();
    let p1: Vec<(f64, f64)> = alphas.iter().map(|&a| run.gaps(a, Algorithm::P1)).collect();
    let mut ok = true;
    for w in modl.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        ok &= b >= a - (sa * sa + sb * sb).sqrt();
    }
    let modl_rise = modl[2].0 - modl[0].0;
    let p1_rise = p1[2].0 - p1[0].0;
    ok &= p1_rise >= modl_rise;
    let fmt = |xs: &[(f64, f64)]| xs.iter().map(|(m, s)| format!("{m:.4}±{s:.4}")).collect::<Vec<_>>().join(", ");
    verdict(
        ok,
        format!(
            "mean gap over alpha 0/0.5/1: MODL [{}], P1 [{}]; rise MODL {modl_rise:.4}, P1 {p1_rise:.4}; harness gap mismatch {:.1e}",
            fmt(&modl),
            fmt(&p1),
            run.gap_disagreement()
        ),
    )
}

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    // Runs that feed the budget ceiling check execute before it.
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("design_variance_bound", design_variance_bound),
        ("gap_unbiasedness", gap_unbiasedness),
        ("pac_guarantee", pac),
        ("ordering", ordering),
        ("coincidence_at_full_parents", coincidence),
        ("monotonicity_in_parents", monotonicity),
        ("se_blowup", se_blowup),
        ("degree_insensitivity", degree_insensitivity),
        ("budget_ceiling", ceiling),
        ("parent_recovery", parent_recovery),
        ("misspecification_sensitivity", misspecification),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let t = Instant::now();
        let v = check();
        ran += 1;
        failed += usize::from(!v.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
