//! Forests conditioned on their number of trees and total progeny, sampled
//! through first-passage bridges of the coding walk, and exact hitting-time
//! probabilities.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::coding::{forest_from_walk, rotate, LatticePath};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::law::{LawKind, OffspringLaw};
use crate::rng::{self, SimRng};

/// Largest `n * T * alphabet` work accepted by the exact probability DPs.
const MAX_DP_WORK: f64 = 2e10;

/// Child-count weights `mu(0..=cut)`, where `cut` is at most `t_max` and, when
/// `truncate` is set, the point beyond which an infinite tail carries less
/// than the truncation mass.
fn alphabet(law: &OffspringLaw, t_max: usize, truncate: bool) -> Vec<f64> {
    let cut = match law.kind() {
        LawKind::Finite { pmf } => pmf.len() - 1,
        LawKind::Geometric { .. } if truncate => {
            law.dp_support().map(|(p, _)| p.len() - 1).unwrap_or(t_max)
        }
        _ => t_max,
    };
    (0..=cut.min(t_max)).map(|c| law.pmf(c as u64)).collect()
}

/// Distribution of `c_1 + ... + c_j` restricted to `0..=t_max`, one step on.
fn convolve(row: &[f64], w: &[f64], t_max: usize) -> Vec<f64> {
    let len = (row.len() + w.len() - 1).min(t_max + 1);
    let mut out = vec![0.0; len];
    for (c, &wc) in w.iter().enumerate() {
        if wc == 0.0 || c >= len {
            continue;
        }
        for (t, &p) in row.iter().enumerate().take(len - c) {
            out[t + c] += wc * p;
        }
    }
    out
}

fn check_kn(k: u64, n: u64) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::param(format!("need k >= 1 and n >= 1, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn check_work(n: u64, t: u64, a: usize) -> Result<()> {
    if n as f64 * (t as f64 + 1.0) * a as f64 > MAX_DP_WORK {
        return Err(Error::param(format!("n = {n} is too large for the exact dynamic program")));
    }
    Ok(())
}

/// `P(S_n = -k)` for the coding walk, by convolving the child-count law:
/// `S_n = -k` exactly when the first `n` child counts sum to `n - k`.
pub fn walk_sum_pmf(law: &OffspringLaw, k: u64, n: u64) -> Result<f64> {
    if k > n {
        return Ok(0.0);
    }
    let total = (n - k) as usize;
    let w = alphabet(law, total, false);
    check_work(n, total as u64, w.len())?;
    let mut row = vec![1.0];
    for _ in 0..n {
        row = convolve(&row, &w, total);
    }
    Ok(row.get(total).copied().unwrap_or(0.0))
}

/// `P(T_k = n) = (k / n) P(S_n = -k)`.
pub fn hitting_pmf(law: &OffspringLaw, k: u64, n: u64) -> Result<f64> {
    check_kn(k, n)?;
    Ok(k as f64 / n as f64 * walk_sum_pmf(law, k, n)?)
}

/// `P(S_n = -k)` for all `0 <= k <= n <= n_max`, as `table[n][k]`.
pub fn walk_sum_table(law: &OffspringLaw, n_max: u64) -> Result<Vec<Vec<f64>>> {
    let w = alphabet(law, n_max as usize, false);
    check_work(n_max, n_max, w.len())?;
    let mut row = vec![1.0];
    let mut table = vec![vec![1.0]];
    for n in 1..=n_max as usize {
        row = convolve(&row, &w, n_max as usize);
        // S_n = -k  iff  child total = n - k
        table.push((0..=n).map(|k| row.get(n - k).copied().unwrap_or(0.0)).collect());
    }
    Ok(table)
}

/// `P(T_k = n)` for `n = 0..=n_max` by propagating the walk killed on its
/// first visit to `-k`. Independent of the cycle-lemma identity.
pub fn first_passage_pmf_by_killing(law: &OffspringLaw, k: u64, n_max: u64) -> Result<Vec<f64>> {
    check_kn(k, n_max.max(1))?;
    let k = k as i64;
    let w = alphabet(law, n_max as usize, false);
    check_work(n_max, n_max, w.len())?;
    // alive[x + k - 1] = P(S_j = x, T_k > j) for x > -k, capped where -k can
    // no longer be reached by n_max
    let top = |j: i64| n_max as i64 - j - k;
    let mut alive = vec![0.0f64; (top(0) + k).max(0) as usize];
    if let Some(start) = alive.get_mut(k as usize - 1) {
        *start = 1.0;
    }
    let mut out = vec![0.0; n_max as usize + 1];
    for j in 1..=n_max as i64 {
        let width = (top(j) + k).max(0) as usize;
        let mut next = vec![0.0; width];
        for (i, &p) in alive.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let x = i as i64 - k + 1;
            for (c, &wc) in w.iter().enumerate() {
                let y = x + c as i64 - 1;
                if y == -k {
                    out[j as usize] += p * wc;
                } else if y > -k && y <= top(j) {
                    next[(y + k - 1) as usize] += p * wc;
                }
            }
        }
        alive = next;
    }
    Ok(out)
}

/// Whether `P(T_k = n) > 0`: some `n` child counts in the support of the law
/// sum to `n - k`.
pub fn is_feasible(law: &OffspringLaw, k: u64, n: u64) -> Result<bool> {
    check_kn(k, n)?;
    if k > n {
        return Ok(false);
    }
    let total = n - k;
    let has = |c: u64| law.supports(c);
    if has(0) {
        if total == 0 || has(1) || has(total) {
            return Ok(true);
        }
        // fewest nonzero child counts summing to each t
        let support: Vec<usize> = match law.kind() {
            LawKind::Finite { pmf } => (1..pmf.len()).filter(|&c| pmf[c] > 0.0).collect(),
            // geometric has 1 in its support and power tails every c >= 2
            _ => (1..=total as usize).filter(|&c| has(c as u64)).collect(),
        };
        let total = total as usize;
        let mut fewest = vec![u64::MAX; total + 1];
        fewest[0] = 0;
        for t in 1..=total {
            for &c in support.iter().take_while(|&&c| c <= t) {
                if fewest[t - c] != u64::MAX {
                    fewest[t] = fewest[t].min(fewest[t - c] + 1);
                }
            }
        }
        return Ok(fewest[total] <= n);
    }
    Ok(walk_sum_pmf(law, k, n)? > 0.0)
}

/// Offspring law, number of trees `k` and total progeny `n`, with
/// `P(T_k = n) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedForestSpec {
    pub law: OffspringLaw,
    pub k: u64,
    pub n: u64,
}

impl ConditionedForestSpec {
    pub fn new(law: OffspringLaw, k: u64, n: u64) -> Result<Self> {
        if k > n {
            return Err(Error::param(format!("need k <= n, got k = {k}, n = {n}")));
        }
        if !is_feasible(&law, k, n)? {
            return Err(Error::Infeasible { k, n, probability: 0.0 });
        }
        Ok(ConditionedForestSpec { law, k, n })
    }
}

/// Size limits for [`BridgeSampler`] tables.
#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    /// Bound on the number of stored convolution entries.
    pub max_table_entries: usize,
    /// Bound on the arithmetic spent building the tables.
    pub max_table_work: f64,
    /// Optional cap on the number of steps drawn from the tables.
    pub max_suffix: Option<usize>,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            max_table_entries: 4_000_000,
            max_table_work: 2e8,
            max_suffix: None,
        }
    }
}

/// Exact sampler of the coding walk conditioned on `T_k = n`.
///
/// Step one draws child counts `c_1..c_n` i.i.d. conditioned on summing to
/// `n - k`: the first `n - r` counts are drawn freely from an exponentially
/// tilted law (tilting leaves the conditional law unchanged) and accepted
/// with probability proportional to the chance that the remaining `r` counts
/// complete the sum; the last `r` counts are then drawn from the exact
/// conditional distribution using the tables of `r`-fold convolutions.
/// Step two rotates the resulting bridge at one of its exactly `k`
/// rotation points making it a first-passage path, chosen uniformly.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    k: u64,
    n: u64,
    total: usize,
    weights: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
    tables: Vec<Vec<f64>>,
    accept_scale: f64,
}

impl BridgeSampler {
    pub fn new(spec: &ConditionedForestSpec) -> Result<Self> {
        Self::with_options(spec, SamplerOptions::default())
    }

    pub fn with_options(spec: &ConditionedForestSpec, options: SamplerOptions) -> Result<Self> {
        let n = spec.n as usize;
        let total = (spec.n - spec.k) as usize;
        let raw = alphabet(&spec.law, total, true);
        let a = raw.len();

        let mut suffix = n;
        if let Some(cap) = options.max_suffix {
            suffix = suffix.min(cap.max(1));
        }
        // how many levels fit in the budget
        let (mut entries, mut work) = (0usize, 0f64);
        for j in 1..=suffix {
            let len = (j * (a - 1)).min(total) + 1;
            entries += len;
            work += len as f64 * a as f64;
            if j > 1 && (entries > options.max_table_entries || work > options.max_table_work) {
                suffix = j - 1;
                break;
            }
        }

        let weights = if suffix < n {
            tilt(&raw, -(spec.k as f64) / spec.n as f64)
        } else {
            let s: f64 = raw.iter().sum();
            raw.iter().map(|w| w / s).collect()
        };
        let mut tables = vec![vec![1.0]];
        for _ in 0..suffix {
            let next = convolve(tables.last().unwrap(), &weights, total);
            tables.push(next);
        }
        let accept_scale = tables[suffix].iter().copied().fold(0.0, f64::max);
        if tables[suffix].get(total).is_none_or(|&p| p == 0.0) && suffix == n {
            return Err(Error::Infeasible {
                k: spec.k,
                n: spec.n,
                probability: 0.0,
            });
        }
        let alias = if suffix < n {
            Some(
                WeightedAliasIndex::new(weights.clone())
                    .map_err(|e| Error::param(format!("offspring weights: {e}")))?,
            )
        } else {
            None
        };
        Ok(BridgeSampler {
            k: spec.k,
            n: spec.n,
            total,
            weights,
            alias,
            tables,
            accept_scale,
        })
    }

    /// Number of steps drawn from the convolution tables.
    pub fn suffix_len(&self) -> usize {
        self.tables.len() - 1
    }

    /// Probability of taking `c` children next when `j` counts remain and
    /// must sum to `rem`.
    fn step_prob(&self, j: usize, rem: usize, c: usize) -> f64 {
        let prev = &self.tables[j - 1];
        if c > rem || rem - c >= prev.len() {
            return 0.0;
        }
        self.weights.get(c).copied().unwrap_or(0.0) * prev[rem - c] / self.tables[j][rem]
    }

    fn acceptance(&self, prefix_total: usize) -> f64 {
        if prefix_total > self.total {
            return 0.0;
        }
        let row = &self.tables[self.suffix_len()];
        row.get(self.total - prefix_total).copied().unwrap_or(0.0) / self.accept_scale
    }

    fn draw_counts(&self, rng: &mut SimRng) -> Vec<usize> {
        let n = self.n as usize;
        let r = self.suffix_len();
        let mut counts = Vec::with_capacity(n);
        let mut sum = 0;
        if let Some(alias) = &self.alias {
            loop {
                counts.clear();
                sum = 0;
                for _ in 0..n - r {
                    let c = alias.sample(rng);
                    sum += c;
                    if sum > self.total {
                        break;
                    }
                    counts.push(c);
                }
                if counts.len() == n - r && rng.random::<f64>() < self.acceptance(sum) {
                    break;
                }
            }
        }
        let mut rem = self.total - sum;
        for j in (1..=r).rev() {
            let c = if j == 1 {
                rem
            } else {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = None;
                let mut last_positive = 0;
                for c in 0..=rem.min(self.weights.len() - 1) {
                    let p = self.step_prob(j, rem, c);
                    if p > 0.0 {
                        last_positive = c;
                    }
                    acc += p;
                    if u < acc {
                        chosen = Some(c);
                        break;
                    }
                }
                chosen.unwrap_or(last_positive)
            };
            counts.push(c);
            rem -= c;
        }
        counts
    }

    /// A walk distributed as the coding walk conditioned on `T_k = n`.
    pub fn sample_path(&self, rng: &mut SimRng) -> LatticePath {
        let counts = self.draw_counts(rng);
        let bridge = LatticePath::from_steps(counts.iter().map(|&c| c as i64 - 1))
            .expect("steps are at least -1");
        let points = rotation_points(&bridge, self.k);
        debug_assert_eq!(points.len() as u64, self.k);
        let t = points[rng.random_range(0..points.len())];
        let path = rotate(&bridge, t);
        debug_assert!(path.is_first_passage_bridge() && path.terminal() == -(self.k as i64));
        path
    }

    /// The law of [`Self::sample_path`], computed by enumerating every
    /// outcome of the internal randomness. Only for small `n`.
    pub fn exact_output_distribution(&self) -> Result<HashMap<Vec<i64>, f64>> {
        if self.n > 24 {
            return Err(Error::param("exact enumeration is limited to n <= 24"));
        }
        let n = self.n as usize;
        let r = self.suffix_len();
        // prefixes with their probability of being the accepted one
        let mut prefixes: Vec<(Vec<usize>, f64)> = Vec::new();
        let mut stack = vec![(Vec::new(), 1.0f64, 0usize)];
        while let Some((p, w, s)) = stack.pop() {
            if p.len() == n - r {
                let a = w * self.acceptance(s);
                if a > 0.0 {
                    prefixes.push((p, a));
                }
                continue;
            }
            for (c, &wc) in self.weights.iter().enumerate() {
                if wc > 0.0 && s + c <= self.total {
                    let mut q = p.clone();
                    q.push(c);
                    stack.push((q, w * wc, s + c));
                }
            }
        }
        let norm: f64 = prefixes.iter().map(|x| x.1).sum();
        let mut out: HashMap<Vec<i64>, f64> = HashMap::new();
        for (prefix, w) in prefixes {
            let start: usize = prefix.iter().sum();
            let mut stack = vec![(prefix, w / norm, self.total - start)];
            while let Some((p, w, rem)) = stack.pop() {
                let j = n - p.len();
                if j == 0 {
                    let bridge = LatticePath::from_steps(p.iter().map(|&c| c as i64 - 1))?;
                    let points = rotation_points(&bridge, self.k);
                    for t in &points {
                        *out.entry(rotate(&bridge, *t).values().to_vec()).or_default() +=
                            w / points.len() as f64;
                    }
                    continue;
                }
                for c in 0..=rem.min(self.weights.len() - 1) {
                    let q = if j == 1 { (c == rem) as u8 as f64 } else { self.step_prob(j, rem, c) };
                    if q > 0.0 {
                        let mut next = p.clone();
                        next.push(c);
                        stack.push((next, w * q, rem - c));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Exponential tilt `w_c e^{theta c}` of the weights, normalised, with
/// `theta` chosen so the step `c - 1` has mean `target`.
fn tilt(raw: &[f64], target: f64) -> Vec<f64> {
    let logs: Vec<f64> = raw.iter().map(|w| w.ln()).collect();
    let tilted = |theta: f64| -> Vec<f64> {
        let top = logs
            .iter()
            .enumerate()
            .map(|(c, l)| l + theta * c as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs
            .iter()
            .enumerate()
            .map(|(c, l)| (l + theta * c as f64 - top).exp())
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let mean = |w: &[f64]| -> f64 { w.iter().enumerate().map(|(c, p)| (c as f64 - 1.0) * p).sum() };
    if raw.iter().filter(|&&w| w > 0.0).count() < 2 {
        return tilted(0.0);
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean(&tilted(lo)) > target && lo > -1e6 {
        lo *= 2.0;
    }
    while mean(&tilted(hi)) < target && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&tilted(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tilted(0.5 * (lo + hi))
}

/// Rotation indices `t` for which rotating `bridge` (ending at `-k`) gives a
/// first-passage path: strict running-minimum times `t` after which the path
/// stays above `x_t - k` until the end.
pub fn rotation_points(bridge: &LatticePath, k: u64) -> Vec<usize> {
    let x = bridge.values();
    let n = x.len() - 1;
    let mut suffix_min = vec![i64::MAX; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1].min(x[i]);
    }
    let mut points = Vec::with_capacity(k as usize);
    let mut running = i64::MAX;
    for t in 0..n {
        if x[t] < running {
            running = x[t];
            if suffix_min[t + 1].min(x[t]) > x[t] - k as i64 {
                points.push(t);
            }
        }
    }
    points
}

/// One conditioned first-passage walk.
pub fn sample_first_passage_bridge_walk(spec: &ConditionedForestSpec, seed: u64) -> Result<LatticePath> {
    Ok(BridgeSampler::new(spec)?.sample_path(&mut rng::stream(seed, 0)))
}

/// One conditioned forest: `k` trees with `n` vertices in total.
pub fn sample_conditioned_forest(spec: &ConditionedForestSpec, seed: u64) -> Result<Forest> {
    forest_from_walk(&sample_first_passage_bridge_walk(spec, seed)?)
}

/// `count` independent conditioned walks; walk `i` uses random stream `i`.
pub fn sample_bridge_batch(spec: &ConditionedForestSpec, count: usize, seed: u64) -> Result<Vec<LatticePath>> {
    let sampler = BridgeSampler::new(spec)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| sampler.sample_path(&mut rng::stream(seed, i as u64)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1() -> OffspringLaw {
        OffspringLaw::binary()
    }

    #[test]
    fn first_passage_examples() {
        let fig = LatticePath::new(vec![0, 2, 3, 5, 4, 3, 2, 3, 2, 1, 0, 1, 0, -1]).unwrap();
        assert_eq!(fig.first_passage(1), Some(13));
        assert_eq!(LatticePath::new(vec![0, -1]).unwrap().first_passage(1), Some(1));
        assert_eq!(LatticePath::new(vec![0, 1, 0, -1, -2]).unwrap().first_passage(2), Some(4));
        assert_eq!(LatticePath::new(vec![0, 1]).unwrap().first_passage(1), None);
    }

    #[test]
    fn hitting_pmf_examples() {
        assert!((hitting_pmf(&pm1(), 1, 3).unwrap() - 0.125).abs() < 1e-15);
        assert!((hitting_pmf(&pm1(), 4, 4).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(hitting_pmf(&pm1(), 1, 2).unwrap(), 0.0);
        assert!(hitting_pmf(&pm1(), 0, 2).is_err());
    }

    #[test]
    fn killing_agrees_with_cycle_identity() {
        for law in [OffspringLaw::critical_geometric(), OffspringLaw::power_tail(1.5).unwrap()] {
            let table = walk_sum_table(&law, 40).unwrap();
            for k in 1..=40u64 {
                let direct = first_passage_pmf_by_killing(&law, k, 40).unwrap();
                for n in k..=40 {
                    let feller = k as f64 / n as f64 * table[n as usize][k as usize];
                    assert!((direct[n as usize] - feller).abs() < 1e-14, "k={k} n={n} {} {feller}", direct[n as usize]);
                }
            }
        }
    }

    #[test]
    fn feasibility() {
        assert!(!is_feasible(&pm1(), 1, 2).unwrap());
        assert!(is_feasible(&pm1(), 2, 4).unwrap());
        let law = OffspringLaw::finite(vec![0.6, 0.0, 0.0, 0.4 - 1e-13, 1e-13]).unwrap();
        for k in 1..=20 {
            for n in k..=20 {
                assert_eq!(
                    is_feasible(&law, k, n).unwrap(),
                    walk_sum_pmf(&law, k, n).unwrap() > 0.0,
                    "k={k} n={n}"
                );
            }
        }
        let power = OffspringLaw::power_tail(1.3).unwrap();
        assert!(!is_feasible(&power, 3, 4).unwrap());
        assert!(is_feasible(&power, 3, 5).unwrap());
        let err = ConditionedForestSpec::new(pm1(), 1, 2).unwrap_err();
        assert_eq!(err.to_string(), "infeasible conditioning: P(T_1 = 2) = 0");
    }

    #[test]
    fn sampler_examples() {
        let spec = ConditionedForestSpec::new(pm1(), 4, 4).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_first_passage_bridge_walk(&spec, seed).unwrap().values(), [0, -1, -2, -3, -4]);
        }
        let spec = ConditionedForestSpec::new(pm1(), 1, 3).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_first_passage_bridge_walk(&spec, seed).unwrap().values(), [0, 1, 0, -1]);
            assert_eq!(sample_conditioned_forest(&spec, seed).unwrap().trees()[0].child_counts(), [2, 0, 0]);
        }
    }

    #[test]
    fn two_paths_equiprobable() {
        let spec = ConditionedForestSpec::new(pm1(), 2, 4).unwrap();
        let dist = BridgeSampler::new(&spec).unwrap().exact_output_distribution().unwrap();
        assert_eq!(dist.len(), 2);
        for key in [vec![0, 1, 0, -1, -2], vec![0, -1, 0, -1, -2]] {
            assert!((dist[&key] - 0.5).abs() < 1e-15);
        }
        let paths = sample_bridge_batch(&spec, 10_000, 11).unwrap();
        let first = paths.iter().filter(|p| p.values()[1] == 1).count() as f64;
        // chi-square with one degree of freedom
        let chi2 = (first - 5000.0).powi(2) / 2500.0;
        assert!(chi2 < 10.83, "{chi2}");
    }

    #[test]
    fn prefix_mode_is_exact() {
        let law = OffspringLaw::finite(vec![0.3, 0.2, 0.4, 0.1]).unwrap();
        for (k, n) in [(1, 9), (3, 9), (2, 8)] {
            let spec = ConditionedForestSpec::new(law.clone(), k, n).unwrap();
            let full = BridgeSampler::new(&spec).unwrap().exact_output_distribution().unwrap();
            let opts = SamplerOptions { max_suffix: Some(3), ..Default::default() };
            let split = BridgeSampler::with_options(&spec, opts).unwrap();
            assert_eq!(split.suffix_len(), 3);
            let split = split.exact_output_distribution().unwrap();
            assert_eq!(full.len(), split.len());
            for (key, p) in &full {
                assert!((p - split[key]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn large_specs_sample_valid_paths() {
        for (law, k, n) in [
            (OffspringLaw::critical_geometric(), 100, 10_000),
            (pm1(), 70, 10_000),
            (OffspringLaw::power_tail(1.5).unwrap(), 20, 2_000),
        ] {
            let spec = ConditionedForestSpec::new(law, k, n).unwrap();
            for p in sample_bridge_batch(&spec, 20, 1).unwrap() {
                assert!(p.is_first_passage_bridge());
                assert_eq!(p.terminal(), -(k as i64));
                assert_eq!(p.steps() as u64, n);
            }
        }
    }
}
