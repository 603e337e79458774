//! Rescaled codings of conditioned forests and the statistical checks
//! comparing them with their continuum limits.

mod experiment;

pub use experiment::{
    invariance_experiment, ExperimentConfig, ExperimentReport, NReport, Thresholds,
    MARGINAL_TIMES,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{contour_from_height, cyclic_shift, height_from_walk, height_process, LatticePath};
use crate::conditioned::{BridgeSampler, ConditionedForestSpec};
use crate::error::{Error, Result};
use crate::law::OffspringLaw;
use crate::realpath::RealPath;
use crate::rng;
use crate::stats::{self, ChiSquareResult};

/// Monte Carlo settings for calibrating the scale of heavy-tailed laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub samples: usize,
    pub seed: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { samples: 10_000, seed: 0 }
    }
}

/// `Gamma(-alpha)`, positive for `1 < alpha < 2`.
fn gamma_neg(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(-alpha)
}

/// Asymptotic scale `c` in `a_n = c n^(1/alpha)` for a step law with tail
/// `nu(k) ~ C k^-(1 + alpha)`: `c = (C Gamma(-alpha))^(1/alpha)`.
pub fn asymptotic_tail_scale(law: &OffspringLaw) -> Option<f64> {
    let alpha = law.tail_index()?;
    Some((law.tail_constant()? * gamma_neg(alpha)).powf(1.0 / alpha))
}

fn check_law(law: &OffspringLaw, alpha_target: f64) -> Result<()> {
    if !law.is_critical() {
        return Err(Error::param(format!("offspring law has mean {}, not 1", law.mean())));
    }
    if !(alpha_target > 1.0 && alpha_target <= 2.0) {
        return Err(Error::param(format!("target index {alpha_target} not in (1, 2]")));
    }
    match law.tail_index() {
        None if alpha_target == 2.0 && law.variance().is_finite() => Ok(()),
        Some(a) if (a - alpha_target).abs() < 1e-9 => Ok(()),
        _ => Err(Error::param(format!(
            "law {law} is not in the domain of attraction of index {alpha_target}"
        ))),
    }
}

/// Normalisation `a_n` making `S_n / a_n` converge to the stable law with
/// `E exp(-lambda X_1) = exp(lambda^alpha)`: `sigma sqrt(n / 2)` for
/// finite variance, and for heavy tails `c n^(1/alpha)` with `c` calibrated
/// so that the empirical `E exp(-S_n / a_n)` equals `e`.
pub fn choose_normalization(law: &OffspringLaw, n: u64, alpha_target: f64) -> Result<f64> {
    choose_normalization_with(law, n, alpha_target, Calibration::default())
}

pub fn choose_normalization_with(
    law: &OffspringLaw,
    n: u64,
    alpha_target: f64,
    calibration: Calibration,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    check_law(law, alpha_target)?;
    if alpha_target == 2.0 {
        return Ok((law.variance() * n as f64 / 2.0).sqrt());
    }
    calibrate_scale(law, n, calibration).map(|c| c * (n as f64).powf(1.0 / alpha_target))
}

/// Scale `c` such that the sample mean of `exp(-S_n / (c n^(1/alpha)))`
/// over `samples` simulated walks equals `e`; the same walks are used for
/// every trial value of `c`.
fn calibrate_scale(law: &OffspringLaw, n: u64, calibration: Calibration) -> Result<f64> {
    if calibration.samples < 2 {
        return Err(Error::param("calibration needs at least two samples"));
    }
    let alpha = law.tail_index().expect("heavy-tailed law");
    let sampler = law.sampler();
    let sums: Vec<f64> = (0..calibration.samples)
        .map(|i| {
            let mut rng = rng::stream(calibration.seed, i as u64);
            (0..n).map(|_| sampler.sample(&mut rng) as f64 - 1.0).sum()
        })
        .collect();
    let root = (n as f64).powf(1.0 / alpha);
    let laplace = |c: f64| -> f64 {
        let a = c * root;
        // log-mean-exp
        let logs: Vec<f64> = sums.iter().map(|s| -s / a).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + (logs.iter().map(|l| (l - top).exp()).sum::<f64>() / logs.len() as f64).ln()
    };
    let c0 = asymptotic_tail_scale(law).unwrap_or(1.0);
    let (mut lo, mut hi) = (c0 / 8.0, c0 * 8.0);
    if laplace(lo) < 1.0 || laplace(hi) > 1.0 {
        return Err(Error::param("calibration failed to bracket the scale"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if laplace(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of trees `round(s a_n)`, moved to the nearest feasible value when
/// `P(T_k = n) = 0`. Returns `(k, initial guess)`.
pub fn choose_tree_count(law: &OffspringLaw, n: u64, a_n: f64, s: f64) -> Result<(u64, u64)> {
    let guess = ((s * a_n).round() as u64).clamp(1, n);
    for d in 0..n {
        for k in [guess.checked_sub(d), guess.checked_add(d)].into_iter().flatten() {
            if (1..=n).contains(&k) && crate::conditioned::is_feasible(law, k, n)? {
                return Ok((k, guess));
            }
        }
    }
    Err(Error::Infeasible { k: guess, n, probability: 0.0 })
}

/// Rescaled walk `S_[nt] / a_n`, height `(a_n / n) H_[nt]` and contour
/// `(a_n / n) C_2nt` of a conditioned forest, on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RescaledTriple {
    pub walk: RealPath,
    pub height: RealPath,
    pub contour: RealPath,
    pub n: u64,
    pub a_n: f64,
    pub k_n: u64,
}

impl RescaledTriple {
    /// Rescales a first-passage walk of `n` steps ending at `-k`.
    pub fn from_walk(path: &LatticePath, a_n: f64) -> Result<Self> {
        if !path.is_first_passage_bridge() {
            return Err(Error::InvalidPath {
                index: path.steps(),
                reason: "not a first-passage walk".into(),
            });
        }
        let n = path.steps() as u64;
        let k_n = (-path.terminal()) as u64;
        let scale = a_n / n as f64;
        let step = 1.0 / n as f64;
        let walk = RealPath::new(step, path.values().iter().map(|&v| v as f64 / a_n).collect())?;
        let heights = height_process(path);
        let height = RealPath::new(step, heights.iter().map(|&h| scale * h as f64).collect())?;
        let contour = contour_from_height(&height_from_walk(path));
        let contour = RealPath::new(
            step / 2.0,
            contour.integer_values().iter().map(|&c| scale * c as f64).collect(),
        )?;
        Ok(RescaledTriple { walk, height, contour, n, a_n, k_n })
    }

    /// `sup |C_t - H_{h(t)}|`, where the time change `h` sends the contour
    /// to the vertex it last visited for the first time.
    pub fn sup_height_contour(&self) -> f64 {
        let scale = self.a_n / self.n as f64;
        let h: Vec<u64> = self.height.values().iter().map(|v| (v / scale).round() as u64).collect();
        let c: Vec<u64> = self.contour.values().iter().map(|v| (v / scale).round() as u64).collect();
        scale * height_contour_gap(&h, &c).0 as f64
    }
}

/// Largest `|C_u - H_i|` over integer contour times `u`, with `i` the last
/// vertex whose visit time `2i - H_i` is at most `u`, together with the
/// largest `|C_u - H_{floor(u/2)}|` (no time change).
fn height_contour_gap(heights: &[u64], contour: &[u64]) -> (u64, u64) {
    let n = heights.len() - 1;
    let mut vertex = 0;
    let mut changed = 0;
    let mut direct = 0;
    for (u, &cu) in contour.iter().enumerate() {
        while vertex + 1 < n && (2 * (vertex + 1)) as u64 - heights[vertex + 1] <= u as u64 {
            vertex += 1;
        }
        changed = changed.max(cu.abs_diff(heights[vertex]));
        direct = direct.max(cu.abs_diff(heights[(u / 2).min(n)]));
    }
    (changed, direct)
}

/// Per-sample statistics used by the experiment without materialising the
/// rescaled paths.
#[derive(Debug, Clone)]
pub(crate) struct TripleSummary {
    pub walk_marginals: Vec<f64>,
    pub terminal: f64,
    pub sup_hc: f64,
    pub sup_hc_direct: f64,
    pub max_height_increment: u64,
    pub contour_matches_height: bool,
}

impl TripleSummary {
    pub fn new(path: &LatticePath, a_n: f64, times: &[f64]) -> Self {
        let n = path.steps();
        let scale = a_n / n as f64;
        let walk_marginals = times
            .iter()
            .map(|t| path.values()[(n as f64 * t).floor() as usize] as f64 / a_n)
            .collect();
        let heights = height_process(path);
        let seq = height_from_walk(path);
        let contour = contour_from_height(&seq).integer_values();
        let contour_matches_height = seq
            .values()
            .iter()
            .enumerate()
            .all(|(i, &h)| contour[2 * i - h as usize] == h);
        let (gap, direct) = height_contour_gap(&heights, &contour);
        let max_height_increment = heights.windows(2).map(|w| w[0].abs_diff(w[1])).max().unwrap_or(0);
        TripleSummary {
            walk_marginals,
            terminal: path.terminal() as f64 / a_n,
            sup_hc: scale * gap as f64,
            sup_hc_direct: scale * direct as f64,
            max_height_increment,
            contour_matches_height,
        }
    }
}

/// One conditioned forest, rescaled.
pub fn build_rescaled_triple(spec: &ConditionedForestSpec, a_n: f64, seed: u64) -> Result<RescaledTriple> {
    let path = BridgeSampler::new(spec)?.sample_path(&mut rng::stream(seed, 0));
    RescaledTriple::from_walk(&path, a_n)
}

/// Re-exported for symmetry with the other checks in this module.
pub fn ks_distance(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    stats::ks_distance(samples, reference_cdf)
}

/// Counts of `T(u)` over `{0, ..., n}` for `u` uniform on `{0, ..., k}`
/// drawn independently of the conditioned walk.
pub fn passage_time_counts(spec: &ConditionedForestSpec, trials: usize, seed: u64) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    let sampler = BridgeSampler::new(spec)?;
    let mut counts = vec![0u64; spec.n as usize + 1];
    for i in 0..trials {
        let mut rng = rng::stream(seed, i as u64);
        let path = sampler.sample_path(&mut rng);
        let u = rng.random_range(0..=spec.k);
        counts[path.first_passage(u).expect("levels up to k are hit")] += 1;
    }
    Ok(counts)
}

/// Chi-square test of [`passage_time_counts`] against the uniform law on
/// `{0, ..., n}`.
pub fn uniform_passage_check(spec: &ConditionedForestSpec, trials: usize, seed: u64) -> Result<ChiSquareResult> {
    let counts = passage_time_counts(spec, trials, seed)?;
    stats::chi_square(&counts, &vec![1.0; counts.len()])
}

/// Two-sample KS comparison of the rescaled walk and height at fixed times
/// with the same quantities after the cyclic shift at `T(u)`, `u` uniform
/// on `{0, ..., k}`. Shifted and unshifted samples use disjoint streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftComparison {
    pub time: f64,
    pub walk_ks: f64,
    pub walk_p: f64,
    pub height_ks: f64,
    pub height_p: f64,
}

pub fn shift_exchangeability(
    spec: &ConditionedForestSpec,
    a_n: f64,
    trials: usize,
    times: &[f64],
    seed: u64,
) -> Result<Vec<ShiftComparison>> {
    if trials < 2 {
        return Err(Error::param("need at least two trials"));
    }
    let sampler = BridgeSampler::new(spec)?;
    let n = spec.n as f64;
    let scale = a_n / n;
    let mut plain = vec![(Vec::new(), Vec::new()); times.len()];
    let mut shifted = vec![(Vec::new(), Vec::new()); times.len()];
    let record = |target: &mut Vec<(Vec<f64>, Vec<f64>)>, path: &LatticePath| {
        let h = height_process(path);
        for (j, t) in times.iter().enumerate() {
            let i = (n * t).floor() as usize;
            target[j].0.push(path.values()[i] as f64 / a_n);
            target[j].1.push(scale * h[i] as f64);
        }
    };
    for i in 0..trials as u64 {
        let mut rng = rng::stream(seed, 2 * i);
        record(&mut plain, &sampler.sample_path(&mut rng));
        let mut rng = rng::stream(seed, 2 * i + 1);
        let path = sampler.sample_path(&mut rng);
        let u = rng.random_range(0..=spec.k);
        record(&mut shifted, &cyclic_shift(&path, u)?);
    }
    let m = stats::two_sample_size(trials, trials);
    times
        .iter()
        .zip(plain.iter().zip(&shifted))
        .map(|(&time, (a, b))| {
            let walk_ks = stats::ks_two_sample(&a.0, &b.0)?;
            let height_ks = stats::ks_two_sample(&a.1, &b.1)?;
            Ok(ShiftComparison {
                time,
                walk_ks,
                walk_p: stats::kolmogorov_pvalue(walk_ks, m),
                height_ks,
                height_p: stats::kolmogorov_pvalue(height_ks, m),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation_examples() {
        let geo = OffspringLaw::critical_geometric();
        assert!((choose_normalization(&geo, 10_000, 2.0).unwrap() - 100.0).abs() < 1e-9);
        let bin = OffspringLaw::binary();
        assert!((choose_normalization(&bin, 50, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(choose_normalization(&bin, 0, 2.0).is_err());
        let sub = OffspringLaw::finite(vec![0.6, 0.2, 0.2]).unwrap();
        assert!(choose_normalization(&sub, 10, 2.0).is_err());
        let heavy = OffspringLaw::power_tail(1.5).unwrap();
        assert!(choose_normalization(&heavy, 10, 2.0).is_err());
        assert!(choose_normalization(&geo, 10, 1.5).is_err());
    }

    #[test]
    fn calibrated_scale_is_near_asymptotic_constant() {
        let law = OffspringLaw::power_tail(1.5).unwrap();
        let n = 2000;
        let cal = Calibration { samples: 4000, seed: 3 };
        let a = choose_normalization_with(&law, n, 1.5, cal).unwrap();
        let c = a / (n as f64).powf(1.0 / 1.5);
        let c0 = asymptotic_tail_scale(&law).unwrap();
        assert!((c / c0 - 1.0).abs() < 0.1, "{c} vs {c0}");
    }

    #[test]
    fn tree_count_adjusts_for_parity() {
        let bin = OffspringLaw::binary();
        // round(1.0 * 5) = 5 has the wrong parity for n = 50
        let (k, guess) = choose_tree_count(&bin, 50, 5.0, 1.0).unwrap();
        assert_eq!(guess, 5);
        assert!(k == 4 || k == 6);
        let geo = OffspringLaw::critical_geometric();
        assert_eq!(choose_tree_count(&geo, 100, 10.0, 1.0).unwrap(), (10, 10));
    }

    #[test]
    fn triple_examples() {
        let bin = OffspringLaw::binary();
        let spec = ConditionedForestSpec::new(bin.clone(), 6, 6).unwrap();
        let t = build_rescaled_triple(&spec, 2.0, 1).unwrap();
        assert_eq!(t.walk.values(), [0.0, -0.5, -1.0, -1.5, -2.0, -2.5, -3.0]);
        assert!(t.height.values().iter().all(|&h| h == 0.0));
        let spec = ConditionedForestSpec::new(bin, 4, 400).unwrap();
        let a = 10.0;
        for seed in 0..20 {
            let t = build_rescaled_triple(&spec, a, seed).unwrap();
            assert_eq!(*t.walk.values().last().unwrap(), -4.0 / a);
            assert_eq!(t.contour.len(), 801);
            assert!(t.contour.values().iter().all(|&c| c >= 0.0));
            let max_inc = t
                .height
                .values()
                .windows(2)
                .map(|w| (w[0] - w[1]).abs())
                .fold(0.0, f64::max);
            assert!(t.sup_height_contour() <= max_inc + a / 400.0 + 1e-12);
        }
    }

    #[test]
    fn passage_checks() {
        let bin = OffspringLaw::binary();
        let spec = ConditionedForestSpec::new(bin.clone(), 5, 5).unwrap();
        let r = uniform_passage_check(&spec, 6000, 2).unwrap();
        assert!(r.p_value > 1e-3);
        assert!(uniform_passage_check(&spec, 0, 2).is_err());
        // reflection symmetry P(T(j) = i) = P(T(k - j) = n - i)
        let spec = ConditionedForestSpec::new(bin, 2, 8).unwrap();
        let counts = passage_time_counts(&spec, 30_000, 5).unwrap();
        for i in 1..8 {
            let (a, b) = (counts[i] as f64, counts[8 - i] as f64);
            assert!((a - b).abs() <= 4.0 * (a + b).sqrt() + 1.0, "{i}: {a} {b}");
        }
    }
}
