use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{choose_normalization_with, choose_tree_count, Calibration, TripleSummary};
use crate::conditioned::{BridgeSampler, ConditionedForestSpec};
use crate::error::{Error, Result};
use crate::law::OffspringLaw;
use crate::rng;
use crate::stable::{
    bessel3_bridge_cdf, bridge_marginal_cdf_alpha2, rescaled_bridge, StableParams,
};
use crate::stable::sampler::sample_stable_path_with;
use crate::stats;

/// Fixed times at which walk marginals are compared.
pub const MARGINAL_TIMES: [f64; 3] = [0.25, 0.5, 0.75];

/// Asymptotic standard deviation of `sqrt(N) D_N` under the null.
const KS_SD: f64 = 0.26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Largest acceptable KS distance at `t = 0.5`.
    pub ks_max: f64,
    /// The KS threshold only applies from this `n` on.
    pub ks_min_n: u64,
    /// Allowed KS increase between consecutive `n`, in standard errors of
    /// the difference.
    pub trend_se: f64,
    /// `sup |C - H| < factor (a_n / n) (max height increment + 1)`.
    pub sup_hc_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { ks_max: 0.05, ks_min_n: 10_000, trend_se: 2.0, sup_hc_factor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub law: OffspringLaw,
    pub alpha_target: f64,
    pub s: f64,
    pub n_values: Vec<u64>,
    pub samples_per_n: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Continuum reference paths per `n` when `alpha_target < 2`.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    /// Grid points of each continuum reference path on `[0, 1]`.
    #[serde(default = "default_reference_grid")]
    pub reference_grid: usize,
    #[serde(default)]
    pub calibration: Calibration,
}

fn default_reference_samples() -> usize {
    2000
}

fn default_reference_grid() -> usize {
    100_001
}

impl ExperimentConfig {
    pub fn new(law: OffspringLaw, alpha_target: f64, s: f64, n_values: Vec<u64>, samples_per_n: usize, seed: u64) -> Self {
        ExperimentConfig {
            law,
            alpha_target,
            s,
            n_values,
            samples_per_n,
            seed,
            thresholds: Thresholds::default(),
            reference_samples: default_reference_samples(),
            reference_grid: default_reference_grid(),
            calibration: Calibration::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.law.is_critical() {
            return Err(Error::param(format!("offspring law has mean {}, not 1", self.law.mean())));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::param(format!("s = {} must be positive", self.s)));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::param("n_values must be nonempty and positive"));
        }
        if self.samples_per_n == 0 {
            return Err(Error::param("samples_per_n must be positive"));
        }
        if self.alpha_target < 2.0 && (self.reference_samples < 2 || self.reference_grid < 2) {
            return Err(Error::param("the continuum reference needs at least two paths and grid points"));
        }
        Ok(())
    }
}

/// Statistics for one value of `n`. KS maps are keyed by the marginal time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NReport {
    pub n: u64,
    pub a_n: f64,
    pub k_n: u64,
    /// `round(s a_n)` before the feasibility adjustment.
    pub k_guess: u64,
    /// `k_n / a_n`, the level used by the reference law.
    pub s_eff: f64,
    pub samples: usize,
    /// Against the first-passage bridge marginal (`alpha = 2`) or the
    /// continuum rescaling construction (`alpha < 2`, two-sample).
    pub ks: BTreeMap<String, f64>,
    /// Against the time-reversed Bessel-3 bridge (`alpha = 2` only).
    pub ks_bessel: BTreeMap<String, f64>,
    /// Largest `sup_t |C_t - H_{h(t)}|` over samples, rescaled.
    pub sup_hc: f64,
    /// Same without the time change, `sup_t |C_2nt - H_[nt]|`.
    pub sup_hc_direct: f64,
    pub max_height_increment: u64,
    pub sup_hc_within_bound: bool,
    pub terminal_exact: bool,
    pub contour_consistent: bool,
    /// Continuum reference paths that produced no crossing.
    pub reference_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub per_n: Vec<NReport>,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    /// KS at `t = 0.5` for each `n`.
    pub fn ks_curve(&self) -> Vec<(u64, f64)> {
        self.per_n.iter().map(|r| (r.n, r.ks[&time_key(0.5)])).collect()
    }
}

fn time_key(t: f64) -> String {
    format!("{t}")
}

/// Walk marginals of the continuum first-passage bridge from 0 to `-s`,
/// from `count` independent stable paths on `[0, 1]`.
fn continuum_marginals(
    params: StableParams,
    s: f64,
    count: usize,
    grid: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let draws: Vec<Option<Vec<f64>>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_stable_path_with(params, 1.0, grid, &mut rng::stream(seed, i))?;
            match rescaled_bridge(&path, params, s) {
                Ok(r) => Ok(Some(MARGINAL_TIMES.iter().map(|&t| r.bridge.eval(t)).collect())),
                Err(Error::NoCrossing) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let failures = draws.iter().filter(|d| d.is_none()).count();
    let mut out = vec![Vec::new(); MARGINAL_TIMES.len()];
    for d in draws.into_iter().flatten() {
        for (j, v) in d.into_iter().enumerate() {
            out[j].push(v);
        }
    }
    Ok((out, failures))
}

fn run_n(config: &ExperimentConfig, index: u64, n: u64, notes: &mut Vec<String>) -> Result<Option<NReport>> {
    let a_n = choose_normalization_with(&config.law, n, config.alpha_target, config.calibration)?;
    let (k_n, k_guess) = match choose_tree_count(&config.law, n, a_n, config.s) {
        Ok(k) => k,
        Err(Error::Infeasible { .. }) => {
            notes.push(format!("n = {n}: no feasible tree count, skipped"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    if k_n != k_guess {
        notes.push(format!("n = {n}: k_n adjusted from {k_guess} to {k_n} for feasibility"));
    }
    let spec = ConditionedForestSpec::new(config.law.clone(), k_n, n)?;
    let sampler = BridgeSampler::new(&spec)?;
    let stream_base = index << 40;
    let summaries: Vec<TripleSummary> = (0..config.samples_per_n as u64)
        .into_par_iter()
        .map(|i| {
            let path = sampler.sample_path(&mut rng::stream(config.seed, stream_base | i));
            TripleSummary::new(&path, a_n, &MARGINAL_TIMES)
        })
        .collect();

    let s_eff = k_n as f64 / a_n;
    let unit = a_n / n as f64;
    let factor = config.thresholds.sup_hc_factor;
    let marginals: Vec<Vec<f64>> = (0..MARGINAL_TIMES.len())
        .map(|j| summaries.iter().map(|s| s.walk_marginals[j]).collect())
        .collect();

    let mut ks = BTreeMap::new();
    let mut ks_bessel = BTreeMap::new();
    let mut reference_failures = 0;
    if config.alpha_target == 2.0 {
        for (j, &t) in MARGINAL_TIMES.iter().enumerate() {
            let cdf = bridge_marginal_cdf_alpha2(s_eff, 1.0, t)?;
            ks.insert(time_key(t), stats::ks_distance(&marginals[j], |x| cdf.eval(x))?);
            let bessel = bessel3_bridge_cdf(s_eff, 1.0 - t)?;
            ks_bessel.insert(time_key(t), stats::ks_distance(&marginals[j], |x| bessel.eval(x + s_eff))?);
        }
    } else {
        let params = StableParams::new(config.alpha_target)?;
        let ref_seed = config.seed ^ 0x5eed_0000_0000_0000 ^ index;
        let (reference, failures) =
            continuum_marginals(params, s_eff, config.reference_samples, config.reference_grid, ref_seed)?;
        reference_failures = failures;
        if reference[0].is_empty() {
            return Err(Error::NoCrossing);
        }
        for (j, &t) in MARGINAL_TIMES.iter().enumerate() {
            ks.insert(time_key(t), stats::ks_two_sample(&marginals[j], &reference[j])?);
        }
    }

    Ok(Some(NReport {
        n,
        a_n,
        k_n,
        k_guess,
        s_eff,
        samples: summaries.len(),
        ks,
        ks_bessel,
        sup_hc: summaries.iter().map(|s| s.sup_hc).fold(0.0, f64::max),
        sup_hc_direct: summaries.iter().map(|s| s.sup_hc_direct).fold(0.0, f64::max),
        max_height_increment: summaries.iter().map(|s| s.max_height_increment).max().unwrap_or(0),
        sup_hc_within_bound: summaries
            .iter()
            .all(|s| s.sup_hc < factor * unit * (s.max_height_increment as f64 + 1.0)),
        terminal_exact: summaries.iter().all(|s| s.terminal == -(k_n as f64) / a_n),
        contour_consistent: summaries.iter().all(|s| s.contour_matches_height),
        reference_failures,
    }))
}

/// Samples conditioned forests for each `n`, rescales them and compares
/// walk marginals at [`MARGINAL_TIMES`] with the limiting bridge.
pub fn invariance_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut notes = vec![
        "fixed-time marginal tests are necessary conditions for functional convergence only".to_string(),
    ];
    if config.alpha_target < 2.0 {
        notes.push(format!(
            "a_n calibrated by Monte Carlo ({} samples, seed {})",
            config.calibration.samples, config.calibration.seed
        ));
    }
    let mut per_n = Vec::new();
    for (j, &n) in config.n_values.iter().enumerate() {
        if let Some(r) = run_n(config, j as u64, n, &mut notes)? {
            per_n.push(r);
        }
    }
    if config.samples_per_n < 100 || per_n.len() < 2 {
        notes.push("low power: fewer than 100 samples per n or fewer than two values of n".to_string());
    }

    let th = &config.thresholds;
    let key = time_key(0.5);
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "ks_below_threshold".to_string(),
        per_n
            .iter()
            .filter(|r| r.n >= th.ks_min_n)
            .all(|r| r.ks[&key] < th.ks_max && r.ks_bessel.get(&key).is_none_or(|&v| v < th.ks_max)),
    );
    let se = KS_SD / (config.samples_per_n as f64).sqrt();
    let curve: Vec<f64> = per_n.iter().map(|r| r.ks[&key]).collect();
    let increases: Vec<f64> = curve.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    verdicts.insert(
        "ks_trend_non_increasing".to_string(),
        increases.len() <= 1 && increases.iter().all(|&d| d <= th.trend_se * std::f64::consts::SQRT_2 * se),
    );
    verdicts.insert("sup_hc_bound".to_string(), per_n.iter().all(|r| r.sup_hc_within_bound));
    verdicts.insert("walk_terminal_exact".to_string(), per_n.iter().all(|r| r.terminal_exact));
    verdicts.insert("height_contour_consistent".to_string(), per_n.iter().all(|r| r.contour_consistent));

    Ok(ExperimentReport { config: config.clone(), per_n, verdicts, notes })
}
