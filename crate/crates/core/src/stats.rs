//! Goodness-of-fit statistics and small numerical helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Piecewise linear CDF tabulated on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    mass: f64,
}

impl TabulatedCdf {
    /// Integrates `density` sampled at `xs` by the trapezoid rule and
    /// normalises by the total.
    pub fn from_density(xs: Vec<f64>, density: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != density.len() {
            return Err(Error::param("need matching grids of at least two points"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("grid must be increasing"));
        }
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::param("density integrates to zero"));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(TabulatedCdf { xs, cdf, mass: acc })
    }

    /// Integral of the density before normalisation.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&v| v <= x);
        if i >= self.xs.len() {
            return 1.0;
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        self.cdf[i - 1] + (self.cdf[i] - self.cdf[i - 1]) * (x - x0) / (x1 - x0)
    }

    /// Generalised inverse, for inverse-transform sampling.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < p);
        if i == 0 {
            return self.xs[0];
        }
        if i >= self.xs.len() {
            return *self.xs.last().unwrap();
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        if c1 == c0 {
            x1
        } else {
            x0 + (x1 - x0) * (p - c0) / (c1 - c0)
        }
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::param("samples contain NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) - F(x)|` between the empirical
/// CDF of `samples` and `cdf`, using left limits at the jumps (approximated
/// by the next float down) so that atoms of either side are handled.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let before = i as f64 / n;
        let after = j as f64 / n;
        let left = cdf(x.next_down());
        d = d.max((before - left).abs()).max((after - cdf(x)).abs());
        i = j;
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic p-value of a KS distance `d` with effective sample size `n`
/// (Stephens' finite-sample correction).
pub fn kolmogorov_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Effective sample size of a two-sample KS test.
pub fn two_sample_size(na: usize, nb: usize) -> f64 {
    (na * nb) as f64 / (na + nb) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after merging.
    pub cells: usize,
}

/// Pearson chi-square test of `observed` counts against cell probabilities
/// `probs`. Adjacent cells are merged until every expected count is at
/// least 5.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::param("observed and expected cells differ"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::EmptySamples);
    }
    let norm: f64 = probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += p / norm * total as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::param("too few samples for a chi-square test"));
    }
    let statistic = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::param(e.to_string()))?
        .sf(statistic);
    Ok(ChiSquareResult { statistic, dof, p_value, cells: cells.len() })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
