use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::TabulatedCdf;

/// Density at `y` of `X_r` for the Brownian case `psi(lambda) = lambda^2`:
/// centred Gaussian with variance `2r`.
pub fn gaussian_kernel(r: f64, y: f64) -> f64 {
    (-y * y / (4.0 * r)).exp() / (4.0 * PI * r).sqrt()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

/// Density of the first-passage time `T_s` at `t` for `alpha = 2`:
/// `(s / t) p_t(s)`.
pub fn first_passage_density_alpha2(s: f64, t: f64) -> Result<f64> {
    check_positive("s", s)?;
    check_positive("t", t)?;
    Ok(s / t * gaussian_kernel(t, s))
}

/// Radon-Nikodym weight of the first-passage bridge from 0 to `-s` of
/// length `t` against the free process killed at `-s`, at time `u` and
/// position `x`, for `alpha = 2`:
/// `t (s + x) / (s (t - u)) * p_{t-u}(s + x) / p_t(s)`.
pub fn fpb_density_alpha2(s: f64, t: f64, u: f64, x: f64) -> Result<f64> {
    check_positive("s", s)?;
    check_positive("t", t)?;
    if !(0.0..t).contains(&u) {
        return Err(Error::param(format!("time u = {u} not in [0, {t})")));
    }
    if x <= -s {
        return Err(Error::param(format!("position x = {x} not above -s = {}", -s)));
    }
    if u == 0.0 {
        // the kernel at time t - u = t, position s + x
        return Ok(if x == 0.0 { 1.0 } else { (s + x) / s * gaussian_kernel(t, s + x) / gaussian_kernel(t, s) });
    }
    Ok(t * (s + x) / (s * (t - u)) * gaussian_kernel(t - u, s + x) / gaussian_kernel(t, s))
}

/// Density of the first-passage bridge (0 to `-s`, length `t`) at time
/// `0 < u < t`: the killed Gaussian kernel, by the reflection principle
/// `p_u(x) - p_u(x + 2s)`, times the bridge weight.
pub fn bridge_marginal_density_alpha2(s: f64, t: f64, u: f64, x: f64) -> Result<f64> {
    if x <= -s {
        return Ok(0.0);
    }
    if u.is_nan() || u <= 0.0 {
        return Err(Error::param(format!("time u = {u} must be positive")));
    }
    let killed = gaussian_kernel(u, x) - gaussian_kernel(u, x + 2.0 * s);
    Ok(killed * fpb_density_alpha2(s, t, u, x)?)
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// CDF of the bridge marginal at time `u`, by quadrature of
/// [`bridge_marginal_density_alpha2`]. `mass()` of the result is the raw
/// integral, which should be 1.
pub fn bridge_marginal_cdf_alpha2(s: f64, t: f64, u: f64) -> Result<TabulatedCdf> {
    check_positive("s", s)?;
    check_positive("t", t)?;
    if !(u > 0.0 && u < t) {
        return Err(Error::param(format!("time u = {u} not in (0, {t})")));
    }
    let xs = grid(-s, 14.0 * (2.0 * t).sqrt(), 40_001);
    let dens = xs
        .iter()
        .map(|&x| bridge_marginal_density_alpha2(s, t, u, x))
        .collect::<Result<Vec<_>>>()?;
    TabulatedCdf::from_density(xs, &dens)
}

fn bessel3_unnormalised(s: f64, r: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    y * (gaussian_kernel(1.0 - r, s - y) - gaussian_kernel(1.0 - r, s + y)) * (-y * y / (4.0 * r)).exp()
}

/// Distribution at time `0 < r < 1` of the three-dimensional Bessel bridge
/// from 0 to `s` over `[0, 1]` (driven by the variance-2 Brownian motion),
/// tabulated and normalised numerically.
pub fn bessel3_bridge_cdf(s: f64, r: f64) -> Result<TabulatedCdf> {
    check_positive("s", s)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("time r = {r} not in (0, 1)")));
    }
    let xs = grid(0.0, s + 30.0, 40_001);
    let dens: Vec<f64> = xs.iter().map(|&y| bessel3_unnormalised(s, r, y)).collect();
    TabulatedCdf::from_density(xs, &dens)
}

/// Density of the three-dimensional Bessel bridge from 0 to `s` at time `r`,
/// `y [p_{1-r}(s - y) - p_{1-r}(s + y)] exp(-y^2 / 4r)` normalised.
pub fn bessel3_bridge_density(s: f64, r: f64, y: f64) -> Result<f64> {
    let cdf = bessel3_bridge_cdf(s, r)?;
    Ok(bessel3_unnormalised(s, r, y) / cdf.mass())
}
