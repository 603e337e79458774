use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realpath::RealPath;
use crate::rng::{self, SimRng};

/// Index of a spectrally positive stable process normalised so that
/// `E exp(-lambda X_t) = exp(t lambda^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct StableParams {
    alpha: f64,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
}

impl TryFrom<RawParams> for StableParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        StableParams::new(raw.alpha)
    }
}

impl StableParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::param(format!("stable index {alpha} not in (1, 2]")));
        }
        Ok(StableParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `psi(lambda) = lambda^alpha`.
    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        lambda.powf(self.alpha)
    }
}

/// Chambers-Mallows-Stuck constants for skewness 1. The usual prefactor
/// `(1 + tan^2(pi alpha / 2))^(1/2alpha)` cancels against the rescaling by
/// `|cos(pi alpha / 2)|^(1/alpha)`.
struct Cms {
    alpha: f64,
    b: f64,
    inv_alpha: f64,
    expo: f64,
}

impl Cms {
    fn new(alpha: f64) -> Self {
        Cms {
            alpha,
            b: (FRAC_PI_2 * alpha).tan().atan() / alpha,
            inv_alpha: 1.0 / alpha,
            expo: (1.0 - alpha) / alpha,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.alpha == 2.0 {
            let z: f64 = StandardNormal.sample(rng);
            return std::f64::consts::SQRT_2 * z;
        }
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let a = self.alpha * (v + self.b);
        a.sin() * (self.expo * ((v - a).cos().ln() - w.ln()) - self.inv_alpha * v.cos().ln()).exp()
    }
}

/// One draw of `X_1`.
///
/// Chambers-Mallows-Stuck with skewness 1, rescaled so that
/// `E exp(-lambda X_1) = exp(lambda^alpha)`; Gaussian with variance 2 when
/// `alpha = 2`.
pub fn stable_increment<R: Rng + ?Sized>(params: StableParams, rng: &mut R) -> f64 {
    Cms::new(params.alpha).draw(rng)
}

/// Path on `[0, horizon]` with `grid_n` points and independent increments
/// `h^(1/alpha) X_1`, `h = horizon / (grid_n - 1)`.
pub fn sample_stable_path(params: StableParams, horizon: f64, grid_n: usize, seed: u64) -> Result<RealPath> {
    sample_stable_path_with(params, horizon, grid_n, &mut rng::stream(seed, 0))
}

pub(crate) fn sample_stable_path_with(
    params: StableParams,
    horizon: f64,
    grid_n: usize,
    rng: &mut SimRng,
) -> Result<RealPath> {
    if grid_n < 2 {
        return Err(Error::param("grid_n must be at least 2"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!("horizon {horizon} must be positive")));
    }
    let h = horizon / (grid_n - 1) as f64;
    let scale = h.powf(1.0 / params.alpha);
    let cms = Cms::new(params.alpha);
    let mut values = Vec::with_capacity(grid_n);
    let mut x = 0.0;
    values.push(x);
    for _ in 1..grid_n {
        x += scale * cms.draw(rng);
        values.push(x);
    }
    RealPath::new(h, values)
}

/// Step control for [`first_passage_time`].
#[derive(Debug, Clone, Copy)]
pub struct FirstPassageOptions {
    /// A step from distance `d` above the level lasts `(d / safety)^alpha`.
    pub safety: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Give up (report no passage) after this much time.
    pub max_time: f64,
}

impl Default for FirstPassageOptions {
    fn default() -> Self {
        FirstPassageOptions {
            safety: 6.0,
            min_step: 1e-10,
            max_step: 1.0,
            max_time: 100.0,
        }
    }
}

/// First time the process goes below `-level`, simulated without a fixed
/// grid: steps shrink as the path approaches the level, so the passage
/// time is resolved to about `min_step`. Returns `None` past `max_time`.
pub fn first_passage_time<R: Rng + ?Sized>(
    params: StableParams,
    level: f64,
    options: &FirstPassageOptions,
    rng: &mut R,
) -> Option<f64> {
    let alpha = params.alpha;
    let cms = Cms::new(alpha);
    let mut t = 0.0;
    let mut x = 0.0;
    loop {
        let d = x + level;
        if d <= 0.0 {
            return Some(t);
        }
        if t >= options.max_time {
            return None;
        }
        let dt = (d / options.safety)
            .powf(alpha)
            .clamp(options.min_step, options.max_step);
        x += dt.powf(1.0 / alpha) * cms.draw(rng);
        t += dt;
    }
}
