use serde::{Deserialize, Serialize};

use super::height::{approx_height_process, default_epsilon};
use super::sampler::StableParams;
use crate::error::{Error, Result};
use crate::realpath::RealPath;

/// The first-passage process `u -> T_u = inf{t : X_t <= -u}` of a grid path,
/// stored through the times at which the path reaches a new minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassage {
    // (level -X_t, t) at each strict new minimum, starting with (0, 0)
    ladder: Vec<(f64, f64)>,
}

impl FirstPassage {
    pub fn new(path: &RealPath) -> Self {
        let mut ladder = vec![(-path.values()[0], 0.0)];
        let mut running = path.values()[0];
        for (i, &x) in path.values().iter().enumerate().skip(1) {
            if x < running {
                running = x;
                ladder.push((-x, path.time(i)));
            }
        }
        FirstPassage { ladder }
    }

    /// Largest level reached, `-min X`.
    pub fn domain(&self) -> f64 {
        self.ladder.last().unwrap().0
    }

    /// First grid time at which the path is at or below `-u`; `None` when the
    /// path never gets there.
    pub fn eval(&self, u: f64) -> Option<f64> {
        if u <= self.ladder[0].0 {
            return Some(0.0);
        }
        let i = self.ladder.partition_point(|&(level, _)| level < u);
        self.ladder.get(i).map(|&(_, t)| t)
    }

    /// `(level, time)` at each new minimum.
    pub fn ladder(&self) -> &[(f64, f64)] {
        &self.ladder
    }
}

/// Total mass of the forest coded by the path up to level `s`, which is the
/// first-passage time `T_s`; `None` if the path stays above `-s`.
pub fn total_mass(path: &RealPath, s: f64) -> Option<f64> {
    FirstPassage::new(path).eval(s)
}

/// Grid index and time of the last `t <= 1` at which the path sits at a new
/// minimum on the curve `-s t^(1/alpha)`: the curve value at `t_i` must lie
/// between the previous infimum and `X_{t_i}`, so that the continuous path
/// crossed it during the last grid step.
fn locate_g_index(path: &RealPath, params: StableParams, s: f64) -> Result<(usize, f64)> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param(format!("s = {s} must be positive")));
    }
    if path.horizon() < 1.0 - 1e-9 {
        return Err(Error::param("the path must cover [0, 1]"));
    }
    let inv_alpha = 1.0 / params.alpha();
    let x = path.values();
    let mut inf = x[0];
    let mut found = None;
    for (i, &xi) in x.iter().enumerate().skip(1) {
        let t = path.time(i);
        if t > 1.0 + 1e-9 {
            break;
        }
        if xi < inf {
            let curve = s * t.powf(inv_alpha);
            if -inf <= curve && curve <= -xi {
                found = Some((i, t));
            }
            inf = xi;
        }
    }
    found.ok_or(Error::NoCrossing)
}

/// `g = sup{t <= 1 : X_t = I_t = -s t^(1/alpha)}`, the last time before 1 at
/// which the first-passage process satisfies `T_{s t^(1/alpha)} = t`.
pub fn locate_g(path: &RealPath, params: StableParams, s: f64) -> Result<f64> {
    locate_g_index(path, params, s).map(|(_, g)| g)
}

/// A stretch of the height process between two successive new minima of the
/// path, given as grid indices into the rescaled paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    /// Depth `u = -I` of the minimum at which the excursion starts.
    pub level: f64,
    pub start: usize,
    pub end: usize,
}

impl Excursion {
    pub fn subpath(&self, path: &RealPath) -> Result<RealPath> {
        RealPath::new(path.grid_step(), path.values()[self.start..=self.end].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExcursionSet {
    pub excursions: Vec<Excursion>,
}

impl ExcursionSet {
    /// Sum of the excursion durations on a grid of the given step.
    pub fn total_length(&self, grid_step: f64) -> f64 {
        self.excursions
            .iter()
            .map(|e| (e.end - e.start) as f64 * grid_step)
            .sum()
    }
}

/// The first-passage bridge, its height process and the excursions of the
/// height process, obtained by rescaling a free path at time `g`.
#[derive(Debug, Clone)]
pub struct RescaledForest {
    pub g: f64,
    /// `g^(-1/alpha) X_{g u}`, `0 <= u <= 1`.
    pub bridge: RealPath,
    /// `g^((1 - alpha)/alpha) H_{g u}`.
    pub heights: RealPath,
    pub excursions: ExcursionSet,
    pub epsilon: f64,
    /// Bound on `|bridge(1) + s|` from the grid: the rescaled size of the
    /// step during which the path crossed the curve.
    pub terminal_tolerance: f64,
}

/// The bridge part of [`RescaledForest`].
#[derive(Debug, Clone)]
pub struct RescaledBridge {
    pub g: f64,
    /// Grid index of `g` in the original path.
    pub index: usize,
    pub bridge: RealPath,
    pub terminal_tolerance: f64,
}

/// `g^(-1/alpha) X_{g u}`, `0 <= u <= 1`, without the height process.
pub fn rescaled_bridge(path: &RealPath, params: StableParams, s: f64) -> Result<RescaledBridge> {
    let (ig, g) = locate_g_index(path, params, s)?;
    let x = &path.values()[..=ig];
    let space = g.powf(-1.0 / params.alpha());
    let bridge = RealPath::new(1.0 / ig as f64, x.iter().map(|v| space * v).collect())?;
    let prev_inf = x[..ig].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RescaledBridge { g, index: ig, bridge, terminal_tolerance: space * (prev_inf - x[ig]) })
}

/// Rescales the path at `g` into a first-passage bridge from 0 to `-s` on
/// `[0, 1]`, together with its height process (approximation level
/// `epsilon`, or [`default_epsilon`]) and excursions.
pub fn conditioned_forest_by_rescaling(
    path: &RealPath,
    params: StableParams,
    s: f64,
    epsilon: Option<f64>,
) -> Result<RescaledForest> {
    let RescaledBridge { g, index: ig, bridge, terminal_tolerance } = rescaled_bridge(path, params, s)?;
    let alpha = params.alpha();
    let x = &path.values()[..=ig];
    let space = g.powf(-1.0 / alpha);

    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(alpha, path.grid_step()));
    let raw = RealPath::new(path.grid_step(), x.to_vec())?;
    let h = approx_height_process(&raw, epsilon)?;
    let height_scale = g.powf((1.0 - alpha) / alpha);
    let heights = RealPath::new(bridge.grid_step(), h.values().iter().map(|v| height_scale * v).collect())?;

    let mut excursions = Vec::new();
    let mut last = 0usize;
    let mut inf = x[0];
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v < inf {
            if i - last >= 2 {
                excursions.push(Excursion { level: -inf * space, start: last, end: i });
            }
            inf = v;
            last = i;
        }
    }
    Ok(RescaledForest {
        g,
        bridge,
        heights,
        excursions: ExcursionSet { excursions },
        epsilon,
        terminal_tolerance,
    })
}
