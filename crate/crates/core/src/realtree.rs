//! Finite samples of the real tree coded by a continuous function `f`, with
//! distance `d_f(s, t) = f(s) + f(t) - 2 min_{[s, t]} f`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realpath::RealPath;
use crate::rng;

/// Sparse table answering range-minimum queries in O(1).
#[derive(Debug, Clone)]
pub struct SparseTableMin {
    levels: Vec<Vec<f64>>,
}

impl SparseTableMin {
    pub fn new(values: &[f64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next = (0..=values.len() - 2 * width)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        SparseTableMin { levels }
    }

    /// Minimum over indices `lo..=hi`.
    pub fn min(&self, lo: usize, hi: usize) -> f64 {
        debug_assert!(lo <= hi);
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        self.levels[k][lo].min(self.levels[k][hi + 1 - (1 << k)])
    }
}

/// `d_f` between arbitrary times of a piecewise linear path, built once per
/// path.
#[derive(Debug, Clone)]
pub struct ExcursionDistance<'a> {
    path: &'a RealPath,
    table: SparseTableMin,
}

impl<'a> ExcursionDistance<'a> {
    pub fn new(path: &'a RealPath) -> Self {
        ExcursionDistance { path, table: SparseTableMin::new(path.values()) }
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(0.0..=self.path.horizon() * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::param(format!(
                "time {t} outside [0, {}]",
                self.path.horizon()
            )));
        }
        Ok(())
    }

    /// `min_{[s, t]} f`: the endpoints or a grid point in between.
    pub fn infimum(&self, s: f64, t: f64) -> Result<f64> {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        self.check(s)?;
        self.check(t)?;
        let h = self.path.grid_step();
        let mut m = self.path.eval(s).min(self.path.eval(t));
        let lo = (s / h).ceil() as usize;
        let hi = ((t / h).floor() as usize).min(self.path.len() - 1);
        if lo <= hi {
            m = m.min(self.table.min(lo, hi));
        }
        Ok(m)
    }

    pub fn distance(&self, s: f64, t: f64) -> Result<f64> {
        let m = self.infimum(s, t)?;
        Ok(self.path.eval(s) + self.path.eval(t) - 2.0 * m)
    }
}

/// Pairwise `d_f` distances between sample times; index 0 plays the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRealTree {
    pub sample_times: Vec<f64>,
    pub dist: Vec<Vec<f64>>,
}

impl FiniteRealTree {
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// The tree with all distances multiplied by `a`.
    pub fn scaled(&self, a: f64) -> FiniteRealTree {
        FiniteRealTree {
            sample_times: self.sample_times.clone(),
            dist: self.dist.iter().map(|row| row.iter().map(|d| a * d).collect()).collect(),
        }
    }

    /// Zero diagonal, symmetry and the triangle inequality, up to `tol`.
    pub fn is_pseudometric(&self, tol: f64) -> bool {
        let d = &self.dist;
        let m = d.len();
        for i in 0..m {
            if d[i][i].abs() > tol {
                return false;
            }
            for j in 0..m {
                if d[i][j] < -tol || (d[i][j] - d[j][i]).abs() > tol {
                    return false;
                }
                for k in 0..m {
                    if d[i][k] > d[i][j] + d[j][k] + tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Excess of the largest of the three pair sums of a quadruple over the
    /// second largest; zero for tree metrics.
    pub fn four_point_excess(&self, x: usize, y: usize, z: usize, w: usize) -> f64 {
        let d = &self.dist;
        let mut sums = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
        sums.sort_by(f64::total_cmp);
        sums[2] - sums[1]
    }
}

/// The sampled tree `(t_i, d_f(t_i, t_j))`.
pub fn excursion_metric(f: &RealPath, times: &[f64]) -> Result<FiniteRealTree> {
    let metric = ExcursionDistance::new(f);
    let m = times.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = metric.distance(times[i], times[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    if m == 1 {
        metric.check(times[0])?;
    }
    Ok(FiniteRealTree { sample_times: times.to_vec(), dist })
}

/// Four-point condition on every quadruple:
/// `d(x,y) + d(z,w) <= max(d(x,z) + d(y,w), d(x,w) + d(y,z)) + tol`.
pub fn check_four_point(tree: &FiniteRealTree, tol: f64) -> bool {
    let m = tree.len();
    for x in 0..m {
        for y in x..m {
            for z in y..m {
                for w in z..m {
                    if tree.four_point_excess(x, y, z, w) > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Four-point condition on `count` random quadruples.
pub fn check_four_point_sampled(tree: &FiniteRealTree, tol: f64, count: usize, seed: u64) -> bool {
    let m = tree.len();
    if m == 0 {
        return true;
    }
    let mut rng = rng::stream(seed, 0);
    (0..count).all(|_| {
        let q: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..m));
        tree.four_point_excess(q[0], q[1], q[2], q[3]) <= tol
    })
}

/// Distortion of the identity correspondence between the trees coded by `f`
/// and `g` at the sample times, halved, next to the coding bound
/// `2 sup |f - g|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhComparison {
    pub distortion_half: f64,
    pub bound: f64,
}

pub fn gh_comparison(f: &RealPath, g: &RealPath, times: &[f64]) -> Result<GhComparison> {
    let bound = 2.0 * f.sup_distance(g)?;
    let df = excursion_metric(f, times)?;
    let dg = excursion_metric(g, times)?;
    let mut worst: f64 = 0.0;
    for (a, b) in df.dist.iter().zip(&dg.dist) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(GhComparison { distortion_half: 0.5 * worst, bound })
}
