//! Deterministic codings of forests: coding walk, height sequence, contour
//! function, graph distance and the cyclic shift of a path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, UlamHarrisTree};
use crate::realpath::RealPath;

/// Integer path started at 0 whose steps are all at least -1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct LatticePath {
    values: Vec<i64>,
}

impl TryFrom<Vec<i64>> for LatticePath {
    type Error = Error;
    fn try_from(values: Vec<i64>) -> Result<Self> {
        LatticePath::new(values)
    }
}

impl From<LatticePath> for Vec<i64> {
    fn from(p: LatticePath) -> Self {
        p.values
    }
}

impl LatticePath {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        match values.first() {
            None => {
                return Err(Error::InvalidPath {
                    index: 0,
                    reason: "empty path".into(),
                })
            }
            Some(&v) if v != 0 => {
                return Err(Error::InvalidPath {
                    index: 0,
                    reason: format!("path starts at {v}, not 0"),
                })
            }
            _ => {}
        }
        if let Some(i) = values.windows(2).position(|w| w[1] - w[0] < -1) {
            return Err(Error::InvalidPath {
                index: i + 1,
                reason: format!("downward jump {} -> {}", values[i], values[i + 1]),
            });
        }
        Ok(LatticePath { values })
    }

    /// Builds the path with the given increments.
    pub fn from_steps(steps: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut values = vec![0];
        let mut x = 0;
        for s in steps {
            x += s;
            values.push(x);
        }
        LatticePath::new(values)
    }

    pub(crate) fn from_values_unchecked(values: Vec<i64>) -> Self {
        debug_assert!(values[0] == 0 && values.windows(2).all(|w| w[1] - w[0] >= -1));
        LatticePath { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Number of steps.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn terminal(&self) -> i64 {
        *self.values.last().expect("nonempty")
    }

    pub fn increments(&self) -> impl Iterator<Item = i64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Smallest index at which the path equals `-k`.
    pub fn first_passage(&self, k: u64) -> Option<usize> {
        let level = -(k as i64);
        self.values.iter().position(|&v| v == level)
    }

    /// Whether the path first reaches its (negative) terminal value at its
    /// last index.
    pub fn is_first_passage_bridge(&self) -> bool {
        let last = self.terminal();
        last < 0 && self.values[..self.steps()].iter().all(|&v| v > last)
    }
}

/// Heights of the vertices of a forest in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct HeightSeq {
    values: Vec<u64>,
}

impl TryFrom<Vec<u64>> for HeightSeq {
    type Error = Error;
    fn try_from(values: Vec<u64>) -> Result<Self> {
        HeightSeq::new(values)
    }
}

impl From<HeightSeq> for Vec<u64> {
    fn from(h: HeightSeq) -> Self {
        h.values
    }
}

impl HeightSeq {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.first() != Some(&0) {
            return Err(Error::InvalidPath {
                index: 0,
                reason: "height sequence must start at 0".into(),
            });
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0] + 1) {
            return Err(Error::InvalidPath {
                index: i + 1,
                reason: "height increases by more than 1".into(),
            });
        }
        Ok(HeightSeq { values })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Coding walk of a forest: steps are child counts minus one.
pub fn walk_from_forest(forest: &Forest) -> LatticePath {
    let mut values = Vec::with_capacity(forest.total_progeny() + 1);
    let mut x = 0i64;
    values.push(x);
    for c in forest.child_counts() {
        x += c as i64 - 1;
        values.push(x);
    }
    LatticePath::from_values_unchecked(values)
}

/// Inverse of [`walk_from_forest`]. The path must first hit its negative
/// terminal value at its last index.
pub fn forest_from_walk(path: &LatticePath) -> Result<Forest> {
    let n = path.steps();
    let last = path.terminal();
    if n == 0 || last >= 0 {
        return Err(Error::InvalidPath {
            index: n,
            reason: format!("path must end at a negative level, ends at {last}"),
        });
    }
    if let Some(j) = path.values[..n].iter().position(|&v| v <= last) {
        return Err(Error::InvalidPath {
            index: j,
            reason: format!("level {last} reached before the last index"),
        });
    }
    let mut trees = Vec::with_capacity((-last) as usize);
    let mut counts = Vec::new();
    let mut floor = 0i64;
    for (i, w) in path.values.windows(2).enumerate() {
        let step = w[1] - w[0];
        let c = u32::try_from(step + 1).map_err(|_| Error::InvalidPath {
            index: i + 1,
            reason: "step too large".into(),
        })?;
        counts.push(c);
        if w[1] < floor {
            floor = w[1];
            trees.push(UlamHarrisTree::from_counts_unchecked(std::mem::take(&mut counts)));
        }
    }
    Forest::new(trees)
}

/// `H_n = #{0 <= j < n : S_j = min_{j <= i <= n} S_i}` for every index of
/// the path (including the terminal one), in linear time.
pub fn height_process(path: &LatticePath) -> Vec<u64> {
    // values of the indices j < n with S_j <= S_i for all j <= i <= n
    let mut stack: Vec<i64> = Vec::new();
    let mut heights = Vec::with_capacity(path.values.len());
    for &v in &path.values {
        while stack.last().is_some_and(|&top| top > v) {
            stack.pop();
        }
        heights.push(stack.len() as u64);
        stack.push(v);
    }
    heights
}

/// Heights of the vertices coded by the path: [`height_process`] without the
/// terminal index.
pub fn height_from_walk(path: &LatticePath) -> HeightSeq {
    let mut h = height_process(path);
    h.pop();
    if h.is_empty() {
        h.push(0);
    }
    HeightSeq { values: h }
}

/// Depths of the vertices of a forest in lexicographic order.
pub fn forest_heights(forest: &Forest) -> HeightSeq {
    let values = forest
        .trees()
        .iter()
        .flat_map(|t| t.vertex_table().into_iter().map(|v| v.depth))
        .collect();
    HeightSeq { values }
}

/// Piecewise linear contour function given by its breakpoints `(t, value)`;
/// consecutive breakpoints differ by slope +1, -1 or 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContourFn {
    breakpoints: Vec<(u64, u64)>,
}

impl ContourFn {
    pub fn breakpoints(&self) -> &[(u64, u64)] {
        &self.breakpoints
    }

    /// Length of the time interval, twice the total progeny.
    pub fn duration(&self) -> u64 {
        self.breakpoints.last().map_or(0, |b| b.0)
    }

    /// Value at time `t`, clamped to the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        if t <= 0.0 {
            return bp[0].1 as f64;
        }
        let i = bp.partition_point(|&(s, _)| (s as f64) <= t);
        if i >= bp.len() {
            return bp[bp.len() - 1].1 as f64;
        }
        let (t0, v0) = (bp[i - 1].0 as f64, bp[i - 1].1 as f64);
        let (t1, v1) = (bp[i].0 as f64, bp[i].1 as f64);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Successive local extrema, flat stretches collapsed.
    pub fn extremes(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for &(_, v) in &self.breakpoints {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    /// `C_t` at `t = 0, 1, ..., duration`; all breakpoints are integers, so
    /// these values determine the function.
    pub fn integer_values(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.duration() as usize + 1);
        out.push(self.breakpoints[0].1);
        for w in self.breakpoints.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            for t in t0 + 1..=t1 {
                let v = match v1.cmp(&v0) {
                    std::cmp::Ordering::Greater => v0 + (t - t0),
                    std::cmp::Ordering::Less => v0 - (t - t0),
                    std::cmp::Ordering::Equal => v0,
                };
                out.push(v);
            }
        }
        out
    }

    /// The contour as a grid path of step 1.
    pub fn to_real_path(&self) -> RealPath {
        let values = self.integer_values().into_iter().map(|v| v as f64).collect();
        RealPath::new(1.0, values).expect("nonempty")
    }

    /// `(t, C_t)` at `t = 0, 1/2, 1, ..., duration`.
    pub fn half_integer_samples(&self) -> Vec<(f64, f64)> {
        (0..=2 * self.duration())
            .map(|i| {
                let t = i as f64 / 2.0;
                (t, self.eval(t))
            })
            .collect()
    }
}

/// Contour function of the forest with height sequence `h`: between the
/// visit times `K_n = 2n - H_n` the contour descends from `H_n` to
/// `H_{n+1} - 1` and climbs one unit; each tree ends with a flat unit
/// interval of length 2 at level 0.
pub fn contour_from_height(h: &HeightSeq) -> ContourFn {
    let hv = &h.values;
    let m = hv.len() as u64;
    let mut raw: Vec<(u64, u64)> = Vec::with_capacity(2 * hv.len() + 1);
    for n in 0..hv.len() {
        let k = 2 * n as u64 - hv[n];
        raw.push((k, hv[n]));
        let next = hv.get(n + 1).copied().unwrap_or(0);
        if next == 0 {
            raw.push((2 * n as u64, 0));
        } else {
            raw.push((2 * (n as u64 + 1) - next - 1, next - 1));
        }
    }
    raw.push((2 * m, 0));
    // drop repeated points and interior points of straight stretches
    let mut bp: Vec<(u64, u64)> = Vec::with_capacity(raw.len());
    for p in raw {
        if bp.last() == Some(&p) {
            continue;
        }
        if bp.len() >= 2 {
            let (a, b) = (bp[bp.len() - 2], bp[bp.len() - 1]);
            if slope(a, b) == slope(b, p) {
                bp.pop();
            }
        }
        bp.push(p);
    }
    ContourFn { breakpoints: bp }
}

fn slope(a: (u64, u64), b: (u64, u64)) -> i64 {
    (b.1 as i64 - a.1 as i64).signum()
}

/// Graph distance between vertices `n` and `m` of a tree.
pub fn tree_distance(tree: &UlamHarrisTree, n: usize, m: usize) -> Result<u64> {
    tree.distance(n, m)
}

/// Cuts the path at the first passage time `t` of `-k` and exchanges the
/// two pieces: the result runs through `x_{t..n}` and then `x_{0..t}`,
/// re-based so it starts at 0 and keeps the same terminal value.
pub fn cyclic_shift(path: &LatticePath, k: u64) -> Result<LatticePath> {
    let t = path.first_passage(k).ok_or(Error::LevelNotHit { level: k })?;
    Ok(rotate(path, t))
}

/// Rotation of the increments of `path` by `t`.
pub fn rotate(path: &LatticePath, t: usize) -> LatticePath {
    let x = &path.values;
    let n = x.len() - 1;
    let mut values = Vec::with_capacity(n + 1);
    values.extend(x[t..].iter().map(|v| v - x[t]));
    values.extend(x[1..=t].iter().map(|v| v + x[n] - x[t]));
    LatticePath::from_values_unchecked(values)
}

/// Checks that the height process of the shifted path is the shifted height
/// process: `H(theta_t x)_i = H_{t+i}` for `i <= n - t` and
/// `H_{i-n+t} + H_n` beyond.
pub fn height_of_shift_check(path: &LatticePath, k: u64) -> Result<bool> {
    let t = path.first_passage(k).ok_or(Error::LevelNotHit { level: k })?;
    let shifted = height_process(&rotate(path, t));
    let h = height_process(path);
    let n = h.len() - 1;
    let expected = h[t..]
        .iter()
        .copied()
        .chain(h[1..=t].iter().map(|v| v + h[n]));
    Ok(shifted.into_iter().eq(expected))
}
