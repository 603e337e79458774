use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::realpath::RealPath;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Grid times `s` sharing the same value of `min_{[s, t]} X`, keeping the
/// values `X_s` still within `epsilon` of it.
struct Block {
    min: f64,
    alive: BinaryHeap<Key>,
}

/// `H^eps_t = (1/eps) * |{s < t : X_s - min_{[s,t]} X < eps}|`, the
/// Lebesgue measure taken as grid step times the number of grid points.
///
/// Runs in `O(n log^2 n)`: the grid times are grouped by the current value
/// of their future minimum, and a group's survivors only change when a new
/// value below its minimum merges it into a lower group.
pub fn approx_height_process(path: &RealPath, epsilon: f64) -> Result<RealPath> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon {epsilon} must be positive")));
    }
    let h = path.grid_step();
    let mut blocks: Vec<Block> = Vec::new();
    let mut alive_total = 0usize;
    let mut out = Vec::with_capacity(path.len());
    for &x in path.values() {
        let mut block = Block { min: x, alive: BinaryHeap::from(vec![Key(x)]) };
        alive_total += 1;
        while blocks.last().is_some_and(|b| b.min >= x) {
            let mut other = blocks.pop().unwrap().alive;
            if other.len() > block.alive.len() {
                std::mem::swap(&mut other, &mut block.alive);
            }
            block.alive.extend(other);
        }
        while block.alive.peek().is_some_and(|k| k.0 >= x + epsilon) {
            block.alive.pop();
            alive_total -= 1;
        }
        blocks.push(block);
        out.push(h * (alive_total - 1) as f64 / epsilon);
    }
    RealPath::new(h, out)
}

/// Default approximation level for a path with stable index `alpha` on a
/// grid of step `h`: the geometric mean of the increment scale
/// `h^(1/alpha)` and 1.
pub fn default_epsilon(alpha: f64, h: f64) -> f64 {
    h.powf(0.5 / alpha)
}

/// One level of [`height_schedule`].
#[derive(Debug, Clone)]
pub struct HeightLevel {
    pub epsilon: f64,
    pub height: RealPath,
    /// Sup-norm change from the previous level.
    pub sup_change: Option<f64>,
}

/// Approximate heights at `eps = 2^-k` for `k` in `levels`, with the
/// successive sup-norm differences as a convergence diagnostic.
pub fn height_schedule(path: &RealPath, levels: std::ops::RangeInclusive<u32>) -> Result<Vec<HeightLevel>> {
    let mut out: Vec<HeightLevel> = Vec::new();
    for k in levels {
        let epsilon = 0.5f64.powi(k as i32);
        let height = approx_height_process(path, epsilon)?;
        let sup_change = match out.last() {
            Some(prev) => Some(prev.height.sup_distance(&height)?),
            None => None,
        };
        out.push(HeightLevel { epsilon, height, sup_change });
    }
    Ok(out)
}
