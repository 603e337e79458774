//! Ordered rooted trees stored as lexicographic child-count sequences, and
//! unconditioned Galton-Watson sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::OffspringLaw;
use crate::rng;

/// Default bound on the number of vertices of a sampled tree.
pub const DEFAULT_SIZE_CAP: usize = 100_000_000;

/// A rooted ordered tree: `child_counts[i]` is the number of children of the
/// `i`-th vertex in depth-first (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct UlamHarrisTree {
    child_counts: Vec<u32>,
}

#[derive(Deserialize)]
struct RawTree {
    child_counts: Vec<u32>,
}

impl TryFrom<RawTree> for UlamHarrisTree {
    type Error = Error;
    fn try_from(raw: RawTree) -> Result<Self> {
        UlamHarrisTree::new(raw.child_counts)
    }
}

/// One row of [`UlamHarrisTree::vertex_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexEntry {
    pub depth: u64,
    pub child_count: u32,
    pub parent: Option<usize>,
}

impl UlamHarrisTree {
    /// Validates that the counts encode exactly one tree.
    pub fn new(child_counts: Vec<u32>) -> Result<Self> {
        if let Some(end) = tree_end(&child_counts, 0) {
            if end == child_counts.len() {
                return Ok(UlamHarrisTree { child_counts });
            }
            return Err(Error::InvalidTree {
                index: end,
                reason: "tree complete before the end of the sequence".into(),
            });
        }
        Err(Error::InvalidTree {
            index: child_counts.len(),
            reason: "sequence ends before the tree is complete".into(),
        })
    }

    pub(crate) fn from_counts_unchecked(child_counts: Vec<u32>) -> Self {
        debug_assert_eq!(tree_end(&child_counts, 0), Some(child_counts.len()));
        UlamHarrisTree { child_counts }
    }

    /// The tree with a single vertex.
    pub fn leaf() -> Self {
        UlamHarrisTree {
            child_counts: vec![0],
        }
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_counts
    }

    /// Number of vertices, root included.
    pub fn size(&self) -> usize {
        self.child_counts.len()
    }

    /// Depth, child count and parent of every vertex, in lexicographic order.
    pub fn vertex_table(&self) -> Vec<VertexEntry> {
        let mut table = Vec::with_capacity(self.size());
        // (vertex, children not yet visited)
        let mut open: Vec<(usize, u32)> = Vec::new();
        for (i, &c) in self.child_counts.iter().enumerate() {
            while open.last().is_some_and(|&(_, left)| left == 0) {
                open.pop();
            }
            let parent = open.last_mut().map(|top| {
                top.1 -= 1;
                top.0
            });
            table.push(VertexEntry {
                depth: open.len() as u64,
                child_count: c,
                parent,
            });
            if c > 0 {
                open.push((i, c));
            }
        }
        table
    }

    /// The subtree rooted at vertex `index`.
    pub fn subtree_at(&self, index: usize) -> Result<UlamHarrisTree> {
        if index >= self.size() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.size(),
            });
        }
        let end = tree_end(&self.child_counts, index).expect("valid tree");
        Ok(UlamHarrisTree {
            child_counts: self.child_counts[index..end].to_vec(),
        })
    }

    /// Edge-count distance between vertices `n` and `m`.
    pub fn distance(&self, n: usize, m: usize) -> Result<u64> {
        let len = self.size();
        for index in [n, m] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        let table = self.vertex_table();
        let (mut a, mut b) = (n, m);
        while a != b {
            // the vertex of larger index can never be an ancestor of the other
            if a > b {
                a = table[a].parent.expect("non-root");
            } else {
                b = table[b].parent.expect("non-root");
            }
        }
        Ok(table[n].depth + table[m].depth - 2 * table[a].depth)
    }
}

/// Index one past the end of the subtree starting at `start`, if the
/// sequence contains it.
fn tree_end(counts: &[u32], start: usize) -> Option<usize> {
    let mut pending: i64 = 1;
    for (i, &c) in counts.iter().enumerate().skip(start) {
        pending += c as i64 - 1;
        if pending == 0 {
            return Some(i + 1);
        }
    }
    None
}

/// A finite ordered sequence of trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawForest")]
pub struct Forest {
    trees: Vec<UlamHarrisTree>,
}

#[derive(Deserialize)]
struct RawForest {
    trees: Vec<UlamHarrisTree>,
}

impl TryFrom<RawForest> for Forest {
    type Error = Error;
    fn try_from(raw: RawForest) -> Result<Self> {
        Forest::new(raw.trees)
    }
}

impl Forest {
    pub fn new(trees: Vec<UlamHarrisTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidTree {
                index: 0,
                reason: "a forest needs at least one tree".into(),
            });
        }
        Ok(Forest { trees })
    }

    pub fn trees(&self) -> &[UlamHarrisTree] {
        &self.trees
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn total_progeny(&self) -> usize {
        self.trees.iter().map(UlamHarrisTree::size).sum()
    }

    /// Child counts of all trees concatenated in order.
    pub fn child_counts(&self) -> impl Iterator<Item = u32> + '_ {
        self.trees.iter().flat_map(|t| t.child_counts.iter().copied())
    }
}

impl From<UlamHarrisTree> for Forest {
    fn from(tree: UlamHarrisTree) -> Self {
        Forest { trees: vec![tree] }
    }
}

fn check_law(law: &OffspringLaw) -> Result<()> {
    if law.mean() > 1.0 + crate::law::PMF_TOLERANCE {
        return Err(Error::Supercritical { mean: law.mean() });
    }
    Ok(())
}

fn grow_tree<R: rand::Rng + ?Sized>(
    sampler: &crate::law::OffspringSampler,
    rng: &mut R,
    cap: usize,
) -> Result<UlamHarrisTree> {
    let mut counts = Vec::new();
    let mut pending: u64 = 1;
    while pending > 0 {
        if counts.len() >= cap {
            return Err(Error::SizeCapExceeded { cap });
        }
        let c = sampler.sample(rng);
        if c > cap as u64 || c > u32::MAX as u64 {
            return Err(Error::SizeCapExceeded { cap });
        }
        counts.push(c as u32);
        pending = pending + c - 1;
    }
    Ok(UlamHarrisTree::from_counts_unchecked(counts))
}

/// A Galton-Watson tree with offspring law `law`, at most `cap` vertices.
pub fn sample_gw_tree_capped(law: &OffspringLaw, seed: u64, cap: usize) -> Result<UlamHarrisTree> {
    check_law(law)?;
    grow_tree(&law.sampler(), &mut rng::stream(seed, 0), cap)
}

/// A Galton-Watson tree with offspring law `law`.
pub fn sample_gw_tree(law: &OffspringLaw, seed: u64) -> Result<UlamHarrisTree> {
    sample_gw_tree_capped(law, seed, DEFAULT_SIZE_CAP)
}

/// `k` independent Galton-Watson trees; tree `i` uses random stream `i`.
pub fn sample_gw_forest_capped(
    law: &OffspringLaw,
    k: usize,
    seed: u64,
    cap: usize,
) -> Result<Forest> {
    if k == 0 {
        return Err(Error::param("a forest needs k >= 1 trees"));
    }
    check_law(law)?;
    let sampler = law.sampler();
    let trees = (0..k)
        .map(|i| grow_tree(&sampler, &mut rng::stream(seed, i as u64), cap))
        .collect::<Result<Vec<_>>>()?;
    Forest::new(trees)
}

pub fn sample_gw_forest(law: &OffspringLaw, k: usize, seed: u64) -> Result<Forest> {
    sample_gw_forest_capped(law, k, seed, DEFAULT_SIZE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn figure_one() -> UlamHarrisTree {
        UlamHarrisTree::new(vec![3, 2, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(UlamHarrisTree::new(vec![0]).is_ok());
        assert!(UlamHarrisTree::new(vec![]).is_err());
        assert!(UlamHarrisTree::new(vec![1]).is_err());
        let err = UlamHarrisTree::new(vec![1, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::InvalidTree { index: 2, .. }), "{err}");
        assert!(Forest::new(vec![]).is_err());
    }

    #[test]
    fn vertex_table_examples() {
        let depths: Vec<u64> = figure_one().vertex_table().iter().map(|v| v.depth).collect();
        assert_eq!(depths, [0, 1, 2, 3, 3, 3, 2, 3, 3, 1, 1, 2, 2]);
        assert_eq!(
            UlamHarrisTree::leaf().vertex_table(),
            [VertexEntry { depth: 0, child_count: 0, parent: None }]
        );
        let t = UlamHarrisTree::new(vec![2, 0, 0]).unwrap().vertex_table();
        assert_eq!(t.iter().map(|v| v.depth).collect::<Vec<_>>(), [0, 1, 1]);
        assert_eq!(t.iter().map(|v| v.parent).collect::<Vec<_>>(), [None, Some(0), Some(0)]);
    }

    #[test]
    fn subtree_examples() {
        let tree = figure_one();
        assert_eq!(tree.subtree_at(10).unwrap().child_counts(), [2, 0, 0]);
        assert_eq!(tree.subtree_at(0).unwrap(), tree);
        assert_eq!(tree.subtree_at(3).unwrap(), UlamHarrisTree::leaf());
        assert!(matches!(
            tree.subtree_at(13),
            Err(Error::IndexOutOfRange { index: 13, len: 13 })
        ));
    }

    #[test]
    fn distance_examples() {
        let tree = figure_one();
        assert_eq!(tree.distance(3, 7).unwrap(), 4);
        assert_eq!(tree.distance(5, 5).unwrap(), 0);
        assert_eq!(tree.distance(0, 12).unwrap(), 2);
        assert!(tree.distance(0, 99).is_err());
    }

    #[test]
    fn trivial_law_gives_leaves() {
        let law = OffspringLaw::finite(vec![1.0]).unwrap();
        assert_eq!(sample_gw_tree(&law, 1).unwrap(), UlamHarrisTree::leaf());
        let forest = sample_gw_forest(&law, 3, 1).unwrap();
        assert_eq!(forest.total_progeny(), 3);
        assert!(sample_gw_forest(&law, 0, 1).is_err());
    }

    #[test]
    fn supercritical_and_cap_errors() {
        let law = OffspringLaw::finite(vec![0.2, 0.0, 0.8]).unwrap();
        assert!(matches!(sample_gw_tree(&law, 1), Err(Error::Supercritical { .. })));
        let binary = OffspringLaw::binary();
        let mut hit = false;
        for seed in 0..200 {
            if let Err(e) = sample_gw_tree_capped(&binary, seed, 5) {
                assert!(matches!(e, Error::SizeCapExceeded { cap: 5 }));
                hit = true;
            }
        }
        assert!(hit);
    }

    #[test]
    fn deterministic_and_first_tree_matches_single() {
        let law = OffspringLaw::critical_geometric();
        let a = sample_gw_forest(&law, 4, 99).unwrap();
        assert_eq!(a, sample_gw_forest(&law, 4, 99).unwrap());
        assert_eq!(a.trees()[0], sample_gw_tree(&law, 99).unwrap());
    }

    #[test]
    fn binary_size_frequencies() {
        // P(size = 1) = 1/2, P(size = 3) = 1/8
        let law = OffspringLaw::binary();
        let n = 100_000;
        let sampler = law.sampler();
        let mut rng = rng::stream(2024, 0);
        // trees beyond the cap are neither of size 1 nor 3
        let sizes: Vec<usize> = (0..n)
            .map(|_| grow_tree(&sampler, &mut rng, 10_000).map_or(usize::MAX, |t| t.size()))
            .collect();
        let ones = sizes.iter().filter(|&&s| s == 1).count() as f64 / n as f64;
        let threes = sizes.iter().filter(|&&s| s == 3).count() as f64 / n as f64;
        let se1 = (0.25f64 / n as f64).sqrt();
        let se3 = (0.125f64 * 0.875 / n as f64).sqrt();
        assert!((ones - 0.5).abs() < 3.0 * se1, "{ones}");
        assert!((threes - 0.125).abs() < 3.0 * se3, "{threes}");
    }

    proptest! {
        #[test]
        fn sampled_trees_are_valid_and_subtrees_compose(seed in any::<u64>(), a in 0usize..1000, b in 0usize..1000) {
            let tree = sample_gw_tree_capped(&OffspringLaw::critical_geometric(), seed, 100_000);
            prop_assume!(tree.is_ok());
            let tree = tree.unwrap();
            prop_assert!(UlamHarrisTree::new(tree.child_counts().to_vec()).is_ok());
            let u = a % tree.size();
            let sub = tree.subtree_at(u).unwrap();
            let v = b % sub.size();
            prop_assert_eq!(sub.subtree_at(v).unwrap(), tree.subtree_at(u + v).unwrap());
        }
    }
}
