//! Row and column cluster assignments.
//!
//! Labels are 0-based internally and 1-based in every file format. Cluster
//! indices are always compact: every cluster in `0..k()` is non-empty, and
//! deleting a cluster shifts the ones above it down by one.

use rand::Rng;

use crate::error::{Error, Result};

/// The side of the bipartite graph an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Col,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Row => Side::Col,
            Side::Col => Side::Row,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    row_labels: Vec<u32>,
    col_labels: Vec<u32>,
    row_counts: Vec<u32>,
    col_counts: Vec<u32>,
}

impl Partition {
    /// Builds from arbitrary label vectors; unused label values are
    /// compacted away (order-preserving).
    pub fn new(mut row_labels: Vec<u32>, mut col_labels: Vec<u32>) -> Result<Self> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(Error::Config("partition needs at least one node per side".into()));
        }
        let row_counts = compact_labels(&mut row_labels);
        let col_counts = compact_labels(&mut col_labels);
        Ok(Partition { row_labels, col_labels, row_counts, col_counts })
    }

    /// Uniform random labels over `0..k` / `0..g`, then compaction. With
    /// `k <= n` some clusters may still come out empty by chance and are
    /// dropped, so `self.k() <= k`.
    pub fn random(n: usize, m: usize, k: usize, g: usize, rng: &mut impl Rng) -> Result<Self> {
        if k == 0 || g == 0 || k > n || g > m {
            return Err(Error::Config(format!(
                "initial cluster counts ({k},{g}) must be in 1..={n} x 1..={m}"
            )));
        }
        let rows = random_labels(n, k, rng);
        let cols = random_labels(m, g, rng);
        Partition::new(rows, cols)
    }

    pub fn n(&self) -> usize {
        self.row_labels.len()
    }

    pub fn m(&self) -> usize {
        self.col_labels.len()
    }

    pub fn k(&self) -> usize {
        self.row_counts.len()
    }

    pub fn g(&self) -> usize {
        self.col_counts.len()
    }

    pub fn row_labels(&self) -> &[u32] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[u32] {
        &self.col_labels
    }

    pub fn row_counts(&self) -> &[u32] {
        &self.row_counts
    }

    pub fn col_counts(&self) -> &[u32] {
        &self.col_counts
    }

    pub fn labels(&self, side: Side) -> &[u32] {
        match side {
            Side::Row => &self.row_labels,
            Side::Col => &self.col_labels,
        }
    }

    pub fn counts(&self, side: Side) -> &[u32] {
        match side {
            Side::Row => &self.row_counts,
            Side::Col => &self.col_counts,
        }
    }

    pub fn clusters(&self, side: Side) -> usize {
        self.counts(side).len()
    }

    pub fn label_of(&self, side: Side, node: usize) -> usize {
        self.labels(side)[node] as usize
    }

    /// Moves `node` to cluster `to`, which must already exist. If the move
    /// empties the source cluster, that index is deleted and higher labels
    /// shift down; returns the deleted cluster index in that case.
    pub fn move_node(&mut self, side: Side, node: usize, to: usize) -> Option<usize> {
        let (labels, counts) = match side {
            Side::Row => (&mut self.row_labels, &mut self.row_counts),
            Side::Col => (&mut self.col_labels, &mut self.col_counts),
        };
        let from = labels[node] as usize;
        assert!(to < counts.len(), "target cluster {to} out of range");
        assert_ne!(from, to, "move must change the label");
        labels[node] = to as u32;
        counts[to] += 1;
        counts[from] -= 1;
        if counts[from] == 0 {
            counts.remove(from);
            for l in labels.iter_mut() {
                debug_assert_ne!(*l as usize, from);
                if (*l as usize) > from {
                    *l -= 1;
                }
            }
            Some(from)
        } else {
            None
        }
    }

    /// Relabels every member of `src` into `dst` and deletes `src`.
    pub fn merge_clusters(&mut self, side: Side, dst: usize, src: usize) {
        assert_ne!(dst, src);
        let (labels, counts) = match side {
            Side::Row => (&mut self.row_labels, &mut self.row_counts),
            Side::Col => (&mut self.col_labels, &mut self.col_counts),
        };
        assert!(dst < counts.len() && src < counts.len());
        counts[dst] += counts[src];
        counts.remove(src);
        for l in labels.iter_mut() {
            let v = *l as usize;
            if v == src {
                *l = dst as u32;
            } else if v > src {
                *l -= 1;
            }
        }
    }

    /// 1-based copies for file formats and reports.
    pub fn labels_one_based(&self, side: Side) -> Vec<u32> {
        self.labels(side).iter().map(|&l| l + 1).collect()
    }
}

/// Uniform iid labels over `0..k`, before any compaction.
pub fn random_labels(n: usize, k: usize, rng: &mut impl Rng) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..k) as u32).collect()
}

/// Remaps labels so the used values become 0..count (order preserved);
/// returns per-cluster sizes.
pub fn compact_labels(labels: &mut [u32]) -> Vec<u32> {
    let max = *labels.iter().max().expect("non-empty labels") as usize;
    let mut sizes = vec![0u32; max + 1];
    for &l in labels.iter() {
        sizes[l as usize] += 1;
    }
    let mut remap = vec![0u32; max + 1];
    let mut next = 0u32;
    for (old, &s) in sizes.iter().enumerate() {
        if s > 0 {
            remap[old] = next;
            next += 1;
        }
    }
    for l in labels.iter_mut() {
        *l = remap[*l as usize];
    }
    sizes.retain(|&s| s > 0);
    sizes
}
