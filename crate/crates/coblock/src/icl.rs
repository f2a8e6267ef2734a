//! The exact objective and its incremental move algebra.
//!
//! The objective is the log joint of labels and data with all block and
//! label parameters integrated out: log pi(c,w|K,G) + sum_kg log Lambda_kg.
//! Moving one node only touches one grid row (or column) of blocks, so a
//! move delta costs O(opposite-side clusters) marginal evaluations. Cached
//! aggregates are re-anchored by a full rebuild every
//! [`ANCHOR_INTERVAL`] accepted updates to keep float drift bounded.

use crate::numeric::lgamma;

use crate::blocks::{log_marginal_shifted, slice_stats, slice_stats_into, BlockStats, StatsTable};
use crate::error::{Error, Result};
use crate::matrix::BipartiteAdjacency;
use crate::model::PriorConfig;
use crate::partition::{Partition, Side};

/// Accepted updates between full recomputations of the cached statistics.
pub const ANCHOR_INTERVAL: u32 = 1000;

/// Dirichlet-multinomial mass of one side's labels.
fn label_term(counts: &[u32], weight: f64) -> f64 {
    let k = counts.len() as f64;
    let n: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    let mut t = lgamma(weight * k) - k * lgamma(weight) - lgamma(n as f64 + weight * k);
    for &c in counts {
        t += lgamma(f64::from(c) + weight);
    }
    t
}

/// Log prior mass of a full partition (both sides).
pub fn log_label_prior(partition: &Partition, prior: &PriorConfig) -> f64 {
    label_term(partition.row_counts(), prior.alpha0)
        + label_term(partition.col_counts(), prior.beta0)
}

pub struct IclState<'a> {
    adj: &'a BipartiteAdjacency,
    prior: PriorConfig,
    partition: Partition,
    stats: StatsTable,
    row_prior_term: f64,
    col_prior_term: f64,
    sparse: bool,
    updates_since_anchor: u32,
}

impl<'a> IclState<'a> {
    pub fn new(
        adj: &'a BipartiteAdjacency,
        partition: Partition,
        prior: PriorConfig,
        sparse: bool,
    ) -> Result<Self> {
        prior.validate()?;
        if partition.n() != adj.n_rows() || partition.m() != adj.n_cols() {
            return Err(Error::Config(format!(
                "partition is {}x{} but the matrix is {}x{}",
                partition.n(),
                partition.m(),
                adj.n_rows(),
                adj.n_cols()
            )));
        }
        let stats = StatsTable::build(adj, &partition, &prior, sparse);
        let row_prior_term = label_term(partition.row_counts(), prior.alpha0);
        let col_prior_term = label_term(partition.col_counts(), prior.beta0);
        Ok(IclState {
            adj,
            prior,
            partition,
            stats,
            row_prior_term,
            col_prior_term,
            sparse,
            updates_since_anchor: 0,
        })
    }

    pub fn adjacency(&self) -> &'a BipartiteAdjacency {
        self.adj
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    pub fn stats(&self) -> &StatsTable {
        &self.stats
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn g(&self) -> usize {
        self.partition.g()
    }

    /// Cached objective value.
    pub fn icl(&self) -> f64 {
        self.row_prior_term + self.col_prior_term + self.stats.log_total()
    }

    /// From-scratch evaluation, no caches involved.
    pub fn recompute_icl(&self) -> f64 {
        let stats = StatsTable::build(self.adj, &self.partition, &self.prior, self.sparse);
        log_label_prior(&self.partition, &self.prior) + stats.log_total()
    }

    /// Rebuilds every cached aggregate.
    pub fn anchor(&mut self) {
        self.stats = StatsTable::build(self.adj, &self.partition, &self.prior, self.sparse);
        self.row_prior_term = label_term(self.partition.row_counts(), self.prior.alpha0);
        self.col_prior_term = label_term(self.partition.col_counts(), self.prior.beta0);
        self.updates_since_anchor = 0;
    }

    fn weight(&self, side: Side) -> f64 {
        match side {
            Side::Row => self.prior.alpha0,
            Side::Col => self.prior.beta0,
        }
    }

    fn side_len(&self, side: Side) -> usize {
        match side {
            Side::Row => self.partition.n(),
            Side::Col => self.partition.m(),
        }
    }

    #[inline]
    fn block(&self, side: Side, own: usize, opp: usize) -> (&BlockStats, f64) {
        match side {
            Side::Row => (self.stats.stats(own, opp), self.stats.log_lambda(own, opp)),
            Side::Col => (self.stats.stats(opp, own), self.stats.log_lambda(opp, own)),
        }
    }

    pub fn slice(&self, side: Side, node: usize) -> Vec<BlockStats> {
        slice_stats(self.adj, side, node, &self.partition, self.sparse)
    }

    pub fn slice_into(&self, side: Side, node: usize, acc: &mut Vec<BlockStats>) {
        slice_stats_into(self.adj, side, node, &self.partition, self.sparse, acc);
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }

    /// Precomputes everything shared across candidate targets for one node:
    /// the source-side removal terms. Absorption (the node is its cluster's
    /// last member, so the cluster count drops by one) changes only the
    /// label-prior part; the vanished blocks contribute exactly 0.
    pub fn move_scan<'s>(
        &'s self,
        side: Side,
        node: usize,
        slice: &'s [BlockStats],
    ) -> MoveScan<'s, 'a> {
        let src = self.partition.label_of(side, node);
        let counts = self.partition.counts(side);
        let w = self.weight(side);
        let nk = f64::from(counts[src]);
        let opp = self.partition.clusters(side.flip());
        let mut base = if counts[src] == 1 {
            let kf = self.partition.clusters(side) as f64;
            let n = self.side_len(side) as f64;
            lgamma(w * (kf - 1.0)) - lgamma(w * kf) + lgamma(w) - lgamma(1.0 + w)
                + lgamma(n + w * kf)
                - lgamma(n + w * (kf - 1.0))
        } else {
            lgamma(nk - 1.0 + w) - lgamma(nk + w)
        };
        for b in 0..opp {
            let (stats, lam) = self.block(side, src, b);
            base += log_marginal_shifted(stats, Some(&slice[b]), -1, &self.prior) - lam;
        }
        MoveScan { state: self, side, src, base, slice }
    }

    /// Objective change from moving `node` to cluster `to` (0 when `to` is
    /// its current cluster).
    pub fn delta_move(&self, side: Side, node: usize, to: usize) -> f64 {
        let slice = self.slice(side, node);
        self.move_scan(side, node, &slice).delta_to(to)
    }

    pub fn delta_row_move(&self, i: usize, to: usize) -> f64 {
        self.delta_move(Side::Row, i, to)
    }

    pub fn delta_col_move(&self, j: usize, to: usize) -> f64 {
        self.delta_move(Side::Col, j, to)
    }

    /// Applies a move; returns the deleted source-cluster index when the
    /// move emptied it.
    pub fn apply_move(
        &mut self,
        side: Side,
        node: usize,
        to: usize,
        slice: &[BlockStats],
    ) -> Option<usize> {
        let from = self.partition.label_of(side, node);
        assert_ne!(from, to, "move must change the label");
        self.stats.apply_move(side, from, to, slice, &self.prior);
        let removed = self.partition.move_node(side, node, to);
        if let Some(r) = removed {
            self.stats.remove_cluster(side, r);
        }
        match side {
            Side::Row => {
                self.row_prior_term = label_term(self.partition.row_counts(), self.prior.alpha0)
            }
            Side::Col => {
                self.col_prior_term = label_term(self.partition.col_counts(), self.prior.beta0)
            }
        }
        self.bump_anchor();
        removed
    }

    pub fn apply_row_move(&mut self, i: usize, to: usize) -> Option<usize> {
        let slice = self.slice(Side::Row, i);
        self.apply_move(Side::Row, i, to, &slice)
    }

    pub fn apply_col_move(&mut self, j: usize, to: usize) -> Option<usize> {
        let slice = self.slice(Side::Col, j);
        self.apply_move(Side::Col, j, to, &slice)
    }

    /// Objective change from pooling clusters `a` and `b` on `side`.
    pub fn delta_merge(&self, side: Side, a: usize, b: usize) -> f64 {
        assert_ne!(a, b);
        let counts = self.partition.counts(side);
        let w = self.weight(side);
        let kf = self.partition.clusters(side) as f64;
        let n = self.side_len(side) as f64;
        let na = f64::from(counts[a]);
        let nb = f64::from(counts[b]);
        let mut d = lgamma(w * (kf - 1.0)) - lgamma(w * kf) + lgamma(w)
            + lgamma(na + nb + w)
            - lgamma(na + w)
            - lgamma(nb + w)
            + lgamma(n + w * kf)
            - lgamma(n + w * (kf - 1.0));
        for b2 in 0..self.partition.clusters(side.flip()) {
            let (sa, la) = self.block(side, a, b2);
            let (sb, lb) = self.block(side, b, b2);
            d += log_marginal_shifted(sa, Some(sb), 1, &self.prior) - la - lb;
        }
        d
    }

    pub fn apply_merge(&mut self, side: Side, dst: usize, src: usize) {
        self.stats.apply_merge(side, dst, src, &self.prior);
        self.partition.merge_clusters(side, dst, src);
        match side {
            Side::Row => {
                self.row_prior_term = label_term(self.partition.row_counts(), self.prior.alpha0)
            }
            Side::Col => {
                self.col_prior_term = label_term(self.partition.col_counts(), self.prior.beta0)
            }
        }
        self.bump_anchor();
    }

    /// Full conditional of one node's label given everything else: the
    /// softmax of the move deltas (the current label contributes delta 0).
    pub fn full_conditional(&self, side: Side, node: usize) -> Vec<f64> {
        let slice = self.slice(side, node);
        let scan = self.move_scan(side, node, &slice);
        let k = self.partition.clusters(side);
        let deltas: Vec<f64> = (0..k).map(|l| scan.delta_to(l)).collect();
        delta_softmax(&deltas)
    }

    fn bump_anchor(&mut self) {
        self.updates_since_anchor += 1;
        if self.updates_since_anchor >= ANCHOR_INTERVAL {
            self.anchor();
        }
    }
}

/// Normalized exp of objective changes, stabilized by max subtraction.
pub fn delta_softmax(deltas: &[f64]) -> Vec<f64> {
    let max = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = deltas.iter().map(|d| (d - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|x| x / total).collect()
}

pub struct MoveScan<'s, 'a> {
    state: &'s IclState<'a>,
    side: Side,
    src: usize,
    base: f64,
    slice: &'s [BlockStats],
}

impl MoveScan<'_, '_> {
    pub fn src(&self) -> usize {
        self.src
    }

    pub fn delta_to(&self, to: usize) -> f64 {
        if to == self.src {
            return 0.0;
        }
        let state = self.state;
        let mut d = self.base;
        for b in 0..state.partition.clusters(self.side.flip()) {
            let (stats, lam) = state.block(self.side, to, b);
            d += log_marginal_shifted(stats, Some(&self.slice[b]), 1, &state.prior) - lam;
        }
        let w = state.weight(self.side);
        let nl = f64::from(state.partition.counts(self.side)[to]);
        d + lgamma(nl + 1.0 + w) - lgamma(nl + w)
    }
}
