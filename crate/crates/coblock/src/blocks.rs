//! Sufficient statistics and exact log marginal likelihoods of single blocks.
//!
//! A block's marginal depends on its cells only through a handful of
//! additive aggregates, so statistics support O(1) cell updates, slice
//! add/remove, and merge. Zeros contribute nothing beyond the cell count for
//! every model, which is what makes the sparse engine possible: a batch of
//! zeros folds in via `add_zeros`.

use crate::numeric::{lgamma, ln};

use crate::matrix::BipartiteAdjacency;
use crate::model::{ModelKind, PriorConfig};
use crate::partition::{Partition, Side};

const PI: f64 = std::f64::consts::PI;

/// Log factorials of small counts are looked up, not recomputed; Poisson
/// matrices are dominated by small values.
const LN_FACT_TABLE: usize = 256;

fn ln_factorial(v: u64) -> f64 {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table =
        TABLE.get_or_init(|| (0..LN_FACT_TABLE as u64).map(|i| lgamma(i as f64 + 1.0)).collect());
    match table.get(v as usize) {
        Some(&x) => x,
        None => lgamma(v as f64 + 1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockStats {
    Bernoulli {
        size: u64,
        ones: u64,
    },
    Categorical {
        size: u64,
        /// Counts of categories 1..C; category 0 is `size - tail.sum()`.
        tail: Vec<u64>,
    },
    Poisson {
        size: u64,
        sum: u64,
        /// Sum of log(y!) over the cells; zeros contribute exactly 0.0.
        log_fact: f64,
    },
    Gaussian {
        size: u64,
        sum: f64,
        sum_sq: f64,
    },
}

impl BlockStats {
    pub fn empty(model: ModelKind) -> BlockStats {
        match model {
            ModelKind::Bernoulli => BlockStats::Bernoulli { size: 0, ones: 0 },
            ModelKind::Categorical { categories } => BlockStats::Categorical {
                size: 0,
                tail: vec![0; categories as usize - 1],
            },
            ModelKind::Poisson => BlockStats::Poisson { size: 0, sum: 0, log_fact: 0.0 },
            ModelKind::Gaussian => BlockStats::Gaussian { size: 0, sum: 0.0, sum_sq: 0.0 },
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            BlockStats::Bernoulli { size, .. }
            | BlockStats::Categorical { size, .. }
            | BlockStats::Poisson { size, .. }
            | BlockStats::Gaussian { size, .. } => *size,
        }
    }

    pub fn add_cell(&mut self, v: f64) {
        match self {
            BlockStats::Bernoulli { size, ones } => {
                *size += 1;
                *ones += v as u64;
            }
            BlockStats::Categorical { size, tail } => {
                *size += 1;
                let cat = v as usize;
                if cat > 0 {
                    tail[cat - 1] += 1;
                }
            }
            BlockStats::Poisson { size, sum, log_fact } => {
                *size += 1;
                *sum += v as u64;
                *log_fact += ln_factorial(v as u64);
            }
            BlockStats::Gaussian { size, sum, sum_sq } => {
                *size += 1;
                *sum += v;
                *sum_sq += v * v;
            }
        }
    }

    /// Removes one cell of value `v`. Underflow of any counter is a
    /// bookkeeping bug and panics.
    pub fn remove_cell(&mut self, v: f64) {
        match self {
            BlockStats::Bernoulli { size, ones } => {
                *size = checked_dec(*size, 1, "size");
                *ones = checked_dec(*ones, v as u64, "ones");
            }
            BlockStats::Categorical { size, tail } => {
                *size = checked_dec(*size, 1, "size");
                let cat = v as usize;
                if cat > 0 {
                    tail[cat - 1] = checked_dec(tail[cat - 1], 1, "category count");
                }
            }
            BlockStats::Poisson { size, sum, log_fact } => {
                *size = checked_dec(*size, 1, "size");
                *sum = checked_dec(*sum, v as u64, "sum");
                *log_fact -= ln_factorial(v as u64);
            }
            BlockStats::Gaussian { size, sum, sum_sq } => {
                *size = checked_dec(*size, 1, "size");
                *sum -= v;
                *sum_sq -= v * v;
            }
        }
    }

    /// Folds in `count` zero-valued cells at once. Only the size moves:
    /// zeros carry no mass in any other aggregate.
    pub fn add_zeros(&mut self, count: u64) {
        match self {
            BlockStats::Bernoulli { size, .. }
            | BlockStats::Categorical { size, .. }
            | BlockStats::Poisson { size, .. }
            | BlockStats::Gaussian { size, .. } => *size += count,
        }
    }

    pub fn add_slice(&mut self, other: &BlockStats) {
        match (self, other) {
            (
                BlockStats::Bernoulli { size, ones },
                BlockStats::Bernoulli { size: s2, ones: o2 },
            ) => {
                *size += s2;
                *ones += o2;
            }
            (
                BlockStats::Categorical { size, tail },
                BlockStats::Categorical { size: s2, tail: t2 },
            ) => {
                *size += s2;
                for (a, b) in tail.iter_mut().zip(t2) {
                    *a += b;
                }
            }
            (
                BlockStats::Poisson { size, sum, log_fact },
                BlockStats::Poisson { size: s2, sum: m2, log_fact: l2 },
            ) => {
                *size += s2;
                *sum += m2;
                *log_fact += l2;
            }
            (
                BlockStats::Gaussian { size, sum, sum_sq },
                BlockStats::Gaussian { size: s2, sum: m2, sum_sq: q2 },
            ) => {
                *size += s2;
                *sum += m2;
                *sum_sq += q2;
            }
            _ => panic!("mixed block statistic kinds"),
        }
    }

    pub fn remove_slice(&mut self, other: &BlockStats) {
        match (self, other) {
            (
                BlockStats::Bernoulli { size, ones },
                BlockStats::Bernoulli { size: s2, ones: o2 },
            ) => {
                *size = checked_dec(*size, *s2, "size");
                *ones = checked_dec(*ones, *o2, "ones");
            }
            (
                BlockStats::Categorical { size, tail },
                BlockStats::Categorical { size: s2, tail: t2 },
            ) => {
                *size = checked_dec(*size, *s2, "size");
                for (a, b) in tail.iter_mut().zip(t2) {
                    *a = checked_dec(*a, *b, "category count");
                }
            }
            (
                BlockStats::Poisson { size, sum, log_fact },
                BlockStats::Poisson { size: s2, sum: m2, log_fact: l2 },
            ) => {
                *size = checked_dec(*size, *s2, "size");
                *sum = checked_dec(*sum, *m2, "sum");
                *log_fact -= l2;
            }
            (
                BlockStats::Gaussian { size, sum, sum_sq },
                BlockStats::Gaussian { size: s2, sum: m2, sum_sq: q2 },
            ) => {
                *size = checked_dec(*size, *s2, "size");
                *sum -= m2;
                *sum_sq -= q2;
            }
            _ => panic!("mixed block statistic kinds"),
        }
    }

    pub fn merged(&self, other: &BlockStats) -> BlockStats {
        let mut out = self.clone();
        out.add_slice(other);
        out
    }
}

fn checked_dec(a: u64, b: u64, what: &str) -> u64 {
    match a.checked_sub(b) {
        Some(v) => v,
        None => panic!("block statistic underflow: {what} ({a} - {b})"),
    }
}

/// Exact log marginal likelihood of one block under its conjugate prior.
/// An empty block contributes exactly 0.
pub fn log_block_marginal(stats: &BlockStats, prior: &PriorConfig) -> f64 {
    log_marginal_shifted(stats, None, 1, prior)
}

/// Marginal of `base` with `shift` added once (`sign = 1`) or removed once
/// (`sign = -1`), evaluated without materializing the combined statistics.
/// The move scans of the engine live on this.
pub fn log_marginal_shifted(
    base: &BlockStats,
    shift: Option<&BlockStats>,
    sign: i64,
    prior: &PriorConfig,
) -> f64 {
    match (base, shift) {
        (BlockStats::Bernoulli { size, ones }, shift) => {
            let (mut n, mut n1) = (*size, *ones);
            if let Some(BlockStats::Bernoulli { size: s2, ones: o2 }) = shift {
                if sign > 0 {
                    n += s2;
                    n1 += o2;
                } else {
                    n = checked_dec(n, *s2, "size");
                    n1 = checked_dec(n1, *o2, "ones");
                }
            } else if shift.is_some() {
                panic!("mixed block statistic kinds");
            }
            bernoulli_marginal(n, n1, prior.eta)
        }
        (BlockStats::Categorical { size, tail }, shift) => {
            let mut n = *size;
            let t2 = match shift {
                Some(BlockStats::Categorical { size: s2, tail: t2 }) => {
                    if sign > 0 {
                        n += s2;
                    } else {
                        n = checked_dec(n, *s2, "size");
                    }
                    Some(t2)
                }
                Some(_) => panic!("mixed block statistic kinds"),
                None => None,
            };
            if n == 0 {
                return 0.0;
            }
            let c = tail.len() + 1;
            let zeta = prior.zeta;
            let cf = c as f64;
            let mut tail_total = 0u64;
            let mut t = 0.0;
            for (idx, &cnt) in tail.iter().enumerate() {
                let combined = match t2 {
                    Some(t2) => {
                        if sign > 0 {
                            cnt + t2[idx]
                        } else {
                            checked_dec(cnt, t2[idx], "category count")
                        }
                    }
                    None => cnt,
                };
                tail_total += combined;
                t += lgamma(combined as f64 + zeta);
            }
            let cat0 = checked_dec(n, tail_total, "category 0 count");
            lgamma(zeta * cf) - cf * lgamma(zeta) + lgamma(cat0 as f64 + zeta) + t
                - lgamma(n as f64 + zeta * cf)
        }
        (BlockStats::Poisson { size, sum, log_fact }, shift) => {
            let (mut n, mut s, mut lf) = (*size, *sum, *log_fact);
            if let Some(BlockStats::Poisson { size: s2, sum: m2, log_fact: l2 }) = shift {
                if sign > 0 {
                    n += s2;
                    s += m2;
                    lf += l2;
                } else {
                    n = checked_dec(n, *s2, "size");
                    s = checked_dec(s, *m2, "sum");
                    lf -= l2;
                }
            } else if shift.is_some() {
                panic!("mixed block statistic kinds");
            }
            poisson_marginal(n, s, lf, prior.delta, prior.gamma)
        }
        (BlockStats::Gaussian { size, sum, sum_sq }, shift) => {
            let (mut n, mut s, mut ss) = (*size, *sum, *sum_sq);
            if let Some(BlockStats::Gaussian { size: s2, sum: m2, sum_sq: q2 }) = shift {
                if sign > 0 {
                    n += s2;
                    s += m2;
                    ss += q2;
                } else {
                    n = checked_dec(n, *s2, "size");
                    s -= m2;
                    ss -= q2;
                }
            } else if shift.is_some() {
                panic!("mixed block statistic kinds");
            }
            gaussian_marginal(n, s, ss, prior)
        }
    }
}

fn bernoulli_marginal(n: u64, n1: u64, eta: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let n1f = n1 as f64;
    // Same accumulation order as the categorical C=2 case (zeros first), so
    // the two agree bit for bit on identical data.
    lgamma(2.0 * eta) - 2.0 * lgamma(eta) + lgamma(nf - n1f + eta) + lgamma(n1f + eta)
        - lgamma(nf + 2.0 * eta)
}

fn poisson_marginal(n: u64, s: u64, log_fact: f64, delta: f64, gamma: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let sf = s as f64;
    delta * gamma.ln() - lgamma(delta) + lgamma(sf + delta) - (sf + delta) * ln(nf + gamma)
        - log_fact
}

fn gaussian_marginal(n: u64, s: f64, ss: f64, prior: &PriorConfig) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let (gamma, delta, xi, kappa) = (prior.gamma, prior.delta, prior.xi, prior.kappa);
    let scale = ss + kappa * xi * xi - (s + kappa * xi) * (s + kappa * xi) / (nf + kappa) + delta;
    -0.5 * nf * PI.ln() + 0.5 * kappa.ln() - 0.5 * ln(nf + kappa) + 0.5 * gamma * delta.ln()
        + lgamma((nf + gamma) / 2.0)
        - lgamma(gamma / 2.0)
        - 0.5 * (nf + gamma) * scale.ln()
}

/// The K x G grid of block statistics with cached log marginals.
#[derive(Debug, Clone)]
pub struct StatsTable {
    k: usize,
    g: usize,
    grid: Vec<BlockStats>,
    log_lambda: Vec<f64>,
    log_total: f64,
}

impl StatsTable {
    /// Builds from scratch. The sparse path visits stored nonzeros and folds
    /// zero cells in per block as `N_k * M_g - nonzeros`; on integer models
    /// it produces bit-identical statistics to the dense scan.
    pub fn build(
        adj: &BipartiteAdjacency,
        partition: &Partition,
        prior: &PriorConfig,
        sparse: bool,
    ) -> StatsTable {
        let k = partition.k();
        let g = partition.g();
        let model = adj.model();
        let rows = partition.row_labels();
        let cols = partition.col_labels();
        let mut grid: Vec<BlockStats> = (0..k * g).map(|_| BlockStats::empty(model)).collect();
        if sparse {
            for i in 0..adj.n_rows() {
                let ci = rows[i] as usize;
                adj.for_each_nonzero_in_row(i, |j, v| {
                    grid[ci * g + cols[j] as usize].add_cell(v);
                });
            }
            for a in 0..k {
                for b in 0..g {
                    let cells = u64::from(partition.row_counts()[a])
                        * u64::from(partition.col_counts()[b]);
                    let st = &mut grid[a * g + b];
                    st.add_zeros(cells - st.size());
                }
            }
        } else {
            for i in 0..adj.n_rows() {
                let ci = rows[i] as usize;
                adj.for_each_in_row(i, |j, v| {
                    grid[ci * g + cols[j] as usize].add_cell(v);
                });
            }
        }
        let log_lambda: Vec<f64> = grid.iter().map(|s| log_block_marginal(s, prior)).collect();
        let log_total = log_lambda.iter().sum();
        StatsTable { k, g, grid, log_lambda, log_total }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn g(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn stats(&self, a: usize, b: usize) -> &BlockStats {
        &self.grid[a * self.g + b]
    }

    #[inline]
    pub fn log_lambda(&self, a: usize, b: usize) -> f64 {
        self.log_lambda[a * self.g + b]
    }

    /// Cached sum of all block log marginals.
    pub fn log_total(&self) -> f64 {
        self.log_total
    }

    fn refresh_lambda(&mut self, a: usize, b: usize, prior: &PriorConfig) {
        let idx = a * self.g + b;
        let new = log_block_marginal(&self.grid[idx], prior);
        self.log_total += new - self.log_lambda[idx];
        self.log_lambda[idx] = new;
    }

    /// Moves one node's slice between clusters on `side`; O(opposite-side
    /// clusters) marginal refreshes.
    pub fn apply_move(
        &mut self,
        side: Side,
        from: usize,
        to: usize,
        slice: &[BlockStats],
        prior: &PriorConfig,
    ) {
        match side {
            Side::Row => {
                debug_assert_eq!(slice.len(), self.g);
                for (b, sl) in slice.iter().enumerate() {
                    self.grid[from * self.g + b].remove_slice(sl);
                    self.grid[to * self.g + b].add_slice(sl);
                    self.refresh_lambda(from, b, prior);
                    self.refresh_lambda(to, b, prior);
                }
            }
            Side::Col => {
                debug_assert_eq!(slice.len(), self.k);
                for (a, sl) in slice.iter().enumerate() {
                    self.grid[a * self.g + from].remove_slice(sl);
                    self.grid[a * self.g + to].add_slice(sl);
                    self.refresh_lambda(a, from, prior);
                    self.refresh_lambda(a, to, prior);
                }
            }
        }
    }

    /// Deletes an emptied cluster's row or column of blocks; higher indices
    /// shift down, mirroring label compaction.
    pub fn remove_cluster(&mut self, side: Side, idx: usize) {
        match side {
            Side::Row => {
                let start = idx * self.g;
                for b in 0..self.g {
                    let st = &self.grid[start + b];
                    assert_eq!(st.size(), 0, "removing a non-empty block row");
                    self.log_total -= self.log_lambda[start + b];
                }
                self.grid.drain(start..start + self.g);
                self.log_lambda.drain(start..start + self.g);
                self.k -= 1;
            }
            Side::Col => {
                for a in (0..self.k).rev() {
                    let p = a * self.g + idx;
                    assert_eq!(self.grid[p].size(), 0, "removing a non-empty block column");
                    self.log_total -= self.log_lambda[p];
                    self.grid.remove(p);
                    self.log_lambda.remove(p);
                }
                self.g -= 1;
            }
        }
    }

    /// Pools cluster `src` into `dst` on `side` and deletes `src`.
    pub fn apply_merge(&mut self, side: Side, dst: usize, src: usize, prior: &PriorConfig) {
        match side {
            Side::Row => {
                for b in 0..self.g {
                    let sl = self.grid[src * self.g + b].clone();
                    self.grid[dst * self.g + b].add_slice(&sl);
                    self.refresh_lambda(dst, b, prior);
                    self.log_total -= self.log_lambda[src * self.g + b];
                }
                self.grid.drain(src * self.g..(src + 1) * self.g);
                self.log_lambda.drain(src * self.g..(src + 1) * self.g);
                self.k -= 1;
            }
            Side::Col => {
                for a in 0..self.k {
                    let sl = self.grid[a * self.g + src].clone();
                    self.grid[a * self.g + dst].add_slice(&sl);
                    self.refresh_lambda(a, dst, prior);
                }
                for a in (0..self.k).rev() {
                    let p = a * self.g + src;
                    self.log_total -= self.log_lambda[p];
                    self.grid.remove(p);
                    self.log_lambda.remove(p);
                }
                self.g -= 1;
            }
        }
    }

    /// Total cell count across the grid; always N*M.
    pub fn total_cells(&self) -> u64 {
        self.grid.iter().map(BlockStats::size).sum()
    }
}

/// Statistics of row `i`'s cells split by column cluster, written into a
/// reusable buffer. The sparse path visits stored nonzeros only and folds
/// in `M_g - nonzeros` zeros per cluster.
pub fn row_slice_stats_into(
    adj: &BipartiteAdjacency,
    i: usize,
    col_labels: &[u32],
    col_counts: &[u32],
    sparse: bool,
    acc: &mut Vec<BlockStats>,
) {
    let g = col_counts.len();
    acc.clear();
    acc.extend((0..g).map(|_| BlockStats::empty(adj.model())));
    if sparse {
        adj.for_each_nonzero_in_row(i, |j, v| acc[col_labels[j] as usize].add_cell(v));
        for (b, st) in acc.iter_mut().enumerate() {
            st.add_zeros(u64::from(col_counts[b]) - st.size());
        }
    } else {
        adj.for_each_in_row(i, |j, v| acc[col_labels[j] as usize].add_cell(v));
    }
}

/// Statistics of column `j`'s cells split by row cluster.
pub fn col_slice_stats_into(
    adj: &BipartiteAdjacency,
    j: usize,
    row_labels: &[u32],
    row_counts: &[u32],
    sparse: bool,
    acc: &mut Vec<BlockStats>,
) {
    let k = row_counts.len();
    acc.clear();
    acc.extend((0..k).map(|_| BlockStats::empty(adj.model())));
    if sparse {
        adj.for_each_nonzero_in_col(j, |i, v| acc[row_labels[i] as usize].add_cell(v));
        for (a, st) in acc.iter_mut().enumerate() {
            st.add_zeros(u64::from(row_counts[a]) - st.size());
        }
    } else {
        adj.for_each_in_col(j, |i, v| acc[row_labels[i] as usize].add_cell(v));
    }
}

/// Node slice on either side, into a reusable buffer.
pub fn slice_stats_into(
    adj: &BipartiteAdjacency,
    side: Side,
    node: usize,
    partition: &Partition,
    sparse: bool,
    acc: &mut Vec<BlockStats>,
) {
    match side {
        Side::Row => row_slice_stats_into(
            adj,
            node,
            partition.col_labels(),
            partition.col_counts(),
            sparse,
            acc,
        ),
        Side::Col => col_slice_stats_into(
            adj,
            node,
            partition.row_labels(),
            partition.row_counts(),
            sparse,
            acc,
        ),
    }
}

#[cfg(test)]
fn row_slice_stats(
    adj: &BipartiteAdjacency,
    i: usize,
    col_labels: &[u32],
    col_counts: &[u32],
    sparse: bool,
) -> Vec<BlockStats> {
    let mut acc = Vec::new();
    row_slice_stats_into(adj, i, col_labels, col_counts, sparse, &mut acc);
    acc
}

#[cfg(test)]
fn col_slice_stats(
    adj: &BipartiteAdjacency,
    j: usize,
    row_labels: &[u32],
    row_counts: &[u32],
    sparse: bool,
) -> Vec<BlockStats> {
    let mut acc = Vec::new();
    col_slice_stats_into(adj, j, row_labels, row_counts, sparse, &mut acc);
    acc
}

/// Node slice on either side.
pub fn slice_stats(
    adj: &BipartiteAdjacency,
    side: Side,
    node: usize,
    partition: &Partition,
    sparse: bool,
) -> Vec<BlockStats> {
    let mut acc = Vec::new();
    slice_stats_into(adj, side, node, partition, sparse, &mut acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature_block_marginal;
    use crate::testutil::{random_cell, random_unit_prior};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stats_of(values: &[f64], model: ModelKind) -> BlockStats {
        let mut s = BlockStats::empty(model);
        for &v in values {
            s.add_cell(v);
        }
        s
    }

    #[test]
    fn empty_block_contributes_zero() {
        let prior = PriorConfig::default();
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 3 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            assert_eq!(log_block_marginal(&BlockStats::empty(model), &prior), 0.0);
        }
    }

    #[test]
    fn frozen_single_cell_values() {
        let prior = PriorConfig::default();
        // One Bernoulli tie: Gamma(2)Gamma(1)/Gamma(3) = 1/2.
        let s = stats_of(&[1.0], ModelKind::Bernoulli);
        assert_abs_diff_eq!(log_block_marginal(&s, &prior), 0.5f64.ln(), epsilon = 1e-12);
        // 2x2 all-ones block: Gamma(5)Gamma(1)/Gamma(6) = 1/5.
        let s = stats_of(&[1.0; 4], ModelKind::Bernoulli);
        assert_abs_diff_eq!(log_block_marginal(&s, &prior), 0.2f64.ln(), epsilon = 1e-12);
        // One Poisson count of 2: Gamma(3)/2^3 / 2! = 1/8.
        let s = stats_of(&[2.0], ModelKind::Poisson);
        assert_abs_diff_eq!(log_block_marginal(&s, &prior), 0.125f64.ln(), epsilon = 1e-12);
        // One Gaussian observation 0 under unit hyperparameters: 1/(pi sqrt 2).
        let s = stats_of(&[0.0], ModelKind::Gaussian);
        assert_abs_diff_eq!(
            log_block_marginal(&s, &prior),
            (1.0 / (PI * 2f64.sqrt())).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn categorical_with_two_categories_equals_bernoulli_exactly() {
        let prior = PriorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let values: Vec<f64> =
                (0..n).map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect();
            let b = stats_of(&values, ModelKind::Bernoulli);
            let c = stats_of(&values, ModelKind::Categorical { categories: 2 });
            let lb = log_block_marginal(&b, &prior);
            let lc = log_block_marginal(&c, &prior);
            assert_eq!(lb.to_bits(), lc.to_bits(), "{lb} vs {lc}");
        }
    }

    #[test]
    fn add_remove_round_trip_restores_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 4 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            let base: Vec<f64> = (0..12).map(|_| random_cell(model, &mut rng)).collect();
            let mut s = stats_of(&base, model);
            let snapshot = s.clone();
            let extra: Vec<f64> = (0..5).map(|_| random_cell(model, &mut rng)).collect();
            for &v in &extra {
                s.add_cell(v);
            }
            for &v in extra.iter().rev() {
                s.remove_cell(v);
            }
            match (&s, &snapshot) {
                (
                    BlockStats::Gaussian { size, sum, sum_sq },
                    BlockStats::Gaussian { size: s0, sum: m0, sum_sq: q0 },
                ) => {
                    assert_eq!(size, s0);
                    assert_abs_diff_eq!(sum, m0, epsilon = 1e-9);
                    assert_abs_diff_eq!(sum_sq, q0, epsilon = 1e-9);
                }
                _ => assert_eq!(s, snapshot),
            }
        }
    }

    #[test]
    #[should_panic(expected = "underflow")]
    fn removing_a_tie_from_a_tieless_block_panics() {
        let mut s = stats_of(&[0.0], ModelKind::Bernoulli);
        s.remove_cell(1.0);
    }

    #[test]
    fn add_zeros_equals_individual_zero_cells() {
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 3 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            let mut a = stats_of(&[1.0, 1.0], model);
            let mut b = a.clone();
            for _ in 0..7 {
                a.add_cell(0.0);
            }
            b.add_zeros(7);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn merge_matches_pooled_cells_and_commutes() {
        let prior = PriorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 3 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            let xs: Vec<f64> = (0..6).map(|_| random_cell(model, &mut rng)).collect();
            let ys: Vec<f64> = (0..9).map(|_| random_cell(model, &mut rng)).collect();
            let a = stats_of(&xs, model);
            let b = stats_of(&ys, model);
            let pooled = stats_of(&[xs.clone(), ys.clone()].concat(), model);
            let merged = a.merged(&b);
            assert_eq!(merged.size(), pooled.size());
            assert_abs_diff_eq!(
                log_block_marginal(&merged, &prior),
                log_block_marginal(&pooled, &prior),
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                log_block_marginal(&a.merged(&b), &prior),
                log_block_marginal(&b.merged(&a), &prior),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn shifted_marginal_equals_materialized_marginal() {
        let prior = PriorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 4 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            let xs: Vec<f64> = (0..10).map(|_| random_cell(model, &mut rng)).collect();
            let ys: Vec<f64> = (0..4).map(|_| random_cell(model, &mut rng)).collect();
            let base = stats_of(&xs, model);
            let slice = stats_of(&ys, model);
            let added = log_marginal_shifted(&base, Some(&slice), 1, &prior);
            assert_abs_diff_eq!(
                added,
                log_block_marginal(&base.merged(&slice), &prior),
                epsilon = 1e-12
            );
            let mut shrunk = base.merged(&slice);
            shrunk.remove_slice(&slice);
            let removed = log_marginal_shifted(&base.merged(&slice), Some(&slice), -1, &prior);
            assert_abs_diff_eq!(
                removed,
                log_block_marginal(&shrunk, &prior),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn table_builds_identically_on_both_paths_for_integer_models() {
        use crate::testutil::{random_adjacency, ALL_MODELS};
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let prior = PriorConfig::default();
        for model in ALL_MODELS {
            let adj = random_adjacency(9, 7, model, &mut rng);
            let part = Partition::random(9, 7, 3, 2, &mut rng).unwrap();
            let dense = StatsTable::build(&adj, &part, &prior, false);
            let sparse = StatsTable::build(&adj.to_sparse(), &part, &prior, true);
            assert_eq!(dense.total_cells(), 63);
            assert_eq!(sparse.total_cells(), 63);
            for a in 0..part.k() {
                for b in 0..part.g() {
                    if model.is_integer() {
                        assert_eq!(dense.stats(a, b), sparse.stats(a, b));
                        assert_eq!(
                            dense.log_lambda(a, b).to_bits(),
                            sparse.log_lambda(a, b).to_bits()
                        );
                    } else {
                        assert_abs_diff_eq!(
                            dense.log_lambda(a, b),
                            sparse.log_lambda(a, b),
                            epsilon = 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn row_slices_sum_to_table_blocks() {
        use crate::testutil::random_adjacency;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let adj = random_adjacency(8, 6, ModelKind::Poisson, &mut rng);
        let part = Partition::random(8, 6, 3, 2, &mut rng).unwrap();
        let table = StatsTable::build(&adj, &part, &PriorConfig::default(), false);
        for a in 0..part.k() {
            for b in 0..part.g() {
                let mut pooled = BlockStats::empty(ModelKind::Poisson);
                for i in 0..8 {
                    if part.row_labels()[i] as usize == a {
                        let slice =
                            row_slice_stats(&adj, i, part.col_labels(), part.col_counts(), false);
                        pooled.add_slice(&slice[b]);
                    }
                }
                assert_eq!(&pooled, table.stats(a, b));
            }
        }
    }

    #[test]
    fn slices_agree_bitwise_between_paths_on_integer_models() {
        use crate::testutil::{random_adjacency, ALL_MODELS};
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for model in ALL_MODELS.into_iter().filter(ModelKind::is_integer) {
            let adj = random_adjacency(6, 9, model, &mut rng);
            let sp = adj.to_sparse();
            let part = Partition::random(6, 9, 2, 3, &mut rng).unwrap();
            for i in 0..6 {
                let d = row_slice_stats(&adj, i, part.col_labels(), part.col_counts(), false);
                let s = row_slice_stats(&sp, i, part.col_labels(), part.col_counts(), true);
                assert_eq!(d, s);
            }
            for j in 0..9 {
                let d = col_slice_stats(&adj, j, part.row_labels(), part.row_counts(), false);
                let s = col_slice_stats(&sp, j, part.row_labels(), part.row_counts(), true);
                assert_eq!(d, s);
            }
        }
    }

    #[test]
    fn table_tracks_moves_and_merges_against_rebuild() {
        use crate::testutil::random_adjacency;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let prior = PriorConfig::default();
        let adj = random_adjacency(10, 8, ModelKind::Bernoulli, &mut rng);
        let mut part = Partition::random(10, 8, 4, 3, &mut rng).unwrap();
        let mut table = StatsTable::build(&adj, &part, &prior, false);
        for step in 0..200 {
            let side = if step % 2 == 0 { Side::Row } else { Side::Col };
            let count = if side == Side::Row { 10 } else { 8 };
            let clusters = part.clusters(side);
            if clusters < 2 {
                continue;
            }
            let node = rng.random_range(0..count);
            let from = part.label_of(side, node);
            let mut to = rng.random_range(0..clusters);
            if to == from {
                to = (to + 1) % clusters;
            }
            let slice = slice_stats(&adj, side, node, &part, false);
            table.apply_move(side, from, to, &slice, &prior);
            if let Some(removed) = part.move_node(side, node, to) {
                table.remove_cluster(side, removed);
            }
            let rebuilt = StatsTable::build(&adj, &part, &prior, false);
            assert_eq!(table.total_cells(), 80);
            for a in 0..part.k() {
                for b in 0..part.g() {
                    assert_eq!(table.stats(a, b), rebuilt.stats(a, b), "step {step}");
                }
            }
            assert_abs_diff_eq!(table.log_total(), rebuilt.log_total(), epsilon = 1e-9);
        }
        // one merge per side, checked the same way
        for side in [Side::Row, Side::Col] {
            if part.clusters(side) >= 2 {
                table.apply_merge(side, 0, 1, &prior);
                part.merge_clusters(side, 0, 1);
                let rebuilt = StatsTable::build(&adj, &part, &prior, false);
                for a in 0..part.k() {
                    for b in 0..part.g() {
                        assert_eq!(table.stats(a, b), rebuilt.stats(a, b));
                    }
                }
                assert_abs_diff_eq!(table.log_total(), rebuilt.log_total(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn closed_forms_match_quadrature_on_random_small_blocks() {
        // The acceptance suite runs the full 200-block sweep per model; this
        // keeps a fast cross-check next to the formulas.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for model in [
            ModelKind::Bernoulli,
            ModelKind::Categorical { categories: 3 },
            ModelKind::Poisson,
            ModelKind::Gaussian,
        ] {
            for _ in 0..25 {
                let prior = random_unit_prior(&mut rng);
                let n = rng.random_range(1..=8);
                let values: Vec<f64> = (0..n).map(|_| random_cell(model, &mut rng)).collect();
                let s = stats_of(&values, model);
                let closed = log_block_marginal(&s, &prior);
                let quad = quadrature_block_marginal(&values, model, &prior).unwrap();
                assert!(
                    (closed - quad).abs() <= 1e-6,
                    "{model:?}: closed {closed} vs quadrature {quad} on {values:?}"
                );
            }
        }
    }

}
