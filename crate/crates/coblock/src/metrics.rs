//! Partition agreement via normalized mutual information.

/// Joint label counts; cluster ids are compacted on the fly.
fn joint_counts(a: &[u32], b: &[u32]) -> (Vec<u64>, usize, usize) {
    assert_eq!(a.len(), b.len(), "label vectors must have equal length");
    let ka = a.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let kb = b.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut counts = vec![0u64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        counts[x as usize * kb + y as usize] += 1;
    }
    (counts, ka, kb)
}

fn entropy(freqs: impl Iterator<Item = u64>, n: f64) -> f64 {
    let mut h = 0.0;
    for f in freqs {
        if f > 0 {
            let p = f as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

/// Mutual information between two labelings of the same nodes, normalized
/// by the larger of the two entropies, so the value is 1 exactly when the
/// partitions are equal up to renaming. Two conventions close the
/// degenerate cases: two single-cluster partitions agree perfectly (1),
/// while a single-cluster partition carries no information about a split
/// one (0).
pub fn nmi(a: &[u32], b: &[u32]) -> f64 {
    let (counts, ka, kb) = joint_counts(a, b);
    let n = a.len() as f64;
    let row_sum =
        |i: usize| -> u64 { (0..kb).map(|j| counts[i * kb + j]).sum() };
    let col_sum =
        |j: usize| -> u64 { (0..ka).map(|i| counts[i * kb + j]).sum() };
    let ha = entropy((0..ka).map(row_sum), n);
    let hb = entropy((0..kb).map(col_sum), n);
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut info = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = counts[i * kb + j];
            if c > 0 {
                let p = c as f64 / n;
                let pi = row_sum(i) as f64 / n;
                let qj = col_sum(j) as f64 / n;
                info += p * (p / (pi * qj)).ln();
            }
        }
    }
    info / ha.max(hb)
}

/// Row-side plus column-side agreement, in [0, 2].
pub fn combined_nmi(
    rows_a: &[u32],
    rows_b: &[u32],
    cols_a: &[u32],
    cols_b: &[u32],
) -> f64 {
    nmi(rows_a, rows_b) + nmi(cols_a, cols_b)
}

/// Average ranks, ties sharing their midpoint.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &orig in &idx[i..=j] {
            out[orig] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of the rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_partitions_score_one() {
        let a = vec![0, 1, 2, 0, 1, 2, 2];
        assert_abs_diff_eq!(nmi(&a, &a), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn renaming_clusters_does_not_change_the_score() {
        let a = vec![0, 0, 1, 1, 2, 2];
        let b = vec![2, 2, 0, 0, 1, 1];
        assert_abs_diff_eq!(nmi(&a, &b), 1.0, epsilon = 1e-12);
        let c = vec![0, 0, 0, 1, 1, 1];
        assert_abs_diff_eq!(nmi(&a, &c), nmi(&b, &c), epsilon = 1e-12);
    }

    #[test]
    fn refinement_scores_entropy_ratio() {
        // a splits 4 nodes in 2, b in 4: I = H(a) = ln 2, max entropy ln 4.
        let a = vec![0, 0, 1, 1];
        let b = vec![0, 1, 2, 3];
        assert_abs_diff_eq!(nmi(&a, &b), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(nmi(&b, &a), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_single_cluster_conventions() {
        let flat = vec![0, 0, 0, 0];
        let split = vec![0, 1, 0, 1];
        assert_eq!(nmi(&flat, &flat), 1.0);
        assert_eq!(nmi(&flat, &split), 0.0);
        assert_eq!(nmi(&split, &flat), 0.0);
    }

    #[test]
    fn independent_partitions_score_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..5)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..5)).collect();
        let v = nmi(&a, &b);
        assert!(v < 0.01, "nmi = {v}");
        assert!(v >= 0.0);
    }

    #[test]
    fn combined_adds_both_sides() {
        let rows = vec![0, 0, 1, 1];
        let cols = vec![0, 1, 2];
        assert_abs_diff_eq!(
            combined_nmi(&rows, &rows, &cols, &cols),
            2.0,
            epsilon = 1e-12
        );
        let flat = vec![0, 0, 0];
        assert_abs_diff_eq!(
            combined_nmi(&rows, &rows, &cols, &flat),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spearman_handles_monotone_antitone_and_ties() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(spearman(&x, &[2.0, 4.0, 5.0, 7.0, 11.0]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman(&x, &[9.0, 7.0, 5.0, 3.0, 1.0]), -1.0, epsilon = 1e-12);
        // classic hand value: ranks of y = (1, 2.5, 2.5, 4, 5)
        let r = spearman(&x, &[1.0, 2.0, 2.0, 3.0, 4.0]);
        assert!(r > 0.97 && r <= 1.0, "r = {r}");
        assert_eq!(spearman(&x, &[1.0; 5]), 0.0);
    }

    #[test]
    fn score_is_symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let n = rng.random_range(5..60);
            let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
            assert_abs_diff_eq!(nmi(&a, &b), nmi(&b, &a), epsilon = 1e-12);
            let v = nmi(&a, &b);
            assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
