//! Tolerance-aware grouping of floating-point values.
//!
//! All downstream partition refinements key on *ranks* of clustered values
//! rather than raw floats, so that relabeling a graph (which permutes but
//! never perturbs the underlying quantities) can never change a key.

/// Groups `values` by chaining: after sorting, adjacent values whose gap is
/// at most `tol` share a cluster. Returns per-input cluster ids, numbered
/// from 0 in ascending value order.
pub fn cluster_ranks(values: &[f64], tol: f64) -> Vec<usize> {
    let m = values.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut out = vec![0usize; m];
    let mut rank = 0usize;
    for k in 0..m {
        if k > 0 && values[idx[k]] - values[idx[k - 1]] > tol {
            rank += 1;
        }
        out[idx[k]] = rank;
    }
    out
}

/// Cluster representatives (means) in ascending order, paired with sizes.
pub fn cluster_summary(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let ranks = cluster_ranks(values, tol);
    let k = ranks.iter().copied().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (v, &r) in values.iter().zip(&ranks) {
        sum[r] += v;
        count[r] += 1;
    }
    (0..k).map(|r| (sum[r] / count[r] as f64, count[r])).collect()
}

/// True when any gap between adjacent clusters falls within `factor` times
/// `tol`; such spectra sit close to the clustering decision boundary.
pub fn has_marginal_gap(values: &[f64], tol: f64, factor: f64) -> bool {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .windows(2)
        .any(|w| w[1] - w[0] > tol && w[1] - w[0] <= factor * tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_respect_gaps() {
        let r = cluster_ranks(&[1.0, 1.0000001, 5.0, -2.0], 1e-6);
        assert_eq!(r[0], r[1]);
        assert!(r[2] > r[0]);
        assert_eq!(r[3], 0);
    }

    #[test]
    fn chaining_merges_through_intermediates() {
        // 0.0 and 0.18 differ by more than tol but chain through 0.09.
        let r = cluster_ranks(&[0.0, 0.09, 0.18], 0.1);
        assert_eq!(r, vec![0, 0, 0]);
    }

    #[test]
    fn summary_means() {
        let s = cluster_summary(&[3.0, 3.0, -1.0, -1.0, -1.0], 1e-7);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], (-1.0, 3));
        assert_eq!(s[1], (3.0, 2));
    }

    #[test]
    fn marginal_gap_detection() {
        assert!(has_marginal_gap(&[0.0, 5e-7], 1e-7, 10.0));
        assert!(!has_marginal_gap(&[0.0, 1.0], 1e-7, 10.0));
        assert!(!has_marginal_gap(&[0.0, 5e-8], 1e-7, 10.0));
    }
}
