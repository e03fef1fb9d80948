//! Benjamini–Hochberg false discovery rate control.

/// Adjusted p-values (`min_{j >= k} m p_(j) / j`, capped at 1) in input order.
pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        running = running.min(p[idx] * m as f64 / (rank + 1) as f64);
        adjusted[idx] = running.min(1.0);
    }
    adjusted
}

/// Step-up decisions at level `alpha`: the hypotheses with the `k` smallest
/// p-values are rejected, `k` being the largest rank with `p_(k) <= k alpha / m`.
pub fn fdr_correct(p: &[f64], alpha: f64) -> Vec<bool> {
    bh_adjust(p).into_iter().map(|q| q <= alpha).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_examples() {
        assert_eq!(fdr_correct(&[0.01, 0.02, 0.04], 0.05), vec![true, true, true]);
        assert_eq!(fdr_correct(&[1.0, 1.0, 1.0], 0.05), vec![false, false, false]);
        assert_eq!(fdr_correct(&[0.05], 0.05), vec![true]);
        assert_eq!(fdr_correct(&[0.0501], 0.05), vec![false]);
        assert_eq!(fdr_correct(&[0.01, 0.04, 0.03, 0.5], 0.05), vec![true, false, false, false]);
        assert!(fdr_correct(&[], 0.05).is_empty());
    }

    #[test]
    fn adjusted_values() {
        let q = bh_adjust(&[0.01, 0.04, 0.03, 0.5]);
        let expect = [0.04, 0.04 * 4.0 / 3.0, 0.04 * 4.0 / 3.0, 0.5];
        for (a, b) in q.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn lowering_a_p_value_keeps_other_rejections() {
        let base = [0.003, 0.02, 0.04, 0.045, 0.3, 0.6];
        let before = fdr_correct(&base, 0.05);
        for k in 0..base.len() {
            let mut p = base;
            p[k] /= 10.0;
            let after = fdr_correct(&p, 0.05);
            for (b, a) in before.iter().zip(&after) {
                assert!(!b || *a);
            }
        }
    }
}
