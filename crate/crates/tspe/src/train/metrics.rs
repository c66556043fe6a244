//! Classification metrics.
//!
//! ROC AUC is the rank-based Mann-Whitney statistic with ties counting a
//! half. Ranks are tracked in integer half-units so the result is exactly
//! equal to the brute-force positive-negative double loop, not just close.

use crate::error::{Error, Result};

/// Probability a random positive outscores a random negative, ties at 1/2.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("ROC AUC needs both classes present".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Metric("non-finite score".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Tie groups share the average rank; twice that average is the exact
    // integer (lo+1) + (hi+1) for 0-based positions lo..=hi.
    let mut rank2_pos_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank2 = (i as u64 + 1) + (j as u64 + 1);
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank2_pos_sum += rank2;
            }
        }
        i = j + 1;
    }
    // U in half-units: 2U = 2R - n_pos(n_pos + 1)
    let u2 = rank2_pos_sum - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Brute-force Mann-Whitney double loop, the oracle `roc_auc` must equal.
pub fn roc_auc_brute_force(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("ROC AUC needs both classes present".into()));
    }
    let mut count2: u64 = 0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                count2 += 2;
            } else if scores[i] == scores[j] {
                count2 += 1;
            }
        }
    }
    Ok(count2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Fraction of points where (score > threshold) agrees with the label.
/// A score exactly at the threshold predicts negative.
pub fn accuracy(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::Metric("accuracy needs matching nonempty inputs".into()));
    }
    let hits = scores
        .iter()
        .zip(labels.iter())
        .filter(|(&s, &l)| (s > threshold) == l)
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn perfect_ranking() {
        let auc = roc_auc(&[0.9, 0.8, 0.3], &[true, true, false]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn inverted_ranking() {
        let auc = roc_auc(&[0.2, 0.8], &[true, false]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn tie_counts_half() {
        let auc = roc_auc(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn single_class_rejected() {
        assert!(roc_auc(&[0.1, 0.9], &[true, true]).is_err());
        assert!(roc_auc(&[0.1, 0.9], &[false, false]).is_err());
    }

    #[test]
    fn equals_brute_force_with_ties() {
        let mut rng = Rng::new(3);
        for trial in 0..200 {
            let n = 2 + rng.below(48);
            // coarse scores force plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| (rng.below(7) as f64) / 6.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.5)).collect();
            let pos = labels.iter().filter(|&&l| l).count();
            if pos == 0 || pos == n {
                continue;
            }
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = roc_auc_brute_force(&scores, &labels).unwrap();
            assert_eq!(fast, slow, "trial {trial}: {fast} vs {slow}");
        }
    }

    #[test]
    fn invariant_under_monotone_transform() {
        let mut rng = Rng::new(5);
        let scores: Vec<f64> = (0..30).map(|_| rng.range_f64(-2.0, 2.0)).collect();
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let base = roc_auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|&s| 1.0 / (1.0 + (-3.0 * s).exp())).collect();
        let shifted: Vec<f64> = scores.iter().map(|&s| 10.0 * s + 5.0).collect();
        assert_eq!(base, roc_auc(&squashed, &labels).unwrap());
        assert_eq!(base, roc_auc(&shifted, &labels).unwrap());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.1], &[true, false], 0.5).unwrap(), 1.0);
        // boundary: 0.5 predicts negative
        assert_eq!(accuracy(&[0.5], &[false], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5], &[true], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn all_positive_predictions_score_the_base_rate() {
        // majority-class baseline on a skewed set
        let labels: Vec<bool> = (0..1000).map(|i| i < 826).collect();
        let scores = vec![1.0; 1000];
        let acc = accuracy(&scores, &labels, 0.5).unwrap();
        assert!((acc - 0.826).abs() < 1e-12);
    }
}
