//! Binary classification metrics: F1 on the positive class and ROC AUC in
//! the Mann–Whitney formulation (ties count one half).

use super::EvalError;

/// 2PR/(P+R) on the positive class; 0 by convention when precision and
/// recall are both undefined or zero.
pub fn f1_score(predictions: &[bool], labels: &[bool]) -> Result<f64, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half.
///
/// Computed from integer tied-rank sums so the result is bit-identical to
/// the brute-force pairwise count: both reduce to the same integer
/// numerator over 2 * n_pos * n_neg.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NonFiniteScore);
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClassLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());

    // Tied groups share the average rank; twice the average rank of a group
    // spanning 1-based ranks a+1..=b is the integer (a + 1 + b).
    let mut twice_rank_sum_pos: u64 = 0;
    let mut start = 0usize;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_avg_rank = (start as u64 + 1) + end as u64;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        twice_rank_sum_pos += twice_avg_rank * pos_in_group;
        start = end;
    }

    // 2U = 2R_pos - n_pos(n_pos + 1); AUC = 2U / (2 n_pos n_neg).
    let twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_hand_computed_cases() {
        assert_eq!(f1_score(&[true, false, true], &[true, false, true]).unwrap(), 1.0);
        // TP=1, FP=1, FN=1 -> 0.5
        assert_eq!(f1_score(&[true, true, false], &[true, false, true]).unwrap(), 0.5);
        // No predicted positives while positives exist.
        assert_eq!(f1_score(&[false, false], &[true, false]).unwrap(), 0.0);
        assert!(f1_score(&[true], &[true, false]).is_err());
    }

    #[test]
    fn auc_known_values() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
        let perfect = roc_auc(&[0.0, 0.0, 1.0, 1.0], &[false, false, true, true]).unwrap();
        assert_eq!(perfect, 1.0);
        let all_tied = roc_auc(&[0.5; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(all_tied, 0.5);
    }

    #[test]
    fn auc_rejects_degenerate_inputs() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClassLabels)));
        assert!(matches!(roc_auc(&[f64::NAN, 0.2], &[true, false]), Err(EvalError::NonFiniteScore)));
    }

    #[test]
    fn auc_matches_brute_force_with_ties() {
        let mut rng = crate::rng::substream(11, "auc");
        use rand::Rng;
        for _ in 0..200 {
            let n = rng.random_range(2..40);
            // Coarse grid of scores forces plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..6) as f64) / 5.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.4).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let mut twice_wins = 0u64;
            let mut pairs = 0u64;
            for (i, &li) in labels.iter().enumerate() {
                if !li {
                    continue;
                }
                for (j, &lj) in labels.iter().enumerate() {
                    if lj {
                        continue;
                    }
                    pairs += 1;
                    if scores[i] > scores[j] {
                        twice_wins += 2;
                    } else if scores[i] == scores[j] {
                        twice_wins += 1;
                    }
                }
            }
            let brute = twice_wins as f64 / (2 * pairs) as f64;
            let fast = roc_auc(&scores, &labels).unwrap();
            assert_eq!(fast, brute, "scores {scores:?} labels {labels:?}");
        }
    }
}
