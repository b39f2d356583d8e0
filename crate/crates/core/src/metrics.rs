//! Multi-label evaluation: example-based average precision and ranking loss,
//! cell-based Hamming loss, and macro label-wise AUC. Reported headline
//! numbers are AP, 1-HL, 1-RL, AUC, so higher is better across the board.
//!
//! Conventions (documented because the literature varies): AP breaks score
//! ties by label index; ranking loss and AUC give ties half credit; samples
//! without a positive label (and, for ranking loss, without a negative) are
//! skipped, as are single-class label columns in AUC, with skip counts
//! surfaced in the result.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::matrix::Matrix;

/// One run's headline metrics plus degenerate-case skip counts.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSet {
    pub average_precision: f64,
    pub one_minus_hamming: f64,
    pub one_minus_ranking: f64,
    pub auc: f64,
    pub ap_skipped_samples: usize,
    pub rl_skipped_samples: usize,
    pub auc_skipped_labels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

/// Metrics aggregated over repeated seeded runs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub n_test: usize,
    pub label_count: usize,
    pub seeds: Vec<u64>,
    pub runs: Vec<MetricSet>,
    pub average_precision: MetricStats,
    pub one_minus_hamming: MetricStats,
    pub one_minus_ranking: MetricStats,
    pub auc: MetricStats,
}

fn check_shapes(op: &'static str, scores: &Matrix, truth: &Matrix) -> Result<()> {
    if scores.shape() != truth.shape() {
        return Err(CoreError::ShapeMismatch {
            op,
            lhs: scores.shape(),
            rhs: truth.shape(),
        });
    }
    if truth.shape().0 == 0 || truth.shape().1 == 0 {
        return Err(CoreError::EmptyInput { what: "metric input" });
    }
    if !truth.is_binary() {
        return Err(CoreError::NonBinary { what: "truth matrix" });
    }
    Ok(())
}

/// Example-based average precision. Returns the mean over samples that have
/// at least one positive label, plus the count of skipped samples.
pub fn average_precision(scores: &Matrix, truth: &Matrix) -> Result<(f64, usize)> {
    check_shapes("average_precision", scores, truth)?;
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(c);
    for i in 0..n {
        let positives = truth.row(i).iter().filter(|&&y| y == 1.0).count();
        if positives == 0 {
            continue;
        }
        order.clear();
        order.extend(0..c);
        let row = scores.row(i);
        // Descending score; ties broken by ascending label index.
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (rank0, &j) in order.iter().enumerate() {
            if truth.get(i, j) == 1.0 {
                hits += 1;
                sum += hits as f64 / (rank0 + 1) as f64;
            }
        }
        total += sum / positives as f64;
        scored += 1;
    }
    if scored == 0 {
        return Err(CoreError::AllSkipped {
            what: "average_precision",
        });
    }
    Ok((total / scored as f64, n - scored))
}

/// Per-sample misordered-pair fraction over (positive, negative) label pairs,
/// ties counting one half. Returns RL (callers report 1 - RL) and the skip
/// count for samples lacking either class.
pub fn ranking_loss(scores: &Matrix, truth: &Matrix) -> Result<(f64, usize)> {
    check_shapes("ranking_loss", scores, truth)?;
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(c);
    for i in 0..n {
        let positives = truth.row(i).iter().filter(|&&y| y == 1.0).count();
        let negatives = c - positives;
        if positives == 0 || negatives == 0 {
            continue;
        }
        order.clear();
        order.extend(0..c);
        let row = scores.row(i);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        // Ascending walk over tie groups: a positive strictly below a
        // negative is fully misordered, a tie is half.
        let mut misordered = 0.0;
        let mut pos_below = 0usize;
        let mut k = 0usize;
        while k < c {
            let mut group_pos = 0usize;
            let mut group_neg = 0usize;
            let score = row[order[k]];
            while k < c && row[order[k]] == score {
                if truth.get(i, order[k]) == 1.0 {
                    group_pos += 1;
                } else {
                    group_neg += 1;
                }
                k += 1;
            }
            misordered += pos_below as f64 * group_neg as f64;
            misordered += 0.5 * group_pos as f64 * group_neg as f64;
            pos_below += group_pos;
        }
        total += misordered / (positives * negatives) as f64;
        scored += 1;
    }
    if scored == 0 {
        return Err(CoreError::AllSkipped { what: "ranking_loss" });
    }
    Ok((total / scored as f64, n - scored))
}

/// Fraction of cells where the binarized prediction disagrees with the truth.
pub fn hamming_loss(predictions: &Matrix, truth: &Matrix) -> Result<f64> {
    check_shapes("hamming_loss", predictions, truth)?;
    if !predictions.is_binary() {
        return Err(CoreError::NonBinary {
            what: "binarized predictions",
        });
    }
    let (n, c) = truth.shape();
    let mismatches = predictions
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    Ok(mismatches as f64 / (n * c) as f64)
}

/// Macro-averaged label-wise ROC-AUC via the rank statistic, ties counting
/// one half. Labels with a single class in the truth are skipped; the skip
/// count comes back alongside the mean.
pub fn auc_adapted(scores: &Matrix, truth: &Matrix) -> Result<(f64, usize)> {
    check_shapes("auc_adapted", scores, truth)?;
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for j in 0..c {
        let positives = (0..n).filter(|&i| truth.get(i, j) == 1.0).count();
        let negatives = n - positives;
        if positives == 0 || negatives == 0 {
            continue;
        }
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| scores.get(a, j).total_cmp(&scores.get(b, j)));
        let mut correct = 0.0;
        let mut neg_below = 0usize;
        let mut k = 0usize;
        while k < n {
            let mut group_pos = 0usize;
            let mut group_neg = 0usize;
            let score = scores.get(order[k], j);
            while k < n && scores.get(order[k], j) == score {
                if truth.get(order[k], j) == 1.0 {
                    group_pos += 1;
                } else {
                    group_neg += 1;
                }
                k += 1;
            }
            correct += neg_below as f64 * group_pos as f64;
            correct += 0.5 * group_pos as f64 * group_neg as f64;
            neg_below += group_neg;
        }
        total += correct / (positives * negatives) as f64;
        scored += 1;
    }
    if scored == 0 {
        return Err(CoreError::AllSkipped { what: "auc_adapted" });
    }
    Ok((total / scored as f64, c - scored))
}

/// All four headline metrics of one run.
pub fn evaluate_all(
    scores: &Matrix,
    predictions: &Matrix,
    truth: &Matrix,
) -> Result<MetricSet> {
    let (ap, ap_skipped) = average_precision(scores, truth)?;
    let (rl, rl_skipped) = ranking_loss(scores, truth)?;
    let hl = hamming_loss(predictions, truth)?;
    let (auc, auc_skipped) = auc_adapted(scores, truth)?;
    Ok(MetricSet {
        average_precision: ap,
        one_minus_hamming: 1.0 - hl,
        one_minus_ranking: 1.0 - rl,
        auc,
        ap_skipped_samples: ap_skipped,
        rl_skipped_samples: rl_skipped,
        auc_skipped_labels: auc_skipped,
    })
}

fn stats(values: impl Iterator<Item = f64> + Clone) -> MetricStats {
    let k = values.clone().count();
    let mean = values.clone().sum::<f64>() / k as f64;
    let std = if k < 2 {
        0.0
    } else {
        let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
        fmath::sqrt(ss / (k - 1) as f64)
    };
    MetricStats { mean, std }
}

impl EvalReport {
    /// Aggregate per-seed runs into means and sample standard deviations.
    pub fn aggregate(
        n_test: usize,
        label_count: usize,
        seeds: Vec<u64>,
        runs: Vec<MetricSet>,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(CoreError::EmptyInput { what: "metric runs" });
        }
        if seeds.len() != runs.len() {
            return Err(CoreError::InvalidConfig {
                what: alloc::format!(
                    "{} seeds for {} runs",
                    seeds.len(),
                    runs.len()
                ),
            });
        }
        Ok(EvalReport {
            n_test,
            label_count,
            average_precision: stats(runs.iter().map(|r| r.average_precision)),
            one_minus_hamming: stats(runs.iter().map(|r| r.one_minus_hamming)),
            one_minus_ranking: stats(runs.iter().map(|r| r.one_minus_ranking)),
            auc: stats(runs.iter().map(|r| r.auc)),
            seeds,
            runs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_vec(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn ap_perfect_ranking() {
        let (ap, skipped) =
            average_precision(&m(1, 2, &[0.9, 0.1]), &m(1, 2, &[1.0, 0.0])).unwrap();
        assert_eq!(ap, 1.0);
        assert_eq!(skipped, 0);
    }

    #[test]
    fn ap_hand_case() {
        // Positives ranked 1st and 3rd: AP = (1/1 + 2/3) / 2 = 0.8333...
        let (ap, _) =
            average_precision(&m(1, 3, &[0.3, 0.5, 0.8]), &m(1, 3, &[1.0, 0.0, 1.0])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15, "ap = {ap}");
    }

    #[test]
    fn ap_reversed_single_positive() {
        // Worst rank for the only positive among c = 4 labels: AP = 1/4.
        let (ap, _) = average_precision(
            &m(1, 4, &[0.1, 0.5, 0.6, 0.9]),
            &m(1, 4, &[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(ap, 0.25);
    }

    #[test]
    fn ap_skips_positive_free_samples() {
        let (ap, skipped) = average_precision(
            &m(2, 2, &[0.9, 0.1, 0.2, 0.8]),
            &m(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(ap, 1.0);
        assert_eq!(skipped, 1);
        assert!(matches!(
            average_precision(&m(1, 2, &[0.5, 0.5]), &m(1, 2, &[0.0, 0.0])),
            Err(CoreError::AllSkipped { .. })
        ));
    }

    #[test]
    fn rl_hand_case() {
        // Pairs: (j0, j1) misordered, (j2, j1) ordered -> RL = 0.5.
        let (rl, _) = ranking_loss(&m(1, 3, &[0.3, 0.5, 0.8]), &m(1, 3, &[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(rl, 0.5);
    }

    #[test]
    fn rl_perfect_and_tied() {
        let (rl, _) = ranking_loss(&m(1, 2, &[0.9, 0.1]), &m(1, 2, &[1.0, 0.0])).unwrap();
        assert_eq!(rl, 0.0);
        let (rl, _) = ranking_loss(&m(1, 2, &[0.4, 0.4]), &m(1, 2, &[1.0, 0.0])).unwrap();
        assert_eq!(rl, 0.5);
    }

    #[test]
    fn hamming_cases() {
        assert_eq!(
            hamming_loss(&m(1, 3, &[0.0, 1.0, 1.0]), &m(1, 3, &[1.0, 0.0, 1.0])).unwrap(),
            2.0 / 3.0
        );
        assert_eq!(
            hamming_loss(&m(1, 3, &[1.0, 0.0, 1.0]), &m(1, 3, &[1.0, 0.0, 1.0])).unwrap(),
            0.0
        );
        assert_eq!(
            hamming_loss(&m(1, 3, &[0.0, 1.0, 0.0]), &m(1, 3, &[1.0, 0.0, 1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn auc_hand_case() {
        // Ordered pairs (s1,s2), (s1,s4), (s3,s4); misordered (s3,s2) -> 3/4.
        let (auc, _) = auc_adapted(
            &m(4, 1, &[0.9, 0.8, 0.4, 0.1]),
            &m(4, 1, &[1.0, 0.0, 1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_ties_give_half() {
        let (auc, _) = auc_adapted(&m(4, 1, &[0.5; 4]), &m(4, 1, &[1.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_skips_single_class_labels() {
        let (auc, skipped) = auc_adapted(
            &m(2, 2, &[0.9, 0.5, 0.1, 0.5]),
            &m(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn aggregate_matches_sample_std() {
        let run = |ap: f64| MetricSet {
            average_precision: ap,
            one_minus_hamming: 0.9,
            one_minus_ranking: 0.8,
            auc: 0.7,
            ap_skipped_samples: 0,
            rl_skipped_samples: 0,
            auc_skipped_labels: 0,
        };
        let report =
            EvalReport::aggregate(10, 3, vec![1, 2], vec![run(0.3), run(0.5)]).unwrap();
        assert!((report.average_precision.mean - 0.4).abs() < 1e-15);
        assert!((report.average_precision.std - 0.1414213562373095).abs() < 1e-12);
        assert_eq!(report.one_minus_hamming.std, 0.0);

        let single = EvalReport::aggregate(10, 3, vec![1], vec![run(0.3)]).unwrap();
        assert_eq!(single.average_precision.std, 0.0);
    }

    #[test]
    fn permuting_samples_leaves_metrics_unchanged() {
        let scores = m(3, 3, &[0.9, 0.2, 0.4, 0.1, 0.8, 0.3, 0.5, 0.5, 0.6]);
        let truth = m(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let preds = scores.map(|v| if v >= 0.5 { 1.0 } else { 0.0 });
        let base = evaluate_all(&scores, &preds, &truth).unwrap();
        let perm = [2usize, 0, 1];
        let shuffled = evaluate_all(
            &scores.select_rows(&perm),
            &preds.select_rows(&perm),
            &truth.select_rows(&perm),
        )
        .unwrap();
        assert_eq!(base, shuffled);
    }
}
