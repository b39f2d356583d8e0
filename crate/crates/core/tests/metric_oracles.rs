//! Exhaustive enumeration oracles for the four evaluation metrics, plus the
//! rank-invariance properties (AP/RL/AUC depend only on score order).

use dicnet_core::matrix::Matrix;
use dicnet_core::metrics::{auc_adapted, average_precision, hamming_loss, ranking_loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// AP by direct rank counting: the rank of label j is one plus the number of
/// labels scored strictly higher, or tied with a smaller index.
fn oracle_ap(scores: &Matrix, truth: &Matrix) -> Option<f64> {
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    for i in 0..n {
        let pos: Vec<usize> = (0..c).filter(|&j| truth.get(i, j) == 1.0).collect();
        if pos.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &j in &pos {
            let rank = 1 + (0..c)
                .filter(|&k| {
                    k != j
                        && (scores.get(i, k) > scores.get(i, j)
                            || (scores.get(i, k) == scores.get(i, j) && k < j))
                })
                .count();
            let pos_at_or_above = pos
                .iter()
                .filter(|&&k| {
                    k == j
                        || scores.get(i, k) > scores.get(i, j)
                        || (scores.get(i, k) == scores.get(i, j) && k < j)
                })
                .count();
            sum += pos_at_or_above as f64 / rank as f64;
        }
        total += sum / pos.len() as f64;
        scored += 1;
    }
    (scored > 0).then(|| total / scored as f64)
}

/// RL by exhaustive (positive, negative) pair enumeration.
fn oracle_rl(scores: &Matrix, truth: &Matrix) -> Option<f64> {
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    for i in 0..n {
        let pos: Vec<usize> = (0..c).filter(|&j| truth.get(i, j) == 1.0).collect();
        let neg: Vec<usize> = (0..c).filter(|&j| truth.get(i, j) == 0.0).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut bad = 0.0;
        for &p in &pos {
            for &q in &neg {
                if scores.get(i, p) < scores.get(i, q) {
                    bad += 1.0;
                } else if scores.get(i, p) == scores.get(i, q) {
                    bad += 0.5;
                }
            }
        }
        total += bad / (pos.len() * neg.len()) as f64;
        scored += 1;
    }
    (scored > 0).then(|| total / scored as f64)
}

fn oracle_hl(pred: &Matrix, truth: &Matrix) -> f64 {
    let (n, c) = truth.shape();
    let mut bad = 0usize;
    for i in 0..n {
        for j in 0..c {
            if pred.get(i, j) != truth.get(i, j) {
                bad += 1;
            }
        }
    }
    bad as f64 / (n * c) as f64
}

/// Label-wise AUC by exhaustive pair enumeration, macro-averaged.
fn oracle_auc(scores: &Matrix, truth: &Matrix) -> Option<f64> {
    let (n, c) = truth.shape();
    let mut total = 0.0;
    let mut scored = 0usize;
    for j in 0..c {
        let pos: Vec<usize> = (0..n).filter(|&i| truth.get(i, j) == 1.0).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| truth.get(i, j) == 0.0).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut good = 0.0;
        for &p in &pos {
            for &q in &neg {
                if scores.get(p, j) > scores.get(q, j) {
                    good += 1.0;
                } else if scores.get(p, j) == scores.get(q, j) {
                    good += 0.5;
                }
            }
        }
        total += good / (pos.len() * neg.len()) as f64;
        scored += 1;
    }
    (scored > 0).then(|| total / scored as f64)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Matrix, Matrix, Matrix) {
    let n = rng.gen_range(1..=6usize);
    let c = rng.gen_range(2..=5usize);
    // Quantized scores so ties actually occur.
    let scores = Matrix::from_fn(n, c, |_, _| (rng.gen_range(0..8) as f64) / 8.0);
    let truth = Matrix::from_fn(n, c, |_, _| if rng.gen_bool(0.4) { 1.0 } else { 0.0 });
    let pred = scores.map(|v| if v >= 0.5 { 1.0 } else { 0.0 });
    (scores, truth, pred)
}

#[test]
fn metrics_match_enumeration_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = (0usize, 0usize, 0usize);
    for case in 0..400 {
        let (scores, truth, pred) = random_instance(&mut rng);
        if let Some(expected) = oracle_ap(&scores, &truth) {
            let (got, _) = average_precision(&scores, &truth).unwrap();
            assert!((got - expected).abs() < 1e-12, "case {case} AP: {got} vs {expected}");
            checked.0 += 1;
        }
        if let Some(expected) = oracle_rl(&scores, &truth) {
            let (got, _) = ranking_loss(&scores, &truth).unwrap();
            assert!((got - expected).abs() < 1e-12, "case {case} RL: {got} vs {expected}");
            checked.1 += 1;
        }
        let got = hamming_loss(&pred, &truth).unwrap();
        assert!((got - oracle_hl(&pred, &truth)).abs() < 1e-12, "case {case} HL");
        if let Some(expected) = oracle_auc(&scores, &truth) {
            let (got, _) = auc_adapted(&scores, &truth).unwrap();
            assert!((got - expected).abs() < 1e-12, "case {case} AUC: {got} vs {expected}");
            checked.2 += 1;
        }
    }
    assert!(checked.0 > 200 && checked.1 > 200 && checked.2 > 200, "{checked:?}");
}

#[test]
fn rank_metrics_are_monotone_transform_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..100 {
        let (scores, truth, _) = random_instance(&mut rng);
        // Strictly monotone: x -> exp(3x) + x.
        let transformed = scores.map(|v| (3.0 * v).exp() + v);
        if let Ok((ap, _)) = average_precision(&scores, &truth) {
            let (ap_t, _) = average_precision(&transformed, &truth).unwrap();
            assert_eq!(ap, ap_t);
        }
        if let Ok((rl, _)) = ranking_loss(&scores, &truth) {
            let (rl_t, _) = ranking_loss(&transformed, &truth).unwrap();
            assert_eq!(rl, rl_t);
        }
        if let Ok((auc, _)) = auc_adapted(&scores, &truth) {
            let (auc_t, _) = auc_adapted(&transformed, &truth).unwrap();
            assert_eq!(auc, auc_t);
        }
    }
}
