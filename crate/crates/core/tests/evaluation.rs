use dsmc::evaluation::{bound_constants_from_sizes, evaluate, EvalReport};
use dsmc::{ClassId, Error};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Confusion matrix, then every metric straight from its cells.
fn oracle(truth: &[ClassId], pred: &[ClassId], k: usize) -> (f64, f64, f64, f64) {
    let mut cm = vec![vec![0usize; k + 1]; k + 1];
    for (&t, &p) in truth.iter().zip(pred) {
        cm[t as usize][p as usize] += 1;
    }
    let n = truth.len() as f64;
    let correct: usize = (1..=k).map(|c| cm[c][c]).sum();
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    for c in 1..=k {
        let tp = cm[c][c] as f64;
        let col: usize = (1..=k).map(|t| cm[t][c]).sum();
        let row: usize = (1..=k).map(|p| cm[c][p]).sum();
        p_sum += if col == 0 { 0.0 } else { tp / col as f64 };
        r_sum += if row == 0 { 0.0 } else { tp / row as f64 };
    }
    let (mp, mr) = (p_sum / k as f64, r_sum / k as f64);
    let maf1 = if mp + mr == 0.0 { 0.0 } else { 2.0 * mp * mr / (mp + mr) };
    (correct as f64 / n, mp, mr, maf1)
}

fn summary(r: &EvalReport) -> (f64, f64, f64, f64) {
    (r.accuracy, r.macro_precision, r.macro_recall, r.maf1)
}

#[test]
fn hand_computed_three_quarters() {
    let r = evaluate(&[1, 1, 2], &[1, 2, 2], 2).unwrap();
    assert_eq!(r.accuracy, 2.0 / 3.0);
    assert_eq!((r.per_class[0].precision, r.per_class[0].recall), (1.0, 0.5));
    assert_eq!((r.per_class[1].precision, r.per_class[1].recall), (0.5, 1.0));
    assert_eq!((r.macro_precision, r.macro_recall, r.maf1), (0.75, 0.75, 0.75));
}

#[test]
fn constant_predictor_on_balanced_truth() {
    let r = evaluate(&[1, 2, 1, 2], &[1, 1, 1, 1], 2).unwrap();
    assert_eq!(r.accuracy, 0.5);
    assert!((r.maf1 - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn perfect_predictions() {
    let t = [3, 1, 2, 2];
    let r = evaluate(&t, &t, 3).unwrap();
    assert_eq!((r.accuracy, r.maf1), (1.0, 1.0));
}

#[test]
fn input_errors() {
    assert!(matches!(evaluate(&[1, 2], &[1], 2), Err(Error::LengthMismatch { .. })));
    assert!(evaluate(&[], &[], 2).is_err());
    assert!(matches!(evaluate(&[1, 3], &[1, 1], 2), Err(Error::UnknownClass(3))));
    assert!(matches!(evaluate(&[1, 1], &[0, 1], 2), Err(Error::UnknownClass(0))));
}

#[test]
fn bound_constants_formula() {
    // eta = {0.9, 0.1}, pi = {0.1, 1}.
    let b = bound_constants_from_sizes(&[9, 1], &[0.1, 1.0]).unwrap();
    assert!((b.alpha - 9.0).abs() < 1e-12);
    assert!((b.beta - 10.0).abs() < 1e-12);
}

#[test]
fn thousand_random_vectors_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let k = rng.random_range(2..=12usize);
        let n = rng.random_range(1..=60usize);
        let truth: Vec<ClassId> = (0..n).map(|_| rng.random_range(1..=k as ClassId)).collect();
        let pred: Vec<ClassId> = (0..n).map(|_| rng.random_range(1..=k as ClassId)).collect();
        let r = evaluate(&truth, &pred, k as ClassId).unwrap();
        assert_eq!(summary(&r), oracle(&truth, &pred, k));
    }
}

proptest! {
    /// Relabeling the classes consistently leaves the macro scores unchanged.
    #[test]
    fn invariant_under_class_permutation(seed in any::<u64>(), k in 2usize..10, n in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<ClassId> = (0..n).map(|_| rng.random_range(1..=k as ClassId)).collect();
        let pred: Vec<ClassId> = (0..n).map(|_| rng.random_range(1..=k as ClassId)).collect();
        let mut perm: Vec<ClassId> = (1..=k as ClassId).collect();
        perm.shuffle(&mut rng);
        let map = |v: &[ClassId]| -> Vec<ClassId> { v.iter().map(|&c| perm[c as usize - 1]).collect() };
        let a = evaluate(&truth, &pred, k as ClassId).unwrap();
        let b = evaluate(&map(&truth), &map(&pred), k as ClassId).unwrap();
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert!((a.maf1 - b.maf1).abs() < 1e-12);
        prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
    }
}
