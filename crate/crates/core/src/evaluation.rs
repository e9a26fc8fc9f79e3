//! Accuracy, macro-F1 and the sampling constants alpha and beta.
//!
//! Macro precision and recall average over all `K` classes, including classes
//! absent from both truth and predictions (they contribute `0`). MaF1 is the
//! harmonic mean of macro precision and macro recall; the mean of per-class
//! F1 scores is reported separately.

use crate::corpus::ClassProfiles;
use crate::{ClassId, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: ClassId,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true instances.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub maf1: f64,
    pub mean_class_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn evaluate(truth: &[ClassId], predicted: &[ClassId], num_classes: ClassId) -> Result<EvalReport> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidConfig("nothing to evaluate".to_string()));
    }
    if num_classes == 0 {
        return Err(Error::InvalidConfig("need at least one class".to_string()));
    }
    let k = num_classes as usize;
    let mut tp = vec![0usize; k];
    let mut support = vec![0usize; k];
    let mut predicted_count = vec![0usize; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        for c in [t, p] {
            if c == 0 || c > num_classes {
                return Err(Error::UnknownClass(c));
            }
        }
        support[t as usize - 1] += 1;
        predicted_count[p as usize - 1] += 1;
        if t == p {
            tp[t as usize - 1] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let precision = ratio(tp[c], predicted_count[c]);
            let recall = ratio(tp[c], support[c]);
            ClassMetrics {
                class: c as ClassId + 1,
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: support[c],
            }
        })
        .collect();
    let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / k as f64;
    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / k as f64;
    Ok(EvalReport {
        n: truth.len(),
        accuracy: ratio(tp.iter().sum(), truth.len()),
        macro_precision,
        macro_recall,
        maf1: harmonic(macro_precision, macro_recall),
        mean_class_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64,
        per_class,
    })
}

/// `alpha = max_k eta_k / pi_k` and `beta = max_k 1 / pi_k`, with `eta_k` the
/// training proportion of class k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub alpha: f64,
    pub beta: f64,
}

pub fn bound_constants(profiles: &ClassProfiles, pi: &[f64]) -> Result<BoundConstants> {
    bound_constants_from_sizes(&profiles.class_sizes(), pi)
}

/// [`bound_constants`] from raw class sizes (`sizes[class - 1]`).
pub fn bound_constants_from_sizes(sizes: &[usize], pi: &[f64]) -> Result<BoundConstants> {
    if sizes.len() != pi.len() || sizes.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{} class sizes vs {} retention probabilities",
            sizes.len(),
            pi.len()
        )));
    }
    if let Some(p) = pi.iter().find(|&&p| p.is_nan() || p <= 0.0) {
        return Err(Error::InvalidConfig(format!("retention probability must be positive, got {p}")));
    }
    let m: usize = sizes.iter().sum();
    let mut alpha = f64::NEG_INFINITY;
    let mut beta = f64::NEG_INFINITY;
    for (&n, &p) in sizes.iter().zip(pi) {
        alpha = alpha.max(n as f64 / m as f64 / p);
        beta = beta.max(1.0 / p);
    }
    Ok(BoundConstants { alpha, beta })
}
