//! Prediction with candidate selection: restrict the argmax of the learned
//! scorer to the `q` classes whose centroids are nearest to the document.

use std::cmp::Ordering;

use crate::corpus::{SparseDoc, SparseVec};
use crate::exec::{self, Execution};
use crate::features::FeatureSpace;
use crate::trainer::LinearModel;
use crate::{ClassId, Error, Result};

pub const DEFAULT_CANDIDATES: usize = 10;

/// Candidate count `q`. Ties anywhere are broken towards the lowest class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionConfig {
    pub q: usize,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            q: DEFAULT_CANDIDATES,
        }
    }
}

fn check_q(q: usize, k: ClassId) -> Result<()> {
    if q == 0 || q > k as usize {
        return Err(Error::InvalidConfig(format!(
            "candidate count q must be in [1, {k}], got {q}"
        )));
    }
    Ok(())
}

fn by_distance(a: &(ClassId, f64), b: &(ClassId, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

fn nearest(tfidf: &SparseVec, space: &FeatureSpace, q: usize) -> Vec<(ClassId, f64)> {
    let mut dists: Vec<(ClassId, f64)> = space
        .profiles
        .iter()
        .map(|p| (p.class_id, tfidf.distance(&p.centroid)))
        .collect();
    if q < dists.len() {
        dists.select_nth_unstable_by(q - 1, by_distance);
        dists.truncate(q);
    }
    dists.sort_by(by_distance);
    dists
}

/// The `q` nearest-centroid classes with their distances, sorted by
/// `(distance, class id)`.
pub fn candidates(x: &SparseDoc, space: &FeatureSpace, q: usize) -> Result<Vec<(ClassId, f64)>> {
    check_q(q, space.num_classes())?;
    Ok(nearest(&space.prepare(x).tfidf, space, q))
}

/// Argmax of `model.score(phi(x, k))` over the candidate classes.
pub fn predict(
    x: &SparseDoc,
    model: &LinearModel,
    space: &FeatureSpace,
    config: &PredictionConfig,
) -> Result<ClassId> {
    check_q(config.q, space.num_classes())?;
    predict_unchecked(x, model, space, config.q)
}

fn predict_unchecked(x: &SparseDoc, model: &LinearModel, space: &FeatureSpace, q: usize) -> Result<ClassId> {
    let prepared = space.prepare(x);
    let mut best: Option<(ClassId, f64)> = None;
    for (class, _) in nearest(&prepared.tfidf, space, q) {
        let s = model.score(&space.phi_prepared(&prepared, class)?);
        best = match best {
            Some((c, b)) if b > s || (b == s && c < class) => Some((c, b)),
            _ => Some((class, s)),
        };
    }
    Ok(best.expect("q >= 1").0)
}

pub fn predict_batch(
    docs: &[SparseDoc],
    model: &LinearModel,
    space: &FeatureSpace,
    config: &PredictionConfig,
) -> Result<Vec<ClassId>> {
    predict_batch_with(Execution::default(), docs, model, space, config)
}

pub fn predict_batch_with(
    exec: Execution,
    docs: &[SparseDoc],
    model: &LinearModel,
    space: &FeatureSpace,
    config: &PredictionConfig,
) -> Result<Vec<ClassId>> {
    check_q(config.q, space.num_classes())?;
    exec::map(exec, docs, |d| predict_unchecked(d, model, space, config.q))
        .into_iter()
        .collect()
}
