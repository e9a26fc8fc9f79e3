//! Multi-class to binary reduction.
//!
//! Every document `x` of class `y` is paired with an adversarial class `a != y`.
//! The pair stores the joint vectors of the lower class id first: when `a < y`
//! the pair is `(phi(x, a), phi(x, y))` with label `-1`, otherwise
//! `(phi(x, y), phi(x, a))` with label `+1`. A scorer `f` therefore classifies
//! a pair correctly exactly when `f(phi(x, y)) > f(phi(x, a))`.
//!
//! [`transform_full`] emits all `K - 1` pairs per document. [`double_sample`]
//! first keeps each document of class `k` with probability `pi_k`, then pairs
//! each kept document with `kappa` distinct adversarial classes drawn uniformly.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClassProfiles, SparseDoc};
use crate::exec::{self, Execution};
use crate::features::{FeatureSpace, JointFeatureVector};
use crate::{ClassId, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPair {
    pub first: JointFeatureVector,
    pub second: JointFeatureVector,
    /// `-1` or `+1`.
    pub label: i8,
    pub source_doc: usize,
    pub true_class: ClassId,
    pub adversarial_class: ClassId,
    /// Position of the pair among its document's pairs: the adversarial slot
    /// `k` for the full transform, the draw index for a sampled set.
    pub slot: usize,
}

impl DyadicPair {
    /// `(source_doc, adversarial_class, label)`.
    pub fn key(&self) -> (usize, ClassId, i8) {
        (self.source_doc, self.adversarial_class, self.label)
    }
}

/// Adversarial class for 0-based slot `k` of a document of class `y`.
pub fn adversarial_for_slot(k: usize, y: ClassId) -> ClassId {
    let k = k as ClassId + 1;
    if k < y {
        k
    } else {
        k + 1
    }
}

/// 0-based slot of adversarial class `a` for a document of class `y`.
pub fn slot_for_adversarial(a: ClassId, y: ClassId) -> usize {
    debug_assert_ne!(a, y);
    if a < y {
        a as usize - 1
    } else {
        a as usize - 2
    }
}

fn make_pair(
    space: &FeatureSpace,
    x: &crate::features::PreparedDoc<'_>,
    truth: &JointFeatureVector,
    adversarial: ClassId,
    slot: usize,
) -> Result<DyadicPair> {
    let doc = x.doc;
    let other = space.phi_prepared(x, adversarial)?;
    let (first, second, label) = if adversarial < doc.label {
        (other, *truth, -1)
    } else {
        (*truth, other, 1)
    };
    Ok(DyadicPair {
        first,
        second,
        label,
        source_doc: doc.id,
        true_class: doc.label,
        adversarial_class: adversarial,
        slot,
    })
}

fn check_labels(docs: &[SparseDoc], k: ClassId) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {k}")));
    }
    match docs.iter().find(|d| d.label == 0 || d.label > k) {
        Some(d) => Err(Error::UnknownClass(d.label)),
        None => Ok(()),
    }
}

/// All `m (K - 1)` pairs, document-major and slot-minor.
pub fn transform_full(docs: &[SparseDoc], space: &FeatureSpace) -> Result<Vec<DyadicPair>> {
    transform_full_with(Execution::default(), docs, space)
}

pub fn transform_full_with(
    exec: Execution,
    docs: &[SparseDoc],
    space: &FeatureSpace,
) -> Result<Vec<DyadicPair>> {
    let k = space.num_classes();
    check_labels(docs, k)?;
    let per_doc = exec::map(exec, docs, |doc| -> Result<Vec<DyadicPair>> {
        let x = space.prepare(doc);
        let truth = space.phi_prepared(&x, doc.label)?;
        (0..k as usize - 1)
            .map(|slot| make_pair(space, &x, &truth, adversarial_for_slot(slot, doc.label), slot))
            .collect()
    });
    flatten(per_doc)
}

fn flatten(chunks: Vec<Result<Vec<DyadicPair>>>) -> Result<Vec<DyadicPair>> {
    let mut out = Vec::with_capacity(chunks.iter().map(|c| c.as_ref().map_or(0, Vec::len)).sum());
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

/// Double-sampling hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Target number of retained documents per class.
    pub avg_per_class: f64,
    /// Adversarial classes per retained document.
    pub kappa: usize,
    pub seed: u64,
}

/// `pi_k = min(1, avg_per_class / n_k)`, indexed by `class - 1`.
pub fn compute_pi(profiles: &ClassProfiles, avg_per_class: f64) -> Result<Vec<f64>> {
    if !(avg_per_class > 0.0 && avg_per_class.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "avg_per_class must be positive, got {avg_per_class}"
        )));
    }
    profiles
        .iter()
        .map(|p| {
            if p.num_docs == 0 {
                Err(Error::MissingClasses(vec![p.class_id]))
            } else {
                Ok((avg_per_class / p.num_docs as f64).min(1.0))
            }
        })
        .collect()
}

/// Output of [`double_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSample {
    /// Ids of the retained documents, in corpus order.
    pub retained: Vec<usize>,
    pub pairs: Vec<DyadicPair>,
}

/// The per-document random stream: a ChaCha8 generator seeded by `seed`, on
/// stream `doc_id`. Draws for a document do not depend on any other document.
pub fn doc_rng(seed: u64, doc_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(doc_id as u64);
    rng
}

/// Whether a document is retained, and if so which adversarial classes it
/// is paired with, in draw order.
fn draw_for_doc(doc: &SparseDoc, pi: f64, k: ClassId, kappa: usize, seed: u64) -> Option<Vec<ClassId>> {
    let mut rng = doc_rng(seed, doc.id);
    if rng.random::<f64>() >= pi {
        return None;
    }
    let drawn = index::sample(&mut rng, k as usize - 1, kappa);
    Some(
        drawn
            .into_iter()
            .map(|slot| adversarial_for_slot(slot, doc.label))
            .collect(),
    )
}

/// Step one only: ids of documents retained under `pi`.
pub fn sample_retained(docs: &[SparseDoc], pi: &[f64], seed: u64) -> Result<Vec<usize>> {
    check_pi(docs, pi)?;
    Ok(docs
        .iter()
        .filter(|d| doc_rng(seed, d.id).random::<f64>() < pi[d.label as usize - 1])
        .map(|d| d.id)
        .collect())
}

fn check_pi(docs: &[SparseDoc], pi: &[f64]) -> Result<()> {
    if let Some(d) = docs.iter().find(|d| d.label == 0 || d.label as usize > pi.len()) {
        return Err(Error::UnknownClass(d.label));
    }
    if let Some(p) = pi.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidConfig(format!("retention probability {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn double_sample(
    docs: &[SparseDoc],
    space: &FeatureSpace,
    config: &SamplingConfig,
) -> Result<DoubleSample> {
    double_sample_with(Execution::default(), docs, space, config)
}

pub fn double_sample_with(
    exec: Execution,
    docs: &[SparseDoc],
    space: &FeatureSpace,
    config: &SamplingConfig,
) -> Result<DoubleSample> {
    let pi = compute_pi(&space.profiles, config.avg_per_class)?;
    double_sample_with_pi(exec, docs, space, &pi, config.kappa, config.seed)
}

/// Double sampling with explicit retention probabilities (`pi[class - 1]`).
pub fn double_sample_with_pi(
    exec: Execution,
    docs: &[SparseDoc],
    space: &FeatureSpace,
    pi: &[f64],
    kappa: usize,
    seed: u64,
) -> Result<DoubleSample> {
    let k = space.num_classes();
    check_labels(docs, k)?;
    check_pi(docs, pi)?;
    if kappa == 0 || kappa > k as usize - 1 {
        return Err(Error::InvalidConfig(format!(
            "kappa must be in [1, {}], got {kappa}",
            k - 1
        )));
    }
    let per_doc = exec::map(exec, docs, |doc| -> Result<Option<Vec<DyadicPair>>> {
        let Some(adversaries) = draw_for_doc(doc, pi[doc.label as usize - 1], k, kappa, seed) else {
            return Ok(None);
        };
        let x = space.prepare(doc);
        let truth = space.phi_prepared(&x, doc.label)?;
        adversaries
            .into_iter()
            .enumerate()
            .map(|(draw, a)| make_pair(space, &x, &truth, a, draw))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    });
    let mut retained = Vec::new();
    let mut pairs = Vec::new();
    for (doc, chunk) in docs.iter().zip(per_doc) {
        if let Some(chunk) = chunk? {
            retained.push(doc.id);
            pairs.extend(chunk);
        }
    }
    if retained.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(DoubleSample { retained, pairs })
}

/// Multi-class pairwise error: the fraction of `(x, y')`, `y' != y`, with
/// `g(x, y) - g(x, y') <= 0`. Ties count as errors.
pub fn empirical_risk_multiclass<G>(g: G, docs: &[SparseDoc], num_classes: ClassId) -> Result<f64>
where
    G: Fn(&SparseDoc, ClassId) -> f64,
{
    check_labels(docs, num_classes)?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut errors = 0usize;
    for doc in docs {
        let truth = g(doc, doc.label);
        for other in (1..=num_classes).filter(|&c| c != doc.label) {
            if truth - g(doc, other) <= 0.0 {
                errors += 1;
            }
        }
    }
    Ok(errors as f64 / (docs.len() * (num_classes as usize - 1)) as f64)
}

/// Binary pair error with `h(z) = f(first) - f(second)`: the fraction of
/// pairs with `label * h(z) <= 0`.
pub fn empirical_risk_binary<F>(f: F, pairs: &[DyadicPair]) -> Result<f64>
where
    F: Fn(&JointFeatureVector) -> f64,
{
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("empty pair set".to_string()));
    }
    let errors = pairs
        .iter()
        .filter(|p| {
            let h = f(&p.first) - f(&p.second);
            let margin = if p.label > 0 { h } else { -h };
            margin <= 0.0
        })
        .count();
    Ok(errors as f64 / pairs.len() as f64)
}
