//! Joint example/class representation.
//!
//! For a document `x` and class `y`, with `T` the terms present in both `x`
//! and the class mega-document (`x_t > 0`, `y_t > 0`):
//!
//! | idx | feature |
//! |-----|---------|
//! | 1 | `sum_T ln(1 + y_t)` |
//! | 2 | `sum_T ln(1 + l_S / F_t)` |
//! | 3 | `sum_T I_t` |
//! | 4 | `sum_T (y_t / |y|) * I_t` |
//! | 5 | `sum_T ln(1 + y_t / |y|)` |
//! | 6 | `sum_T ln(1 + (y_t / |y|) * I_t)` |
//! | 7 | `sum_T ln(1 + (y_t / |y|) * (l_S / F_t))` |
//! | 8 | `|T|` |
//! | 9 | Euclidean distance between the tf-idf vector of `x` and the class centroid |
//! | 10 | `sum_T I_t * 2 y_t / (y_t + 0.25 + 0.75 * len(y) / avg_len)` |
//!
//! Sums run over distinct shared terms and do not weight by `x_t`.

use std::ops::Index;

use crate::corpus::{
    build_profiles_with, compute_stats, tfidf_vector, ClassProfile, ClassProfiles, CorpusStats,
    SparseDoc, SparseVec,
};
use crate::exec::Execution;
use crate::{ClassId, Error, Result};

pub const NUM_FEATURES: usize = 10;

/// `phi(x, y)`; index `i` holds feature `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointFeatureVector(pub [f64; NUM_FEATURES]);

impl JointFeatureVector {
    pub fn values(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for JointFeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Corpus statistics and class profiles: everything `phi` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub stats: CorpusStats,
    pub profiles: ClassProfiles,
}

/// A document together with its tf-idf vector, so the vector is computed once
/// when the document is paired with many classes.
#[derive(Debug, Clone)]
pub struct PreparedDoc<'a> {
    pub doc: &'a SparseDoc,
    pub tfidf: SparseVec,
}

impl FeatureSpace {
    pub fn fit(docs: &[SparseDoc]) -> Result<Self> {
        Self::fit_with(Execution::default(), docs)
    }

    pub fn fit_with(exec: Execution, docs: &[SparseDoc]) -> Result<Self> {
        let stats = compute_stats(docs)?;
        let profiles = build_profiles_with(exec, docs, &stats)?;
        Ok(FeatureSpace { stats, profiles })
    }

    pub fn num_classes(&self) -> ClassId {
        self.profiles.num_classes()
    }

    pub fn prepare<'a>(&self, doc: &'a SparseDoc) -> PreparedDoc<'a> {
        PreparedDoc {
            doc,
            tfidf: tfidf_vector(doc, &self.stats),
        }
    }

    pub fn phi(&self, doc: &SparseDoc, class: ClassId) -> Result<JointFeatureVector> {
        phi(doc, class, &self.profiles, &self.stats)
    }

    pub fn phi_prepared(&self, x: &PreparedDoc<'_>, class: ClassId) -> Result<JointFeatureVector> {
        let profile = self
            .profiles
            .get(class)
            .ok_or(Error::UnknownClass(class))?;
        joint_features(x, profile, &self.stats, self.profiles.avg_len)
    }
}

pub fn phi(
    doc: &SparseDoc,
    class: ClassId,
    profiles: &ClassProfiles,
    stats: &CorpusStats,
) -> Result<JointFeatureVector> {
    let profile = profiles.get(class).ok_or(Error::UnknownClass(class))?;
    let prepared = PreparedDoc {
        doc,
        tfidf: tfidf_vector(doc, stats),
    };
    joint_features(&prepared, profile, stats, profiles.avg_len)
}

fn joint_features(
    x: &PreparedDoc<'_>,
    profile: &ClassProfile,
    stats: &CorpusStats,
    avg_len: f64,
) -> Result<JointFeatureVector> {
    let size = profile.size_terms;
    if size <= 0.0 {
        return Err(Error::DegenerateClass(profile.class_id));
    }
    if avg_len <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "average class length must be positive, got {avg_len}"
        )));
    }
    let l_s = stats.total_terms;
    let bm25_norm = 0.25 + 0.75 * profile.len() / avg_len;
    let mut f = [0.0; NUM_FEATURES];
    for &(t, _) in &x.doc.terms {
        let y_t = profile.count(t);
        if y_t <= 0.0 {
            continue;
        }
        let idf = stats.idf(t);
        let coll = l_s / stats.term_freq(t);
        let share = y_t / size;
        f[0] += y_t.ln_1p();
        f[1] += coll.ln_1p();
        f[2] += idf;
        f[3] += share * idf;
        f[4] += share.ln_1p();
        f[5] += (share * idf).ln_1p();
        f[6] += (share * coll).ln_1p();
        f[7] += 1.0;
        f[9] += idf * (2.0 * y_t) / (y_t + bm25_norm);
    }
    f[8] = x.tfidf.distance(&profile.centroid);
    Ok(JointFeatureVector(f))
}

/// Per-coordinate standardization to zero mean and unit (population) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub mean: [f64; NUM_FEATURES],
    /// Standard deviation; `0` marks a constant coordinate, which maps to `0`.
    pub std: [f64; NUM_FEATURES],
}

impl FeatureScaler {
    pub fn fit<'a, I>(vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a JointFeatureVector>,
        I::IntoIter: Clone,
    {
        let iter = vectors.into_iter();
        let n = iter.clone().count();
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "scaler needs at least 2 vectors, got {n}"
            )));
        }
        let mut mean = [0.0; NUM_FEATURES];
        for v in iter.clone() {
            for (m, x) in mean.iter_mut().zip(v.0) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = [0.0; NUM_FEATURES];
        for v in iter {
            for i in 0..NUM_FEATURES {
                let d = v.0[i] - mean[i];
                var[i] += d * d;
            }
        }
        let mut std = [0.0; NUM_FEATURES];
        for i in 0..NUM_FEATURES {
            let s = (var[i] / n as f64).sqrt();
            // Rounding residue on a constant column must not become a huge scale.
            std[i] = if s > 1e-12 * (1.0 + mean[i].abs()) { s } else { 0.0 };
        }
        Ok(FeatureScaler { mean, std })
    }

    pub fn apply(&self, v: &JointFeatureVector) -> JointFeatureVector {
        JointFeatureVector(std::array::from_fn(|i| {
            if self.std[i] > 0.0 {
                (v.0[i] - self.mean[i]) / self.std[i]
            } else {
                0.0
            }
        }))
    }
}

pub fn fit_scaler(vectors: &[JointFeatureVector]) -> Result<FeatureScaler> {
    FeatureScaler::fit(vectors)
}

pub fn apply_scaler(scaler: &FeatureScaler, v: &JointFeatureVector) -> JointFeatureVector {
    scaler.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TermId;

    fn doc(id: usize, label: ClassId, terms: &[(TermId, f64)]) -> SparseDoc {
        SparseDoc::new(id, label, terms.to_vec())
    }

    fn toy() -> (Vec<SparseDoc>, FeatureSpace) {
        let docs = vec![
            doc(0, 1, &[(0, 2.0), (1, 1.0)]),
            doc(1, 1, &[(0, 1.0), (2, 3.0)]),
            doc(2, 2, &[(1, 1.0), (3, 2.0)]),
            doc(3, 3, &[(4, 1.0)]),
        ];
        let space = FeatureSpace::fit(&docs).unwrap();
        (docs, space)
    }

    #[test]
    fn no_shared_terms() {
        let (_, space) = toy();
        let x = doc(9, 0, &[(3, 1.0)]);
        let v = space.phi(&x, 1).unwrap();
        for i in (0..8).chain([9]) {
            assert_eq!(v[i], 0.0, "feature {}", i + 1);
        }
        assert!(v[8] > 0.0);
    }

    #[test]
    fn own_singleton_class_distance_is_zero() {
        let (docs, space) = toy();
        let v = space.phi(&docs[2], 2).unwrap();
        assert_eq!(v[8], 0.0);
        assert_eq!(v[7], 2.0);
    }

    #[test]
    fn unknown_class() {
        let (docs, space) = toy();
        assert!(matches!(space.phi(&docs[0], 4), Err(Error::UnknownClass(4))));
        assert!(matches!(space.phi(&docs[0], 0), Err(Error::UnknownClass(0))));
    }

    #[test]
    fn degenerate_class() {
        let (docs, space) = toy();
        let empty = ClassProfile {
            class_id: 1,
            term_counts: vec![],
            size_terms: 0.0,
            num_docs: 1,
            centroid: SparseVec::default(),
        };
        let profiles = ClassProfiles::from_profiles(vec![empty]).unwrap();
        assert!(matches!(
            phi(&docs[0], 1, &profiles, &space.stats),
            Err(Error::DegenerateClass(1))
        ));
    }

    #[test]
    fn scaler_zero_variance_and_two_points() {
        let a = JointFeatureVector([0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = JointFeatureVector([2.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s = fit_scaler(&[a, b]).unwrap();
        assert_eq!(s.apply(&a)[0], -1.0);
        assert_eq!(s.apply(&b)[0], 1.0);
        assert_eq!(s.apply(&a)[1], 0.0);
        assert_eq!(s.apply(&b)[1], 0.0);
        assert!(fit_scaler(&[a]).is_err());
    }

    #[test]
    fn scaler_centers_fit_set() {
        let vs: Vec<JointFeatureVector> = (0..7)
            .map(|i| {
                let mut v = [0.0; NUM_FEATURES];
                for (j, x) in v.iter_mut().enumerate() {
                    *x = ((i * 7 + j * 3) % 11) as f64 * 0.37 + j as f64;
                }
                JointFeatureVector(v)
            })
            .collect();
        let s = fit_scaler(&vs).unwrap();
        for j in 0..NUM_FEATURES {
            let mean: f64 = vs.iter().map(|v| s.apply(v)[j]).sum::<f64>() / vs.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }
}
