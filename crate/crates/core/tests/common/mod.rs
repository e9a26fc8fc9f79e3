#![allow(dead_code)]

use dsmc::corpus::SparseDoc;
use dsmc::{ClassId, TermId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The four documents of the worked toy example: one per class, labels 1..4.
pub fn toy_docs() -> Vec<SparseDoc> {
    vec![
        SparseDoc::new(0, 1, vec![(0, 2.0), (1, 1.0)]),
        SparseDoc::new(1, 2, vec![(1, 3.0), (2, 1.0)]),
        SparseDoc::new(2, 3, vec![(2, 2.0), (3, 2.0)]),
        SparseDoc::new(3, 4, vec![(0, 1.0), (3, 1.0), (4, 4.0)]),
    ]
}

/// `m` documents over `vocab` terms, every class in `1..=k` non-empty.
/// Counts are small integers so sums are exact.
pub fn random_corpus(seed: u64, m: usize, k: usize, vocab: usize) -> Vec<SparseDoc> {
    assert!(m >= k && k >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<ClassId> = (1..=k as ClassId).collect();
    labels.extend((k..m).map(|_| rng.random_range(1..=k as ClassId)));
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(id, label)| {
            let len = rng.random_range(1..=vocab.min(8));
            let terms: Vec<(TermId, f64)> = (0..len)
                .map(|_| {
                    (
                        rng.random_range(0..vocab as TermId),
                        rng.random_range(1..=4) as f64,
                    )
                })
                .collect();
            SparseDoc::new(id, label, terms)
        })
        .collect()
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> [f64; 10] {
    std::array::from_fn(|_| rng.random_range(-1.0..1.0))
}
