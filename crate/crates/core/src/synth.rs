//! Seeded synthetic long-tailed corpora.
//!
//! Class sizes follow `n_k ~ k^-s`. Class `k` owns `class_signal` exclusive
//! terms (`(k-1)*signal .. k*signal`); the rest of the vocabulary is
//! background noise drawn from a Zipf law. Each token of a document is a
//! uniformly drawn signal term of its class with probability `signal_rate`,
//! a background term otherwise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::SparseDoc;
use crate::{ClassId, Error, Result, TermId};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub num_docs: usize,
    pub vocab_size: usize,
    /// Class-size skew `s >= 0`.
    pub zipf_exponent: f64,
    pub min_terms: usize,
    pub max_terms: usize,
    /// Exclusive terms per class.
    pub class_signal: usize,
    pub signal_rate: f64,
    /// Zipf exponent of the background term distribution.
    pub noise_exponent: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 50,
            num_docs: 5000,
            vocab_size: 20_000,
            zipf_exponent: 1.2,
            min_terms: 20,
            max_terms: 80,
            class_signal: 5,
            signal_rate: 0.2,
            noise_exponent: 1.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.num_docs < self.num_classes {
            return bad(format!(
                "{} documents cannot cover {} classes",
                self.num_docs, self.num_classes
            ));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad(format!("zipf exponent must be >= 0, got {}", self.zipf_exponent));
        }
        if self.min_terms == 0 || self.min_terms > self.max_terms {
            return bad(format!("bad terms-per-doc range {}..={}", self.min_terms, self.max_terms));
        }
        if self.num_classes * self.class_signal >= self.vocab_size {
            return bad(format!(
                "vocabulary of {} leaves no background terms after {} signal terms",
                self.vocab_size,
                self.num_classes * self.class_signal
            ));
        }
        if !(0.0..=1.0).contains(&self.signal_rate) {
            return bad(format!("signal rate must be in [0, 1], got {}", self.signal_rate));
        }
        if !(self.noise_exponent >= 0.0 && self.noise_exponent.is_finite()) {
            return bad(format!("noise exponent must be >= 0, got {}", self.noise_exponent));
        }
        Ok(())
    }
}

/// Class sizes proportional to `k^-s`, each at least 1, summing to `m`.
///
/// Sizes start at `max(1, floor(m w_k))`; the shortfall goes to the largest
/// fractional remainders (lowest class id first on ties) and any excess from
/// the `max(1, .)` floor is taken back from the largest classes.
pub fn class_sizes(num_classes: usize, num_docs: usize, exponent: f64) -> Result<Vec<usize>> {
    if num_classes == 0 || num_docs < num_classes {
        return Err(Error::InvalidConfig(format!(
            "{num_docs} documents cannot cover {num_classes} classes"
        )));
    }
    let weights: Vec<f64> = (1..=num_classes).map(|k| (k as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let ideal: Vec<f64> = weights.iter().map(|w| num_docs as f64 * w / total).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|&x| (x.floor() as usize).max(1)).collect();
    let mut assigned: usize = sizes.iter().sum();
    if assigned < num_docs {
        let mut order: Vec<usize> = (0..num_classes).collect();
        order.sort_by(|&a, &b| {
            let ra = ideal[a] - sizes[a] as f64;
            let rb = ideal[b] - sizes[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().cycle() {
            if assigned == num_docs {
                break;
            }
            sizes[k] += 1;
            assigned += 1;
        }
    }
    while assigned > num_docs {
        let k = (0..num_classes)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .expect("non-empty");
        sizes[k] -= 1;
        assigned -= 1;
    }
    Ok(sizes)
}

pub fn generate(config: &SynthConfig) -> Result<Vec<SparseDoc>> {
    config.validate()?;
    let sizes = class_sizes(config.num_classes, config.num_docs, config.zipf_exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<ClassId> = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k as ClassId + 1, n))
        .collect();
    labels.shuffle(&mut rng);

    let signal_terms = config.num_classes * config.class_signal;
    let background = config.vocab_size - signal_terms;
    let zipf = Zipf::new(background as f64, config.noise_exponent)
        .map_err(|e| Error::InvalidConfig(format!("background distribution: {e}")))?;

    Ok(labels
        .into_iter()
        .enumerate()
        .map(|(id, label)| {
            let len = rng.random_range(config.min_terms..=config.max_terms);
            let mut terms: Vec<(TermId, f64)> = Vec::with_capacity(len);
            for _ in 0..len {
                let term = if config.class_signal > 0 && rng.random::<f64>() < config.signal_rate {
                    let base = (label as usize - 1) * config.class_signal;
                    base + rng.random_range(0..config.class_signal)
                } else {
                    let rank = zipf.sample(&mut rng) as usize;
                    signal_terms + rank.clamp(1, background) - 1
                };
                terms.push((term as TermId, 1.0));
            }
            SparseDoc::new(id, label, terms)
        })
        .collect())
}

/// Splits off `num_test` documents chosen by a seeded shuffle, skipping any
/// document whose removal would leave its class without training data. Both
/// halves keep corpus order and are renumbered from 0.
pub fn holdout_split(docs: &[SparseDoc], num_test: usize, seed: u64) -> Result<(Vec<SparseDoc>, Vec<SparseDoc>)> {
    let k = docs.iter().map(|d| d.label as usize).max().unwrap_or(0);
    let mut remaining = vec![0usize; k + 1];
    for d in docs {
        remaining[d.label as usize] += 1;
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; docs.len()];
    let mut taken = 0;
    for i in order {
        if taken == num_test {
            break;
        }
        let label = docs[i].label as usize;
        if remaining[label] > 1 {
            remaining[label] -= 1;
            is_test[i] = true;
            taken += 1;
        }
    }
    if taken < num_test {
        return Err(Error::InvalidConfig(format!(
            "cannot hold out {num_test} documents while keeping every class in training"
        )));
    }
    let renumber = |want: bool| -> Vec<SparseDoc> {
        docs.iter()
            .zip(&is_test)
            .filter(|(_, &t)| t == want)
            .enumerate()
            .map(|(id, (d, _))| SparseDoc { id, ..d.clone() })
            .collect()
    };
    Ok((renumber(false), renumber(true)))
}
