//! Doubly-sampled multi-class to binary reduction for extreme text classification.
//!
//! A K-class problem is rewritten as a binary problem over *dyadic pairs*: each
//! training document is paired with its true class and with adversarial classes,
//! and a single linear scorer over a ten-dimensional joint document/class
//! representation learns to rank the true class above the others.
//!
//! The pipeline is:
//!
//! 1. [`corpus`]: load LibSVM-style multi-class data and compute corpus and
//!    per-class statistics (class mega-documents, tf-idf centroids).
//! 2. [`features`]: the joint representation `phi(x, y)`.
//! 3. [`reduction`]: the full pairwise transformation and its doubly-sampled
//!    variant (per-class Bernoulli retention, then `kappa` adversarial classes
//!    per retained document).
//! 4. [`trainer`]: SGD on the pairwise difference vectors.
//! 5. [`predictor`]: nearest-centroid candidate pre-selection followed by an
//!    argmax of the learned scorer.
//! 6. [`evaluation`], [`depgraph`], [`synth`]: metrics, dependency-graph cover
//!    verification, and synthetic long-tailed corpora.
//!
//! Batch operations run on rayon when the `parallel` feature is enabled (the
//! default); every parallel path produces output identical to its sequential
//! counterpart, selectable through [`Execution`].

pub mod bundle;
pub mod corpus;
pub mod depgraph;
mod error;
pub mod evaluation;
mod exec;
pub mod features;
pub mod predictor;
pub mod reduction;
pub mod synth;
pub mod textfmt;
pub mod trainer;

pub use error::{Error, Result};
pub use exec::Execution;

/// Class identifier, 1-based. `0` marks an unlabeled document.
pub type ClassId = u32;
/// Vocabulary index of a term.
pub type TermId = u32;
