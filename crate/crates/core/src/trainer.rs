//! Linear scorer `f(v) = w . scale(v)` learned by SGD on dyadic pairs.
//!
//! A pair is trained through its difference vector `d = scale(first) -
//! scale(second)` with label `y`; the objective is
//!
//! ```text
//! J(w) = (1/n) sum_j loss(y_j * w . d_j) + (lambda / 2) |w|^2
//! ```
//!
//! with hinge `max(0, 1 - u)` or logistic `ln(1 + e^-u)` loss. The step size
//! at update `t` is `lr0 / (1 + lr0 * lambda * t)`. There is no bias: it would
//! cancel in `f(first) - f(second)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::{FeatureScaler, JointFeatureVector, NUM_FEATURES};
use crate::reduction::DyadicPair;
use crate::{Error, Result};

pub type Weights = [f64; NUM_FEATURES];

const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Hinge,
    Logistic,
}

impl Loss {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - u).max(0.0),
            // ln(1 + e^-u) without overflow for large |u|
            Loss::Logistic => {
                if u > 0.0 {
                    (-u).exp().ln_1p()
                } else {
                    -u + u.exp().ln_1p()
                }
            }
        }
    }

    /// d loss / du (the hinge subgradient is 0 at the kink).
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if u < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => {
                if u > 0.0 {
                    let e = (-u).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + u.exp())
                }
            }
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Hinge => "hinge",
            Loss::Logistic => "logistic",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(Loss::Hinge),
            "logistic" => Ok(Loss::Logistic),
            other => Err(Error::InvalidConfig(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: Loss,
    pub lambda: f64,
    pub lr0: f64,
    pub epochs: usize,
    pub seed: u64,
    pub scale: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: Loss::Hinge,
            lambda: 1e-4,
            lr0: 0.1,
            epochs: 10,
            seed: 0,
            scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Weights,
    /// Present iff the model was trained with scaling.
    pub scaler: Option<FeatureScaler>,
    pub loss: Loss,
    pub lambda: f64,
    pub lr0: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl LinearModel {
    /// An untrained model with the given weights and no scaler.
    pub fn from_weights(weights: Weights) -> Self {
        let cfg = TrainConfig::default();
        LinearModel {
            weights,
            scaler: None,
            loss: cfg.loss,
            lambda: cfg.lambda,
            lr0: cfg.lr0,
            epochs: cfg.epochs,
            seed: cfg.seed,
        }
    }

    pub fn transform(&self, v: &JointFeatureVector) -> JointFeatureVector {
        match &self.scaler {
            Some(s) => s.apply(v),
            None => *v,
        }
    }

    /// `f(v) = w . scale(v)`.
    pub fn score(&self, v: &JointFeatureVector) -> f64 {
        dot(&self.weights, &self.transform(v).0)
    }

    /// `h(a, b) = f(a) - f(b)`.
    pub fn pair_score(&self, a: &JointFeatureVector, b: &JointFeatureVector) -> f64 {
        self.score(a) - self.score(b)
    }

    pub fn norm(&self) -> f64 {
        dot(&self.weights, &self.weights).sqrt()
    }
}

pub fn score(model: &LinearModel, v: &JointFeatureVector) -> f64 {
    model.score(v)
}

fn dot(a: &Weights, b: &Weights) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pair difference vectors and `+-1` labels, the form the optimizer consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    pub diffs: Vec<Weights>,
    pub labels: Vec<f64>,
}

impl DifferenceSet {
    pub fn from_pairs(pairs: &[DyadicPair], scaler: Option<&FeatureScaler>) -> Self {
        let apply = |v: &JointFeatureVector| match scaler {
            Some(s) => s.apply(v),
            None => *v,
        };
        let diffs = pairs
            .iter()
            .map(|p| {
                let (a, b) = (apply(&p.first), apply(&p.second));
                std::array::from_fn(|i| a.0[i] - b.0[i])
            })
            .collect();
        let labels = pairs.iter().map(|p| p.label as f64).collect();
        DifferenceSet { diffs, labels }
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }
}

/// The full regularized objective `J(w)`.
pub fn objective(w: &Weights, data: &DifferenceSet, lambda: f64, loss: Loss) -> f64 {
    let n = data.len() as f64;
    let data_term: f64 = data
        .diffs
        .iter()
        .zip(&data.labels)
        .map(|(d, y)| loss.value(y * dot(w, d)))
        .sum();
    data_term / n + 0.5 * lambda * dot(w, w)
}

/// Gradient of [`objective`] (a subgradient for the hinge loss).
pub fn objective_gradient(w: &Weights, data: &DifferenceSet, lambda: f64, loss: Loss) -> Weights {
    let n = data.len() as f64;
    let mut g = [0.0; NUM_FEATURES];
    for (d, y) in data.diffs.iter().zip(&data.labels) {
        let c = loss.derivative(y * dot(w, d)) * y;
        for i in 0..NUM_FEATURES {
            g[i] += c * d[i];
        }
    }
    for i in 0..NUM_FEATURES {
        g[i] = g[i] / n + lambda * w[i];
    }
    g
}

/// Summary of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_objective: f64,
    /// Objective after each epoch.
    pub epoch_objectives: Vec<f64>,
}

pub fn train(pairs: &[DyadicPair], config: &TrainConfig) -> Result<LinearModel> {
    train_with_report(pairs, config).map(|(m, _)| m)
}

pub fn train_with_report(pairs: &[DyadicPair], config: &TrainConfig) -> Result<(LinearModel, TrainReport)> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no training pairs".to_string()));
    }
    if !(config.lr0 > 0.0 && config.lr0.is_finite()) {
        return Err(Error::InvalidConfig(format!("lr0 must be positive, got {}", config.lr0)));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", config.lambda)));
    }
    if config.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be >= 1".to_string()));
    }
    if let Some(index) = pairs
        .iter()
        .position(|p| !p.first.is_finite() || !p.second.is_finite())
    {
        return Err(Error::NonFinite { index });
    }
    let scaler = if config.scale {
        Some(FeatureScaler::fit(
            pairs.iter().flat_map(|p| [&p.first, &p.second]).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    let data = DifferenceSet::from_pairs(pairs, scaler.as_ref());
    let (weights, report) = sgd(&data, config)?;
    let model = LinearModel {
        weights,
        scaler,
        loss: config.loss,
        lambda: config.lambda,
        lr0: config.lr0,
        epochs: config.epochs,
        seed: config.seed,
    };
    Ok((model, report))
}

/// Plain SGD over a difference set, starting from `w = 0`.
pub fn sgd(data: &DifferenceSet, config: &TrainConfig) -> Result<(Weights, TrainReport)> {
    let mut w = [0.0; NUM_FEATURES];
    let initial_objective = objective(&w, data, config.lambda, config.loss);
    let mut epoch_objectives = Vec::with_capacity(config.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &j in &order {
            let eta = config.lr0 / (1.0 + config.lr0 * config.lambda * t as f64);
            let d = &data.diffs[j];
            let y = data.labels[j];
            let c = config.loss.derivative(y * dot(&w, d)) * y;
            for i in 0..NUM_FEATURES {
                w[i] -= eta * (config.lambda * w[i] + c * d[i]);
            }
            t += 1;
        }
        let obj = objective(&w, data, config.lambda, config.loss);
        if !obj.is_finite() || obj > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { objective: obj });
        }
        epoch_objectives.push(obj);
    }
    Ok((
        w,
        TrainReport {
            initial_objective,
            epoch_objectives,
        },
    ))
}
