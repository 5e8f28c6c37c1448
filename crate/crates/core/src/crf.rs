//! Linear-chain CRF over binary template features.
//!
//! Unary factors are `weights[feature * labels + label]`; transition factors
//! include virtual start/end states (see [`crate::lattice`]). Training
//! maximizes the L2-penalized conditional log-likelihood with AdaGrad-scaled
//! minibatch gradient ascent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, LabelSet};
use crate::error::{Error, Result};
use crate::features::{sequence_features, FeatureAlphabet, FeatureSet, FeatureVector};
use crate::lattice::Lattice;
use crate::summary::TrainSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrfConfig {
    pub sigma2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            sigma2: 1.0,
            epochs: 50,
            learning_rate: 0.1,
            batch_size: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    pub labels: LabelSet,
    pub feature_set: FeatureSet,
    pub features: FeatureAlphabet,
    pub weights: Vec<f64>,
    pub transitions: Vec<f64>,
    pub sigma2: f64,
}

/// A sequence with resolved features and gold label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfInstance {
    pub origin: String,
    pub features: Vec<FeatureVector>,
    pub gold: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradient {
    pub weights: Vec<f64>,
    pub transitions: Vec<f64>,
}

impl CrfGradient {
    fn zeros(model: &CrfModel) -> Self {
        CrfGradient {
            weights: vec![0.0; model.weights.len()],
            transitions: vec![0.0; model.transitions.len()],
        }
    }

    fn clear(&mut self) {
        self.weights.fill(0.0);
        self.transitions.fill(0.0);
    }
}

impl CrfModel {
    /// A zero-weight model over a frozen feature alphabet.
    pub fn new(
        labels: LabelSet,
        feature_set: FeatureSet,
        mut features: FeatureAlphabet,
        sigma2: f64,
    ) -> Self {
        features.freeze();
        let l = labels.len();
        CrfModel {
            weights: vec![0.0; features.len() * l],
            transitions: vec![0.0; (l + 1) * (l + 1)],
            labels,
            feature_set,
            features,
            sigma2,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn unary(&self, features: &[FeatureVector]) -> Vec<f64> {
        let l = self.num_labels();
        let mut out = vec![0.0; features.len() * l];
        for (i, fv) in features.iter().enumerate() {
            let row = &mut out[i * l..(i + 1) * l];
            for &f in &fv.indices {
                let w = &self.weights[f as usize * l..(f as usize + 1) * l];
                for (r, w) in row.iter_mut().zip(w) {
                    *r += w;
                }
            }
        }
        out
    }

    pub fn sequence_vectors(&self, seq: &EncodedSequence) -> Vec<FeatureVector> {
        sequence_features(seq, self.feature_set)
            .iter()
            .map(|names| self.features.vector(names))
            .collect()
    }

    pub fn instance(&self, seq: &EncodedSequence) -> Result<CrfInstance> {
        Ok(CrfInstance {
            origin: seq.origin.clone(),
            features: self.sequence_vectors(seq),
            gold: self.labels.indices(seq)?,
        })
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.transitions)
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }

    fn penalty(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.transitions)
            .map(|w| w * w)
            .sum::<f64>()
            / (2.0 * self.sigma2)
    }
}

/// Adds the unpenalized log-likelihood gradient of `batch` into `grad` and
/// returns the log-likelihood.
fn accumulate(model: &CrfModel, batch: &[CrfInstance], grad: &mut CrfGradient) -> Result<f64> {
    let l = model.num_labels();
    let mut total = 0.0;
    for inst in batch {
        if inst.features.is_empty() {
            continue;
        }
        let unary = model.unary(&inst.features);
        let lattice = Lattice::new(&unary, &model.transitions, l);
        let marginals = lattice.marginals();
        let ll = lattice.path_score(&inst.gold) - marginals.log_z;
        if !ll.is_finite() {
            return Err(Error::Numerical {
                context: inst.origin.clone(),
                message: format!("log-likelihood {ll}"),
            });
        }
        total += ll;
        for (i, fv) in inst.features.iter().enumerate() {
            let y = inst.gold[i];
            for &f in &fv.indices {
                let base = f as usize * l;
                grad.weights[base + y] += 1.0;
                for k in 0..l {
                    grad.weights[base + k] -= marginals.nodes[i * l + k];
                }
            }
        }
        let mut prev = l;
        for &y in &inst.gold {
            grad.transitions[prev * (l + 1) + y] += 1.0;
            prev = y;
        }
        grad.transitions[prev * (l + 1) + l] += 1.0;
        for (g, e) in grad.transitions.iter_mut().zip(&marginals.transitions) {
            *g -= e;
        }
    }
    Ok(total)
}

fn apply_penalty(model: &CrfModel, grad: &mut CrfGradient, scale: f64) {
    let factor = scale / model.sigma2;
    for (g, w) in grad.weights.iter_mut().zip(&model.weights) {
        *g -= factor * w;
    }
    for (g, w) in grad.transitions.iter_mut().zip(&model.transitions) {
        *g -= factor * w;
    }
}

/// Penalized conditional log-likelihood of `batch` and its exact gradient.
pub fn crf_log_likelihood_and_gradient(
    model: &CrfModel,
    batch: &[CrfInstance],
) -> Result<(f64, CrfGradient)> {
    let mut grad = CrfGradient::zeros(model);
    let ll = accumulate(model, batch, &mut grad)?;
    apply_penalty(model, &mut grad, 1.0);
    Ok((ll - model.penalty(), grad))
}

pub fn train_crf(
    data: &[EncodedSequence],
    feature_set: FeatureSet,
    config: &CrfConfig,
) -> Result<(CrfModel, TrainSummary)> {
    if data.is_empty() {
        return Err(Error::Precondition("no training data".into()));
    }
    if config.sigma2.is_nan() || config.sigma2 <= 0.0 {
        return Err(Error::Config(format!(
            "sigma2 must be positive, got {}",
            config.sigma2
        )));
    }
    let labels = LabelSet::from_sequences(data);
    let mut alphabet = FeatureAlphabet::new();
    let feature_names: Vec<Vec<Vec<String>>> =
        data.iter().map(|s| sequence_features(s, feature_set)).collect();
    let vectors: Vec<Vec<FeatureVector>> = feature_names
        .iter()
        .map(|seq| seq.iter().map(|names| alphabet.intern_vector(names)).collect())
        .collect();
    let mut model = CrfModel::new(labels, feature_set, alphabet, config.sigma2);
    let instances: Vec<CrfInstance> = data
        .iter()
        .zip(vectors)
        .map(|(seq, features)| {
            Ok(CrfInstance {
                origin: seq.origin.clone(),
                features,
                gold: model.labels.indices(seq)?,
            })
        })
        .collect::<Result<_>>()?;

    let n = instances.len();
    let batch_size = config.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = CrfGradient::zeros(&model);
    let mut hist_w = vec![0.0; model.weights.len()];
    let mut hist_t = vec![0.0; model.transitions.len()];
    const EPS: f64 = 1e-8;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<CrfInstance> = chunk.iter().map(|&i| instances[i].clone()).collect();
            grad.clear();
            accumulate(&model, &batch, &mut grad)?;
            apply_penalty(&model, &mut grad, chunk.len() as f64 / n as f64);
            for ((w, g), h) in model.weights.iter_mut().zip(&grad.weights).zip(&mut hist_w) {
                if *g != 0.0 {
                    *h += g * g;
                    *w += config.learning_rate * g / (h.sqrt() + EPS);
                }
            }
            for ((w, g), h) in model
                .transitions
                .iter_mut()
                .zip(&grad.transitions)
                .zip(&mut hist_t)
            {
                if *g != 0.0 {
                    *h += g * g;
                    *w += config.learning_rate * g / (h.sqrt() + EPS);
                }
            }
        }
    }
    let (objective, _) = crf_log_likelihood_and_gradient(&model, &instances)?;
    if !objective.is_finite() {
        return Err(Error::Divergence(format!("CRF objective {objective}")));
    }
    Ok((
        model,
        TrainSummary {
            family: "crf".into(),
            epochs: config.epochs,
            objective: Some(objective),
            last_epoch_errors: None,
        },
    ))
}

/// Best label sequence; ties go to the lexicographically smaller sequence.
pub fn crf_viterbi(model: &CrfModel, seq: &EncodedSequence) -> Vec<String> {
    if seq.is_empty() {
        return Vec::new();
    }
    let unary = model.unary(&model.sequence_vectors(seq));
    let (path, _) = Lattice::new(&unary, &model.transitions, model.num_labels()).viterbi();
    model.labels.decode(&path)
}
