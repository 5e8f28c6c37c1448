//! Averaged perceptron tagger with greedy left-to-right decoding.
//!
//! Each position sees its template features plus two dynamic ones built from
//! the labels already predicted for the previous one and two positions.
//! Averaging uses the usual lazy bookkeeping: alongside the weights `w` we
//! keep `u`, the sum of `step * update`, so the average is `w - u / steps`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, LabelSet};
use crate::error::{Error, Result};
use crate::features::{sequence_features, FeatureAlphabet, FeatureSet, FeatureVector};
use crate::summary::TrainSummary;

pub const DEFAULT_EPOCHS: usize = 10;
const START: &str = "<S>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronModel {
    pub labels: LabelSet,
    pub feature_set: FeatureSet,
    pub features: FeatureAlphabet,
    /// Final weights at `feature * labels + label`.
    pub weights: Vec<f64>,
    pub averaged_weights: Vec<f64>,
    /// Number of positions seen during training (the averaging denominator).
    pub steps: u64,
}

fn prev1(label: &str) -> String {
    format!("prev1={label}")
}

fn prev2(first: &str, second: &str) -> String {
    format!("prev2={first}|{second}")
}

impl PerceptronModel {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn label_name(&self, index: Option<usize>) -> &str {
        index.map_or(START, |i| self.labels.name(i))
    }

    fn dynamic_ids(&self, before: Option<usize>, last: Option<usize>) -> [u32; 2] {
        [
            self.features.get(&prev1(self.label_name(last))),
            self.features
                .get(&prev2(self.label_name(before), self.label_name(last))),
        ]
    }

    fn argmax(&self, weights: &[f64], fv: &FeatureVector, dynamic: [u32; 2]) -> usize {
        let l = self.num_labels();
        let mut scores = vec![0.0; l];
        for &f in fv.indices.iter().chain(dynamic.iter()) {
            let row = &weights[f as usize * l..(f as usize + 1) * l];
            for (s, w) in scores.iter_mut().zip(row) {
                *s += w;
            }
        }
        let mut best = 0;
        for k in 1..l {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        best
    }

    fn greedy(&self, weights: &[f64], vectors: &[FeatureVector]) -> Vec<usize> {
        let mut path: Vec<usize> = Vec::with_capacity(vectors.len());
        for (i, fv) in vectors.iter().enumerate() {
            let last = i.checked_sub(1).map(|j| path[j]);
            let before = i.checked_sub(2).map(|j| path[j]);
            path.push(self.argmax(weights, fv, self.dynamic_ids(before, last)));
        }
        path
    }

    pub fn sequence_vectors(&self, seq: &EncodedSequence) -> Vec<FeatureVector> {
        sequence_features(seq, self.feature_set)
            .iter()
            .map(|names| self.features.vector(names))
            .collect()
    }
}

pub fn train_perceptron(
    data: &[EncodedSequence],
    feature_set: FeatureSet,
    epochs: usize,
    seed: u64,
) -> Result<(PerceptronModel, TrainSummary)> {
    if data.is_empty() {
        return Err(Error::Precondition("no training data".into()));
    }
    if epochs == 0 {
        return Err(Error::Precondition("perceptron needs at least one epoch".into()));
    }
    let labels = LabelSet::from_sequences(data);
    let mut alphabet = FeatureAlphabet::new();
    let vectors: Vec<Vec<FeatureVector>> = data
        .iter()
        .map(|seq| {
            sequence_features(seq, feature_set)
                .iter()
                .map(|names| alphabet.intern_vector(names))
                .collect()
        })
        .collect();
    let history: Vec<&str> = std::iter::once(START)
        .chain(labels.names().iter().map(String::as_str))
        .collect();
    for first in &history {
        alphabet.intern(&prev1(first));
        for second in &history {
            alphabet.intern(&prev2(first, second));
        }
    }
    alphabet.freeze();
    let gold: Vec<Vec<usize>> = data.iter().map(|s| labels.indices(s)).collect::<Result<_>>()?;

    let l = labels.len();
    let size = alphabet.len() * l;
    let mut model = PerceptronModel {
        labels,
        feature_set,
        features: alphabet,
        weights: vec![0.0; size],
        averaged_weights: vec![0.0; size],
        steps: 0,
    };
    let mut sums = vec![0.0; size];
    let mut step: u64 = 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut errors = 0;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        errors = 0;
        for &k in &order {
            let mut path: Vec<usize> = Vec::with_capacity(vectors[k].len());
            for (i, fv) in vectors[k].iter().enumerate() {
                let last = i.checked_sub(1).map(|j| path[j]);
                let before = i.checked_sub(2).map(|j| path[j]);
                let dynamic = model.dynamic_ids(before, last);
                let guess = model.argmax(&model.weights, fv, dynamic);
                let truth = gold[k][i];
                if guess != truth {
                    errors += 1;
                    for &f in fv.indices.iter().chain(dynamic.iter()) {
                        let base = f as usize * l;
                        model.weights[base + truth] += 1.0;
                        model.weights[base + guess] -= 1.0;
                        sums[base + truth] += step as f64;
                        sums[base + guess] -= step as f64;
                    }
                }
                path.push(guess);
                step += 1;
            }
        }
    }

    model.steps = step;
    model.averaged_weights = model
        .weights
        .iter()
        .zip(&sums)
        .map(|(w, u)| w - u / step as f64)
        .collect();
    Ok((
        model,
        TrainSummary {
            family: "perceptron".into(),
            epochs,
            objective: None,
            last_epoch_errors: Some(errors),
        },
    ))
}

pub fn predict_perceptron(model: &PerceptronModel, seq: &EncodedSequence) -> Vec<String> {
    let path = model.greedy(&model.averaged_weights, &model.sequence_vectors(seq));
    model.labels.decode(&path)
}

/// Greedy decoding with the final (non-averaged) weights.
pub fn predict_perceptron_final(model: &PerceptronModel, seq: &EncodedSequence) -> Vec<String> {
    let path = model.greedy(&model.weights, &model.sequence_vectors(seq));
    model.labels.decode(&path)
}
