use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{neural_predict, sequence_loss, BilstmCrfModel, Dims, Gradients, TOKEN_EMB, UNK_INDEX};
use crate::encoding::{EncodedSequence, LabelSet};
use crate::error::{Error, Result};
use crate::summary::TrainSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub dims: Dims,
    pub dropout: f64,
    pub learning_rate: f64,
    pub clip: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Probability of replacing a training-singleton token by UNK, so the
    /// unknown-token embedding gets trained.
    pub singleton_unk: f64,
    pub pretrained: Option<PathBuf>,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        NeuralConfig {
            dims: Dims::default(),
            dropout: 0.5,
            learning_rate: 0.01,
            clip: 5.0,
            epochs: 30,
            batch_size: 1,
            seed: 0,
            singleton_unk: 0.5,
            pretrained: None,
        }
    }
}

/// Reads `token v1 ... vd` lines. Every vector must have `dim` components.
pub fn load_pretrained(path: &Path, dim: usize) -> Result<HashMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else {
            continue;
        };
        let values = parts
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                line: n + 1,
                message: format!("{}: {e}", path.display()),
            })?;
        if values.len() != dim {
            return Err(Error::Config(format!(
                "{}:{}: embedding has {} components, model expects {dim}",
                path.display(),
                n + 1,
                values.len()
            )));
        }
        out.insert(token.to_string(), values);
    }
    Ok(out)
}

fn dev_accuracy(model: &BilstmCrfModel, dev: &[EncodedSequence]) -> f64 {
    let (mut right, mut total) = (0usize, 0usize);
    for seq in dev {
        let pred = neural_predict(model, seq);
        right += pred.iter().zip(&seq.labels).filter(|(a, b)| a == b).count();
        total += seq.len();
    }
    if total == 0 {
        0.0
    } else {
        right as f64 / total as f64
    }
}

/// SGD with global-norm clipping. When `dev` is non-empty the parameters of
/// the epoch with the best dev label accuracy are returned.
pub fn train_neural(
    data: &[EncodedSequence],
    dev: &[EncodedSequence],
    config: &NeuralConfig,
) -> Result<(BilstmCrfModel, TrainSummary)> {
    if data.is_empty() {
        return Err(Error::Precondition("no training data".into()));
    }
    if !(0.0..1.0).contains(&config.dropout) {
        return Err(Error::Config(format!(
            "dropout must be in [0, 1), got {}",
            config.dropout
        )));
    }
    let labels = LabelSet::from_sequences(data);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in data {
        for obs in &seq.observations {
            *counts.entry(obs.as_str()).or_default() += 1;
        }
    }
    let mut model = BilstmCrfModel::initialize(
        config.dims,
        labels,
        data.iter()
            .flat_map(|s| s.observations.iter().map(String::as_str)),
        config.dropout,
        config.seed,
    );
    if let Some(path) = &config.pretrained {
        let vectors = load_pretrained(path, config.dims.token_embedding)?;
        let cols = config.dims.token_embedding;
        for (token, &row) in &model.tokens {
            if let Some(v) = vectors.get(token) {
                model.params[TOKEN_EMB].values[row * cols..(row + 1) * cols].copy_from_slice(v);
            }
        }
    }

    let ids: Vec<Vec<usize>> = data
        .iter()
        .map(|s| s.observations.iter().map(|o| model.token_index(o)).collect())
        .collect();
    let singleton: Vec<Vec<bool>> = data
        .iter()
        .map(|s| s.observations.iter().map(|o| counts[o.as_str()] == 1).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros_like(&model.params);
    let mut best: Option<(f64, BilstmCrfModel)> = None;
    let mut last_loss = f64::NAN;
    let batch_size = config.batch_size.max(1);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            grads.clear();
            for &k in chunk {
                let mut token_ids = ids[k].clone();
                for (id, &single) in token_ids.iter_mut().zip(&singleton[k]) {
                    if single && config.singleton_unk > 0.0 && rng.gen_bool(config.singleton_unk) {
                        *id = UNK_INDEX;
                    }
                }
                epoch_loss += sequence_loss(&model, &data[k], &token_ids, Some(&mut rng), &mut grads)
                    .map_err(|e| Error::Divergence(e.to_string()))?;
            }
            grads.clip(config.clip);
            for (p, g) in model.params.iter_mut().zip(&grads.tensors) {
                for (w, d) in p.values.iter_mut().zip(g) {
                    *w -= config.learning_rate * d;
                }
            }
        }
        if !epoch_loss.is_finite() || !model.is_finite() {
            return Err(Error::Divergence(format!("training loss {epoch_loss}")));
        }
        last_loss = epoch_loss / data.len() as f64;
        if !dev.is_empty() {
            let acc = dev_accuracy(&model, dev);
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
        }
    }
    let model = best.map_or(model, |(_, m)| m);
    Ok((
        model,
        TrainSummary {
            family: "bilstm-crf".into(),
            epochs: config.epochs,
            objective: Some(last_loss),
            last_epoch_errors: None,
        },
    ))
}
