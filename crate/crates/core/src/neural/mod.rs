//! Character-aware BiLSTM-CRF tagger.
//!
//! Each token is represented by the final states of a forward and a backward
//! character LSTM concatenated with a learned token embedding. A BiLSTM runs
//! over those representations and a linear layer produces per-position label
//! scores, which a linear-chain CRF layer decodes.

pub mod tape;
mod train;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, LabelSet};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
pub use tape::{Gradients, NodeId, Tape, Tensor};
pub use train::{load_pretrained, train_neural, NeuralConfig};

/// Row 0 of both embedding tables is reserved for unknown symbols.
pub const UNK_INDEX: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub char_embedding: usize,
    pub char_hidden: usize,
    pub token_embedding: usize,
    pub word_hidden: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            char_embedding: 25,
            char_hidden: 25,
            token_embedding: 50,
            word_hidden: 100,
        }
    }
}

impl Dims {
    /// Width of a token representation.
    pub fn token_repr(&self) -> usize {
        2 * self.char_hidden + self.token_embedding
    }
}

// parameter slots
const CHAR_EMB: usize = 0;
const CHAR_FW: usize = 1;
const CHAR_BW: usize = 4;
const TOKEN_EMB: usize = 7;
const WORD_FW: usize = 8;
const WORD_BW: usize = 11;
const PROJ_W: usize = 14;
const PROJ_B: usize = 15;
const TRANSITIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilstmCrfModel {
    pub dims: Dims,
    pub dropout: f64,
    pub labels: LabelSet,
    pub chars: BTreeMap<String, usize>,
    pub tokens: BTreeMap<String, usize>,
    pub params: Vec<Tensor>,
}

fn lstm_tensors(prefix: &str, input: usize, hidden: usize) -> [Tensor; 3] {
    [
        Tensor::zeros(&format!("{prefix}.wx"), 4 * hidden, input),
        Tensor::zeros(&format!("{prefix}.wh"), 4 * hidden, hidden),
        Tensor::zeros(&format!("{prefix}.b"), 4 * hidden, 1),
    ]
}

impl BilstmCrfModel {
    /// A randomly initialized model over the given vocabularies.
    pub fn initialize<'a>(
        dims: Dims,
        labels: LabelSet,
        tokens: impl IntoIterator<Item = &'a str>,
        dropout: f64,
        seed: u64,
    ) -> Self {
        let mut token_map = BTreeMap::new();
        let mut char_map = BTreeMap::new();
        for t in tokens {
            let next = token_map.len() + 1;
            token_map.entry(t.to_string()).or_insert(next);
            for c in t.chars() {
                let next = char_map.len() + 1;
                char_map.entry(c.to_string()).or_insert(next);
            }
        }
        let l = labels.len();
        let mut params = Vec::with_capacity(17);
        params.push(Tensor::zeros("char_emb", char_map.len() + 1, dims.char_embedding));
        params.extend(lstm_tensors("char_fw", dims.char_embedding, dims.char_hidden));
        params.extend(lstm_tensors("char_bw", dims.char_embedding, dims.char_hidden));
        params.push(Tensor::zeros(
            "token_emb",
            token_map.len() + 1,
            dims.token_embedding,
        ));
        params.extend(lstm_tensors("word_fw", dims.token_repr(), dims.word_hidden));
        params.extend(lstm_tensors("word_bw", dims.token_repr(), dims.word_hidden));
        params.push(Tensor::zeros("proj.w", l, 2 * dims.word_hidden));
        params.push(Tensor::zeros("proj.b", l, 1));
        params.push(Tensor::zeros("transitions", l + 1, l + 1));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, p) in params.iter_mut().enumerate() {
            let bound = match k {
                CHAR_EMB | TOKEN_EMB => (3.0 / p.cols as f64).sqrt(),
                PROJ_B | TRANSITIONS => 0.0,
                _ if p.name.ends_with(".b") => 0.0,
                _ => (6.0 / (p.rows + p.cols) as f64).sqrt(),
            };
            if bound > 0.0 {
                for v in &mut p.values {
                    *v = rng.gen_range(-bound..bound);
                }
            }
            if p.name.ends_with(".b") && k != PROJ_B {
                // forget-gate bias starts at one
                let hidden = p.rows / 4;
                p.values[hidden..2 * hidden].fill(1.0);
            }
        }
        BilstmCrfModel {
            dims,
            dropout,
            labels,
            chars: char_map,
            tokens: token_map,
            params,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// CRF transition scores, `(labels + 1)²` with start/end in the last slot.
    pub fn transitions(&self) -> &[f64] {
        &self.params[TRANSITIONS].values
    }

    pub fn token_index(&self, token: &str) -> usize {
        self.tokens.get(token).copied().unwrap_or(UNK_INDEX)
    }

    fn char_index(&self, c: char) -> usize {
        let mut buf = [0u8; 4];
        self.chars
            .get(&*c.encode_utf8(&mut buf))
            .copied()
            .unwrap_or(UNK_INDEX)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(Tensor::is_finite)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    /// Mutable view of the parameter tensors, in a fixed order.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Makes the backward character LSTM share the forward one's weights.
    pub fn tie_char_directions(&mut self) {
        for k in 0..3 {
            self.params[CHAR_BW + k].values = self.params[CHAR_FW + k].values.clone();
        }
    }
}

/// Runs an LSTM over `inputs` and returns the hidden state after each step.
fn lstm(tape: &mut Tape, base: usize, hidden: usize, inputs: &[NodeId]) -> Vec<NodeId> {
    let mut h = tape.input(vec![0.0; hidden]);
    let mut c = tape.input(vec![0.0; hidden]);
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let zx = tape.linear(base, x);
        let zh = tape.linear(base + 1, h);
        let b = tape.param(base + 2);
        let z = tape.add(zx, zh);
        let z = tape.add(z, b);
        let i = tape.slice(z, 0, hidden);
        let f = tape.slice(z, hidden, hidden);
        let o = tape.slice(z, 2 * hidden, hidden);
        let g = tape.slice(z, 3 * hidden, hidden);
        let i = tape.sigmoid(i);
        let f = tape.sigmoid(f);
        let o = tape.sigmoid(o);
        let g = tape.tanh(g);
        let keep = tape.mul(f, c);
        let write = tape.mul(i, g);
        c = tape.add(keep, write);
        let squashed = tape.tanh(c);
        h = tape.mul(o, squashed);
        out.push(h);
    }
    out
}

/// Token representation `[char forward; char backward; token embedding]`.
fn token_node(tape: &mut Tape, model: &BilstmCrfModel, token: &str, token_id: usize) -> NodeId {
    let chars: Vec<NodeId> = token
        .chars()
        .map(|c| tape.row(CHAR_EMB, model.char_index(c)))
        .collect();
    let fw = *lstm(tape, CHAR_FW, model.dims.char_hidden, &chars)
        .last()
        .expect("non-empty token");
    let reversed: Vec<NodeId> = chars.iter().rev().copied().collect();
    let bw = *lstm(tape, CHAR_BW, model.dims.char_hidden, &reversed)
        .last()
        .expect("non-empty token");
    let emb = tape.row(TOKEN_EMB, token_id);
    tape.concat(&[fw, bw, emb])
}

/// Records the scoring network for one sequence and returns the per-position
/// score nodes. `dropout_rng` switches on training-mode dropout.
pub(crate) fn score_nodes(
    tape: &mut Tape,
    model: &BilstmCrfModel,
    observations: &[String],
    token_ids: &[usize],
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Vec<NodeId> {
    let keep = 1.0 - model.dropout;
    let reprs: Vec<NodeId> = observations
        .iter()
        .zip(token_ids)
        .map(|(obs, &id)| {
            let node = token_node(tape, model, obs, id);
            match dropout_rng.as_deref_mut() {
                Some(rng) if model.dropout > 0.0 => {
                    let mask = (0..model.dims.token_repr())
                        .map(|_| if rng.gen_bool(keep) { 1.0 / keep } else { 0.0 })
                        .collect();
                    tape.mask(node, mask)
                }
                _ => node,
            }
        })
        .collect();
    let hidden = model.dims.word_hidden;
    let forward = lstm(tape, WORD_FW, hidden, &reprs);
    let reversed: Vec<NodeId> = reprs.iter().rev().copied().collect();
    let mut backward = lstm(tape, WORD_BW, hidden, &reversed);
    backward.reverse();
    forward
        .iter()
        .zip(&backward)
        .map(|(&f, &b)| {
            let both = tape.concat(&[f, b]);
            let proj = tape.linear(PROJ_W, both);
            let bias = tape.param(PROJ_B);
            tape.add(proj, bias)
        })
        .collect()
}

fn check_tokens(observations: &[String]) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::Precondition("empty observation sequence".into()));
    }
    if observations.iter().any(|o| o.is_empty()) {
        return Err(Error::Precondition("empty token".into()));
    }
    Ok(())
}

/// Inference-mode representation of a single token.
pub fn encode_token(model: &BilstmCrfModel, token: &str) -> Result<Vec<f64>> {
    if token.is_empty() {
        return Err(Error::Precondition("empty token".into()));
    }
    let mut tape = Tape::new(&model.params);
    let node = token_node(&mut tape, model, token, model.token_index(token));
    Ok(tape.value(node).to_vec())
}

/// Per-position label scores (`n × labels`, row-major) before the CRF layer.
/// Dropout is applied only when `train_mode` is set.
pub fn forward_sequence(
    model: &BilstmCrfModel,
    observations: &[String],
    train_mode: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    check_tokens(observations)?;
    let ids: Vec<usize> = observations.iter().map(|o| model.token_index(o)).collect();
    let mut tape = Tape::new(&model.params);
    let nodes = score_nodes(&mut tape, model, observations, &ids, train_mode.then_some(rng));
    Ok(nodes.iter().flat_map(|&n| tape.value(n).to_vec()).collect())
}

fn inference_scores(model: &BilstmCrfModel, observations: &[String]) -> Result<Vec<f64>> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    forward_sequence(model, observations, false, &mut unused)
}

/// Summed CRF negative log-likelihood of `batch` and its gradient with respect
/// to every parameter. Dropout is active when `dropout_rng` is given.
pub fn neural_loss_and_gradients(
    model: &BilstmCrfModel,
    batch: &[EncodedSequence],
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Precondition("empty batch".into()));
    }
    let mut grads = Gradients::zeros_like(&model.params);
    let mut total = 0.0;
    for seq in batch {
        let ids: Vec<usize> = seq.observations.iter().map(|o| model.token_index(o)).collect();
        total += sequence_loss(model, seq, &ids, dropout_rng.as_deref_mut(), &mut grads)?;
    }
    Ok((total, grads))
}

pub(crate) fn sequence_loss(
    model: &BilstmCrfModel,
    seq: &EncodedSequence,
    token_ids: &[usize],
    dropout_rng: Option<&mut ChaCha8Rng>,
    grads: &mut Gradients,
) -> Result<f64> {
    check_tokens(&seq.observations)?;
    let gold = model.labels.indices(seq)?;
    let mut tape = Tape::new(&model.params);
    let scores = score_nodes(&mut tape, model, &seq.observations, token_ids, dropout_rng);
    let loss = tape.crf_nll(&scores, TRANSITIONS, &gold);
    let value = tape.value(loss)[0];
    if !value.is_finite() {
        return Err(Error::Numerical {
            context: seq.origin.clone(),
            message: format!("loss {value}"),
        });
    }
    tape.backward(loss, grads);
    Ok(value)
}

/// Viterbi decoding over inference-mode scores.
pub fn neural_predict(model: &BilstmCrfModel, seq: &EncodedSequence) -> Vec<String> {
    if seq.is_empty() {
        return Vec::new();
    }
    let unary = match inference_scores(model, &seq.observations) {
        Ok(u) => u,
        Err(_) => return vec![model.labels.name(0).to_string(); seq.len()],
    };
    let (path, _) = Lattice::new(&unary, model.transitions(), model.num_labels()).viterbi();
    model.labels.decode(&path)
}

/// CSV of the pre-CRF score lattice: a header naming the labels, then one
/// row per position.
pub fn activations_csv(model: &BilstmCrfModel, observations: &[String]) -> Result<String> {
    let scores = inference_scores(model, observations)?;
    let l = model.num_labels();
    let mut out = model.labels.names().join(",");
    out.push('\n');
    for row in scores.chunks(l) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

pub fn dump_activations(model: &BilstmCrfModel, seq: &EncodedSequence, path: &Path) -> Result<()> {
    let csv = activations_csv(model, &seq.observations)?;
    std::fs::write(path, csv).map_err(|e| Error::io(path, e))
}
