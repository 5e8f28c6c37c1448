//! Second-order (trigram) HMM tagger in the style of TnT/HunPos.
//!
//! Transitions interpolate unigram, bigram and trigram label estimates with
//! deleted-interpolation weights. Emissions use Witten-Bell smoothing against
//! a word unigram; the mass reserved for unseen words is distributed with a
//! character-suffix model trained on rare words.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, LabelSet};
use crate::error::{Error, Result};
use crate::lattice::{log_sum_exp, tied_argmax};
use crate::summary::TrainSummary;

pub const SUFFIX_MAX_LEN: usize = 4;
pub const RARE_WORD_THRESHOLD: usize = 10;
/// Lower bound on the suffix interpolation weight. With a perfectly uniform
/// label distribution the usual estimate is zero and an unseen suffix label
/// would get probability zero.
pub const MIN_THETA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixModel {
    pub max_len: usize,
    pub theta: f64,
    /// Label distribution of the words the suffix statistics come from.
    pub prior: Vec<f64>,
    /// Label counts per suffix.
    pub counts: BTreeMap<String, Vec<f64>>,
}

impl SuffixModel {
    /// `P(label | suffixes of word)` by successive interpolation from the
    /// shortest to the longest seen suffix.
    pub fn label_distribution(&self, word: &str) -> Vec<f64> {
        let chars: Vec<char> = word.chars().flat_map(char::to_lowercase).collect();
        let mut dist = self.prior.clone();
        for len in 1..=self.max_len.min(chars.len()) {
            let suffix: String = chars[chars.len() - len..].iter().collect();
            let Some(counts) = self.counts.get(&suffix) else {
                break;
            };
            let total: f64 = counts.iter().sum();
            if total <= 0.0 {
                break;
            }
            for (d, c) in dist.iter_mut().zip(counts) {
                *d = (c / total + self.theta * *d) / (1.0 + self.theta);
            }
        }
        dist
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub labels: LabelSet,
    /// Interpolation weights for unigram, bigram and trigram estimates.
    pub lambdas: [f64; 3],
    /// `P(t3 | t1, t2)` at `[(t1 * (L + 1) + t2) * (L + 1) + t3]`; index `L`
    /// is the start state in `t1`/`t2` and the end state in `t3`.
    pub transitions: Vec<f64>,
    /// `P(word | label)` for words seen in training.
    pub emissions: BTreeMap<String, Vec<f64>>,
    /// Per-label probability mass left for unseen words.
    pub unknown_mass: Vec<f64>,
    /// Relative label frequencies, used to turn suffix posteriors into
    /// emission scores.
    pub label_prior: Vec<f64>,
    pub suffix: SuffixModel,
}

fn successive_weights(counts: &[(f64, [f64; 3])]) -> [f64; 3] {
    let mut lambdas = [0.0; 3];
    for (freq, candidates) in counts {
        let best = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..3).filter(|&k| candidates[k] == best).collect();
        for &k in &winners {
            lambdas[k] += freq / winners.len() as f64;
        }
    }
    let total: f64 = lambdas.iter().sum();
    if total > 0.0 {
        lambdas.map(|l| l / total)
    } else {
        [1.0 / 3.0; 3]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn train_hmm(data: &[EncodedSequence]) -> Result<(HmmModel, TrainSummary)> {
    if data.is_empty() {
        return Err(Error::Precondition("no training data".into()));
    }
    let labels = LabelSet::from_sequences(data);
    let l = labels.len();
    let s = l + 1; // states incl. start/end
    let idx3 = |a: usize, b: usize, c: usize| (a * s + b) * s + c;

    let mut uni = vec![0.0; s];
    let mut bi = vec![0.0; s * s];
    let mut tri = vec![0.0; s * s * s];
    let mut word_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut label_count = vec![0.0; l];

    for seq in data {
        let ys = labels.indices(seq)?;
        let mut padded = vec![l, l];
        padded.extend(&ys);
        padded.push(l);
        for w in padded.windows(3) {
            tri[idx3(w[0], w[1], w[2])] += 1.0;
            bi[w[1] * s + w[2]] += 1.0;
            uni[w[2]] += 1.0;
        }
        for (obs, &y) in seq.observations.iter().zip(&ys) {
            word_label.entry(obs.clone()).or_insert_with(|| vec![0.0; l])[y] += 1.0;
            label_count[y] += 1.0;
        }
    }

    let n_outcomes: f64 = uni.iter().sum();
    let ctx2: Vec<f64> = (0..s).map(|b| (0..s).map(|c| bi[b * s + c]).sum()).collect();
    let ctx3: Vec<f64> = (0..s * s)
        .map(|ab| (0..s).map(|c| tri[ab * s + c]).sum())
        .collect();

    let mut events = Vec::new();
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                let f = tri[idx3(a, b, c)];
                if f > 0.0 {
                    events.push((
                        f,
                        [
                            ratio(uni[c] - 1.0, n_outcomes - 1.0),
                            ratio(bi[b * s + c] - 1.0, ctx2[b] - 1.0),
                            ratio(f - 1.0, ctx3[a * s + b] - 1.0),
                        ],
                    ));
                }
            }
        }
    }
    let lambdas = successive_weights(&events);

    let mut transitions = vec![0.0; s * s * s];
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                let p1 = uni[c] / n_outcomes;
                let p2 = if ctx2[b] > 0.0 {
                    bi[b * s + c] / ctx2[b]
                } else {
                    p1
                };
                let p3 = if ctx3[a * s + b] > 0.0 {
                    tri[idx3(a, b, c)] / ctx3[a * s + b]
                } else {
                    p2
                };
                transitions[idx3(a, b, c)] = lambdas[0] * p1 + lambdas[1] * p2 + lambdas[2] * p3;
            }
        }
    }

    // Witten-Bell emissions backed off to the word unigram
    let tokens: f64 = label_count.iter().sum();
    let vocab = word_label.len() as f64;
    let types_per_label: Vec<f64> = (0..l)
        .map(|t| word_label.values().filter(|c| c[t] > 0.0).count() as f64)
        .collect();
    let mut emissions = BTreeMap::new();
    for (word, counts) in &word_label {
        let word_total: f64 = counts.iter().sum();
        let backoff = word_total / (tokens + vocab);
        let probs = (0..l)
            .map(|t| (counts[t] + types_per_label[t] * backoff) / (label_count[t] + types_per_label[t]))
            .collect();
        emissions.insert(word.clone(), probs);
    }
    let unknown_mass = (0..l)
        .map(|t| types_per_label[t] * vocab / ((label_count[t] + types_per_label[t]) * (tokens + vocab)))
        .collect();
    let label_prior: Vec<f64> = label_count.iter().map(|c| c / tokens).collect();

    // suffix statistics from rare words (all words if none are rare)
    let rare: Vec<(&String, &Vec<f64>)> = {
        let rare: Vec<_> = word_label
            .iter()
            .filter(|(_, c)| c.iter().sum::<f64>() <= RARE_WORD_THRESHOLD as f64)
            .collect();
        if rare.is_empty() {
            word_label.iter().collect()
        } else {
            rare
        }
    };
    let mut suffix_counts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut rare_prior = vec![0.0; l];
    for (word, counts) in &rare {
        let chars: Vec<char> = word.chars().flat_map(char::to_lowercase).collect();
        for (p, c) in rare_prior.iter_mut().zip(counts.iter()) {
            *p += c;
        }
        for len in 1..=SUFFIX_MAX_LEN.min(chars.len()) {
            let suffix: String = chars[chars.len() - len..].iter().collect();
            let entry = suffix_counts.entry(suffix).or_insert_with(|| vec![0.0; l]);
            for (e, c) in entry.iter_mut().zip(counts.iter()) {
                *e += c;
            }
        }
    }
    // add-one smoothing keeps every label reachable for unseen words
    let rare_total: f64 = rare_prior.iter().sum::<f64>() + l as f64;
    let prior: Vec<f64> = rare_prior.iter().map(|c| (c + 1.0) / rare_total).collect();
    let theta = if l > 1 {
        let mean = 1.0 / l as f64;
        (label_prior.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (l as f64 - 1.0)).sqrt()
    } else {
        0.0
    }
    .max(MIN_THETA);

    let model = HmmModel {
        labels,
        lambdas,
        transitions,
        emissions,
        unknown_mass,
        label_prior,
        suffix: SuffixModel {
            max_len: SUFFIX_MAX_LEN,
            theta,
            prior,
            counts: suffix_counts,
        },
    };
    Ok((
        model,
        TrainSummary {
            family: "hmm".into(),
            epochs: 1,
            objective: None,
            last_epoch_errors: None,
        },
    ))
}

impl HmmModel {
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn states(&self) -> usize {
        self.labels.len() + 1
    }

    /// `P(next | first, second)`; the start/end state has index `num_labels()`.
    pub fn transition(&self, first: usize, second: usize, next: usize) -> f64 {
        let s = self.states();
        self.transitions[(first * s + second) * s + next]
    }

    /// Log emission score of `word` under every label.
    pub fn log_emissions(&self, word: &str) -> Vec<f64> {
        if let Some(probs) = self.emissions.get(word) {
            return probs.iter().map(|p| p.ln()).collect();
        }
        let posterior = self.suffix.label_distribution(word);
        (0..self.num_labels())
            .map(|t| {
                let score = self.unknown_mass[t] * posterior[t] / self.label_prior[t];
                score.ln()
            })
            .collect()
    }

    fn log_transitions(&self) -> Vec<f64> {
        self.transitions.iter().map(|p| p.ln()).collect()
    }

    /// Joint log-probability of observations and a label path.
    pub fn path_log_prob(&self, observations: &[String], path: &[usize]) -> f64 {
        let end = self.num_labels();
        let (mut a, mut b) = (end, end);
        let mut total = 0.0;
        for (obs, &y) in observations.iter().zip(path) {
            total += self.transition(a, b, y).ln() + self.log_emissions(obs)[y];
            a = b;
            b = y;
        }
        total + self.transition(a, b, end).ln()
    }

    /// Log-probability of the observations, summed over all label paths.
    pub fn log_likelihood(&self, observations: &[String]) -> f64 {
        let l = self.num_labels();
        let s = self.states();
        let lt = self.log_transitions();
        let at = |a: usize, b: usize, c: usize| lt[(a * s + b) * s + c];
        if observations.is_empty() {
            return at(l, l, l);
        }
        // forward over (previous, current) pairs
        let emit0 = self.log_emissions(&observations[0]);
        let mut alpha = vec![f64::NEG_INFINITY; s * l];
        for c in 0..l {
            alpha[l * l + c] = at(l, l, c) + emit0[c];
        }
        for obs in &observations[1..] {
            let emit = self.log_emissions(obs);
            let mut next = vec![f64::NEG_INFINITY; s * l];
            for b in 0..l {
                for c in 0..l {
                    next[b * l + c] = log_sum_exp((0..s).map(|a| alpha[a * l + b] + at(a, b, c))) + emit[c];
                }
            }
            alpha = next;
        }
        log_sum_exp((0..s).flat_map(|a| {
            let alpha = &alpha;
            (0..l).map(move |b| alpha[a * l + b] + at(a, b, l))
        }))
    }

    /// Most probable label path and its joint log-probability; ties go to the
    /// lexicographically smaller path.
    pub fn viterbi_path(&self, observations: &[String]) -> (Vec<usize>, f64) {
        let n = observations.len();
        let l = self.num_labels();
        let s = self.states();
        if n == 0 {
            return (Vec::new(), self.transition(l, l, l).ln());
        }
        let lt = self.log_transitions();
        let at = |a: usize, b: usize, c: usize| lt[(a * s + b) * s + c];
        let emits: Vec<Vec<f64>> = observations.iter().map(|o| self.log_emissions(o)).collect();
        // best[i][(a, b)]: best completion after position i with labels a, b at i-1, i
        let mut best = vec![vec![f64::NEG_INFINITY; s * l]; n];
        for a in 0..s {
            for b in 0..l {
                best[n - 1][a * l + b] = at(a, b, l);
            }
        }
        for i in (0..n - 1).rev() {
            for a in 0..s {
                for b in 0..l {
                    best[i][a * l + b] = (0..l)
                        .map(|c| at(a, b, c) + emits[i + 1][c] + best[i + 1][b * l + c])
                        .fold(f64::NEG_INFINITY, f64::max);
                }
            }
        }
        let mut path: Vec<usize> = Vec::with_capacity(n);
        let mut total = f64::NEG_INFINITY;
        let (mut a, mut b) = (l, l);
        for (i, emit) in emits.iter().enumerate() {
            let (arg, top) = tied_argmax((0..l).map(|c| at(a, b, c) + emit[c] + best[i][b * l + c]));
            if i == 0 {
                total = top;
            }
            path.push(arg);
            a = b;
            b = arg;
        }
        (path, total)
    }
}

pub fn viterbi(model: &HmmModel, observations: &[String]) -> Vec<String> {
    let (path, _) = model.viterbi_path(observations);
    model.labels.decode(&path)
}
