//! Model-ready observation/label sequences.
//!
//! * `S2s`: one token per metrical segment, labeled `+` or `-`.
//! * `S2sWb`: as `S2s` with a `WB` token labeled `|` between words.
//! * `W2sp`: one token per word, labeled with the word's whole stress pattern.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Line, StressLabel};
use crate::error::{Error, Result};

pub const WB_TOKEN: &str = "WB";
pub const BOUNDARY_LABEL: &str = "|";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "s2s")]
    S2s,
    #[serde(rename = "s2s_wb")]
    S2sWb,
    #[serde(rename = "w2sp")]
    W2sp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::S2s => "s2s",
            Mode::S2sWb => "s2s_wb",
            Mode::W2sp => "w2sp",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s2s" => Ok(Mode::S2s),
            "s2s_wb" | "s2s+wb" | "s2s-wb" => Ok(Mode::S2sWb),
            "w2sp" => Ok(Mode::W2sp),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Word-level context of one token, consumed by the feature templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenContext {
    /// Owning word; `None` for boundary tokens.
    pub word: Option<usize>,
    pub word_surface: String,
    pub index_in_word: usize,
    /// Segments owned by the word.
    pub word_len: usize,
    /// Lexical stress of the token (one symbol per segment it covers).
    pub lexical: Option<String>,
    pub pos: Option<String>,
}

impl TokenContext {
    fn boundary() -> Self {
        TokenContext {
            word: None,
            word_surface: WB_TOKEN.to_string(),
            index_in_word: 0,
            word_len: 0,
            lexical: None,
            pos: None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.word.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub observations: Vec<String>,
    pub labels: Vec<String>,
    pub mode: Mode,
    pub origin: String,
    pub context: Vec<TokenContext>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Sorted label alphabet collected from training sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new(mut labels: Vec<String>) -> Self {
        labels.sort();
        labels.dedup();
        LabelSet { labels }
    }

    pub fn from_sequences(data: &[EncodedSequence]) -> Self {
        Self::new(data.iter().flat_map(|s| s.labels.iter().cloned()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    /// Label indices of a sequence; fails on labels outside the set.
    pub fn indices(&self, seq: &EncodedSequence) -> Result<Vec<usize>> {
        seq.labels
            .iter()
            .map(|l| {
                self.index(l).ok_or_else(|| {
                    Error::Precondition(format!("label {l:?} of {} not in label set", seq.origin))
                })
            })
            .collect()
    }

    pub fn decode(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&i| self.labels[i].clone()).collect()
    }
}

/// Encodes `line` under `mode`, labeling with gold reference `reference_index`.
pub fn encode(line: &Line, mode: Mode, reference_index: usize) -> Result<EncodedSequence> {
    let reference = line.gold.get(reference_index).ok_or(Error::ReferenceOutOfRange {
        index: reference_index,
        available: line.gold.len(),
    })?;
    let gold = reference.labels();
    let segments = line.segments();
    let per_word = line.segments_per_word();

    let mut observations = Vec::new();
    let mut labels = Vec::new();
    let mut context = Vec::new();

    match mode {
        Mode::S2s | Mode::S2sWb => {
            let mut prev_word = None;
            for (segment, label) in segments.iter().zip(gold) {
                if mode == Mode::S2sWb && prev_word.is_some_and(|w| w != segment.word) {
                    observations.push(WB_TOKEN.to_string());
                    labels.push(BOUNDARY_LABEL.to_string());
                    context.push(TokenContext::boundary());
                }
                prev_word = Some(segment.word);
                let word = &line.words[segment.word];
                observations.push(segment.text.clone());
                labels.push(label.symbol().to_string());
                context.push(TokenContext {
                    word: Some(segment.word),
                    word_surface: word.surface.clone(),
                    index_in_word: segment.index_in_word,
                    word_len: per_word[segment.word],
                    lexical: segment.lexical.map(|l| l.symbol().to_string()),
                    pos: word.pos.clone(),
                });
            }
        }
        Mode::W2sp => {
            let mut at = 0;
            for (w, word) in line.words.iter().enumerate() {
                let owned = &segments[at..at + per_word[w]];
                let pattern: String = gold[at..at + per_word[w]].iter().map(|l| l.symbol()).collect();
                let lexical = owned
                    .iter()
                    .map(|s| s.lexical.map(|l| l.symbol()))
                    .collect::<Option<String>>();
                at += per_word[w];
                observations.push(word.surface.clone());
                labels.push(pattern);
                context.push(TokenContext {
                    word: Some(w),
                    word_surface: word.surface.clone(),
                    index_in_word: 0,
                    word_len: per_word[w],
                    lexical,
                    pos: word.pos.clone(),
                });
            }
        }
    }
    Ok(EncodedSequence {
        observations,
        labels,
        mode,
        origin: line.id.clone(),
        context,
    })
}

fn parse_symbol(label: &str) -> Result<StressLabel> {
    match label {
        "+" => Ok(StressLabel::Stressed),
        "-" => Ok(StressLabel::Unstressed),
        other => Err(Error::Decode(format!("unexpected label {other:?}"))),
    }
}

/// Flattens model output back to one stress label per syllable.
pub fn decode_to_stress(labels: &[String], mode: Mode, line: &Line) -> Result<Vec<StressLabel>> {
    match mode {
        Mode::S2s => labels
            .iter()
            .filter(|l| l.as_str() != BOUNDARY_LABEL)
            .map(|l| parse_symbol(l))
            .collect(),
        Mode::S2sWb => {
            let layout = encode(line, Mode::S2sWb, 0)?;
            if layout.len() != labels.len() {
                return Err(Error::Decode(format!(
                    "{} labels for {} tokens",
                    labels.len(),
                    layout.len()
                )));
            }
            labels
                .iter()
                .zip(&layout.context)
                .filter(|(l, ctx)| !ctx.is_boundary() && l.as_str() != BOUNDARY_LABEL)
                .map(|(l, _)| parse_symbol(l))
                .collect()
        }
        Mode::W2sp => labels
            .iter()
            .flat_map(|pattern| pattern.chars())
            .map(|c| match StressLabel::from_symbol(c) {
                Some(StressLabel::Boundary) | None => {
                    Err(Error::Decode(format!("character {c:?} in stress pattern")))
                }
                Some(label) => Ok(label),
            })
            .collect(),
    }
}
