//! Seeded generators for desk-scale metered corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Language, Line, StressLabel, StressPattern, Word};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Foot {
    Iamb,
    Trochee,
    Dactyl,
    Anapest,
}

impl Foot {
    pub fn pattern(self) -> &'static [StressLabel] {
        use StressLabel::{Stressed as S, Unstressed as U};
        match self {
            Foot::Iamb => &[U, S],
            Foot::Trochee => &[S, U],
            Foot::Dactyl => &[S, U, U],
            Foot::Anapest => &[U, U, S],
        }
    }
}

impl std::str::FromStr for Foot {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "iamb" | "iambic" => Ok(Foot::Iamb),
            "trochee" | "trochaic" => Ok(Foot::Trochee),
            "dactyl" | "dactylic" => Ok(Foot::Dactyl),
            "anapest" | "anapestic" => Ok(Foot::Anapest),
            other => Err(format!("unknown foot {other:?}")),
        }
    }
}

/// A regular meter: `feet` repetitions of `foot`, optionally with the first
/// `headless` syllables dropped (e.g. a headless anapestic line).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeterSpec {
    pub foot: Foot,
    pub feet: usize,
    #[serde(default)]
    pub headless: usize,
}

impl MeterSpec {
    pub fn new(foot: Foot, feet: usize) -> Self {
        MeterSpec {
            foot,
            feet,
            headless: 0,
        }
    }

    pub fn iambic_pentameter() -> Self {
        MeterSpec::new(Foot::Iamb, 5)
    }

    pub fn pattern(&self) -> Vec<StressLabel> {
        self.foot
            .pattern()
            .iter()
            .copied()
            .cycle()
            .take(self.foot.pattern().len() * self.feet)
            .skip(self.headless)
            .collect()
    }
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "", "n", "r", "l", "s"];

/// Built-in pseudo-word vocabulary, indexed by syllable count (1..=3).
fn vocabulary() -> Vec<Vec<Vec<String>>> {
    let syllables: Vec<String> = ONSETS
        .iter()
        .enumerate()
        .flat_map(|(i, onset)| {
            let nucleus = NUCLEI[i % NUCLEI.len()];
            let coda = CODAS[i % CODAS.len()];
            [
                format!("{onset}{nucleus}{coda}"),
                format!("{onset}{}", NUCLEI[(i + 2) % NUCLEI.len()]),
            ]
        })
        .collect();
    let mut by_length = vec![Vec::new(); 4];
    let mut cursor = 0usize;
    for (length, count) in [(1usize, 16usize), (2, 16), (3, 10)] {
        for _ in 0..count {
            let word: Vec<String> = (0..length)
                .map(|k| syllables[(cursor + k * 7) % syllables.len()].clone())
                .collect();
            cursor += 3;
            by_length[length].push(word);
        }
    }
    by_length
}

fn maybe_flip(gold: &mut [StressLabel], noise: f64, rng: &mut ChaCha8Rng) {
    if rng.gen_bool(noise) && !gold.is_empty() {
        let i = rng.gen_range(0..gold.len());
        gold[i] = gold[i].flipped();
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Precondition(format!("noise {noise} outside [0, 1]")));
    }
    Ok(())
}

/// Generates lines whose gold follows `meter`; with probability `noise` a line
/// gets exactly one flipped label. Words carry the unflipped meter stress as
/// lexical stress.
pub fn generate_synthetic(meter: MeterSpec, n_lines: usize, noise: f64, seed: u64) -> Result<Corpus> {
    check_noise(noise)?;
    let pattern = meter.pattern();
    if pattern.is_empty() && n_lines > 0 {
        return Err(Error::Precondition("meter has no syllables".into()));
    }
    let vocab = vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(n_lines);
    for i in 0..n_lines {
        let mut words = Vec::new();
        let mut filled = 0;
        while filled < pattern.len() {
            let remaining = pattern.len() - filled;
            let length = rng.gen_range(1..=remaining.min(3));
            let syllables = vocab[length].choose(&mut rng).expect("vocabulary").clone();
            let lex = StressPattern(pattern[filled..filled + length].to_vec());
            words.push(Word::new(syllables.concat(), syllables).with_lexical_stress(lex));
            filled += length;
        }
        let mut gold = pattern.clone();
        maybe_flip(&mut gold, noise, &mut rng);
        lines.push(Line::new(
            format!("syn-{i:05}"),
            Language::En,
            words,
            vec![StressPattern(gold)],
        )?);
    }
    Corpus::new("synthetic", Language::En, lines)
}

/// Settings for a Spanish-like corpus whose stress is fixed by position inside
/// each word (penultimate for polysyllables, stressed monosyllables) and whose
/// words are random syllable strings, so boundaries are not recoverable from
/// syllables alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordStressSpec {
    pub n_lines: usize,
    pub syllables_per_line: usize,
    pub max_word_syllables: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for WordStressSpec {
    fn default() -> Self {
        WordStressSpec {
            n_lines: 500,
            syllables_per_line: 11,
            max_word_syllables: 4,
            noise: 0.1,
            seed: 0,
        }
    }
}

const ES_SYLLABLES: &[&str] = &[
    "ca", "to", "me", "ra", "sa", "lo", "da", "ni", "pe", "mo", "ri", "te", "ba", "go", "la", "ne", "so",
    "ti", "du", "ve", "cor", "tan", "mer", "bis", "pal", "ron", "gar", "des",
];

pub fn generate_word_stress(spec: WordStressSpec) -> Result<Corpus> {
    check_noise(spec.noise)?;
    if spec.max_word_syllables == 0 || spec.syllables_per_line == 0 {
        return Err(Error::Precondition(
            "word and line lengths must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut lines = Vec::with_capacity(spec.n_lines);
    for i in 0..spec.n_lines {
        let mut words = Vec::new();
        let mut gold = Vec::new();
        let mut filled = 0;
        while filled < spec.syllables_per_line {
            let remaining = spec.syllables_per_line - filled;
            let length = rng.gen_range(1..=remaining.min(spec.max_word_syllables));
            let syllables: Vec<String> = (0..length)
                .map(|_| ES_SYLLABLES.choose(&mut rng).expect("syllables").to_string())
                .collect();
            let stressed = length.saturating_sub(2);
            let lex: Vec<StressLabel> = (0..length)
                .map(|k| {
                    if k == stressed {
                        StressLabel::Stressed
                    } else {
                        StressLabel::Unstressed
                    }
                })
                .collect();
            gold.extend_from_slice(&lex);
            words.push(Word::new(syllables.concat(), syllables).with_lexical_stress(StressPattern(lex)));
            filled += length;
        }
        maybe_flip(&mut gold, spec.noise, &mut rng);
        lines.push(Line::new(
            format!("ws-{i:05}"),
            Language::Es,
            words,
            vec![StressPattern(gold)],
        )?);
    }
    Corpus::new("word-stress", Language::Es, lines)
}
