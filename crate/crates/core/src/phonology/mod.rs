//! Rule-based syllabification, lexical stress, Spanish synalepha and the
//! per-segment stress heuristic used to label Spanish lines.

mod english;
mod lexicon;
mod spanish;

pub use lexicon::StressLexicon;

use crate::corpus::{Language, Line, StressLabel, StressPattern, Word, MERGE_MARKER};
use crate::error::{Error, Result};

const EN_FUNCTION_WORDS: &[&str] = &[
    "a", "am", "an", "and", "are", "as", "at", "be", "but", "by", "can", "did", "do", "for", "from", "had",
    "has", "have", "he", "her", "him", "his", "i", "if", "in", "is", "it", "its", "me", "my", "nor", "of",
    "on", "or", "our", "she", "so", "than", "that", "the", "their", "them", "then", "they", "this", "thee",
    "thou", "thy", "to", "us", "was", "we", "were", "what", "when", "which", "who", "with", "would", "yet",
    "you", "your",
];

fn lower_chars(surface: &str) -> Vec<char> {
    surface
        .chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

fn bare(surface: &str) -> String {
    surface
        .chars()
        .filter(|&c| c != MERGE_MARKER)
        .flat_map(char::to_lowercase)
        .collect()
}

pub fn is_function_word(surface: &str, language: Language) -> bool {
    let word = bare(surface);
    match language {
        Language::En => EN_FUNCTION_WORDS.contains(&word.as_str()),
        Language::Es => spanish::FUNCTION_WORDS.contains(&word.as_str()),
    }
}

/// Splits a single word into syllables. The syllables spell the input exactly.
pub fn syllabify(surface: &str, language: Language) -> Result<Vec<String>> {
    let valid = surface.chars().any(char::is_alphabetic)
        && surface
            .chars()
            .all(|c| c.is_alphabetic() || c == '\'' || c == '\u{2019}');
    if !valid {
        return Err(Error::InvalidWord(surface.to_string()));
    }
    let chars: Vec<char> = surface.chars().collect();
    let lower = lower_chars(surface);
    let lengths = match language {
        Language::En => english::syllable_lengths(&lower),
        Language::Es => spanish::syllable_lengths(&lower),
    };
    let mut out = Vec::with_capacity(lengths.len());
    let mut at = 0;
    for len in lengths {
        out.push(chars[at..at + len].iter().collect());
        at += len;
    }
    debug_assert_eq!(at, chars.len());
    Ok(out)
}

/// Splits a verse line into syllabified words, dropping punctuation.
pub fn syllabify_text(text: &str, language: Language) -> Result<Vec<Word>> {
    text.split_whitespace()
        .map(|token| token.trim_matches(|c: char| !(c.is_alphabetic() || c == '\'' || c == '\u{2019}')))
        .filter(|token| token.chars().any(char::is_alphabetic))
        .map(|token| Ok(Word::new(token, syllabify(token, language)?)))
        .collect()
}

/// Lexical stress of a syllabified word, one label per syllable.
pub fn lexical_stress(word: &Word, language: Language, lexicon: &StressLexicon) -> Vec<StressLabel> {
    let n = word.syllables.len();
    let surface = bare(&word.surface);
    if let Some(pattern) = lexicon.get(&surface) {
        if pattern.len() == n {
            return pattern.0.clone();
        }
    }
    match language {
        Language::En => {
            if n == 1 && is_function_word(&surface, language) {
                vec![StressLabel::Unstressed]
            } else {
                let mut labels = vec![StressLabel::Unstressed; n];
                labels[n - 1] = StressLabel::Stressed;
                labels
            }
        }
        Language::Es => {
            if is_function_word(&surface, language) {
                vec![StressLabel::Unstressed; n]
            } else {
                let syllables: Vec<String> = word.syllables.iter().map(|s| bare(s)).collect();
                spanish::accent_rule(&syllables)
            }
        }
    }
}

/// Words of a Spanish line after synalepha. `merges` lists the
/// `(word_index, syllable_index)` of every syllable joined onto the previous
/// segment; those syllables carry [`MERGE_MARKER`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyllabifiedLine {
    pub words: Vec<Word>,
    pub merges: Vec<(usize, usize)>,
}

impl SyllabifiedLine {
    pub fn segment_count(&self) -> usize {
        self.words.iter().map(|w| w.syllables.len()).sum::<usize>() - self.merges.len()
    }

    /// Text of each metrical segment.
    pub fn segments(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for word in &self.words {
            for syl in &word.syllables {
                match out.last_mut() {
                    Some(prev) if syl.starts_with(MERGE_MARKER) => prev.push_str(syl),
                    _ => out.push(syl.clone()),
                }
            }
        }
        out
    }

    pub fn into_line(self, id: impl Into<String>, gold: Vec<StressPattern>) -> Result<Line> {
        Line::new(id, Language::Es, self.words, gold)
    }
}

fn ends_in_vowel(syllable: &str) -> bool {
    syllable
        .chars()
        .last()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .is_some_and(|c| spanish::is_vowel(c) || c == 'y')
}

fn starts_with_vowel(syllable: &str) -> bool {
    let lower = lower_chars(syllable);
    match lower.as_slice() {
        ['h', second, ..] => spanish::is_vowel(*second),
        // "y" alone is the conjunction, a vowel
        ['y'] => true,
        [first, ..] => spanish::is_vowel(*first),
        [] => false,
    }
}

/// Merges word-final and word-initial vowels (silent `h` included) greedily
/// from left to right, at most one merge per boundary and never onto a segment
/// that is itself the product of a merge.
pub fn apply_synalepha(words: &[Word]) -> SyllabifiedLine {
    let mut out: Vec<Word> = words.to_vec();
    let mut merges = Vec::new();
    for i in 1..out.len() {
        let prev = &out[i - 1];
        let Some(prev_last) = prev.syllables.last() else {
            continue;
        };
        // the previous word's last segment is already merged
        if prev.syllables.len() == 1 && prev.is_merged_onset() {
            continue;
        }
        let Some(first) = out[i].syllables.first() else {
            continue;
        };
        if first.starts_with(MERGE_MARKER) {
            continue;
        }
        if ends_in_vowel(prev_last) && starts_with_vowel(first) {
            let merged = format!("{MERGE_MARKER}{first}");
            out[i].syllables[0] = merged;
            merges.push((i, 0));
        }
    }
    SyllabifiedLine { words: out, merges }
}

/// One stress label per metrical segment: lexical stress per word, function
/// words demoted, and a merged segment stressed iff any of its syllables is.
pub fn heuristic_stress_sequence(line: &SyllabifiedLine, lexicon: &StressLexicon) -> Vec<StressLabel> {
    let mut out: Vec<StressLabel> = Vec::new();
    for word in &line.words {
        let lex = if is_function_word(&word.surface, Language::Es) {
            vec![StressLabel::Unstressed; word.syllables.len()]
        } else {
            lexical_stress(word, Language::Es, lexicon)
        };
        for (syl, label) in word.syllables.iter().zip(lex) {
            match out.last_mut() {
                Some(prev) if syl.starts_with(MERGE_MARKER) => {
                    if label == StressLabel::Stressed {
                        *prev = StressLabel::Stressed;
                    }
                }
                _ => out.push(label),
            }
        }
    }
    out
}

/// Builds a Spanish line from raw text: syllabification, synalepha, lexical
/// stress on each word and the heuristic stress sequence as its gold.
pub fn annotate_spanish(id: &str, text: &str, lexicon: &StressLexicon) -> Result<Line> {
    let words: Vec<Word> = syllabify_text(text, Language::Es)?
        .into_iter()
        .map(|w| {
            let lex = lexical_stress(&w, Language::Es, lexicon);
            w.with_lexical_stress(StressPattern(lex))
        })
        .collect();
    let merged = apply_synalepha(&words);
    let gold = StressPattern(heuristic_stress_sequence(&merged, lexicon));
    merged.into_line(id, vec![gold])
}
