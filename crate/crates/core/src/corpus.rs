//! Annotated verse: stress labels, words, lines and corpora, plus the JSONL
//! corpus format.
//!
//! A line's metrical *segments* are its syllables after synalepha. A syllable
//! that starts with [`MERGE_MARKER`] continues the previous word's final
//! segment instead of opening a new one, so `["fá","bri","ca"]` followed by
//! `["‿en"]` yields the segments `fá`, `bri`, `ca‿en`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod synthetic;

pub use synthetic::{generate_synthetic, generate_word_stress, Foot, MeterSpec, WordStressSpec};

/// Joins a word-initial syllable onto the previous word's last segment.
pub const MERGE_MARKER: char = '\u{203F}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StressLabel {
    Stressed,
    Unstressed,
    Boundary,
}

impl StressLabel {
    pub fn symbol(self) -> char {
        match self {
            StressLabel::Stressed => '+',
            StressLabel::Unstressed => '-',
            StressLabel::Boundary => '|',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(StressLabel::Stressed),
            '-' => Some(StressLabel::Unstressed),
            '|' => Some(StressLabel::Boundary),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            StressLabel::Stressed => StressLabel::Unstressed,
            StressLabel::Unstressed => StressLabel::Stressed,
            StressLabel::Boundary => StressLabel::Boundary,
        }
    }
}

impl fmt::Display for StressLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A binary stress string such as `-+-+`. Boundary symbols are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StressPattern(pub Vec<StressLabel>);

impl StressPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[StressLabel] {
        &self.0
    }
}

impl FromStr for StressPattern {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.chars()
            .map(|c| match StressLabel::from_symbol(c) {
                Some(StressLabel::Boundary) | None => Err(format!("invalid stress symbol {c:?} in {s:?}")),
                Some(label) => Ok(label),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(StressPattern)
    }
}

impl fmt::Display for StressPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for label in &self.0 {
            write!(f, "{}", label.symbol())?;
        }
        Ok(())
    }
}

impl From<Vec<StressLabel>> for StressPattern {
    fn from(labels: Vec<StressLabel>) -> Self {
        StressPattern(labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "en")]
    En,
    #[serde(rename = "es")]
    Es,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Es => "es",
        }
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "es" => Ok(Language::Es),
            other => Err(format!("unknown language {other:?} (expected en or es)")),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub surface: String,
    pub syllables: Vec<String>,
    pub lexical_stress: Option<StressPattern>,
    pub pos: Option<String>,
}

impl Word {
    pub fn new(surface: impl Into<String>, syllables: Vec<String>) -> Self {
        Word {
            surface: surface.into(),
            syllables,
            lexical_stress: None,
            pos: None,
        }
    }

    /// Builds a word from a hyphenated form such as `bal-loon`.
    pub fn from_hyphenated(form: &str) -> Self {
        let syllables: Vec<String> = form.split('-').map(str::to_string).collect();
        let surface: String = syllables
            .iter()
            .flat_map(|s| s.chars())
            .filter(|&c| c != MERGE_MARKER)
            .collect();
        Word::new(surface, syllables)
    }

    pub fn with_lexical_stress(mut self, pattern: StressPattern) -> Self {
        self.lexical_stress = Some(pattern);
        self
    }

    pub fn with_pos(mut self, pos: impl Into<String>) -> Self {
        self.pos = Some(pos.into());
        self
    }

    /// True when the first syllable continues the previous word's segment.
    pub fn is_merged_onset(&self) -> bool {
        self.syllables
            .first()
            .is_some_and(|s| s.starts_with(MERGE_MARKER))
    }

    fn validate(&self, id: &str, index: usize, language: Language) -> Result<()> {
        if self.syllables.is_empty() {
            return Err(Error::invalid_line(
                id,
                format!("word {index} ({:?}) has no syllables", self.surface),
            ));
        }
        for (s, syl) in self.syllables.iter().enumerate() {
            let bare = syl.trim_start_matches(MERGE_MARKER);
            if bare.is_empty() {
                return Err(Error::invalid_line(
                    id,
                    format!("word {index} has an empty syllable"),
                ));
            }
            if bare.contains(MERGE_MARKER) {
                return Err(Error::invalid_line(
                    id,
                    format!("word {index}: merge marker inside syllable {syl:?}"),
                ));
            }
            if syl.starts_with(MERGE_MARKER) {
                if s != 0 || index == 0 {
                    return Err(Error::invalid_line(
                        id,
                        format!(
                            "word {index}: merge marker only allowed on a non-initial word's first syllable"
                        ),
                    ));
                }
                if language != Language::Es {
                    return Err(Error::invalid_line(
                        id,
                        "synalepha merges are only valid for Spanish",
                    ));
                }
            }
        }
        let joined: String = self
            .syllables
            .iter()
            .flat_map(|s| s.chars())
            .filter(|&c| c != MERGE_MARKER)
            .flat_map(char::to_lowercase)
            .collect();
        let surface: String = self.surface.chars().flat_map(char::to_lowercase).collect();
        if joined != surface {
            return Err(Error::invalid_line(
                id,
                format!(
                    "word {index}: syllables {:?} do not spell {:?}",
                    self.syllables, self.surface
                ),
            ));
        }
        if let Some(lex) = &self.lexical_stress {
            if lex.len() != self.syllables.len() {
                return Err(Error::invalid_line(
                    id,
                    format!(
                        "word {index}: lexical stress {lex} has {} labels for {} syllables",
                        lex.len(),
                        self.syllables.len()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// One metrical position of a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    /// Index of the word that owns the segment (the word whose syllable opened it).
    pub word: usize,
    /// Index of the segment among the segments owned by `word`.
    pub index_in_word: usize,
    pub text: String,
    /// Lexical stress of the segment: stressed if any merged syllable is.
    pub lexical: Option<StressLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub id: String,
    pub language: Language,
    pub words: Vec<Word>,
    pub gold: Vec<StressPattern>,
}

impl Line {
    pub fn new(
        id: impl Into<String>,
        language: Language,
        words: Vec<Word>,
        gold: Vec<StressPattern>,
    ) -> Result<Self> {
        let line = Line {
            id: id.into(),
            language,
            words,
            gold,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut segments: Vec<Segment> = Vec::new();
        let mut owned = vec![0usize; self.words.len()];
        for (w, word) in self.words.iter().enumerate() {
            for (s, syl) in word.syllables.iter().enumerate() {
                let lex = word.lexical_stress.as_ref().and_then(|p| p.0.get(s).copied());
                match (syl.starts_with(MERGE_MARKER), segments.last_mut()) {
                    (true, Some(prev)) => {
                        prev.text.push_str(syl);
                        prev.lexical = match (prev.lexical, lex) {
                            (Some(StressLabel::Stressed), _) | (_, Some(StressLabel::Stressed)) => {
                                Some(StressLabel::Stressed)
                            }
                            (Some(a), _) => Some(a),
                            (None, b) => b,
                        };
                    }
                    _ => {
                        segments.push(Segment {
                            word: w,
                            index_in_word: owned[w],
                            text: syl.clone(),
                            lexical: lex,
                        });
                        owned[w] += 1;
                    }
                }
            }
        }
        segments
    }

    pub fn segment_count(&self) -> usize {
        self.words
            .iter()
            .flat_map(|w| w.syllables.iter())
            .filter(|s| !s.starts_with(MERGE_MARKER))
            .count()
    }

    /// Number of segments owned by each word.
    pub fn segments_per_word(&self) -> Vec<usize> {
        self.words
            .iter()
            .map(|w| {
                w.syllables
                    .iter()
                    .filter(|s| !s.starts_with(MERGE_MARKER))
                    .count()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id.as_str();
        if self.words.is_empty() {
            return Err(Error::invalid_line(id, "line has no words"));
        }
        for (i, word) in self.words.iter().enumerate() {
            word.validate(id, i, self.language)?;
        }
        if self.gold.is_empty() {
            return Err(Error::invalid_line(id, "line has no gold reference"));
        }
        let n = self.segment_count();
        for (r, reference) in self.gold.iter().enumerate() {
            if reference.len() != n {
                return Err(Error::invalid_line(
                    id,
                    format!(
                        "reference {r} ({reference}) has {} labels for {n} segments",
                        reference.len()
                    ),
                ));
            }
            if reference.0.contains(&StressLabel::Boundary) {
                return Err(Error::invalid_line(id, "boundary label in gold reference"));
            }
        }
        let distinct: HashSet<&StressPattern> = self.gold.iter().collect();
        if distinct.len() != self.gold.len() {
            return Err(Error::invalid_line(id, "duplicate gold references"));
        }
        Ok(())
    }

    pub fn text(&self) -> String {
        self.words
            .iter()
            .map(|w| w.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_record(&self) -> LineRecord {
        LineRecord {
            id: self.id.clone(),
            lang: self.language,
            words: self
                .words
                .iter()
                .map(|w| WordRecord {
                    surface: w.surface.clone(),
                    syllables: w.syllables.clone(),
                    lex_stress: w.lexical_stress.as_ref().map(ToString::to_string),
                    pos: w.pos.clone(),
                })
                .collect(),
            gold: self.gold.iter().map(ToString::to_string).collect(),
            pred: None,
        }
    }

    pub fn from_record(record: LineRecord) -> Result<Self> {
        let id = record.id;
        let words = record
            .words
            .into_iter()
            .map(|w| {
                let lexical_stress = w
                    .lex_stress
                    .map(|s| s.parse::<StressPattern>())
                    .transpose()
                    .map_err(|e| Error::invalid_line(&id, e))?;
                Ok(Word {
                    surface: w.surface,
                    syllables: w.syllables,
                    lexical_stress,
                    pos: w.pos,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let gold = record
            .gold
            .iter()
            .map(|g| g.parse::<StressPattern>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid_line(&id, e))?;
        Line::new(id, record.lang, words, gold)
    }
}

/// Wire form of a word in the JSONL corpus format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub surface: String,
    pub syllables: Vec<String>,
    #[serde(default)]
    pub lex_stress: Option<String>,
    #[serde(default)]
    pub pos: Option<String>,
}

/// Wire form of a line. `pred` is only written by prediction output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub id: String,
    pub lang: Language,
    pub words: Vec<WordRecord>,
    pub gold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub language: Language,
    pub lines: Vec<Line>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, language: Language, lines: Vec<Line>) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            language,
            lines,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for line in &self.lines {
            line.validate()?;
            if line.language != self.language {
                return Err(Error::invalid_line(
                    &line.id,
                    format!(
                        "language {} differs from corpus language {}",
                        line.language, self.language
                    ),
                ));
            }
            if !ids.insert(line.id.as_str()) {
                return Err(Error::invalid_line(&line.id, "duplicate line id"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Serializes the corpus as JSONL (one record per line, LF endings).
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(&line.to_record())?);
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_corpus(BufReader::new(file), name, path)
}

pub(crate) fn read_corpus(reader: impl BufRead, name: String, path: &Path) -> Result<Corpus> {
    let mut lines = Vec::new();
    for (i, raw) in reader.lines().enumerate() {
        let raw = raw.map_err(|e| Error::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        let record: LineRecord = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        lines.push(Line::from_record(record)?);
    }
    let Some(language) = lines.first().map(|l| l.language) else {
        return Err(Error::EmptyFile(path.to_path_buf()));
    };
    Corpus::new(name, language, lines)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(corpus.to_jsonl()?.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
