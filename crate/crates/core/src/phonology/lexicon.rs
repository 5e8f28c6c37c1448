use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{Language, StressPattern};
use crate::error::{Error, Result};

const SEED_EN: &str = include_str!("../../data/lexicon_en.tsv");
const SEED_ES: &str = include_str!("../../data/lexicon_es.tsv");

/// Word → lexical stress pattern, read from `surface<TAB>pattern` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StressLexicon {
    entries: HashMap<String, StressPattern>,
}

impl StressLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, pattern) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected surface<TAB>stress, got {raw:?}"),
            })?;
            let pattern: StressPattern = pattern
                .trim()
                .parse()
                .map_err(|message| Error::Parse { line: i + 1, message })?;
            if pattern.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty stress pattern".into(),
                });
            }
            entries.insert(surface.trim().to_lowercase(), pattern);
        }
        Ok(StressLexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The seed lexicon bundled with the crate.
    pub fn bundled(language: Language) -> Self {
        let text = match language {
            Language::En => SEED_EN,
            Language::Es => SEED_ES,
        };
        Self::parse(text).expect("bundled lexicon is valid")
    }

    pub fn get(&self, surface: &str) -> Option<&StressPattern> {
        self.entries.get(&surface.to_lowercase())
    }

    pub fn insert(&mut self, surface: &str, pattern: StressPattern) {
        self.entries.insert(surface.to_lowercase(), pattern);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_entries() {
        let lex = StressLexicon::parse("# seed\nballoon\t-+\n\nJungle\t+-\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("BALLOON").unwrap().to_string(), "-+");
        assert_eq!(lex.get("jungle").unwrap().to_string(), "+-");
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(StressLexicon::parse("balloon -+\n").is_err());
        assert!(StressLexicon::parse("balloon\t-x\n").is_err());
    }

    #[test]
    fn bundled_lexicons_load() {
        assert!(StressLexicon::bundled(Language::En).get("balloon").is_some());
        assert!(!StressLexicon::bundled(Language::Es).is_empty());
    }
}
