//! Binary feature templates for the feature-based taggers.
//!
//! [`TEMPLATES`] is the fixed registry: the first ten entries form the basic
//! set, all 64 the full set. A feature is the string `name=value`; templates
//! whose inputs are missing (no lexical stress, no POS) produce nothing.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, WB_TOKEN};
use crate::error::{Error, Result};

pub const REGISTRY_VERSION: u32 = 1;
pub const BASIC_COUNT: usize = 10;

pub const TEMPLATES: [&str; 64] = [
    // basic
    "obs[0]",
    "obs[-1]",
    "obs[+1]",
    "obs[-2]",
    "obs[+2]",
    "word",
    "pos_in_word",
    "word_len",
    "suffix3",
    "prefix3",
    // observation windows
    "obs[-1]|obs[0]",
    "obs[0]|obs[+1]",
    "obs[-2]|obs[-1]",
    "obs[+1]|obs[+2]",
    "obs[-1]|obs[+1]",
    "obs[-2]|obs[0]",
    "obs[0]|obs[+2]",
    "obs[-1]|obs[0]|obs[+1]",
    // lexical stress
    "lex[0]",
    "lex[-1]",
    "lex[+1]",
    "lex[-2]",
    "lex[+2]",
    "lex[-1]|lex[0]",
    "lex[0]|lex[+1]",
    "lex[-1]|lex[0]|lex[+1]",
    "lex[-2]|lex[-1]|lex[0]",
    "lex[0]|lex[+1]|lex[+2]",
    "lex[0]|obs[0]",
    "lex[0]|pos_in_word",
    "lex[0]|word",
    // part of speech
    "tag[0]",
    "tag[-1w]",
    "tag[+1w]",
    "tag[-1w]|tag[0]",
    "tag[0]|tag[+1w]",
    "tag[0]|lex[0]",
    // character n-grams
    "prefix1",
    "prefix2",
    "prefix4",
    "suffix1",
    "suffix2",
    "suffix4",
    // word position
    "word_initial",
    "word_final",
    // line position
    "from_start",
    "from_end",
    "parity",
    "mod3",
    // word context
    "word[-1]",
    "word[+1]",
    "word|pos_in_word",
    "word_suffix2",
    "word_suffix3",
    "from_word_end",
    "word_len|index_in_word",
    // observation shape
    "obs_len",
    "obs_accent",
    "obs_shape",
    "obs_lower",
    // line and conjunctions
    "line_len",
    "obs[0]|pos_in_word",
    "obs[0]|word_len",
    "bias",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "basic10")]
    Basic10,
    #[serde(rename = "full64")]
    Full64,
}

impl FeatureSet {
    pub fn template_count(self) -> usize {
        match self {
            FeatureSet::Basic10 => BASIC_COUNT,
            FeatureSet::Full64 => TEMPLATES.len(),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Basic10 => "basic10",
            FeatureSet::Full64 => "full64",
        })
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "basic10" | "10" => Ok(FeatureSet::Basic10),
            "full64" | "64" => Ok(FeatureSet::Full64),
            other => Err(format!("unknown feature set {other:?}")),
        }
    }
}

/// The registry as a text manifest, one template name per line.
pub fn registry_manifest() -> String {
    let mut out = format!("# feature template registry v{REGISTRY_VERSION}\n");
    for name in TEMPLATES {
        out.push_str(name);
        out.push('\n');
    }
    out
}

pub const UNK_ID: u32 = 0;
const UNK_NAME: &str = "<UNK>";

/// Feature string ↔ id map. Once frozen, unseen strings resolve to [`UNK_ID`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureAlphabet {
    names: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, u32>,
    frozen: bool,
}

impl Default for FeatureAlphabet {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureAlphabet {
    pub fn new() -> Self {
        let mut ids = HashMap::new();
        ids.insert(UNK_NAME.to_string(), UNK_ID);
        FeatureAlphabet {
            names: vec![UNK_NAME.to_string()],
            ids,
            frozen: false,
        }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.ids = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.len() <= 1
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn get(&self, name: &str) -> u32 {
        self.ids.get(name).copied().unwrap_or(UNK_ID)
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        if self.frozen {
            return UNK_ID;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    /// Resolves feature strings without growing the alphabet.
    pub fn vector<S: AsRef<str>>(&self, names: &[S]) -> FeatureVector {
        FeatureVector::from_ids(names.iter().map(|n| self.get(n.as_ref())).collect())
    }

    pub fn intern_vector<S: AsRef<str>>(&mut self, names: &[S]) -> FeatureVector {
        FeatureVector::from_ids(names.iter().map(|n| self.intern(n.as_ref())).collect())
    }
}

/// Sorted, deduplicated ids of the active binary features.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
}

impl FeatureVector {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector { indices: ids }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn observation(seq: &EncodedSequence, position: usize, offset: isize) -> String {
    let target = position as isize + offset;
    if target < 0 {
        "<BOS>".to_string()
    } else if target as usize >= seq.len() {
        "<EOS>".to_string()
    } else {
        seq.observations[target as usize].clone()
    }
}

fn lexical(seq: &EncodedSequence, position: usize, offset: isize) -> Option<String> {
    let target = position as isize + offset;
    if target < 0 {
        Some("<BOS>".into())
    } else if target as usize >= seq.len() {
        Some("<EOS>".into())
    } else {
        let ctx = &seq.context[target as usize];
        if ctx.is_boundary() {
            Some("|".into())
        } else {
            ctx.lexical.clone()
        }
    }
}

fn lower(s: &str) -> Vec<char> {
    s.chars().flat_map(char::to_lowercase).collect()
}

fn prefix(s: &str, n: usize) -> String {
    lower(s).into_iter().take(n).collect()
}

fn suffix(s: &str, n: usize) -> String {
    let chars = lower(s);
    chars[chars.len().saturating_sub(n)..].iter().collect()
}

fn bucket(n: usize, cap: usize) -> String {
    if n >= cap {
        format!("{cap}+")
    } else {
        n.to_string()
    }
}

fn is_vowel(c: char) -> bool {
    "aeiouyáéíóúüàèìòùâêîôûäëïö".contains(c)
}

struct WordInfo {
    surface: String,
    pos: Option<String>,
}

/// Surfaces and tags of the words of the sequence, by word index.
fn words(seq: &EncodedSequence) -> Vec<WordInfo> {
    let mut out: Vec<WordInfo> = Vec::new();
    for ctx in &seq.context {
        if let Some(w) = ctx.word {
            while out.len() <= w {
                out.push(WordInfo {
                    surface: String::new(),
                    pos: None,
                });
            }
            out[w] = WordInfo {
                surface: ctx.word_surface.clone(),
                pos: ctx.pos.clone(),
            };
        }
    }
    out
}

/// Values of the first `count` templates at `position`, as `name=value`.
pub fn template_features(seq: &EncodedSequence, position: usize, count: usize) -> Result<Vec<String>> {
    if position >= seq.len() {
        return Err(Error::PositionOutOfRange {
            position,
            len: seq.len(),
        });
    }
    let ctx = &seq.context[position];
    let obs = |offset| observation(seq, position, offset);
    let has_lexical = ctx.lexical.is_some() || ctx.is_boundary();
    let lex = |offset| has_lexical.then(|| lexical(seq, position, offset)).flatten();
    let current = obs(0);
    let pos_in_word = if ctx.is_boundary() {
        "boundary"
    } else if ctx.word_len <= 1 {
        "only"
    } else if ctx.index_in_word == 0 {
        "initial"
    } else if ctx.index_in_word + 1 == ctx.word_len {
        "final"
    } else {
        "medial"
    }
    .to_string();
    let word = ctx.word_surface.to_lowercase();
    let word_len = bucket(ctx.word_len, 5);

    let table = words(seq);
    let neighbour = |delta: isize| -> Option<&WordInfo> {
        let w = ctx.word? as isize + delta;
        if w < 0 {
            None
        } else {
            table.get(w as usize)
        }
    };
    let neighbour_surface = |delta| {
        if ctx.is_boundary() {
            Some(WB_TOKEN.to_string())
        } else {
            Some(
                neighbour(delta)
                    .map(|w| w.surface.to_lowercase())
                    .unwrap_or_else(|| if delta < 0 { "<BOS>" } else { "<EOS>" }.to_string()),
            )
        }
    };
    let tag = |delta: isize| -> Option<String> {
        if delta == 0 {
            ctx.pos.clone()
        } else {
            match neighbour(delta) {
                Some(w) => w.pos.clone(),
                // neighbour outside the line: pad only if the current tag exists
                None => ctx
                    .pos
                    .as_ref()
                    .map(|_| if delta < 0 { "<BOS>" } else { "<EOS>" }.to_string()),
            }
        }
    };
    let join = |parts: &[Option<String>]| -> Option<String> {
        parts
            .iter()
            .cloned()
            .collect::<Option<Vec<String>>>()
            .map(|v| v.join("|"))
    };
    let some = |s: String| Some(s);

    let from_end = seq.len() - 1 - position;
    let shape: String = lower(&current)
        .into_iter()
        .map(|c| {
            if is_vowel(c) {
                'V'
            } else if c.is_alphabetic() {
                'C'
            } else {
                c
            }
        })
        .collect();

    let mut values: Vec<Option<String>> = Vec::with_capacity(64);
    values.extend([
        some(current.clone()),
        some(obs(-1)),
        some(obs(1)),
        some(obs(-2)),
        some(obs(2)),
        some(word.clone()),
        some(pos_in_word.clone()),
        some(word_len.clone()),
        some(suffix(&current, 3)),
        some(prefix(&current, 3)),
    ]);
    if count > BASIC_COUNT {
        values.extend([
            join(&[some(obs(-1)), some(current.clone())]),
            join(&[some(current.clone()), some(obs(1))]),
            join(&[some(obs(-2)), some(obs(-1))]),
            join(&[some(obs(1)), some(obs(2))]),
            join(&[some(obs(-1)), some(obs(1))]),
            join(&[some(obs(-2)), some(current.clone())]),
            join(&[some(current.clone()), some(obs(2))]),
            join(&[some(obs(-1)), some(current.clone()), some(obs(1))]),
            lex(0),
            lex(-1),
            lex(1),
            lex(-2),
            lex(2),
            join(&[lex(-1), lex(0)]),
            join(&[lex(0), lex(1)]),
            join(&[lex(-1), lex(0), lex(1)]),
            join(&[lex(-2), lex(-1), lex(0)]),
            join(&[lex(0), lex(1), lex(2)]),
            join(&[lex(0), some(current.clone())]),
            join(&[lex(0), some(pos_in_word.clone())]),
            join(&[lex(0), some(word.clone())]),
            tag(0),
            tag(-1),
            tag(1),
            join(&[tag(-1), tag(0)]),
            join(&[tag(0), tag(1)]),
            join(&[tag(0), lex(0)]),
            some(prefix(&current, 1)),
            some(prefix(&current, 2)),
            some(prefix(&current, 4)),
            some(suffix(&current, 1)),
            some(suffix(&current, 2)),
            some(suffix(&current, 4)),
            some((!ctx.is_boundary() && ctx.index_in_word == 0).to_string()),
            some((!ctx.is_boundary() && ctx.index_in_word + 1 == ctx.word_len).to_string()),
            some(bucket(position, 15)),
            some(bucket(from_end, 15)),
            some((position % 2).to_string()),
            some((position % 3).to_string()),
            neighbour_surface(-1),
            neighbour_surface(1),
            join(&[some(word.clone()), some(pos_in_word.clone())]),
            some(suffix(&word, 2)),
            some(suffix(&word, 3)),
            some(if ctx.is_boundary() {
                "boundary".to_string()
            } else {
                (ctx.word_len - 1 - ctx.index_in_word).to_string()
            }),
            some(format!("{}|{}", word_len, ctx.index_in_word)),
            some(bucket(current.chars().count(), 6)),
            some(
                lower(&current)
                    .iter()
                    .any(|c| "áéíóúàèìòù".contains(*c))
                    .to_string(),
            ),
            some(shape),
            some(current.to_lowercase()),
            some(bucket(seq.len(), 20)),
            join(&[some(current.clone()), some(pos_in_word.clone())]),
            join(&[some(current.clone()), some(word_len.clone())]),
            some("1".to_string()),
        ]);
    }
    debug_assert!(values.len() == BASIC_COUNT || values.len() == TEMPLATES.len());
    Ok(TEMPLATES
        .iter()
        .zip(values)
        .take(count)
        .filter_map(|(name, value)| value.map(|v| format!("{name}={v}")))
        .collect())
}

pub fn extract(
    seq: &EncodedSequence,
    position: usize,
    feature_set: FeatureSet,
    alphabet: &mut FeatureAlphabet,
) -> Result<FeatureVector> {
    let names = template_features(seq, position, feature_set.template_count())?;
    Ok(alphabet.intern_vector(&names))
}

pub fn extract_basic10(
    seq: &EncodedSequence,
    position: usize,
    alphabet: &mut FeatureAlphabet,
) -> Result<FeatureVector> {
    extract(seq, position, FeatureSet::Basic10, alphabet)
}

/// All 64 templates. Lexical stress and POS come from the sequence's token
/// context, which `encode` fills from the line.
pub fn extract_full64(
    seq: &EncodedSequence,
    position: usize,
    alphabet: &mut FeatureAlphabet,
) -> Result<FeatureVector> {
    extract(seq, position, FeatureSet::Full64, alphabet)
}

/// Feature strings for every position of a sequence.
pub fn sequence_features(seq: &EncodedSequence, feature_set: FeatureSet) -> Vec<Vec<String>> {
    (0..seq.len())
        .map(|i| template_features(seq, i, feature_set.template_count()).expect("position in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, Line, Word};
    use crate::encoding::{encode, Mode};
    use std::collections::HashSet;

    fn the_jungle(with_annotations: bool) -> EncodedSequence {
        let mut the = Word::from_hyphenated("the");
        let mut jungle = Word::from_hyphenated("jun-gle");
        if with_annotations {
            the = the.with_lexical_stress("-".parse().unwrap()).with_pos("DT");
            jungle = jungle.with_lexical_stress("+-".parse().unwrap()).with_pos("NN");
        }
        let line = Line::new("j", Language::En, vec![the, jungle], vec!["-+-".parse().unwrap()]).unwrap();
        encode(&line, Mode::S2s, 0).unwrap()
    }

    fn balloon() -> EncodedSequence {
        let line = Line::new(
            "b",
            Language::En,
            vec![Word::from_hyphenated("bal-loon")],
            vec!["-+".parse().unwrap()],
        )
        .unwrap();
        encode(&line, Mode::S2s, 0).unwrap()
    }

    #[test]
    fn registry_has_64_templates() {
        assert_eq!(TEMPLATES.len(), 64);
        let unique: HashSet<&str> = TEMPLATES.iter().copied().collect();
        assert_eq!(unique.len(), 64);
        let manifest = registry_manifest();
        assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 64);
    }

    #[test]
    fn basic10_on_balloon() {
        let names = template_features(&balloon(), 0, BASIC_COUNT).unwrap();
        assert_eq!(names.len(), 10);
        for expected in [
            "obs[0]=bal",
            "obs[+1]=loon",
            "obs[-1]=<BOS>",
            "word=balloon",
            "pos_in_word=initial",
        ] {
            assert!(names.contains(&expected.to_string()), "{expected}");
        }
    }

    #[test]
    fn single_token_is_padded() {
        let line = Line::new(
            "c",
            Language::En,
            vec![Word::from_hyphenated("cat")],
            vec!["+".parse().unwrap()],
        )
        .unwrap();
        let seq = encode(&line, Mode::S2s, 0).unwrap();
        let names = template_features(&seq, 0, BASIC_COUNT).unwrap();
        for expected in ["obs[-1]=<BOS>", "obs[+1]=<EOS>", "obs[-2]=<BOS>", "obs[+2]=<EOS>"] {
            assert!(names.contains(&expected.to_string()));
        }
    }

    #[test]
    fn out_of_range_position() {
        let mut alphabet = FeatureAlphabet::new();
        assert!(matches!(
            extract_basic10(&balloon(), 2, &mut alphabet),
            Err(Error::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn deterministic_ids() {
        let mut alphabet = FeatureAlphabet::new();
        let a = extract_full64(&balloon(), 1, &mut alphabet).unwrap();
        let b = extract_full64(&balloon(), 1, &mut alphabet).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_pos_omits_tag_templates() {
        let names = template_features(&the_jungle(false), 1, 64).unwrap();
        assert!(names.iter().all(|n| !n.starts_with("tag[")));
        assert!(names.iter().all(|n| !n.starts_with("lex[")));
        assert_eq!(names.len(), 64 - 6 - 13);
    }

    #[test]
    fn full64_hand_enumeration_at_position_1() {
        let names = template_features(&the_jungle(true), 1, 64).unwrap();
        let expected = [
            "obs[0]=jun",
            "obs[-1]=the",
            "obs[+1]=gle",
            "obs[-2]=<BOS>",
            "obs[+2]=<EOS>",
            "word=jungle",
            "pos_in_word=initial",
            "word_len=2",
            "suffix3=jun",
            "prefix3=jun",
            "obs[-1]|obs[0]=the|jun",
            "obs[0]|obs[+1]=jun|gle",
            "obs[-2]|obs[-1]=<BOS>|the",
            "obs[+1]|obs[+2]=gle|<EOS>",
            "obs[-1]|obs[+1]=the|gle",
            "obs[-2]|obs[0]=<BOS>|jun",
            "obs[0]|obs[+2]=jun|<EOS>",
            "obs[-1]|obs[0]|obs[+1]=the|jun|gle",
            "lex[0]=+",
            "lex[-1]=-",
            "lex[+1]=-",
            "lex[-2]=<BOS>",
            "lex[+2]=<EOS>",
            "lex[-1]|lex[0]=-|+",
            "lex[0]|lex[+1]=+|-",
            "lex[-1]|lex[0]|lex[+1]=-|+|-",
            "lex[-2]|lex[-1]|lex[0]=<BOS>|-|+",
            "lex[0]|lex[+1]|lex[+2]=+|-|<EOS>",
            "lex[0]|obs[0]=+|jun",
            "lex[0]|pos_in_word=+|initial",
            "lex[0]|word=+|jungle",
            "tag[0]=NN",
            "tag[-1w]=DT",
            "tag[+1w]=<EOS>",
            "tag[-1w]|tag[0]=DT|NN",
            "tag[0]|tag[+1w]=NN|<EOS>",
            "tag[0]|lex[0]=NN|+",
            "prefix1=j",
            "prefix2=ju",
            "prefix4=jun",
            "suffix1=n",
            "suffix2=un",
            "suffix4=jun",
            "word_initial=true",
            "word_final=false",
            "from_start=1",
            "from_end=1",
            "parity=1",
            "mod3=1",
            "word[-1]=the",
            "word[+1]=<EOS>",
            "word|pos_in_word=jungle|initial",
            "word_suffix2=le",
            "word_suffix3=gle",
            "from_word_end=1",
            "word_len|index_in_word=2|0",
            "obs_len=3",
            "obs_accent=false",
            "obs_shape=CVC",
            "obs_lower=jun",
            "line_len=3",
            "obs[0]|pos_in_word=jun|initial",
            "obs[0]|word_len=jun|2",
            "bias=1",
        ];
        let mut got = names.clone();
        got.sort();
        let mut want: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn basic_is_contained_in_full() {
        let seq = the_jungle(true);
        let mut alphabet = FeatureAlphabet::new();
        for i in 0..seq.len() {
            let basic: HashSet<u32> = extract_basic10(&seq, i, &mut alphabet)
                .unwrap()
                .indices
                .into_iter()
                .collect();
            let full: HashSet<u32> = extract_full64(&seq, i, &mut alphabet)
                .unwrap()
                .indices
                .into_iter()
                .collect();
            assert!(basic.is_subset(&full));
        }
    }

    #[test]
    fn frozen_alphabet_never_grows() {
        let mut alphabet = FeatureAlphabet::new();
        extract_full64(&balloon(), 0, &mut alphabet).unwrap();
        alphabet.freeze();
        let size = alphabet.len();
        let seq = the_jungle(true);
        for i in 0..seq.len() {
            let v = extract_full64(&seq, i, &mut alphabet).unwrap();
            assert!(v.indices.contains(&UNK_ID));
        }
        assert_eq!(alphabet.len(), size);
    }

    #[test]
    fn alphabet_survives_serde() {
        let mut alphabet = FeatureAlphabet::new();
        let v = extract_full64(&balloon(), 0, &mut alphabet).unwrap();
        let json = serde_json::to_string(&alphabet).unwrap();
        let mut back: FeatureAlphabet = serde_json::from_str(&json).unwrap();
        back.reindex();
        let names = template_features(&balloon(), 0, 64).unwrap();
        assert_eq!(back.vector(&names), v);
    }
}
