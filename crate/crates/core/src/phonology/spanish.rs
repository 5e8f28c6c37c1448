//! Spanish orthographic syllabification and accentuation rules.

use crate::corpus::StressLabel;

/// Consonant pairs that always share an onset.
const INSEPARABLE: &[&str] = &[
    "pl", "bl", "fl", "cl", "gl", "kl", "pr", "br", "fr", "cr", "gr", "kr", "tr", "dr",
];

/// Unstressed function words (closed list).
pub(super) const FUNCTION_WORDS: &[&str] = &[
    "a", "al", "aunque", "como", "con", "cual", "cuando", "de", "del", "donde", "e", "el", "en", "entre",
    "hasta", "la", "las", "le", "les", "lo", "los", "me", "mi", "mis", "mas", "ni", "no", "nos", "o", "os",
    "para", "pero", "por", "pues", "que", "se", "si", "sin", "so", "sobre", "su", "sus", "tan", "te", "tras",
    "tu", "tus", "u", "un", "una", "unas", "unos", "y",
];

pub(super) fn is_strong(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'o' | 'á' | 'é' | 'ó' | 'í' | 'ú')
}

pub(super) fn is_vowel(c: char) -> bool {
    is_strong(c) || matches!(c, 'i' | 'u' | 'ü')
}

fn is_accented(c: char) -> bool {
    matches!(c, 'á' | 'é' | 'í' | 'ó' | 'ú')
}

fn vowel_mask(lower: &[char]) -> Vec<bool> {
    let n = lower.len();
    (0..n)
        .map(|i| {
            let c = lower[i];
            match c {
                'y' => {
                    // vowel alone, word-finally or before a consonant
                    let next_vowel = i + 1 < n && is_vowel(lower[i + 1]);
                    n == 1 || (!next_vowel && i > 0)
                }
                'u' if i > 0 && i + 1 < n => {
                    // silent u in que/qui/gue/gui
                    let prev = lower[i - 1];
                    let next = lower[i + 1];
                    !(prev == 'q' || (prev == 'g' && matches!(next, 'e' | 'i' | 'é' | 'í')))
                }
                _ => is_vowel(c),
            }
        })
        .collect()
}

/// Splits the consonant cluster between two nuclei; returns the offset where
/// the following syllable starts.
fn split_cluster(cluster: &[char]) -> usize {
    // ch, ll, rr are single units
    let mut units: Vec<(usize, String)> = Vec::new();
    let mut i = 0;
    while i < cluster.len() {
        if i + 1 < cluster.len() {
            let pair: String = cluster[i..i + 2].iter().collect();
            if matches!(pair.as_str(), "ch" | "ll" | "rr") {
                units.push((i, pair));
                i += 2;
                continue;
            }
        }
        units.push((i, cluster[i].to_string()));
        i += 1;
    }
    let k = units.len();
    match k {
        0 => 0,
        1 => units[0].0,
        _ => {
            let tail = format!("{}{}", units[k - 2].1, units[k - 1].1);
            if INSEPARABLE.contains(&tail.as_str()) {
                units[k - 2].0
            } else {
                units[k - 1].0
            }
        }
    }
}

/// Syllable lengths (in chars) for a lowercase Spanish word.
pub(super) fn syllable_lengths(lower: &[char]) -> Vec<usize> {
    let mask = vowel_mask(lower);
    // nuclei with hiatus splitting between two strong vowels
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        if !mask[i] {
            i += 1;
            continue;
        }
        let mut start = i;
        let mut j = i + 1;
        while j < lower.len() && mask[j] {
            if is_strong(lower[j - 1]) && is_strong(lower[j]) {
                spans.push((start, j));
                start = j;
            }
            j += 1;
        }
        spans.push((start, j));
        i = j;
    }
    if spans.len() <= 1 {
        return vec![lower.len()];
    }
    let mut lengths = Vec::with_capacity(spans.len());
    let mut last = 0;
    for w in spans.windows(2) {
        let (_, prev_end) = w[0];
        let (next_start, _) = w[1];
        let boundary = prev_end + split_cluster(&lower[prev_end..next_start]);
        lengths.push(boundary - last);
        last = boundary;
    }
    lengths.push(lower.len() - last);
    lengths
}

/// Stress by the written-accent and aguda/llana rules.
pub(super) fn accent_rule(syllables: &[String]) -> Vec<StressLabel> {
    let n = syllables.len();
    let accented = syllables
        .iter()
        .position(|s| s.chars().flat_map(char::to_lowercase).any(is_accented));
    let stressed = accented.unwrap_or_else(|| {
        let last = syllables
            .last()
            .and_then(|s| s.chars().last())
            .map(|c| c.to_lowercase().next().unwrap_or(c))
            .unwrap_or('a');
        let llana = is_vowel(last) || last == 'n' || last == 's';
        if llana && n >= 2 {
            n - 2
        } else {
            n - 1
        }
    });
    (0..n)
        .map(|k| {
            if k == stressed {
                StressLabel::Stressed
            } else {
                StressLabel::Unstressed
            }
        })
        .collect()
}
