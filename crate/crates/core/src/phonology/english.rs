//! English syllabification: vowel-group nuclei, silent-e handling and
//! legal-onset maximization, with a small exception list.

const LEGAL_ONSETS: &[&str] = &[
    "bl", "br", "cl", "cr", "dr", "fl", "fr", "gl", "gr", "pl", "pr", "sc", "sk", "sl", "sm", "sn", "sp",
    "st", "sw", "tr", "tw", "dw", "kw", "qu", "ch", "sh", "th", "ph", "wh", "str", "spr", "scr", "spl",
    "squ", "thr", "shr", "sch", "chr", "phr", "sph",
];

const EXCEPTIONS: &[(&str, &str)] = &[
    ("above", "a-bove"),
    ("being", "be-ing"),
    ("beloved", "be-lov-ed"),
    ("create", "cre-ate"),
    ("every", "ev-ery"),
    ("eyes", "eyes"),
    ("fire", "fire"),
    ("flower", "flow-er"),
    ("heaven", "heav-en"),
    ("hour", "hour"),
    ("idea", "i-de-a"),
    ("many", "ma-ny"),
    ("people", "peo-ple"),
    ("poem", "po-em"),
    ("poet", "po-et"),
    ("power", "pow-er"),
    ("quiet", "qui-et"),
    ("science", "sci-ence"),
];

const HIATUS: &[&str] = &["ia", "io", "iu", "ua", "uo"];

fn is_vowel_letter(c: char) -> bool {
    matches!(
        c,
        'a' | 'e'
            | 'i'
            | 'o'
            | 'u'
            | 'à'
            | 'á'
            | 'â'
            | 'ä'
            | 'è'
            | 'é'
            | 'ê'
            | 'ë'
            | 'ì'
            | 'í'
            | 'î'
            | 'ï'
            | 'ò'
            | 'ó'
            | 'ô'
            | 'ö'
            | 'ù'
            | 'ú'
            | 'û'
            | 'ü'
    )
}

/// Marks which letters act as vowels.
fn vowel_mask(lower: &[char]) -> Vec<bool> {
    let n = lower.len();
    let mut mask = vec![false; n];
    for i in 0..n {
        let c = lower[i];
        mask[i] = if c == 'y' {
            let next_is_vowel = i + 1 < n && is_vowel_letter(lower[i + 1]);
            i > 0 && !next_is_vowel
        } else if c == 'u' && i > 0 && lower[i - 1] == 'q' {
            false
        } else {
            is_vowel_letter(c)
        };
    }
    // silent endings need another nucleus earlier in the word
    let has_vowel_before = |end: usize, mask: &[bool]| mask[..end].iter().any(|&v| v);
    if n >= 2 && lower[n - 1] == 'e' && !mask[n - 2] && has_vowel_before(n - 2, &mask) {
        let syllabic_le = n >= 3 && lower[n - 2] == 'l' && !mask[n - 3] && lower[n - 3] != 'l';
        if !syllabic_le {
            mask[n - 1] = false;
        }
    }
    if n >= 3 && lower[n - 2] == 'e' && !mask[n - 3] && has_vowel_before(n - 3, &mask) {
        let last = lower[n - 1];
        let before = lower[n - 3];
        let silent = match last {
            's' => !matches!(before, 's' | 'x' | 'z' | 'c' | 'g' | 'h'),
            'd' => !matches!(before, 't' | 'd'),
            _ => false,
        };
        if silent {
            mask[n - 2] = false;
        }
    }
    mask
}

/// Groups vowel letters into nuclei, returning `(start, end)` spans.
fn nuclei(lower: &[char], mask: &[bool]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        if !mask[i] {
            i += 1;
            continue;
        }
        let mut start = i;
        let mut j = i + 1;
        while j < lower.len() && mask[j] {
            let pair: String = [lower[j - 1], lower[j]].iter().collect();
            if HIATUS.contains(&pair.as_str()) {
                spans.push((start, j));
                start = j;
            }
            j += 1;
        }
        spans.push((start, j));
        i = j;
    }
    spans
}

/// Offset inside the consonant cluster `cluster` where the next syllable starts.
fn split_cluster(cluster: &[char], final_le: bool) -> usize {
    let k = cluster.len();
    if k == 0 {
        return 0;
    }
    if final_le && k >= 2 && cluster[k - 1] == 'l' {
        return k - 2;
    }
    // doubled consonants split between the pair
    for i in (1..k).rev() {
        if cluster[i] == cluster[i - 1] && cluster[i] != '\'' {
            return i;
        }
    }
    if k >= 2 && cluster[k - 2] == 'c' && cluster[k - 1] == 'k' {
        return k;
    }
    let mut best = k - 1;
    for start in (0..k).rev() {
        let candidate: String = cluster[start..].iter().collect();
        if start == k - 1 || LEGAL_ONSETS.contains(&candidate.as_str()) {
            best = start;
        }
    }
    if cluster[best] == '\'' {
        best += 1;
    }
    best.min(k)
}

fn exception(lower: &str) -> Option<Vec<usize>> {
    EXCEPTIONS
        .iter()
        .find(|(word, _)| *word == lower)
        .map(|(_, form)| form.split('-').map(|s| s.chars().count()).collect())
}

/// Syllable lengths (in chars) for a lowercase English word.
pub(super) fn syllable_lengths(lower: &[char]) -> Vec<usize> {
    let word: String = lower.iter().collect();
    if let Some(lengths) = exception(&word) {
        return lengths;
    }
    let mask = vowel_mask(lower);
    let spans = nuclei(lower, &mask);
    if spans.len() <= 1 {
        return vec![lower.len()];
    }
    let mut boundaries = Vec::with_capacity(spans.len() - 1);
    for w in spans.windows(2) {
        let (_, prev_end) = w[0];
        let (next_start, next_end) = w[1];
        let cluster = &lower[prev_end..next_start];
        let final_le = next_end == lower.len() && next_start + 1 == lower.len() && lower[next_start] == 'e';
        boundaries.push(prev_end + split_cluster(cluster, final_le));
    }
    let mut lengths = Vec::with_capacity(spans.len());
    let mut last = 0;
    for b in boundaries {
        lengths.push(b - last);
        last = b;
    }
    lengths.push(lower.len() - last);
    lengths.retain(|&l| l > 0);
    lengths
}

#[cfg(test)]
mod tests {
    use super::super::syllabify;
    use crate::corpus::Language;

    fn hyph(word: &str) -> String {
        syllabify(word, Language::En).unwrap().join("-")
    }

    #[test]
    fn foot_examples() {
        assert_eq!(hyph("balloon"), "bal-loon");
        assert_eq!(hyph("jungle"), "jun-gle");
        assert_eq!(hyph("accident"), "ac-ci-dent");
        assert_eq!(hyph("comprehend"), "com-pre-hend");
    }

    #[test]
    fn monosyllables() {
        for w in [
            "I", "don't", "like", "to", "brag", "and", "boast", "change", "thought", "the",
        ] {
            assert_eq!(hyph(w), w, "{w}");
        }
    }

    #[test]
    fn assorted_words() {
        assert_eq!(hyph("little"), "lit-tle");
        assert_eq!(hyph("table"), "ta-ble");
        assert_eq!(hyph("wilt"), "wilt");
        assert_eq!(hyph("jaws"), "jaws");
        assert_eq!(hyph("beloved"), "be-lov-ed");
        assert_eq!(hyph("Gloria"), "Glo-ri-a");
        assert_eq!(hyph("loved"), "loved");
        assert_eq!(hyph("wanted"), "wan-ted");
    }
}
