//! Scoring predictions against (possibly several) gold references.

mod cv;
mod stats;

use serde::{Deserialize, Serialize};

use crate::corpus::{StressLabel, StressPattern};
use crate::error::{Error, Result};

pub use cv::{cross_validate, fold_sizes, FoldPlan, MajorityTrainer, OracleTrainer, Tagger, Trainer};
pub use stats::{
    histogram_csv, ln_gamma, regularized_incomplete_beta, student_t_two_sided, syllable_length_stats,
    welch_t_test, WelchResult,
};

/// Unit-cost edit distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut row = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            row[j + 1] = substitute.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineScore {
    pub id: String,
    pub errors: usize,
    pub ref_len: usize,
    pub pred_len: usize,
    pub exact: bool,
}

impl LineScore {
    /// Per-syllable denominator.
    pub fn length(&self) -> usize {
        self.pred_len.max(self.ref_len)
    }
}

/// Distance to the closest reference. Among equally close references the
/// longest one supplies `ref_len`.
pub fn score_line(id: &str, pred: &[StressLabel], gold: &[StressPattern]) -> Result<LineScore> {
    let mut best: Option<(usize, usize)> = None;
    for reference in gold {
        let d = levenshtein(pred, reference.labels());
        let better = match best {
            None => true,
            Some((e, len)) => d < e || (d == e && reference.len() > len),
        };
        if better {
            best = Some((d, reference.len()));
        }
    }
    let (errors, ref_len) = best.ok_or_else(|| Error::Precondition(format!("line {id} has no reference")))?;
    Ok(LineScore {
        id: id.to_string(),
        errors,
        ref_len,
        pred_len: pred.len(),
        exact: errors == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub lines: usize,
    pub per_syllable_accuracy: f64,
    pub per_line_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_syllable_accuracy: f64,
    pub per_line_accuracy: f64,
    pub per_fold: Vec<FoldReport>,
    pub total_syllables: usize,
    pub total_lines: usize,
}

fn accuracies(scores: &[LineScore]) -> (f64, f64) {
    let errors: usize = scores.iter().map(|s| s.errors).sum();
    let length: usize = scores.iter().map(LineScore::length).sum();
    let exact = scores.iter().filter(|s| s.exact).count();
    let per_syllable = if length == 0 {
        100.0
    } else {
        100.0 * (1.0 - errors as f64 / length as f64)
    };
    (per_syllable, 100.0 * exact as f64 / scores.len() as f64)
}

/// Pools line scores into corpus-level accuracies.
pub fn aggregate(scores: &[LineScore]) -> Result<EvalReport> {
    if scores.is_empty() {
        return Err(Error::Precondition("nothing to aggregate".into()));
    }
    let (per_syllable_accuracy, per_line_accuracy) = accuracies(scores);
    Ok(EvalReport {
        per_syllable_accuracy,
        per_line_accuracy,
        per_fold: Vec::new(),
        total_syllables: scores.iter().map(|s| s.ref_len).sum(),
        total_lines: scores.len(),
    })
}

pub(crate) fn fold_report(fold: usize, scores: &[LineScore]) -> FoldReport {
    let (per_syllable_accuracy, per_line_accuracy) = accuracies(scores);
    FoldReport {
        fold,
        lines: scores.len(),
        per_syllable_accuracy,
        per_line_accuracy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Vec<StressLabel> {
        s.parse::<StressPattern>().unwrap().0
    }

    fn pat(s: &str) -> StressPattern {
        s.parse().unwrap()
    }

    #[test]
    fn hand_cases() {
        assert_eq!(levenshtein(&p("+-+-"), &p("+-+-")), 0);
        assert_eq!(levenshtein(&p(""), &p("-+")), 2);
        assert_eq!(levenshtein(&p("+-+-"), &p("+-+")), 1);
        assert_eq!(levenshtein(&p("++--"), &p("--++")), 4);
        assert_eq!(levenshtein(&p("-+-"), &p("+-+")), 2);
    }

    #[test]
    fn multi_reference_scoring() {
        let s = score_line("a", &p("+--"), &[pat("-+-"), pat("+--")]).unwrap();
        assert_eq!((s.errors, s.ref_len, s.exact), (0, 3, true));
        let s = score_line("b", &p("-+-+-+-+-+-"), &[pat("-+-+-+-+-+")]).unwrap();
        assert_eq!((s.errors, s.ref_len, s.exact), (1, 10, false));
        let s = score_line("c", &[], &[pat("-+-+")]).unwrap();
        assert_eq!(s.errors, 4);
        // equal distance: the longer reference wins
        let s = score_line("d", &p("-+"), &[pat("-"), pat("-+-")]).unwrap();
        assert_eq!((s.errors, s.ref_len), (1, 3));
        assert!(score_line("e", &p("-"), &[]).is_err());
    }

    #[test]
    fn aggregate_arithmetic() {
        let gold = pat("-+-+-+-+-+");
        let mut scores: Vec<LineScore> = (0..10)
            .map(|i| score_line(&i.to_string(), gold.labels(), std::slice::from_ref(&gold)).unwrap())
            .collect();
        let r = aggregate(&scores).unwrap();
        assert_eq!((r.per_syllable_accuracy, r.per_line_accuracy), (100.0, 100.0));
        scores[3] = score_line("3", &p("++-+-+-+-+"), std::slice::from_ref(&gold)).unwrap();
        let r = aggregate(&scores).unwrap();
        assert!((r.per_syllable_accuracy - 99.0).abs() < 1e-12);
        assert!((r.per_line_accuracy - 90.0).abs() < 1e-12);
        assert_eq!(r.total_syllables, 100);
        assert!(aggregate(&[]).is_err());
    }

    fn labels() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(0u8..3, 0..12)
    }

    proptest! {
        #[test]
        fn metric_axioms(a in labels(), b in labels(), c in labels()) {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(levenshtein(&a, &a), 0);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
            prop_assert!(ab <= a.len().max(b.len()));
        }

        #[test]
        fn perfect_lines_imply_perfect_syllables(lines in prop::collection::vec((labels(), labels()), 1..8)) {
            let scores: Vec<LineScore> = lines
                .iter()
                .enumerate()
                .map(|(i, (pred, gold))| {
                    let to = |v: &Vec<u8>| StressPattern(v.iter().map(|&x| if x == 0 { StressLabel::Stressed } else { StressLabel::Unstressed }).collect());
                    score_line(&i.to_string(), to(pred).labels(), &[to(gold)]).unwrap()
                })
                .collect();
            let r = aggregate(&scores).unwrap();
            prop_assert!((0.0..=100.0).contains(&r.per_syllable_accuracy));
            prop_assert!((0.0..=100.0).contains(&r.per_line_accuracy));
            if r.per_line_accuracy == 100.0 {
                prop_assert_eq!(r.per_syllable_accuracy, 100.0);
            }
        }
    }
}
