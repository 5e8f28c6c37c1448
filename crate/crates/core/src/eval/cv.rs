use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{aggregate, fold_report, score_line, EvalReport, LineScore};
use crate::corpus::{Corpus, Line, StressLabel};
use crate::error::{Error, Result};

/// A trained model that predicts a stress sequence for a line.
pub trait Tagger: Send + Sync {
    fn predict(&self, line: &Line) -> Result<Vec<StressLabel>>;
}

/// Something that can fit a [`Tagger`] on training lines.
pub trait Trainer: Sync {
    fn train(&self, lines: &[Line], seed: u64) -> Result<Box<dyn Tagger>>;
}

/// Sizes of `folds` contiguous blocks covering `n` items; the first
/// `n % folds` blocks get one extra item.
pub fn fold_sizes(n: usize, folds: usize) -> Vec<usize> {
    (0..folds)
        .map(|k| n / folds + usize::from(k < n % folds))
        .collect()
}

/// A seeded shuffle of line indices cut into contiguous folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub order: Vec<usize>,
    pub ranges: Vec<Range<usize>>,
}

impl FoldPlan {
    pub fn new(n: usize, folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 {
            return Err(Error::Precondition(format!("need at least 2 folds, got {folds}")));
        }
        if n < folds {
            return Err(Error::Precondition(format!(
                "corpus has {n} lines, fewer than {folds} folds"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut start = 0;
        let ranges = fold_sizes(n, folds)
            .into_iter()
            .map(|size| {
                let r = start..start + size;
                start += size;
                r
            })
            .collect();
        Ok(FoldPlan { order, ranges })
    }

    pub fn folds(&self) -> usize {
        self.ranges.len()
    }

    pub fn test(&self, fold: usize) -> &[usize] {
        &self.order[self.ranges[fold].clone()]
    }

    pub fn train(&self, fold: usize) -> Vec<usize> {
        let r = &self.ranges[fold];
        self.order[..r.start]
            .iter()
            .chain(&self.order[r.end..])
            .copied()
            .collect()
    }
}

/// K-fold cross-validation. Folds run in parallel; fold `k` trains with seed
/// `seed + k`. Accuracies are pooled over all lines and also reported per fold.
pub fn cross_validate(corpus: &Corpus, trainer: &dyn Trainer, folds: usize, seed: u64) -> Result<EvalReport> {
    let plan = FoldPlan::new(corpus.len(), folds, seed)?;
    let per_fold: Vec<Vec<LineScore>> = (0..plan.folds())
        .into_par_iter()
        .map(|k| {
            let train: Vec<Line> = plan
                .train(k)
                .into_iter()
                .map(|i| corpus.lines[i].clone())
                .collect();
            let model = trainer.train(&train, seed.wrapping_add(k as u64))?;
            plan.test(k)
                .iter()
                .map(|&i| {
                    let line = &corpus.lines[i];
                    let pred = model.predict(line)?;
                    score_line(&line.id, &pred, &line.gold)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<LineScore> = per_fold.iter().flatten().cloned().collect();
    let mut report = aggregate(&pooled)?;
    report.per_fold = per_fold
        .iter()
        .enumerate()
        .map(|(k, scores)| fold_report(k, scores))
        .collect();
    Ok(report)
}

/// Replays the first gold reference of whatever line it is asked about.
pub struct OracleTrainer;

struct Oracle;

impl Tagger for Oracle {
    fn predict(&self, line: &Line) -> Result<Vec<StressLabel>> {
        Ok(line.gold[0].0.clone())
    }
}

impl Trainer for OracleTrainer {
    fn train(&self, _lines: &[Line], _seed: u64) -> Result<Box<dyn Tagger>> {
        Ok(Box::new(Oracle))
    }
}

/// Predicts the most frequent training label at every position.
pub struct MajorityTrainer;

struct Majority(StressLabel);

impl Tagger for Majority {
    fn predict(&self, line: &Line) -> Result<Vec<StressLabel>> {
        Ok(vec![self.0; line.segment_count()])
    }
}

impl Trainer for MajorityTrainer {
    fn train(&self, lines: &[Line], _seed: u64) -> Result<Box<dyn Tagger>> {
        let stressed = lines
            .iter()
            .flat_map(|l| l.gold[0].labels())
            .filter(|&&s| s == StressLabel::Stressed)
            .count();
        let total: usize = lines.iter().map(|l| l.gold[0].len()).sum();
        let label = if 2 * stressed >= total {
            StressLabel::Stressed
        } else {
            StressLabel::Unstressed
        };
        Ok(Box::new(Majority(label)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, MeterSpec};
    use std::collections::HashSet;
    use std::sync::Mutex;

    #[test]
    fn partition_arithmetic() {
        assert_eq!(fold_sizes(100, 10), vec![10; 10]);
        assert_eq!(fold_sizes(23, 5), vec![5, 5, 5, 4, 4]);
        let plan = FoldPlan::new(103, 10, 7).unwrap();
        let mut seen = HashSet::new();
        for k in 0..10 {
            for &i in plan.test(k) {
                assert!(seen.insert(i));
            }
            assert_eq!(plan.train(k).len() + plan.test(k).len(), 103);
        }
        assert_eq!(seen.len(), 103);
        assert!(FoldPlan::new(5, 1, 0).is_err());
        assert!(FoldPlan::new(3, 4, 0).is_err());
    }

    #[test]
    fn oracle_and_majority_baselines() {
        let corpus = generate_synthetic(MeterSpec::iambic_pentameter(), 100, 0.0, 3).unwrap();
        let r = cross_validate(&corpus, &OracleTrainer, 10, 1).unwrap();
        assert_eq!((r.per_syllable_accuracy, r.per_line_accuracy), (100.0, 100.0));
        assert_eq!(r.per_fold.iter().map(|f| f.lines).sum::<usize>(), 100);
        let r = cross_validate(&corpus, &MajorityTrainer, 10, 1).unwrap();
        assert!((r.per_syllable_accuracy - 50.0).abs() <= 2.0);
        assert_eq!(r.per_line_accuracy, 0.0);
    }

    struct Recording {
        seen: Mutex<Vec<HashSet<String>>>,
    }

    struct Checker(HashSet<String>);

    impl Tagger for Checker {
        fn predict(&self, line: &Line) -> Result<Vec<StressLabel>> {
            assert!(!self.0.contains(&line.id), "{} was in training", line.id);
            Ok(line.gold[0].0.clone())
        }
    }

    impl Trainer for Recording {
        fn train(&self, lines: &[Line], _seed: u64) -> Result<Box<dyn Tagger>> {
            let ids: HashSet<String> = lines.iter().map(|l| l.id.clone()).collect();
            self.seen.lock().unwrap().push(ids.clone());
            Ok(Box::new(Checker(ids)))
        }
    }

    #[test]
    fn evaluation_never_sees_training_lines() {
        let corpus = generate_synthetic(MeterSpec::iambic_pentameter(), 37, 0.0, 5).unwrap();
        let trainer = Recording {
            seen: Mutex::new(Vec::new()),
        };
        let a = cross_validate(&corpus, &trainer, 4, 11).unwrap();
        assert_eq!(trainer.seen.lock().unwrap().len(), 4);
        let b = cross_validate(&corpus, &trainer, 4, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
