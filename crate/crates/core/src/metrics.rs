//! Macro F1 and a brute-force k-nearest-neighbour classifier over event
//! images.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::threshold::TernaryEventImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    /// Row-major, rows = true class, columns = predicted class.
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_labels(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: pred.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::InvalidArgument("no samples to score".into()));
        }
        let mut m = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(pred) {
            for label in [t, p] {
                if label >= n_classes {
                    return Err(Error::LabelOutOfRange { label, n_classes });
                }
            }
            m.counts[t * n_classes + p] += 1;
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.get(class, class)
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.n_classes)
            .filter(|&t| t != class)
            .map(|t| self.get(t, class))
            .sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.n_classes)
            .filter(|&p| p != class)
            .map(|p| self.get(class, p))
            .sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.n_classes).map(|c| self.get(c, c)).sum();
        correct as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub per_class: Vec<ClassScore>,
    pub macro_f1: f64,
}

/// `num / den`, with `0 / 0` taken as 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl F1Report {
    pub fn from_confusion(m: &ConfusionMatrix) -> Self {
        let per_class: Vec<ClassScore> = (0..m.n_classes())
            .map(|c| {
                let tp = m.true_positives(c) as f64;
                let precision = ratio(tp, tp + m.false_positives(c) as f64);
                let recall = ratio(tp, tp + m.false_negatives(c) as f64);
                ClassScore {
                    precision,
                    recall,
                    f1: ratio(2.0 * precision * recall, precision + recall),
                    support: m.true_positives(c) + m.false_negatives(c),
                }
            })
            .collect();
        let macro_f1 = if per_class.is_empty() {
            0.0
        } else {
            per_class.iter().map(|s| s.f1).sum::<f64>() / per_class.len() as f64
        };
        Self { per_class, macro_f1 }
    }

    /// Comma-separated per-class rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,precision,recall,f1,support\n");
        for (c, score) in self.per_class.iter().enumerate() {
            let _ = writeln!(
                s,
                "{c},{},{},{},{}",
                score.precision, score.recall, score.f1, score.support
            );
        }
        s
    }
}

/// Macro-averaged F1 over all `n_classes`, including classes absent from
/// both label lists (which score 0).
pub fn macro_f1(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<F1Report> {
    let m = ConfusionMatrix::from_labels(truth, pred, n_classes)?;
    Ok(F1Report::from_confusion(&m))
}

/// Per-pixel cost between event images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    /// Every mismatch costs 1.
    #[default]
    Hamming,
    /// ON vs OFF costs 2, any other mismatch 1.
    Graded,
}

pub fn distance(a: &TernaryEventImage, b: &TernaryEventImage, metric: DistanceMetric) -> Result<u64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch {
            expected: (a.width(), a.height()),
            actual: (b.width(), b.height()),
        });
    }
    let d = a
        .events()
        .iter()
        .zip(b.events())
        .map(|(&x, &y)| match metric {
            DistanceMetric::Hamming => u64::from(x != y),
            DistanceMetric::Graded => u64::from((x as i8 - y as i8).unsigned_abs()),
        })
        .sum();
    Ok(d)
}

pub const DEFAULT_K: usize = 5;

/// Majority class among the `k` nearest training images.
///
/// Distance ties keep the earlier training sample; vote ties go to the
/// smallest class id.
pub fn knn_predict(
    train: &[(TernaryEventImage, usize)],
    query: &TernaryEventImage,
    k: usize,
    metric: DistanceMetric,
) -> Result<usize> {
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in [1, {}]",
            train.len()
        )));
    }
    let mut dists = train
        .iter()
        .enumerate()
        .map(|(i, (img, _))| distance(img, query, metric).map(|d| (d, i)))
        .collect::<Result<Vec<_>>>()?;
    if k < dists.len() {
        dists.select_nth_unstable(k - 1);
        dists.truncate(k);
    }
    let mut votes: Vec<(usize, usize)> = Vec::new();
    for &(_, i) in &dists {
        let class = train[i].1;
        match votes.iter_mut().find(|(c, _)| *c == class) {
            Some(entry) => entry.1 += 1,
            None => votes.push((class, 1)),
        }
    }
    let best = votes
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .expect("k >= 1");
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<usize>,
    pub report: F1Report,
    pub accuracy: f64,
}

impl Evaluation {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples: {}", self.predictions.len());
        let _ = writeln!(s, "accuracy: {:.6}", self.accuracy);
        let _ = writeln!(s, "macro_f1: {:.6}", self.report.macro_f1);
        for (c, score) in self.report.per_class.iter().enumerate() {
            let _ = writeln!(
                s,
                "class {c:2}: precision {:.4} recall {:.4} f1 {:.4} support {}",
                score.precision, score.recall, score.f1, score.support
            );
        }
        s
    }
}

/// Scores every test sample with [`knn_predict`]; test samples are scored on
/// the current rayon pool, results kept in input order.
pub fn evaluate(
    train: &[(TernaryEventImage, usize)],
    test: &[(TernaryEventImage, usize)],
    k: usize,
    n_classes: usize,
    metric: DistanceMetric,
) -> Result<Evaluation> {
    let predictions = test
        .par_iter()
        .map(|(img, _)| knn_predict(train, img, k, metric))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<usize> = test.iter().map(|(_, c)| *c).collect();
    let m = ConfusionMatrix::from_labels(&truth, &predictions, n_classes)?;
    Ok(Evaluation {
        report: F1Report::from_confusion(&m),
        accuracy: m.accuracy(),
        predictions,
    })
}
