//! Leave-one-out evaluation, synthetic ground truth and a naive baseline.

mod baseline;
mod loo;
mod synthetic;

use std::collections::BTreeSet;
use std::io::Write;

pub use baseline::NaiveBayes;
pub use loo::{leave_one_out, Dataset, EvalSettings};
pub use synthetic::{generate_synthetic, SyntheticDataset, SyntheticSettings};

use crate::error::Result;
use crate::spectra::ScanId;

/// Identity of an annotation for metric purposes.
pub type AnnotationId = (ScanId, String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub predicted: usize,
    pub approved: usize,
    pub correct: usize,
    /// `None` when nothing was predicted.
    pub accuracy: Option<f64>,
    pub coverage: f64,
}

impl Metrics {
    pub fn f_measure(&self) -> Option<f64> {
        let a = self.accuracy?;
        let sum = a + self.coverage;
        Some(if sum > 0.0 { 2.0 * a * self.coverage / sum } else { 0.0 })
    }
}

/// Accuracy (correct / predicted) and coverage (correct / approved).
pub fn evaluate<'a>(
    predicted: impl IntoIterator<Item = &'a AnnotationId>,
    approved: impl IntoIterator<Item = &'a AnnotationId>,
) -> Metrics {
    let predicted: BTreeSet<&AnnotationId> = predicted.into_iter().collect();
    let approved: BTreeSet<&AnnotationId> = approved.into_iter().collect();
    let correct = predicted.intersection(&approved).count();
    Metrics {
        predicted: predicted.len(),
        approved: approved.len(),
        correct,
        accuracy: (!predicted.is_empty()).then(|| correct as f64 / predicted.len() as f64),
        coverage: if approved.is_empty() { 0.0 } else { correct as f64 / approved.len() as f64 },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    /// Index of the held-out dataset.
    pub held_out: usize,
    pub metrics: Metrics,
    pub baseline: Metrics,
    pub train_ms: f64,
    pub classify_ms: f64,
    /// Archive records available for training in this fold.
    pub training_records: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationReport {
    pub folds: Vec<FoldReport>,
    /// Held-out datasets skipped, with the reason.
    pub skipped: Vec<(usize, String)>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvaluationReport {
    pub fn fold_count(&self) -> usize {
        self.folds.len()
    }

    pub fn accuracy(&self) -> Option<f64> {
        mean(self.folds.iter().filter_map(|f| f.metrics.accuracy))
    }

    pub fn coverage(&self) -> Option<f64> {
        mean(self.folds.iter().map(|f| f.metrics.coverage))
    }

    pub fn baseline_accuracy(&self) -> Option<f64> {
        mean(self.folds.iter().filter_map(|f| f.baseline.accuracy))
    }

    pub fn baseline_coverage(&self) -> Option<f64> {
        mean(self.folds.iter().map(|f| f.baseline.coverage))
    }

    pub fn write_text<W: Write>(&self, out: &mut W) -> Result<()> {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "folds {}", self.fold_count())?;
        writeln!(out, "accuracy {}", show(self.accuracy()))?;
        writeln!(out, "coverage {}", show(self.coverage()))?;
        writeln!(out, "baseline_accuracy {}", show(self.baseline_accuracy()))?;
        writeln!(out, "baseline_coverage {}", show(self.baseline_coverage()))?;
        for (idx, reason) in &self.skipped {
            writeln!(out, "skipped {idx} {reason}")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "held_out,predicted,approved,correct,accuracy,coverage,f_measure,baseline_accuracy,baseline_coverage,baseline_f_measure,train_ms,classify_ms,training_records"
        )?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for f in &self.folds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{}",
                f.held_out,
                f.metrics.predicted,
                f.metrics.approved,
                f.metrics.correct,
                opt(f.metrics.accuracy),
                f.metrics.coverage,
                opt(f.metrics.f_measure()),
                opt(f.baseline.accuracy),
                f.baseline.coverage,
                opt(f.baseline.f_measure()),
                f.train_ms,
                f.classify_ms,
                f.training_records
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(items: &[(u64, &str)]) -> Vec<AnnotationId> {
        items.iter().map(|(s, g)| (*s, g.to_string())).collect()
    }

    #[test]
    fn metric_examples() {
        let approved = ids(&[(1, "G1"), (2, "G2")]);
        let m = evaluate(&approved, &approved);
        assert_eq!((m.accuracy, m.coverage), (Some(1.0), 1.0));
        let more = ids(&[(1, "G1"), (2, "G2"), (3, "G3")]);
        let m = evaluate(&more, &approved);
        assert_eq!((m.accuracy, m.coverage), (Some(2.0 / 3.0), 1.0));
        let m = evaluate(&ids(&[(9, "G9")]), &approved);
        assert_eq!((m.accuracy, m.coverage), (Some(0.0), 0.0));
        let m = evaluate(&[], &approved);
        assert_eq!((m.accuracy, m.coverage), (None, 0.0));
    }
}
