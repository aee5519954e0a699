use std::collections::{BTreeMap, BTreeSet};

use crate::ion::MzTolerance;
use crate::sage::{label_glycan, label_mz, FeatureSet, TrainingExample};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default)]
struct ClassCounts {
    examples: u64,
    features: BTreeMap<String, u64>,
}

/// Bernoulli naive Bayes over (root, level-1 feature) presence counts with
/// add-one smoothing. Classes are root labels; ranking is per glycan.
#[derive(Debug, Clone, Default)]
pub struct NaiveBayes {
    classes: BTreeMap<String, ClassCounts>,
    total: u64,
}

impl NaiveBayes {
    pub fn train(examples: &[TrainingExample]) -> Self {
        let mut model = Self::default();
        for e in examples.iter().filter(|e| e.level == 0) {
            let class = model.classes.entry(e.precursor.clone()).or_default();
            class.examples += 1;
            for f in &e.features {
                *class.features.entry(f.clone()).or_insert(0) += 1;
            }
            model.total += 1;
        }
        model
    }

    fn log_score(&self, class: &ClassCounts, features: &BTreeSet<&str>) -> f64 {
        let n = class.examples as f64;
        let prior = (n / self.total as f64).ln();
        features.iter().fold(prior, |acc, f| {
            let count = class.features.get(*f).copied().unwrap_or(0) as f64;
            acc + ((count + 1.0) / (n + 2.0)).ln()
        })
    }

    /// Same contract as graph classification: roots gated by precursor m/z,
    /// best root per glycan, normalised posteriors sorted descending with a
    /// glycan-id tie-break, truncated to `k`.
    pub fn classify<T: Scalar>(
        &self,
        precursor_mz: T,
        features: &FeatureSet,
        tolerance: &MzTolerance<T>,
        bucket_width: T,
        k: Option<usize>,
    ) -> Vec<(String, T)> {
        let observed: BTreeSet<&str> =
            features.levels.get(&1).map(|l| l.keys().map(String::as_str).collect()).unwrap_or_default();
        let half_bucket = bucket_width.as_f64() / 2.0;
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for (root, class) in &self.classes {
            let (Some(glycan), Some(mz)) = (label_glycan(root), label_mz(root)) else { continue };
            if (precursor_mz.as_f64() - mz).abs() > tolerance.half_width(T::lit(mz)).as_f64() + half_bucket {
                continue;
            }
            let s = self.log_score(class, &observed);
            best.entry(glycan).and_modify(|b| *b = b.max(s)).or_insert(s);
        }
        let top = best.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = best.values().map(|s| (s - top).exp()).sum();
        let mut ranked: Vec<(String, T)> =
            best.into_iter().map(|(g, s)| (g.to_string(), T::lit((s - top).exp() / norm))).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
        if let Some(k) = k {
            ranked.truncate(k);
        }
        ranked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(root: &str, features: &[&str]) -> TrainingExample {
        TrainingExample {
            scan_id: 0,
            level: 0,
            precursor: root.to_string(),
            parent: None,
            features: features.iter().map(|f| f.to_string()).collect(),
        }
    }

    fn observed(features: &[&str]) -> FeatureSet {
        let mut f = FeatureSet::new();
        for l in features {
            f.insert(1, *l, []);
        }
        f
    }

    #[test]
    fn rankings() {
        let tol = MzTolerance::da(0.01).unwrap();
        let mut examples = vec![ex("G1@10.0000", &["B@1.0000", "Y@2.0000"]); 20];
        examples.extend(vec![ex("G1@10.0000", &["B@1.0000"]); 30]);
        examples.extend(vec![ex("G2@10.0000", &["Y@2.0000"]); 40]);
        let nb = NaiveBayes::train(&examples);
        let ranked = nb.classify(10.0, &observed(&["B@1.0000", "Y@2.0000"]), &tol, 0.01, None);
        assert_eq!(ranked[0].0, "G1");
        assert!((ranked.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);

        let single = NaiveBayes::train(&[ex("G7@10.0000", &["B@1.0000"])]);
        assert_eq!(single.classify(10.0, &observed(&["Y@5.0000"]), &tol, 0.01, Some(1))[0].0, "G7");

        let uniform = NaiveBayes::train(&[ex("G2@10.0000", &["B@1.0000"]), ex("G1@10.0000", &["B@1.0000"])]);
        let ranked = uniform.classify(10.0, &observed(&["B@1.0000"]), &tol, 0.01, None);
        assert_eq!(ranked[0].0, "G1");
        assert_eq!(ranked[0].1, ranked[1].1);
    }
}
