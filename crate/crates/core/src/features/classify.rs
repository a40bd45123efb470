//! Nearest-centroid classification under the L1 distance, with k-fold
//! cross-validation and a train/test protocol.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix};
use crate::rng::{stream_rng, Stream};

/// Per-label mean vectors. Labels iterate in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidClassifier {
    centroids: BTreeMap<String, Vec<f64>>,
}

impl CentroidClassifier {
    fn fit<'a, I>(dim: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a [f64], &'a str)>,
    {
        let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
        for (row, label) in rows {
            let entry = sums.entry(label.to_owned()).or_insert_with(|| (vec![0.0; dim], 0));
            for (s, x) in entry.0.iter_mut().zip(row) {
                *s += x;
            }
            entry.1 += 1;
        }
        let centroids = sums
            .into_iter()
            .map(|(label, (mut sum, count))| {
                sum.iter_mut().for_each(|s| *s /= count as f64);
                (label, sum)
            })
            .collect();
        CentroidClassifier { centroids }
    }

    pub fn centroids(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.centroids
    }

    pub fn dim(&self) -> usize {
        self.centroids.values().next().map_or(0, Vec::len)
    }

    /// Label of the L1-nearest centroid; exact ties go to the
    /// lexicographically smallest label.
    pub fn predict(&self, row: &[f64]) -> Result<&str, FeatureError> {
        if row.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch { expected: self.dim(), found: row.len() });
        }
        let mut best: Option<(&str, f64)> = None;
        for (label, centroid) in &self.centroids {
            let dist: f64 = centroid.iter().zip(row).map(|(c, x)| (c - x).abs()).sum();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((label, dist));
            }
        }
        best.map(|(l, _)| l).ok_or(FeatureError::MissingLabels)
    }
}

pub fn centroid_classifier_train(train: &FeatureMatrix) -> Result<CentroidClassifier, FeatureError> {
    let labels = train.labels().ok_or(FeatureError::MissingLabels)?;
    if train.is_empty() {
        return Err(FeatureError::MissingLabels);
    }
    Ok(CentroidClassifier::fit(
        train.dim(),
        train.rows().iter().map(Vec::as_slice).zip(labels.iter().map(String::as_str)),
    ))
}

pub fn centroid_classifier_predict<'c>(model: &'c CentroidClassifier, row: &[f64]) -> Result<&'c str, FeatureError> {
    model.predict(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Accuracy of every held-out fold, shuffle-major.
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub shuffles: usize,
    pub folds: usize,
    pub classifier: String,
    pub stratified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub const CLASSIFIER_TAG: &str = "nearest_centroid_l1";

fn accuracy_on(model: &CentroidClassifier, rows: &[&[f64]], labels: &[&str]) -> Result<(usize, usize), FeatureError> {
    let mut correct = 0;
    for (row, label) in rows.iter().zip(labels) {
        if model.predict(row)? == *label {
            correct += 1;
        }
    }
    Ok((correct, rows.len()))
}

/// Repeated k-fold cross-validation of the nearest-centroid classifier.
///
/// Rows are first put in canonical order (sorted by id) and then shuffled
/// with the seed, so the report does not depend on input row order. Folds are
/// stratified by label when every label has at least `k` rows.
pub fn kfold_cv(rows: &FeatureMatrix, k: usize, shuffles: usize, seed: u64) -> Result<CvReport, FeatureError> {
    if k < 2 {
        return Err(FeatureError::BadFolds(k));
    }
    let labels = rows.labels().ok_or(FeatureError::MissingLabels)?;
    let n = rows.len();
    if n < k {
        return Err(FeatureError::TooFewRows { rows: n, folds: k });
    }

    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| rows.ids()[a].cmp(&rows.ids()[b]));

    let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *per_label.entry(l).or_default() += 1;
    }
    let stratified = per_label.values().all(|&c| c >= k);
    let mut warnings = Vec::new();
    if !stratified {
        warnings.push(format!("some label has fewer than {k} rows; folds are not stratified"));
    }

    let mut rng = stream_rng(seed, Stream::CvShuffles);
    let mut fold_accuracies = Vec::with_capacity(shuffles * k);
    for _ in 0..shuffles {
        let mut order = canonical.clone();
        order.shuffle(&mut rng);
        let mut fold_of = vec![0usize; n];
        if stratified {
            let mut grouped: Vec<usize> = Vec::with_capacity(n);
            for label in per_label.keys() {
                grouped.extend(order.iter().copied().filter(|&i| labels[i] == *label));
            }
            for (pos, &i) in grouped.iter().enumerate() {
                fold_of[i] = pos % k;
            }
        } else {
            for (pos, &i) in order.iter().enumerate() {
                fold_of[i] = pos * k / n;
            }
        }

        let accs: Result<Vec<f64>, FeatureError> = (0..k)
            .into_par_iter()
            .map(|fold| {
                let model = CentroidClassifier::fit(
                    rows.dim(),
                    (0..n).filter(|&i| fold_of[i] != fold).map(|i| (rows.row(i), labels[i].as_str())),
                );
                let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
                let test_rows: Vec<&[f64]> = test.iter().map(|&i| rows.row(i)).collect();
                let test_labels: Vec<&str> = test.iter().map(|&i| labels[i].as_str()).collect();
                let (correct, total) = accuracy_on(&model, &test_rows, &test_labels)?;
                Ok(correct as f64 / total as f64)
            })
            .collect();
        fold_accuracies.extend(accs?);
    }

    let mean_accuracy = if fold_accuracies.is_empty() {
        0.0
    } else {
        fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64
    };
    Ok(CvReport {
        fold_accuracies,
        mean_accuracy,
        shuffles,
        folds: k,
        classifier: CLASSIFIER_TAG.to_owned(),
        stratified,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub classifier: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Trains on `train`, reports accuracy on `test`.
pub fn train_test_split_eval(train: &FeatureMatrix, test: &FeatureMatrix) -> Result<SplitReport, FeatureError> {
    let model = centroid_classifier_train(train)?;
    let test_labels = test.labels().ok_or(FeatureError::MissingLabels)?;
    if !test.is_empty() && test.dim() != train.dim() {
        return Err(FeatureError::DimensionMismatch { expected: train.dim(), found: test.dim() });
    }
    let mut warnings = Vec::new();
    let known: BTreeSet<&str> = model.centroids().keys().map(String::as_str).collect();
    if test_labels.iter().all(|l| !known.contains(l.as_str())) {
        warnings.push("no test label occurs in the training set".to_owned());
    }
    let rows: Vec<&[f64]> = test.rows().iter().map(Vec::as_slice).collect();
    let labels: Vec<&str> = test_labels.iter().map(String::as_str).collect();
    let (correct, total) = accuracy_on(&model, &rows, &labels)?;
    Ok(SplitReport {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        correct,
        total,
        classifier: CLASSIFIER_TAG.to_owned(),
        warnings,
    })
}
