use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix};

/// Average (fractional) ranks, 1-based.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(FeatureError::DegenerateInput("need at least two observations".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FeatureError::DegenerateInput("constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCentrality {
    /// Spearman between centrality and per-coordinate variance.
    pub rho_var: f64,
    /// Spearman between centrality and per-coordinate mean.
    pub rho_mean: f64,
}

pub fn variance_centrality_report(fingerprints: &FeatureMatrix, centrality: &[f64]) -> Result<VarianceCentrality, FeatureError> {
    if fingerprints.dim() != centrality.len() {
        return Err(FeatureError::DimensionMismatch { expected: centrality.len(), found: fingerprints.dim() });
    }
    let mean = fingerprints.column_means();
    let mut variance = vec![0.0; mean.len()];
    for row in fingerprints.rows() {
        for ((v, x), m) in variance.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let n = fingerprints.len().max(1) as f64;
    variance.iter_mut().for_each(|v| *v /= n);
    Ok(VarianceCentrality { rho_var: spearman(centrality, &variance)?, rho_mean: spearman(centrality, &mean)? })
}
