//! Analytic Hierarchy Process: priority vectors, consistency screening and
//! group aggregation of pairwise judgments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Audience, PreferenceScope, PreferenceVector, Scenario, UacGroup, SUM_TOLERANCE};

/// Convergence tolerance on the max-norm between successive iterates.
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// Participants whose CR exceeds this are excluded.
pub const DEFAULT_CR_THRESHOLD: f64 = 0.2;
/// Reporting tier for "good" consistency.
pub const CR_REPORTING_TIER: f64 = 0.1;

const RECIPROCITY_TOLERANCE: f64 = 1e-9;

/// Saaty's random consistency index for n = 1..=10.
const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AhpError {
    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("no matrices to aggregate")]
    EmptyGroup,
    #[error("matrices do not share the same item set")]
    ItemMismatch,
    #[error("no local weight for UAC `{0}`")]
    PartitionMismatch(String),
    #[error("no random index for a {0}x{0} matrix (supported up to 10)")]
    UnsupportedSize(usize),
    #[error("invalid pairwise matrix: {0}")]
    InvalidMatrix(String),
}

impl AhpError {
    pub fn code(&self) -> &'static str {
        match self {
            AhpError::NonConvergence { .. } => "NON_CONVERGENCE",
            AhpError::EmptyGroup => "EMPTY_GROUP",
            AhpError::ItemMismatch => "ITEM_MISMATCH",
            AhpError::PartitionMismatch(_) => "PARTITION_MISMATCH",
            AhpError::UnsupportedSize(_) => "UNSUPPORTED_SIZE",
            AhpError::InvalidMatrix(_) => "INVALID_MATRIX",
        }
    }
}

/// Positive reciprocal judgment matrix over an ordered item set.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    items: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl PairwiseMatrix {
    /// Checks shape, positivity, unit diagonal and reciprocity.
    pub fn new(items: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let n = items.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(AhpError::InvalidMatrix(format!("expected {n}x{n} values")));
        }
        for a in 0..n {
            if (values[a][a] - 1.0).abs() > RECIPROCITY_TOLERANCE {
                return Err(AhpError::InvalidMatrix(format!("diagonal entry {a} is not 1")));
            }
            for b in 0..n {
                let v = values[a][b];
                if !(v.is_finite() && v > 0.0) {
                    return Err(AhpError::InvalidMatrix(format!(
                        "entry ({a}, {b}) = {v} is not a positive real"
                    )));
                }
                if (v * values[b][a] - 1.0).abs() > RECIPROCITY_TOLERANCE {
                    return Err(AhpError::InvalidMatrix(format!(
                        "entries ({a}, {b}) and ({b}, {a}) are not reciprocal"
                    )));
                }
            }
        }
        Ok(PairwiseMatrix { items, values })
    }

    /// Builds the matrix from upper-triangle judgments; `upper[a][b]` for
    /// `b > a` is read, the rest is reconstructed by reciprocity.
    pub fn from_upper(items: Vec<String>, upper: impl Fn(usize, usize) -> f64) -> Result<Self, AhpError> {
        let n = items.len();
        let mut values = vec![vec![1.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let v = upper(a, b);
                values[a][b] = v;
                values[b][a] = 1.0 / v;
            }
        }
        PairwiseMatrix::new(items, values)
    }

    /// Perfectly consistent matrix `m[a][b] = w_a / w_b`.
    pub fn from_weights(items: Vec<String>, weights: &[f64]) -> Result<Self, AhpError> {
        PairwiseMatrix::from_upper(items, |a, b| weights[a] / weights[b])
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a][b]
    }

    /// True when every entry is on the fundamental 1..9 scale or its reciprocal.
    pub fn on_fundamental_scale(&self) -> bool {
        self.values.iter().flatten().all(|&v| is_fundamental_scale(v))
    }
}

pub fn is_fundamental_scale(v: f64) -> bool {
    (1..=9).any(|k| {
        let k = k as f64;
        (v - k).abs() <= RECIPROCITY_TOLERANCE || (v - 1.0 / k).abs() <= RECIPROCITY_TOLERANCE
    })
}

/// Normalized weights over the items of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Priorities {
    pub items: Vec<String>,
    pub weights: Vec<f64>,
}

impl Priorities {
    pub fn uniform(items: Vec<String>) -> Self {
        let n = items.len() as f64;
        let weights = vec![1.0 / n; items.len()];
        Priorities { items, weights }
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.items.iter().position(|i| i == id).map(|k| self.weights[k])
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

struct Eigen {
    vector: Vec<f64>,
    lambda_max: f64,
}

fn principal_eigen(m: &PairwiseMatrix) -> Result<Eigen, AhpError> {
    let n = m.len();
    if n == 0 {
        return Err(AhpError::InvalidMatrix("empty matrix".into()));
    }
    let mut w = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut next: Vec<f64> = m
            .values
            .iter()
            .map(|row| row.iter().zip(&w).map(|(a, x)| a * x).sum())
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if delta < POWER_TOLERANCE {
            // With sum(w) = 1, sum(M w) is the Rayleigh-style estimate of lambda_max.
            let lambda_max = m
                .values
                .iter()
                .map(|row| row.iter().zip(&w).map(|(a, x)| a * x).sum::<f64>())
                .sum();
            return Ok(Eigen {
                vector: w,
                lambda_max,
            });
        }
    }
    Err(AhpError::NonConvergence {
        iterations: POWER_MAX_ITERATIONS,
    })
}

/// Normalized principal eigenvector of `m` by power iteration.
pub fn priority_vector(m: &PairwiseMatrix) -> Result<Priorities, AhpError> {
    let eigen = principal_eigen(m)?;
    Ok(Priorities {
        items: m.items.clone(),
        weights: eigen.vector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConsistencyResult {
    pub lambda_max: f64,
    pub consistency_index: f64,
    pub random_index: f64,
    pub consistency_ratio: f64,
}

pub fn random_index(n: usize) -> Result<f64, AhpError> {
    match n {
        0 => Err(AhpError::InvalidMatrix("empty matrix".into())),
        1..=10 => Ok(RANDOM_INDEX[n - 1]),
        _ => Err(AhpError::UnsupportedSize(n)),
    }
}

/// Saaty consistency: CI = (λmax − n)/(n − 1), CR = CI/RI; CR is 0 for n ≤ 2.
pub fn consistency(m: &PairwiseMatrix) -> Result<ConsistencyResult, AhpError> {
    let n = m.len();
    let ri = random_index(n)?;
    let eigen = principal_eigen(m)?;
    if n <= 2 {
        return Ok(ConsistencyResult {
            lambda_max: eigen.lambda_max,
            consistency_index: 0.0,
            random_index: ri,
            consistency_ratio: 0.0,
        });
    }
    // λmax ≥ n for positive reciprocal matrices; clamp rounding noise.
    let ci = ((eigen.lambda_max - n as f64) / (n as f64 - 1.0)).max(0.0);
    Ok(ConsistencyResult {
        lambda_max: eigen.lambda_max,
        consistency_index: ci,
        random_index: ri,
        consistency_ratio: ci / ri,
    })
}

/// Element-wise geometric mean of judgment matrices over the same items.
pub fn aggregate_group(matrices: &[PairwiseMatrix]) -> Result<PairwiseMatrix, AhpError> {
    let first = matrices.first().ok_or(AhpError::EmptyGroup)?;
    if matrices.iter().any(|m| m.items != first.items) {
        return Err(AhpError::ItemMismatch);
    }
    let k = matrices.len() as f64;
    // Averaging logs of the upper triangle and mirroring keeps the result
    // exactly reciprocal.
    PairwiseMatrix::from_upper(first.items.clone(), |a, b| {
        let mean_log = matrices.iter().map(|m| m.values[a][b].ln()).sum::<f64>() / k;
        mean_log.exp()
    })
}

/// Global UAC weights: group weight times local weight within the group.
pub fn compose_hierarchy(
    scenario: &Scenario,
    group_weights: &Priorities,
    local_weights: &BTreeMap<UacGroup, Priorities>,
    audience: Audience,
) -> Result<PreferenceVector, AhpError> {
    let mut values = BTreeMap::new();
    for uac in &scenario.uacs {
        let local = local_weights
            .get(&uac.group)
            .and_then(|p| p.get(&uac.id))
            .ok_or_else(|| AhpError::PartitionMismatch(uac.id.clone()))?;
        let group = group_weights
            .get(uac.group.as_str())
            .ok_or_else(|| AhpError::PartitionMismatch(uac.id.clone()))?;
        values.insert(uac.id.clone(), group * local);
    }
    let total: f64 = values.values().sum();
    debug_assert!(
        (total - 1.0).abs() < 1e-6,
        "composed weights sum to {total}"
    );
    // Remove floating drift so the sum rule holds to SUM_TOLERANCE.
    if (total - 1.0).abs() > SUM_TOLERANCE / 10.0 {
        values.values_mut().for_each(|v| *v /= total);
    }
    Ok(PreferenceVector::new(audience, PreferenceScope::OverUacs, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i}")).collect()
    }

    #[test]
    fn uniform_matrix_gives_uniform_weights() {
        let m = PairwiseMatrix::new(ids(4), vec![vec![1.0; 4]; 4]).unwrap();
        let p = priority_vector(&m).unwrap();
        for w in p.weights {
            assert!((w - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_ratio() {
        let m = PairwiseMatrix::from_upper(ids(2), |_, _| 3.0).unwrap();
        let p = priority_vector(&m).unwrap();
        assert!((p.weights[0] - 0.75).abs() < 1e-12);
        assert!((p.weights[1] - 0.25).abs() < 1e-12);
        assert_eq!(consistency(&m).unwrap().consistency_ratio, 0.0);
    }

    #[test]
    fn recovers_generating_weights() {
        let w = [0.5, 0.3, 0.2];
        let m = PairwiseMatrix::from_weights(ids(3), &w).unwrap();
        let p = priority_vector(&m).unwrap();
        for (got, want) in p.weights.iter().zip(w) {
            assert!((got - want).abs() < 1e-8);
        }
        assert!(consistency(&m).unwrap().consistency_ratio.abs() < 1e-8);
    }

    #[test]
    fn intransitive_triple_is_inconsistent() {
        // 0 ≫ 1, 0 ≪ 2, 1 ≪ 2
        let m = PairwiseMatrix::from_upper(ids(3), |a, b| match (a, b) {
            (0, 1) => 9.0,
            _ => 1.0 / 9.0,
        })
        .unwrap();
        let c = consistency(&m).unwrap();
        assert!(c.consistency_ratio > 0.2, "CR = {}", c.consistency_ratio);
    }

    #[test]
    fn rejects_non_reciprocal() {
        let err = PairwiseMatrix::new(ids(2), vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap_err();
        assert_eq!(err.code(), "INVALID_MATRIX");
    }

    #[test]
    fn aggregate_single_is_identity() {
        let m = PairwiseMatrix::from_upper(ids(3), |a, b| (a + b + 1) as f64).unwrap();
        let agg = aggregate_group(std::slice::from_ref(&m)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((agg.get(a, b) - m.get(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aggregate_geometric_mean() {
        let a = PairwiseMatrix::from_upper(ids(2), |_, _| 4.0).unwrap();
        let b = PairwiseMatrix::from_upper(ids(2), |_, _| 1.0).unwrap();
        let agg = aggregate_group(&[a, b]).unwrap();
        assert!((agg.get(0, 1) - 2.0).abs() < 1e-12);
        assert!((agg.get(1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_errors() {
        assert_eq!(aggregate_group(&[]).unwrap_err(), AhpError::EmptyGroup);
        let a = PairwiseMatrix::from_upper(ids(2), |_, _| 4.0).unwrap();
        let b = PairwiseMatrix::from_upper(vec!["x".into(), "y".into()], |_, _| 4.0).unwrap();
        assert_eq!(aggregate_group(&[a, b]).unwrap_err(), AhpError::ItemMismatch);
    }

    #[test]
    fn random_index_table() {
        assert_eq!(random_index(3).unwrap(), 0.58);
        assert_eq!(random_index(10).unwrap(), 1.49);
        assert!(matches!(random_index(11), Err(AhpError::UnsupportedSize(11))));
    }

    #[test]
    fn fundamental_scale_check() {
        assert!(is_fundamental_scale(7.0));
        assert!(is_fundamental_scale(1.0 / 6.0));
        assert!(!is_fundamental_scale(2.5));
    }
}
