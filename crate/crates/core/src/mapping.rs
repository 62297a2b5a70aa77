//! Translation of UAC preferences into characteristic preferences through the
//! mapping mask.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Audience, MappingMask, PreferenceScope, PreferenceVector, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("dimension mismatch: mask has {mask} columns, preference vector has {preferences} entries")]
    DimensionMismatch { mask: usize, preferences: usize },
    #[error("characteristic scores sum to zero; the audience has no mask marks with weight")]
    ZeroMass,
}

impl MappingError {
    pub fn code(&self) -> &'static str {
        match self {
            MappingError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            MappingError::ZeroMass => "ZERO_MASS",
        }
    }
}

/// Binary mask `F[characteristic][uac]` for one audience.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub rows: Vec<Vec<bool>>,
}

impl BinaryMask {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }
}

/// Projects the three-valued mask onto an audience.
pub fn project_mask(mask: &MappingMask, audience: Audience) -> BinaryMask {
    BinaryMask {
        rows: mask
            .rows
            .iter()
            .map(|row| row.iter().map(|cell| cell.counts_for(audience)).collect())
            .collect(),
    }
}

/// Raw scores `c_i = Σ_j F_ij · u_j`.
pub fn characteristic_scores(mask: &BinaryMask, uac_preferences: &[f64]) -> Result<Vec<f64>, MappingError> {
    mask.rows
        .iter()
        .map(|row| {
            if row.len() != uac_preferences.len() {
                return Err(MappingError::DimensionMismatch {
                    mask: row.len(),
                    preferences: uac_preferences.len(),
                });
            }
            Ok(row
                .iter()
                .zip(uac_preferences)
                .filter(|(marked, _)| **marked)
                .map(|(_, u)| *u)
                .sum())
        })
        .collect()
}

/// `c̃_i = c_i / Σ_g c_g` over every characteristic, hard ones included.
pub fn normalize(scores: &[f64]) -> Result<Vec<f64>, MappingError> {
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(MappingError::ZeroMass);
    }
    Ok(scores.iter().map(|c| c / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub audience: Audience,
    /// Raw scores; empty when characteristic preferences were supplied directly.
    pub raw: BTreeMap<String, f64>,
    pub normalized: BTreeMap<String, f64>,
}

impl TranslationResult {
    pub fn preferences(&self) -> PreferenceVector {
        PreferenceVector::new(
            self.audience,
            PreferenceScope::OverCharacteristics,
            self.normalized.clone(),
        )
    }
}

/// Full translation u → c → c̃ for an audience.
pub fn translate(
    scenario: &Scenario,
    audience: Audience,
    uac_preferences: &PreferenceVector,
) -> Result<TranslationResult, MappingError> {
    let mask = project_mask(&scenario.mask, audience);
    let u = uac_preferences.ordered(scenario.uac_ids());
    let raw = characteristic_scores(&mask, &u)?;
    let normalized = normalize(&raw)?;
    let ids = || scenario.characteristic_ids().map(String::from);
    Ok(TranslationResult {
        audience,
        raw: ids().zip(raw).collect(),
        normalized: ids().zip(normalized).collect(),
    })
}
