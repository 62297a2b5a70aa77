//! Hard-requirement filtering, weighted category evaluation and the final
//! technique scores.
//!
//! A technique's score is `e_t = Σ_i c̃_i · (X_iᵀ · y_i)_t` over the soft
//! characteristics. Hard characteristics only decide admission.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::AhpError;
use crate::mapping::{translate, MappingError, TranslationResult};
use crate::model::{
    AssignmentMatrix, Audience, PreferenceScope, PreferenceVector, Scenario, WeightVector,
};
use crate::survey::derive_uac_preferences;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("every technique was excluded by a hard requirement")]
    EmptySurvivors { exclusions: Vec<ExclusionRecord> },
    #[error("no preferences available for audience {0}")]
    NoPreferences(Audience),
    #[error("parameter `{0}` does not resolve in the scenario")]
    ParameterNotFound(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Ahp(#[from] AhpError),
}

impl EvaluationError {
    pub fn code(&self) -> &'static str {
        match self {
            EvaluationError::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            EvaluationError::EmptySurvivors { .. } => "EMPTY_SURVIVORS",
            EvaluationError::NoPreferences(_) => "NO_PREFERENCES",
            EvaluationError::ParameterNotFound(_) => "PARAMETER_NOT_FOUND",
            EvaluationError::InvalidOverride(_) => "INVALID_OVERRIDE",
            EvaluationError::InvalidParameter(_) => "INVALID_PARAMETER",
            EvaluationError::Mapping(e) => e.code(),
            EvaluationError::Ahp(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExclusionRecord {
    pub technique_id: String,
    pub characteristic_id: String,
    pub required_category: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardFilterOutcome {
    /// Surviving technique ids in scenario order.
    pub survivors: Vec<String>,
    pub exclusions: Vec<ExclusionRecord>,
}

/// A technique survives iff it is assigned the admissible category of every
/// hard characteristic. One record is produced per failed requirement.
pub fn filter_hard_requirements(scenario: &Scenario) -> HardFilterOutcome {
    let mut survivors = Vec::new();
    let mut exclusions = Vec::new();
    for (t, technique) in scenario.techniques.iter().enumerate() {
        let mut failed = false;
        for req in &scenario.hard_requirements {
            let Some(c) = scenario.characteristic(&req.characteristic_id) else {
                continue;
            };
            let Some(k) = c.category_index(&req.required_category_id) else {
                continue;
            };
            let assigned = scenario
                .assignment(&c.id)
                .and_then(|a| a.cells.get(k))
                .and_then(|row| row.get(t))
                .is_some_and(|cell| cell.is_assigned());
            if !assigned {
                failed = true;
                let held: Vec<&str> = scenario
                    .assignment(&c.id)
                    .map(|a| {
                        a.cells
                            .iter()
                            .enumerate()
                            .filter(|(_, row)| row.get(t).is_some_and(|cell| cell.is_assigned()))
                            .map(|(k, _)| c.categories[k].label.as_str())
                            .collect()
                    })
                    .unwrap_or_default();
                let label = &c.categories[k].label;
                let reason = if held.is_empty() {
                    format!("{} is not assigned to any category of {}; required: {label}", technique.id, c.name)
                } else {
                    format!("{} has {} = {}; required: {label}", technique.id, c.name, held.join(", "))
                };
                exclusions.push(ExclusionRecord {
                    technique_id: technique.id.clone(),
                    characteristic_id: c.id.clone(),
                    required_category: req.required_category_id.clone(),
                    reason,
                });
            }
        }
        if !failed {
            survivors.push(technique.id.clone());
        }
    }
    HardFilterOutcome {
        survivors,
        exclusions,
    }
}

/// `(X_iᵀ · y_i)_t = Σ_k X[k][t] · y[k]` for every technique column.
pub fn technique_subscores(x: &AssignmentMatrix, y: &WeightVector) -> Result<Vec<f64>, EvaluationError> {
    if x.cells.len() != y.len() {
        return Err(EvaluationError::DimensionMismatch(format!(
            "`{}` has {} categories but {} weights",
            x.characteristic_id,
            x.cells.len(),
            y.len()
        )));
    }
    let techniques = x.cells.first().map_or(0, Vec::len);
    if x.cells.iter().any(|row| row.len() != techniques) {
        return Err(EvaluationError::DimensionMismatch(format!(
            "`{}` has ragged category rows",
            x.characteristic_id
        )));
    }
    let mut out = vec![0.0; techniques];
    for (row, w) in x.cells.iter().zip(&y.0) {
        for (acc, cell) in out.iter_mut().zip(row) {
            *acc += cell.value * w;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankingResult {
    pub audience: Audience,
    /// Surviving techniques, columns of `contributions`.
    pub techniques: Vec<Label>,
    /// Soft characteristics, rows of `contributions`.
    pub characteristics: Vec<Label>,
    /// `contributions[i][t] = c̃_i · (X_iᵀ · y_i)_t`.
    pub contributions: Vec<Vec<f64>>,
    pub scores: BTreeMap<String, f64>,
    /// Technique ids by descending score, ties by ascending id.
    pub ordering: Vec<String>,
    pub exclusions: Vec<ExclusionRecord>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl RankingResult {
    pub fn top(&self) -> Option<&str> {
        self.ordering.first().map(String::as_str)
    }

    pub fn score(&self, technique_id: &str) -> Option<f64> {
        self.scores.get(technique_id).copied()
    }

    /// Contribution of a characteristic to a technique's score.
    pub fn contribution(&self, characteristic_id: &str, technique_id: &str) -> Option<f64> {
        let i = self.characteristics.iter().position(|c| c.id == characteristic_id)?;
        let t = self.techniques.iter().position(|c| c.id == technique_id)?;
        Some(self.contributions[i][t])
    }

    pub fn is_empty(&self) -> bool {
        self.techniques.is_empty()
    }

    /// A result carrying only the exclusions, for when nothing survives.
    pub fn excluded_only(audience: Audience, exclusions: Vec<ExclusionRecord>) -> Self {
        RankingResult {
            audience,
            techniques: Vec::new(),
            characteristics: Vec::new(),
            contributions: Vec::new(),
            scores: BTreeMap::new(),
            ordering: Vec::new(),
            exclusions,
            diagnostics: vec!["every technique was excluded by a hard requirement".into()],
        }
    }
}

fn descending_then_id(scores: &BTreeMap<String, f64>) -> impl Fn(&String, &String) -> Ordering + '_ {
    move |a, b| scores[b].total_cmp(&scores[a]).then_with(|| a.cmp(b))
}

/// Scores the surviving techniques against characteristic preferences `c̃`.
pub fn rank(
    scenario: &Scenario,
    preferences: &PreferenceVector,
    filter: &HardFilterOutcome,
) -> Result<RankingResult, EvaluationError> {
    if filter.survivors.is_empty() {
        return Err(EvaluationError::EmptySurvivors {
            exclusions: filter.exclusions.clone(),
        });
    }
    let columns: Vec<usize> = filter
        .survivors
        .iter()
        .map(|id| {
            scenario
                .technique_index(id)
                .ok_or_else(|| EvaluationError::DimensionMismatch(format!("unknown technique `{id}`")))
        })
        .collect::<Result<_, _>>()?;

    let mut characteristics = Vec::new();
    let mut contributions = Vec::new();
    for c in scenario.characteristics.iter().filter(|c| !c.is_hard()) {
        let x = scenario
            .assignment(&c.id)
            .ok_or_else(|| EvaluationError::DimensionMismatch(format!("no assignment for `{}`", c.id)))?;
        let sub = technique_subscores(x, &c.weights)?;
        if sub.len() != scenario.techniques.len() {
            return Err(EvaluationError::DimensionMismatch(format!(
                "`{}` covers {} techniques, scenario has {}",
                c.id,
                sub.len(),
                scenario.techniques.len()
            )));
        }
        let weight = preferences.get(&c.id);
        contributions.push(columns.iter().map(|&t| weight * sub[t]).collect::<Vec<f64>>());
        characteristics.push(Label {
            id: c.id.clone(),
            name: c.name.clone(),
        });
    }

    let mut scores = BTreeMap::new();
    for (col, id) in filter.survivors.iter().enumerate() {
        let e: f64 = contributions.iter().map(|row| row[col]).sum();
        scores.insert(id.clone(), e);
    }
    let mut ordering = filter.survivors.clone();
    ordering.sort_by(descending_then_id(&scores));

    let mut diagnostics = Vec::new();
    if characteristics.iter().all(|c| preferences.get(&c.id) == 0.0) {
        diagnostics.push(format!(
            "all soft characteristic preferences are zero for audience {}; scores are all zero",
            preferences.audience
        ));
    }

    Ok(RankingResult {
        audience: preferences.audience,
        techniques: columns
            .iter()
            .map(|&t| Label {
                id: scenario.techniques[t].id.clone(),
                name: scenario.techniques[t].name.clone(),
            })
            .collect(),
        characteristics,
        contributions,
        scores,
        ordering,
        exclusions: filter.exclusions.clone(),
        diagnostics,
    })
}

/// Where the characteristic preferences of an evaluation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PreferenceSource {
    /// Supplied directly over characteristics.
    Direct,
    /// Translated from supplied UAC preferences.
    Uacs,
    /// Derived from survey responses by AHP, then translated.
    Survey,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolvedPreferences {
    pub source: PreferenceSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uac: Option<PreferenceVector>,
    pub translation: TranslationResult,
}

/// UAC preferences for an audience: supplied vector first, then the survey.
pub fn resolve_uac_preferences(
    scenario: &Scenario,
    audience: Audience,
    cr_threshold: f64,
) -> Result<(PreferenceVector, PreferenceSource), EvaluationError> {
    if let Some(u) = scenario.uac_preference(audience) {
        let mut u = u.clone();
        u.audience = audience;
        return Ok((u, PreferenceSource::Uacs));
    }
    if !scenario.survey.is_empty() {
        let outcome = derive_uac_preferences(scenario, &scenario.survey, cr_threshold, audience)?;
        return Ok((outcome.preferences, PreferenceSource::Survey));
    }
    Err(EvaluationError::NoPreferences(audience))
}

/// Characteristic preferences for an audience, in priority order: direct
/// `c̃`, supplied `u`, survey-derived `u`.
pub fn resolve_preferences(
    scenario: &Scenario,
    audience: Audience,
    cr_threshold: f64,
) -> Result<ResolvedPreferences, EvaluationError> {
    if let Some(direct) = scenario.preference(audience, PreferenceScope::OverCharacteristics) {
        return Ok(ResolvedPreferences {
            source: PreferenceSource::Direct,
            uac: None,
            translation: TranslationResult {
                audience,
                raw: BTreeMap::new(),
                normalized: direct.values.clone(),
            },
        });
    }
    let (u, source) = resolve_uac_preferences(scenario, audience, cr_threshold)?;
    let translation = translate(scenario, audience, &u)?;
    Ok(ResolvedPreferences {
        source,
        uac: Some(u),
        translation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub preferences: ResolvedPreferences,
    pub ranking: RankingResult,
}

/// Full pipeline for one audience. When every technique is excluded the
/// ranking is empty and carries only the exclusion records.
pub fn evaluate(scenario: &Scenario, audience: Audience, cr_threshold: f64) -> Result<Evaluation, EvaluationError> {
    let preferences = resolve_preferences(scenario, audience, cr_threshold)?;
    let ranking = rank_with(scenario, &preferences.translation.preferences())?;
    Ok(Evaluation {
        preferences,
        ranking,
    })
}

/// Filters and ranks; an all-excluded scenario yields an exclusions-only result.
pub fn rank_with(scenario: &Scenario, preferences: &PreferenceVector) -> Result<RankingResult, EvaluationError> {
    let filter = filter_hard_requirements(scenario);
    match rank(scenario, preferences, &filter) {
        Err(EvaluationError::EmptySurvivors { exclusions }) => {
            Ok(RankingResult::excluded_only(preferences.audience, exclusions))
        }
        other => other,
    }
}

/// Table layout of a ranking: one row per soft characteristic plus the score row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributionTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    pub scores: Vec<f64>,
}

pub fn contribution_table(result: &RankingResult) -> ContributionTable {
    ContributionTable {
        columns: result.techniques.iter().map(|t| t.id.clone()).collect(),
        rows: result
            .characteristics
            .iter()
            .zip(&result.contributions)
            .map(|(c, row)| (c.name.clone(), row.clone()))
            .collect(),
        scores: result.techniques.iter().map(|t| result.scores[&t.id]).collect(),
    }
}
