//! Survey responses: the judgment-list wire format, participant screening
//! and the survey → UAC preference pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ahp::{
    aggregate_group, compose_hierarchy, consistency, priority_vector, AhpError, ConsistencyResult,
    PairwiseMatrix, Priorities,
};
use crate::model::{Audience, PreferenceVector, Scenario, UacGroup};

/// Matrix slot within one participant's response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatrixKey {
    /// Comparison of the UAC groups against each other.
    Groups,
    /// Comparison of the UACs inside one group.
    Group(UacGroup),
}

impl fmt::Display for MatrixKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKey::Groups => f.write_str("groups"),
            MatrixKey::Group(g) => f.write_str(g.as_str()),
        }
    }
}

impl Serialize for MatrixKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurveyError {
    #[error("malformed judgment: {0}")]
    Malformed(String),
    #[error("judgments for {key} do not match the scenario items: {detail}")]
    ItemMismatch { key: String, detail: String },
    #[error(transparent)]
    Ahp(#[from] AhpError),
}

impl SurveyError {
    pub fn code(&self) -> &'static str {
        match self {
            SurveyError::Malformed(_) => "MALFORMED_JUDGMENT",
            SurveyError::ItemMismatch { .. } => "ITEM_MISMATCH",
            SurveyError::Ahp(e) => e.code(),
        }
    }
}

/// "Item `a` is `value` times as important as item `b`."
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub a: String,
    pub b: String,
    #[serde(deserialize_with = "scale_value")]
    pub value: f64,
}

/// Accepts a number or a fraction string such as `"1/5"`.
fn scale_value<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    let v = match Raw::deserialize(d)? {
        Raw::Number(v) => v,
        Raw::Text(s) => parse_fraction(&s).ok_or_else(|| {
            serde::de::Error::custom(format!("`{s}` is not a number or fraction"))
        })?,
    };
    Ok(v)
}

fn parse_fraction(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

/// One participant's judgments as submitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JudgmentSet {
    /// Group-level comparisons; empty when group weights are not elicited.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<Judgment>,
    #[serde(default)]
    pub subgroups: BTreeMap<UacGroup, Vec<Judgment>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub demographics: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParticipantDocument {
    pub participant_id: String,
    #[serde(flatten)]
    pub judgments: JudgmentSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurveyDocument {
    pub schema_version: u32,
    pub participants: Vec<ParticipantDocument>,
}

/// A participant's resolved pairwise matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantResponse {
    pub participant_id: String,
    pub group_matrix: Option<PairwiseMatrix>,
    pub sub_matrices: BTreeMap<UacGroup, PairwiseMatrix>,
    pub demographics: BTreeMap<String, String>,
}

impl ParticipantResponse {
    pub fn matrices(&self) -> impl Iterator<Item = (MatrixKey, &PairwiseMatrix)> {
        self.group_matrix
            .iter()
            .map(|m| (MatrixKey::Groups, m))
            .chain(self.sub_matrices.iter().map(|(g, m)| (MatrixKey::Group(*g), m)))
    }

    /// Consistency of every matrix in the response.
    pub fn consistency(&self) -> Result<BTreeMap<MatrixKey, ConsistencyResult>, AhpError> {
        self.matrices()
            .map(|(k, m)| consistency(m).map(|c| (k, c)))
            .collect()
    }

    /// Upper-triangle judgment lists reproducing this response.
    pub fn to_judgments(&self) -> JudgmentSet {
        fn upper(m: &PairwiseMatrix) -> Vec<Judgment> {
            let items = m.items();
            let mut out = Vec::new();
            for a in 0..items.len() {
                for b in (a + 1)..items.len() {
                    out.push(Judgment {
                        a: items[a].clone(),
                        b: items[b].clone(),
                        value: m.get(a, b),
                    });
                }
            }
            out
        }
        JudgmentSet {
            groups: self.group_matrix.as_ref().map(upper).unwrap_or_default(),
            subgroups: self
                .sub_matrices
                .iter()
                .map(|(g, m)| (*g, upper(m)))
                .collect(),
            demographics: self.demographics.clone(),
        }
    }

    pub fn to_document(&self) -> ParticipantDocument {
        ParticipantDocument {
            participant_id: self.participant_id.clone(),
            judgments: self.to_judgments(),
        }
    }
}

fn build_matrix(key: MatrixKey, items: &[String], judgments: &[Judgment]) -> Result<PairwiseMatrix, SurveyError> {
    let mismatch = |detail: String| SurveyError::ItemMismatch {
        key: key.to_string(),
        detail,
    };
    let n = items.len();
    let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for j in judgments {
        if !(j.value.is_finite() && j.value > 0.0) {
            return Err(SurveyError::Malformed(format!(
                "{key}: value {} for ({}, {}) is not a positive real",
                j.value, j.a, j.b
            )));
        }
        let a = items
            .iter()
            .position(|i| *i == j.a)
            .ok_or_else(|| mismatch(format!("unknown item `{}`", j.a)))?;
        let b = items
            .iter()
            .position(|i| *i == j.b)
            .ok_or_else(|| mismatch(format!("unknown item `{}`", j.b)))?;
        if a == b {
            return Err(SurveyError::Malformed(format!("{key}: `{}` compared with itself", j.a)));
        }
        let (pair, value) = if a < b { ((a, b), j.value) } else { ((b, a), 1.0 / j.value) };
        if upper.insert(pair, value).is_some() {
            return Err(SurveyError::Malformed(format!(
                "{key}: pair ({}, {}) judged twice",
                j.a, j.b
            )));
        }
    }
    let expected = n * n.saturating_sub(1) / 2;
    if upper.len() != expected {
        return Err(mismatch(format!(
            "{} of {} pairs judged",
            upper.len(),
            expected
        )));
    }
    Ok(PairwiseMatrix::from_upper(items.to_vec(), |a, b| upper[&(a, b)])?)
}

/// Resolves a participant's judgment lists against the scenario's UAC groups.
pub fn build_response(
    scenario: &Scenario,
    participant_id: &str,
    judgments: &JudgmentSet,
) -> Result<ParticipantResponse, SurveyError> {
    let groups = scenario.populated_groups();
    let submitted: BTreeSet<UacGroup> = judgments.subgroups.keys().copied().collect();
    let expected: BTreeSet<UacGroup> = groups.iter().copied().collect();
    if submitted != expected {
        return Err(SurveyError::ItemMismatch {
            key: "subgroups".into(),
            detail: format!(
                "expected groups {:?}, got {:?}",
                expected.iter().map(|g| g.as_str()).collect::<Vec<_>>(),
                submitted.iter().map(|g| g.as_str()).collect::<Vec<_>>()
            ),
        });
    }
    let mut sub_matrices = BTreeMap::new();
    for group in groups.iter().copied() {
        let items: Vec<String> = scenario.uacs_in_group(group).map(|u| u.id.clone()).collect();
        let m = build_matrix(MatrixKey::Group(group), &items, &judgments.subgroups[&group])?;
        sub_matrices.insert(group, m);
    }
    let group_matrix = if judgments.groups.is_empty() {
        None
    } else {
        let items: Vec<String> = groups.iter().map(|g| g.as_str().to_string()).collect();
        Some(build_matrix(MatrixKey::Groups, &items, &judgments.groups)?)
    };
    Ok(ParticipantResponse {
        participant_id: participant_id.to_string(),
        group_matrix,
        sub_matrices,
        demographics: judgments.demographics.clone(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Rejection {
    pub participant_id: String,
    pub consistency_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatrixScreening {
    pub accepted: Vec<String>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Screening {
    pub threshold: f64,
    pub matrices: BTreeMap<MatrixKey, MatrixScreening>,
}

impl Screening {
    pub fn accepted(&self, key: MatrixKey) -> &[String] {
        self.matrices
            .get(&key)
            .map(|s| s.accepted.as_slice())
            .unwrap_or(&[])
    }
}

/// Splits participants per matrix: a matrix is rejected iff its CR exceeds
/// `threshold`. Rejection in one group does not affect the others.
pub fn screen_participants(responses: &[ParticipantResponse], threshold: f64) -> Result<Screening, AhpError> {
    let mut matrices: BTreeMap<MatrixKey, MatrixScreening> = BTreeMap::new();
    for r in responses {
        for (key, m) in r.matrices() {
            let cr = consistency(m)?.consistency_ratio;
            let slot = matrices.entry(key).or_default();
            if cr > threshold {
                slot.rejected.push(Rejection {
                    participant_id: r.participant_id.clone(),
                    consistency_ratio: cr,
                });
            } else {
                slot.accepted.push(r.participant_id.clone());
            }
        }
    }
    Ok(Screening {
        threshold,
        matrices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GroupWeightSource {
    /// Aggregated from accepted group-level matrices.
    Elicited,
    /// No group-level judgments; every populated group weighs the same.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SurveyOutcome {
    pub screening: Screening,
    pub group_weights: Priorities,
    pub group_weight_source: GroupWeightSource,
    pub local_weights: BTreeMap<UacGroup, Priorities>,
    pub preferences: PreferenceVector,
}

/// Screens, aggregates accepted matrices by geometric mean, derives priorities
/// and composes global UAC preferences.
pub fn derive_uac_preferences(
    scenario: &Scenario,
    responses: &[ParticipantResponse],
    threshold: f64,
    audience: Audience,
) -> Result<SurveyOutcome, AhpError> {
    let screening = screen_participants(responses, threshold)?;
    let accepted_matrices = |key: MatrixKey| -> Vec<PairwiseMatrix> {
        let ids = screening.accepted(key);
        responses
            .iter()
            .filter(|r| ids.contains(&r.participant_id))
            .filter_map(|r| match key {
                MatrixKey::Groups => r.group_matrix.clone(),
                MatrixKey::Group(g) => r.sub_matrices.get(&g).cloned(),
            })
            .collect()
    };

    let groups = scenario.populated_groups();
    let mut local_weights = BTreeMap::new();
    for g in groups.iter().copied() {
        let aggregated = aggregate_group(&accepted_matrices(MatrixKey::Group(g)))?;
        local_weights.insert(g, priority_vector(&aggregated)?);
    }

    let group_matrices = accepted_matrices(MatrixKey::Groups);
    let (group_weights, group_weight_source) = if group_matrices.is_empty() {
        let items = groups.iter().map(|g| g.as_str().to_string()).collect();
        (Priorities::uniform(items), GroupWeightSource::Uniform)
    } else {
        (
            priority_vector(&aggregate_group(&group_matrices)?)?,
            GroupWeightSource::Elicited,
        )
    };

    let preferences = compose_hierarchy(scenario, &group_weights, &local_weights, audience)?;
    Ok(SurveyOutcome {
        screening,
        group_weights,
        group_weight_source,
        local_weights,
        preferences,
    })
}
