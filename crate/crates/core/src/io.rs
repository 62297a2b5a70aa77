//! Scenario and survey files.
//!
//! Scenarios are JSON documents with an explicit `schemaVersion`. [`save`]
//! writes a canonical form: object keys sorted, arrays in scenario order,
//! numbers at full double precision. Loading a canonical file and saving it
//! again reproduces the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AssignmentCell, AssignmentMatrix, Category, Characteristic, CharacteristicGroup, CharacteristicKind,
    Evidence, HardRequirement, MappingMask, MaskCell, Metadata, PreferenceVector, Scenario, Technique, Uac,
    WeightVector,
};
use crate::survey::{build_response, ParticipantDocument, SurveyDocument, SurveyError};
use crate::validate::{validate_scenario, ValidationReport, ViolationCode};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {found} (supported: {SCHEMA_VERSION})")]
    SchemaVersionUnsupported { found: u32 },
    #[error("{code} at {path}: {message}")]
    Resolve {
        code: ViolationCode,
        path: String,
        message: String,
    },
    #[error("scenario is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("survey participant `{participant}`: {source}")]
    Survey {
        participant: String,
        #[source]
        source: SurveyError,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Parse { .. } => "PARSE_ERROR",
            IoError::SchemaVersionUnsupported { .. } => "SCHEMA_VERSION_UNSUPPORTED",
            IoError::Resolve { code, .. } => code.as_str(),
            IoError::Invalid(report) => report
                .violations
                .first()
                .map_or("INVALID_SCENARIO", |v| v.code.as_str()),
            IoError::Survey { source, .. } => source.code(),
            IoError::Read { .. } => "READ_ERROR",
        }
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn default_trade_off() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CharacteristicDocument {
    pub id: String,
    pub name: String,
    pub group: CharacteristicGroup,
    pub kind: CharacteristicKind,
    #[serde(default, skip_serializing_if = "is_false")]
    pub exclusive: bool,
    pub categories: Vec<Category>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AudienceMark {
    User,
    UserAndDataEntity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MaskEntry {
    pub uac_id: String,
    pub characteristic_id: String,
    pub audience_mark: AudienceMark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CellDocument {
    pub category_id: String,
    pub technique_id: String,
    /// Omitted when it equals the evidence default (1, or the scenario
    /// trade-off multiplier for trade-off cells).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AssignmentDocument {
    pub characteristic_id: String,
    pub cells: Vec<CellDocument>,
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default = "default_trade_off")]
    pub default_trade_off: f64,
    pub uacs: Vec<Uac>,
    pub characteristics: Vec<CharacteristicDocument>,
    pub techniques: Vec<Technique>,
    #[serde(default)]
    pub mask: Vec<MaskEntry>,
    #[serde(default)]
    pub assignments: Vec<AssignmentDocument>,
    #[serde(default)]
    pub hard_requirements: Vec<HardRequirement>,
    #[serde(default)]
    pub preferences: Vec<PreferenceVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub survey: Vec<ParticipantDocument>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct VersionProbe {
    schema_version: Option<u32>,
}

fn check_version(text: &str) -> Result<(), IoError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(found) => Err(IoError::SchemaVersionUnsupported { found }),
        None => Err(IoError::Parse {
            line: 1,
            column: 1,
            message: "missing field `schemaVersion`".into(),
        }),
    }
}

/// Parses the document without resolving references.
pub fn parse_document(text: &str) -> Result<ScenarioDocument, IoError> {
    check_version(text)?;
    Ok(serde_json::from_str(text)?)
}

fn resolve_err(code: ViolationCode, path: String, message: String) -> IoError {
    IoError::Resolve { code, path, message }
}

impl ScenarioDocument {
    /// Resolves ids into the matrix model. Structural invariants are left to
    /// [`validate_scenario`].
    pub fn resolve(&self) -> Result<Scenario, IoError> {
        let characteristics: Vec<Characteristic> = self
            .characteristics
            .iter()
            .map(|c| Characteristic {
                id: c.id.clone(),
                name: c.name.clone(),
                group: c.group,
                kind: c.kind,
                categories: c.categories.clone(),
                exclusive: c.exclusive,
                weights: WeightVector(c.weights.clone()),
            })
            .collect();
        let mut scenario = Scenario {
            metadata: self.metadata.clone(),
            default_trade_off: self.default_trade_off,
            uacs: self.uacs.clone(),
            techniques: self.techniques.clone(),
            mask: MappingMask::empty(characteristics.len(), self.uacs.len()),
            assignments: characteristics
                .iter()
                .map(|c| AssignmentMatrix::absent(&c.id, c.categories.len(), self.techniques.len()))
                .collect(),
            characteristics,
            hard_requirements: self.hard_requirements.clone(),
            preferences: self.preferences.clone(),
            survey: Vec::new(),
            notes: self
                .characteristics
                .iter()
                .filter(|c| !c.notes.is_empty())
                .map(|c| (c.id.clone(), c.notes.clone()))
                .collect(),
        };

        for (n, entry) in self.mask.iter().enumerate() {
            let path = format!("mask[{n}]");
            let i = scenario.characteristic_index(&entry.characteristic_id).ok_or_else(|| {
                resolve_err(
                    ViolationCode::DanglingReference,
                    path.clone(),
                    format!("unknown characteristic `{}`", entry.characteristic_id),
                )
            })?;
            let j = scenario.uac_index(&entry.uac_id).ok_or_else(|| {
                resolve_err(
                    ViolationCode::DanglingReference,
                    path.clone(),
                    format!("unknown UAC `{}`", entry.uac_id),
                )
            })?;
            let cell = &mut scenario.mask.rows[i][j];
            if *cell != MaskCell::None {
                return Err(resolve_err(
                    ViolationCode::DuplicateId,
                    path,
                    format!("({}, {}) marked twice", entry.uac_id, entry.characteristic_id),
                ));
            }
            *cell = match entry.audience_mark {
                AudienceMark::User => MaskCell::UserOnly,
                AudienceMark::UserAndDataEntity => MaskCell::UserAndDataEntity,
            };
        }

        let mut seen = std::collections::HashSet::new();
        for (n, doc) in self.assignments.iter().enumerate() {
            let path = format!("assignments[{n}]");
            if !seen.insert(doc.characteristic_id.as_str()) {
                return Err(resolve_err(
                    ViolationCode::DuplicateId,
                    path,
                    format!("second assignment block for `{}`", doc.characteristic_id),
                ));
            }
            let i = scenario.characteristic_index(&doc.characteristic_id).ok_or_else(|| {
                resolve_err(
                    ViolationCode::DanglingReference,
                    path.clone(),
                    format!("unknown characteristic `{}`", doc.characteristic_id),
                )
            })?;
            for (m, cell) in doc.cells.iter().enumerate() {
                let cell_path = format!("{path}.cells[{m}]");
                let k = scenario.characteristics[i]
                    .category_index(&cell.category_id)
                    .ok_or_else(|| {
                        resolve_err(
                            ViolationCode::DanglingReference,
                            cell_path.clone(),
                            format!("unknown category `{}`", cell.category_id),
                        )
                    })?;
                let t = scenario.technique_index(&cell.technique_id).ok_or_else(|| {
                    resolve_err(
                        ViolationCode::DanglingReference,
                        cell_path.clone(),
                        format!("unknown technique `{}`", cell.technique_id),
                    )
                })?;
                let default = match cell.evidence {
                    Evidence::Literature | Evidence::Estimate => 1.0,
                    Evidence::TradeOff => self.default_trade_off,
                    Evidence::Absent => 0.0,
                };
                let slot = &mut scenario.assignments[i].cells[k][t];
                if *slot != AssignmentCell::ABSENT {
                    return Err(resolve_err(
                        ViolationCode::DuplicateId,
                        cell_path,
                        format!("({}, {}) assigned twice", cell.category_id, cell.technique_id),
                    ));
                }
                *slot = AssignmentCell {
                    value: cell.value.unwrap_or(default),
                    evidence: cell.evidence,
                };
            }
        }

        for p in &self.survey {
            let response = build_response(&scenario, &p.participant_id, &p.judgments).map_err(|source| {
                IoError::Survey {
                    participant: p.participant_id.clone(),
                    source,
                }
            })?;
            scenario.survey.push(response);
        }
        Ok(scenario)
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        let mut mask = Vec::new();
        for (i, c) in scenario.characteristics.iter().enumerate() {
            for (j, u) in scenario.uacs.iter().enumerate() {
                let mark = match scenario.mask.get(i, j) {
                    MaskCell::None => continue,
                    MaskCell::UserOnly => AudienceMark::User,
                    MaskCell::UserAndDataEntity => AudienceMark::UserAndDataEntity,
                };
                mask.push(MaskEntry {
                    uac_id: u.id.clone(),
                    characteristic_id: c.id.clone(),
                    audience_mark: mark,
                });
            }
        }

        let assignments = scenario
            .assignments
            .iter()
            .filter_map(|a| {
                let c = scenario.characteristic(&a.characteristic_id)?;
                let mut cells = Vec::new();
                for (k, row) in a.cells.iter().enumerate() {
                    for (t, cell) in row.iter().enumerate() {
                        if *cell == AssignmentCell::ABSENT {
                            continue;
                        }
                        let default = match cell.evidence {
                            Evidence::Literature | Evidence::Estimate => 1.0,
                            Evidence::TradeOff => scenario.default_trade_off,
                            Evidence::Absent => 0.0,
                        };
                        cells.push(CellDocument {
                            category_id: c.categories.get(k)?.id.clone(),
                            technique_id: scenario.techniques.get(t)?.id.clone(),
                            value: (cell.value != default).then_some(cell.value),
                            evidence: cell.evidence,
                        });
                    }
                }
                (!cells.is_empty()).then(|| AssignmentDocument {
                    characteristic_id: a.characteristic_id.clone(),
                    cells,
                })
            })
            .collect();

        ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            metadata: scenario.metadata.clone(),
            default_trade_off: scenario.default_trade_off,
            uacs: scenario.uacs.clone(),
            characteristics: scenario
                .characteristics
                .iter()
                .map(|c| CharacteristicDocument {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    group: c.group,
                    kind: c.kind,
                    exclusive: c.exclusive,
                    categories: c.categories.clone(),
                    weights: c.weights.0.clone(),
                    notes: scenario.notes.get(&c.id).cloned().unwrap_or_default(),
                })
                .collect(),
            techniques: scenario.techniques.clone(),
            mask,
            assignments,
            hard_requirements: scenario.hard_requirements.clone(),
            preferences: scenario.preferences.clone(),
            survey: scenario.survey.iter().map(|r| r.to_document()).collect(),
        }
    }
}

/// Parses and resolves a scenario without running validation.
pub fn load_unvalidated(text: &str) -> Result<Scenario, IoError> {
    parse_document(text)?.resolve()
}

/// Parses, resolves and validates a scenario.
pub fn load_str(text: &str) -> Result<Scenario, IoError> {
    let scenario = load_unvalidated(text)?;
    let report = validate_scenario(&scenario);
    if report.is_empty() {
        Ok(scenario)
    } else {
        Err(IoError::Invalid(report))
    }
}

pub fn read_file(path: impl AsRef<Path>) -> Result<String, IoError> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Scenario, IoError> {
    load_str(&read_file(path)?)
}

/// Serializes any value canonically: sorted keys, two-space indentation,
/// trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // Round-tripping through `Value` sorts object keys.
    let value = serde_json::to_value(value).expect("scenario types serialize infallibly");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values serialize infallibly");
    out.push('\n');
    out
}

/// Canonical serialized form of a scenario.
pub fn save(scenario: &Scenario) -> String {
    to_canonical_json(&ScenarioDocument::from_scenario(scenario))
}

/// Parses a survey file into participant documents.
pub fn parse_survey(text: &str) -> Result<Vec<ParticipantDocument>, IoError> {
    check_version(text)?;
    let doc: SurveyDocument = serde_json::from_str(text)?;
    Ok(doc.participants)
}

/// Resolves a survey file against a scenario's UAC groups.
pub fn load_survey_str(scenario: &Scenario, text: &str) -> Result<Vec<crate::survey::ParticipantResponse>, IoError> {
    parse_survey(text)?
        .iter()
        .map(|p| {
            build_response(scenario, &p.participant_id, &p.judgments).map_err(|source| IoError::Survey {
                participant: p.participant_id.clone(),
                source,
            })
        })
        .collect()
}

pub fn save_survey(responses: &[crate::survey::ParticipantResponse]) -> String {
    to_canonical_json(&SurveyDocument {
        schema_version: SCHEMA_VERSION,
        participants: responses.iter().map(|r| r.to_document()).collect(),
    })
}

/// Characteristic notes keyed by id, for reports.
pub fn provenance_notes(scenario: &Scenario) -> Vec<String> {
    let mut notes = scenario.metadata.notes.clone();
    let per_char: BTreeMap<usize, String> = scenario
        .notes
        .iter()
        .filter_map(|(id, n)| Some((scenario.characteristic_index(id)?, format!("{id}: {n}"))))
        .collect();
    notes.extend(per_char.into_values());
    notes
}
