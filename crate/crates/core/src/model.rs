//! Domain vocabulary shared by every engine.
//!
//! A [`Scenario`] is the complete decision problem: the user acceptance
//! criteria (UACs), the PPML characteristics with their categories and
//! weights, the candidate techniques, the UAC → characteristic mapping mask,
//! the category assignments of each technique, hard requirements and the
//! preference data. All types are plain values; engines never mutate them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::survey::ParticipantResponse;

/// Absolute tolerance for every "sums to one" rule.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UacGroup {
    /// Privacy concerns.
    PC,
    /// User experience.
    UX,
    /// Perceived data processing.
    DP,
    /// Perceived trustworthiness.
    PT,
}

impl UacGroup {
    pub const ALL: [UacGroup; 4] = [UacGroup::PC, UacGroup::UX, UacGroup::DP, UacGroup::PT];

    pub fn as_str(self) -> &'static str {
        match self {
            UacGroup::PC => "PC",
            UacGroup::UX => "UX",
            UacGroup::DP => "DP",
            UacGroup::PT => "PT",
        }
    }
}

impl fmt::Display for UacGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UacGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PC" => Ok(UacGroup::PC),
            "UX" => Ok(UacGroup::UX),
            "DP" => Ok(UacGroup::DP),
            "PT" => Ok(UacGroup::PT),
            other => Err(format!("unknown UAC group `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CharacteristicGroup {
    Data,
    Model,
    PrivacySecurity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CharacteristicKind {
    /// Acts as an admission filter; never scored.
    Hard,
    /// Scored through its weight vector.
    Soft,
}

/// Whose preferences are translated into characteristic preferences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Audience {
    User,
    #[serde(alias = "entity")]
    DataEntity,
}

impl Audience {
    pub const ALL: [Audience; 2] = [Audience::User, Audience::DataEntity];

    pub fn as_str(self) -> &'static str {
        match self {
            Audience::User => "user",
            Audience::DataEntity => "dataEntity",
        }
    }
}

impl fmt::Display for Audience {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Audience {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "user" => Ok(Audience::User),
            "entity" | "dataentity" | "data-entity" | "data_entity" => Ok(Audience::DataEntity),
            other => Err(format!("unknown audience `{other}` (expected user or entity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uac {
    pub id: String,
    pub name: String,
    pub group: UacGroup,
    #[serde(default)]
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub note: String,
}

/// Relative desirability of a characteristic's categories, one entry per
/// category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Checks the sum rule: exclusive vectors need a sum of at least one,
    /// non-exclusive vectors must sum to exactly one.
    pub fn satisfies_sum_rule(&self, exclusive: bool) -> bool {
        let sum = self.sum();
        if exclusive {
            sum >= 1.0 - SUM_TOLERANCE
        } else {
            (sum - 1.0).abs() <= SUM_TOLERANCE
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub id: String,
    pub name: String,
    pub group: CharacteristicGroup,
    pub kind: CharacteristicKind,
    pub categories: Vec<Category>,
    pub exclusive: bool,
    /// Empty for hard characteristics.
    pub weights: WeightVector,
}

impl Characteristic {
    pub fn is_hard(&self) -> bool {
        self.kind == CharacteristicKind::Hard
    }

    pub fn category_index(&self, id: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Technique {
    pub id: String,
    pub name: String,
}

/// Three-valued cell of the mapping mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MaskCell {
    #[default]
    None,
    UserOnly,
    UserAndDataEntity,
}

impl MaskCell {
    /// Whether the mark counts for the given audience.
    pub fn counts_for(self, audience: Audience) -> bool {
        match (self, audience) {
            (MaskCell::None, _) => false,
            (MaskCell::UserOnly, Audience::User) => true,
            (MaskCell::UserOnly, Audience::DataEntity) => false,
            (MaskCell::UserAndDataEntity, _) => true,
        }
    }
}

/// Mapping mask indexed `[characteristic][uac]` in scenario order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MappingMask {
    pub rows: Vec<Vec<MaskCell>>,
}

impl MappingMask {
    pub fn empty(characteristics: usize, uacs: usize) -> Self {
        MappingMask {
            rows: vec![vec![MaskCell::None; uacs]; characteristics],
        }
    }

    pub fn get(&self, characteristic: usize, uac: usize) -> MaskCell {
        self.rows
            .get(characteristic)
            .and_then(|r| r.get(uac))
            .copied()
            .unwrap_or_default()
    }
}

/// How an assignment cell was established.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Evidence {
    /// Backed by literature ("x").
    Literature,
    /// Authors' estimate ("(x)"); scores like literature.
    Estimate,
    /// Realizable only under a trade-off ("T"); scores the trade-off multiplier.
    TradeOff,
    #[default]
    Absent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AssignmentCell {
    pub value: f64,
    pub evidence: Evidence,
}

impl AssignmentCell {
    pub const ABSENT: AssignmentCell = AssignmentCell {
        value: 0.0,
        evidence: Evidence::Absent,
    };

    pub fn literature() -> Self {
        AssignmentCell {
            value: 1.0,
            evidence: Evidence::Literature,
        }
    }

    pub fn estimate() -> Self {
        AssignmentCell {
            value: 1.0,
            evidence: Evidence::Estimate,
        }
    }

    pub fn trade_off(multiplier: f64) -> Self {
        AssignmentCell {
            value: multiplier,
            evidence: Evidence::TradeOff,
        }
    }

    pub fn is_assigned(&self) -> bool {
        self.evidence != Evidence::Absent && self.value > 0.0
    }
}

/// Category × technique assignment matrix of one characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    pub characteristic_id: String,
    /// `cells[category][technique]`, both in scenario order.
    pub cells: Vec<Vec<AssignmentCell>>,
}

impl AssignmentMatrix {
    pub fn absent(characteristic_id: impl Into<String>, categories: usize, techniques: usize) -> Self {
        AssignmentMatrix {
            characteristic_id: characteristic_id.into(),
            cells: vec![vec![AssignmentCell::ABSENT; techniques]; categories],
        }
    }

    /// Numeric view of the matrix.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.value).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HardRequirement {
    pub characteristic_id: String,
    pub required_category_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PreferenceScope {
    OverUacs,
    OverCharacteristics,
}

/// Normalized importance scores keyed by UAC or characteristic id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreferenceVector {
    pub audience: Audience,
    pub scope: PreferenceScope,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl PreferenceVector {
    pub fn new(audience: Audience, scope: PreferenceScope, values: BTreeMap<String, f64>) -> Self {
        PreferenceVector {
            audience,
            scope,
            values,
            notes: None,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn get(&self, id: &str) -> f64 {
        self.values.get(id).copied().unwrap_or(0.0)
    }

    /// Values laid out in the order of `ids`; missing ids read as zero.
    pub fn ordered<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Vec<f64> {
        ids.into_iter().map(|id| self.get(id)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    /// Provenance notes.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// The complete decision problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub metadata: Metadata,
    /// Value given to trade-off cells that carry no explicit value.
    pub default_trade_off: f64,
    pub uacs: Vec<Uac>,
    pub characteristics: Vec<Characteristic>,
    pub techniques: Vec<Technique>,
    pub mask: MappingMask,
    /// One matrix per characteristic, in characteristic order.
    pub assignments: Vec<AssignmentMatrix>,
    pub hard_requirements: Vec<HardRequirement>,
    pub preferences: Vec<PreferenceVector>,
    pub survey: Vec<ParticipantResponse>,
    /// Per-characteristic provenance notes keyed by characteristic id.
    pub notes: BTreeMap<String, String>,
}

impl Scenario {
    pub fn uac_index(&self, id: &str) -> Option<usize> {
        self.uacs.iter().position(|u| u.id == id)
    }

    pub fn characteristic_index(&self, id: &str) -> Option<usize> {
        self.characteristics.iter().position(|c| c.id == id)
    }

    pub fn characteristic(&self, id: &str) -> Option<&Characteristic> {
        self.characteristics.iter().find(|c| c.id == id)
    }

    pub fn technique_index(&self, id: &str) -> Option<usize> {
        self.techniques.iter().position(|t| t.id == id)
    }

    pub fn assignment(&self, characteristic_id: &str) -> Option<&AssignmentMatrix> {
        self.assignments
            .iter()
            .find(|a| a.characteristic_id == characteristic_id)
    }

    pub fn assignment_mut(&mut self, characteristic_id: &str) -> Option<&mut AssignmentMatrix> {
        self.assignments
            .iter_mut()
            .find(|a| a.characteristic_id == characteristic_id)
    }

    pub fn uac_ids(&self) -> impl Iterator<Item = &str> {
        self.uacs.iter().map(|u| u.id.as_str())
    }

    pub fn characteristic_ids(&self) -> impl Iterator<Item = &str> {
        self.characteristics.iter().map(|c| c.id.as_str())
    }

    pub fn technique_ids(&self) -> impl Iterator<Item = &str> {
        self.techniques.iter().map(|t| t.id.as_str())
    }

    /// Directly supplied preference vector for an audience and scope.
    pub fn preference(&self, audience: Audience, scope: PreferenceScope) -> Option<&PreferenceVector> {
        self.preferences
            .iter()
            .find(|p| p.audience == audience && p.scope == scope)
    }

    /// UAC preferences for an audience. UAC scores are elicited from users,
    /// so the data entity falls back to the user vector unless it has its own.
    pub fn uac_preference(&self, audience: Audience) -> Option<&PreferenceVector> {
        self.preference(audience, PreferenceScope::OverUacs)
            .or_else(|| self.preference(Audience::User, PreferenceScope::OverUacs))
    }

    /// Replaces (or inserts) the preference vector with the same audience and scope.
    pub fn set_preference(&mut self, vector: PreferenceVector) {
        match self
            .preferences
            .iter_mut()
            .find(|p| p.audience == vector.audience && p.scope == vector.scope)
        {
            Some(slot) => *slot = vector,
            None => self.preferences.push(vector),
        }
    }

    pub fn uacs_in_group(&self, group: UacGroup) -> impl Iterator<Item = &Uac> {
        self.uacs.iter().filter(move |u| u.group == group)
    }

    /// UAC groups that have at least one member, in canonical order.
    pub fn populated_groups(&self) -> Vec<UacGroup> {
        UacGroup::ALL
            .into_iter()
            .filter(|g| self.uacs.iter().any(|u| u.group == *g))
            .collect()
    }

    /// Resets every trade-off cell to the given multiplier.
    pub fn apply_trade_off(&mut self, multiplier: f64) {
        self.default_trade_off = multiplier;
        for cell in self
            .assignments
            .iter_mut()
            .flat_map(|a| a.cells.iter_mut().flatten())
        {
            if cell.evidence == Evidence::TradeOff {
                cell.value = multiplier;
            }
        }
    }
}
