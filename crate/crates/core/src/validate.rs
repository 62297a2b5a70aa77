//! Invariant checks over a [`Scenario`]. Violations are data, not errors.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{Evidence, PreferenceScope, Scenario, SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    DuplicateId,
    EmptyCategories,
    HardWithWeights,
    WeightShape,
    WeightRange,
    WeightSum,
    MaskShape,
    AssignmentShape,
    AssignmentRange,
    AssignmentEvidence,
    DanglingReference,
    HardRequirementMissing,
    HardRequirementDuplicate,
    HardRequirementSoft,
    PreferenceRange,
    PreferenceSum,
    PreferenceKeys,
    TradeOffRange,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DuplicateId => "DUPLICATE_ID",
            ViolationCode::EmptyCategories => "EMPTY_CATEGORIES",
            ViolationCode::HardWithWeights => "HARD_WITH_WEIGHTS",
            ViolationCode::WeightShape => "WEIGHT_SHAPE",
            ViolationCode::WeightRange => "WEIGHT_RANGE",
            ViolationCode::WeightSum => "WEIGHT_SUM",
            ViolationCode::MaskShape => "MASK_SHAPE",
            ViolationCode::AssignmentShape => "ASSIGNMENT_SHAPE",
            ViolationCode::AssignmentRange => "ASSIGNMENT_RANGE",
            ViolationCode::AssignmentEvidence => "ASSIGNMENT_EVIDENCE",
            ViolationCode::DanglingReference => "DANGLING_REFERENCE",
            ViolationCode::HardRequirementMissing => "HARD_REQUIREMENT_MISSING",
            ViolationCode::HardRequirementDuplicate => "HARD_REQUIREMENT_DUPLICATE",
            ViolationCode::HardRequirementSoft => "HARD_REQUIREMENT_SOFT",
            ViolationCode::PreferenceRange => "PREFERENCE_RANGE",
            ViolationCode::PreferenceSum => "PREFERENCE_SUM",
            ViolationCode::PreferenceKeys => "PREFERENCE_KEYS",
            ViolationCode::TradeOffRange => "TRADE_OFF_RANGE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Location inside the scenario, e.g. `characteristics[accuracy].weights`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for id in ids {
        if !seen.insert(id) && !dup.contains(&id) {
            dup.push(id);
        }
    }
    dup
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Returns every invariant violation in `scenario`; empty iff well-formed.
pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n_uacs = scenario.uacs.len();
    let n_chars = scenario.characteristics.len();
    let n_techs = scenario.techniques.len();

    for id in duplicates(scenario.uac_ids()) {
        report.push(ViolationCode::DuplicateId, format!("uacs[{id}]"), "UAC id is not unique");
    }
    for id in duplicates(scenario.characteristic_ids()) {
        report.push(
            ViolationCode::DuplicateId,
            format!("characteristics[{id}]"),
            "characteristic id is not unique",
        );
    }
    for id in duplicates(scenario.technique_ids()) {
        report.push(
            ViolationCode::DuplicateId,
            format!("techniques[{id}]"),
            "technique id is not unique",
        );
    }

    if !in_unit(scenario.default_trade_off) {
        report.push(
            ViolationCode::TradeOffRange,
            "defaultTradeOff",
            format!("trade-off multiplier {} outside [0, 1]", scenario.default_trade_off),
        );
    }

    for c in &scenario.characteristics {
        let path = format!("characteristics[{}]", c.id);
        for id in duplicates(c.categories.iter().map(|k| k.id.as_str())) {
            report.push(
                ViolationCode::DuplicateId,
                format!("{path}.categories[{id}]"),
                "category id is not unique within its characteristic",
            );
        }
        if c.categories.is_empty() {
            report.push(
                ViolationCode::EmptyCategories,
                format!("{path}.categories"),
                "a characteristic needs at least one category",
            );
        }
        if c.is_hard() {
            if !c.weights.is_empty() {
                report.push(
                    ViolationCode::HardWithWeights,
                    format!("{path}.weights"),
                    "hard characteristics carry no weights",
                );
            }
            continue;
        }
        if c.weights.len() != c.categories.len() {
            report.push(
                ViolationCode::WeightShape,
                format!("{path}.weights"),
                format!(
                    "{} weights for {} categories",
                    c.weights.len(),
                    c.categories.len()
                ),
            );
        }
        if let Some(w) = c.weights.0.iter().find(|w| !in_unit(**w)) {
            report.push(
                ViolationCode::WeightRange,
                format!("{path}.weights"),
                format!("weight {w} outside [0, 1]"),
            );
        }
        if !c.weights.satisfies_sum_rule(c.exclusive) {
            let rule = if c.exclusive { ">= 1" } else { "= 1" };
            report.push(
                ViolationCode::WeightSum,
                format!("{path}.weights"),
                format!("weights of `{}` sum to {} (required {rule})", c.id, c.weights.sum()),
            );
        }
    }

    let mask = &scenario.mask;
    if mask.rows.len() != n_chars {
        report.push(
            ViolationCode::MaskShape,
            "mask",
            format!("{} mask rows for {} characteristics", mask.rows.len(), n_chars),
        );
    }
    for (i, row) in mask.rows.iter().enumerate() {
        if row.len() != n_uacs {
            report.push(
                ViolationCode::MaskShape,
                format!("mask[{i}]"),
                format!("{} cells for {} UACs", row.len(), n_uacs),
            );
        }
    }

    if scenario.assignments.len() != n_chars {
        report.push(
            ViolationCode::AssignmentShape,
            "assignments",
            format!(
                "{} assignment matrices for {} characteristics",
                scenario.assignments.len(),
                n_chars
            ),
        );
    }
    for a in &scenario.assignments {
        let path = format!("assignments[{}]", a.characteristic_id);
        let Some(c) = scenario.characteristic(&a.characteristic_id) else {
            report.push(
                ViolationCode::DanglingReference,
                path,
                format!("unknown characteristic `{}`", a.characteristic_id),
            );
            continue;
        };
        if a.cells.len() != c.categories.len() || a.cells.iter().any(|r| r.len() != n_techs) {
            report.push(
                ViolationCode::AssignmentShape,
                path.clone(),
                format!(
                    "expected {} categories x {} techniques",
                    c.categories.len(),
                    n_techs
                ),
            );
        }
        for (k, row) in a.cells.iter().enumerate() {
            for (t, cell) in row.iter().enumerate() {
                let cell_path = format!("{path}.cells[{k}][{t}]");
                if !in_unit(cell.value) {
                    report.push(
                        ViolationCode::AssignmentRange,
                        cell_path.clone(),
                        format!("cell value {} outside [0, 1]", cell.value),
                    );
                }
                if cell.evidence == Evidence::Absent && cell.value != 0.0 {
                    report.push(
                        ViolationCode::AssignmentEvidence,
                        cell_path,
                        "absent cell carries a nonzero value",
                    );
                }
            }
        }
    }

    let mut required = HashSet::new();
    for (n, req) in scenario.hard_requirements.iter().enumerate() {
        let path = format!("hardRequirements[{n}]");
        let Some(c) = scenario.characteristic(&req.characteristic_id) else {
            report.push(
                ViolationCode::DanglingReference,
                path,
                format!("unknown characteristic `{}`", req.characteristic_id),
            );
            continue;
        };
        if !c.is_hard() {
            report.push(
                ViolationCode::HardRequirementSoft,
                path.clone(),
                format!("`{}` is a soft characteristic", c.id),
            );
        }
        if c.category_index(&req.required_category_id).is_none() {
            report.push(
                ViolationCode::DanglingReference,
                path.clone(),
                format!(
                    "unknown category `{}` of `{}`",
                    req.required_category_id, c.id
                ),
            );
        }
        if !required.insert(c.id.as_str()) {
            report.push(
                ViolationCode::HardRequirementDuplicate,
                path,
                format!("`{}` has more than one admissible category", c.id),
            );
        }
    }
    for c in scenario.characteristics.iter().filter(|c| c.is_hard()) {
        if !required.contains(c.id.as_str()) {
            report.push(
                ViolationCode::HardRequirementMissing,
                format!("characteristics[{}]", c.id),
                "hard characteristic without an admissible category",
            );
        }
    }

    for (n, p) in scenario.preferences.iter().enumerate() {
        let path = format!("preferences[{n}]");
        let known: BTreeSet<&str> = match p.scope {
            PreferenceScope::OverUacs => scenario.uac_ids().collect(),
            PreferenceScope::OverCharacteristics => scenario.characteristic_ids().collect(),
        };
        let keys: BTreeSet<&str> = p.values.keys().map(String::as_str).collect();
        if keys != known {
            report.push(
                ViolationCode::PreferenceKeys,
                path.clone(),
                "preference ids do not match the scenario's id set",
            );
        }
        if let Some((id, v)) = p.values.iter().find(|(_, v)| !in_unit(**v)) {
            report.push(
                ViolationCode::PreferenceRange,
                path.clone(),
                format!("preference `{id}` = {v} outside [0, 1]"),
            );
        }
        if (p.sum() - 1.0).abs() > SUM_TOLERANCE {
            report.push(
                ViolationCode::PreferenceSum,
                path,
                format!("{} preferences sum to {}", p.audience, p.sum()),
            );
        }
    }

    report
}
