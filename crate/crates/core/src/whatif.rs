//! Transient what-if overrides applied on top of a scenario.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evaluation::{
    rank_with, resolve_preferences, resolve_uac_preferences, Evaluation, EvaluationError,
    ResolvedPreferences,
};
use crate::mapping::{translate, TranslationResult};
use crate::model::{AssignmentCell, Audience, Evidence, PreferenceVector, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightOverride {
    pub characteristic_id: String,
    pub category_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellOverride {
    pub characteristic_id: String,
    pub category_id: String,
    pub technique_id: String,
    pub value: f64,
}

/// Request-scoped changes. Preference overrides are renormalized so the
/// affected vector sums to one again.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Overrides {
    /// UAC preference entries `u_j`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub uac: BTreeMap<String, f64>,
    /// Characteristic preference entries `c̃_i`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub characteristic: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightOverride>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellOverride>,
    /// Replaces the multiplier of every trade-off cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trade_off: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self == &Overrides::default()
    }
}

fn check_unit(what: &str, v: f64) -> Result<(), EvaluationError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(EvaluationError::InvalidOverride(format!("{what} = {v} outside [0, 1]")))
    }
}

fn not_found(what: String) -> EvaluationError {
    EvaluationError::ParameterNotFound(what)
}

/// Applies the structural overrides (trade-off, weights, cells) to a copy.
pub fn apply_structural(scenario: &Scenario, overrides: &Overrides) -> Result<Scenario, EvaluationError> {
    let mut s = scenario.clone();
    if let Some(t) = overrides.trade_off {
        check_unit("tradeOff", t)?;
        s.apply_trade_off(t);
    }
    for w in &overrides.weights {
        check_unit(&format!("weight {}/{}", w.characteristic_id, w.category_id), w.value)?;
        let c = s
            .characteristics
            .iter_mut()
            .find(|c| c.id == w.characteristic_id)
            .ok_or_else(|| not_found(format!("characteristic:{}", w.characteristic_id)))?;
        let k = c
            .category_index(&w.category_id)
            .filter(|k| *k < c.weights.len())
            .ok_or_else(|| not_found(format!("weight:{}/{}", w.characteristic_id, w.category_id)))?;
        c.weights.0[k] = w.value;
    }
    for o in &overrides.cells {
        check_unit(
            &format!("cell {}/{}/{}", o.characteristic_id, o.category_id, o.technique_id),
            o.value,
        )?;
        let k = s
            .characteristic(&o.characteristic_id)
            .and_then(|c| c.category_index(&o.category_id))
            .ok_or_else(|| not_found(format!("category:{}/{}", o.characteristic_id, o.category_id)))?;
        let t = s
            .technique_index(&o.technique_id)
            .ok_or_else(|| not_found(format!("technique:{}", o.technique_id)))?;
        let matrix = s
            .assignment_mut(&o.characteristic_id)
            .ok_or_else(|| not_found(format!("assignment:{}", o.characteristic_id)))?;
        let cell = &mut matrix.cells[k][t];
        *cell = match (cell.evidence, o.value) {
            (_, 0.0) => AssignmentCell::ABSENT,
            (Evidence::Absent, v) => AssignmentCell {
                value: v,
                evidence: Evidence::Estimate,
            },
            (evidence, v) => AssignmentCell { value: v, evidence },
        };
    }
    Ok(s)
}

fn override_vector(
    vector: &mut PreferenceVector,
    entries: &BTreeMap<String, f64>,
    kind: &str,
) -> Result<(), EvaluationError> {
    for (id, v) in entries {
        check_unit(&format!("{kind} {id}"), *v)?;
        let slot = vector
            .values
            .get_mut(id)
            .ok_or_else(|| not_found(format!("{kind}:{id}")))?;
        *slot = *v;
    }
    let total = vector.sum();
    if total <= 0.0 {
        return Err(EvaluationError::InvalidOverride(format!(
            "{kind} overrides leave no preference mass"
        )));
    }
    vector.values.values_mut().for_each(|v| *v /= total);
    Ok(())
}

/// Evaluates an audience with overrides applied; the input scenario is untouched.
pub fn evaluate_with_overrides(
    scenario: &Scenario,
    audience: Audience,
    overrides: &Overrides,
    cr_threshold: f64,
) -> Result<Evaluation, EvaluationError> {
    let s = apply_structural(scenario, overrides)?;
    let mut preferences = if overrides.uac.is_empty() {
        resolve_preferences(&s, audience, cr_threshold)?
    } else {
        let (mut u, source) = resolve_uac_preferences(&s, audience, cr_threshold)?;
        override_vector(&mut u, &overrides.uac, "uac")?;
        let translation = translate(&s, audience, &u)?;
        ResolvedPreferences {
            source,
            uac: Some(u),
            translation,
        }
    };
    if !overrides.characteristic.is_empty() {
        let mut c = preferences.translation.preferences();
        override_vector(&mut c, &overrides.characteristic, "characteristic")?;
        preferences.translation = TranslationResult {
            audience,
            raw: preferences.translation.raw,
            normalized: c.values,
        };
    }
    let ranking = rank_with(&s, &preferences.translation.preferences())?;
    Ok(Evaluation {
        preferences,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::evaluate;
    use crate::fixtures;

    #[test]
    fn no_overrides_matches_baseline() {
        let s = fixtures::psi();
        let base = evaluate(&s, Audience::User, 0.2).unwrap();
        let what = evaluate_with_overrides(&s, Audience::User, &Overrides::default(), 0.2).unwrap();
        assert_eq!(base, what);
    }

    #[test]
    fn zeroing_a_technique_zeroes_its_score() {
        let s = fixtures::psi();
        let mut o = Overrides::default();
        for c in &s.characteristics {
            for k in &c.categories {
                o.cells.push(CellOverride {
                    characteristic_id: c.id.clone(),
                    category_id: k.id.clone(),
                    technique_id: "HE".into(),
                    value: 0.0,
                });
            }
        }
        let mut hard_kept = o.clone();
        hard_kept
            .cells
            .retain(|c| !s.characteristic(&c.characteristic_id).unwrap().is_hard());
        let r = evaluate_with_overrides(&s, Audience::User, &hard_kept, 0.2).unwrap();
        assert_eq!(r.ranking.score("HE"), Some(0.0));
        // Clearing hard assignments too excludes HE instead.
        let r = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap();
        assert_eq!(r.ranking.score("HE"), None);
        assert!(r.ranking.exclusions.iter().any(|e| e.technique_id == "HE"));
    }

    #[test]
    fn purpose_and_access_forced_to_one() {
        let s = fixtures::psi();
        let mut o = Overrides::default();
        o.characteristic.insert("purpose-and-access-limitation".into(), 1.0);
        let r = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap();
        assert_eq!(r.ranking.top(), Some("HE"));
        let sum: f64 = r.preferences.translation.normalized.values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_do_not_leak() {
        let s = fixtures::psi();
        let before = s.clone();
        let o = Overrides {
            trade_off: Some(0.5),
            ..Overrides::default()
        };
        let r = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap();
        assert!(r.ranking.score("FL+LDP").unwrap() < 0.523264 - 1e-3);
        assert_eq!(s, before);
    }

    #[test]
    fn unknown_ids_and_ranges() {
        let s = fixtures::psi();
        let mut o = Overrides::default();
        o.characteristic.insert("nope".into(), 0.5);
        let err = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap_err();
        assert_eq!(err.code(), "PARAMETER_NOT_FOUND");
        let o = Overrides {
            trade_off: Some(2.0),
            ..Overrides::default()
        };
        let err = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap_err();
        assert_eq!(err.code(), "INVALID_OVERRIDE");
    }

    #[test]
    fn uac_override_switches_to_translation() {
        let s = fixtures::psi();
        let mut o = Overrides::default();
        o.uac.insert("PC1".into(), 0.5);
        let r = evaluate_with_overrides(&s, Audience::User, &o, 0.2).unwrap();
        let u = r.preferences.uac.unwrap();
        assert!((u.sum() - 1.0).abs() < 1e-12);
        assert!(!r.preferences.translation.raw.is_empty());
    }
}
