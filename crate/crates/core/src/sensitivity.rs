//! One-at-a-time sensitivity sweeps and rank-reversal detection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::evaluation::{
    evaluate, rank_with, resolve_preferences, resolve_uac_preferences, EvaluationError, RankingResult,
};
use crate::mapping::translate;
use crate::model::{Audience, Scenario};

/// The quantity a sweep perturbs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Parameter {
    /// UAC preference `u_j`.
    Uac(String),
    /// Characteristic preference `c̃_i`.
    Characteristic(String),
    /// Category weight `y_{i,k}`.
    Weight { characteristic: String, category: String },
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parameter::Uac(id) => write!(f, "uac:{id}"),
            Parameter::Characteristic(id) => write!(f, "characteristic:{id}"),
            Parameter::Weight {
                characteristic,
                category,
            } => write!(f, "weight:{characteristic}/{category}"),
        }
    }
}

impl FromStr for Parameter {
    type Err = EvaluationError;

    /// `uac:<id>`, `characteristic:<id>` or `weight:<characteristic>/<category>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || EvaluationError::InvalidParameter(format!(
            "`{s}` (expected uac:<id>, characteristic:<id> or weight:<characteristic>/<category>)"
        ));
        let (kind, rest) = s.split_once(':').ok_or_else(invalid)?;
        if rest.is_empty() {
            return Err(invalid());
        }
        match kind {
            "uac" => Ok(Parameter::Uac(rest.into())),
            "characteristic" => Ok(Parameter::Characteristic(rest.into())),
            "weight" => {
                let (c, k) = rest.rsplit_once('/').ok_or_else(invalid)?;
                Ok(Parameter::Weight {
                    characteristic: c.into(),
                    category: k.into(),
                })
            }
            _ => Err(invalid()),
        }
    }
}

impl Serialize for Parameter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Parameter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepPoint {
    pub delta: f64,
    /// Parameter value after clipping to [0, 1].
    pub value: f64,
    pub ordering: Vec<String>,
    pub top: Option<String>,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SensitivityReport {
    pub audience: Audience,
    pub perturbed_parameter: Parameter,
    pub baseline_value: f64,
    pub baseline_ordering: Vec<String>,
    pub sweep: Vec<SweepPoint>,
    /// Smallest |delta| in the sweep that changes the top technique.
    pub rank_reversal_threshold: Option<f64>,
}

/// Sets entry `idx` to `old + delta` clipped to [0, 1] and rescales the other
/// entries proportionally so the total is preserved. Returns the new value.
pub fn perturb_proportionally(values: &mut [f64], idx: usize, delta: f64) -> f64 {
    let total: f64 = values.iter().sum();
    let old = values[idx];
    let new = (old + delta).clamp(0.0, 1.0).min(total.max(0.0));
    let rest_old = total - old;
    let rest_new = total - new;
    let others = values.len() - 1;
    for (k, v) in values.iter_mut().enumerate() {
        if k == idx {
            *v = new;
        } else if rest_old > 0.0 {
            *v *= rest_new / rest_old;
        } else if others > 0 {
            *v = rest_new / others as f64;
        }
    }
    new
}

/// Evenly spaced deltas from `lo` to `hi` inclusive.
pub fn deltas(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

struct Perturbed {
    value: f64,
    ranking: RankingResult,
}

fn perturbed(
    scenario: &Scenario,
    audience: Audience,
    parameter: &Parameter,
    delta: f64,
    cr_threshold: f64,
) -> Result<Perturbed, EvaluationError> {
    let missing = || EvaluationError::ParameterNotFound(parameter.to_string());
    match parameter {
        Parameter::Characteristic(id) => {
            let resolved = resolve_preferences(scenario, audience, cr_threshold)?;
            let mut c = resolved.translation.preferences();
            let ids: Vec<String> = c.values.keys().cloned().collect();
            let idx = ids.iter().position(|k| k == id).ok_or_else(missing)?;
            let mut values: Vec<f64> = c.values.values().copied().collect();
            let value = perturb_proportionally(&mut values, idx, delta);
            c.values = ids.into_iter().zip(values).collect();
            Ok(Perturbed {
                value,
                ranking: rank_with(scenario, &c)?,
            })
        }
        Parameter::Uac(id) => {
            let (mut u, _) = resolve_uac_preferences(scenario, audience, cr_threshold)?;
            let ids: Vec<String> = u.values.keys().cloned().collect();
            let idx = ids.iter().position(|k| k == id).ok_or_else(missing)?;
            let mut values: Vec<f64> = u.values.values().copied().collect();
            let value = perturb_proportionally(&mut values, idx, delta);
            u.values = ids.into_iter().zip(values).collect();
            let c = translate(scenario, audience, &u)?.preferences();
            Ok(Perturbed {
                value,
                ranking: rank_with(scenario, &c)?,
            })
        }
        Parameter::Weight {
            characteristic,
            category,
        } => {
            let mut s = scenario.clone();
            let c = s
                .characteristics
                .iter_mut()
                .find(|c| &c.id == characteristic && !c.is_hard())
                .ok_or_else(missing)?;
            let k = c.category_index(category).ok_or_else(missing)?;
            let value = if c.exclusive {
                let new = (c.weights.0[k] + delta).clamp(0.0, 1.0);
                c.weights.0[k] = new;
                if c.weights.sum() < 1.0 {
                    // Restore the exclusive lower bound by scaling the others up.
                    let rest: f64 = c.weights.sum() - new;
                    if rest > 0.0 {
                        let scale = (1.0 - new) / rest;
                        for (j, w) in c.weights.0.iter_mut().enumerate() {
                            if j != k {
                                *w = (*w * scale).min(1.0);
                            }
                        }
                    }
                }
                new
            } else {
                perturb_proportionally(&mut c.weights.0, k, delta)
            };
            let prefs = resolve_preferences(&s, audience, cr_threshold)?;
            Ok(Perturbed {
                value,
                ranking: rank_with(&s, &prefs.translation.preferences())?,
            })
        }
    }
}

fn baseline_value(
    scenario: &Scenario,
    audience: Audience,
    parameter: &Parameter,
    cr_threshold: f64,
) -> Result<f64, EvaluationError> {
    let missing = || EvaluationError::ParameterNotFound(parameter.to_string());
    match parameter {
        Parameter::Characteristic(id) => resolve_preferences(scenario, audience, cr_threshold)?
            .translation
            .normalized
            .get(id)
            .copied()
            .ok_or_else(missing),
        Parameter::Uac(id) => resolve_uac_preferences(scenario, audience, cr_threshold)?
            .0
            .values
            .get(id)
            .copied()
            .ok_or_else(missing),
        Parameter::Weight {
            characteristic,
            category,
        } => {
            let c = scenario
                .characteristic(characteristic)
                .filter(|c| !c.is_hard())
                .ok_or_else(missing)?;
            let k = c.category_index(category).ok_or_else(missing)?;
            Ok(c.weights.0[k])
        }
    }
}

/// Perturbs `parameter` by each delta in `[lo, hi]` (`steps` points),
/// renormalizes the affected vector and re-ranks.
pub fn sensitivity_sweep(
    scenario: &Scenario,
    audience: Audience,
    parameter: &Parameter,
    bounds: (f64, f64),
    steps: usize,
    cr_threshold: f64,
) -> Result<SensitivityReport, EvaluationError> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || !(-1.0..=1.0).contains(&lo) || !(-1.0..=1.0).contains(&hi) {
        return Err(EvaluationError::InvalidParameter(format!(
            "bounds [{lo}, {hi}] must satisfy -1 <= lo <= hi <= 1"
        )));
    }
    if steps == 0 {
        return Err(EvaluationError::InvalidParameter("steps must be at least 1".into()));
    }
    let baseline_value = baseline_value(scenario, audience, parameter, cr_threshold)?;
    let baseline = evaluate(scenario, audience, cr_threshold)?.ranking;

    let sweep = deltas(lo, hi, steps)
        .into_par_iter()
        .map(|delta| {
            perturbed(scenario, audience, parameter, delta, cr_threshold).map(|p| SweepPoint {
                delta,
                value: p.value,
                top: p.ranking.top().map(String::from),
                ordering: p.ranking.ordering,
                scores: p.ranking.scores,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let baseline_top = baseline.top().map(String::from);
    let rank_reversal_threshold = sweep
        .iter()
        .filter(|p| p.top != baseline_top)
        .map(|p| p.delta.abs())
        .min_by(f64::total_cmp);

    Ok(SensitivityReport {
        audience,
        perturbed_parameter: parameter.clone(),
        baseline_value,
        baseline_ordering: baseline.ordering,
        sweep,
        rank_reversal_threshold,
    })
}
