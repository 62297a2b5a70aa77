//! Random scenario generation and a reference scorer for property tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ppmlrank_core::model::{
    AssignmentCell, AssignmentMatrix, Audience, Category, Characteristic, CharacteristicGroup,
    CharacteristicKind, Evidence, HardRequirement, MappingMask, MaskCell, Metadata, PreferenceScope,
    PreferenceVector, Scenario, Technique, Uac, UacGroup, WeightVector,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Limits {
    pub characteristics: usize,
    pub categories: usize,
    pub techniques: usize,
    pub uacs: usize,
}

pub const LIMITS: Limits = Limits {
    characteristics: 20,
    categories: 10,
    techniques: 8,
    uacs: 8,
};

fn normalized(rng: &mut StdRng, n: usize, zero_chance: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(zero_chance) { 0.0 } else { rng.gen_range(0.01..1.0) })
            .collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            return v.iter().map(|x| x / total).collect();
        }
    }
}

fn cell(rng: &mut StdRng, trade_off: f64) -> AssignmentCell {
    match rng.gen_range(0..6) {
        0 | 1 => AssignmentCell::ABSENT,
        2 => AssignmentCell::literature(),
        3 => AssignmentCell::estimate(),
        4 => AssignmentCell::trade_off(trade_off),
        _ => AssignmentCell {
            value: rng.gen_range(0.0..=1.0),
            evidence: Evidence::Literature,
        },
    }
}

/// A valid scenario with direct characteristic preferences for both
/// audiences and UAC preferences for the user.
pub fn random_scenario(seed: u64, limits: &Limits) -> Scenario {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_chars = rng.gen_range(1..=limits.characteristics);
    let n_techs = rng.gen_range(1..=limits.techniques);
    let n_uacs = rng.gen_range(1..=limits.uacs);
    let trade_off = rng.gen_range(0.0..=1.0);

    let uacs: Vec<Uac> = (0..n_uacs)
        .map(|j| Uac {
            id: format!("U{j}"),
            name: format!("UAC {j}"),
            group: UacGroup::ALL[j % 4],
            definition: String::new(),
        })
        .collect();
    let techniques: Vec<Technique> = (0..n_techs)
        .map(|t| Technique {
            id: format!("T{t}"),
            name: format!("Technique {t}"),
        })
        .collect();

    let mut characteristics = Vec::new();
    let mut assignments = Vec::new();
    let mut hard_requirements = Vec::new();
    for i in 0..n_chars {
        let n_cats = rng.gen_range(1..=limits.categories);
        let hard = rng.gen_bool(0.2);
        let exclusive = !hard && rng.gen_bool(0.5);
        let weights = if hard {
            Vec::new()
        } else if exclusive {
            let mut w: Vec<f64> = (0..n_cats).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let k = rng.gen_range(0..n_cats);
            w[k] = 1.0;
            w
        } else {
            normalized(&mut rng, n_cats, 0.3)
        };
        let id = format!("C{i}");
        let mut cells: Vec<Vec<AssignmentCell>> = (0..n_cats)
            .map(|_| (0..n_techs).map(|_| cell(&mut rng, trade_off)).collect())
            .collect();
        if hard {
            let k = rng.gen_range(0..n_cats);
            for t in 0..n_techs {
                cells[k][t] = if rng.gen_bool(0.85) {
                    AssignmentCell::literature()
                } else {
                    AssignmentCell::ABSENT
                };
            }
            hard_requirements.push(HardRequirement {
                characteristic_id: id.clone(),
                required_category_id: format!("K{k}"),
            });
        }
        characteristics.push(Characteristic {
            id: id.clone(),
            name: format!("Characteristic {i}"),
            group: CharacteristicGroup::Data,
            kind: if hard { CharacteristicKind::Hard } else { CharacteristicKind::Soft },
            categories: (0..n_cats)
                .map(|k| Category {
                    id: format!("K{k}"),
                    label: format!("Category {k}"),
                    note: String::new(),
                })
                .collect(),
            exclusive,
            weights: WeightVector(weights),
        });
        assignments.push(AssignmentMatrix {
            characteristic_id: id,
            cells,
        });
    }

    let mut mask = MappingMask::empty(n_chars, n_uacs);
    for row in &mut mask.rows {
        for c in row.iter_mut() {
            *c = match rng.gen_range(0..4) {
                0 => MaskCell::UserOnly,
                1 => MaskCell::UserAndDataEntity,
                _ => MaskCell::None,
            };
        }
    }
    // Keep at least one mark for each audience.
    mask.rows[0][0] = MaskCell::UserAndDataEntity;

    let char_ids: Vec<String> = characteristics.iter().map(|c| c.id.clone()).collect();
    let uac_ids: Vec<String> = uacs.iter().map(|u| u.id.clone()).collect();
    let mut preferences = Vec::new();
    for audience in Audience::ALL {
        let v = normalized(&mut rng, n_chars, 0.2);
        preferences.push(PreferenceVector::new(
            audience,
            PreferenceScope::OverCharacteristics,
            char_ids.iter().cloned().zip(v).collect(),
        ));
    }
    let u = normalized(&mut rng, n_uacs, 0.0);
    preferences.push(PreferenceVector::new(
        Audience::User,
        PreferenceScope::OverUacs,
        uac_ids.into_iter().zip(u).collect(),
    ));

    Scenario {
        metadata: Metadata::default(),
        default_trade_off: trade_off,
        uacs,
        characteristics,
        techniques,
        mask,
        assignments,
        hard_requirements,
        preferences,
        survey: Vec::new(),
        notes: BTreeMap::new(),
    }
}

/// Reference scorer: survivors and their scores from explicit loops over
/// characteristics, categories and techniques.
pub fn oracle_scores(scenario: &Scenario, c: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    't: for (t, tech) in scenario.techniques.iter().enumerate() {
        for req in &scenario.hard_requirements {
            let i = scenario
                .characteristics
                .iter()
                .position(|ch| ch.id == req.characteristic_id)
                .unwrap();
            let k = scenario.characteristics[i]
                .categories
                .iter()
                .position(|cat| cat.id == req.required_category_id)
                .unwrap();
            let cell = scenario.assignments[i].cells[k][t];
            if cell.evidence == Evidence::Absent || cell.value <= 0.0 {
                continue 't;
            }
        }
        let mut e = 0.0;
        for (i, ch) in scenario.characteristics.iter().enumerate() {
            if ch.kind == CharacteristicKind::Hard {
                continue;
            }
            let mut sub = 0.0;
            for k in 0..ch.categories.len() {
                sub += scenario.assignments[i].cells[k][t].value * ch.weights.0[k];
            }
            e += c.get(&ch.id).copied().unwrap_or(0.0) * sub;
        }
        out.insert(tech.id.clone(), e);
    }
    out
}
