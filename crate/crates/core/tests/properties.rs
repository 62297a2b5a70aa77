mod common;

use std::collections::BTreeMap;

use common::{oracle_scores, random_scenario, LIMITS};
use ppmlrank_core::ahp::{aggregate_group, compose_hierarchy, consistency, priority_vector, PairwiseMatrix, Priorities};
use ppmlrank_core::evaluation::{evaluate, filter_hard_requirements, rank, rank_with};
use ppmlrank_core::fixtures;
use ppmlrank_core::io::{load_str, save};
use ppmlrank_core::mapping::{project_mask, translate};
use ppmlrank_core::model::{
    AssignmentCell, Audience, Evidence, HardRequirement, PreferenceScope, PreferenceVector, Scenario, UacGroup,
};
use ppmlrank_core::report::{export_report, ReportFormat, StructuredReport};
use ppmlrank_core::validate::{validate_scenario, ViolationCode};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;

const SCALE: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("i{i}")).collect()
}

fn scale_matrix() -> impl Strategy<Value = PairwiseMatrix> {
    (1usize..=10).prop_flat_map(|n| {
        proptest::collection::vec(0..SCALE.len(), n * n).prop_map(move |picks| {
            PairwiseMatrix::from_upper(ids(n), |a, b| SCALE[picks[a * n + b]]).unwrap()
        })
    })
}

fn user_c(s: &Scenario) -> PreferenceVector {
    s.preference(Audience::User, PreferenceScope::OverCharacteristics)
        .unwrap()
        .clone()
}

fn scores_of(s: &Scenario) -> BTreeMap<String, f64> {
    rank_with(s, &user_c(s)).unwrap().scores
}

#[test]
fn random_scenarios_are_valid() {
    for seed in 0..300 {
        let s = random_scenario(seed, &LIMITS);
        let report = validate_scenario(&s);
        assert!(report.is_empty(), "seed {seed}: {report}");
    }
}

// rank() against explicit loops on 1200 random scenarios.
#[test]
fn rank_matches_oracle() {
    let mut compared = 0;
    for seed in 0..1200 {
        let s = random_scenario(seed, &LIMITS);
        for audience in Audience::ALL {
            let c = s.preference(audience, PreferenceScope::OverCharacteristics).unwrap();
            let expected = oracle_scores(&s, &c.values);
            let got = rank_with(&s, c).unwrap();
            assert_eq!(got.scores.len(), expected.len(), "seed {seed}");
            for (t, e) in &expected {
                let g = got.scores[t];
                assert!((g - e).abs() <= 1e-12, "seed {seed} {t}: {g} vs {e}");
            }
        }
        compared += 1;
    }
    assert!(compared >= 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn consistent_matrices_recover_weights(raw in proptest::collection::vec(0.05f64..1.0, 1..=10)) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let m = PairwiseMatrix::from_weights(ids(w.len()), &w).unwrap();
        let p = priority_vector(&m).unwrap();
        prop_assert!((p.sum() - 1.0).abs() <= 1e-9);
        for (a, b) in p.weights.iter().zip(&w) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        prop_assert!(consistency(&m).unwrap().consistency_ratio.abs() <= 1e-8);
    }

    #[test]
    fn priorities_are_permutation_equivariant(m in scale_matrix(), seed in any::<u64>()) {
        let n = m.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut StdRng::seed_from_u64(seed));
        let items: Vec<String> = perm.iter().map(|&i| m.items()[i].clone()).collect();
        let values = perm.iter().map(|&a| perm.iter().map(|&b| m.get(a, b)).collect()).collect();
        let pm = PairwiseMatrix::new(items, values).unwrap();
        let p = priority_vector(&m).unwrap();
        let pp = priority_vector(&pm).unwrap();
        prop_assert!(p.weights.iter().all(|w| *w > 0.0));
        prop_assert!((p.sum() - 1.0).abs() <= 1e-9);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((pp.weights[k] - p.weights[i]).abs() <= 1e-8);
        }
        let (c, cp) = (consistency(&m).unwrap(), consistency(&pm).unwrap());
        prop_assert!((c.consistency_ratio - cp.consistency_ratio).abs() <= 1e-8);
    }

    #[test]
    fn aggregation_is_reciprocal_and_bounded(
        n in 2usize..=6,
        picks in proptest::collection::vec(proptest::collection::vec(0..SCALE.len(), 36), 1..=8),
    ) {
        let ms: Vec<PairwiseMatrix> = picks
            .iter()
            .map(|p| PairwiseMatrix::from_upper(ids(n), |a, b| SCALE[p[a * n + b]]).unwrap())
            .collect();
        let g = aggregate_group(&ms).unwrap();
        for a in 0..n {
            for b in 0..n {
                let v = g.get(a, b);
                prop_assert!((v * g.get(b, a) - 1.0).abs() <= 1e-9);
                prop_assert!((1.0 / 9.0 - 1e-12..=9.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn composed_preferences_sum_to_one(g in proptest::collection::vec(0.01f64..1.0, 4), seed in any::<u64>()) {
        let s = fixtures::psi();
        let total: f64 = g.iter().sum();
        let groups = Priorities {
            items: UacGroup::ALL.iter().map(|x| x.as_str().to_string()).collect(),
            weights: g.iter().map(|x| x / total).collect(),
        };
        let mut rng = StdRng::seed_from_u64(seed);
        let local: BTreeMap<UacGroup, Priorities> = UacGroup::ALL
            .iter()
            .map(|&grp| {
                let items: Vec<String> = s.uacs_in_group(grp).map(|u| u.id.clone()).collect();
                let w: Vec<f64> = items.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
                let t: f64 = w.iter().sum();
                (grp, Priorities { items, weights: w.iter().map(|x| x / t).collect() })
            })
            .collect();
        let u = compose_hierarchy(&s, &groups, &local, Audience::User).unwrap();
        prop_assert!((u.sum() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn translation_is_scale_invariant_and_monotone(seed in any::<u64>(), k in 0.01f64..100.0) {
        let s = random_scenario(seed, &LIMITS);
        let u = s.preference(Audience::User, PreferenceScope::OverUacs).unwrap().clone();
        let mut scaled = u.clone();
        scaled.values.values_mut().for_each(|v| *v *= k);
        for audience in Audience::ALL {
            let Ok(base) = translate(&s, audience, &u) else { continue };
            let total: f64 = base.normalized.values().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            let other = translate(&s, audience, &scaled).unwrap();
            for (id, v) in &base.normalized {
                prop_assert!((v - other.normalized[id]).abs() <= 1e-12);
            }
            let a = rank_with(&s, &base.preferences()).unwrap();
            let b = rank_with(&s, &other.preferences()).unwrap();
            prop_assert_eq!(a.ordering, b.ordering);

            // Raising one u_j raises exactly the raw scores it is marked for.
            let mask = project_mask(&s.mask, audience);
            let j = (seed as usize) % s.uacs.len();
            let mut bumped = u.clone();
            *bumped.values.get_mut(&s.uacs[j].id).unwrap() += 0.1;
            let up = translate(&s, audience, &bumped).unwrap();
            for (i, c) in s.characteristics.iter().enumerate() {
                let delta = up.raw[&c.id] - base.raw[&c.id];
                if mask.get(i, j) {
                    prop_assert!((delta - 0.1).abs() <= 1e-12);
                } else {
                    prop_assert!(delta.abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn raising_a_cell_only_helps_its_technique(seed in any::<u64>(), bump in 0.0f64..=1.0) {
        let mut s = random_scenario(seed, &LIMITS);
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
        let soft: Vec<usize> = (0..s.characteristics.len()).filter(|&i| !s.characteristics[i].is_hard()).collect();
        prop_assume!(!soft.is_empty());
        let Ok(before) = rank(&s, &user_c(&s), &filter_hard_requirements(&s)) else { return Ok(()) };
        let i = soft[rng.gen_range(0..soft.len())];
        let k = rng.gen_range(0..s.characteristics[i].categories.len());
        let t = rng.gen_range(0..s.techniques.len());
        let cell = &mut s.assignments[i].cells[k][t];
        let value = (cell.value + bump).min(1.0);
        *cell = AssignmentCell { value, evidence: if value > 0.0 { Evidence::Estimate } else { Evidence::Absent } };
        let after = scores_of(&s);
        for (id, v) in &before.scores {
            if *id == s.techniques[t].id {
                prop_assert!(after[id] >= v - 1e-15);
            } else {
                prop_assert_eq!(after[id], *v);
            }
        }
    }

    #[test]
    fn technique_order_does_not_matter(seed in any::<u64>()) {
        let s = random_scenario(seed, &LIMITS);
        let mut perm: Vec<usize> = (0..s.techniques.len()).collect();
        perm.shuffle(&mut StdRng::seed_from_u64(seed.rotate_left(7)));
        let mut p = s.clone();
        p.techniques = perm.iter().map(|&t| s.techniques[t].clone()).collect();
        for (a, b) in p.assignments.iter_mut().zip(&s.assignments) {
            a.cells = b.cells.iter().map(|row| perm.iter().map(|&t| row[t]).collect()).collect();
        }
        let x = rank_with(&s, &user_c(&s)).unwrap();
        let y = rank_with(&p, &user_c(&p)).unwrap();
        prop_assert_eq!(&x.ordering, &y.ordering);
        for (id, v) in &x.scores {
            prop_assert!((v - y.scores[id]).abs() <= 1e-12);
        }
    }

    #[test]
    fn scores_are_column_sums(seed in any::<u64>()) {
        let s = random_scenario(seed, &LIMITS);
        let r = rank_with(&s, &user_c(&s)).unwrap();
        for (col, t) in r.techniques.iter().enumerate() {
            let sum: f64 = r.contributions.iter().map(|row| row[col]).sum();
            prop_assert_eq!(sum, r.scores[&t.id]);
        }
        let mut sorted = r.ordering.clone();
        sorted.sort_by(|a, b| r.scores[b].total_cmp(&r.scores[a]).then_with(|| a.cmp(b)));
        prop_assert_eq!(sorted, r.ordering);
    }

    #[test]
    fn exclusions_are_sound(seed in any::<u64>()) {
        let s = random_scenario(seed, &LIMITS);
        let f = filter_hard_requirements(&s);
        let holds = |req: &HardRequirement, t: usize| {
            let i = s.characteristic_index(&req.characteristic_id).unwrap();
            let k = s.characteristics[i].category_index(&req.required_category_id).unwrap();
            s.assignments[i].cells[k][t].is_assigned()
        };
        for (t, tech) in s.techniques.iter().enumerate() {
            let all = s.hard_requirements.iter().all(|r| holds(r, t));
            prop_assert_eq!(f.survivors.contains(&tech.id), all);
            for e in f.exclusions.iter().filter(|e| e.technique_id == tech.id) {
                let req = s.hard_requirements.iter().find(|r| r.characteristic_id == e.characteristic_id).unwrap();
                prop_assert!(!holds(req, t));
            }
        }
    }

    #[test]
    fn validation_reports_the_injected_violation(seed in any::<u64>(), which in 0usize..5) {
        let mut s = random_scenario(seed, &LIMITS);
        let expected = match which {
            0 => {
                let Some(c) = s.characteristics.iter_mut().find(|c| !c.is_hard()) else { return Ok(()) };
                if c.exclusive {
                    let f = 0.5 / c.weights.len() as f64;
                    c.weights.0.iter_mut().for_each(|w| *w *= f);
                } else {
                    c.weights.0.iter_mut().for_each(|w| *w *= 0.5);
                }
                ViolationCode::WeightSum
            }
            1 => {
                let i = (seed as usize) % s.mask.rows.len();
                s.mask.rows[i].pop();
                ViolationCode::MaskShape
            }
            2 => {
                s.assignments[0].cells[0][0] = AssignmentCell { value: 1.5, evidence: Evidence::Literature };
                ViolationCode::AssignmentRange
            }
            3 => {
                s.preferences[0].values.values_mut().for_each(|v| *v *= 0.5);
                ViolationCode::PreferenceSum
            }
            _ => {
                s.hard_requirements.push(HardRequirement {
                    characteristic_id: "missing".into(),
                    required_category_id: "K0".into(),
                });
                ViolationCode::DanglingReference
            }
        };
        let codes = validate_scenario(&s).codes();
        prop_assert_eq!(codes.into_iter().collect::<Vec<_>>(), vec![expected]);
    }

    #[test]
    fn save_load_is_byte_stable(seed in any::<u64>()) {
        let s = random_scenario(seed, &LIMITS);
        let bytes = save(&s);
        let back = load_str(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(save(&back), bytes.clone());

        // The same document with shuffled keys and no whitespace.
        let value: Value = serde_json::from_str(&bytes).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let shuffled = shuffled_json(&value, &mut rng);
        prop_assert_eq!(save(&load_str(&shuffled).unwrap()), bytes);
    }

    #[test]
    fn structured_report_round_trips(seed in any::<u64>()) {
        let s = random_scenario(seed, &LIMITS);
        let r = evaluate(&s, Audience::User, 0.2).unwrap().ranking;
        let text = export_report(&r, &["n".into()], ReportFormat::Structured);
        let back: StructuredReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back.ranking.ordering, &r.ordering);
        for (id, v) in &r.scores {
            prop_assert!((v - back.ranking.scores[id]).abs() <= 1e-12);
        }
        for (a, b) in r.contributions.iter().flatten().zip(back.ranking.contributions.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

fn shuffled_json(v: &Value, rng: &mut StdRng) -> String {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.shuffle(rng);
            let parts: Vec<String> = entries
                .into_iter()
                .map(|(k, v)| format!("{}:{}", Value::String(k.clone()), shuffled_json(v, rng)))
                .collect();
            format!("{{{}}}", parts.join(","))
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|x| shuffled_json(x, rng)).collect();
            format!("[{}]", parts.join(","))
        }
        other => other.to_string(),
    }
}
