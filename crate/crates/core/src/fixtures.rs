//! Bundled scenarios.

use crate::io::{load_survey_str, load_unvalidated};
use crate::model::Scenario;
use crate::survey::ParticipantResponse;

/// Six PPML techniques assessed against fourteen characteristics and fifteen
/// UACs, with published preferences for both audiences.
pub const PSI_SCENARIO: &str = include_str!("../fixtures/psi.scenario");

/// Five synthetic participants. `p3` gives an intransitive PC matrix.
pub const SYNTHETIC_SURVEY: &str = include_str!("../fixtures/synthetic_survey.json");

pub fn psi() -> Scenario {
    load_unvalidated(PSI_SCENARIO).expect("bundled scenario resolves")
}

pub fn synthetic_survey(scenario: &Scenario) -> Vec<ParticipantResponse> {
    load_survey_str(scenario, SYNTHETIC_SURVEY).expect("bundled survey resolves")
}
