//! Ranking of privacy-preserving machine-learning techniques from user
//! acceptance criteria.
//!
//! The pipeline runs in three stages. Pairwise judgments over user acceptance
//! criteria (UACs) are turned into priority weights ([`ahp`], [`survey`]).
//! Those weights are translated into importance scores over technical
//! characteristics through a binary mask ([`mapping`]). Techniques are then
//! filtered by hard requirements and scored ([`evaluation`]).

pub mod ahp;
pub mod evaluation;
pub mod fixtures;
pub mod io;
pub mod mapping;
pub mod model;
pub mod report;
pub mod sensitivity;
pub mod survey;
pub mod validate;
pub mod whatif;

pub use evaluation::{evaluate, rank, EvaluationError, RankingResult};
pub use io::{load, load_str, save, IoError};
pub use model::{Audience, Scenario};
