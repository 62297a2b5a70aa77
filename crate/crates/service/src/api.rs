//! HTTP routes under `/v1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use ppmlrank_core::ahp::ConsistencyResult;
use ppmlrank_core::evaluation::{resolve_preferences, EvaluationError, ExclusionRecord, ResolvedPreferences};
use ppmlrank_core::io::{self, IoError};
use ppmlrank_core::mapping::TranslationResult;
use ppmlrank_core::model::Audience;
use ppmlrank_core::sensitivity::{sensitivity_sweep, Parameter};
use ppmlrank_core::survey::{build_response, JudgmentSet, MatrixKey, SurveyError};
use ppmlrank_core::whatif::{evaluate_with_overrides, Overrides};
use ppmlrank_core::RankingResult;
use serde::{Deserialize, Serialize};

use crate::state::{overrides_hash, AppState, CacheKey};

pub type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/scenarios", get(list_scenarios))
        .route("/v1/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/v1/scenarios/{id}/participants/{pid}/judgments", post(post_judgments))
        .route("/v1/scenarios/{id}/preferences", get(get_preferences))
        .route("/v1/scenarios/{id}/ranking", get(get_ranking))
        .route("/v1/scenarios/{id}/whatif", post(post_whatif))
        .route("/v1/scenarios/{id}/sensitivity", get(get_sensitivity))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<ExclusionRecord>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                exclusions: Vec::new(),
            },
        }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "SCENARIO_NOT_FOUND", format!("no scenario `{id}`"))
    }

    fn empty_survivors(exclusions: Vec<ExclusionRecord>) -> Self {
        let mut e = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "EMPTY_SURVIVORS",
            "every technique is excluded by a hard requirement",
        );
        e.body.exclusions = exclusions;
        e
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, io::to_canonical_json(&self.body))
    }
}

impl From<EvaluationError> for ApiError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::EmptySurvivors { exclusions } => ApiError::empty_survivors(exclusions),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        let status = match e {
            IoError::Parse { .. } | IoError::SchemaVersionUnsupported { .. } => StatusCode::BAD_REQUEST,
            IoError::Read { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<SurveyError> for ApiError {
    fn from(e: SurveyError) -> Self {
        let status = match e {
            SurveyError::ItemMismatch { .. } => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

fn json_response(status: StatusCode, body: impl Into<String>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body.into()).into_response()
}

fn ok_json(body: &str) -> Response {
    json_response(StatusCode::OK, body.to_string())
}

fn parse_audience(raw: Option<&str>) -> Result<Audience, ApiError> {
    match raw {
        None => Ok(Audience::User),
        Some(s) => s
            .parse()
            .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "INVALID_AUDIENCE", e)),
    }
}

#[derive(Debug, Deserialize)]
pub struct AudienceQuery {
    audience: Option<String>,
}

async fn list_scenarios(State(state): State<Shared>) -> Response {
    ok_json(&io::to_canonical_json(&state.ids().await))
}

async fn get_scenario(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let session = slot.read().await;
    Ok(ok_json(&io::save(&session.scenario)))
}

async fn put_scenario(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "PARSE_ERROR", e.to_string()))?;
    let scenario = io::load_str(text)?;
    let canonical = io::save(&scenario);
    let (slot, created) = state.get_or_insert(&id, scenario.clone()).await;
    let mut session = slot.write().await;
    if !created {
        session.replace_scenario(scenario);
    }
    if let Some(path) = state.scenario_path(&id) {
        std::fs::write(&path, &canonical).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "WRITE_ERROR", e.to_string())
        })?;
    }
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(json_response(status, canonical))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MatrixConsistency {
    #[serde(flatten)]
    pub result: ConsistencyResult,
    pub flagged: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JudgmentReceipt {
    pub participant_id: String,
    pub threshold: f64,
    pub matrices: BTreeMap<MatrixKey, MatrixConsistency>,
    /// Whether any matrix exceeds the threshold. Flagged responses are kept.
    pub flagged: bool,
    pub replaced: bool,
}

async fn post_judgments(
    State(state): State<Shared>,
    Path((id, pid)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let judgments: JudgmentSet = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MALFORMED_JUDGMENT", e.to_string()))?;
    let slot = state.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let mut session = slot.write().await;
    let response = build_response(&session.scenario, &pid, &judgments)?;
    let consistency = response
        .consistency()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))?;
    let matrices: BTreeMap<MatrixKey, MatrixConsistency> = consistency
        .into_iter()
        .map(|(k, result)| {
            let flagged = result.consistency_ratio > state.cr_threshold;
            (k, MatrixConsistency { result, flagged })
        })
        .collect();
    let replaced = session.upsert_response(response);
    if let Some(path) = state.survey_path(&id) {
        std::fs::write(&path, io::save_survey(&session.scenario.survey)).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "WRITE_ERROR", e.to_string())
        })?;
    }
    let receipt = JudgmentReceipt {
        participant_id: pid,
        threshold: state.cr_threshold,
        flagged: matrices.values().any(|m| m.flagged),
        matrices,
        replaced,
    };
    Ok(ok_json(&io::to_canonical_json(&receipt)))
}

async fn get_preferences(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AudienceQuery>,
) -> Result<Response, ApiError> {
    let audience = parse_audience(q.audience.as_deref())?;
    let slot = state.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let session = slot.read().await;
    let key = CacheKey::Preferences(audience);
    if let Some(body) = session.cached(&key) {
        return Ok(ok_json(&body));
    }
    let prefs: ResolvedPreferences = resolve_preferences(&session.scenario, audience, state.cr_threshold)?;
    let body = session.store(key, io::to_canonical_json(&prefs));
    Ok(ok_json(&body))
}

/// Body of ranking and what-if responses.
#[derive(Debug, Serialize, Deserialize)]
pub struct RankingResponse {
    pub ranking: RankingResult,
    pub translation: TranslationResult,
}

async fn ranking_body(state: &AppState, id: &str, audience: Audience, overrides: &Overrides) -> Result<Response, ApiError> {
    let slot = state.get(id).await.ok_or_else(|| ApiError::not_found(id))?;
    let session = slot.read().await;
    let key = CacheKey::Ranking(audience, overrides_hash(overrides));
    if let Some(body) = session.cached(&key) {
        return Ok(ok_json(&body));
    }
    let eval = evaluate_with_overrides(&session.scenario, audience, overrides, state.cr_threshold)?;
    if eval.ranking.is_empty() {
        return Err(ApiError::empty_survivors(eval.ranking.exclusions));
    }
    let body = RankingResponse {
        ranking: eval.ranking,
        translation: eval.preferences.translation,
    };
    let body = session.store(key, io::to_canonical_json(&body));
    Ok(ok_json(&body))
}

async fn get_ranking(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AudienceQuery>,
) -> Result<Response, ApiError> {
    let audience = parse_audience(q.audience.as_deref())?;
    ranking_body(&state, &id, audience, &Overrides::default()).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    audience: Option<String>,
    #[serde(default)]
    overrides: Overrides,
}

async fn post_whatif(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: WhatIfRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "PARSE_ERROR", e.to_string()))?;
    let audience = parse_audience(req.audience.as_deref())?;
    ranking_body(&state, &id, audience, &req.overrides).await
}

#[derive(Debug, Deserialize)]
pub struct SensitivityQuery {
    audience: Option<String>,
    parameter: String,
    lo: Option<f64>,
    hi: Option<f64>,
    steps: Option<usize>,
}

async fn get_sensitivity(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<SensitivityQuery>,
) -> Result<Response, ApiError> {
    let audience = parse_audience(q.audience.as_deref())?;
    let parameter: Parameter = q.parameter.parse()?;
    let slot = state.get(&id).await.ok_or_else(|| ApiError::not_found(&id))?;
    let session = slot.read().await;
    let report = sensitivity_sweep(
        &session.scenario,
        audience,
        &parameter,
        (q.lo.unwrap_or(-0.1), q.hi.unwrap_or(0.1)),
        q.steps.unwrap_or(20),
        state.cr_threshold,
    )?;
    Ok(ok_json(&io::to_canonical_json(&report)))
}
