use std::collections::BTreeMap;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use glossa_core::{BoundaryPolicy, MaskMode};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::SessionError;
use crate::session::{Phase, SessionConfig};
use crate::store::AppState;
use crate::views;

type Reply = Result<Json<Value>, SessionError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/corpora", get(corpora))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(session_state))
        .route("/sessions/{id}/corpus", get(corpus))
        .route("/sessions/{id}/join", post(join))
        .route("/sessions/{id}/phase", post(phase))
        .route("/sessions/{id}/bracelet", post(bracelet))
        .route("/sessions/{id}/suggest", get(suggest))
        .route("/sessions/{id}/rules", post(rules))
        .route("/sessions/{id}/reveal", get(reveal))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/submissions/{index}/hide", post(hide))
        .with_state(state)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, SessionError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| SessionError::BadRequest(e.body_text()))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn corpora(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "corpora": state.registry().names() }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    corpus: String,
    mask_mode: Option<MaskMode>,
    seed: Option<u64>,
    policy: Option<BoundaryPolicy>,
    hints: Option<bool>,
    teams: Option<Vec<String>>,
    team_cap: Option<usize>,
    deal_seed: Option<u64>,
    facilitator_key: Option<String>,
}

async fn create(
    State(state): State<AppState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), SessionError> {
    let req = body(payload)?;
    let defaults = SessionConfig::default();
    let config = SessionConfig {
        corpus: req.corpus,
        mask_mode: req.mask_mode.unwrap_or(defaults.mask_mode),
        seed: req.seed.unwrap_or(defaults.seed),
        policy: req.policy.unwrap_or(defaults.policy),
        hints: req.hints.unwrap_or(defaults.hints),
        teams: req.teams.unwrap_or(defaults.teams),
        team_cap: req.team_cap,
        deal_seed: req.deal_seed,
    };
    let (id, key) = state.create(config, req.facilitator_key)?;
    let (phase, version) = state.read(&id, |s| Ok((s.phase(), s.version()))).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session": id, "facilitator_key": key, "phase": phase, "version": version })),
    ))
}

async fn session_state(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Reply {
    state
        .read(&id, |s| {
            Ok(Json(views::state(s, &s.viewer(bearer(&headers))?)))
        })
        .await
}

async fn corpus(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Reply {
    state
        .read(&id, |s| {
            s.viewer(bearer(&headers))?;
            Ok(Json(views::corpus(s)))
        })
        .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinRequest {
    team: String,
    name: String,
    token: Option<String>,
}

async fn join(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<JoinRequest>, JsonRejection>,
) -> Reply {
    let req = body(payload)?;
    let existing = req
        .token
        .clone()
        .or_else(|| bearer(&headers).map(str::to_string));
    let fresh = uuid::Uuid::new_v4().to_string();
    state
        .write(
            &id,
            |s| s.decide_join(existing.as_deref(), &req.team, &req.name, fresh),
            |s, token| {
                let p = s.participant(&token).expect("joined participant");
                Ok(Json(json!({
                    "participant_token": token,
                    "name": p.name,
                    "team": s.teams()[p.team].name,
                    "phase": s.phase(),
                    "version": s.version(),
                })))
            },
        )
        .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseRequest {
    to: Option<Phase>,
    #[serde(default)]
    deal: BTreeMap<String, usize>,
}

async fn phase(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<PhaseRequest>, JsonRejection>,
) -> Reply {
    let req = match payload {
        Err(JsonRejection::MissingJsonContentType(_)) => PhaseRequest::default(),
        other => body(other)?,
    };
    state
        .write(
            &id,
            |s| {
                let viewer = s.viewer(bearer(&headers))?;
                Ok(((), s.decide_advance(&viewer, req.to, &req.deal)?))
            },
            |s, ()| Ok(Json(json!({ "phase": s.phase(), "version": s.version() }))),
        )
        .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BraceletRequest {
    tokens: Vec<String>,
}

async fn bracelet(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<BraceletRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), SessionError> {
    let req = body(payload)?;
    state
        .write(
            &id,
            |s| {
                let viewer = s.viewer(bearer(&headers))?;
                Ok(((), s.decide_submit(&viewer, &req.tokens)?))
            },
            |s, ()| {
                let record = s.submissions().last().expect("just submitted");
                Ok((
                    StatusCode::CREATED,
                    Json(json!({
                        "index": record.index,
                        "team": record.team,
                        "author": record.author,
                        "tokens": record.tokens,
                        "verdict": record.verdict,
                        "submitted_at": record.submitted_at,
                        "version": s.version(),
                    })),
                ))
            },
        )
        .await
}

#[derive(Debug, Deserialize)]
struct SuggestQuery {
    #[serde(default)]
    prefix: String,
}

async fn suggest(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Query(q): Query<SuggestQuery>,
) -> Reply {
    let prefix: Vec<String> = q.prefix.split_whitespace().map(str::to_string).collect();
    state
        .read(&id, |s| {
            let viewer = s.viewer(bearer(&headers))?;
            let suggestions = s.suggest(&viewer, &prefix)?;
            Ok(Json(
                json!({ "prefix": prefix, "suggestions": suggestions }),
            ))
        })
        .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRequest {
    rule: String,
}

async fn rules(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<RuleRequest>, JsonRejection>,
) -> Reply {
    let req = body(payload)?;
    state
        .write(
            &id,
            |s| {
                let viewer = s.viewer(bearer(&headers))?;
                Ok(((), s.decide_propose(&viewer, &req.rule)?))
            },
            |s, ()| Ok(Json(json!({ "poll": s.poll(), "version": s.version() }))),
        )
        .await
}

async fn reveal(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Reply {
    state
        .read(&id, |s| {
            s.viewer(bearer(&headers))?;
            Ok(Json(views::reveal(s)?))
        })
        .await
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    #[serde(default)]
    since: u64,
    /// Long-poll budget in milliseconds; 0 answers at once.
    #[serde(default)]
    wait_ms: u64,
}

async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Query(q): Query<StreamQuery>,
) -> Reply {
    let token = bearer(&headers).map(str::to_string);
    // authenticate before parking the request
    state
        .read(&id, |s| s.viewer(token.as_deref()).map(|_| ()))
        .await?;
    if q.wait_ms > 0 {
        state
            .wait_past(&id, q.since, Duration::from_millis(q.wait_ms))
            .await?;
    }
    state
        .read(&id, |s| {
            let viewer = s.viewer(token.as_deref())?;
            Ok(Json(views::stream(s, q.since, &viewer)))
        })
        .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HideRequest {
    hidden: bool,
}

async fn hide(
    State(state): State<AppState>,
    Path((id, index)): Path<(String, usize)>,
    headers: HeaderMap,
    payload: Result<Json<HideRequest>, JsonRejection>,
) -> Reply {
    let req = body(payload)?;
    state
        .write(
            &id,
            |s| {
                let viewer = s.viewer(bearer(&headers))?;
                Ok(((), s.decide_hide(&viewer, index, req.hidden)?))
            },
            |s, ()| {
                Ok(Json(
                    json!({ "index": index, "hidden": req.hidden, "version": s.version() }),
                ))
            },
        )
        .await
}
