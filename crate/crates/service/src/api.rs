//! HTTP/JSON routes.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dac_core::{AssetError, Assignment, ProbError, QuestionId, TradeSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ServiceError;
use crate::host::{MarketService, NewMarket};
use crate::state::{LimitsReport, ResolutionReport, TradeReceipt, UserReport};

pub const ADMIN_HEADER: &str = "x-admin-token";

pub fn router(service: Arc<MarketService>) -> Router {
    Router::new()
        .route("/markets", post(create_market).get(list_markets))
        .route("/markets/{m}/accounts", post(create_account))
        .route("/markets/{m}/questions", get(questions))
        .route("/markets/{m}/marginal", get(marginal))
        .route("/markets/{m}/trades", post(trade))
        .route("/markets/{m}/users/{u}", get(user))
        .route("/markets/{m}/users/{u}/edit-limits", get(edit_limits))
        .route("/markets/{m}/resolve", post(resolve))
        .route("/markets/{m}/ledger", get(ledger))
        .with_state(service)
}

/// Monetary amounts leave the service at four decimals.
pub fn money(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug)]
pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

fn prob_status(e: &ProbError) -> StatusCode {
    match e {
        ProbError::UnknownQuestion(_) => StatusCode::NOT_FOUND,
        ProbError::Resolved(_) => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = self.0;
        let status = match &e {
            ServiceError::UnknownMarket(_) | ServiceError::UnknownUser(_) => StatusCode::NOT_FOUND,
            ServiceError::DuplicateUser(_) => StatusCode::CONFLICT,
            ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Market(p) | ServiceError::Assets(AssetError::Prob(p)) => prob_status(p),
            ServiceError::Assets(_) => StatusCode::BAD_REQUEST,
            ServiceError::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::CorruptLedger { .. } | ServiceError::Io(_) | ServiceError::Json(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = match &e {
            ServiceError::Rejected {
                worst_state,
                deficit,
            } => json!({
                "accepted": false,
                "reason": e.to_string(),
                "worst_state": worst_state,
                "deficit": money(*deficit),
            }),
            _ => json!({ "error": e.to_string() }),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError(ServiceError::InvalidRequest(msg.into()))
}

async fn list_markets(State(svc): State<Arc<MarketService>>) -> Json<Value> {
    Json(json!({ "markets": svc.market_ids() }))
}

async fn create_market(
    State(svc): State<Arc<MarketService>>,
    Json(req): Json<NewMarket>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let host = svc.create_market(req)?;
    let snap = host.snapshot();
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "market_id": host.id(),
            "sequence": snap.sequence,
            "config": snap.config,
            "questions": snap.market.questions(),
        })),
    ))
}

#[derive(Deserialize)]
struct NewAccount {
    user: String,
    #[serde(default)]
    name: Option<String>,
}

async fn create_account(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
    Json(req): Json<NewAccount>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let host = svc.market(m)?;
    let name = req.name.unwrap_or_else(|| req.user.clone());
    let account = host.create_account(&req.user, &name)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "sequence": host.snapshot().sequence,
            "user": account.user,
            "name": account.name,
            "baseline": money(account.baseline),
        })),
    ))
}

async fn questions(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
) -> ApiResult<Json<Value>> {
    let snap = svc.market(m)?.snapshot();
    let questions = snap.question_statuses()?;
    Ok(Json(
        json!({ "sequence": snap.sequence, "questions": questions }),
    ))
}

fn parse_ids(text: &str) -> ApiResult<Vec<QuestionId>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map(QuestionId)
                .map_err(|_| bad(format!("bad question id {s:?}")))
        })
        .collect()
}

/// `"1:0,2:1"` → `{Q1 = 0, Q2 = 1}`.
fn parse_assume(text: &str) -> ApiResult<Assignment> {
    let mut out = Assignment::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (q, s) = part
            .split_once(':')
            .ok_or_else(|| bad(format!("assumption {part:?} is not question:state")))?;
        let q = q
            .trim()
            .parse::<u32>()
            .map_err(|_| bad(format!("bad question id {q:?}")))?;
        let s = s
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("bad state {s:?}")))?;
        if out.insert(QuestionId(q), s).is_some() {
            return Err(bad(format!("question {q} assumed twice")));
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct MarginalQuery {
    #[serde(default)]
    vars: String,
}

async fn marginal(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
    Query(q): Query<MarginalQuery>,
) -> ApiResult<Json<Value>> {
    let snap = svc.market(m)?.snapshot();
    let vars = parse_ids(&q.vars)?;
    if vars.is_empty() {
        return Err(bad("vars must name at least one question"));
    }
    let table = snap.market.marginal(&vars).map_err(ServiceError::from)?;
    Ok(Json(json!({
        "sequence": snap.sequence,
        "scope": table.scope(),
        "values": table.values(),
    })))
}

#[derive(Deserialize)]
struct TradeRequest {
    user: String,
    target: u32,
    #[serde(default)]
    assumptions: std::collections::BTreeMap<String, usize>,
    new_dist: Vec<f64>,
    #[serde(default)]
    dry_run: bool,
}

impl TradeRequest {
    fn spec(&self) -> ApiResult<TradeSpec<f64>> {
        let mut given = Assignment::new();
        for (q, &s) in &self.assumptions {
            let q = q
                .parse::<u32>()
                .map_err(|_| bad(format!("bad question id {q:?}")))?;
            given.insert(QuestionId(q), s);
        }
        Ok(TradeSpec::new(
            QuestionId(self.target),
            given,
            self.new_dist.clone(),
        ))
    }
}

#[derive(Serialize)]
struct TradeResponse {
    accepted: bool,
    #[serde(flatten)]
    receipt: TradeReceipt,
}

async fn trade(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
    Json(req): Json<TradeRequest>,
) -> ApiResult<Json<TradeResponse>> {
    let host = svc.market(m)?;
    let spec = req.spec()?;
    let mut receipt = host.submit_trade(&req.user, spec, req.dry_run)?;
    receipt.cash = money(receipt.cash);
    receipt.expected = money(receipt.expected);
    Ok(Json(TradeResponse {
        accepted: true,
        receipt,
    }))
}

/// API view of a user report.
pub fn round_user_report(mut r: UserReport) -> UserReport {
    r.baseline = money(r.baseline);
    r.cash = money(r.cash);
    r.expected = money(r.expected);
    for b in &mut r.blocks {
        b.min = money(b.min);
        b.max = money(b.max);
    }
    r
}

async fn user(
    State(svc): State<Arc<MarketService>>,
    Path((m, u)): Path<(u64, String)>,
) -> ApiResult<Json<UserReport>> {
    let snap = svc.market(m)?.snapshot();
    Ok(Json(round_user_report(snap.user_report(&u)?)))
}

#[derive(Deserialize)]
struct LimitsQuery {
    target: u32,
    #[serde(default)]
    assume: String,
}

async fn edit_limits(
    State(svc): State<Arc<MarketService>>,
    Path((m, u)): Path<(u64, String)>,
    Query(q): Query<LimitsQuery>,
) -> ApiResult<Json<LimitsReport>> {
    let snap = svc.market(m)?.snapshot();
    let given = parse_assume(&q.assume)?;
    Ok(Json(snap.edit_limits(&u, QuestionId(q.target), &given)?))
}

#[derive(Deserialize)]
struct ResolveRequest {
    question: u32,
    state: usize,
}

async fn resolve(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
    headers: HeaderMap,
    Json(req): Json<ResolveRequest>,
) -> ApiResult<Json<ResolutionReport>> {
    let token = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
    svc.check_admin(token)?;
    let host = svc.market(m)?;
    let mut report = host.resolve(QuestionId(req.question), req.state)?;
    for c in &mut report.users {
        c.before = money(c.before);
        c.after = money(c.after);
    }
    Ok(Json(report))
}

#[derive(Deserialize)]
struct LedgerQuery {
    #[serde(default)]
    from: u64,
}

async fn ledger(
    State(svc): State<Arc<MarketService>>,
    Path(m): Path<u64>,
    Query(q): Query<LedgerQuery>,
) -> ApiResult<Response> {
    let host = svc.market(m)?;
    let mut body = String::new();
    for r in host.records(q.from) {
        body.push_str(&serde_json::to_string(&r).map_err(ServiceError::from)?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assumption_strings() {
        let a = parse_assume("1:0, 2:1").unwrap();
        assert_eq!(
            a,
            Assignment::new()
                .with(QuestionId(1), 0)
                .with(QuestionId(2), 1)
        );
        assert!(parse_assume("").unwrap().is_empty());
        assert!(parse_assume("1").is_err());
        assert!(parse_assume("1:0,1:1").is_err());
    }

    #[test]
    fn money_rounds_to_four_places() {
        assert_eq!(money(77.685_644_868_579), 77.6856);
        assert_eq!(money(-60.943_791), -60.9438);
    }
}
