//! JSON-over-HTTP facade for the debt-gauge bank, sessions and reports.
//!
//! Respondent-scoped payloads (question delivery, session views, respondent
//! reports) are built from view types that have no weight field. The analyst
//! report is only produced for an explicit `audience=analyst` query.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use debt_gauge_core::{
    build_report, render, AnswerValue, AssessmentSession, Audience, DebtType, Format, Question,
    QuestionBank, ReportError, Role, SessionId, SessionStatus, SessionStore, StoreError,
};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

mod error;

pub use error::ApiError;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Clone)]
struct AppState {
    store: Arc<SessionStore>,
}

impl AppState {
    fn bank(&self) -> &QuestionBank {
        self.store.bank()
    }
}

/// Builds the application router. Static webapp assets are served from
/// `static_dir` when given; otherwise `/` returns a short landing page.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/bank/meta", get(bank_meta))
        .route("/types", get(types))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/questions", get(list_questions))
        .route("/sessions/{id}/questions/next", get(next_question))
        .route("/sessions/{id}/answers/{qid}", put(put_answer))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/report", get(report))
        .route("/compare", get(compare))
        .route("/combine", get(combine))
        .fallback(api_not_found);

    let app = Router::new().nest("/api", api);
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(landing)),
    };
    app.with_state(AppState { store })
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(
    addr: SocketAddr,
    store: Arc<SessionStore>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, "debt-gauge service listening");
    axum::serve(listener, router(store, static_dir)).await
}

async fn landing() -> Html<&'static str> {
    Html(include_str!("landing.html"))
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// Runs a store operation off the async executor.
async fn blocking<T, F>(state: &AppState, op: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, StoreError> + Send + 'static,
{
    let store = Arc::clone(&state.store);
    tokio::task::spawn_blocking(move || op(&store))
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
        .map_err(ApiError::from)
}

fn parse_id(raw: &str) -> Result<SessionId, ApiError> {
    raw.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "session_not_found",
            format!("session {raw} not found"),
        )
    })
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

#[derive(Serialize)]
struct BankMeta<'a> {
    schema_version: &'a str,
    bank_version: &'a str,
    content_hash: &'a str,
    question_count: usize,
    per_type_counts: BTreeMap<DebtType, usize>,
    applicable_counts: BTreeMap<Role, usize>,
}

async fn bank_meta(State(state): State<AppState>) -> Response {
    let bank = state.bank();
    Json(BankMeta {
        schema_version: bank.schema_version(),
        bank_version: bank.bank_version(),
        content_hash: bank.content_hash(),
        question_count: bank.questions().len(),
        per_type_counts: bank.count_by_type(),
        applicable_counts: [Role::Organizer, Role::Participant]
            .into_iter()
            .map(|r| (r, bank.applicable_questions(r).len()))
            .collect(),
    })
    .into_response()
}

#[derive(Serialize)]
struct TypeView<'a> {
    #[serde(rename = "type")]
    debt_type: DebtType,
    label: &'static str,
    question_count: usize,
    definition: &'a str,
    problem: &'a str,
    example: &'a str,
}

async fn types(State(state): State<AppState>) -> Response {
    let bank = state.bank();
    let counts = bank.count_by_type();
    let views: Vec<TypeView<'_>> = bank
        .descriptors()
        .iter()
        .map(|d| TypeView {
            debt_type: d.debt_type,
            label: d.debt_type.label(),
            question_count: counts[&d.debt_type],
            definition: &d.definition,
            problem: &d.problem,
            example: &d.example,
        })
        .collect();
    Json(views).into_response()
}

/// Question as delivered to a respondent: no weight.
#[derive(Serialize)]
struct QuestionView {
    id: u32,
    debt_type: DebtType,
    debt_type_label: &'static str,
    text: String,
    justification: String,
    example: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    erratum_note: Option<String>,
    answer: Option<AnswerValue>,
}

impl QuestionView {
    fn new(q: &Question, session: &AssessmentSession) -> Self {
        QuestionView {
            id: q.id,
            debt_type: q.debt_type,
            debt_type_label: q.debt_type.label(),
            text: q.text.clone(),
            justification: q.justification.clone(),
            example: q.example.clone(),
            erratum_note: q.erratum_note.clone(),
            answer: session.responses.get(&q.id).map(|r| r.answer),
        }
    }
}

#[derive(Serialize)]
struct ResponseView {
    question_id: u32,
    answer: AnswerValue,
    answered_at: String,
}

#[derive(Serialize)]
struct SessionView {
    session_id: SessionId,
    role: Role,
    platform_label: String,
    status: SessionStatus,
    revision: u64,
    created_at: String,
    updated_at: String,
    applicable_count: usize,
    answered_count: usize,
    unanswered: Vec<u32>,
    responses: Vec<ResponseView>,
}

impl SessionView {
    fn new(session: &AssessmentSession, bank: &QuestionBank) -> Self {
        SessionView {
            session_id: session.session_id.clone(),
            role: session.role,
            platform_label: session.platform_label.clone(),
            status: session.status,
            revision: session.revision,
            created_at: session.created_at.to_rfc3339(),
            updated_at: session.updated_at.to_rfc3339(),
            applicable_count: session.applicable_count(bank),
            answered_count: session.responses.len(),
            unanswered: session.unanswered(bank),
            responses: session
                .responses
                .values()
                .map(|r| ResponseView {
                    question_id: r.question_id,
                    answer: r.answer,
                    answered_at: r.answered_at.to_rfc3339(),
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct CreateSession {
    role: Role,
    #[serde(alias = "platform_label")]
    label: String,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let session = blocking(&state, move |store| {
        store.create_session(req.role, &req.label)
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(SessionView::new(&session, state.bank())),
    )
        .into_response())
}

async fn list_sessions(State(state): State<AppState>) -> Result<Response, ApiError> {
    let sessions = blocking(&state, |store| store.list()).await?;
    Ok(Json(sessions).into_response())
}

async fn load(state: &AppState, raw_id: &str) -> Result<AssessmentSession, ApiError> {
    let id = parse_id(raw_id)?;
    blocking(state, move |store| store.load(&id)).await
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let session = load(&state, &id).await?;
    Ok(Json(SessionView::new(&session, state.bank())).into_response())
}

async fn list_questions(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let session = load(&state, &id).await?;
    let views: Vec<QuestionView> = state
        .bank()
        .applicable_questions(session.role)
        .into_iter()
        .map(|q| QuestionView::new(q, &session))
        .collect();
    Ok(Json(views).into_response())
}

#[derive(Serialize)]
struct NextQuestion {
    #[serde(flatten)]
    question: QuestionView,
    position: usize,
    applicable_count: usize,
    remaining: usize,
    revision: u64,
}

async fn next_question(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let session = load(&state, &id).await?;
    let bank = state.bank();
    let applicable = bank.applicable_questions(session.role);
    let unanswered = session.unanswered(bank);
    let Some(next_id) = unanswered.first() else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let position = applicable
        .iter()
        .position(|q| q.id == *next_id)
        .expect("unanswered ids are applicable");
    Ok(Json(NextQuestion {
        question: QuestionView::new(applicable[position], &session),
        position: position + 1,
        applicable_count: applicable.len(),
        remaining: unanswered.len(),
        revision: session.revision,
    })
    .into_response())
}

#[derive(Deserialize)]
struct PutAnswer {
    answer: AnswerValue,
    revision: u64,
}

async fn put_answer(
    State(state): State<AppState>,
    Path((id, qid)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let qid: u32 = qid.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "question_not_found",
            format!("question {qid} not found"),
        )
    })?;
    let req: PutAnswer = parse_body(&body)?;
    let session = blocking(&state, move |store| {
        store.record_answer(&id, qid, req.answer, req.revision)
    })
    .await?;
    Ok(Json(SessionView::new(&session, state.bank())).into_response())
}

async fn finalize(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let session = blocking(&state, move |store| store.finalize(&id)).await?;
    Ok(Json(SessionView::new(&session, state.bank())).into_response())
}

async fn report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let audience: Audience = match params.get("audience") {
        Some(a) => a.parse().map_err(ApiError::bad_request)?,
        None => Audience::Respondent,
    };
    let format: Format = match params.get("format") {
        Some(f) => f.parse().map_err(ApiError::bad_request)?,
        None => Format::Json,
    };
    let session = load(&state, &id).await?;
    let report = build_report(state.bank(), &session, audience).map_err(|e| match e {
        ReportError::BankMismatch { .. } => {
            ApiError::new(StatusCode::CONFLICT, "bank_mismatch", e.to_string())
        }
        ReportError::Scoring(e) => ApiError::internal(e.to_string()),
    })?;
    Ok((
        [(header::CONTENT_TYPE, format.content_type())],
        render(&report, format),
    )
        .into_response())
}

async fn compare(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let get = |k: &str| {
        params
            .get(k)
            .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{k}`")))
            .and_then(|v| parse_id(v))
    };
    let (a, b) = (get("a")?, get("b")?);
    let delta = blocking(&state, move |store| store.compare(&a, &b)).await?;
    Ok(Json(delta).into_response())
}

async fn combine(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let get = |k: &str| {
        params
            .get(k)
            .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{k}`")))
            .and_then(|v| parse_id(v))
    };
    let (org, part) = (get("organizer")?, get("participant")?);
    let combined = blocking(&state, move |store| store.combine(&org, &part)).await?;
    Ok(Json(combined).into_response())
}
