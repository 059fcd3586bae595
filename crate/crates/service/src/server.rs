//! HTTP and WebSocket service for live sessions.
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | open a session, body `{trainee_id, session_index, session_id?}` |
//! | `GET /sessions/{id}/live` | WebSocket stream of wire messages |
//! | `GET /sessions/{id}/summary` | current [`SessionSummary`] |
//! | `GET /sessions/{id}/satf` | SATF points as JSON, or SVG with `?format=svg` |
//! | `POST /sessions/{id}/close` | close the session and return its summary |
//! | `GET /expert`, `/directives`, `/geometry` | static configuration |
//!
//! Every decoded client message is appended to `<log_dir>/<session_id>.jsonl`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{LineWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;

use satf_core::benchmark::ExpertProfile;
use satf_core::control::{decide_trial, ControlConfig};
use satf_core::geometry::BoardGeometry;
use satf_core::session::{SessionOutput, SessionRecord, SessionRunner};

use crate::analysis::{rows_of, satf_of, summarize_rows, SessionSummary};
use crate::directives;
use crate::eventlog::{header_line, LogHeader};
use crate::svg::render_satf;
use crate::wire::{
    decode_client, encode_client, encode_server, ClientMessage, ErrorCode, ServerMessage,
};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub expert: ExpertProfile,
    pub geometry: BoardGeometry,
    pub control: ControlConfig,
    pub log_dir: PathBuf,
}

pub struct LiveSession {
    header: LogHeader,
    runner: Option<SessionRunner>,
    closed: Option<(SessionRecord, SessionSummary)>,
    log: LineWriter<File>,
}

impl LiveSession {
    fn record(&self) -> &SessionRecord {
        match (&self.runner, &self.closed) {
            (Some(r), _) => r.record(),
            (None, Some((rec, _))) => rec,
            (None, None) => unreachable!("session has neither runner nor final record"),
        }
    }

    fn append(&mut self, msg: &ClientMessage) {
        if let Err(e) = writeln!(self.log, "{}", encode_client(msg)) {
            tracing::error!(session = %self.header.session_id, "event log write failed: {e}");
        }
    }

    fn close(&mut self, cfg: &ServerConfig) -> Result<SessionSummary, String> {
        if let Some((_, summary)) = &self.closed {
            return Ok(summary.clone());
        }
        self.append(&ClientMessage::EndSession);
        let runner = self.runner.take().expect("open session has a runner");
        let (record, _) = runner.finish();
        let summary = summarize_rows(&rows_of(&record), &cfg.expert, &cfg.control)
            .map_err(|e| e.to_string())?;
        self.closed = Some((record, summary.clone()));
        Ok(summary)
    }

    /// Handles one text frame and returns the replies in order.
    pub fn process(&mut self, text: &str, cfg: &ServerConfig) -> Vec<ServerMessage> {
        if self.closed.is_some() {
            return vec![ServerMessage::error(
                ErrorCode::SessionClosed,
                "session is closed",
            )];
        }
        let msg = match decode_client(text) {
            Ok(m) => m,
            Err(e) => return vec![e.to_message()],
        };
        if msg == ClientMessage::EndSession {
            return vec![match self.close(cfg) {
                Ok(s) => ServerMessage::SessionSummary(s),
                Err(e) => ServerMessage::error(ErrorCode::Internal, e),
            }];
        }
        self.append(&msg);
        let input = msg.to_input().expect("non-terminal messages map to inputs");
        let runner = self.runner.as_mut().expect("open session has a runner");
        let outputs = match runner.handle(&input) {
            Ok(o) => o,
            Err(e) => return vec![ServerMessage::error(ErrorCode::for_core(&e), e.to_string())],
        };
        outputs
            .into_iter()
            .map(|out| match out {
                SessionOutput::Step { feedback, .. } => feedback.into(),
                SessionOutput::TrialClosed(trial) if trial.completed => {
                    match decide_trial(&trial, &cfg.expert, &cfg.control) {
                        Ok(case) => ServerMessage::TrialResult {
                            trial_index: trial.trial_index,
                            total_time_s: trial.total_time_s(),
                            total_off_target_px: trial.total_off_target_px(),
                            case_id: case.case_id(),
                            directive: case.directive().id().to_string(),
                        },
                        Err(e) => ServerMessage::error(ErrorCode::Internal, e.to_string()),
                    }
                }
                SessionOutput::TrialClosed(trial) => ServerMessage::error(
                    ErrorCode::TrialInvalidated,
                    format!(
                        "trial {} invalidated: {}",
                        trial.trial_index,
                        trial
                            .invalid_reason
                            .map(|r| r.to_string())
                            .unwrap_or_default()
                    ),
                ),
            })
            .collect()
    }

    pub fn summary(&self, cfg: &ServerConfig) -> Result<SessionSummary, String> {
        if let Some((_, s)) = &self.closed {
            return Ok(s.clone());
        }
        summarize_rows(&rows_of(self.record()), &cfg.expert, &cfg.control)
            .map_err(|e| e.to_string())
    }
}

type Shared = Arc<Mutex<LiveSession>>;

pub struct AppState {
    cfg: ServerConfig,
    sessions: Mutex<HashMap<String, Shared>>,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(cfg: ServerConfig) -> Arc<Self> {
        Arc::new(Self {
            cfg,
            sessions: Mutex::new(HashMap::new()),
            counter: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    trainee_id: String,
    #[serde(default = "one")]
    session_index: u32,
    session_id: Option<String>,
    created_at: Option<String>,
}

fn one() -> u32 {
    1
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(body): Json<CreateSession>,
) -> Result<impl IntoResponse, ApiError> {
    let session_id = body.session_id.unwrap_or_else(|| {
        format!(
            "s{}-{}",
            now_ms(),
            app.counter.fetch_add(1, Ordering::Relaxed)
        )
    });
    if !valid_id(&session_id) {
        return Err(ApiError(
            StatusCode::BAD_REQUEST,
            "session_id must match [A-Za-z0-9_-]{1,128}".into(),
        ));
    }
    if body.session_index == 0 {
        return Err(ApiError(
            StatusCode::BAD_REQUEST,
            "session_index starts at 1".into(),
        ));
    }
    let header = LogHeader {
        session_id: session_id.clone(),
        trainee_id: body.trainee_id,
        session_index: body.session_index,
        created_at: body.created_at.unwrap_or_else(|| now_ms().to_string()),
    };

    let mut sessions = app.sessions.lock().expect("session map lock");
    if sessions.contains_key(&session_id) {
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("session `{session_id}` exists"),
        ));
    }
    let internal = |e: String| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e);
    let runner = SessionRunner::new(header.record(), app.cfg.geometry.clone())
        .map_err(|e| internal(e.to_string()))?;
    let path = app.cfg.log_dir.join(format!("{session_id}.jsonl"));
    let file = OpenOptions::new()
        .create_new(true)
        .write(true)
        .open(&path)
        .map_err(|e| internal(format!("{}: {e}", path.display())))?;
    let mut log = LineWriter::new(file);
    writeln!(log, "{}", header_line(&header)).map_err(|e| internal(e.to_string()))?;
    tracing::info!(%session_id, "session opened");
    sessions.insert(
        session_id.clone(),
        Arc::new(Mutex::new(LiveSession {
            header,
            runner: Some(runner),
            closed: None,
            log,
        })),
    );
    Ok((
        StatusCode::CREATED,
        Json(serde_json::json!({ "session_id": session_id })),
    ))
}

async fn live(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    Ok(ws.on_upgrade(move |socket| stream(socket, app, session)))
}

async fn stream(mut socket: WebSocket, app: Arc<AppState>, session: Shared) {
    while let Some(Ok(frame)) = socket.recv().await {
        let replies = match frame {
            Message::Text(text) => session
                .lock()
                .expect("session lock")
                .process(text.as_str(), &app.cfg),
            Message::Binary(_) => vec![ServerMessage::error(
                ErrorCode::BadMessage,
                "binary frames are not accepted",
            )],
            Message::Close(_) => break,
            _ => continue,
        };
        for reply in replies {
            if socket
                .send(Message::Text(encode_server(&reply).into()))
                .await
                .is_err()
            {
                return;
            }
        }
    }
}

async fn summary(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session lock").summary(&app.cfg);
    s.map(Json)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e))
}

async fn close(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    let session = app.session(&id)?;
    let s = session.lock().expect("session lock").close(&app.cfg);
    s.map(Json)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e))
}

#[derive(Debug, Deserialize)]
struct SatfQuery {
    format: Option<String>,
}

async fn satf(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SatfQuery>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let curve = satf_of(&rows_of(session.lock().expect("session lock").record()))
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(curve).into_response()),
        Some("svg") => Ok((
            [(header::CONTENT_TYPE, "image/svg+xml")],
            render_satf(&curve, Some(&app.cfg.expert), &id),
        )
            .into_response()),
        Some(other) => Err(ApiError(
            StatusCode::BAD_REQUEST,
            format!("unknown format `{other}`"),
        )),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/live", get(live))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/satf", get(satf))
        .route("/sessions/{id}/close", post(close))
        .route(
            "/expert",
            get(|State(app): State<Arc<AppState>>| async move { Json(app.cfg.expert.clone()) }),
        )
        .route("/directives", get(|| async { Json(directives::table()) }))
        .route(
            "/geometry",
            get(|State(app): State<Arc<AppState>>| async move { Json(app.cfg.geometry.clone()) }),
        )
        .with_state(state)
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub async fn spawn(
    addr: SocketAddr,
    cfg: ServerConfig,
) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    std::fs::create_dir_all(&cfg.log_dir)?;
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(AppState::new(cfg));
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok((local, handle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::EventLog;

    fn config(dir: &std::path::Path) -> ServerConfig {
        ServerConfig {
            expert: ExpertProfile::from_moments("e", 80, (14.63, 2.59), (770.0, 166.0)),
            geometry: BoardGeometry::default(),
            control: ControlConfig::default(),
            log_dir: dir.to_path_buf(),
        }
    }

    fn session(dir: &std::path::Path) -> LiveSession {
        let header = LogHeader {
            session_id: "x".into(),
            trainee_id: "t".into(),
            session_index: 1,
            created_at: "0".into(),
        };
        let mut log = LineWriter::new(File::create(dir.join("x.jsonl")).unwrap());
        writeln!(log, "{}", header_line(&header)).unwrap();
        LiveSession {
            runner: Some(SessionRunner::new(header.record(), BoardGeometry::default()).unwrap()),
            header,
            closed: None,
            log,
        }
    }

    #[test]
    fn stream_replies_and_log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let mut s = session(dir.path());
        let g = &cfg.geometry;
        let mut ts = 0;
        let send = |s: &mut LiveSession, m: ClientMessage| s.process(&encode_client(&m), &cfg);

        assert!(matches!(
            send(&mut s, ClientMessage::Place { ts_ms: 0, zone_id: 1, object_x_px: 0, object_y_px: 0 })[0],
            ServerMessage::Error { ref code, .. } if code == "protocol_violation"
        ));
        for &zone in &g.task_order {
            let z = g.zone(zone).unwrap();
            ts += 100;
            send(&mut s, ClientMessage::Pick { ts_ms: ts });
            ts += 900;
            let r = send(
                &mut s,
                ClientMessage::Place {
                    ts_ms: ts,
                    zone_id: zone,
                    object_x_px: z.top_left_x_px + 7,
                    object_y_px: z.top_left_y_px + 7,
                },
            );
            assert!(matches!(
                r[0],
                ServerMessage::StepFeedback { p_n_px: 0, .. }
            ));
            if zone == *g.task_order.last().unwrap() {
                assert!(
                    matches!(r[1], ServerMessage::TrialResult { case_id: 4, .. }),
                    "{r:?}"
                );
            }
        }
        send(&mut s, ClientMessage::Pick { ts_ms: ts + 10 });
        let r = send(&mut s, ClientMessage::Drop { ts_ms: ts + 20 });
        assert!(
            matches!(r[0], ServerMessage::Error { ref code, .. } if code == "trial_invalidated")
        );
        assert!(
            matches!(s.process("{\"type\":\"warp\"}", &cfg)[0], ServerMessage::Error { ref code, .. } if code == "unknown_type")
        );

        let summary = match &send(&mut s, ClientMessage::EndSession)[0] {
            ServerMessage::SessionSummary(x) => x.clone(),
            other => panic!("{other:?}"),
        };
        assert_eq!((summary.n_trials, summary.n_completed), (2, 1));
        assert!(
            matches!(send(&mut s, ClientMessage::Pick { ts_ms: 1 })[0], ServerMessage::Error { ref code, .. } if code == "session_closed")
        );

        let log = EventLog::read(std::io::BufReader::new(
            File::open(dir.path().join("x.jsonl")).unwrap(),
        ))
        .unwrap();
        let replayed = log.replay(g).unwrap();
        let again = summarize_rows(&rows_of(&replayed), &cfg.expert, &cfg.control).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&summary).unwrap()
        );
    }
}
