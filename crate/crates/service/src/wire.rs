//! JSON messages exchanged on a live session stream.
//!
//! Every message is one JSON object with a `type` field and a protocol
//! version `v` (currently 1; a missing `v` means 1).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use satf_core::control::StepFeedback;
use satf_core::session::SessionInput;
use satf_core::task::TrialEvent;

use crate::analysis::SessionSummary;

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Pick {
        ts_ms: u64,
    },
    Place {
        ts_ms: u64,
        zone_id: u32,
        object_x_px: i32,
        object_y_px: i32,
    },
    Drop {
        ts_ms: u64,
    },
    StartTrial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        condition: Option<String>,
    },
    /// Closes the session; the server answers with `session_summary`.
    EndSession,
}

const CLIENT_TYPES: [&str; 5] = ["pick", "place", "drop", "start_trial", "end_session"];

impl ClientMessage {
    /// The session input this message drives, if any.
    pub fn to_input(&self) -> Option<SessionInput> {
        let event = match *self {
            ClientMessage::Pick { ts_ms } => TrialEvent::Pick { ts_ms },
            ClientMessage::Place {
                ts_ms,
                zone_id,
                object_x_px,
                object_y_px,
            } => TrialEvent::Place {
                ts_ms,
                zone_id,
                object_x_px,
                object_y_px,
            },
            ClientMessage::Drop { ts_ms } => TrialEvent::Drop { ts_ms },
            ClientMessage::StartTrial { ref condition } => {
                return Some(SessionInput::StartTrial {
                    condition: condition.clone(),
                })
            }
            ClientMessage::EndSession => return None,
        };
        Some(SessionInput::Event(event))
    }

    pub fn from_input(input: &SessionInput) -> Self {
        match input {
            SessionInput::StartTrial { condition } => ClientMessage::StartTrial {
                condition: condition.clone(),
            },
            SessionInput::Event(TrialEvent::Pick { ts_ms }) => {
                ClientMessage::Pick { ts_ms: *ts_ms }
            }
            SessionInput::Event(TrialEvent::Drop { ts_ms }) => {
                ClientMessage::Drop { ts_ms: *ts_ms }
            }
            SessionInput::Event(TrialEvent::Place {
                ts_ms,
                zone_id,
                object_x_px,
                object_y_px,
            }) => ClientMessage::Place {
                ts_ms: *ts_ms,
                zone_id: *zone_id,
                object_x_px: *object_x_px,
                object_y_px: *object_y_px,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    StepFeedback {
        step_index: u8,
        t_n_ms: u64,
        p_n_px: u64,
    },
    TrialResult {
        trial_index: u32,
        total_time_s: f64,
        total_off_target_px: u64,
        case_id: u8,
        /// Stable directive identifier; texts come from `/directives`.
        directive: String,
    },
    SessionSummary(SessionSummary),
    Error {
        code: String,
        detail: String,
    },
}

const SERVER_TYPES: [&str; 4] = ["step_feedback", "trial_result", "session_summary", "error"];

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        ServerMessage::Error {
            code: code.as_str().to_string(),
            detail: detail.into(),
        }
    }
}

impl From<StepFeedback> for ServerMessage {
    fn from(f: StepFeedback) -> Self {
        ServerMessage::StepFeedback {
            step_index: f.step_index,
            t_n_ms: f.t_n_ms,
            p_n_px: f.p_n_px,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    BadJson,
    UnknownType,
    BadMessage,
    UnsupportedVersion,
    ProtocolViolation,
    InvalidZone,
    OutOfBounds,
    TrialInvalidated,
    SessionClosed,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadJson => "bad_json",
            ErrorCode::UnknownType => "unknown_type",
            ErrorCode::BadMessage => "bad_message",
            ErrorCode::UnsupportedVersion => "unsupported_version",
            ErrorCode::ProtocolViolation => "protocol_violation",
            ErrorCode::InvalidZone => "invalid_zone",
            ErrorCode::OutOfBounds => "out_of_bounds",
            ErrorCode::TrialInvalidated => "trial_invalidated",
            ErrorCode::SessionClosed => "session_closed",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn for_core(err: &satf_core::Error) -> Self {
        use satf_core::Error as E;
        match err {
            E::InvalidZone(_) => ErrorCode::InvalidZone,
            E::OutOfBounds { .. } => ErrorCode::OutOfBounds,
            E::ProtocolViolation(_) => ErrorCode::ProtocolViolation,
            _ => ErrorCode::Internal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}: {detail}", code.as_str())]
pub struct WireError {
    pub code: ErrorCode,
    pub detail: String,
}

impl WireError {
    fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self {
            code,
            detail: detail.into(),
        }
    }

    pub fn to_message(&self) -> ServerMessage {
        ServerMessage::error(self.code, self.detail.clone())
    }
}

fn encode<T: Serialize>(msg: &T) -> String {
    let mut value = serde_json::to_value(msg).expect("wire messages serialize");
    if let Value::Object(map) = &mut value {
        map.insert("v".into(), Value::from(PROTOCOL_VERSION));
    }
    value.to_string()
}

fn decode<T: for<'de> Deserialize<'de>>(text: &str, known: &[&str]) -> Result<T, WireError> {
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| WireError::new(ErrorCode::BadJson, e.to_string()))?;
    let map = value
        .as_object_mut()
        .ok_or_else(|| WireError::new(ErrorCode::BadMessage, "message must be a JSON object"))?;
    let ty = map
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| WireError::new(ErrorCode::BadMessage, "missing string field `type`"))?;
    if !known.contains(&ty) {
        return Err(WireError::new(
            ErrorCode::UnknownType,
            format!("unknown message type `{ty}`"),
        ));
    }
    match map.remove("v") {
        None => {}
        Some(v) if v.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(v) => {
            return Err(WireError::new(
                ErrorCode::UnsupportedVersion,
                format!("protocol version {v} is not supported"),
            ))
        }
    }
    serde_json::from_value(value).map_err(|e| WireError::new(ErrorCode::BadMessage, e.to_string()))
}

pub fn encode_client(msg: &ClientMessage) -> String {
    encode(msg)
}

pub fn decode_client(text: &str) -> Result<ClientMessage, WireError> {
    decode(text, &CLIENT_TYPES)
}

pub fn encode_server(msg: &ServerMessage) -> String {
    encode(msg)
}

pub fn decode_server(text: &str) -> Result<ServerMessage, WireError> {
    decode(text, &SERVER_TYPES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_messages_carry_type_and_version() {
        let s = encode_client(&ClientMessage::Pick { ts_ms: 12 });
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["type"], "pick");
        assert_eq!(v["v"], 1);
        assert_eq!(
            decode_client(
                r#"{"type":"place","ts_ms":5,"zone_id":1,"object_x_px":3,"object_y_px":4}"#
            )
            .unwrap(),
            ClientMessage::Place {
                ts_ms: 5,
                zone_id: 1,
                object_x_px: 3,
                object_y_px: 4
            }
        );
        assert_eq!(
            decode_client(r#"{"type":"start_trial"}"#).unwrap(),
            ClientMessage::StartTrial { condition: None }
        );
    }

    #[test]
    fn decode_errors_are_coded() {
        let code = |s: &str| decode_client(s).unwrap_err().code;
        assert_eq!(
            code(r#"{"type":"teleport","ts_ms":1}"#),
            ErrorCode::UnknownType
        );
        assert_eq!(code("not json"), ErrorCode::BadJson);
        assert_eq!(code("[1,2]"), ErrorCode::BadMessage);
        assert_eq!(code(r#"{"ts_ms":1}"#), ErrorCode::BadMessage);
        assert_eq!(code(r#"{"type":"pick"}"#), ErrorCode::BadMessage);
        assert_eq!(
            code(r#"{"type":"pick","ts_ms":1,"v":2}"#),
            ErrorCode::UnsupportedVersion
        );
        // server-only types are unknown to the server's decoder
        assert_eq!(code(r#"{"type":"step_feedback"}"#), ErrorCode::UnknownType);
    }

    #[test]
    fn error_message_shape() {
        let s = encode_server(&ServerMessage::error(
            ErrorCode::ProtocolViolation,
            "place while idle",
        ));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["type"], "error");
        assert_eq!(v["code"], "protocol_violation");
    }
}
