//! Append-only JSON-lines session log.
//!
//! The first line is a header `{"type":"session", ...}`; every following
//! line is a client wire message exactly as received. Replaying the log
//! through a fresh session runner reproduces the live session.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use satf_core::geometry::BoardGeometry;
use satf_core::session::{replay, SessionRecord};

use crate::error::{ServiceError, ServiceResult};
use crate::wire::{decode_client, encode_client, ClientMessage, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub session_id: String,
    pub trainee_id: String,
    pub session_index: u32,
    #[serde(default)]
    pub created_at: String,
}

impl LogHeader {
    pub fn record(&self) -> SessionRecord {
        let mut r = SessionRecord::new(&self.session_id, &self.trainee_id, self.session_index);
        r.created_at = self.created_at.clone();
        r
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename = "session")]
struct HeaderLine {
    v: u64,
    #[serde(flatten)]
    header: LogHeader,
}

pub fn header_line(header: &LogHeader) -> String {
    let line = HeaderLine {
        v: PROTOCOL_VERSION,
        header: header.clone(),
    };
    serde_json::to_string(&line).expect("header serializes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: LogHeader,
    pub messages: Vec<ClientMessage>,
}

impl EventLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            messages: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> ServiceResult<()> {
        writeln!(out, "{}", header_line(&self.header))?;
        for m in &self.messages {
            writeln!(out, "{}", encode_client(m))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> ServiceResult<Self> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let (_, first) = lines.next().ok_or(ServiceError::EventLog {
            line: 1,
            message: "empty event log".into(),
        })?;
        let header: HeaderLine =
            serde_json::from_str(&first?).map_err(|e| ServiceError::EventLog {
                line: 1,
                message: format!("bad session header: {e}"),
            })?;
        let mut log = EventLog::new(header.header);
        for (i, line) in lines {
            let msg = decode_client(&line?).map_err(|e| ServiceError::EventLog {
                line: i + 1,
                message: e.to_string(),
            })?;
            log.messages.push(msg);
        }
        Ok(log)
    }

    /// Replays the messages up to the first `end_session`; rejected events
    /// are skipped exactly as the live service skips them.
    pub fn replay(&self, geometry: &BoardGeometry) -> ServiceResult<SessionRecord> {
        let inputs: Vec<_> = self
            .messages
            .iter()
            .take_while(|m| **m != ClientMessage::EndSession)
            .filter_map(ClientMessage::to_input)
            .collect();
        let (record, _) = replay(self.header.record(), geometry.clone(), &inputs)?;
        Ok(record)
    }
}
