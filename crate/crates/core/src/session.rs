//! Session records and the event-driven session runner.
//!
//! [`SessionRunner`] owns one session: it feeds events through the trial
//! state machine, closes trials as they complete or get invalidated, and
//! groups them into per-condition blocks. Both the live service and offline
//! replay drive the same runner, so identical event logs give identical
//! records.

use serde::{Deserialize, Serialize};

use crate::control::{step_feedback, StepFeedback};
use crate::error::{Error, Result};
use crate::geometry::BoardGeometry;
use crate::task::{finalize_trial, Phase, StepRecord, TrialEvent, TrialRecord, TrialState};

pub const DEFAULT_CONDITION: &str = "default";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub condition: String,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub trainee_id: String,
    pub session_index: u32,
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub created_at: String,
}

impl SessionRecord {
    pub fn new(session_id: &str, trainee_id: &str, session_index: u32) -> Self {
        Self {
            session_id: session_id.to_string(),
            trainee_id: trainee_id.to_string(),
            session_index,
            blocks: Vec::new(),
            created_at: String::new(),
        }
    }

    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.blocks.iter().flat_map(|b| b.trials.iter())
    }

    pub fn completed_trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials().filter(|t| t.completed)
    }

    /// Appends a trial, opening a new block when the condition changes.
    pub fn push_trial(&mut self, trial: TrialRecord) {
        match self.blocks.last_mut() {
            Some(b) if b.condition == trial.condition => b.trials.push(trial),
            _ => self.blocks.push(Block {
                condition: trial.condition.clone(),
                trials: vec![trial],
            }),
        }
    }
}

/// Input accepted by a session: trial events plus an explicit trial start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionInput {
    /// Begins a new trial, abandoning any unfinished one. The condition,
    /// when given, applies to this and all following trials.
    StartTrial {
        condition: Option<String>,
    },
    Event(TrialEvent),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionOutput {
    Step {
        step: StepRecord,
        feedback: StepFeedback,
    },
    TrialClosed(TrialRecord),
}

#[derive(Debug, Clone)]
pub struct SessionRunner {
    record: SessionRecord,
    geometry: BoardGeometry,
    state: TrialState,
    condition: String,
    next_trial_index: u32,
}

impl SessionRunner {
    pub fn new(record: SessionRecord, geometry: BoardGeometry) -> Result<Self> {
        geometry.validate()?;
        let next_trial_index = record.trials().map(|t| t.trial_index).max().unwrap_or(0) + 1;
        let condition = record
            .blocks
            .last()
            .map(|b| b.condition.clone())
            .unwrap_or_else(|| DEFAULT_CONDITION.to_string());
        Ok(Self {
            record,
            geometry,
            state: TrialState::new(),
            condition,
            next_trial_index,
        })
    }

    pub fn record(&self) -> &SessionRecord {
        &self.record
    }

    pub fn geometry(&self) -> &BoardGeometry {
        &self.geometry
    }

    pub fn current_trial(&self) -> &TrialState {
        &self.state
    }

    pub fn condition(&self) -> &str {
        &self.condition
    }

    pub fn set_condition(&mut self, condition: &str) {
        self.condition = condition.to_string();
    }

    /// Processes one input. Rejected inputs leave the runner unchanged.
    pub fn handle(&mut self, input: &SessionInput) -> Result<Vec<SessionOutput>> {
        match input {
            SessionInput::StartTrial { condition } => {
                let mut out = Vec::new();
                if self.state.is_started() {
                    self.state.abandon();
                    out.push(SessionOutput::TrialClosed(self.close_trial()?));
                }
                if let Some(c) = condition {
                    self.condition = c.clone();
                }
                Ok(out)
            }
            SessionInput::Event(event) => self.handle_event(event),
        }
    }

    fn handle_event(&mut self, event: &TrialEvent) -> Result<Vec<SessionOutput>> {
        let next = self.state.apply_event(event, &self.geometry)?;
        let new_step = next.steps().len() > self.state.steps().len();
        self.state = next;
        let mut out = Vec::new();
        if new_step {
            let step = self
                .state
                .steps()
                .last()
                .cloned()
                .ok_or(Error::NotAvailable)?;
            out.push(SessionOutput::Step {
                step,
                feedback: step_feedback(&self.state)?,
            });
        }
        if self.state.is_finished() {
            out.push(SessionOutput::TrialClosed(self.close_trial()?));
        }
        Ok(out)
    }

    fn close_trial(&mut self) -> Result<TrialRecord> {
        let record = finalize_trial(&self.state, self.next_trial_index, &self.condition)?;
        self.next_trial_index += 1;
        self.state = TrialState::after(self.state.last_ts_ms());
        self.record.push_trial(record.clone());
        Ok(record)
    }

    /// Ends the session. An unfinished trial is recorded as abandoned.
    pub fn finish(mut self) -> (SessionRecord, Option<TrialRecord>) {
        let abandoned = if self.state.is_started() && !matches!(self.state.phase(), Phase::Complete)
        {
            self.state.abandon();
            self.close_trial().ok()
        } else {
            None
        };
        (self.record, abandoned)
    }
}

/// Replays inputs through a fresh runner, skipping rejected inputs, and
/// returns the finished session together with the number of rejections.
pub fn replay<'a>(
    record: SessionRecord,
    geometry: BoardGeometry,
    inputs: impl IntoIterator<Item = &'a SessionInput>,
) -> Result<(SessionRecord, usize)> {
    let mut runner = SessionRunner::new(record, geometry)?;
    let mut rejected = 0;
    for input in inputs {
        if runner.handle(input).is_err() {
            rejected += 1;
        }
    }
    Ok((runner.finish().0, rejected))
}
