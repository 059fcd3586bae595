//! The five-step pick-and-place trial as an event-driven state machine.
//!
//! Timing starts at each pick; a step's duration runs from the pick to the
//! following place. Travel between a place and the next pick is not counted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{off_target_score, BoardGeometry, ZoneId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrialEvent {
    Pick {
        ts_ms: u64,
    },
    Place {
        ts_ms: u64,
        zone_id: ZoneId,
        /// Top-left corner of the object on the board.
        object_x_px: i32,
        object_y_px: i32,
    },
    Drop {
        ts_ms: u64,
    },
}

impl TrialEvent {
    pub fn ts_ms(&self) -> u64 {
        match *self {
            TrialEvent::Pick { ts_ms } | TrialEvent::Drop { ts_ms } => ts_ms,
            TrialEvent::Place { ts_ms, .. } => ts_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based position in the task order.
    pub step_index: u8,
    pub zone_id: ZoneId,
    pub duration_ms: u64,
    pub off_target_px: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidReason {
    Dropped,
    WrongOrder,
    /// A new trial was started before this one finished.
    Abandoned,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvalidReason::Dropped => "dropped",
            InvalidReason::WrongOrder => "wrong-order",
            InvalidReason::Abandoned => "abandoned",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Holding {
        picked_ts_ms: u64,
        next_step_index: u8,
    },
    Complete,
    Invalidated {
        reason: InvalidReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialState {
    phase: Phase,
    steps: Vec<StepRecord>,
    last_ts_ms: Option<u64>,
}

impl Default for TrialState {
    fn default() -> Self {
        Self::new()
    }
}

impl TrialState {
    pub fn new() -> Self {
        Self {
            phase: Phase::Idle,
            steps: Vec::with_capacity(BoardGeometry::STEPS_PER_TRIAL),
            last_ts_ms: None,
        }
    }

    /// Fresh trial that still rejects timestamps earlier than `ts_ms`.
    pub fn after(ts_ms: Option<u64>) -> Self {
        Self {
            last_ts_ms: ts_ms,
            ..Self::new()
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn last_ts_ms(&self) -> Option<u64> {
        self.last_ts_ms
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Complete | Phase::Invalidated { .. })
    }

    /// True once the trial has consumed any event.
    pub fn is_started(&self) -> bool {
        !matches!(self.phase, Phase::Idle) || !self.steps.is_empty()
    }

    /// Marks an unfinished trial as abandoned.
    pub fn abandon(&mut self) {
        if !self.is_finished() {
            self.phase = Phase::Invalidated {
                reason: InvalidReason::Abandoned,
            };
        }
    }

    /// Applies one event. Rejected events leave `self` untouched and return a
    /// protocol, zone or bounds error.
    pub fn apply_event(&self, event: &TrialEvent, geometry: &BoardGeometry) -> Result<TrialState> {
        let ts = event.ts_ms();
        if let Some(last) = self.last_ts_ms {
            if ts < last {
                return Err(Error::ProtocolViolation(format!(
                    "timestamp {ts} precedes previous event at {last}"
                )));
            }
        }
        let mut next = self.clone();
        next.last_ts_ms = Some(ts);
        match (self.phase, *event) {
            (Phase::Idle, TrialEvent::Pick { ts_ms }) => {
                next.phase = Phase::Holding {
                    picked_ts_ms: ts_ms,
                    next_step_index: self.steps.len() as u8 + 1,
                };
            }
            (
                Phase::Holding {
                    picked_ts_ms,
                    next_step_index,
                },
                TrialEvent::Place {
                    ts_ms,
                    zone_id,
                    object_x_px,
                    object_y_px,
                },
            ) => {
                let expected = geometry.task_order[usize::from(next_step_index) - 1];
                if zone_id != expected {
                    // unknown zones are rejected rather than counted as a wrong target
                    geometry.zone_square(zone_id)?;
                    next.phase = Phase::Invalidated {
                        reason: InvalidReason::WrongOrder,
                    };
                    return Ok(next);
                }
                let off_target_px = off_target_score(object_x_px, object_y_px, zone_id, geometry)?;
                let duration_ms = ts_ms - picked_ts_ms;
                if duration_ms == 0 {
                    return Err(Error::ProtocolViolation(
                        "place at the same instant as pick".into(),
                    ));
                }
                next.steps.push(StepRecord {
                    step_index: next_step_index,
                    zone_id,
                    duration_ms,
                    off_target_px,
                });
                next.phase = if next.steps.len() == geometry.task_order.len() {
                    Phase::Complete
                } else {
                    Phase::Idle
                };
            }
            (Phase::Holding { .. }, TrialEvent::Drop { .. }) => {
                next.phase = Phase::Invalidated {
                    reason: InvalidReason::Dropped,
                };
            }
            (phase, event) => {
                return Err(Error::ProtocolViolation(format!(
                    "{} not allowed while {}",
                    event_name(&event),
                    phase_name(&phase)
                )));
            }
        }
        Ok(next)
    }
}

fn event_name(event: &TrialEvent) -> &'static str {
    match event {
        TrialEvent::Pick { .. } => "pick",
        TrialEvent::Place { .. } => "place",
        TrialEvent::Drop { .. } => "drop",
    }
}

fn phase_name(phase: &Phase) -> &'static str {
    match phase {
        Phase::Idle => "idle",
        Phase::Holding { .. } => "holding",
        Phase::Complete => "complete",
        Phase::Invalidated { .. } => "invalidated",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u32,
    pub condition: String,
    pub steps: Vec<StepRecord>,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_reason: Option<InvalidReason>,
}

impl TrialRecord {
    pub fn total_time_ms(&self) -> u64 {
        self.steps.iter().map(|s| s.duration_ms).sum()
    }

    pub fn total_time_s(&self) -> f64 {
        self.total_time_ms() as f64 / 1000.0
    }

    pub fn total_off_target_px(&self) -> u64 {
        self.steps.iter().map(|s| u64::from(s.off_target_px)).sum()
    }
}

/// Turns a finished trial into a record. Invalidated trials are kept with
/// `completed == false` so they stay in the log but never enter statistics.
pub fn finalize_trial(
    state: &TrialState,
    trial_index: u32,
    condition: &str,
) -> Result<TrialRecord> {
    let (completed, invalid_reason) = match state.phase {
        Phase::Complete => (true, None),
        Phase::Invalidated { reason } => (false, Some(reason)),
        _ => return Err(Error::NotFinished),
    };
    Ok(TrialRecord {
        trial_index,
        condition: condition.to_string(),
        steps: state.steps.clone(),
        completed,
        invalid_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centered(g: &BoardGeometry, zone: ZoneId) -> (i32, i32) {
        let c = g.center_square(zone).unwrap();
        (c.x, c.y)
    }

    fn place(g: &BoardGeometry, ts_ms: u64, step: usize, dx: i32) -> TrialEvent {
        let zone_id = g.task_order[step];
        let (x, y) = centered(g, zone_id);
        TrialEvent::Place {
            ts_ms,
            zone_id,
            object_x_px: x + dx,
            object_y_px: y,
        }
    }

    #[test]
    fn pick_then_place_records_step() {
        let g = BoardGeometry::default();
        let s = TrialState::new()
            .apply_event(&TrialEvent::Pick { ts_ms: 1000 }, &g)
            .unwrap();
        assert_eq!(
            s.phase(),
            Phase::Holding {
                picked_ts_ms: 1000,
                next_step_index: 1
            }
        );
        let s = s.apply_event(&place(&g, 3500, 0, 0), &g).unwrap();
        assert_eq!(s.phase(), Phase::Idle);
        assert_eq!(
            s.steps(),
            &[StepRecord {
                step_index: 1,
                zone_id: g.task_order[0],
                duration_ms: 2500,
                off_target_px: 0
            }]
        );
        let s = s
            .apply_event(&TrialEvent::Pick { ts_ms: 4000 }, &g)
            .unwrap();
        assert!(matches!(
            s.phase(),
            Phase::Holding {
                next_step_index: 2,
                ..
            }
        ));
    }

    #[test]
    fn drop_and_wrong_zone_invalidate() {
        let g = BoardGeometry::default();
        let holding = TrialState::new()
            .apply_event(&TrialEvent::Pick { ts_ms: 0 }, &g)
            .unwrap();
        let dropped = holding
            .apply_event(&TrialEvent::Drop { ts_ms: 10 }, &g)
            .unwrap();
        assert_eq!(
            dropped.phase(),
            Phase::Invalidated {
                reason: InvalidReason::Dropped
            }
        );
        let wrong = holding.apply_event(&place(&g, 10, 1, 0), &g).unwrap();
        assert_eq!(
            wrong.phase(),
            Phase::Invalidated {
                reason: InvalidReason::WrongOrder
            }
        );
        let rec = finalize_trial(&wrong, 3, "2D").unwrap();
        assert!(!rec.completed);
        assert_eq!(rec.invalid_reason, Some(InvalidReason::WrongOrder));
    }

    #[test]
    fn protocol_violations_leave_state_unchanged() {
        let g = BoardGeometry::default();
        let idle = TrialState::new();
        assert!(matches!(
            idle.apply_event(&place(&g, 5, 0, 0), &g),
            Err(Error::ProtocolViolation(_))
        ));
        assert!(matches!(
            idle.apply_event(&TrialEvent::Drop { ts_ms: 5 }, &g),
            Err(Error::ProtocolViolation(_))
        ));
        let holding = idle
            .apply_event(&TrialEvent::Pick { ts_ms: 100 }, &g)
            .unwrap();
        assert!(matches!(
            holding.apply_event(&TrialEvent::Pick { ts_ms: 200 }, &g),
            Err(Error::ProtocolViolation(_))
        ));
        assert!(matches!(
            holding.apply_event(&place(&g, 50, 0, 0), &g),
            Err(Error::ProtocolViolation(_))
        ));
        let unknown = TrialEvent::Place {
            ts_ms: 150,
            zone_id: 99,
            object_x_px: 0,
            object_y_px: 0,
        };
        assert_eq!(
            holding.apply_event(&unknown, &g),
            Err(Error::InvalidZone(99))
        );
    }

    #[test]
    fn finalize_sums_steps() {
        let g = BoardGeometry::default();
        let durations = [2000u64, 1500, 1800, 2200, 1700];
        let offsets = [10i32, 0, 25, 5, 0];
        let mut s = TrialState::new();
        let mut ts = 0;
        for (i, (d, dx)) in durations.iter().zip(offsets).enumerate() {
            s = s.apply_event(&TrialEvent::Pick { ts_ms: ts }, &g).unwrap();
            ts += d;
            s = s.apply_event(&place(&g, ts, i, dx), &g).unwrap();
            ts += 400;
        }
        assert_eq!(s.phase(), Phase::Complete);
        let rec = finalize_trial(&s, 1, "2D-A").unwrap();
        assert!(rec.completed);
        assert_eq!(rec.total_time_ms(), 9200);
        assert!((rec.total_time_s() - 9.2).abs() < 1e-12);
        // off-target per step is 30 * dx
        assert_eq!(rec.total_off_target_px(), 30 * 40);
    }

    #[test]
    fn finalize_mid_trial_fails() {
        let g = BoardGeometry::default();
        let s = TrialState::new()
            .apply_event(&TrialEvent::Pick { ts_ms: 0 }, &g)
            .unwrap();
        assert_eq!(finalize_trial(&s, 1, "x"), Err(Error::NotFinished));
        assert_eq!(
            finalize_trial(&TrialState::new(), 1, "x"),
            Err(Error::NotFinished)
        );
    }
}
