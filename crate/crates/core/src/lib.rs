//! Scoring, analysis and feedback for a five-step pick-and-place training
//! task benchmarked against an expert.
//!
//! - [`geometry`] and [`task`]: board layout, placement scoring and the
//!   per-trial state machine.
//! - [`session`]: session records and the event-driven session runner.
//! - [`analytics`]: summary statistics, speed-accuracy trade-off curves and
//!   z-scores.
//! - [`control`]: four-case trial feedback and strategy classification.
//! - [`benchmark`]: expert profiles and discrimination checks.
//! - [`fixtures`]: published table moments and datasets matched to them.
//! - [`synth`]: synthetic trainees for closed-loop testing.

pub mod analytics;
pub mod benchmark;
pub mod control;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod placement;
pub mod session;
pub mod synth;
pub mod task;

pub use analytics::{
    build_satf, summarize, z_scores, SatfCurve, SatfPoint, SummaryStats, ZScorePair,
};
pub use benchmark::{
    build_profile, load_profile, save_profile, validate_discrimination, ExpertProfile,
};
pub use control::{
    classify_strategy, decide_feedback, session_directive, step_feedback, ControlConfig, Directive,
    FeedbackCase, StepFeedback, StrategyClass,
};
pub use error::{Error, Result};
pub use geometry::{off_target_score, BoardGeometry};
pub use session::{SessionInput, SessionOutput, SessionRecord, SessionRunner};
pub use task::{finalize_trial, TrialEvent, TrialRecord, TrialState};
