//! Feedback decisions against the expert benchmark and session-level
//! strategy classification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    build_satf, trial_stats, z_scores, SatfDiagnostics, SummaryStats, ZScorePair,
};
use crate::benchmark::ExpertProfile;
use crate::error::{Error, Result};
use crate::task::{TrialRecord, TrialState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// Slack for "as fast as the expert", in expert time SDs.
    pub eps_t_sd: f64,
    /// Slack for "as precise as the expert", in expert precision SDs.
    pub eps_p_sd: f64,
    pub z_extreme: f64,
    pub z_speed: f64,
    pub precision_band_z: f64,
    pub min_trials_for_classification: usize,
    pub anomaly_window_sessions: u32,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            eps_t_sd: 0.0,
            eps_p_sd: 0.0,
            z_extreme: -3.5,
            z_speed: -2.5,
            precision_band_z: 0.0,
            min_trials_for_classification: 20,
            anomaly_window_sessions: 2,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_t_sd >= 0.0 && self.eps_p_sd >= 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be non-negative".into(),
            ));
        }
        if !(self.z_extreme < self.z_speed && self.z_speed < 0.0) {
            return Err(Error::InvalidConfig(
                "thresholds must satisfy z_extreme < z_speed < 0".into(),
            ));
        }
        if !self.precision_band_z.is_finite() {
            return Err(Error::InvalidConfig("precision band must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    SlowDownFocusPrecision,
    KeepGoing,
    GoFaster,
    BeatExpert,
}

impl Directive {
    pub const ALL: [Directive; 4] = [
        Directive::SlowDownFocusPrecision,
        Directive::KeepGoing,
        Directive::GoFaster,
        Directive::BeatExpert,
    ];

    /// Stable identifier used on the wire.
    pub fn id(self) -> &'static str {
        match self {
            Directive::SlowDownFocusPrecision => "slow_down_focus_precision",
            Directive::KeepGoing => "keep_going",
            Directive::GoFaster => "go_faster",
            Directive::BeatExpert => "beat_expert",
        }
    }
}

/// The four outcomes of comparing one trial with the expert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeedbackCase {
    /// Fast but imprecise.
    SlowDown = 1,
    /// Slow and imprecise.
    KeepGoing = 2,
    /// Slow but precise.
    GoFaster = 3,
    /// Fast and precise.
    BeatExpert = 4,
}

impl FeedbackCase {
    pub fn case_id(self) -> u8 {
        self as u8
    }

    pub fn from_case_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(FeedbackCase::SlowDown),
            2 => Some(FeedbackCase::KeepGoing),
            3 => Some(FeedbackCase::GoFaster),
            4 => Some(FeedbackCase::BeatExpert),
            _ => None,
        }
    }

    pub fn directive(self) -> Directive {
        match self {
            FeedbackCase::SlowDown => Directive::SlowDownFocusPrecision,
            FeedbackCase::KeepGoing => Directive::KeepGoing,
            FeedbackCase::GoFaster => Directive::GoFaster,
            FeedbackCase::BeatExpert => Directive::BeatExpert,
        }
    }

    fn from_flags(fast: bool, precise: bool) -> Self {
        match (fast, precise) {
            (true, false) => FeedbackCase::SlowDown,
            (false, false) => FeedbackCase::KeepGoing,
            (false, true) => FeedbackCase::GoFaster,
            (true, true) => FeedbackCase::BeatExpert,
        }
    }
}

impl Serialize for FeedbackCase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.case_id())
    }
}

impl<'de> Deserialize<'de> for FeedbackCase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let id = u8::deserialize(d)?;
        FeedbackCase::from_case_id(id)
            .ok_or_else(|| serde::de::Error::custom(format!("case id {id} is not in 1..=4")))
    }
}

/// Compares one trial with the expert means. Ties count as fast / precise.
pub fn decide_feedback(
    trial_time_s: f64,
    trial_off_target_px: f64,
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> Result<FeedbackCase> {
    if !trial_time_s.is_finite() || !trial_off_target_px.is_finite() {
        return Err(Error::InvalidMetric(format!(
            "trial metrics must be finite, got ({trial_time_s}, {trial_off_target_px})"
        )));
    }
    let (t_sd, p_sd) = expert.positive_sds()?;
    let fast = trial_time_s <= expert.time.mean + cfg.eps_t_sd * t_sd;
    let precise = trial_off_target_px <= expert.precision.mean + cfg.eps_p_sd * p_sd;
    Ok(FeedbackCase::from_flags(fast, precise))
}

pub fn decide_trial(
    trial: &TrialRecord,
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> Result<FeedbackCase> {
    if !trial.completed {
        return Err(Error::IncompleteTrial(trial.trial_index));
    }
    decide_feedback(
        trial.total_time_s(),
        trial.total_off_target_px() as f64,
        expert,
        cfg,
    )
}

/// Running totals shown to the trainee after each placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFeedback {
    pub step_index: u8,
    pub t_n_ms: u64,
    pub p_n_px: u64,
}

pub fn step_feedback(state: &TrialState) -> Result<StepFeedback> {
    let steps = state.steps();
    let last = steps.last().ok_or(Error::NotAvailable)?;
    Ok(StepFeedback {
        step_index: last.step_index,
        t_n_ms: steps.iter().map(|s| s.duration_ms).sum(),
        p_n_px: steps.iter().map(|s| u64::from(s.off_target_px)).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyClass {
    ExtremeSpeedFocused,
    SpeedFocused,
    Undetermined,
    PrecisionFocused,
}

impl StrategyClass {
    pub const ALL: [StrategyClass; 4] = [
        StrategyClass::ExtremeSpeedFocused,
        StrategyClass::SpeedFocused,
        StrategyClass::Undetermined,
        StrategyClass::PrecisionFocused,
    ];

    /// Command-line spelling, e.g. `extreme-speed-focused`.
    pub fn slug(self) -> &'static str {
        match self {
            StrategyClass::ExtremeSpeedFocused => "extreme-speed-focused",
            StrategyClass::SpeedFocused => "speed-focused",
            StrategyClass::Undetermined => "undetermined",
            StrategyClass::PrecisionFocused => "precision-focused",
        }
    }
}

impl fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for StrategyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyClass::ALL
            .into_iter()
            .find(|c| c.slug() == s || c.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Strategy from session moments alone.
pub fn classify_stats(
    time: &SummaryStats,
    precision: &SummaryStats,
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> Result<(StrategyClass, ZScorePair)> {
    let z = z_scores(time, precision, expert)?;
    let class = if z.z_p <= cfg.precision_band_z {
        StrategyClass::PrecisionFocused
    } else if z.z_t <= cfg.z_extreme {
        StrategyClass::ExtremeSpeedFocused
    } else if z.z_t <= cfg.z_speed {
        StrategyClass::SpeedFocused
    } else {
        StrategyClass::Undetermined
    };
    Ok((class, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub strategy: StrategyClass,
    pub z: ZScorePair,
    pub time: SummaryStats,
    pub precision: SummaryStats,
    /// Advisory only; the label comes from the moments.
    pub satf: SatfDiagnostics,
}

pub fn classify_strategy(
    trials: &[TrialRecord],
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> Result<Classification> {
    let completed: Vec<TrialRecord> = trials.iter().filter(|t| t.completed).cloned().collect();
    if completed.len() < cfg.min_trials_for_classification {
        return Err(Error::InsufficientData {
            needed: cfg.min_trials_for_classification,
            got: completed.len(),
        });
    }
    let (time, precision) = trial_stats(&completed)?;
    let (strategy, z) = classify_stats(&time, &precision, expert, cfg)?;
    let satf = build_satf("", &completed)?.diagnostics;
    Ok(Classification {
        strategy,
        z,
        time,
        precision,
        satf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionDirective {
    pub modal_case: FeedbackCase,
    pub directive: Directive,
    /// Beating the expert this early points at the task or the trainee.
    pub anomaly: bool,
}

/// Most frequent case of a session; ties go to the lower case id.
pub fn session_directive(
    cases: &[FeedbackCase],
    session_index: u32,
    cfg: &ControlConfig,
) -> Result<SessionDirective> {
    if cases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = [0usize; 5];
    for c in cases {
        counts[usize::from(c.case_id())] += 1;
    }
    let mut modal = 1;
    for id in 2..=4 {
        if counts[id] > counts[modal] {
            modal = id;
        }
    }
    let modal_case = FeedbackCase::from_case_id(modal as u8).ok_or(Error::EmptyInput)?;
    Ok(SessionDirective {
        modal_case,
        directive: modal_case.directive(),
        anomaly: modal_case == FeedbackCase::BeatExpert
            && session_index <= cfg.anomaly_window_sessions,
    })
}
