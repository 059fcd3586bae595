//! The analysis shared by the live service and the offline CLI.
//!
//! Both paths reduce a list of [`TrialRow`]s to a [`SessionSummary`] with
//! the same function, so a live session and a replay of its event log
//! serialize to identical JSON.

use serde::{Deserialize, Serialize};

use satf_core::analytics::{
    trial_stats, SatfCurve, SatfDiagnostics, SatfPoint, SummaryStats, ZScorePair,
};
use satf_core::benchmark::{
    validate_discrimination, DiscriminationReport, ExpertProfile, NoviceStats,
};
use satf_core::control::{
    classify_stats, decide_trial, session_directive, ControlConfig, Directive, FeedbackCase,
    StrategyClass,
};
use satf_core::session::SessionRecord;
use satf_core::task::TrialRecord;

use crate::error::{ServiceError, ServiceResult};

/// One trial with the session it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRow {
    pub session_id: String,
    pub trainee_id: String,
    pub session_index: u32,
    pub trial: TrialRecord,
}

pub fn rows_of(session: &SessionRecord) -> Vec<TrialRow> {
    session
        .trials()
        .map(|t| TrialRow {
            session_id: session.session_id.clone(),
            trainee_id: session.trainee_id.clone(),
            session_index: session.session_index,
            trial: t.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub time: SummaryStats,
    pub precision: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub n_trials: usize,
    pub n_completed: usize,
    pub stats: Option<MetricStats>,
    pub z: Option<ZScorePair>,
    /// Absent when there are too few completed trials to classify.
    pub strategy: Option<StrategyClass>,
    pub satf_points: Vec<SatfPoint>,
    pub satf_diagnostics: Option<SatfDiagnostics>,
    pub modal_case: Option<FeedbackCase>,
    pub directive: Option<Directive>,
    pub anomaly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFeedback {
    pub session_id: String,
    pub trial_index: u32,
    pub case_id: FeedbackCase,
    pub directive: Directive,
}

fn completed(rows: &[TrialRow]) -> impl Iterator<Item = &TrialRow> {
    rows.iter().filter(|r| r.trial.completed)
}

pub fn trial_feedback(
    rows: &[TrialRow],
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> ServiceResult<Vec<TrialFeedback>> {
    completed(rows)
        .map(|r| {
            let case = decide_trial(&r.trial, expert, cfg)?;
            Ok(TrialFeedback {
                session_id: r.session_id.clone(),
                trial_index: r.trial.trial_index,
                case_id: case,
                directive: case.directive(),
            })
        })
        .collect()
}

pub fn summarize_rows(
    rows: &[TrialRow],
    expert: &ExpertProfile,
    cfg: &ControlConfig,
) -> ServiceResult<SessionSummary> {
    let done: Vec<&TrialRow> = completed(rows).collect();
    let session_index = rows.iter().map(|r| r.session_index).max().unwrap_or(1);
    if done.is_empty() {
        return Ok(SessionSummary {
            n_trials: rows.len(),
            n_completed: 0,
            stats: None,
            z: None,
            strategy: None,
            satf_points: Vec::new(),
            satf_diagnostics: None,
            modal_case: None,
            directive: None,
            anomaly: false,
        });
    }

    let (time, precision) = trial_stats(done.iter().map(|r| &r.trial))?;
    let (strategy, z) = classify_stats(&time, &precision, expert, cfg)?;
    let strategy = (done.len() >= cfg.min_trials_for_classification).then_some(strategy);
    let curve = SatfCurve::from_points(
        done.iter()
            .map(|r| SatfPoint::from_trial(&r.session_id, &r.trial))
            .collect(),
    )?;
    let cases: Vec<FeedbackCase> = trial_feedback(rows, expert, cfg)?
        .iter()
        .map(|f| f.case_id)
        .collect();
    let directive = session_directive(&cases, session_index, cfg)?;

    Ok(SessionSummary {
        n_trials: rows.len(),
        n_completed: done.len(),
        stats: Some(MetricStats { time, precision }),
        z: Some(z),
        strategy,
        satf_points: curve.points,
        satf_diagnostics: Some(curve.diagnostics),
        modal_case: Some(directive.modal_case),
        directive: Some(directive.directive),
        anomaly: directive.anomaly,
    })
}

pub fn satf_of(rows: &[TrialRow]) -> ServiceResult<SatfCurve> {
    Ok(SatfCurve::from_points(
        completed(rows)
            .map(|r| SatfPoint::from_trial(&r.session_id, &r.trial))
            .collect(),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub expert_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    pub summary: SessionSummary,
    pub trials: Vec<TrialFeedback>,
    pub discrimination: DiscriminationReport,
}

/// Offline analysis of a trial list. Fails when nothing was completed.
pub fn analyze(
    rows: &[TrialRow],
    expert: &ExpertProfile,
    cfg: &ControlConfig,
    condition: Option<&str>,
    k: f64,
) -> ServiceResult<Report> {
    let rows: Vec<TrialRow> = rows
        .iter()
        .filter(|r| condition.is_none_or(|c| r.trial.condition == c))
        .cloned()
        .collect();
    if completed(&rows).next().is_none() {
        return Err(ServiceError::NoCompletedTrials);
    }
    let summary = summarize_rows(&rows, expert, cfg)?;
    let (time, precision) = trial_stats(rows.iter().map(|r| &r.trial))?;
    let trainee = rows
        .iter()
        .map(|r| r.trainee_id.as_str())
        .next()
        .unwrap_or("trainee")
        .to_string();
    let discrimination = validate_discrimination(
        expert,
        &[NoviceStats {
            novice_id: trainee,
            time,
            precision,
        }],
        k,
    )?;
    Ok(Report {
        expert_source: expert.source_id.clone(),
        condition: condition.map(str::to_string),
        summary,
        trials: trial_feedback(&rows, expert, cfg)?,
        discrimination,
    })
}

/// Groups rows back into sessions, in order of first appearance.
pub fn records_from_rows(rows: &[TrialRow]) -> Vec<SessionRecord> {
    let mut out: Vec<SessionRecord> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|s| s.session_id == r.session_id) {
            Some(i) => i,
            None => {
                out.push(SessionRecord::new(
                    &r.session_id,
                    &r.trainee_id,
                    r.session_index,
                ));
                out.len() - 1
            }
        };
        out[idx].push_trial(r.trial.clone());
    }
    out
}
