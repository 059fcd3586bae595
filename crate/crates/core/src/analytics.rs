//! Descriptive statistics, speed-accuracy trade-off curves and standardized
//! comparison against an expert.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::benchmark::ExpertProfile;
use crate::error::{Error, Result};
use crate::task::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation; absent for a single observation.
    pub sd: Option<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl SummaryStats {
    /// Standard deviation, with a single observation counting as zero spread.
    pub fn sd_or_zero(&self) -> f64 {
        self.sd.unwrap_or(0.0)
    }
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidMetric(format!("non-finite value {bad}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    // two-pass for stability
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(SummaryStats {
        mean,
        sd,
        median,
        min: sorted[0],
        max: sorted[n - 1],
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialRef {
    pub session_id: String,
    pub trial_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatfPoint {
    pub time_s: f64,
    pub off_target_px: u64,
    pub trial_ref: TrialRef,
}

impl SatfPoint {
    pub fn from_trial(session_id: &str, trial: &TrialRecord) -> Self {
        Self {
            time_s: trial.total_time_s(),
            off_target_px: trial.total_off_target_px(),
            trial_ref: TrialRef {
                session_id: session_id.to_string(),
                trial_index: trial.trial_index,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatfDiagnostics {
    pub time_min: f64,
    pub time_max: f64,
    pub p_min: u64,
    pub p_max: u64,
    /// Spearman correlation between time and off-target score.
    pub rank_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatfCurve {
    pub points: Vec<SatfPoint>,
    pub diagnostics: SatfDiagnostics,
}

impl SatfCurve {
    /// Sorts points by time (ties by trial reference) and computes diagnostics.
    pub fn from_points(mut points: Vec<SatfPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        points.sort_by(|a, b| {
            a.time_s
                .total_cmp(&b.time_s)
                .then_with(|| a.trial_ref.cmp(&b.trial_ref))
        });
        let times: Vec<f64> = points.iter().map(|p| p.time_s).collect();
        let offs: Vec<f64> = points.iter().map(|p| p.off_target_px as f64).collect();
        let diagnostics = SatfDiagnostics {
            time_min: times[0],
            time_max: times[times.len() - 1],
            p_min: points.iter().map(|p| p.off_target_px).min().unwrap_or(0),
            p_max: points.iter().map(|p| p.off_target_px).max().unwrap_or(0),
            rank_correlation: spearman(&times, &offs),
        };
        Ok(Self {
            points,
            diagnostics,
        })
    }
}

/// Speed-accuracy trade-off function of one session's completed trials.
pub fn build_satf(session_id: &str, trials: &[TrialRecord]) -> Result<SatfCurve> {
    if let Some(t) = trials.iter().find(|t| !t.completed) {
        return Err(Error::IncompleteTrial(t.trial_index));
    }
    SatfCurve::from_points(
        trials
            .iter()
            .map(|t| SatfPoint::from_trial(session_id, t))
            .collect(),
    )
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]].total_cmp(&values[idx[i]]) == Ordering::Equal
        {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation; 0 when either variable is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || x.len() != y.len() {
        return 0.0;
    }
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScorePair {
    pub z_t: f64,
    pub z_p: f64,
}

pub fn z_scores(
    trainee_time: &SummaryStats,
    trainee_precision: &SummaryStats,
    expert: &ExpertProfile,
) -> Result<ZScorePair> {
    let (t_sd, p_sd) = expert.positive_sds()?;
    Ok(ZScorePair {
        z_t: (trainee_time.mean - expert.time.mean) / t_sd,
        z_p: (trainee_precision.mean - expert.precision.mean) / p_sd,
    })
}

/// Time and off-target statistics over completed trials only.
pub fn trial_stats<'a>(
    trials: impl IntoIterator<Item = &'a TrialRecord>,
) -> Result<(SummaryStats, SummaryStats)> {
    let (times, offs): (Vec<f64>, Vec<f64>) = trials
        .into_iter()
        .filter(|t| t.completed)
        .map(|t| (t.total_time_s(), t.total_off_target_px() as f64))
        .unzip();
    Ok((summarize(&times)?, summarize(&offs)?))
}
