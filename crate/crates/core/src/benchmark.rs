//! Expert benchmark profiles and the checks that the benchmark actually
//! separates the expert from novices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics::{summarize, SummaryStats};
use crate::error::{Error, Result};
use crate::session::SessionRecord;
use crate::task::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionStats {
    pub n_trials: usize,
    pub time: SummaryStats,
    pub precision: SummaryStats,
}

/// Expert time (seconds) and off-target (pixels) statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertProfile {
    pub source_id: String,
    pub n_trials: usize,
    pub time: SummaryStats,
    pub precision: SummaryStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_condition: Option<BTreeMap<String, ConditionStats>>,
}

impl ExpertProfile {
    /// Profile known only by its means and SDs. Order statistics are unknown
    /// and set to the mean.
    pub fn from_moments(
        source_id: &str,
        n: usize,
        time: (f64, f64),
        precision: (f64, f64),
    ) -> Self {
        let stats = |(mean, sd): (f64, f64)| SummaryStats {
            mean,
            sd: Some(sd),
            median: mean,
            min: mean,
            max: mean,
            n,
        };
        Self {
            source_id: source_id.to_string(),
            n_trials: n,
            time: stats(time),
            precision: stats(precision),
            per_condition: None,
        }
    }

    /// Time and precision SDs, both required to be positive.
    pub fn positive_sds(&self) -> Result<(f64, f64)> {
        let t = self.time.sd_or_zero();
        let p = self.precision.sd_or_zero();
        if t.is_nan() || t <= 0.0 {
            return Err(Error::DegenerateBenchmark("time"));
        }
        if p.is_nan() || p <= 0.0 {
            return Err(Error::DegenerateBenchmark("precision"));
        }
        Ok((t, p))
    }

    /// Benchmark restricted to one view condition, when available.
    pub fn for_condition(&self, condition: &str) -> Option<ExpertProfile> {
        let c = self.per_condition.as_ref()?.get(condition)?;
        Some(ExpertProfile {
            source_id: format!("{}#{}", self.source_id, condition),
            n_trials: c.n_trials,
            time: c.time.clone(),
            precision: c.precision.clone(),
            per_condition: None,
        })
    }
}

fn metric_stats<'a>(
    trials: impl Iterator<Item = &'a TrialRecord> + Clone,
) -> Result<(SummaryStats, SummaryStats)> {
    let times: Vec<f64> = trials.clone().map(|t| t.total_time_s()).collect();
    let offs: Vec<f64> = trials.map(|t| t.total_off_target_px() as f64).collect();
    Ok((summarize(&times)?, summarize(&offs)?))
}

/// Pools all completed trials of the given sessions into a profile.
pub fn build_profile(source_id: &str, sessions: &[SessionRecord]) -> Result<ExpertProfile> {
    let completed: Vec<&TrialRecord> = sessions.iter().flat_map(|s| s.completed_trials()).collect();
    if completed.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: completed.len(),
        });
    }
    let (time, precision) = metric_stats(completed.iter().copied())?;

    let mut by_condition: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    for t in &completed {
        by_condition
            .entry(t.condition.as_str())
            .or_default()
            .push(t);
    }
    let mut per_condition = BTreeMap::new();
    for (condition, trials) in by_condition {
        if trials.len() < 2 {
            continue;
        }
        let (time, precision) = metric_stats(trials.iter().copied())?;
        per_condition.insert(
            condition.to_string(),
            ConditionStats {
                n_trials: trials.len(),
                time,
                precision,
            },
        );
    }

    Ok(ExpertProfile {
        source_id: source_id.to_string(),
        n_trials: completed.len(),
        time,
        precision,
        per_condition: Some(per_condition),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoviceStats {
    pub novice_id: String,
    pub time: SummaryStats,
    pub precision: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoviceCheck {
    pub novice_id: String,
    pub z_p: f64,
    pub passes_precision_gap: bool,
    pub expert_sd_smaller_precision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub novices: Vec<NoviceCheck>,
    pub k: f64,
    pub overall_valid: bool,
}

impl DiscriminationReport {
    pub fn failing_gap(&self) -> Vec<&str> {
        self.novices
            .iter()
            .filter(|n| !n.passes_precision_gap)
            .map(|n| n.novice_id.as_str())
            .collect()
    }
}

/// Checks that every novice is at least `k` expert SDs less precise than the
/// expert and that the expert's precision is the more stable one.
pub fn validate_discrimination(
    expert: &ExpertProfile,
    novices: &[NoviceStats],
    k: f64,
) -> Result<DiscriminationReport> {
    if novices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p_sd = expert.precision.sd_or_zero();
    if p_sd.is_nan() || p_sd <= 0.0 {
        return Err(Error::DegenerateBenchmark("precision"));
    }
    let novices: Vec<NoviceCheck> = novices
        .iter()
        .map(|n| {
            let z_p = (n.precision.mean - expert.precision.mean) / p_sd;
            NoviceCheck {
                novice_id: n.novice_id.clone(),
                z_p,
                passes_precision_gap: z_p >= k,
                expert_sd_smaller_precision: p_sd < n.precision.sd_or_zero(),
            }
        })
        .collect();
    let overall_valid = novices
        .iter()
        .all(|n| n.passes_precision_gap && n.expert_sd_smaller_precision);
    Ok(DiscriminationReport {
        novices,
        k,
        overall_valid,
    })
}

/// Pretty JSON with a trailing newline; field order is fixed by the types.
pub fn save_profile(profile: &ExpertProfile) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(profile).expect("profile serializes");
    out.push(b'\n');
    out
}

pub fn load_profile(bytes: &[u8]) -> Result<ExpertProfile> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::StepRecord;

    fn trial(idx: u32, condition: &str, ms: u64, off: u32) -> TrialRecord {
        TrialRecord {
            trial_index: idx,
            condition: condition.into(),
            steps: vec![StepRecord {
                step_index: 1,
                zone_id: 1,
                duration_ms: ms,
                off_target_px: off,
            }],
            completed: true,
            invalid_reason: None,
        }
    }

    fn session(trials: Vec<TrialRecord>) -> SessionRecord {
        let mut s = SessionRecord::new("s", "expert", 1);
        for t in trials {
            s.push_trial(t);
        }
        s
    }

    #[test]
    fn identical_trials_have_zero_spread() {
        let s = session((1..=10).map(|i| trial(i, "2D", 10_000, 500)).collect());
        let p = build_profile("e", &[s]).unwrap();
        assert_eq!((p.time.mean, p.precision.mean), (10.0, 500.0));
        assert_eq!((p.time.sd, p.precision.sd), (Some(0.0), Some(0.0)));
        assert_eq!(p.n_trials, 10);
    }

    #[test]
    fn conditions_pool_and_split() {
        let mut trials: Vec<_> = (1..=4)
            .map(|i| trial(i, "2D", 9000 + u64::from(i), 400))
            .collect();
        trials.extend((5..=7).map(|i| trial(i, "3D", 12_000, 300 + i)));
        trials.push(trial(8, "solo", 5000, 0));
        let mut incomplete = trial(9, "2D", 1, 0);
        incomplete.completed = false;
        trials.push(incomplete);
        let p = build_profile("e", &[session(trials)]).unwrap();
        assert_eq!(p.n_trials, 8);
        let pc = p.per_condition.as_ref().unwrap();
        assert_eq!(pc["2D"].n_trials + pc["3D"].n_trials + 1, p.n_trials);
        assert!(!pc.contains_key("solo"));
        assert_eq!(p.for_condition("3D").unwrap().time.mean, 12.0);
    }

    #[test]
    fn too_few_trials() {
        let err = build_profile("e", &[session(vec![trial(1, "2D", 1000, 0)])]).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 2, got: 1 });
    }

    #[test]
    fn discrimination_identity_fails_positive_k() {
        let e = ExpertProfile::from_moments("e", 120, (13.74, 3.10), (871.0, 273.0));
        let same = NoviceStats {
            novice_id: "twin".into(),
            time: e.time.clone(),
            precision: e.precision.clone(),
        };
        let r = validate_discrimination(&e, &[same], 0.5).unwrap();
        assert_eq!(r.novices[0].z_p, 0.0);
        assert!(!r.overall_valid);
        assert_eq!(
            validate_discrimination(&e, &[], 1.0),
            Err(Error::EmptyInput)
        );
    }

    #[test]
    fn profile_round_trip_and_errors() {
        let s = session(
            (1..=5)
                .map(|i| trial(i, "2D", 1000 * u64::from(i), 100 * i))
                .collect(),
        );
        let p = build_profile("e", &[s]).unwrap();
        assert_eq!(load_profile(&save_profile(&p)).unwrap(), p);

        let mut v: serde_json::Value = serde_json::from_slice(&save_profile(&p)).unwrap();
        v["time"].as_object_mut().unwrap().remove("median");
        let err = load_profile(v.to_string().as_bytes()).unwrap_err();
        match err {
            Error::Parse { path, message } => {
                assert_eq!(path, "time");
                assert!(message.contains("median"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_profile(b"{"), Err(Error::Parse { .. })));
    }
}
