//! Synthetic trainees: event streams for each strategy archetype.
//!
//! A preset describes exponential learning curves for the per-trial time and
//! off-target totals. Each generated trial draws its totals around the
//! curve, splits them over the five steps, and emits pick/place events whose
//! coordinates reproduce the step scores exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::control::StrategyClass;
use crate::error::{Error, Result};
use crate::fixtures::{random_shares, split_positive};
use crate::geometry::BoardGeometry;
use crate::placement::PlacementSolver;
use crate::session::{replay, SessionInput, SessionRecord};
use crate::task::TrialEvent;

/// Session whose moments the bundled presets are calibrated against.
pub const CALIBRATION_SESSION: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyPreset {
    pub strategy: StrategyClass,
    pub t_base_s: f64,
    pub t_floor_s: f64,
    pub t_decay: f64,
    pub p_base_px: f64,
    pub p_floor_px: f64,
    pub p_decay: f64,
    pub t_noise_sd_s: f64,
    pub p_noise_sd_px: f64,
    pub drop_prob: f64,
}

impl StrategyPreset {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_floor_s > 0.0
            && self.t_floor_s <= self.t_base_s
            && self.p_floor_px >= 0.0
            && self.p_floor_px <= self.p_base_px
            && self.t_decay >= 0.0
            && self.p_decay >= 0.0
            && self.t_noise_sd_s >= 0.0
            && self.p_noise_sd_px >= 0.0
            && (0.0..1.0).contains(&self.drop_prob);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid preset for {}",
                self.strategy
            )))
        }
    }

    /// Noise-free trial time on the learning curve.
    pub fn curve_time_s(&self, session_index: u32) -> f64 {
        let s = f64::from(session_index.saturating_sub(1));
        (self.t_base_s * (-self.t_decay * s).exp()).max(self.t_floor_s)
    }

    pub fn curve_off_target_px(&self, session_index: u32) -> f64 {
        let s = f64::from(session_index.saturating_sub(1));
        (self.p_base_px * (-self.p_decay * s).exp()).max(self.p_floor_px)
    }
}

/// Base, final value at the calibration session, and per-trial noise.
struct Curve {
    base: f64,
    target: f64,
    floor: f64,
    noise: f64,
}

impl Curve {
    fn decay(&self) -> f64 {
        (self.base / self.target).ln() / f64::from(CALIBRATION_SESSION - 1)
    }
}

/// Bundled preset; session-8 curve values sit on the matching novice's
/// final-session means.
pub fn presets_for(strategy: StrategyClass) -> StrategyPreset {
    let (time, precision) = match strategy {
        StrategyClass::ExtremeSpeedFocused => (
            Curve {
                base: 12.0,
                target: 4.76,
                floor: 2.0,
                noise: 0.42,
            },
            Curve {
                base: 1600.0,
                target: 1146.0,
                floor: 200.0,
                noise: 378.0,
            },
        ),
        StrategyClass::SpeedFocused => (
            Curve {
                base: 14.0,
                target: 6.35,
                floor: 2.5,
                noise: 0.71,
            },
            Curve {
                base: 1500.0,
                target: 905.0,
                floor: 150.0,
                noise: 250.0,
            },
        ),
        StrategyClass::Undetermined => (
            Curve {
                base: 16.0,
                target: 8.85,
                floor: 3.0,
                noise: 1.77,
            },
            Curve {
                base: 1700.0,
                target: 1278.0,
                floor: 200.0,
                noise: 434.0,
            },
        ),
        StrategyClass::PrecisionFocused => (
            Curve {
                base: 20.0,
                target: 9.13,
                floor: 4.0,
                noise: 1.25,
            },
            Curve {
                base: 1200.0,
                target: 406.0,
                floor: 50.0,
                noise: 151.0,
            },
        ),
    };
    StrategyPreset {
        strategy,
        t_base_s: time.base,
        t_floor_s: time.floor,
        t_decay: time.decay(),
        p_base_px: precision.base,
        p_floor_px: precision.floor,
        p_decay: precision.decay(),
        t_noise_sd_s: time.noise,
        p_noise_sd_px: precision.noise,
        drop_prob: 0.03,
    }
}

/// Deterministic generator state (ChaCha8 seeded from a 64-bit seed).
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPlan {
    pub session_id: String,
    pub trainee_id: String,
    pub session_index: u32,
    pub trials_per_block: usize,
    pub conditions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSession {
    pub plan: SessionPlan,
    pub inputs: Vec<SessionInput>,
    /// Clamping and other adjustments made while generating.
    pub notes: Vec<String>,
}

impl GeneratedSession {
    pub fn replay(&self, geometry: &BoardGeometry) -> Result<SessionRecord> {
        let header = SessionRecord::new(
            &self.plan.session_id,
            &self.plan.trainee_id,
            self.plan.session_index,
        );
        let (record, rejected) = replay(header, geometry.clone(), &self.inputs)?;
        if rejected > 0 {
            return Err(Error::ProtocolViolation(format!(
                "{rejected} generated events were rejected"
            )));
        }
        Ok(record)
    }
}

struct Emitter<'a> {
    geometry: &'a BoardGeometry,
    solver: &'a PlacementSolver,
    ts_ms: u64,
    inputs: Vec<SessionInput>,
}

impl Emitter<'_> {
    fn event(&mut self, e: TrialEvent) {
        self.inputs.push(SessionInput::Event(e));
    }

    fn step<R: Rng>(&mut self, step: usize, duration_ms: u64, off: u32, rng: &mut R) -> Result<()> {
        self.event(TrialEvent::Pick { ts_ms: self.ts_ms });
        self.ts_ms += duration_ms;
        let zone_id = self.geometry.task_order[step];
        let (x, y) = self
            .solver
            .placement(zone_id, off, rng.random_range(0..64), self.geometry)?;
        self.event(TrialEvent::Place {
            ts_ms: self.ts_ms,
            zone_id,
            object_x_px: x,
            object_y_px: y,
        });
        // travel to the next pick is not part of the trial time
        self.ts_ms += rng.random_range(250..900);
        Ok(())
    }
}

pub fn generate_session(
    preset: &StrategyPreset,
    plan: &SessionPlan,
    geometry: &BoardGeometry,
    rng: &mut SeededRng,
) -> Result<GeneratedSession> {
    preset.validate()?;
    geometry.validate()?;
    if plan.session_index < 1 {
        return Err(Error::InvalidConfig("session index starts at 1".into()));
    }
    if plan.conditions.is_empty() || plan.trials_per_block == 0 {
        return Err(Error::InvalidConfig(
            "need at least one condition and one trial per block".into(),
        ));
    }
    let solver = PlacementSolver::new(geometry);
    let steps = geometry.task_order.len();
    let time_mu = preset.curve_time_s(plan.session_index);
    let off_mu = preset.curve_off_target_px(plan.session_index);
    let time_noise =
        Normal::new(0.0, preset.t_noise_sd_s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let off_noise =
        Normal::new(0.0, preset.p_noise_sd_px).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let rng = rng.rng();
    let mut em = Emitter {
        geometry,
        solver: &solver,
        ts_ms: 0,
        inputs: Vec::new(),
    };
    let mut notes = Vec::new();
    let mut attempt = 0u32;

    for condition in &plan.conditions {
        let mut completed = 0;
        while completed < plan.trials_per_block {
            attempt += 1;
            em.inputs.push(SessionInput::StartTrial {
                condition: Some(condition.clone()),
            });
            let total_s = (time_mu + time_noise.sample(rng)).max(preset.t_floor_s);
            let total_ms = ((total_s * 1000.0).round() as u64).max(steps as u64);
            let raw_off = (off_mu + off_noise.sample(rng))
                .max(preset.p_floor_px)
                .round();
            let max_off = f64::from(solver.max_total());
            if raw_off > max_off {
                notes.push(format!(
                    "attempt {attempt}: off-target total {raw_off} clamped to {max_off}"
                ));
            }
            let total_off = solver.nearest_reachable_total(raw_off.clamp(0.0, max_off) as u32);
            let durations = split_positive(total_ms, steps, rng);
            let shares = random_shares(steps, rng);
            let scores = solver.decompose(total_off, &shares).ok_or_else(|| {
                Error::InvalidMetric(format!("cannot split {total_off} px into steps"))
            })?;

            let dropped = rng.random_bool(preset.drop_prob);
            let steps_done = if dropped {
                rng.random_range(0..steps)
            } else {
                steps
            };
            for k in 0..steps_done {
                em.step(k, durations[k], scores[k], rng)?;
            }
            if dropped {
                em.event(TrialEvent::Pick { ts_ms: em.ts_ms });
                em.ts_ms += durations[steps_done] / 2 + 1;
                em.event(TrialEvent::Drop { ts_ms: em.ts_ms });
            } else {
                completed += 1;
            }
            em.ts_ms += rng.random_range(2000..5000);
        }
    }

    Ok(GeneratedSession {
        plan: plan.clone(),
        inputs: em.inputs,
        notes,
    })
}
