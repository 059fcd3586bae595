//! Published benchmark moments and synthetic datasets that reproduce them.
//!
//! Only means and SDs of the reference tables are known, so every dataset
//! here is built to match those moments: draw distinct base values,
//! standardize them to zero mean and unit sample SD, then map
//! `x -> mean + sd * x`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::analytics::summarize;
use crate::error::{Error, Result};
use crate::geometry::BoardGeometry;
use crate::placement::PlacementSolver;
use crate::task::{StepRecord, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TimeS,
    OffTargetPx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentColumn {
    pub id: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub table: String,
    pub metric: Metric,
    pub n: usize,
    pub columns: Vec<MomentColumn>,
}

impl MomentTable {
    pub fn column(&self, id: &str) -> Option<&MomentColumn> {
        self.columns.iter().find(|c| c.id == id)
    }
}

fn bundled(json: &str) -> MomentTable {
    serde_json::from_str(json).expect("bundled moment table parses")
}

/// Expert and ten novices, task time over 120 trials.
pub fn cohort1_time() -> MomentTable {
    bundled(include_str!("../fixtures/cohort1_time.json"))
}

/// Expert and ten novices, off-target score over 120 trials.
pub fn cohort1_precision() -> MomentTable {
    bundled(include_str!("../fixtures/cohort1_precision.json"))
}

/// Expert and novices A-D, task time over 80 trials.
pub fn cohort2_time() -> MomentTable {
    bundled(include_str!("../fixtures/cohort2_time.json"))
}

/// Expert and novices A-D, off-target score over 80 trials.
pub fn cohort2_precision() -> MomentTable {
    bundled(include_str!("../fixtures/cohort2_precision.json"))
}

pub fn all_tables() -> [MomentTable; 4] {
    [
        cohort1_time(),
        cohort1_precision(),
        cohort2_time(),
        cohort2_precision(),
    ]
}

/// Affine map of `values` onto the given sample mean and SD.
pub fn standardize_to(values: &[f64], mean: f64, sd: f64) -> Result<Vec<f64>> {
    let s = summarize(values)?;
    let spread =
        s.sd.filter(|v| *v > 0.0)
            .ok_or(Error::DegenerateBenchmark("base sample"))?;
    Ok(values
        .iter()
        .map(|v| mean + sd * (v - s.mean) / spread)
        .collect())
}

/// `n` real values with sample mean `mean` and sample SD `sd`. Base values are
/// uniform, so the result stays within `mean ± sqrt(3) * sd` (approximately).
pub fn moment_matched(n: usize, mean: f64, sd: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    standardize_to(&base, mean, sd)
}

fn sum_sq_dev(xs: &[i64], mean: f64) -> f64 {
    xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum()
}

/// Integer values whose sum is `round(mean * n)` and whose sample SD is
/// within `sd_tol` of `sd`. Starts from the real-valued moment match, snaps
/// to values accepted by `admissible`, then nudges admissible values by one
/// unit until both moments fit.
pub fn moment_matched_integers(
    n: usize,
    mean: f64,
    sd: f64,
    sd_tol: f64,
    seed: u64,
    admissible: impl Fn(i64) -> bool,
) -> Result<Vec<i64>> {
    let real = moment_matched(n, mean, sd, seed)?;
    let snap = |v: f64| -> Result<i64> {
        let r = v.round() as i64;
        (0..10_000)
            .flat_map(|d| [r - d, r + d])
            .find(|&x| admissible(x))
            .ok_or_else(|| Error::InvalidMetric(format!("no admissible integer near {v}")))
    };
    let mut xs = real.into_iter().map(snap).collect::<Result<Vec<i64>>>()?;

    let target_sum = (mean * n as f64).round() as i64;
    let mut diff = target_sum - xs.iter().sum::<i64>();
    let mut stalled = 0;
    let mut i = 0;
    while diff != 0 {
        let k = i % n;
        let moved = xs[k] + diff.signum();
        if admissible(moved) {
            xs[k] = moved;
            diff -= diff.signum();
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > n {
                return Err(Error::InvalidMetric("cannot fix fixture sum".into()));
            }
        }
        i += 1;
    }

    let exact_mean = target_sum as f64 / n as f64;
    let target_ss = sd * sd * (n - 1) as f64;
    for _ in 0..100_000 {
        let ss = sum_sq_dev(&xs, exact_mean);
        let current_sd = (ss / (n - 1) as f64).sqrt();
        if (current_sd - sd).abs() <= sd_tol {
            return Ok(xs);
        }
        let widen = target_ss > ss;
        let need = (target_ss - ss).abs();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| xs[k]);
        // moving (hi + 1, lo - 1) adds 2d + 2; (hi - 1, lo + 1) removes 2d - 2
        let wanted_gap = if widen {
            (need - 2.0) / 2.0
        } else {
            (need + 2.0) / 2.0
        };
        let step = if widen { 1 } else { -1 };
        let (mut best, mut best_err) = (None, f64::INFINITY);
        for a in 0..n {
            for b in a + 1..n {
                let (lo, hi) = (order[a], order[b]);
                let gap = (xs[hi] - xs[lo]) as f64;
                if !widen && gap < 2.0 {
                    continue;
                }
                if !admissible(xs[hi] + step) || !admissible(xs[lo] - step) {
                    continue;
                }
                let err = (gap - wanted_gap).abs();
                if err < best_err {
                    best_err = err;
                    best = Some((lo, hi));
                }
            }
        }
        let (lo, hi) = best.ok_or(Error::DegenerateBenchmark("integer fixture"))?;
        xs[hi] += step;
        xs[lo] -= step;
    }
    Err(Error::InvalidMetric(format!(
        "could not match sd {sd} within {sd_tol} using integers"
    )))
}

/// Splits `total` into `parts` positive integers following random weights
/// (largest-remainder rounding).
pub fn split_positive<R: Rng + ?Sized>(total: u64, parts: usize, rng: &mut R) -> Vec<u64> {
    assert!(
        total >= parts as u64,
        "cannot split {total} into {parts} positive parts"
    );
    let weights = random_shares(parts, rng);
    let spare = total - parts as u64;
    let raw: Vec<f64> = weights.iter().map(|w| w * spare as f64).collect();
    let mut out: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let mut left = spare - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..parts).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[k] += 1;
        left -= 1;
    }
    out.iter().map(|v| v + 1).collect()
}

/// Dirichlet-style positive weights summing to one.
pub fn random_shares<R: Rng + ?Sized>(parts: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(4.0, 1.0).expect("valid gamma parameters");
    let w: Vec<f64> = (0..parts).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Completed trials whose total times (ms) and total off-target scores
/// match the given moments. Trials cycle through `conditions` in blocks of
/// `block_len`.
#[allow(clippy::too_many_arguments)]
pub fn moment_matched_trials(
    n: usize,
    time_s: (f64, f64),
    off_target_px: (f64, f64),
    conditions: &[&str],
    block_len: usize,
    seed: u64,
    geometry: &BoardGeometry,
) -> Result<Vec<TrialRecord>> {
    let solver = PlacementSolver::new(geometry);
    let steps = geometry.task_order.len();
    let times_ms =
        moment_matched_integers(n, time_s.0 * 1000.0, time_s.1 * 1000.0, 2.0, seed, |ms| {
            ms >= steps as i64
        })?;
    let offs = moment_matched_integers(
        n,
        off_target_px.0,
        off_target_px.1,
        0.002,
        seed ^ 0x9e37_79b9,
        |px| px >= 0 && solver.is_reachable_total(px as u32),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    let mut offs = offs;
    offs.shuffle(&mut rng);

    let mut trials = Vec::with_capacity(n);
    for (i, (&ms, &off)) in times_ms.iter().zip(&offs).enumerate() {
        let durations = split_positive(ms as u64, steps, &mut rng);
        let shares = random_shares(steps, &mut rng);
        let scores = solver
            .decompose(off as u32, &shares)
            .ok_or_else(|| Error::InvalidMetric(format!("cannot split {off} px into steps")))?;
        let condition = if conditions.is_empty() {
            crate::session::DEFAULT_CONDITION
        } else {
            conditions[(i / block_len.max(1)) % conditions.len()]
        };
        trials.push(TrialRecord {
            trial_index: i as u32 + 1,
            condition: condition.to_string(),
            steps: (0..steps)
                .map(|k| StepRecord {
                    step_index: k as u8 + 1,
                    zone_id: geometry.task_order[k],
                    duration_ms: durations[k],
                    off_target_px: scores[k],
                })
                .collect(),
            completed: true,
            invalid_reason: None,
        });
    }
    Ok(trials)
}

/// Trials reproducing one participant of a pair of tables (time, precision).
pub fn participant_trials(
    time_table: &MomentTable,
    precision_table: &MomentTable,
    id: &str,
    conditions: &[&str],
    seed: u64,
    geometry: &BoardGeometry,
) -> Result<Vec<TrialRecord>> {
    let t = time_table.column(id).ok_or_else(|| {
        Error::InvalidConfig(format!("no column `{id}` in table {}", time_table.table))
    })?;
    let p = precision_table.column(id).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "no column `{id}` in table {}",
            precision_table.table
        ))
    })?;
    moment_matched_trials(
        time_table.n,
        (t.mean, t.sd),
        (p.mean, p.sd),
        conditions,
        10,
        seed,
        geometry,
    )
}
