//! Trial table: one CSV row per trial, UTF-8, comma separated, `.` decimal.
//!
//! Columns, in order:
//!
//! ```text
//! session_id,trainee_id,session_index,condition,trial_index,completed,
//! total_time_s,total_off_target_px,
//! step1_duration_ms..step5_duration_ms,step1_off_px..step5_off_px,
//! invalid_reason
//! ```
//!
//! Totals are empty for trials that were not completed; step columns are
//! empty for steps that never happened. Step zones follow the board's task
//! order, so the table does not repeat them.

use std::io::{Read, Write};

use satf_core::geometry::BoardGeometry;
use satf_core::task::{InvalidReason, StepRecord, TrialRecord};

use crate::analysis::TrialRow;
use crate::error::{ServiceError, ServiceResult};

const STEPS: usize = BoardGeometry::STEPS_PER_TRIAL;

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = [
        "session_id",
        "trainee_id",
        "session_index",
        "condition",
        "trial_index",
        "completed",
        "total_time_s",
        "total_off_target_px",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=STEPS).map(|i| format!("step{i}_duration_ms")));
    h.extend((1..=STEPS).map(|i| format!("step{i}_off_px")));
    h.push("invalid_reason".into());
    h
}

fn format_time_s(ms: u64) -> String {
    format!("{}.{:03}", ms / 1000, ms % 1000)
}

pub fn write_trials<W: Write>(out: W, rows: &[TrialRow]) -> ServiceResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| ServiceError::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(header()).map_err(csv_err)?;
    for row in rows {
        let t = &row.trial;
        let mut rec = vec![
            row.session_id.clone(),
            row.trainee_id.clone(),
            row.session_index.to_string(),
            t.condition.clone(),
            t.trial_index.to_string(),
            t.completed.to_string(),
        ];
        if t.completed {
            rec.push(format_time_s(t.total_time_ms()));
            rec.push(t.total_off_target_px().to_string());
        } else {
            rec.extend([String::new(), String::new()]);
        }
        for i in 0..STEPS {
            rec.push(
                t.steps
                    .get(i)
                    .map(|s| s.duration_ms.to_string())
                    .unwrap_or_default(),
            );
        }
        for i in 0..STEPS {
            rec.push(
                t.steps
                    .get(i)
                    .map(|s| s.off_target_px.to_string())
                    .unwrap_or_default(),
            );
        }
        rec.push(t.invalid_reason.map(|r| r.to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_reason(s: &str) -> Option<InvalidReason> {
    match s {
        "dropped" => Some(InvalidReason::Dropped),
        "wrong-order" => Some(InvalidReason::WrongOrder),
        "abandoned" => Some(InvalidReason::Abandoned),
        _ => None,
    }
}

/// Reads a trial table. Errors name the 1-based line of the offending row.
pub fn read_trials<R: Read>(input: R, geometry: &BoardGeometry) -> ServiceResult<Vec<TrialRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let expected = header();
    let found = reader.headers().map_err(|e| ServiceError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if found.iter().ne(expected.iter().map(String::as_str)) {
        return Err(ServiceError::Csv {
            line: 1,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| ServiceError::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| ServiceError::Csv { line, message };
        let raw = |i: usize| rec.get(i).unwrap_or("");
        let field = |i: usize| raw(i).trim();
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse()
                .map_err(|_| format!("column `{name}`: cannot parse `{s}`"))
        }
        let session_index: u32 = num(field(2), "session_index").map_err(bad)?;
        let trial_index: u32 = num(field(4), "trial_index").map_err(bad)?;
        let completed: bool = num(field(5), "completed").map_err(bad)?;

        let mut steps = Vec::new();
        for i in 0..STEPS {
            let (d, o) = (field(8 + i), field(8 + STEPS + i));
            if d.is_empty() && o.is_empty() {
                continue;
            }
            if steps.len() != i {
                return Err(bad(format!("step {} present after a missing step", i + 1)));
            }
            let duration_ms: u64 = num(d, &format!("step{}_duration_ms", i + 1)).map_err(bad)?;
            let off_target_px: u32 = num(o, &format!("step{}_off_px", i + 1)).map_err(bad)?;
            if duration_ms == 0 || off_target_px > geometry.object_area() {
                return Err(bad(format!("step {} values out of range", i + 1)));
            }
            steps.push(StepRecord {
                step_index: i as u8 + 1,
                zone_id: geometry.task_order[i],
                duration_ms,
                off_target_px,
            });
        }
        let reason_text = field(8 + 2 * STEPS);
        let invalid_reason = if reason_text.is_empty() {
            None
        } else {
            Some(
                parse_reason(reason_text)
                    .ok_or_else(|| bad(format!("unknown invalid_reason `{reason_text}`")))?,
            )
        };
        let trial = TrialRecord {
            trial_index,
            condition: raw(3).to_string(),
            steps,
            completed,
            invalid_reason,
        };
        if completed {
            if trial.steps.len() != STEPS {
                return Err(bad(format!(
                    "completed trial has {} steps",
                    trial.steps.len()
                )));
            }
            let total_ms =
                (num::<f64>(field(6), "total_time_s").map_err(bad)? * 1000.0).round() as u64;
            let total_px: u64 = num(field(7), "total_off_target_px").map_err(bad)?;
            if total_ms != trial.total_time_ms() || total_px != trial.total_off_target_px() {
                return Err(bad("totals do not match step columns".into()));
            }
        }
        rows.push(TrialRow {
            session_id: raw(0).to_string(),
            trainee_id: raw(1).to_string(),
            session_index,
            trial,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(idx: u32, completed: bool) -> TrialRow {
        let g = BoardGeometry::default();
        let n = if completed { 5 } else { 2 };
        TrialRow {
            session_id: "s1".into(),
            trainee_id: "t".into(),
            session_index: 3,
            trial: TrialRecord {
                trial_index: idx,
                condition: "2D-A".into(),
                steps: (0..n)
                    .map(|i| StepRecord {
                        step_index: i as u8 + 1,
                        zone_id: g.task_order[i],
                        duration_ms: 1000 + i as u64,
                        off_target_px: 30 * i as u32,
                    })
                    .collect(),
                completed,
                invalid_reason: (!completed).then_some(InvalidReason::Dropped),
            },
        }
    }

    #[test]
    fn writes_fixed_header_and_blank_totals() {
        let mut buf = Vec::new();
        write_trials(&mut buf, &[row(1, true), row(2, false)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with(
            "session_id,trainee_id,session_index,condition,trial_index,completed,total_time_s"
        ));
        assert!(lines[1].contains(",true,5.010,300,"));
        assert!(lines[2].contains(",false,,,1000,1001,,,,0,30,,,,dropped"));
    }

    #[test]
    fn round_trip() {
        let g = BoardGeometry::default();
        let rows = vec![row(1, true), row(2, false), row(3, true)];
        let mut buf = Vec::new();
        write_trials(&mut buf, &rows).unwrap();
        assert_eq!(read_trials(&buf[..], &g).unwrap(), rows);
    }

    #[test]
    fn malformed_row_names_line() {
        let g = BoardGeometry::default();
        let mut buf = Vec::new();
        write_trials(&mut buf, &[row(1, true), row(2, true)]).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("5.010", "5.x", 2);
        let err = read_trials(text.as_bytes(), &g).unwrap_err();
        assert!(matches!(err, ServiceError::Csv { line: 2, .. }), "{err}");

        let mut buf = Vec::new();
        write_trials(&mut buf, &[row(1, true), row(2, true)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let broken =
            text.lines().take(2).collect::<Vec<_>>().join("\n") + "\ns1,t,3,2D-A,2,maybe\n";
        let err = read_trials(broken.as_bytes(), &g).unwrap_err();
        assert!(matches!(err, ServiceError::Csv { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_wrong_header_and_inconsistent_totals() {
        let g = BoardGeometry::default();
        assert!(matches!(
            read_trials("a,b,c\n".as_bytes(), &g),
            Err(ServiceError::Csv { line: 1, .. })
        ));
        let mut buf = Vec::new();
        write_trials(&mut buf, &[row(1, true)]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(",300,", ",301,");
        assert!(read_trials(text.as_bytes(), &g).is_err());
    }
}
