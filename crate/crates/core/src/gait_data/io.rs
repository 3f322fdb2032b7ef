//! Trajectory CSV: `#`-prefixed `key=value` metadata lines, then the header
//! `t,thigh_deg,knee_deg,ankle_z_mm` and one row per sample.

use super::{GaitDataError, GaitSample, GaitTrajectory, SubjectInfo};
use crate::numfmt::sig9;
use std::fmt::Write as _;
use std::path::Path;

const COLUMNS: [&str; 4] = ["t", "thigh_deg", "knee_deg", "ankle_z_mm"];

/// Spacing tolerance on load; nine significant digits cannot carry the
/// in-memory 1e-9 s bound for timestamps above one second.
const LOAD_SPACING_TOLERANCE_S: f64 = 1e-6;

pub fn write_trajectory(traj: &GaitTrajectory) -> String {
    let mut out = String::new();
    let subj = traj.subject();
    let _ = writeln!(out, "# rate_hz={}", sig9(traj.rate_hz()));
    let _ = writeln!(out, "# leg_length_cm={}", sig9(subj.leg_length_cm));
    let _ = writeln!(out, "# height_cm={}", sig9(subj.height_cm));
    let _ = writeln!(out, "# mass_kg={}", sig9(subj.mass_kg));
    let _ = writeln!(out, "# age_yr={}", sig9(subj.age_yr));
    if let Some(seed) = traj.seed() {
        let _ = writeln!(out, "# seed={seed}");
    }
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for s in traj.samples() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig9(s.t),
            sig9(s.thigh_deg),
            sig9(s.knee_deg),
            sig9(s.ankle_z_mm)
        );
    }
    out
}

pub fn save_trajectory(traj: &GaitTrajectory, path: &Path) -> Result<(), GaitDataError> {
    std::fs::write(path, write_trajectory(traj)).map_err(|source| GaitDataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_trajectory(path: &Path) -> Result<GaitTrajectory, GaitDataError> {
    let text = std::fs::read_to_string(path).map_err(|source| GaitDataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trajectory(&text)
}

pub fn parse_trajectory(text: &str) -> Result<GaitTrajectory, GaitDataError> {
    let mut rate_hz = None;
    let mut seed = None;
    let mut subject = SubjectInfo::default();
    let mut leg_seen = false;
    let mut column_index: Option<[usize; 4]> = None;
    let mut rows: Vec<(usize, [f64; 4])> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| GaitDataError::Parse { line: line_no, message };
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            let value = value.trim();
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("metadata {key} is not a number: {value}")))
            };
            match key.trim() {
                "rate_hz" => rate_hz = Some(num()?),
                "leg_length_cm" => {
                    subject.leg_length_cm = num()?;
                    leg_seen = true;
                }
                "height_cm" => subject.height_cm = num()?,
                "mass_kg" => subject.mass_kg = num()?,
                "age_yr" => subject.age_yr = num()?,
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|_| {
                        parse_err(format!("metadata seed is not an integer: {value}"))
                    })?)
                }
                _ => {}
            }
            continue;
        }
        match column_index {
            None => {
                let names: Vec<&str> = line.split(',').map(str::trim).collect();
                let mut idx = [0usize; 4];
                for (slot, col) in idx.iter_mut().zip(COLUMNS) {
                    *slot = names.iter().position(|n| *n == col).ok_or_else(|| {
                        GaitDataError::Schema(format!("missing column `{col}` in header"))
                    })?;
                }
                column_index = Some(idx);
            }
            Some(idx) => {
                let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                let mut row = [0.0; 4];
                for (v, &i) in row.iter_mut().zip(&idx) {
                    let field = fields
                        .get(i)
                        .ok_or_else(|| parse_err(format!("expected column {}", i + 1)))?;
                    *v = field
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("not a number: `{field}`")))?;
                }
                rows.push((line_no, row));
            }
        }
    }

    let Some(_) = column_index else {
        return Err(GaitDataError::Parse {
            line: text.lines().count().max(1),
            message: "no header row found".into(),
        });
    };
    let rate_hz = rate_hz.ok_or_else(|| GaitDataError::Schema("missing `# rate_hz=` metadata".into()))?;
    if !leg_seen {
        return Err(GaitDataError::Schema("missing `# leg_length_cm=` metadata".into()));
    }
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(GaitDataError::Schema(format!("rate_hz must be positive, got {rate_hz}")));
    }
    if rows.is_empty() {
        return Err(GaitDataError::Schema("trajectory has no samples".into()));
    }

    let dt = 1.0 / rate_hz;
    let t0 = rows[0].1[0];
    let mut samples = Vec::with_capacity(rows.len());
    for (j, (line_no, row)) in rows.iter().enumerate() {
        if j > 0 {
            let step = row[0] - rows[j - 1].1[0];
            if step <= 0.0 {
                return Err(GaitDataError::Schema(format!(
                    "line {line_no}: timestamps must be strictly increasing"
                )));
            }
            if (step - dt).abs() > LOAD_SPACING_TOLERANCE_S {
                return Err(GaitDataError::Schema(format!(
                    "line {line_no}: sample spacing {step} does not match rate_hz {rate_hz}"
                )));
            }
        }
        if row[3] < 0.0 {
            return Err(GaitDataError::Schema(format!(
                "line {line_no}: ankle_z_mm must be >= 0"
            )));
        }
        // Snap onto the nominal grid so the in-memory spacing invariant holds.
        let t = if t0 == 0.0 { j as f64 / rate_hz } else { t0 + j as f64 * dt };
        samples.push(GaitSample {
            t,
            thigh_deg: row[1],
            knee_deg: row[2],
            ankle_z_mm: row[3],
        });
    }
    let traj = GaitTrajectory::new(samples, rate_hz, subject)
        .map_err(|e| GaitDataError::Schema(e.to_string()))?;
    Ok(traj.with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait_data::{generate_synthetic, SyntheticGaitConfig};

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        for rate in [25.0, 100.0, 150.0] {
            let cfg = SyntheticGaitConfig { rate_hz: rate, seed: 3, ..Default::default() };
            let traj = generate_synthetic(&cfg).unwrap();
            save_trajectory(&traj, &path).unwrap();
            let back = load_trajectory(&path).unwrap();
            assert_eq!(back.len(), traj.len());
            assert_eq!(back.rate_hz(), traj.rate_hz());
            assert_eq!(back.subject(), traj.subject());
            assert_eq!(back.seed(), Some(3));
            for (a, b) in traj.samples().iter().zip(back.samples()) {
                assert_eq!(a.t, b.t);
                for (x, y) in [(a.thigh_deg, b.thigh_deg), (a.knee_deg, b.knee_deg), (a.ankle_z_mm, b.ankle_z_mm)] {
                    assert!((x - y).abs() <= 5e-9 * x.abs().max(1e-3), "{x} vs {y}");
                }
            }
            // Text is a fixed point after one round trip.
            assert_eq!(write_trajectory(&back), write_trajectory(&traj));
        }
    }

    #[test]
    fn non_monotonic_timestamps_are_a_schema_error() {
        let text = "# rate_hz=100\n# leg_length_cm=89\nt,thigh_deg,knee_deg,ankle_z_mm\n0,1,2,3\n0.01,1,2,3\n0.005,1,2,3\n";
        assert!(matches!(parse_trajectory(text), Err(GaitDataError::Schema(_))));
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_trajectory(""), Err(GaitDataError::Parse { .. })));
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = "# rate_hz=100\n# leg_length_cm=89\nt,thigh_deg,knee_deg\n0,1,2\n";
        assert!(matches!(parse_trajectory(text), Err(GaitDataError::Schema(_))));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "# rate_hz=100\n# leg_length_cm=89\nt,thigh_deg,knee_deg,ankle_z_mm\n0,1,2,3\n0.01,x,2,3\n";
        match parse_trajectory(text) {
            Err(GaitDataError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
