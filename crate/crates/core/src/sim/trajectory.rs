//! Sampled trajectories and their CSV form.
//!
//! One CSV file per channel, 38 columns: `t`, the 9 state components, then
//! per foot (FL, FR, HL, HR) the contact flag, world position, and force.
//! Floats are printed with 17 significant digits so a write/read round trip
//! is lossless.

use super::state::{CentroidalState, ContactSet, Foot, FootContact};
use super::SimError;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// One sampled instant: state plus the contacts applied over the following
/// step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub state: CentroidalState,
    pub contacts: ContactSet,
}

/// Time-indexed (state, contact) sequence at a fixed sample period, with a
/// truth channel and an optional noisy measurement channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub truth: Vec<Sample>,
    pub measured: Option<Vec<Sample>>,
}

impl Trajectory {
    pub fn new(
        dt: f64,
        truth: Vec<Sample>,
        measured: Option<Vec<Sample>>,
    ) -> Result<Self, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        let traj = Self { dt, truth, measured };
        traj.validate()?;
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn has_measured(&self) -> bool {
        self.measured.is_some()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for sample in &self.truth {
            if !sample.state.is_finite() {
                return Err(SimError::NonFiniteSample);
            }
            sample.contacts.validate()?;
        }
        if let Some(measured) = &self.measured {
            if measured.len() != self.truth.len() {
                return Err(SimError::ChannelLengthMismatch {
                    truth: self.truth.len(),
                    measured: measured.len(),
                });
            }
            for (t, m) in self.truth.iter().zip(measured.iter()) {
                if !m.state.is_finite() {
                    return Err(SimError::NonFiniteSample);
                }
                m.contacts.validate()?;
                if t.contacts.flags() != m.contacts.flags() {
                    return Err(SimError::ContactFlagMismatch);
                }
            }
        }
        Ok(())
    }
}

fn header() -> String {
    let mut cols = vec![
        "t".to_string(),
        "c_x".into(),
        "c_y".into(),
        "c_z".into(),
        "l_x".into(),
        "l_y".into(),
        "l_z".into(),
        "k_x".into(),
        "k_y".into(),
        "k_z".into(),
    ];
    for foot in Foot::ALL {
        let label = foot.label();
        cols.push(format!("{label}_b"));
        for part in ["r_x", "r_y", "r_z", "f_x", "f_y", "f_z"] {
            cols.push(format!("{label}_{part}"));
        }
    }
    cols.join(",")
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write one channel to CSV.
pub fn write_channel_csv(path: &Path, dt: f64, samples: &[Sample]) -> Result<(), SimError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header())?;
    for (i, sample) in samples.iter().enumerate() {
        let t = i as f64 * dt;
        let mut fields = Vec::with_capacity(38);
        fields.push(fmt_float(t));
        for v in sample.state.to_flat() {
            fields.push(fmt_float(v));
        }
        for foot in &sample.contacts.feet {
            fields.push(if foot.active { "1".into() } else { "0".into() });
            for v in foot.position {
                fields.push(fmt_float(v));
            }
            for v in foot.force {
                fields.push(fmt_float(v));
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read one channel back; the sample period is recovered from the time
/// column.
pub fn read_channel_csv(path: &Path) -> Result<(f64, Vec<Sample>), SimError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let head = lines
        .next()
        .ok_or_else(|| SimError::Csv {
            path: path.display().to_string(),
            line: 1,
            message: "missing header".into(),
        })??;
    if head != header() {
        return Err(SimError::Csv {
            path: path.display().to_string(),
            line: 1,
            message: "unexpected header layout".into(),
        });
    }

    let mut samples = Vec::new();
    let mut times = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 38 {
            return Err(SimError::Csv {
                path: path.display().to_string(),
                line: line_no,
                message: format!("expected 38 columns, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, SimError> {
            s.parse::<f64>().map_err(|_| SimError::Csv {
                path: path.display().to_string(),
                line: line_no,
                message: format!("bad float {s:?}"),
            })
        };
        times.push(parse(fields[0])?);
        let mut flat = [0.0; 9];
        for (i, item) in flat.iter_mut().enumerate() {
            *item = parse(fields[1 + i])?;
        }
        let mut feet = [FootContact::inactive([0.0; 3]); 4];
        for (f, foot) in feet.iter_mut().enumerate() {
            let base = 10 + 7 * f;
            let active = match fields[base] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(SimError::Csv {
                        path: path.display().to_string(),
                        line: line_no,
                        message: format!("contact flag must be 0 or 1, got {other:?}"),
                    })
                }
            };
            let mut position = [0.0; 3];
            let mut force = [0.0; 3];
            for i in 0..3 {
                position[i] = parse(fields[base + 1 + i])?;
                force[i] = parse(fields[base + 4 + i])?;
            }
            *foot = FootContact {
                active,
                position,
                force,
            };
        }
        samples.push(Sample {
            state: CentroidalState::from_flat(&flat),
            contacts: ContactSet { feet },
        });
    }
    if samples.len() < 2 {
        return Err(SimError::Csv {
            path: path.display().to_string(),
            line: samples.len() + 1,
            message: "need at least two data rows".into(),
        });
    }
    let dt = times[1] - times[0];
    Ok((dt, samples))
}
