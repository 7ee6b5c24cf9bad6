use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::ThermalError;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunSample {
    /// Time (s).
    pub t: f64,
    /// Unit direction toward the sun.
    pub dir: Vec3,
    /// Sun distance (AU).
    pub r_au: f64,
}

/// Time-ordered sun positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SunTrajectory {
    samples: Vec<SunSample>,
}

impl SunTrajectory {
    /// Directions within 1e-6 of unit length are renormalized.
    pub fn new(mut samples: Vec<SunSample>) -> Result<Self, ThermalError> {
        for (k, s) in samples.iter_mut().enumerate() {
            let len = s.dir.norm();
            if !((len - 1.0).abs() <= 1e-6) {
                return Err(ThermalError::InvalidTrajectory(format!(
                    "sample {k}: direction has length {len}"
                )));
            }
            s.dir /= len;
            if !(s.r_au > 0.0 && s.r_au.is_finite() && s.t.is_finite()) {
                return Err(ThermalError::InvalidTrajectory(format!(
                    "sample {k}: bad time or distance"
                )));
            }
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(ThermalError::InvalidTrajectory("times must increase strictly".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[SunSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration of one pass when the trajectory is repeated: the sampled
    /// span plus one final interval of the same length as the last one.
    pub fn period(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < 2 {
            return None;
        }
        let s = &self.samples;
        Some(s[n - 1].t - s[0].t + (s[n - 1].t - s[n - 2].t))
    }

    /// Parses `t,dx,dy,dz,r_au` records after a header line.
    pub fn parse(text: &str) -> Result<Self, ThermalError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().replace(' ', "") == "t,dx,dy,dz,r_au" => {}
            _ => {
                return Err(ThermalError::Malformed {
                    line: 1,
                    msg: "expected header t,dx,dy,dz,r_au".into(),
                })
            }
        }
        let mut samples = Vec::new();
        for (k, line) in lines {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| ThermalError::Malformed {
                    line: k + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != 5 {
                return Err(ThermalError::Malformed {
                    line: k + 1,
                    msg: format!("expected 5 fields, found {}", vals.len()),
                });
            }
            samples.push(SunSample {
                t: vals[0],
                dir: Vec3::new(vals[1], vals[2], vals[3]),
                r_au: vals[4],
            });
        }
        Self::new(samples)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, ThermalError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "t,dx,dy,dz,r_au")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{},{}", s.t, s.dir.x, s.dir.y, s.dir.z, s.r_au)?;
        }
        Ok(())
    }
}

/// Sun circling the zenith at fixed elevation `e0_deg`, one revolution of
/// azimuth per `period` seconds, sampled uniformly.
pub fn circular_sun_trajectory(
    e0_deg: f64,
    period: f64,
    steps_per_cycle: usize,
    cycles: usize,
    r_au: f64,
) -> Result<SunTrajectory, ThermalError> {
    if steps_per_cycle < 2 || cycles == 0 || !(period > 0.0) {
        return Err(ThermalError::InvalidTrajectory(
            "need at least 2 steps per cycle, one cycle and a positive period".into(),
        ));
    }
    let e = e0_deg.to_radians();
    let dt = period / steps_per_cycle as f64;
    let samples = (0..steps_per_cycle * cycles)
        .map(|k| {
            let phi = std::f64::consts::TAU * (k % steps_per_cycle) as f64 / steps_per_cycle as f64;
            SunSample {
                t: k as f64 * dt,
                dir: Vec3::new(e.cos() * phi.cos(), e.cos() * phi.sin(), e.sin()),
                r_au,
            }
        })
        .collect();
    SunTrajectory::new(samples)
}
