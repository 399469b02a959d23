//! Cubic Bezier paths and the driver that tows a body's center particle
//! along one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::{Drag, SoftBody};

/// Clamps a curve parameter into [0, 1], logging when it had to.
fn clamp_unit(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        u
    } else {
        log::debug!("curve parameter {u} clamped to [0, 1]");
        if u.is_nan() {
            0.0
        } else {
            u.clamp(0.0, 1.0)
        }
    }
}

/// Bernstein-form cubic Bezier. Out-of-range `u` is clamped.
pub fn eval_cubic(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3, u: f64) -> Vec3 {
    let u = clamp_unit(u);
    let w = 1.0 - u;
    p0 * (w * w * w) + p1 * (3.0 * w * w * u) + p2 * (3.0 * w * u * u) + p3 * (u * u * u)
}

/// Control points consumed in overlapping runs: `[P0..P3]`, `[P3..P6]`, ...
/// Trailing points that do not complete a segment are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezierPath {
    pub control_points: Vec<Vec3>,
}

impl BezierPath {
    pub fn new(control_points: Vec<Vec3>) -> Self {
        BezierPath { control_points }
    }

    pub fn segment_count(&self) -> usize {
        let n = self.control_points.len();
        if n < 4 {
            0
        } else {
            (n - 1) / 3
        }
    }

    pub fn segment(&self, k: usize) -> [Vec3; 4] {
        let c = &self.control_points[3 * k..3 * k + 4];
        [c[0], c[1], c[2], c[3]]
    }

    /// Last control point that belongs to a complete segment.
    pub fn end_point(&self) -> Option<Vec3> {
        match self.segment_count() {
            0 => None,
            k => Some(self.control_points[3 * k]),
        }
    }

    /// Point at global parameter `s` in [0, 1], split uniformly across segments.
    pub fn point(&self, s: f64) -> Result<Vec3> {
        let k = self.segment_count();
        if k == 0 {
            return Err(Error::PathTooShort(self.control_points.len()));
        }
        let scaled = clamp_unit(s) * k as f64;
        let index = (scaled.floor() as usize).min(k - 1);
        let local = scaled - index as f64;
        let [p0, p1, p2, p3] = self.segment(index);
        Ok(eval_cubic(p0, p1, p2, p3, local))
    }
}

pub fn path_point(path: &BezierPath, s: f64) -> Result<Vec3> {
    path.point(s)
}

/// Tows a body's center particle along a path over `duration` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDrive {
    pub path: BezierPath,
    pub duration: f64,
    /// Session index of the towed body.
    pub body: usize,
    pub ks: f64,
    pub kd: f64,
}

impl CurveDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidSpec(format!("curve duration must be positive, got {}", self.duration)));
        }
        if self.path.segment_count() == 0 {
            return Err(Error::PathTooShort(self.path.control_points.len()));
        }
        Ok(())
    }
}

/// Points `drag` at the path position for time `t`, targeting the center particle.
pub fn drive(body: &SoftBody, curve: &CurveDrive, t: f64, drag: &mut Drag) -> Result<()> {
    let center = body.layers.center.ok_or(Error::NoCenterParticle)?;
    let s = (t / curve.duration).clamp(0.0, 1.0);
    drag.anchor = curve.path.point(s)?;
    drag.target = center;
    drag.ks = curve.ks;
    drag.kd = curve.kd;
    drag.active = true;
    Ok(())
}
