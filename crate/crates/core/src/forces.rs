//! Force accumulation: gravity, damped springs, gas pressure and drag anchors.
//!
//! `accumulate_all` always runs the sources in the same order
//! (gravity, springs, pressure, drags) and walks particles, springs and faces
//! by index, so identical inputs give bit-identical accumulators.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::{enclosed_measure, reset_forces, Dimensionality, Drag, ForceSource, SoftBody};
use crate::params::{SimParams, SpringTable};

/// Totals of each force source over a whole body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceReport {
    pub gravity: Vec3,
    pub spring: Vec3,
    pub pressure: Vec3,
    pub drag: Vec3,
    pub collision: Vec3,
    pub net: Vec3,
}

impl ForceReport {
    pub fn of(body: &SoftBody) -> Self {
        let mut r = ForceReport::default();
        for p in &body.particles {
            r.gravity += p.forces.gravity;
            r.spring += p.forces.spring;
            r.pressure += p.forces.pressure;
            r.drag += p.forces.drag;
            r.collision += p.forces.collision;
        }
        r.net = r.gravity + r.spring + r.pressure + r.drag + r.collision;
        r
    }

    pub fn get(&self, source: ForceSource) -> Vec3 {
        match source {
            ForceSource::Gravity => self.gravity,
            ForceSource::Spring => self.spring,
            ForceSource::Pressure => self.pressure,
            ForceSource::Drag => self.drag,
            ForceSource::Collision => self.collision,
        }
    }
}

/// Diagnostics from one accumulation pass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccumulateStats {
    /// Springs skipped because their endpoints coincided.
    pub degenerate_springs: usize,
    /// Largest magnitude of a single spring's force on one endpoint.
    pub max_spring_force: f64,
    /// Largest magnitude of a single face's total pressure force.
    pub max_pressure_force: f64,
}

pub fn accumulate_gravity(body: &mut SoftBody, gravity: Vec3) {
    for p in body.particles.iter_mut().filter(|p| !p.pinned) {
        p.forces.gravity += gravity * p.mass;
    }
}

/// Damped Hooke force between two endpoints.
///
/// With `d = x1 - x2`, `u = d / |d|`, the force on the first endpoint is
/// `-(ks (|d| - rest) + kd (v1 - v2)·u) u` and the second gets the negation.
pub fn spring_force(x1: Vec3, x2: Vec3, v1: Vec3, v2: Vec3, rest: f64, ks: f64, kd: f64) -> Result<(Vec3, Vec3)> {
    let d = x1 - x2;
    let len = d.length();
    if len == 0.0 {
        return Err(Error::CoincidentEndpoints);
    }
    let u = d / len;
    let magnitude = ks * (len - rest) + kd * (v1 - v2).dot(u);
    let f1 = u * -magnitude;
    Ok((f1, -f1))
}

/// Adds every spring's force to its endpoints' spring accumulators.
///
/// Coefficients come from `table` by spring kind and are written back onto the
/// springs. Springs with coincident endpoints contribute nothing and are counted.
pub fn accumulate_springs(body: &mut SoftBody, table: &SpringTable, stats: &mut AccumulateStats) {
    let SoftBody { particles, springs, .. } = body;
    for s in springs.iter_mut() {
        let c = table.get(s.kind);
        s.ks = c.ks;
        s.kd = c.kd;
        let (a, b) = (&particles[s.p1], &particles[s.p2]);
        match spring_force(a.position, b.position, a.velocity, b.velocity, s.rest_length, s.ks, s.kd) {
            Ok((f1, f2)) => {
                stats.max_spring_force = stats.max_spring_force.max(f1.length());
                particles[s.p1].forces.spring += f1;
                particles[s.p2].forces.spring += f2;
            }
            Err(_) => stats.degenerate_springs += 1,
        }
    }
}

/// Outward gas pressure `gas_constant / enclosed_measure` on every face,
/// split evenly among the face's particles.
///
/// Returns the largest single-face force magnitude.
pub fn accumulate_pressure(body: &mut SoftBody, gas_constant: f64) -> Result<f64> {
    if body.dimensionality == Dimensionality::D1 {
        return Err(Error::PressureUndefined1d);
    }
    if gas_constant == 0.0 {
        return Ok(0.0);
    }
    let measure = enclosed_measure(body)?;
    if measure <= 0.0 || !measure.is_finite() {
        return Err(Error::InvertedBody(measure));
    }
    let pressure = gas_constant / measure;
    let mut max_face = 0.0f64;
    let SoftBody { particles, faces, dimensionality, .. } = body;
    for f in faces.iter() {
        let idx = &f.indices;
        let force = match dimensionality {
            Dimensionality::D2 => {
                let e = particles[idx[1]].position - particles[idx[0]].position;
                // outward normal of a CCW edge, scaled by its length
                Vec3::new(e.y, -e.x, 0.0) * pressure
            }
            _ => {
                let a = particles[idx[0]].position;
                let area_normal = (particles[idx[1]].position - a).cross(particles[idx[2]].position - a) * 0.5;
                area_normal * pressure
            }
        };
        max_face = max_face.max(force.length());
        let share = force / idx.len() as f64;
        for &k in idx {
            particles[k].forces.pressure += share;
        }
    }
    Ok(max_face)
}

/// Pulls the drag's target toward its anchor with a zero-rest-length spring.
pub fn accumulate_drag(body: &mut SoftBody, drag: &Drag) -> Result<()> {
    let len = body.particles.len();
    if drag.target >= len {
        return Err(Error::BadTarget { target: drag.target, len });
    }
    if !drag.active {
        return Ok(());
    }
    let p = &mut body.particles[drag.target];
    // a target sitting exactly on its anchor feels nothing
    if let Ok((f1, _)) = spring_force(p.position, drag.anchor, p.velocity, Vec3::ZERO, 0.0, drag.ks, drag.kd) {
        p.forces.drag += f1;
    }
    Ok(())
}

/// Full accumulation pass: reset, gravity, springs, pressure (2D/3D), drags.
pub fn accumulate_all(body: &mut SoftBody, params: &SimParams, drags: &[Drag]) -> Result<AccumulateStats> {
    let mut stats = AccumulateStats::default();
    reset_forces(body);
    accumulate_gravity(body, params.gravity);
    accumulate_springs(body, &params.springs, &mut stats);
    if body.dimensionality != Dimensionality::D1 {
        stats.max_pressure_force = accumulate_pressure(body, body.gas_constant)?;
    }
    for drag in drags {
        accumulate_drag(body, drag)?;
    }
    Ok(stats)
}
