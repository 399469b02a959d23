//! Interchangeable explicit integrators: Euler, midpoint (RK2), the staggered
//! leapfrog "Feynman" scheme and classical RK4.
//!
//! Every derivative evaluation runs a full force accumulation at the stage
//! state. After a step the force accumulators hold the forces of the step's
//! first evaluation (for the leapfrog scheme, the evaluation at the new
//! position), which is what the dump reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::{accumulate_all, AccumulateStats};
use crate::math::Vec3;
use crate::model::{Drag, ForceAccumulators, SoftBody};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorId {
    Euler,
    Midpoint,
    Feynman,
    Rk4,
}

impl IntegratorId {
    pub const ALL: [IntegratorId; 4] =
        [IntegratorId::Euler, IntegratorId::Midpoint, IntegratorId::Feynman, IntegratorId::Rk4];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorId::Euler => "euler",
            IntegratorId::Midpoint => "midpoint",
            IntegratorId::Feynman => "feynman",
            IntegratorId::Rk4 => "rk4",
        }
    }

    pub fn step_fn(self) -> StepFn {
        match self {
            IntegratorId::Euler => step_euler,
            IntegratorId::Midpoint => step_midpoint,
            IntegratorId::Feynman => step_feynman,
            IntegratorId::Rk4 => step_rk4,
        }
    }
}

impl fmt::Display for IntegratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntegratorId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| Error::UnknownIntegrator(s.to_string()))
    }
}

/// Advances one body by `dt` seconds.
pub type StepFn = fn(&mut SoftBody, &SimParams, &[Drag], f64) -> Result<AccumulateStats>;

/// Looks up a stepping operation by its registered name.
pub fn select_integrator(id: &str) -> Result<StepFn> {
    Ok(id.parse::<IntegratorId>()?.step_fn())
}

/// Positions and velocities of every particle, plus the leapfrog's
/// half-step velocities when it has bootstrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub half_velocities: Option<Vec<Vec3>>,
}

impl StateVector {
    pub fn capture(body: &SoftBody) -> Self {
        StateVector {
            positions: body.particles.iter().map(|p| p.position).collect(),
            velocities: body.particles.iter().map(|p| p.velocity).collect(),
            half_velocities: body.staggered.clone(),
        }
    }

    pub fn apply(&self, body: &mut SoftBody) {
        for (p, (&x, &v)) in body.particles.iter_mut().zip(self.positions.iter().zip(&self.velocities)) {
            p.position = x;
            p.velocity = v;
        }
        body.staggered = self.half_velocities.clone();
    }
}

/// Time derivatives of the state: `dx` is velocity, `dv` is acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub dx: Vec<Vec3>,
    pub dv: Vec<Vec3>,
    pub stats: AccumulateStats,
}

/// Accumulates forces at the body's current state and converts them to
/// derivatives. Pinned particles report zero for both.
pub fn derivatives(body: &mut SoftBody, params: &SimParams, drags: &[Drag]) -> Result<Derivatives> {
    let stats = accumulate_all(body, params, drags)?;
    let n = body.particles.len();
    let mut dx = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    for p in &body.particles {
        if p.pinned {
            dx.push(Vec3::ZERO);
            dv.push(Vec3::ZERO);
        } else {
            dx.push(p.velocity);
            dv.push(p.forces.total() / p.mass);
        }
    }
    Ok(Derivatives { dx, dv, stats })
}

fn save_forces(body: &SoftBody) -> Vec<ForceAccumulators> {
    body.particles.iter().map(|p| p.forces).collect()
}

fn restore_forces(body: &mut SoftBody, forces: Vec<ForceAccumulators>) {
    for (p, f) in body.particles.iter_mut().zip(forces) {
        p.forces = f;
    }
}

/// Sets every free particle to `x0 + dx * h`, `v0 + dv * h`.
fn set_stage(body: &mut SoftBody, x0: &[Vec3], v0: &[Vec3], d: &Derivatives, h: f64) {
    for (i, p) in body.particles.iter_mut().enumerate() {
        if !p.pinned {
            p.position = x0[i] + d.dx[i] * h;
            p.velocity = v0[i] + d.dv[i] * h;
        }
    }
}

fn merge(mut first: AccumulateStats, later: &AccumulateStats) -> AccumulateStats {
    first.degenerate_springs = first.degenerate_springs.max(later.degenerate_springs);
    first
}

/// Explicit Euler: both updates use the derivatives at the pre-step state.
pub fn step_euler(body: &mut SoftBody, params: &SimParams, drags: &[Drag], dt: f64) -> Result<AccumulateStats> {
    let d = derivatives(body, params, drags)?;
    for (i, p) in body.particles.iter_mut().enumerate() {
        if !p.pinned {
            p.position += d.dx[i] * dt;
            p.velocity += d.dv[i] * dt;
        }
    }
    body.staggered = None;
    Ok(d.stats)
}

/// Classical RK2 midpoint.
pub fn step_midpoint(body: &mut SoftBody, params: &SimParams, drags: &[Drag], dt: f64) -> Result<AccumulateStats> {
    let StateVector { positions: x0, velocities: v0, .. } = StateVector::capture(body);
    let k1 = derivatives(body, params, drags)?;
    let forces = save_forces(body);
    set_stage(body, &x0, &v0, &k1, dt * 0.5);
    let k2 = derivatives(body, params, drags)?;
    set_stage(body, &x0, &v0, &k2, dt);
    restore_forces(body, forces);
    body.staggered = None;
    Ok(merge(k1.stats, &k2.stats))
}

/// Staggered leapfrog with half-step velocities.
///
/// The first step after (re)selection bootstraps `v_half = v + a(x) dt/2`.
/// Each step then drifts `x += v_half dt` and kicks `v_half += a(x_new) dt`;
/// the reported velocity is `v_half - a(x_new) dt/2`. Damping forces at
/// `x_new` see the half-step velocity used for the drift.
pub fn step_feynman(body: &mut SoftBody, params: &SimParams, drags: &[Drag], dt: f64) -> Result<AccumulateStats> {
    let n = body.particles.len();
    let mut first_stats = None;
    let mut half = match body.staggered.take() {
        Some(h) if h.len() == n => h,
        _ => {
            let d = derivatives(body, params, drags)?;
            first_stats = Some(d.stats);
            body.particles.iter().enumerate().map(|(i, p)| p.velocity + d.dv[i] * (dt * 0.5)).collect()
        }
    };
    for (i, p) in body.particles.iter_mut().enumerate() {
        if !p.pinned {
            p.position += half[i] * dt;
            p.velocity = half[i];
        }
    }
    let d = derivatives(body, params, drags)?;
    for (i, p) in body.particles.iter_mut().enumerate() {
        if !p.pinned {
            half[i] += d.dv[i] * dt;
            p.velocity = half[i] - d.dv[i] * (dt * 0.5);
        }
    }
    body.staggered = Some(half);
    Ok(match first_stats {
        Some(s) => merge(s, &d.stats),
        None => d.stats,
    })
}

/// Classical four-stage Runge-Kutta over the coupled position/velocity system.
pub fn step_rk4(body: &mut SoftBody, params: &SimParams, drags: &[Drag], dt: f64) -> Result<AccumulateStats> {
    let StateVector { positions: x0, velocities: v0, .. } = StateVector::capture(body);
    let k1 = derivatives(body, params, drags)?;
    let forces = save_forces(body);
    set_stage(body, &x0, &v0, &k1, dt * 0.5);
    let k2 = derivatives(body, params, drags)?;
    set_stage(body, &x0, &v0, &k2, dt * 0.5);
    let k3 = derivatives(body, params, drags)?;
    set_stage(body, &x0, &v0, &k3, dt);
    let k4 = derivatives(body, params, drags)?;
    let sixth = dt / 6.0;
    for (i, p) in body.particles.iter_mut().enumerate() {
        if !p.pinned {
            p.position = x0[i] + (k1.dx[i] + (k2.dx[i] + k3.dx[i]) * 2.0 + k4.dx[i]) * sixth;
            p.velocity = v0[i] + (k1.dv[i] + (k2.dv[i] + k3.dv[i]) * 2.0 + k4.dv[i]) * sixth;
        }
    }
    restore_forces(body, forces);
    body.staggered = None;
    let stats = merge(merge(merge(k1.stats, &k2.stats), &k3.stats), &k4.stats);
    Ok(stats)
}
