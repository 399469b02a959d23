//! Jellyfish assembly: a pressurized bell that swims by periodically pulling
//! its apex forward while its gas constant "breathes", with kinematic
//! tentacles hanging from the bottom rim.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_bell_3d, build_ring_2d, BellSpec, RingSpec};
use crate::math::Vec3;
use crate::model::{Drag, SoftBody};
use crate::params::{SimParams, SpringCoefficients};

/// Drives the swim stroke and the breathing of one bell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwimController {
    pub period: f64,
    pub duty: f64,
    pub anchor_offset: f64,
    pub breath_amplitude: f64,
    pub base_gas: f64,
    /// Particle pulled forward during the stroke.
    pub apex: usize,
    pub enabled: bool,
}

impl SwimController {
    pub fn new(apex: usize, base_gas: f64) -> Self {
        SwimController {
            period: 2.0,
            duty: 0.4,
            anchor_offset: 0.5,
            breath_amplitude: 0.3,
            base_gas,
            apex,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.period > 0.0
            && self.period.is_finite()
            && self.duty > 0.0
            && self.duty < 1.0
            && self.anchor_offset > 0.0
            && self.anchor_offset.is_finite()
            && (0.0..1.0).contains(&self.breath_amplitude)
            && self.base_gas >= 0.0
            && self.base_gas.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("invalid swim controller {self:?}")))
        }
    }

    /// Fraction of the current period elapsed at time `t`, in [0, 1).
    pub fn phase(&self, t: f64) -> f64 {
        t.rem_euclid(self.period) / self.period
    }

    pub fn gas_at(&self, t: f64) -> f64 {
        self.base_gas * (1.0 + self.breath_amplitude * (TAU * t / self.period).sin())
    }
}

/// Updates the stroke drag and the bell's gas constant for time `t`.
///
/// The drag is active for the first `duty` fraction of each period and pulls
/// the apex toward a point `anchor_offset` ahead of it along the body heading.
pub fn swim_update(
    controller: &SwimController,
    t: f64,
    body: &mut SoftBody,
    drag: &mut Drag,
    coefficients: SpringCoefficients,
) -> Result<()> {
    let len = body.particles.len();
    if controller.apex >= len {
        return Err(Error::BadTarget { target: controller.apex, len });
    }
    drag.target = controller.apex;
    drag.ks = coefficients.ks;
    drag.kd = coefficients.kd;
    if !controller.enabled {
        drag.active = false;
        body.gas_constant = controller.base_gas;
        return Ok(());
    }
    drag.active = controller.phase(t) < controller.duty;
    drag.anchor = body.particles[controller.apex].position + body.heading * controller.anchor_offset;
    body.gas_constant = controller.gas_at(t);
    Ok(())
}

/// Joint-angle animation shared by all tentacles of a body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentacleMotion {
    pub amplitude: f64,
    pub phase_lag: f64,
    pub period: f64,
}

impl Default for TentacleMotion {
    fn default() -> Self {
        TentacleMotion { amplitude: 0.3, phase_lag: 0.6, period: 2.0 }
    }
}

/// A kinematic chain of rigid segments hanging from one bell particle.
/// It reads the root's position but never pushes back on the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentacleChain {
    pub root: usize,
    pub joint_count: usize,
    pub segment_length: f64,
    /// Relative joint angles in radians, one per segment.
    pub angles: Vec<f64>,
    pub phase: f64,
    /// Joint positions from the root outward; `joint_count + 1` entries.
    pub joints: Vec<Vec3>,
}

impl TentacleChain {
    pub fn new(root: usize, joint_count: usize, segment_length: f64, phase: f64) -> Self {
        TentacleChain { root, joint_count, segment_length, angles: vec![0.0; joint_count], phase, joints: Vec::new() }
    }
}

/// Sets joint angles for time `t` and places the joints by forward kinematics
/// from each chain's current root position.
///
/// Segment `j` hangs along `-y` rotated (in the xy plane) by the sum of the
/// first `j + 1` joint angles.
pub fn animate_tentacles(chains: &mut [TentacleChain], motion: &TentacleMotion, t: f64, body: &SoftBody) -> Result<()> {
    let len = body.particles.len();
    for chain in chains.iter_mut() {
        if chain.root >= len {
            return Err(Error::BadTarget { target: chain.root, len });
        }
        let base = TAU * t / motion.period + chain.phase;
        chain.angles =
            (0..chain.joint_count).map(|j| motion.amplitude * (base + j as f64 * motion.phase_lag).sin()).collect();
        let mut at = body.particles[chain.root].position;
        let mut heading = 0.0;
        chain.joints.clear();
        chain.joints.push(at);
        for &angle in &chain.angles {
            heading += angle;
            at += Vec3::new(heading.sin(), -heading.cos(), 0.0) * chain.segment_length;
            chain.joints.push(at);
        }
    }
    Ok(())
}

/// A built jellyfish: bell body, its swim controller and its tentacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Jellyfish {
    pub body: SoftBody,
    pub swim: SwimController,
    pub tentacles: Vec<TentacleChain>,
}

pub const DEFAULT_TENTACLES: usize = 3;
pub const DEFAULT_JOINTS: usize = 5;
pub const DEFAULT_SEGMENT: f64 = 0.15;

/// Index of the particle furthest along `heading`, lowest index on ties.
fn apex_along(body: &SoftBody, heading: Vec3) -> usize {
    let mut best = 0;
    for (i, p) in body.particles.iter().enumerate() {
        if p.position.dot(heading) > body.particles[best].position.dot(heading) {
            best = i;
        }
    }
    best
}

/// The `k` outer particles with the lowest `y`, ties broken by index.
fn lowest_outer(body: &SoftBody, k: usize) -> Vec<usize> {
    let mut outer = body.layers.outer.clone();
    outer.sort_by(|&a, &b| body.particles[a].position.y.total_cmp(&body.particles[b].position.y).then(a.cmp(&b)));
    outer.truncate(k);
    outer
}

fn tentacles_for(body: &SoftBody, count: usize) -> Vec<TentacleChain> {
    lowest_outer(body, count)
        .into_iter()
        .enumerate()
        .map(|(k, root)| TentacleChain::new(root, DEFAULT_JOINTS, DEFAULT_SEGMENT, 0.5 * k as f64))
        .collect()
}

fn refresh_rest_lengths(body: &mut SoftBody) {
    for s in &mut body.springs {
        s.rest_length = body.particles[s.p1].position.distance(body.particles[s.p2].position);
    }
}

/// Two-layer 2D bell: the upper half of a ring stays circular, the lower half
/// is squashed into a shallow, slightly widened underside. Heading is +y.
pub fn build_jellyfish_2d(params: &SimParams, center: Vec3) -> Result<Jellyfish> {
    let outer_radius = 1.0;
    let spec = RingSpec {
        particles_per_layer: params.geometry.particles_per_layer_2d,
        outer_radius,
        inner_radius: 0.75,
        center,
        with_center_particle: false,
    };
    let mut body = build_ring_2d(&spec, params)?;
    for p in &mut body.particles {
        let rel = p.position - center;
        if rel.y < 0.0 {
            let depth = -rel.y / outer_radius;
            p.position = center + Vec3::new(rel.x * (1.0 + 0.15 * depth), rel.y * 0.35, 0.0);
        }
    }
    refresh_rest_lengths(&mut body);
    body.heading = Vec3::Y;
    body.gas_constant = params.gas_constant;
    body.validate()?;
    let apex = apex_along(&body, body.heading);
    let tentacles = tentacles_for(&body, DEFAULT_TENTACLES);
    let mut fish = Jellyfish { body, swim: SwimController::new(apex, params.gas_constant), tentacles };
    animate_tentacles(&mut fish.tentacles, &TentacleMotion::default(), 0.0, &fish.body)?;
    Ok(fish)
}

/// Single-layer revolved 3D bell, without tentacles unless asked for.
pub fn build_jellyfish_3d(params: &SimParams, apex: Vec3, with_tentacles: bool) -> Result<Jellyfish> {
    let mut body = build_bell_3d(&BellSpec::from_params(params, apex), params)?;
    body.heading = Vec3::Y;
    body.gas_constant = params.gas_constant;
    let apex = apex_along(&body, body.heading);
    let tentacles = if with_tentacles { tentacles_for(&body, DEFAULT_TENTACLES) } else { Vec::new() };
    let mut fish = Jellyfish { body, swim: SwimController::new(apex, params.gas_constant), tentacles };
    animate_tentacles(&mut fish.tentacles, &TentacleMotion::default(), 0.0, &fish.body)?;
    Ok(fish)
}
