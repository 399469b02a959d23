//! Worlds and collision detectors.
//!
//! The only world is an axis-aligned box; the only detector is the penalty
//! resolver. Both sit behind small registries so more can be added.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::model::SoftBody;
use crate::params::CollisionParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxWorld {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoxWorld {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let world = BoxWorld { min, max };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0..3).all(|a| self.min[a].is_finite() && self.max[a].is_finite() && self.min[a] < self.max[a]);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "box world needs min < max on every axis, got {:?} .. {:?}",
                self.min.to_array(),
                self.max.to_array()
            )))
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

impl Default for BoxWorld {
    /// An 8 m wide, 8 m tall box with its floor at y = 0.
    fn default() -> Self {
        BoxWorld { min: Vec3::new(-4.0, 0.0, -4.0), max: Vec3::new(4.0, 8.0, 4.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorId {
    #[default]
    Penalty,
}

impl DetectorId {
    pub const ALL: [DetectorId; 1] = [DetectorId::Penalty];

    pub fn name(self) -> &'static str {
        match self {
            DetectorId::Penalty => "penalty",
        }
    }

    pub fn resolver(self) -> DetectorFn {
        match self {
            DetectorId::Penalty => penalty_detector,
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorId::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| Error::UnknownDetector(s.to_string()))
    }
}

/// One wall contact resolved on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub particle: usize,
    pub axis: usize,
    pub depth: f64,
    pub velocity_before: f64,
    pub velocity_after: f64,
}

/// Corrects a body against a world, returning the contacts it resolved.
pub type DetectorFn = fn(&mut SoftBody, &BoxWorld, &CollisionParams) -> Vec<Contact>;

/// Looks up a detector; `None` selects the default.
pub fn select_detector(id: Option<&str>) -> Result<DetectorFn> {
    let id = match id {
        Some(name) => name.parse::<DetectorId>()?,
        None => DetectorId::default(),
    };
    Ok(id.resolver())
}

fn penalty_detector(body: &mut SoftBody, world: &BoxWorld, params: &CollisionParams) -> Vec<Contact> {
    resolve_box_penalty(body, world, params.penalty_k, params.restitution)
}

/// Penalty resolution against the box walls, axis by axis.
///
/// A particle outside the box on axis `d` gets a penalty force
/// `penalty_k * depth` along the inward wall normal in its collision
/// accumulator, is clamped onto the wall, and has its `d` velocity reflected
/// and scaled by `restitution`. The leapfrog half-step velocity, when present,
/// is reflected the same way.
pub fn resolve_box_penalty(body: &mut SoftBody, world: &BoxWorld, penalty_k: f64, restitution: f64) -> Vec<Contact> {
    let mut contacts = Vec::new();
    let SoftBody { particles, staggered, .. } = body;
    for (i, p) in particles.iter_mut().enumerate() {
        for axis in 0..3 {
            let (depth, normal, wall) = if p.position[axis] < world.min[axis] {
                (world.min[axis] - p.position[axis], 1.0, world.min[axis])
            } else if p.position[axis] > world.max[axis] {
                (p.position[axis] - world.max[axis], -1.0, world.max[axis])
            } else {
                continue;
            };
            p.forces.collision[axis] += normal * penalty_k * depth;
            p.position[axis] = wall;
            let before = p.velocity[axis];
            p.velocity[axis] = -restitution * before;
            if let Some(half) = staggered.as_mut() {
                half[i][axis] *= -restitution;
            }
            contacts.push(Contact {
                particle: i,
                axis,
                depth,
                velocity_before: before,
                velocity_after: p.velocity[axis],
            });
        }
    }
    contacts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dimensionality, Layers, Particle};

    fn body_at(points: &[(Vec3, Vec3)]) -> SoftBody {
        let particles = points
            .iter()
            .enumerate()
            .map(|(i, &(x, v))| {
                let mut p = Particle::new(i, x, 1.0);
                p.velocity = v;
                p
            })
            .collect();
        SoftBody::new(Dimensionality::D1, particles, vec![], vec![], Layers::default()).unwrap()
    }

    #[test]
    fn floor_contact_example() {
        let world = BoxWorld::new(Vec3::new(-1.0, 0.0, -1.0), Vec3::new(1.0, 2.0, 1.0)).unwrap();
        let mut body = body_at(&[(Vec3::new(0.0, -0.1, 0.0), Vec3::new(0.0, -2.0, 0.0))]);
        let contacts = resolve_box_penalty(&mut body, &world, 1000.0, 0.5);
        let p = &body.particles[0];
        assert_eq!(p.position, Vec3::ZERO);
        assert_eq!(p.velocity, Vec3::new(0.0, 1.0, 0.0));
        assert!((p.forces.collision - Vec3::new(0.0, 100.0, 0.0)).max_abs() < 1e-9);
        assert_eq!(contacts.len(), 1);
        assert_eq!(contacts[0].axis, 1);
    }

    #[test]
    fn interior_particles_are_untouched() {
        let world = BoxWorld::default();
        let mut body = body_at(&[(Vec3::new(0.5, 1.0, 0.0), Vec3::new(3.0, -2.0, 1.0))]);
        let before = body.clone();
        assert!(resolve_box_penalty(&mut body, &world, 1000.0, 0.3).is_empty());
        assert_eq!(body, before);
    }

    #[test]
    fn corner_penetration_corrects_each_axis() {
        let world = BoxWorld::new(Vec3::new(0.0, 0.0, -1.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let mut body = body_at(&[(Vec3::new(1.2, -0.3, 0.0), Vec3::new(4.0, -1.0, 0.5))]);
        let contacts = resolve_box_penalty(&mut body, &world, 10.0, 0.5);
        let p = &body.particles[0];
        assert_eq!(p.position, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(p.velocity, Vec3::new(-2.0, 0.5, 0.5));
        assert!((p.forces.collision - Vec3::new(-2.0, 3.0, 0.0)).max_abs() < 1e-12);
        assert_eq!(contacts.len(), 2);
    }

    #[test]
    fn staggered_velocities_reflect_too() {
        let world = BoxWorld::default();
        let mut body = body_at(&[(Vec3::new(0.0, -0.1, 0.0), Vec3::new(0.0, -2.0, 0.0))]);
        body.staggered = Some(vec![Vec3::new(0.0, -2.2, 0.0)]);
        resolve_box_penalty(&mut body, &world, 0.0, 0.5);
        assert_eq!(body.staggered.unwrap()[0], Vec3::new(0.0, 1.1, 0.0));
    }

    #[test]
    fn registry() {
        let default = select_detector(None).unwrap();
        assert_eq!(default as usize, penalty_detector as DetectorFn as usize);
        assert!(select_detector(Some("penalty")).is_ok());
        assert_eq!(select_detector(Some("bvh")).unwrap_err().code(), "unknown-detector");
    }

    #[test]
    fn world_rejects_flat_box() {
        assert!(BoxWorld::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 1.0)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn resolution_contains_and_dissipates(
            pts in proptest::collection::vec(
                (proptest::array::uniform3(-10.0f64..10.0), proptest::array::uniform3(-20.0f64..20.0)), 1..20),
            k in 0.0f64..5000.0, r in 0.0f64..=1.0,
        ) {
            let world = BoxWorld::default();
            let mut body = body_at(&pts.iter().map(|&(x, v)| (Vec3::from(x), Vec3::from(v))).collect::<Vec<_>>());
            let contacts = resolve_box_penalty(&mut body, &world, k, r);
            for p in &body.particles {
                proptest::prop_assert!(world.contains(p.position));
            }
            for c in contacts {
                proptest::prop_assert!(c.velocity_after.abs() <= c.velocity_before.abs());
            }
        }
    }
}
