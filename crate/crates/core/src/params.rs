//! Runtime level-of-detail state and its dotted-name control surface.
//!
//! Every knob is addressable by a stable dotted name (`ks.structural`,
//! `collision.restitution`, ...). Changes made between steps take effect on
//! the next step.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::collision::DetectorId;
use crate::error::{Error, Result};
use crate::integrators::IntegratorId;
use crate::math::Vec3;
use crate::model::SpringKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringCoefficients {
    pub ks: f64,
    pub kd: f64,
}

impl SpringCoefficients {
    pub const fn new(ks: f64, kd: f64) -> Self {
        Self { ks, kd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringTable {
    pub structural: SpringCoefficients,
    pub radial: SpringCoefficients,
    pub shear: SpringCoefficients,
    pub drag: SpringCoefficients,
    pub center: SpringCoefficients,
}

impl SpringTable {
    pub fn get(&self, kind: SpringKind) -> SpringCoefficients {
        match kind {
            SpringKind::Structural => self.structural,
            SpringKind::Radial => self.radial,
            SpringKind::Shear => self.shear,
            SpringKind::Drag => self.drag,
            SpringKind::Center => self.center,
        }
    }

    pub fn get_mut(&mut self, kind: SpringKind) -> &mut SpringCoefficients {
        match kind {
            SpringKind::Structural => &mut self.structural,
            SpringKind::Radial => &mut self.radial,
            SpringKind::Shear => &mut self.shear,
            SpringKind::Drag => &mut self.drag,
            SpringKind::Center => &mut self.center,
        }
    }
}

impl Default for SpringTable {
    fn default() -> Self {
        SpringTable {
            structural: SpringCoefficients::new(60.0, 0.5),
            radial: SpringCoefficients::new(40.0, 0.5),
            shear: SpringCoefficients::new(30.0, 0.4),
            drag: SpringCoefficients::new(40.0, 0.5),
            center: SpringCoefficients::new(30.0, 0.4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    pub particles_per_layer_2d: u32,
    pub subdivision_iterations_3d: u32,
    /// Upper bound on `subdivision_iterations_3d`; each iteration quadruples the face count.
    pub subdivision_cap: u32,
    pub bell_profile_points: u32,
    pub bell_slices: u32,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            particles_per_layer_2d: 12,
            subdivision_iterations_3d: 2,
            subdivision_cap: 4,
            bell_profile_points: 12,
            bell_slices: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionParams {
    pub detector: DetectorId,
    pub penalty_k: f64,
    pub restitution: f64,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams { detector: DetectorId::Penalty, penalty_k: 1000.0, restitution: 0.3 }
    }
}

/// Per-dimensionality enable switches. Disabled bodies are frozen and hidden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Toggles {
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles { d1: true, d2: true, d3: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub integrator: IntegratorId,
    pub dt: f64,
    pub springs: SpringTable,
    pub gravity: Vec3,
    pub default_mass: f64,
    pub gas_constant: f64,
    pub geometry: GeometryParams,
    pub collision: CollisionParams,
    pub toggles: Toggles,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            integrator: IntegratorId::Rk4,
            dt: 0.005,
            springs: SpringTable::default(),
            gravity: Vec3::new(0.0, -9.81, 0.0),
            default_mass: 0.05,
            gas_constant: 2.0,
            geometry: GeometryParams::default(),
            collision: CollisionParams::default(),
            toggles: Toggles::default(),
        }
    }
}

/// What a parameter change affects, so the session knows what to refresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamEffect {
    /// Read fresh every step; nothing to do.
    Live,
    /// Particle masses must be rewritten.
    Mass,
    /// Body gas constants must be rewritten.
    Gas,
    /// Bodies must be rebuilt.
    Geometry,
}

const KIND_NAMES: [&str; 5] = ["structural", "radial", "shear", "drag", "center"];

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        for kind in SpringKind::ALL {
            let c = self.springs.get(kind);
            if !(c.ks >= 0.0 && c.kd >= 0.0 && c.ks.is_finite() && c.kd.is_finite()) {
                return bad(format!("{} coefficients must be non-negative", kind.name()));
            }
        }
        if !self.gravity.is_finite() {
            return bad("gravity must be finite".into());
        }
        if !(self.default_mass > 0.0 && self.default_mass.is_finite()) {
            return bad(format!("default_mass must be positive, got {}", self.default_mass));
        }
        if !(self.gas_constant >= 0.0 && self.gas_constant.is_finite()) {
            return bad(format!("gas_constant must be non-negative, got {}", self.gas_constant));
        }
        if self.geometry.particles_per_layer_2d < 3 {
            return bad("geometry.particles_per_layer_2d must be at least 3".into());
        }
        if self.geometry.bell_profile_points < 3 || self.geometry.bell_slices < 3 {
            return bad("bell profile points and slices must be at least 3".into());
        }
        if !(self.collision.penalty_k >= 0.0 && self.collision.penalty_k.is_finite()) {
            return bad("collision.penalty_k must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.collision.restitution) {
            return bad("collision.restitution must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Every settable dotted name, in display order.
    pub fn names() -> Vec<String> {
        let mut names: Vec<String> = vec![
            "dt".into(),
            "gravity.x".into(),
            "gravity.y".into(),
            "gravity.z".into(),
            "default_mass".into(),
            "gas_constant".into(),
        ];
        for k in KIND_NAMES {
            names.push(format!("ks.{k}"));
            names.push(format!("kd.{k}"));
        }
        names.extend(
            [
                "geometry.particles_per_layer_2d",
                "geometry.subdivision_iterations_3d",
                "geometry.subdivision_cap",
                "geometry.bell_profile_points",
                "geometry.bell_slices",
                "collision.penalty_k",
                "collision.restitution",
                "toggles.d1",
                "toggles.d2",
                "toggles.d3",
            ]
            .map(String::from),
        );
        names
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        let g = &self.geometry;
        let v = match name {
            "dt" => self.dt,
            "gravity.x" => self.gravity.x,
            "gravity.y" => self.gravity.y,
            "gravity.z" => self.gravity.z,
            "default_mass" => self.default_mass,
            "gas_constant" => self.gas_constant,
            "geometry.particles_per_layer_2d" => g.particles_per_layer_2d as f64,
            "geometry.subdivision_iterations_3d" => g.subdivision_iterations_3d as f64,
            "geometry.subdivision_cap" => g.subdivision_cap as f64,
            "geometry.bell_profile_points" => g.bell_profile_points as f64,
            "geometry.bell_slices" => g.bell_slices as f64,
            "collision.penalty_k" => self.collision.penalty_k,
            "collision.restitution" => self.collision.restitution,
            "toggles.d1" => self.toggles.d1 as u8 as f64,
            "toggles.d2" => self.toggles.d2 as u8 as f64,
            "toggles.d3" => self.toggles.d3 as u8 as f64,
            _ => {
                let (coef, kind) = spring_name(name)?;
                let c = self.springs.get(kind);
                if coef == "ks" {
                    c.ks
                } else {
                    c.kd
                }
            }
        };
        Ok(v)
    }

    /// Sets one dotted parameter. On error `self` is left untouched.
    pub fn set(&mut self, name: &str, value: f64) -> Result<ParamEffect> {
        if !value.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
        let mut next = self.clone();
        let count = |v: f64| -> Result<u32> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(Error::InvalidParams(format!("{name} expects a non-negative integer, got {v}")))
            }
        };
        let flag = |v: f64| v != 0.0;
        let effect = match name {
            "dt" => {
                next.dt = value;
                ParamEffect::Live
            }
            "gravity.x" => {
                next.gravity.x = value;
                ParamEffect::Live
            }
            "gravity.y" => {
                next.gravity.y = value;
                ParamEffect::Live
            }
            "gravity.z" => {
                next.gravity.z = value;
                ParamEffect::Live
            }
            "default_mass" => {
                next.default_mass = value;
                ParamEffect::Mass
            }
            "gas_constant" => {
                next.gas_constant = value;
                ParamEffect::Gas
            }
            "geometry.particles_per_layer_2d" => {
                next.geometry.particles_per_layer_2d = count(value)?;
                ParamEffect::Geometry
            }
            "geometry.subdivision_iterations_3d" => {
                next.geometry.subdivision_iterations_3d = count(value)?;
                ParamEffect::Geometry
            }
            "geometry.subdivision_cap" => {
                next.geometry.subdivision_cap = count(value)?;
                ParamEffect::Live
            }
            "geometry.bell_profile_points" => {
                next.geometry.bell_profile_points = count(value)?;
                ParamEffect::Geometry
            }
            "geometry.bell_slices" => {
                next.geometry.bell_slices = count(value)?;
                ParamEffect::Geometry
            }
            "collision.penalty_k" => {
                next.collision.penalty_k = value;
                ParamEffect::Live
            }
            "collision.restitution" => {
                next.collision.restitution = value;
                ParamEffect::Live
            }
            "toggles.d1" => {
                next.toggles.d1 = flag(value);
                ParamEffect::Live
            }
            "toggles.d2" => {
                next.toggles.d2 = flag(value);
                ParamEffect::Live
            }
            "toggles.d3" => {
                next.toggles.d3 = flag(value);
                ParamEffect::Live
            }
            _ => {
                let (coef, kind) = spring_name(name)?;
                let c = next.springs.get_mut(kind);
                if coef == "ks" {
                    c.ks = value;
                } else {
                    c.kd = value;
                }
                ParamEffect::Live
            }
        };
        next.validate()?;
        *self = next;
        Ok(effect)
    }

    /// Name/value listing for clients, including the two non-numeric selections.
    pub fn list(&self) -> Value {
        let mut entries = vec![
            json!({"name": "integrator", "value": self.integrator.name()}),
            json!({"name": "collision.detector", "value": self.collision.detector.name()}),
        ];
        for name in Self::names() {
            let value = self.get(&name).expect("listed names are gettable");
            entries.push(json!({"name": name, "value": value}));
        }
        Value::Array(entries)
    }
}

fn spring_name(name: &str) -> Result<(&str, SpringKind)> {
    let unknown = || Error::UnknownParam(name.to_string());
    let (coef, kind) = name.split_once('.').ok_or_else(unknown)?;
    if coef != "ks" && coef != "kd" {
        return Err(unknown());
    }
    let kind = SpringKind::from_name(kind).ok_or_else(unknown)?;
    Ok((coef, kind))
}
