//! Built-in scenarios and JSON scenario files.
//!
//! A scenario names a builder, optional parameter overrides and, for towing,
//! Bezier control points and a duration:
//!
//! ```json
//! { "builder": "bezier-tow",
//!   "params": { "gravity.y": 0, "integrator": "rk4" },
//!   "control_points": [[-2, 2, 0], [-1, 5, 0], [0, 5, 0], [1, 2, 0]],
//!   "duration": 4.0 }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::collision::BoxWorld;
use crate::curve::{BezierPath, CurveDrive};
use crate::error::{Error, Result};
use crate::geometry::{build_chain_1d, build_ring_2d, build_sphere_3d, RingSpec, SphereSpec};
use crate::jellyfish::{build_jellyfish_2d, build_jellyfish_3d, Jellyfish, TentacleMotion};
use crate::math::Vec3;
use crate::model::{Drag, SoftBody};
use crate::params::SimParams;
use crate::session::{Controller, Session};

pub const BUILTINS: [&str; 8] =
    ["chain1d", "ring2d", "ring2d-center", "sphere3d", "jellyfish2d", "jellyfish3d", "bezier-tow", "bubbles-box"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub builder: String,
    /// Dotted parameter overrides; `integrator` and `collision.detector` take names.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_points: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl ScenarioSpec {
    /// The recipe behind a built-in name.
    pub fn builtin(name: &str) -> Result<ScenarioSpec> {
        if !BUILTINS.contains(&name) {
            return Err(Error::UnknownScenario(name.to_string()));
        }
        let mut spec =
            ScenarioSpec { builder: name.to_string(), params: BTreeMap::new(), control_points: None, duration: None };
        if name == "bezier-tow" {
            spec.params = [("gravity.y", 0.0), ("ks.drag", 200.0), ("kd.drag", 10.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), Value::from(v)))
                .collect();
            spec.control_points = Some(vec![
                Vec3::new(-2.5, 2.0, 0.0),
                Vec3::new(-1.5, 5.0, 0.0),
                Vec3::new(-0.5, 5.0, 0.0),
                Vec3::new(0.0, 3.5, 0.0),
                Vec3::new(0.5, 2.0, 0.0),
                Vec3::new(1.5, 2.0, 0.0),
                Vec3::new(2.5, 4.0, 0.0),
            ]);
            spec.duration = Some(6.0);
        }
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<ScenarioSpec> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ScenarioSpec = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::InvalidSpec(format!("scenario file at {}: {}", e.path(), e.inner())))?;
        if !BUILTINS.contains(&spec.builder.as_str()) {
            return Err(Error::UnknownScenario(spec.builder));
        }
        Ok(spec)
    }

    /// Applies this scenario's overrides on top of `base`.
    pub fn apply_overrides(&self, base: &SimParams) -> Result<SimParams> {
        let mut params = base.clone();
        for (name, value) in &self.params {
            match (name.as_str(), value) {
                ("integrator", Value::String(id)) => params.integrator = id.parse()?,
                ("collision.detector", Value::String(id)) => params.collision.detector = id.parse()?,
                (_, Value::Number(n)) => {
                    params.set(name, n.as_f64().expect("JSON numbers convert to f64"))?;
                }
                (_, Value::Bool(b)) => {
                    params.set(name, *b as u8 as f64)?;
                }
                _ => return Err(Error::InvalidParams(format!("bad value for {name}: {value}"))),
            }
        }
        Ok(params)
    }

    /// Applies overrides to `base`, then builds.
    pub fn instantiate(&self, base: &SimParams) -> Result<Session> {
        self.build(&self.apply_overrides(base)?)
    }

    /// Builds the scenario with exactly `params` (overrides are not reapplied).
    pub fn build(&self, params: &SimParams) -> Result<Session> {
        let mut s = Session::new(params.clone(), BoxWorld::default())?;
        let gas = params.gas_constant;
        let ring = |outer_radius: f64, center: Vec3, with_center_particle: bool| -> Result<SoftBody> {
            let spec = RingSpec {
                particles_per_layer: params.geometry.particles_per_layer_2d,
                outer_radius,
                inner_radius: 0.7 * outer_radius,
                center,
                with_center_particle,
            };
            let mut body = build_ring_2d(&spec, params)?;
            body.gas_constant = gas;
            Ok(body)
        };
        let sphere = |outer_radius: f64, center: Vec3| -> Result<SoftBody> {
            let spec = SphereSpec {
                iterations: params.geometry.subdivision_iterations_3d,
                outer_radius,
                inner_radius: 0.7 * outer_radius,
                center,
                two_layer: true,
            };
            let mut body = build_sphere_3d(&spec, params)?;
            body.gas_constant = gas;
            Ok(body)
        };
        match self.builder.as_str() {
            "chain1d" => {
                let mut body = build_chain_1d(10, 0.3, params)?;
                body.translate(Vec3::new(-1.35, 6.0, 0.0));
                body.particles[0].pinned = true;
                s.add_body(body)?;
            }
            "ring2d" => {
                s.add_body(ring(1.0, Vec3::new(0.0, 4.0, 0.0), false)?)?;
            }
            "ring2d-center" => {
                s.add_body(ring(1.0, Vec3::new(0.0, 4.0, 0.0), true)?)?;
            }
            "sphere3d" => {
                s.add_body(sphere(1.0, Vec3::new(0.0, 4.0, 0.0))?)?;
            }
            "jellyfish2d" => {
                let fish = build_jellyfish_2d(params, Vec3::new(0.0, 4.0, 0.0))?;
                add_jellyfish(&mut s, fish)?;
            }
            "jellyfish3d" => {
                let fish = build_jellyfish_3d(params, Vec3::new(0.0, 5.0, 0.0), false)?;
                add_jellyfish(&mut s, fish)?;
            }
            "bezier-tow" => {
                let points = self
                    .control_points
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("bezier-tow needs control_points".into()))?;
                let path = BezierPath::new(points);
                let start = path.point(0.0)?;
                let body = ring(1.0, start, true)?;
                let center = body.layers.center.expect("ring built with a center particle");
                let b = s.add_body(body)?;
                let drag = s.add_drag(Drag::inactive(b, center))?;
                let c = params.springs.drag;
                let drive = CurveDrive { path, duration: self.duration.unwrap_or(6.0), body: b, ks: c.ks, kd: c.kd };
                s.add_controller(Controller::Curve { drag, drive })?;
            }
            "bubbles-box" => {
                s.add_body(ring(0.6, Vec3::new(-2.2, 2.0, 0.0), false)?)?;
                s.add_body(ring(0.8, Vec3::new(0.5, 5.0, 0.0), false)?)?;
                s.add_body(ring(0.5, Vec3::new(2.6, 3.0, 0.0), false)?)?;
                s.add_body(sphere(0.8, Vec3::new(0.0, 2.0, 1.5))?)?;
            }
            other => return Err(Error::UnknownScenario(other.to_string())),
        }
        s.scenario = Some(self.clone());
        Ok(s)
    }
}

fn add_jellyfish(s: &mut Session, fish: Jellyfish) -> Result<()> {
    let Jellyfish { body, swim, tentacles } = fish;
    let b = s.add_body(body)?;
    // the stroke drag stays inactive until the first step's controller pass
    let drag = s.add_drag(Drag::inactive(b, swim.apex))?;
    s.add_controller(Controller::Swim { body: b, drag, swim })?;
    if !tentacles.is_empty() {
        s.add_controller(Controller::Tentacles { body: b, chains: tentacles, motion: TentacleMotion::default() })?;
    }
    Ok(())
}

/// Builds a built-in scenario on top of `params`.
pub fn build_scenario(name: &str, params: &SimParams) -> Result<Session> {
    ScenarioSpec::builtin(name)?.instantiate(params)
}

/// Resolves a built-in name or a path to a JSON scenario file.
pub fn resolve_scenario(name_or_path: &str) -> Result<ScenarioSpec> {
    if BUILTINS.contains(&name_or_path) {
        return ScenarioSpec::builtin(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.extension().is_some_and(|e| e == "json") && path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidSpec(format!("{name_or_path}: {e}")))?;
        return ScenarioSpec::from_json(&text);
    }
    Err(Error::UnknownScenario(name_or_path.to_string()))
}
