//! The deterministic stepping engine.
//!
//! A [`Session`] owns every piece of simulation state. [`Session::step`] runs
//! controllers, integrates every enabled body, resolves collisions and
//! advances the clock. Steps are transactional: they work on copies and only
//! commit when everything succeeded and the resulting state is finite.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::collision::{BoxWorld, Contact};
use crate::curve::{drive, CurveDrive};
use crate::error::{Error, Result};
use crate::jellyfish::{animate_tentacles, swim_update, SwimController, TentacleChain, TentacleMotion};
use crate::math::Vec3;
use crate::model::{nearest_particle, Dimensionality, Drag, SoftBody};
use crate::params::{ParamEffect, SimParams};
use crate::scenario::ScenarioSpec;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Length of the rolling window behind [`Stats::steps_per_s`].
pub const STATS_WINDOW: usize = 60;

/// Something that updates drags, gas constants or decorations before each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Controller {
    Swim { body: usize, drag: usize, swim: SwimController },
    Curve { drag: usize, drive: CurveDrive },
    Tentacles { body: usize, chains: Vec<TentacleChain>, motion: TentacleMotion },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Clock {
    pub step: u64,
    pub t: f64,
}

/// Wall-clock performance figures. Never read by the simulation itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stats {
    pub last_step_ms: f64,
    /// Mean rate over the last [`STATS_WINDOW`] steps.
    pub steps_per_s: f64,
    pub controllers_ms: f64,
    /// Integration including the force accumulation it performs.
    pub integrate_ms: f64,
    pub collide_ms: f64,
    /// Degenerate springs seen during the last step.
    pub degenerate_springs: usize,
    pub degenerate_total: u64,
    pub contacts: usize,
    window: VecDeque<f64>,
}

impl Stats {
    fn record(&mut self, step_ms: f64) {
        self.last_step_ms = step_ms;
        if self.window.len() == STATS_WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(step_ms);
        let total: f64 = self.window.iter().sum();
        self.steps_per_s = if total > 0.0 { 1000.0 * self.window.len() as f64 / total } else { 0.0 };
    }
}

/// A failed [`Session::run`]: the steps before the failure are kept.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("step {} failed after {completed} completed steps: {error}", completed + 1)]
pub struct RunError {
    pub completed: u64,
    pub error: Error,
}

/// Serializable session state; the snapshot format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionState {
    pub version: u32,
    pub params: SimParams,
    pub world: BoxWorld,
    pub bodies: Vec<SoftBody>,
    pub drags: Vec<Drag>,
    pub controllers: Vec<Controller>,
    pub clock: Clock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_drag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

impl SessionState {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session state always serializes")
    }

    /// Parses a snapshot, reporting the path of the first offending field.
    pub fn from_json(text: &str) -> Result<SessionState> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::CorruptSnapshot { path: e.path().to_string(), message: e.inner().to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub params: SimParams,
    pub world: BoxWorld,
    pub bodies: Vec<SoftBody>,
    /// Drag slots; controllers and the interactive drag refer to them by index.
    pub drags: Vec<Drag>,
    pub controllers: Vec<Controller>,
    pub clock: Clock,
    pub stats: Stats,
    /// Drag slot driven by an interactive client, if one was ever started.
    pub user_drag: Option<usize>,
    /// Recipe the bodies were built from; needed to rebuild on geometry changes.
    pub scenario: Option<ScenarioSpec>,
    contacts: Vec<(usize, Contact)>,
}

impl Session {
    pub fn new(params: SimParams, world: BoxWorld) -> Result<Session> {
        params.validate()?;
        world.validate()?;
        Ok(Session {
            params,
            world,
            bodies: Vec::new(),
            drags: Vec::new(),
            controllers: Vec::new(),
            clock: Clock::default(),
            stats: Stats::default(),
            user_drag: None,
            scenario: None,
            contacts: Vec::new(),
        })
    }

    pub fn add_body(&mut self, body: SoftBody) -> Result<usize> {
        body.validate()?;
        self.bodies.push(body);
        Ok(self.bodies.len() - 1)
    }

    pub fn add_drag(&mut self, drag: Drag) -> Result<usize> {
        check_drag(&self.bodies, &drag)?;
        self.drags.push(drag);
        Ok(self.drags.len() - 1)
    }

    pub fn add_controller(&mut self, controller: Controller) -> Result<()> {
        check_controller(&self.bodies, &self.drags, &controller)?;
        self.controllers.push(controller);
        Ok(())
    }

    /// Whether bodies of this dimensionality are simulated and shown.
    pub fn enabled(&self, dim: Dimensionality) -> bool {
        let t = &self.params.toggles;
        match dim {
            Dimensionality::D1 => t.d1,
            Dimensionality::D2 => t.d2,
            Dimensionality::D3 => t.d3,
        }
    }

    /// Wall contacts resolved during the last step, tagged with body index.
    pub fn last_contacts(&self) -> &[(usize, Contact)] {
        &self.contacts
    }

    /// Advances the session by one fixed step of `params.dt`.
    ///
    /// On error nothing is modified.
    pub fn step(&mut self) -> Result<()> {
        let started = Instant::now();
        let params = &self.params;
        let mut bodies = self.bodies.clone();
        let mut drags = self.drags.clone();
        let mut controllers = self.controllers.clone();
        let t = self.clock.t;

        if let Some(slot) = self.user_drag {
            let c = params.springs.drag;
            drags[slot].ks = c.ks;
            drags[slot].kd = c.kd;
        }
        for controller in &mut controllers {
            match controller {
                Controller::Swim { body, drag, swim } => {
                    swim_update(swim, t, &mut bodies[*body], &mut drags[*drag], params.springs.drag)?
                }
                Controller::Curve { drag, drive: curve } => drive(&bodies[curve.body], curve, t, &mut drags[*drag])?,
                Controller::Tentacles { body, chains, motion } => animate_tentacles(chains, motion, t, &bodies[*body])?,
            }
        }
        let controlled = Instant::now();

        let step_fn = params.integrator.step_fn();
        let mut degenerate = 0;
        for (b, body) in bodies.iter_mut().enumerate() {
            if !self.enabled(body.dimensionality) {
                continue;
            }
            let own: Vec<Drag> = drags.iter().filter(|d| d.body == b).cloned().collect();
            let stats = step_fn(body, params, &own, params.dt)?;
            degenerate += stats.degenerate_springs;
        }
        let integrated = Instant::now();

        let detector = params.collision.detector.resolver();
        let mut contacts = Vec::new();
        for (b, body) in bodies.iter_mut().enumerate() {
            if !self.enabled(body.dimensionality) {
                continue;
            }
            contacts.extend(detector(body, &self.world, &params.collision).into_iter().map(|c| (b, c)));
            check_finite(b, body)?;
        }
        let collided = Instant::now();

        self.bodies = bodies;
        self.drags = drags;
        self.controllers = controllers;
        self.contacts = contacts;
        self.clock.step += 1;
        self.clock.t += self.params.dt;

        let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1000.0;
        let stats = &mut self.stats;
        stats.controllers_ms = ms(started, controlled);
        stats.integrate_ms = ms(controlled, integrated);
        stats.collide_ms = ms(integrated, collided);
        stats.degenerate_springs = degenerate;
        stats.degenerate_total += degenerate as u64;
        stats.contacts = self.contacts.len();
        stats.record(ms(started, collided));
        if degenerate > 0 {
            log::debug!("step {}: {degenerate} degenerate springs", self.clock.step);
        }
        Ok(())
    }

    /// Runs `n` steps, stopping at the first failure.
    pub fn run(&mut self, n: u64) -> Result<(), RunError> {
        self.run_with(n, |_| Ok(()))
    }

    /// Runs `n` steps, calling `after_step` once each step has committed.
    pub fn run_with(&mut self, n: u64, mut after_step: impl FnMut(&Session) -> Result<()>) -> Result<(), RunError> {
        for completed in 0..n {
            self.step().and_then(|_| after_step(self)).map_err(|error| RunError { completed, error })?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> SessionState {
        SessionState {
            version: SNAPSHOT_VERSION,
            params: self.params.clone(),
            world: self.world,
            bodies: self.bodies.clone(),
            drags: self.drags.clone(),
            controllers: self.controllers.clone(),
            clock: self.clock,
            user_drag: self.user_drag,
            scenario: self.scenario.clone(),
        }
    }

    /// Rebuilds a session from a snapshot, checking every cross reference.
    pub fn restore(state: SessionState) -> Result<Session> {
        let corrupt = |path: String, e: Error| Error::CorruptSnapshot { path, message: e.to_string() };
        if state.version != SNAPSHOT_VERSION {
            return Err(Error::CorruptSnapshot {
                path: "version".into(),
                message: format!("unsupported version {}, expected {SNAPSHOT_VERSION}", state.version),
            });
        }
        state.params.validate().map_err(|e| corrupt("params".into(), e))?;
        state.world.validate().map_err(|e| corrupt("world".into(), e))?;
        for (i, body) in state.bodies.iter().enumerate() {
            body.validate().map_err(|e| corrupt(format!("bodies[{i}]"), e))?;
            if let Some(half) = &body.staggered {
                if half.len() != body.len() {
                    let e =
                        Error::InvalidBody(format!("{} staggered velocities for {} particles", half.len(), body.len()));
                    return Err(corrupt(format!("bodies[{i}].staggered"), e));
                }
            }
        }
        for (i, drag) in state.drags.iter().enumerate() {
            check_drag(&state.bodies, drag).map_err(|e| corrupt(format!("drags[{i}]"), e))?;
        }
        for (i, c) in state.controllers.iter().enumerate() {
            check_controller(&state.bodies, &state.drags, c).map_err(|e| corrupt(format!("controllers[{i}]"), e))?;
        }
        if let Some(slot) = state.user_drag {
            if slot >= state.drags.len() {
                let e = Error::InvalidSpec(format!("drag slot {slot} out of range"));
                return Err(corrupt("user_drag".into(), e));
            }
        }
        if !(state.clock.t.is_finite()) {
            return Err(corrupt("clock.t".into(), Error::InvalidSpec("clock must be finite".into())));
        }
        Ok(Session {
            params: state.params,
            world: state.world,
            bodies: state.bodies,
            drags: state.drags,
            controllers: state.controllers,
            clock: state.clock,
            stats: Stats::default(),
            user_drag: state.user_drag,
            scenario: state.scenario,
            contacts: Vec::new(),
        })
    }

    /// Sets a dotted parameter and refreshes whatever state depends on it.
    /// On error the session is unchanged.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let mut params = self.params.clone();
        match params.set(name, value)? {
            ParamEffect::Live => self.params = params,
            ParamEffect::Mass => {
                self.params = params;
                for body in &mut self.bodies {
                    body.set_uniform_mass(self.params.default_mass);
                }
            }
            ParamEffect::Gas => {
                self.params = params;
                self.apply_gas();
            }
            ParamEffect::Geometry => {
                let spec = self
                    .scenario
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("session has no scenario to rebuild".into()))?;
                let mut rebuilt = spec.build(&params)?;
                if rebuilt.bodies.len() != self.bodies.len() {
                    return Err(Error::InvalidSpec("rebuild changed the number of bodies".into()));
                }
                for (new, old) in rebuilt.bodies.iter_mut().zip(&self.bodies) {
                    new.translate(old.centroid() - new.centroid());
                }
                rebuilt.world = self.world;
                rebuilt.clock = self.clock;
                rebuilt.stats = std::mem::take(&mut self.stats);
                rebuilt.user_drag = None;
                *self = rebuilt;
            }
        }
        Ok(())
    }

    /// Pushes `params.gas_constant` into every enclosing body and swim controller.
    fn apply_gas(&mut self) {
        let gas = self.params.gas_constant;
        for body in &mut self.bodies {
            if body.dimensionality != Dimensionality::D1 {
                body.gas_constant = gas;
            }
        }
        for c in &mut self.controllers {
            if let Controller::Swim { swim, .. } = c {
                swim.base_gas = gas;
            }
        }
    }

    /// Grabs the enabled particle nearest to `point` with the interactive drag.
    /// Returns `(body, particle)`.
    pub fn start_drag(&mut self, point: Vec3) -> Result<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (b, body) in self.bodies.iter().enumerate() {
            if !self.enabled(body.dimensionality) || body.is_empty() {
                continue;
            }
            let i = nearest_particle(body, point)?;
            let d = (body.particles[i].position - point).length_squared();
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((b, i, d));
            }
        }
        let (b, i, _) = best.ok_or(Error::EmptyBody)?;
        let c = self.params.springs.drag;
        let drag = Drag { body: b, target: i, anchor: point, ks: c.ks, kd: c.kd, active: true };
        match self.user_drag {
            Some(slot) => self.drags[slot] = drag,
            None => {
                self.drags.push(drag);
                self.user_drag = Some(self.drags.len() - 1);
            }
        }
        Ok((b, i))
    }

    /// Moves the interactive drag's anchor. Returns false if no drag is active.
    pub fn move_drag(&mut self, point: Vec3) -> bool {
        match self.user_drag.map(|s| &mut self.drags[s]) {
            Some(d) if d.active => {
                d.anchor = point;
                true
            }
            _ => false,
        }
    }

    pub fn end_drag(&mut self) {
        if let Some(slot) = self.user_drag {
            self.drags[slot].active = false;
        }
    }

    /// Tentacle joint polylines attached to body `b`.
    pub fn tentacles_of(&self, b: usize) -> Vec<&TentacleChain> {
        self.controllers
            .iter()
            .filter_map(|c| match c {
                Controller::Tentacles { body, chains, .. } if *body == b => Some(chains.iter()),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

fn check_finite(b: usize, body: &SoftBody) -> Result<()> {
    if let Some(i) = body.particles.iter().position(|p| !(p.position.is_finite() && p.velocity.is_finite())) {
        return Err(Error::NonFiniteState { body: b, particle: i });
    }
    Ok(())
}

fn check_body(bodies: &[SoftBody], b: usize) -> Result<&SoftBody> {
    bodies.get(b).ok_or_else(|| Error::InvalidSpec(format!("body {b} does not exist ({} bodies)", bodies.len())))
}

fn check_drag(bodies: &[SoftBody], drag: &Drag) -> Result<()> {
    let body = check_body(bodies, drag.body)?;
    if drag.target >= body.len() {
        return Err(Error::BadTarget { target: drag.target, len: body.len() });
    }
    let finite = drag.anchor.is_finite() && drag.ks.is_finite() && drag.kd.is_finite();
    if !(finite && drag.ks >= 0.0 && drag.kd >= 0.0) {
        return Err(Error::InvalidSpec("drag anchor and coefficients must be finite and non-negative".into()));
    }
    Ok(())
}

fn check_slot(drags: &[Drag], slot: usize) -> Result<()> {
    if slot >= drags.len() {
        return Err(Error::InvalidSpec(format!("drag slot {slot} does not exist ({} drags)", drags.len())));
    }
    Ok(())
}

fn check_controller(bodies: &[SoftBody], drags: &[Drag], controller: &Controller) -> Result<()> {
    match controller {
        Controller::Swim { body, drag, swim } => {
            swim.validate()?;
            let b = check_body(bodies, *body)?;
            check_slot(drags, *drag)?;
            if drags[*drag].body != *body {
                return Err(Error::InvalidSpec("swim drag belongs to another body".into()));
            }
            if swim.apex >= b.len() {
                return Err(Error::BadTarget { target: swim.apex, len: b.len() });
            }
        }
        Controller::Curve { drag, drive } => {
            drive.validate()?;
            let b = check_body(bodies, drive.body)?;
            check_slot(drags, *drag)?;
            if drags[*drag].body != drive.body {
                return Err(Error::InvalidSpec("curve drag belongs to another body".into()));
            }
            b.layers.center.ok_or(Error::NoCenterParticle)?;
        }
        Controller::Tentacles { body, chains, motion } => {
            let b = check_body(bodies, *body)?;
            if !(motion.period > 0.0 && motion.amplitude.is_finite() && motion.phase_lag.is_finite()) {
                return Err(Error::InvalidSpec("tentacle motion needs a positive period".into()));
            }
            for c in chains {
                if c.root >= b.len() {
                    return Err(Error::BadTarget { target: c.root, len: b.len() });
                }
                if c.joint_count == 0 || !(c.segment_length > 0.0 && c.segment_length.is_finite()) {
                    return Err(Error::InvalidSpec("tentacle needs joints of positive length".into()));
                }
            }
        }
    }
    Ok(())
}
