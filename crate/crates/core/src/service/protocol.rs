//! Wire messages: inbound commands, replies and outbound frames.
//!
//! Every message is one UTF-8 JSON object. Clients send `{"cmd": ...}`
//! objects; the server sends objects tagged by `type` (`hello`, `reply`,
//! `frame`, `error`).

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::collision::BoxWorld;
use crate::error::Error;
use crate::math::Vec3;
use crate::model::Dimensionality;
use crate::params::SimParams;
use crate::scenario::resolve_scenario;
use crate::session::Session;

pub const PROTO_VERSION: u32 = 1;

pub const COMMANDS: [&str; 11] = [
    "set_param",
    "set_integrator",
    "spawn",
    "drag",
    "pause",
    "resume",
    "step",
    "select_world",
    "snapshot_request",
    "list_params",
    "list_scenarios",
];

pub fn hello() -> Value {
    json!({"type": "hello", "proto": PROTO_VERSION})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DragPhase {
    Start,
    Move,
    End,
}

/// A box world given either by name (`"box"`, the default box) or by corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldSpec {
    Named(String),
    Box { min: Vec3, max: Vec3 },
}

impl WorldSpec {
    pub fn resolve(&self) -> Result<BoxWorld, Error> {
        match self {
            WorldSpec::Named(name) if name == "box" || name == "default" => Ok(BoxWorld::default()),
            WorldSpec::Named(name) => Err(Error::InvalidSpec(format!("unknown world {name:?}"))),
            WorldSpec::Box { min, max } => BoxWorld::new(*min, *max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    SetParam {
        name: String,
        value: Value,
    },
    SetIntegrator {
        #[serde(alias = "value")]
        id: String,
    },
    Spawn {
        scenario: String,
    },
    /// `x` and `y` are required for `start` and `move`; `end` may omit them.
    Drag {
        phase: DragPhase,
        x: Option<f64>,
        y: Option<f64>,
        #[serde(default)]
        z: f64,
    },
    // Empty struct variants so stray fields are rejected like everywhere else.
    Pause {},
    Resume {},
    Step {
        #[serde(default = "one")]
        n: u64,
    },
    SelectWorld {
        spec: WorldSpec,
    },
    SnapshotRequest {},
    ListParams {},
    ListScenarios {},
}

fn one() -> u64 {
    1
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetParam { .. } => "set_param",
            Command::SetIntegrator { .. } => "set_integrator",
            Command::Spawn { .. } => "spawn",
            Command::Drag { .. } => "drag",
            Command::Pause {} => "pause",
            Command::Resume {} => "resume",
            Command::Step { .. } => "step",
            Command::SelectWorld { .. } => "select_world",
            Command::SnapshotRequest {} => "snapshot_request",
            Command::ListParams {} => "list_params",
            Command::ListScenarios {} => "list_scenarios",
        }
    }
}

/// Decodes one inbound message. The error is a ready-to-send reply.
pub fn parse_command(text: &str) -> Result<Command, Value> {
    let value: Value = serde_json::from_str(text).map_err(|e| error_reply(None, "bad-json", &e.to_string()))?;
    let name = match value.get("cmd").and_then(Value::as_str) {
        Some(n) => n.to_string(),
        None => return Err(error_reply(None, "bad-command", "message has no string \"cmd\" field")),
    };
    if !COMMANDS.contains(&name.as_str()) {
        return Err(error_reply(Some(&name), "unknown-command", &format!("unknown command {name:?}")));
    }
    serde_json::from_value(value).map_err(|e| error_reply(Some(&name), "bad-command", &e.to_string()))
}

pub fn ok_reply(cmd: &str) -> Value {
    json!({"type": "reply", "cmd": cmd, "ok": true})
}

pub fn error_reply(cmd: Option<&str>, code: &str, message: &str) -> Value {
    json!({"type": "reply", "cmd": cmd, "ok": false, "error": code, "message": message})
}

fn engine_error(cmd: &str, e: &Error) -> Value {
    error_reply(Some(cmd), e.code(), &e.to_string())
}

/// Loop state that commands can change besides the session itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Control {
    pub paused: bool,
    /// Steps requested with `step` while paused, not yet taken.
    pub pending_steps: u64,
}

/// Applies one command between steps and builds its reply.
pub fn handle_command(session: &mut Session, control: &mut Control, cmd: Command) -> Value {
    let name = cmd.name();
    let done = |r: Result<Value, Error>| r.unwrap_or_else(|e| engine_error(name, &e));
    match cmd {
        Command::SetParam { name: param, value } => {
            let number = match &value {
                Value::Number(n) => n.as_f64(),
                Value::Bool(b) => Some(*b as u8 as f64),
                _ => None,
            };
            match number {
                Some(v) => done(session.set_param(&param, v).map(|_| {
                    let mut r = ok_reply(name);
                    r["name"] = json!(param);
                    r["value"] = json!(session.params.get(&param).unwrap_or(v));
                    r
                })),
                None if param == "integrator" => {
                    let id = value.as_str().unwrap_or_default().to_string();
                    handle_command(session, control, Command::SetIntegrator { id })
                }
                None => error_reply(Some(name), "invalid-params", &format!("{param} needs a numeric value")),
            }
        }
        Command::SetIntegrator { id } => done(id.parse().map(|id| {
            session.params.integrator = id;
            let mut r = ok_reply(name);
            r["id"] = json!(session.params.integrator.name());
            r
        })),
        Command::Spawn { scenario } => {
            done(resolve_scenario(&scenario).and_then(|spec| spec.instantiate(&SimParams::default())).map(|fresh| {
                *session = fresh;
                let mut r = ok_reply(name);
                r["scenario"] = json!(scenario);
                r
            }))
        }
        Command::Drag { phase: DragPhase::End, .. } => {
            session.end_drag();
            ok_reply(name)
        }
        Command::Drag { phase, x, y, z } => {
            let (Some(x), Some(y)) = (x, y) else {
                return error_reply(Some(name), "bad-command", "drag start and move need x and y");
            };
            let point = Vec3::new(x, y, z);
            if !point.is_finite() {
                return error_reply(Some(name), "invalid-spec", "drag point must be finite");
            }
            match phase {
                DragPhase::Start => done(session.start_drag(point).map(|(body, particle)| {
                    let mut r = ok_reply(name);
                    r["phase"] = json!("start");
                    r["body"] = json!(body);
                    r["particle"] = json!(particle);
                    r
                })),
                DragPhase::Move => {
                    if session.move_drag(point) {
                        ok_reply(name)
                    } else {
                        error_reply(Some(name), "no-drag", "no drag in progress")
                    }
                }
                DragPhase::End => unreachable!("handled above"),
            }
        }
        Command::Pause {} => {
            control.paused = true;
            ok_reply(name)
        }
        Command::Resume {} => {
            control.paused = false;
            control.pending_steps = 0;
            ok_reply(name)
        }
        Command::Step { n } => {
            control.pending_steps = control.pending_steps.saturating_add(n);
            let mut r = ok_reply(name);
            r["n"] = json!(n);
            r
        }
        Command::SelectWorld { spec } => done(spec.resolve().map(|world| {
            session.world = world;
            ok_reply(name)
        })),
        Command::SnapshotRequest {} => {
            let mut r = ok_reply(name);
            r["snapshot"] = serde_json::to_value(session.snapshot()).expect("snapshots serialize");
            r
        }
        Command::ListParams {} => {
            let mut r = ok_reply(name);
            r["params"] = session.params.list();
            r
        }
        Command::ListScenarios {} => {
            let mut r = ok_reply(name);
            r["scenarios"] = json!(crate::scenario::BUILTINS);
            r
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub steps_per_s: f64,
    pub step_ms: f64,
    pub degenerate_springs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBody {
    /// Index of the body in the session.
    pub id: usize,
    pub dim: u8,
    pub particles: Vec<[f64; 3]>,
    pub springs: Vec<[usize; 2]>,
    pub tentacles: Vec<Vec<[f64; 3]>>,
}

/// What clients render. Disabled bodies are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(rename = "type")]
    pub kind: String,
    pub t: f64,
    pub step: u64,
    pub paused: bool,
    pub bodies: Vec<FrameBody>,
    pub stats: FrameStats,
}

impl Frame {
    pub fn of(session: &Session, control: &Control) -> Frame {
        let bodies = session
            .bodies
            .iter()
            .enumerate()
            .filter(|(_, b)| session.enabled(b.dimensionality))
            .map(|(id, b)| FrameBody {
                id,
                dim: match b.dimensionality {
                    Dimensionality::D1 => 1,
                    Dimensionality::D2 => 2,
                    Dimensionality::D3 => 3,
                },
                particles: b.particles.iter().map(|p| p.position.to_array()).collect(),
                springs: b.springs.iter().map(|s| [s.p1, s.p2]).collect(),
                tentacles: session
                    .tentacles_of(id)
                    .into_iter()
                    .map(|c| c.joints.iter().map(|j| j.to_array()).collect())
                    .collect(),
            })
            .collect();
        Frame {
            kind: "frame".into(),
            t: session.clock.t,
            step: session.clock.step,
            paused: control.paused,
            bodies,
            stats: FrameStats {
                steps_per_s: session.stats.steps_per_s,
                step_ms: session.stats.last_step_ms,
                degenerate_springs: session.stats.degenerate_springs,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}
