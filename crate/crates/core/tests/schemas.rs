use serde_json::{json, Value};
use softbody::integrators::IntegratorId;
use softbody::params::SimParams;
use softbody::scenario::{build_scenario, BUILTINS};
use softbody::service::protocol::{handle_command, hello, parse_command};
use softbody::service::{Control, Frame};

fn validator(file: &str) -> jsonschema::Validator {
    let path = format!("{}/schemas/{file}", env!("CARGO_MANIFEST_DIR"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap_or_else(|e| panic!("{file}: {e}"))
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

#[test]
fn builtin_snapshots_match_schema() {
    let v = validator("snapshot.schema.json");
    for name in BUILTINS {
        let mut s = build_scenario(name, &SimParams::default()).unwrap();
        assert_valid(&v, &serde_json::to_value(s.snapshot()).unwrap(), name);
        s.params.integrator = IntegratorId::Feynman;
        s.run(3).unwrap();
        assert_valid(&v, &serde_json::to_value(s.snapshot()).unwrap(), &format!("{name} after feynman steps"));
    }
}

#[test]
fn snapshot_schema_rejects_damage() {
    let v = validator("snapshot.schema.json");
    let s = build_scenario("bezier-tow", &SimParams::default()).unwrap();
    let good = serde_json::to_value(s.snapshot()).unwrap();
    assert!(good["controllers"].as_array().unwrap().iter().any(|c| c["kind"] == "curve"));

    let mut bad = good.clone();
    bad["version"] = json!(2);
    assert!(!v.is_valid(&bad));
    let mut bad = good.clone();
    bad["params"]["integrator"] = json!("verlet");
    assert!(!v.is_valid(&bad));
    let mut bad = good.clone();
    bad["bodies"][0]["particles"][0]["position"] = json!([0.0, 1.0]);
    assert!(!v.is_valid(&bad));
    let mut bad = good;
    bad["extra"] = json!(true);
    assert!(!v.is_valid(&bad));
}

#[test]
fn frames_and_replies_match_schema() {
    let v = validator("frame.schema.json");
    assert_valid(&v, &hello(), "hello");
    for name in BUILTINS {
        let mut s = build_scenario(name, &SimParams::default()).unwrap();
        s.run(2).unwrap();
        let frame: Value = serde_json::from_str(&Frame::of(&s, &Control::default()).to_json()).unwrap();
        assert_valid(&v, &frame, name);
    }

    let mut s = build_scenario("jellyfish2d", &SimParams::default()).unwrap();
    let mut control = Control::default();
    let lines = [
        r#"{"cmd":"set_param","name":"ks.structural","value":120}"#,
        r#"{"cmd":"set_integrator","id":"rk4"}"#,
        r#"{"cmd":"drag","phase":"start","x":0,"y":0}"#,
        r#"{"cmd":"drag","phase":"move","x":0.5,"y":0.2}"#,
        r#"{"cmd":"drag","phase":"end","x":0,"y":0}"#,
        r#"{"cmd":"pause"}"#,
        r#"{"cmd":"step","n":3}"#,
        r#"{"cmd":"resume"}"#,
        r#"{"cmd":"select_world","spec":{"min":[-5,0,-5],"max":[5,10,5]}}"#,
        r#"{"cmd":"snapshot_request"}"#,
        r#"{"cmd":"list_params"}"#,
        r#"{"cmd":"list_scenarios"}"#,
        r#"{"cmd":"spawn","scenario":"ring2d"}"#,
        r#"{"cmd":"set_param","name":"nope","value":1}"#,
        r#"{"cmd":"drag","phase":"move"}"#,
        r#"{"cmd":"drag","phase":"end"}"#,
    ];
    for line in lines {
        let reply = match parse_command(line) {
            Ok(cmd) => handle_command(&mut s, &mut control, cmd),
            Err(reply) => reply,
        };
        assert_valid(&v, &reply, line);
    }
    for line in ["{", r#"{"cmd":"fly"}"#, r#"{"cmd":"step","n":"x"}"#] {
        assert_valid(&v, &parse_command(line).unwrap_err(), line);
    }
}

#[test]
fn command_schema_agrees_with_parser() {
    let v = validator("command.schema.json");
    let accepted = [
        json!({"cmd": "set_param", "name": "dt", "value": 0.005}),
        json!({"cmd": "set_param", "name": "toggles.d3", "value": false}),
        json!({"cmd": "set_integrator", "id": "feynman"}),
        json!({"cmd": "set_integrator", "value": "feynman"}),
        json!({"cmd": "drag", "phase": "end"}),
        json!({"cmd": "spawn", "scenario": "sphere3d"}),
        json!({"cmd": "drag", "phase": "start", "x": 1.0, "y": 2.0, "z": 0.5}),
        json!({"cmd": "pause"}),
        json!({"cmd": "resume"}),
        json!({"cmd": "step"}),
        json!({"cmd": "step", "n": 10}),
        json!({"cmd": "select_world", "spec": "box"}),
        json!({"cmd": "snapshot_request"}),
        json!({"cmd": "list_params"}),
        json!({"cmd": "list_scenarios"}),
    ];
    for c in &accepted {
        assert_valid(&v, c, &c.to_string());
        assert!(parse_command(&c.to_string()).is_ok(), "{c}");
    }
    let rejected = [
        json!({"cmd": "fly"}),
        json!({"cmd": "pause", "extra": 1}),
        json!({"cmd": "drag", "phase": "hover", "x": 0, "y": 0}),
        json!({"cmd": "set_integrator", "id": "rk4", "value": "rk4"}),
        json!({"cmd": "step", "n": -1}),
        json!({"name": "dt", "value": 1}),
    ];
    for c in &rejected {
        assert!(!v.is_valid(c), "{c}");
        assert!(parse_command(&c.to_string()).is_err(), "{c}");
    }
}
