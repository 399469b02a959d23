//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating criterion fails.
//!
//! Run with: cargo test -p softbody --test acceptance

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

use softbody::collision::BoxWorld;
use softbody::curve::eval_cubic;
use softbody::dump::DumpWriter;
use softbody::forces::accumulate_all;
use softbody::geometry::{
    build_bell_3d, build_chain_1d, build_ring_2d, build_sphere_3d, BellSpec, RingSpec, SphereSpec,
};
use softbody::integrators::IntegratorId;
use softbody::jellyfish::build_jellyfish_2d;
use softbody::model::{enclosed_measure, Dimensionality, Layers, Particle, SoftBody, Spring, SpringKind};
use softbody::params::{SimParams, SpringCoefficients};
use softbody::scenario::{build_scenario, ScenarioSpec};
use softbody::session::{Controller, Session, SessionState};
use softbody::Vec3;

type Check = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    gating: bool,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "integrator convergence",
            budget: Some(Duration::from_secs(5)),
            gating: true,
            run: convergence,
        },
        Criterion {
            name: "momentum balance",
            budget: Some(Duration::from_secs(30)),
            gating: true,
            run: momentum_balance,
        },
        Criterion { name: "closed-surface pressure", budget: None, gating: true, run: closed_surface_pressure },
        Criterion { name: "geometry oracles", budget: None, gating: true, run: geometry_oracles },
        Criterion {
            name: "collision containment + dissipation",
            budget: Some(Duration::from_secs(30)),
            gating: true,
            run: containment,
        },
        Criterion {
            name: "determinism & replay",
            budget: Some(Duration::from_secs(30)),
            gating: true,
            run: determinism_replay,
        },
        Criterion {
            name: "jellyfish locomotion",
            budget: Some(Duration::from_secs(30)),
            gating: true,
            run: locomotion,
        },
        Criterion { name: "bezier towing", budget: None, gating: true, run: bezier_towing },
        Criterion { name: "real-time bar (reported, not gating)", budget: None, gating: false, run: real_time_bar },
        Criterion { name: "headless parity", budget: None, gating: true, run: headless_parity },
    ];

    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let elapsed = started.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(budget)) if elapsed > budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<40} {detail} [{elapsed:.2?}]", c.name),
            Err(detail) => {
                println!("FAIL  {:<40} {detail} [{elapsed:.2?}]", c.name);
                if c.gating {
                    failed += 1;
                }
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// Unit-mass particle on a ks = 1 spring to a pinned anchor: x(t) = cos t.
fn oscillator() -> (SoftBody, SimParams) {
    let mut anchor = Particle::new(0, Vec3::ZERO, 1.0);
    anchor.pinned = true;
    let mover = Particle::new(1, Vec3::X, 1.0);
    let spring = Spring { id: 0, p1: 0, p2: 1, rest_length: 0.0, ks: 1.0, kd: 0.0, kind: SpringKind::Structural };
    let body = SoftBody::new(Dimensionality::D1, vec![anchor, mover], vec![spring], vec![], Layers::default()).unwrap();
    let mut params = SimParams { gravity: Vec3::ZERO, ..SimParams::default() };
    params.springs.structural = SpringCoefficients::new(1.0, 0.0);
    (body, params)
}

fn oscillator_error(id: IntegratorId, dt: f64) -> f64 {
    let (mut body, params) = oscillator();
    let steps = (1.0 / dt).round() as usize;
    let step = id.step_fn();
    for _ in 0..steps {
        step(&mut body, &params, &[], dt).unwrap();
    }
    (body.particles[1].position.x - 1f64.cos()).abs()
}

fn convergence() -> Check {
    let bands = [
        (IntegratorId::Euler, 1.5, 3.0),
        (IntegratorId::Midpoint, 3.0, 6.0),
        (IntegratorId::Feynman, 3.0, 6.0),
        (IntegratorId::Rk4, 10.0, 24.0),
    ];
    let mut detail = Vec::new();
    for (id, lo, hi) in bands {
        let ratio = oscillator_error(id, 0.05) / oscillator_error(id, 0.025);
        ensure((lo..=hi).contains(&ratio), || format!("{id} halving ratio {ratio:.3} outside [{lo}, {hi}]"))?;
        detail.push(format!("{id} {ratio:.2}"));
    }
    let rk4 = oscillator_error(IntegratorId::Rk4, 0.05);
    ensure(rk4 <= 1e-5, || format!("rk4 error {rk4:e} at dt=0.05"))?;
    Ok(format!("ratios {}; rk4 |x(1) - cos 1| = {rk4:.1e}", detail.join(", ")))
}

/// Largest |sum| / |largest term| over spring and pressure forces, after every step.
fn worst_balance(mut session: Session, steps: u64) -> Result<f64, String> {
    let mut worst = 0.0f64;
    session
        .run_with(steps, |s| {
            for body in &s.bodies {
                let mut probe = body.clone();
                let stats = accumulate_all(&mut probe, &s.params, &[])?;
                let spring: Vec3 = probe.particles.iter().map(|p| p.forces.spring).sum();
                let pressure: Vec3 = probe.particles.iter().map(|p| p.forces.pressure).sum();
                if stats.max_spring_force > 0.0 {
                    worst = worst.max(spring.length() / stats.max_spring_force);
                }
                if stats.max_pressure_force > 0.0 {
                    worst = worst.max(pressure.length() / stats.max_pressure_force);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(worst)
}

fn momentum_balance() -> Check {
    let params = SimParams::default();
    let mut worst = 0.0f64;
    for n in 10..=40 {
        let spec = RingSpec {
            particles_per_layer: n,
            outer_radius: 1.0,
            inner_radius: 0.7,
            center: Vec3::new(0.0, 4.0, 0.0),
            with_center_particle: false,
        };
        let mut body = build_ring_2d(&spec, &params).unwrap();
        body.gas_constant = params.gas_constant;
        let mut s = Session::new(params.clone(), BoxWorld::default()).unwrap();
        s.add_body(body).unwrap();
        worst = worst.max(worst_balance(s, 1000)?);
    }
    for k in 0..=2 {
        let spec = SphereSpec {
            iterations: k,
            outer_radius: 1.0,
            inner_radius: 0.7,
            center: Vec3::new(0.0, 4.0, 0.0),
            two_layer: true,
        };
        let mut body = build_sphere_3d(&spec, &params).unwrap();
        body.gas_constant = params.gas_constant;
        let mut s = Session::new(params.clone(), BoxWorld::default()).unwrap();
        s.add_body(body).unwrap();
        worst = worst.max(worst_balance(s, 1000)?);
    }
    ensure(worst <= 1e-9, || format!("relative imbalance {worst:e}"))?;
    Ok(format!("ring2d N=10..40, sphere3d k=0..2, 1000 steps each; worst relative |sum| {worst:.1e}"))
}

fn closed_surface_pressure() -> Check {
    let params = SimParams::default();
    let mut bodies = Vec::new();
    for name in ["ring2d", "ring2d-center", "sphere3d", "jellyfish2d", "jellyfish3d", "bubbles-box"] {
        let mut s = build_scenario(name, &params).unwrap();
        bodies.extend(s.bodies.iter().cloned().map(|b| (format!("{name} at rest"), b)));
        s.run(300).map_err(|e| e.to_string())?;
        bodies.extend(s.bodies.iter().cloned().map(|b| (format!("{name} deformed"), b)));
    }
    let mut worst = 0.0f64;
    for (label, mut body) in bodies {
        body.gas_constant = 1.0;
        accumulate_all(&mut body, &SimParams { gravity: Vec3::ZERO, ..params.clone() }, &[])
            .map_err(|e| e.to_string())?;
        let net: Vec3 = body.particles.iter().map(|p| p.forces.pressure).sum();
        ensure(net.length() <= 1e-9, || format!("{label}: net pressure {:e} N", net.length()))?;
        worst = worst.max(net.length());
    }
    Ok(format!("worst net pressure force {worst:.1e} N"))
}

fn max_spring_net(body: &SoftBody) -> f64 {
    let mut b = body.clone();
    b.gas_constant = 0.0;
    let params = SimParams { gravity: Vec3::ZERO, ..SimParams::default() };
    accumulate_all(&mut b, &params, &[]).unwrap();
    b.particles.iter().map(|p| p.forces.total().length()).fold(0.0, f64::max)
}

fn geometry_oracles() -> Check {
    let params = SimParams::default();
    let mut checked = Vec::new();
    for n in [3u32, 10, 12, 25] {
        let spec = RingSpec {
            particles_per_layer: n,
            outer_radius: 1.0,
            inner_radius: 0.6,
            center: Vec3::ZERO,
            with_center_particle: false,
        };
        let ring = build_ring_2d(&spec, &params).unwrap();
        let n = n as usize;
        ensure(ring.len() == 2 * n && ring.springs.len() == 5 * n, || {
            format!("ring N={n}: {} particles, {} springs", ring.len(), ring.springs.len())
        })?;
        let centered = build_ring_2d(&RingSpec { with_center_particle: true, ..spec }, &params).unwrap();
        ensure(centered.len() == 2 * n + 1 && centered.springs.len() == 6 * n, || {
            format!("ring N={n} with center: {} particles, {} springs", centered.len(), centered.springs.len())
        })?;
        checked.push(ring);
        checked.push(centered);
    }
    for (k, vef) in [(6, 12, 8), (18, 48, 32), (66, 192, 128)].into_iter().enumerate() {
        let spec = SphereSpec {
            iterations: k as u32,
            outer_radius: 1.0,
            inner_radius: 0.7,
            center: Vec3::ZERO,
            two_layer: false,
        };
        let s = build_sphere_3d(&spec, &params).unwrap();
        let got = (s.len(), s.springs.len(), s.faces.len());
        ensure(got == vef, || format!("sphere k={k}: (V, E, F) = {got:?}, expected {vef:?}"))?;
        ensure(got.0 + got.2 == got.1 + 2, || format!("sphere k={k} violates V - E + F = 2"))?;
        checked.push(s);
        checked.push(build_sphere_3d(&SphereSpec { two_layer: true, ..spec }, &params).unwrap());
    }
    checked.push(build_chain_1d(7, 0.25, &params).unwrap());
    checked.push(build_bell_3d(&BellSpec::from_params(&params, Vec3::ZERO), &params).unwrap());
    checked.push(build_jellyfish_2d(&params, Vec3::ZERO).unwrap().body);
    let worst = checked.iter().map(max_spring_net).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("equilibrium violated: max |net| {worst:e} N"))?;
    Ok(format!("counts match; {} built bodies at equilibrium, max |net| {worst:.1e} N", checked.len()))
}

fn containment() -> Check {
    let mut s = build_scenario("jellyfish2d", &SimParams::default()).unwrap();
    if s.params.collision.restitution != 0.3 {
        return Err("default restitution is not 0.3".into());
    }
    let mut contacts = 0usize;
    let mut outside = 0usize;
    let mut growing = 0usize;
    s.run_with(10_000, |s| {
        for body in &s.bodies {
            outside += body.particles.iter().filter(|p| !s.world.contains(p.position)).count();
        }
        for (_, c) in s.last_contacts() {
            contacts += 1;
            if c.velocity_after.abs() > c.velocity_before.abs() {
                growing += 1;
            }
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    ensure(outside == 0, || format!("{outside} out-of-box particle observations"))?;
    ensure(growing == 0, || format!("{growing} contacts increased wall-normal speed"))?;
    ensure(contacts > 0, || "the jellyfish never touched a wall".into())?;
    Ok(format!("10000 steps, 0 escapes, {contacts} contacts all dissipative"))
}

fn dump_bytes(session: &mut Session, steps: u64) -> Result<Vec<u8>, String> {
    let mut w = DumpWriter::new(Vec::new(), Vec::new());
    w.dump_frame(session).map_err(|e| e.to_string())?;
    session.run_with(steps, |s| w.dump_frame(s)).map_err(|e| e.to_string())?;
    let (mut particles, springs) = w.into_inner();
    particles.extend(springs);
    Ok(particles)
}

fn determinism_replay() -> Check {
    for id in IntegratorId::ALL {
        let params = SimParams { integrator: id, ..SimParams::default() };
        let mut original = build_scenario("jellyfish2d", &params).unwrap();
        original.run(500).map_err(|e| e.to_string())?;
        let json = original.snapshot().to_json();
        let uninterrupted = dump_bytes(&mut original, 500)?;

        let state = SessionState::from_json(&json).map_err(|e| e.to_string())?;
        let mut restored = Session::restore(state).map_err(|e| e.to_string())?;
        if id == IntegratorId::Feynman && restored.bodies[0].staggered.is_none() {
            return Err("feynman snapshot lost its half-step velocities".into());
        }
        let replayed = dump_bytes(&mut restored, 500)?;
        ensure(uninterrupted == replayed, || format!("{id}: replayed dump differs"))?;
    }
    Ok("jellyfish2d snapshot at 500, replay to 1000: identical dumps for euler, midpoint, feynman, rk4".into())
}

fn locomotion() -> Check {
    let params = SimParams { gravity: Vec3::ZERO, ..SimParams::default() };
    let mut s = build_scenario("jellyfish2d", &params).unwrap();
    let period = match &s.controllers[0] {
        Controller::Swim { swim, .. } => swim.period,
        _ => return Err("jellyfish2d has no swim controller".into()),
    };
    let heading = s.bodies[0].heading;
    let start = s.bodies[0].centroid();
    let periods = 5;
    let steps = (periods as f64 * period / params.dt).round() as u64;
    let mut measures = vec![enclosed_measure(&s.bodies[0]).unwrap()];
    s.run_with(steps, |s| {
        measures.push(enclosed_measure(&s.bodies[0])?);
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let displacement = (s.bodies[0].centroid() - start).dot(heading);
    ensure(displacement > 0.0, || format!("displacement along heading {displacement:.4} m"))?;

    let per_period = steps as usize / periods;
    let mut min_changes = usize::MAX;
    for k in 0..periods {
        let window = &measures[k * per_period..=(k + 1) * per_period];
        let slopes: Vec<f64> = window.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
        let changes = slopes.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        min_changes = min_changes.min(changes);
    }
    ensure(min_changes >= 2, || format!("only {min_changes} derivative sign changes in some period"))?;
    Ok(format!(
        "{periods} periods: +{displacement:.3} m along heading, >= {min_changes} measure slope sign changes per period"
    ))
}

fn bezier_towing() -> Check {
    let mut s = build_scenario("bezier-tow", &SimParams::default()).unwrap();
    let (duration, end) = match &s.controllers[0] {
        Controller::Curve { drive, .. } => (drive.duration, drive.path.end_point().unwrap()),
        _ => return Err("bezier-tow has no curve controller".into()),
    };
    let body = &s.bodies[0];
    ensure(body.layers.center.is_some() && !body.layers.inner.is_empty(), || "towed ring is not three-layer".into())?;
    let spec = ScenarioSpec::builtin("bezier-tow").unwrap();
    let segments = (spec.control_points.unwrap().len() - 1) / 3;
    ensure(segments == 2, || format!("{segments} path segments"))?;
    let steps = ((duration + 5.0) / s.params.dt).round() as u64;
    s.run(steps).map_err(|e| e.to_string())?;
    let center = s.bodies[0].layers.center.unwrap();
    let miss = s.bodies[0].particles[center].position.distance(end);
    ensure(miss <= 0.05, || format!("center particle {miss:.4} m from the curve end"))?;

    let mut runner = TestRunner::deterministic();
    let point = prop::array::uniform3(-100.0f64..100.0).prop_map(Vec3::from);
    let case = (point.clone(), point.clone(), point.clone(), point, 0.0f64..=1.0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p0, p1, p2, p3, u) = case.new_tree(&mut runner).unwrap().current();
        let mut pts = vec![p0, p1, p2, p3];
        while pts.len() > 1 {
            pts = pts.windows(2).map(|w| w[0] + (w[1] - w[0]) * u).collect();
        }
        worst = worst.max((eval_cubic(p0, p1, p2, p3, u) - pts[0]).max_abs());
    }
    ensure(worst <= 1e-12, || format!("Bernstein vs de Casteljau differ by {worst:e}"))?;
    Ok(format!("arrived within {miss:.4} m at t = duration + 5 s; 1000 de Casteljau cases, max diff {worst:.1e}"))
}

fn real_time_bar() -> Check {
    let params = SimParams { integrator: IntegratorId::Rk4, ..SimParams::default() };
    let mut s = build_scenario("sphere3d", &params).unwrap();
    let started = Instant::now();
    let mut steps = 0u64;
    while started.elapsed() < Duration::from_secs(1) || steps < 30 {
        s.step().map_err(|e| e.to_string())?;
        steps += 1;
    }
    let rate = steps as f64 / started.elapsed().as_secs_f64();
    let particles = s.bodies[0].len();
    ensure(rate >= 30.0, || format!("{rate:.0} steps/s for a {particles}-particle sphere"))?;
    Ok(format!("{rate:.0} steps/s for the {particles}-particle two-layer k=2 sphere with rk4"))
}

fn headless_parity() -> Check {
    let exe = env!("CARGO_BIN_EXE_softbody");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run_dump = dir.path().join("run.csv");
    let serve_dump = dir.path().join("serve.csv");
    let invoke = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(exe).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    };
    let path = |p: &Path| p.to_str().unwrap().to_string();
    invoke(&[
        "run",
        "--scenario",
        "jellyfish2d",
        "--integrator",
        "rk4",
        "--dt",
        "0.005",
        "--steps",
        "1000",
        "--dump",
        &path(&run_dump),
    ])?;
    invoke(&[
        "serve",
        "--port",
        "0",
        "--scenario",
        "jellyfish2d",
        "--integrator",
        "rk4",
        "--dt",
        "0.005",
        "--max-steps",
        "1000",
        "--fast",
        "--dump",
        &path(&serve_dump),
    ])?;
    for (a, b) in [
        (run_dump.clone(), serve_dump.clone()),
        (dir.path().join("run.springs.csv"), dir.path().join("serve.springs.csv")),
    ] {
        let (x, y) = (std::fs::read(&a).map_err(|e| e.to_string())?, std::fs::read(&b).map_err(|e| e.to_string())?);
        ensure(x == y, || format!("{} and {} differ", a.display(), b.display()))?;
    }
    let frames = std::fs::read_to_string(&run_dump).unwrap().lines().filter(|l| l.starts_with("1000,")).count();
    ensure(frames > 0, || "dump lacks frame 1000".into())?;
    Ok("run and client-less serve: identical particle and spring dumps over 1000 steps".into())
}
