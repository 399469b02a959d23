//! C ABI over the softbody engine.
//!
//! Sessions are opaque [`SoftbodySession`] handles created from a scenario
//! name, a scenario file, or a JSON snapshot. Every fallible call returns a
//! [`SoftbodyStatus`]; after a failure [`softbody_last_error`] holds a message
//! for the calling thread that starts with the engine's stable error code.
//! Strings returned by the library are released with [`softbody_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use softbody::integrators::IntegratorId;
use softbody::scenario::resolve_scenario;
use softbody::session::{Session, SessionState};
use softbody::{Error, Vec3};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftbodyStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    OutOfRange = 4,
    UnknownScenario = 5,
    UnknownIntegrator = 6,
    UnknownParam = 7,
    InvalidParams = 8,
    InvalidSpec = 9,
    InvalidBody = 10,
    CorruptSnapshot = 11,
    NonFiniteState = 12,
    NoDrag = 13,
    Io = 14,
    /// Any other engine error; the message carries its code.
    Engine = 15,
    Panic = 16,
}

/// Which per-particle vector [`softbody_session_copy`] reads.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftbodyField {
    Position = 0,
    Velocity = 1,
}

/// Opaque simulation handle.
pub struct SoftbodySession {
    session: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SoftbodyStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownScenario(_) => SoftbodyStatus::UnknownScenario,
            Error::UnknownIntegrator(_) => SoftbodyStatus::UnknownIntegrator,
            Error::UnknownParam(_) => SoftbodyStatus::UnknownParam,
            Error::InvalidParams(_) | Error::LodCap { .. } => SoftbodyStatus::InvalidParams,
            Error::InvalidSpec(_) | Error::PathTooShort(_) => SoftbodyStatus::InvalidSpec,
            Error::InvalidBody(_)
            | Error::DegenerateBody(_)
            | Error::EmptyBody
            | Error::CoincidentEndpoints
            | Error::InvertedBody(_) => SoftbodyStatus::InvalidBody,
            Error::CorruptSnapshot { .. } => SoftbodyStatus::CorruptSnapshot,
            Error::NonFiniteState { .. } => SoftbodyStatus::NonFiniteState,
            Error::DumpIo(_) => SoftbodyStatus::Io,
            _ => SoftbodyStatus::Engine,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: SoftbodyStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn call(f: impl FnOnce() -> Result<(), Failure>) -> SoftbodyStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(SoftbodyStatus::Panic, "panic: internal error inside the engine"));
    match outcome {
        Ok(()) => SoftbodyStatus::Ok,
        Err(Failure(status, message)) => {
            set_last_error(message);
            status
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(SoftbodyStatus::NullArgument, format!("null-argument: {what}"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(SoftbodyStatus::InvalidUtf8, format!("invalid-utf8: {what}")))
}

unsafe fn session<'a>(p: *mut SoftbodySession) -> Result<&'a mut Session, Failure> {
    match p.as_mut() {
        Some(h) => Ok(&mut h.session),
        None => fail(SoftbodyStatus::NullArgument, "null-argument: session"),
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    match p.as_mut() {
        Some(r) => Ok(r),
        None => fail(SoftbodyStatus::NullArgument, format!("null-argument: {what}")),
    }
}

fn publish(out: &mut *mut SoftbodySession, session: Session) {
    *out = Box::into_raw(Box::new(SoftbodySession { session }));
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn softbody_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a session from a built-in scenario name or a scenario JSON file path.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_new(
    scenario: *const c_char,
    out: *mut *mut SoftbodySession,
) -> SoftbodyStatus {
    call(|| {
        let out = self::out(out, "out")?;
        *out = ptr::null_mut();
        let spec = resolve_scenario(text(scenario, "scenario")?)?;
        let built = spec.instantiate(&Default::default())?;
        publish(out, built);
        Ok(())
    })
}

/// Rebuilds a session from a snapshot produced by [`softbody_session_snapshot`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_restore(
    json: *const c_char,
    out: *mut *mut SoftbodySession,
) -> SoftbodyStatus {
    call(|| {
        let out = self::out(out, "out")?;
        *out = ptr::null_mut();
        let state = SessionState::from_json(text(json, "json")?)?;
        publish(out, Session::restore(state)?);
        Ok(())
    })
}

/// Releases a session. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_free(s: *mut SoftbodySession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Advances `n` fixed steps. On failure the session holds the last good state
/// and the clock tells how many steps completed.
///
/// # Safety
/// `s` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_step(s: *mut SoftbodySession, n: u64) -> SoftbodyStatus {
    call(|| Ok(session(s)?.run(n).map_err(|e| e.error)?))
}

/// Sets a named parameter, e.g. `dt`, `ks.structural`, `gravity.y`.
///
/// # Safety
/// `s` must be a live session handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_set_param(
    s: *mut SoftbodySession,
    name: *const c_char,
    value: f64,
) -> SoftbodyStatus {
    call(|| Ok(session(s)?.set_param(text(name, "name")?, value)?))
}

/// Reads a named parameter.
///
/// # Safety
/// `s` must be a live session handle; `name` a NUL-terminated string; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_get_param(
    s: *mut SoftbodySession,
    name: *const c_char,
    value: *mut f64,
) -> SoftbodyStatus {
    call(|| {
        let v = session(s)?.params.get(text(name, "name")?)?;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Selects `euler`, `midpoint`, `feynman` or `rk4`.
///
/// # Safety
/// `s` must be a live session handle; `id` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_set_integrator(s: *mut SoftbodySession, id: *const c_char) -> SoftbodyStatus {
    call(|| {
        let id: IntegratorId = text(id, "id")?.parse()?;
        session(s)?.params.integrator = id;
        Ok(())
    })
}

/// Current step count and simulated time. Either output may be NULL.
///
/// # Safety
/// `s` must be a live session handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_clock(
    s: *mut SoftbodySession,
    step: *mut u64,
    t: *mut f64,
) -> SoftbodyStatus {
    call(|| {
        let clock = session(s)?.clock;
        if let Some(step) = step.as_mut() {
            *step = clock.step;
        }
        if let Some(t) = t.as_mut() {
            *t = clock.t;
        }
        Ok(())
    })
}

/// Number of bodies in the session.
///
/// # Safety
/// `s` must be a live session handle; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_body_count(s: *mut SoftbodySession, count: *mut usize) -> SoftbodyStatus {
    call(|| {
        *out(count, "count")? = session(s)?.bodies.len();
        Ok(())
    })
}

/// Number of particles in body `body`.
///
/// # Safety
/// `s` must be a live session handle; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_particle_count(
    s: *mut SoftbodySession,
    body: usize,
    count: *mut usize,
) -> SoftbodyStatus {
    call(|| {
        let session = session(s)?;
        match session.bodies.get(body) {
            Some(b) => *out(count, "count")? = b.len(),
            None => return fail(SoftbodyStatus::OutOfRange, format!("out-of-range: body {body}")),
        }
        Ok(())
    })
}

/// Copies one vector per particle of body `body` into `buf` as x,y,z triples.
/// `len` is the capacity of `buf` in doubles and must be at least three times
/// the particle count.
///
/// # Safety
/// `s` must be a live session handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_copy(
    s: *mut SoftbodySession,
    body: usize,
    field: SoftbodyField,
    buf: *mut f64,
    len: usize,
) -> SoftbodyStatus {
    call(|| {
        let session = session(s)?;
        let Some(b) = session.bodies.get(body) else {
            return fail(SoftbodyStatus::OutOfRange, format!("out-of-range: body {body}"));
        };
        if buf.is_null() {
            return fail(SoftbodyStatus::NullArgument, "null-argument: buf");
        }
        let need = 3 * b.len();
        if len < need {
            return fail(SoftbodyStatus::BufferTooSmall, format!("buffer-too-small: need {need} doubles, got {len}"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(&b.particles) {
            let v = match field {
                SoftbodyField::Position => p.position,
                SoftbodyField::Velocity => p.velocity,
            };
            chunk.copy_from_slice(&[v.x, v.y, v.z]);
        }
        Ok(())
    })
}

/// Grabs the enabled particle nearest to (x, y, z). Either output may be NULL.
///
/// # Safety
/// `s` must be a live session handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_drag_start(
    s: *mut SoftbodySession,
    x: f64,
    y: f64,
    z: f64,
    body: *mut usize,
    particle: *mut usize,
) -> SoftbodyStatus {
    call(|| {
        let point = Vec3::new(x, y, z);
        if !point.is_finite() {
            return fail(SoftbodyStatus::InvalidSpec, "invalid-spec: drag point must be finite");
        }
        let (b, i) = session(s)?.start_drag(point)?;
        if let Some(body) = body.as_mut() {
            *body = b;
        }
        if let Some(particle) = particle.as_mut() {
            *particle = i;
        }
        Ok(())
    })
}

/// Moves the anchor of the drag started with [`softbody_session_drag_start`].
///
/// # Safety
/// `s` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_drag_move(s: *mut SoftbodySession, x: f64, y: f64, z: f64) -> SoftbodyStatus {
    call(|| {
        let point = Vec3::new(x, y, z);
        if !point.is_finite() {
            return fail(SoftbodyStatus::InvalidSpec, "invalid-spec: drag point must be finite");
        }
        if session(s)?.move_drag(point) {
            Ok(())
        } else {
            fail(SoftbodyStatus::NoDrag, "no-drag: no drag in progress")
        }
    })
}

/// Releases the interactive drag, if any.
///
/// # Safety
/// `s` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_drag_end(s: *mut SoftbodySession) -> SoftbodyStatus {
    call(|| {
        session(s)?.end_drag();
        Ok(())
    })
}

/// Serializes the full session state as JSON into a new string owned by the
/// caller; release it with [`softbody_string_free`].
///
/// # Safety
/// `s` must be a live session handle; `json` writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_snapshot(s: *mut SoftbodySession, json: *mut *mut c_char) -> SoftbodyStatus {
    call(|| {
        let json = out(json, "json")?;
        *json = ptr::null_mut();
        let text = session(s)?.snapshot().to_json();
        *json = CString::new(text).or_else(|_| fail(SoftbodyStatus::Engine, "snapshot contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Lists every parameter with its current value as a JSON array of
/// `{"name", "value"}` objects; release it with [`softbody_string_free`].
///
/// # Safety
/// `s` must be a live session handle; `json` writable.
#[no_mangle]
pub unsafe extern "C" fn softbody_session_params(s: *mut SoftbodySession, json: *mut *mut c_char) -> SoftbodyStatus {
    call(|| {
        let json = out(json, "json")?;
        *json = ptr::null_mut();
        let text = session(s)?.params.list().to_string();
        *json = CString::new(text).or_else(|_| fail(SoftbodyStatus::Engine, "parameter list contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `p` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn softbody_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}
