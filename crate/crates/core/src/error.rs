use thiserror::Error;

/// Every failure the engine can report.
///
/// The `code()` strings are stable: they appear on the wire in error replies
/// and in the C ABI's last-error message.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate-body: {0}")]
    DegenerateBody(String),
    #[error("empty-body")]
    EmptyBody,
    #[error("coincident-endpoints")]
    CoincidentEndpoints,
    #[error("inverted-body: enclosed measure {0} is not positive")]
    InvertedBody(f64),
    #[error("pressure-undefined-1d")]
    PressureUndefined1d,
    #[error("bad-target: particle {target} not in body of {len}")]
    BadTarget { target: usize, len: usize },
    #[error("unknown-integrator: {0:?} (expected one of euler, midpoint, feynman, rk4)")]
    UnknownIntegrator(String),
    #[error("unknown-detector: {0:?} (expected one of penalty)")]
    UnknownDetector(String),
    #[error("invalid-body: {0}")]
    InvalidBody(String),
    #[error("invalid-params: {0}")]
    InvalidParams(String),
    #[error("invalid-spec: {0}")]
    InvalidSpec(String),
    #[error("lod-cap: {iterations} subdivision iterations exceeds cap {cap}")]
    LodCap { iterations: u32, cap: u32 },
    #[error("center-exists")]
    CenterExists,
    #[error("no-center-particle")]
    NoCenterParticle,
    #[error("path-too-short: {0} control points, need at least 4")]
    PathTooShort(usize),
    #[error("non-finite-state: body {body} particle {particle}")]
    NonFiniteState { body: usize, particle: usize },
    #[error("unknown-param: {0:?}")]
    UnknownParam(String),
    #[error("unknown-scenario: {0:?}")]
    UnknownScenario(String),
    #[error("dump-io: {0}")]
    DumpIo(String),
    #[error("corrupt-snapshot at {path}: {message}")]
    CorruptSnapshot { path: String, message: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateBody(_) => "degenerate-body",
            Error::EmptyBody => "empty-body",
            Error::CoincidentEndpoints => "coincident-endpoints",
            Error::InvertedBody(_) => "inverted-body",
            Error::PressureUndefined1d => "pressure-undefined-1d",
            Error::BadTarget { .. } => "bad-target",
            Error::UnknownIntegrator(_) => "unknown-integrator",
            Error::UnknownDetector(_) => "unknown-detector",
            Error::InvalidBody(_) => "invalid-body",
            Error::InvalidParams(_) => "invalid-params",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::LodCap { .. } => "lod-cap",
            Error::CenterExists => "center-exists",
            Error::NoCenterParticle => "no-center-particle",
            Error::PathTooShort(_) => "path-too-short",
            Error::NonFiniteState { .. } => "non-finite-state",
            Error::UnknownParam(_) => "unknown-param",
            Error::UnknownScenario(_) => "unknown-scenario",
            Error::DumpIo(_) => "dump-io",
            Error::CorruptSnapshot { .. } => "corrupt-snapshot",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::DumpIo(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
