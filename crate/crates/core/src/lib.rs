//! Real-time softbody simulation: layered spring-mass-pressure bodies,
//! interchangeable integrators, penalty collision in a box world, runtime
//! level-of-detail parameters, Bezier towing and jellyfish scenarios.
//!
//! A [`session::Session`] owns the whole simulation state and steps it
//! deterministically; [`dump`] and session snapshots make runs reproducible,
//! and [`service`] streams a live session to network clients.

pub mod cli;
pub mod collision;
pub mod curve;
pub mod dump;
pub mod error;
pub mod forces;
pub mod geometry;
pub mod integrators;
pub mod jellyfish;
pub mod math;
pub mod model;
pub mod params;
pub mod scenario;
pub mod service;
pub mod session;

pub use error::{Error, Result};
pub use math::Vec3;
