//! Simulation engine for entanglement swapping and teleportation with a
//! sum-frequency-generation Bell-state analyzer.
//!
//! The engine works on truncated multi-mode Fock spaces ([`fock`]), builds
//! sources, loss and the first-order SFG interaction on top ([`optics`]),
//! detects with threshold detectors ([`detection`]), and runs full
//! pipelines ([`protocols`]) whose heralded states feed the Bell and
//! key-rate analysis ([`bell`]).

pub mod bell;
pub mod detection;
pub mod efficiency;
pub mod error;
pub mod fock;
pub mod optics;
pub mod optimize;
pub mod presets;
pub mod protocols;

pub use error::{Result, SimError};
