//! Simulation and optimization toolkit for a pulsed-optical-potential
//! matter-wave interference protocol with levitated nanoparticles.
//!
//! The protocol prepares a nanoparticle in the ground state of an optical
//! trap, lets it expand freely, imprints a cubic + quadratic phase with a
//! short standing-wave pulse, maps the resulting momentum-space fringes into
//! position space through a second free evolution, and finally magnifies the
//! pattern with an inverted harmonic potential. This crate evaluates the
//! closed-form interference pattern and its decoherence budget, certifies the
//! coherence length that such an observation implies, computes environmental
//! requirements (gas pressure, internal temperature, run counts), optimizes
//! the protocol parameters, and cross-validates every closed form against an
//! independent split-operator / moment-ODE oracle.
//!
//! All internal quantities are SI; the CLI layer converts the usual lab units
//! (mbar, nm, kHz) at the boundary.

pub mod airy;
pub mod budget;
pub mod config;
pub mod constants;
pub mod contour;
pub mod environment;
pub mod error;
pub mod gaussian;
pub mod material;
pub mod metrics;
pub mod ode;
pub mod optimizer;
pub mod oracle;
pub mod pattern;
pub mod pipeline;
pub mod protocol;
pub mod quad;
pub mod record;

pub use error::Error;

/// Crate version string embedded in result records and file headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
