//! Dual-functional radar-communication (DFRC) waveform design.
//!
//! This crate synthesizes transmit waveforms for a MIMO base station that
//! simultaneously serves downlink communication users and keeps the emitted
//! signal close to a radar chirp. The design problem trades multi-user
//! interference against chirp similarity under a unit transmit-energy
//! constraint and a per-sample PAPR cap, and is solved with an ADMM
//! operator-splitting iteration.
//!
//! Module map:
//!
//! * [`frame`] — the `N x L` complex waveform container with vectorized and
//!   real-stacked views used throughout.
//! * [`model`] — problem-instance construction: Rayleigh channels, symbol
//!   constellations, reference chirps, zero-forcing precoding.
//! * [`metrics`] — PAPR, MUI energy, SINR/rate, CCDF, ambiguity surfaces,
//!   pulse compression, symbol error rate, HPA clipping.
//! * [`solver`] — the ADMM iteration and its convergence diagnostics.
//! * [`robust`] — the imperfect-CSI variant with a fixed-point x-update.
//! * [`oracle`] — slow exhaustive/multistart reference solvers for small
//!   instances, plus the Pareto-front sweep.
//! * [`experiments`] — declarative Monte-Carlo studies with deterministic
//!   seeding and CSV/JSON emission.
//! * [`io`] — waveform and table serialization.

pub mod error;
pub mod experiments;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod robust;
pub mod solver;

pub use error::{Error, Result};
pub use frame::WaveformFrame;
pub use model::{Constellation, ChirpKind, Scenario};
pub use solver::{SolverConfig, SolverState, ConvergenceDiagnostics, SolveOutput};
