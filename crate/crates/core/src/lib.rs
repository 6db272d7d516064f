//! Simulator and security analyzer for a non-deterministic two-way quantum
//! key distribution protocol that transmits randomly polarized coherent-state
//! pulses.
//!
//! Alice sends a pulse whose polarization combines a random angle with one of
//! `N` public screening angles, Bob encodes a key bit by rotating the pulse
//! and returns it, and Alice undoes her randomness to read the bit. A key bit
//! is kept only when the two screening angles sum to pi, and authentication
//! rounds with a predefined angle let Bob's tap detectors check channel
//! integrity. The crate provides:
//!
//! * [`angle`] / [`optics`] — polarization algebra, coherent-pulse photon
//!   statistics, beam splitting and polarizing-beam-splitter measurement;
//! * [`protocol`] — the full Alice/Bob state machine producing an auditable
//!   [`protocol::Transcript`];
//! * [`adversary`] — Eve models: photon-number-splitting taps, channel
//!   impersonation, and a Trojan-horse ancilla;
//! * [`analysis`] — closed-form information bounds on Eve, the critical mean
//!   photon number, raw key rate, and parameter sweeps;
//! * [`config`] / [`report`] — flat key=value configs, transcript and CSV
//!   emission with a stable column schema;
//! * [`selfcheck`] — the embedded acceptance suite behind `selfcheck`.

pub mod adversary;
pub mod analysis;
pub mod angle;
pub mod config;
pub mod error;
pub mod optics;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod selfcheck;

pub use adversary::{AttackModel, EveState, EveSummary};
pub use analysis::{
    critical_annotations, critical_info, critical_mu, eve_info, fidelity_bound,
    poisson_weighted_info, raw_key_rate, sweep_curve, ChannelParams, CriticalPoint, CurvePoint,
    InfoBoundResult, RateParams,
};
pub use angle::{Angle, ScreeningSet};
pub use config::SweepSpec;
pub use error::Error;
pub use optics::{
    beamsplit, measure_pbs, rotate, sample_photons, tap, CoherentPulse, Light, MeasurementOutcome,
    OutcomeKind, PhotonBatch, Transmission, WavelengthTag,
};
pub use protocol::{
    hash_key, run_session, Mode, PhotonMode, RoundRecord, SessionConfig, Transcript, Verdict,
};
