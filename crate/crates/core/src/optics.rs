//! Coherent pulses, sampled photon batches, beam splitting, taps, and
//! polarizing-beam-splitter measurement.
//!
//! A pulse stays in mean-photon-number form (coherent states remain coherent
//! under attenuation and beam splitting) until a detector needs a realized
//! photon count; [`sample_photons`] is that boundary. Detector clicks follow
//! Malus's law per photon.

use rand::Rng;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::rng::sample_poisson;

/// Distinguishes legitimate protocol light from foreign light at a shifted
/// wavelength (the Trojan-horse ancilla). The tag survives rotation, loss,
/// and beam splitting; Alice's input filter rejects `Foreign`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavelengthTag {
    /// Light at the protocol wavelength.
    Protocol,
    /// Light at a split wavelength that Alice's filter rejects.
    Foreign,
}

/// A coherent-state pulse: polarization plus mean photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPulse {
    /// Linear polarization on the Poincaré equator.
    pub polarization: Angle,
    /// Mean photon number, >= 0. Zero is the vacuum pulse.
    pub mean_photons: f64,
    /// Wavelength tag, immutable under rotation and splitting.
    pub wavelength: WavelengthTag,
}

impl CoherentPulse {
    /// A protocol-wavelength pulse.
    pub fn new(polarization: Angle, mean_photons: f64) -> Self {
        CoherentPulse {
            polarization,
            mean_photons,
            wavelength: WavelengthTag::Protocol,
        }
    }

    /// Rotated copy; mean photon number and wavelength unchanged.
    pub fn rotated(self, phi: f64) -> Self {
        CoherentPulse {
            polarization: self.polarization.rotated(phi),
            ..self
        }
    }

    /// Attenuated copy with mean scaled by `transmission` (a lossy channel
    /// leaves a coherent state coherent).
    pub fn attenuated(self, transmission: f64) -> Self {
        CoherentPulse {
            mean_photons: transmission * self.mean_photons,
            ..self
        }
    }
}

/// A realized photon-number eigenstate: `count` photons sharing one
/// polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonBatch {
    /// Number of photons.
    pub count: u64,
    /// Shared linear polarization.
    pub polarization: Angle,
    /// Wavelength tag inherited from the originating pulse.
    pub wavelength: WavelengthTag,
}

impl PhotonBatch {
    /// A batch at the protocol wavelength.
    pub fn new(count: u64, polarization: Angle) -> Self {
        PhotonBatch {
            count,
            polarization,
            wavelength: WavelengthTag::Protocol,
        }
    }

    /// An empty batch (no photons).
    pub fn empty(wavelength: WavelengthTag) -> Self {
        PhotonBatch {
            count: 0,
            polarization: Angle::new(0.0),
            wavelength,
        }
    }

    /// Rotated copy; count and wavelength unchanged.
    pub fn rotated(self, phi: f64) -> Self {
        PhotonBatch {
            polarization: self.polarization.rotated(phi),
            ..self
        }
    }

    /// Each photon independently survives with probability `transmission`.
    pub fn thinned(self, transmission: f64, rng: &mut impl Rng) -> Self {
        let survivors = (0..self.count)
            .filter(|_| rng.random_bool(transmission))
            .count() as u64;
        PhotonBatch {
            count: survivors,
            ..self
        }
    }
}

/// Rotates a pulse by `phi` radians; the unitary `U(phi)` of the protocol.
pub fn rotate(pulse: CoherentPulse, phi: f64) -> CoherentPulse {
    pulse.rotated(phi)
}

/// Splits a pulse on a beam splitter of transmission `eta`.
///
/// Returns `(transmitted, reflected)` with means `eta * mu` and
/// `(1 - eta) * mu`; both keep the input polarization and wavelength.
pub fn beamsplit(pulse: CoherentPulse, eta: f64) -> Result<(CoherentPulse, CoherentPulse)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(
            "eta",
            format!("beam-splitter transmission must be in [0, 1], got {eta}"),
        ));
    }
    let transmitted = CoherentPulse {
        mean_photons: eta * pulse.mean_photons,
        ..pulse
    };
    let reflected = CoherentPulse {
        mean_photons: (1.0 - eta) * pulse.mean_photons,
        ..pulse
    };
    Ok((transmitted, reflected))
}

/// Realizes a pulse as a photon batch with Poisson-distributed count.
pub fn sample_photons(pulse: &CoherentPulse, rng: &mut impl Rng) -> PhotonBatch {
    PhotonBatch {
        count: sample_poisson(rng, pulse.mean_photons),
        polarization: pulse.polarization,
        wavelength: pulse.wavelength,
    }
}

/// Classification of a PBS measurement record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    /// Exactly one detector clicked; the bit is 0 for D0, 1 for D1.
    Bit(u8),
    /// Neither detector clicked.
    Empty,
    /// Both detectors clicked; discarded by honest parties and counted as an
    /// anomaly (a noiseless aligned pulse cannot produce it).
    Ambiguous,
}

/// Click record of one polarizing-beam-splitter measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeasurementOutcome {
    /// Clicks on detector D0 (the transmitted port).
    pub clicks_d0: u64,
    /// Clicks on detector D1 (the reflected port).
    pub clicks_d1: u64,
}

impl MeasurementOutcome {
    /// Outcome with no clicks.
    pub fn empty() -> Self {
        MeasurementOutcome::default()
    }

    /// Classifies the click pattern.
    pub fn kind(&self) -> OutcomeKind {
        match (self.clicks_d0, self.clicks_d1) {
            (0, 0) => OutcomeKind::Empty,
            (_, 0) => OutcomeKind::Bit(0),
            (0, _) => OutcomeKind::Bit(1),
            _ => OutcomeKind::Ambiguous,
        }
    }

    /// The measured bit, when exactly one detector clicked.
    pub fn bit(&self) -> Option<u8> {
        match self.kind() {
            OutcomeKind::Bit(b) => Some(b),
            _ => None,
        }
    }

    /// Adds the clicks of `batch` measured at `basis` (Malus's law per
    /// photon: D0 with probability `cos^2(polarization - basis)`).
    pub fn record_batch(&mut self, batch: &PhotonBatch, basis: Angle, rng: &mut impl Rng) {
        let p0 = batch.polarization.malus(basis);
        for _ in 0..batch.count {
            if rng.random_bool(p0) {
                self.clicks_d0 += 1;
            } else {
                self.clicks_d1 += 1;
            }
        }
    }
}

/// Measures a photon batch at a PBS oriented along `basis`.
pub fn measure_pbs(batch: &PhotonBatch, basis: Angle, rng: &mut impl Rng) -> MeasurementOutcome {
    let mut out = MeasurementOutcome::empty();
    out.record_batch(batch, basis, rng);
    out
}

/// Diverts each photon of `batch` independently with probability `fraction`.
///
/// Returns `(into_detector, onward)`; the counts always sum to the input
/// count.
pub fn tap(
    batch: &PhotonBatch,
    fraction: f64,
    rng: &mut impl Rng,
) -> (PhotonBatch, PhotonBatch) {
    assert!(
        (0.0..=1.0).contains(&fraction),
        "tap fraction must be in [0, 1], got {fraction}"
    );
    let diverted = (0..batch.count)
        .filter(|_| rng.random_bool(fraction))
        .count() as u64;
    (
        PhotonBatch {
            count: diverted,
            ..*batch
        },
        PhotonBatch {
            count: batch.count - diverted,
            ..*batch
        },
    )
}

/// Protocol light in transit: still coherent, or already realized as photons.
///
/// Coherent sessions keep the pulse form until a detector; the ideal
/// single-photon mode moves a one-photon batch through the whole round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Light {
    /// Mean-photon-number form.
    Pulse(CoherentPulse),
    /// Realized photon-number form.
    Batch(PhotonBatch),
}

impl Light {
    /// Current polarization.
    pub fn polarization(&self) -> Angle {
        match self {
            Light::Pulse(p) => p.polarization,
            Light::Batch(b) => b.polarization,
        }
    }

    /// Rotated copy.
    pub fn rotated(self, phi: f64) -> Self {
        match self {
            Light::Pulse(p) => Light::Pulse(p.rotated(phi)),
            Light::Batch(b) => Light::Batch(b.rotated(phi)),
        }
    }

    /// Mean photon number (the realized count for a batch).
    pub fn mean_photons(&self) -> f64 {
        match self {
            Light::Pulse(p) => p.mean_photons,
            Light::Batch(b) => b.count as f64,
        }
    }
}

/// What travels the channel in one direction: the protocol light, plus any
/// foreign-wavelength rider (the Trojan-horse ancilla).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub protocol: Light,
    pub foreign: Option<PhotonBatch>,
}

impl Transmission {
    /// A transmission carrying only protocol light.
    pub fn bare(protocol: Light) -> Self {
        Transmission {
            protocol,
            foreign: None,
        }
    }
}
