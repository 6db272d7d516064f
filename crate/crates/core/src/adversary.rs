//! The eavesdropper: beam-splitting (photon-number-splitting style),
//! impersonation, and Trojan-horse strategies, with per-round state for
//! stored light and guesses.
//!
//! Each operation is one interposition point; the session engine decides
//! where in the channel to call them. The beam-splitting attacker replaces
//! the lossy channel with a perfect one, so channel loss never applies on her
//! watch; the other two attacks leave the channel loss in place.

use rand::Rng;

use crate::angle::{Angle, ScreeningSet};
use crate::optics::{
    measure_pbs, sample_photons, tap, CoherentPulse, Light, OutcomeKind, PhotonBatch,
    Transmission, WavelengthTag,
};
use crate::rng::sample_poisson;

/// Which adversary, if any, interposes on the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackModel {
    Honest,
    /// Beam-splitting attack with Eve's splitter transmission `eta`,
    /// strictly inside (0, 1).
    Pns { eta: f64 },
    Impersonation,
    TrojanHorse,
}

impl AttackModel {
    /// Stable lowercase name, matching the `attack` config value.
    pub fn name(&self) -> &'static str {
        match self {
            AttackModel::Honest => "honest",
            AttackModel::Pns { .. } => "pns",
            AttackModel::Impersonation => "impersonation",
            AttackModel::TrojanHorse => "trojan",
        }
    }
}

/// Channel leg, Alice's side first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

/// Eve's fake-preparation parameters for the impersonation attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FakeParams {
    pub theta_prime: Angle,
    pub s_prime: u8,
    pub alpha_a_prime_idx: u32,
}

/// Everything Eve holds during one round, plus her cross-round harvest.
#[derive(Debug, Clone, Default)]
pub struct EveState {
    /// The intercepted original light, kept in storage until re-encoding.
    pub stored_pulse_e1: Option<Light>,
    /// Parameters of her substituted preparation.
    pub fake_params: Option<FakeParams>,
    /// Her uniform guess at Bob's screening-angle index.
    pub guess_alpha_b_idx: Option<u32>,
    /// The bit she committed to this round.
    pub decoded_bit: Option<u8>,
    /// The separated ancilla awaiting the screening-angle announcement.
    pub stored_ancilla_e2: Option<PhotonBatch>,
    /// Beam-splitting harvest, one reflected pulse per interception.
    pub reflected_pulses: Vec<(Direction, CoherentPulse)>,
}

impl EveState {
    /// Clears round-scoped fields; the harvest list persists.
    pub fn begin_round(&mut self) {
        self.stored_pulse_e1 = None;
        self.fake_params = None;
        self.guess_alpha_b_idx = None;
        self.decoded_bit = None;
        self.stored_ancilla_e2 = None;
    }
}

/// Session-level adversary statistics carried in the transcript summary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EveSummary {
    /// Sifted rounds on which Eve held a decoded bit.
    pub decoded_bits: u64,
    /// Of those, how many equal the encoded key bit.
    pub matching_bits: u64,
    /// Rounds on which the integrity check caught her.
    pub exposed_rounds: u64,
    /// Per-round stored mean on the forward leg under the beam-splitting
    /// attack (round-invariant in coherent mode; averaged in single-photon
    /// mode).
    pub pns_forward_mean: Option<f64>,
    /// Same for the return leg.
    pub pns_return_mean: Option<f64>,
}

/// Beam-splits the passing light, keeping the reflected part.
///
/// Coherent light splits deterministically into means `eta * mu` onward and
/// `(1 - eta) * mu` stored. Realized photons are diverted individually with
/// probability `1 - eta`; the harvest records the diverted count.
pub fn pns_intercept(
    light: Light,
    eta: f64,
    direction: Direction,
    state: &mut EveState,
    rng: &mut impl Rng,
) -> Light {
    debug_assert!(eta > 0.0 && eta < 1.0);
    match light {
        Light::Pulse(pulse) => {
            let onward = CoherentPulse {
                mean_photons: eta * pulse.mean_photons,
                ..pulse
            };
            let reflected = CoherentPulse {
                mean_photons: (1.0 - eta) * pulse.mean_photons,
                ..pulse
            };
            state.reflected_pulses.push((direction, reflected));
            Light::Pulse(onward)
        }
        Light::Batch(batch) => {
            let (diverted, onward) = tap(&batch, 1.0 - eta, rng);
            state.reflected_pulses.push((
                direction,
                CoherentPulse {
                    polarization: batch.polarization,
                    mean_photons: diverted.count as f64,
                    wavelength: batch.wavelength,
                },
            ));
            Light::Batch(onward)
        }
    }
}

/// Stores the intercepted light and substitutes a fake preparation with
/// uniform `theta'`, `s'`, and screening index.
pub fn impersonate_forward(
    light: Light,
    screening: &ScreeningSet,
    fake_mean: f64,
    state: &mut EveState,
    rng: &mut impl Rng,
) -> Light {
    let theta_prime = Angle::new(rng.random_range(0.0..std::f64::consts::PI));
    let s_prime = rng.random_range(0..2u8);
    let alpha_a_prime_idx = rng.random_range(1..=screening.len());
    let alpha_a_prime = screening
        .angle(alpha_a_prime_idx)
        .expect("index drawn in range");
    let polarization = if s_prime == 0 {
        theta_prime.rotated(alpha_a_prime.radians())
    } else {
        theta_prime
    };
    state.fake_params = Some(FakeParams {
        theta_prime,
        s_prime,
        alpha_a_prime_idx,
    });
    let fake = match light {
        Light::Pulse(_) => Light::Pulse(CoherentPulse::new(polarization, fake_mean)),
        Light::Batch(_) => Light::Batch(PhotonBatch::new(1, polarization)),
    };
    state.stored_pulse_e1 = Some(light);
    fake
}

/// Undoes the fake preparation, guesses Bob's screening angle uniformly, and
/// measures; commits to a uniform bit when the detectors stay silent or
/// disagree.
pub fn impersonate_decode(
    light: Light,
    screening: &ScreeningSet,
    state: &mut EveState,
    rng: &mut impl Rng,
) -> u8 {
    let fake = state.fake_params.expect("decode follows forward");
    let alpha_a_prime = screening
        .angle(fake.alpha_a_prime_idx)
        .expect("stored index valid");
    let guess_idx = rng.random_range(1..=screening.len());
    let alpha_b_prime = screening.angle(guess_idx).expect("index drawn in range");
    let undo = if fake.s_prime == 0 {
        -(fake.theta_prime.radians() + alpha_a_prime.radians())
    } else {
        -fake.theta_prime.radians()
    };
    let aligned = light.rotated(undo - alpha_b_prime.radians());
    let outcome = match aligned {
        Light::Batch(batch) => measure_pbs(&batch, Angle::PBS_BASIS, rng),
        Light::Pulse(pulse) => {
            let batch = sample_photons(&pulse, rng);
            measure_pbs(&batch, Angle::PBS_BASIS, rng)
        }
    };
    let bit = match outcome.kind() {
        OutcomeKind::Bit(b) => b,
        _ => rng.random_range(0..2u8),
    };
    state.guess_alpha_b_idx = Some(guess_idx);
    state.decoded_bit = Some(bit);
    bit
}

/// Encodes the stored original with Eve's decoded bit and guessed angle and
/// releases it toward Alice.
pub fn impersonate_reencode(screening: &ScreeningSet, state: &mut EveState) -> Light {
    let e1 = state.stored_pulse_e1.take().expect("reencode follows forward");
    let bit = state.decoded_bit.expect("reencode follows decode");
    let guess = state.guess_alpha_b_idx.expect("reencode follows decode");
    let alpha_b_prime = screening.angle(guess).expect("stored index valid");
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    e1.rotated(sign * std::f64::consts::FRAC_PI_4 + alpha_b_prime.radians())
}

/// Attaches the foreign-wavelength ancilla alongside the protocol light.
///
/// `ancilla_mean` of `None` rides exactly one photon; `Some(nu)` draws a
/// Poisson count for intensity-sensitivity studies.
pub fn trojan_attach(
    protocol: Light,
    ancilla_mean: Option<f64>,
    rng: &mut impl Rng,
) -> Transmission {
    let count = match ancilla_mean {
        None => 1,
        Some(nu) => sample_poisson(rng, nu),
    };
    Transmission {
        protocol,
        foreign: Some(PhotonBatch {
            count,
            polarization: Angle::new(0.0),
            wavelength: WavelengthTag::Foreign,
        }),
    }
}

/// Separates the surviving ancilla, stores it, and reads the encoded bit
/// after the screening-angle announcement.
///
/// Returns the stripped transmission and the decoded bit; `None` when the
/// tap absorbed every ancilla photon.
pub fn trojan_extract(
    transmission: Transmission,
    alpha_b: Angle,
    state: &mut EveState,
    rng: &mut impl Rng,
) -> (Transmission, Option<u8>) {
    let stripped = Transmission {
        protocol: transmission.protocol,
        foreign: None,
    };
    let Some(ancilla) = transmission.foreign else {
        return (stripped, None);
    };
    if ancilla.count == 0 {
        return (stripped, None);
    }
    state.stored_ancilla_e2 = Some(ancilla);
    let aligned = ancilla.rotated(-alpha_b.radians());
    let bit = measure_pbs(&aligned, Angle::PBS_BASIS, rng).bit();
    state.decoded_bit = bit;
    (stripped, bit)
}

/// Closed-form per-round probability that the single-photon ancilla trips
/// the integrity check.
///
/// The check runs on authenticated, `s = 0`, matched rounds (factor
/// `c / (2 N)`); a violation needs the legitimate tapped light empty
/// (`exp(-(1-t) * t_link * mu)`), the ancilla diverted into the tap
/// (`1 - t`), and its click on the unexpected detector (exactly `1/2` when
/// averaged over the key bit and the predefined angle).
pub fn trojan_violation_probability(
    n_angles: u32,
    c: f64,
    t: f64,
    t_link: f64,
    mu: f64,
) -> f64 {
    let protocol_empty = (-(1.0 - t) * t_link * mu).exp();
    c * 0.5 / n_angles as f64 * protocol_empty * (1.0 - t) * 0.5
}
