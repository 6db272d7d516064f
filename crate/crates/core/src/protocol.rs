//! The two-way session state machine: preparation, encoding, tap,
//! compensation, measurement, sifting, integrity verification, and the final
//! hash comparison.
//!
//! One round travels Alice -> Bob -> Alice. Alice hides her data behind a
//! random polarization `theta`; Bob encodes a key bit by rotating the light;
//! Alice undoes `theta` and reads the bit when the screening angles match.
//! Rounds with a predefined `theta` (authentication mode) let Alice verify
//! Bob's tapped detector statistics against the integrity condition.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::adversary::{
    impersonate_decode, impersonate_forward, impersonate_reencode, pns_intercept, trojan_attach,
    trojan_extract, AttackModel, Direction, EveState, EveSummary,
};
use crate::angle::{Angle, ScreeningSet};
use crate::error::{Error, Result};
use crate::optics::{
    beamsplit, measure_pbs, tap, sample_photons, Light, MeasurementOutcome, OutcomeKind,
    PhotonBatch, Transmission,
};
use crate::rng::{rng_from_seed, SessionRng};

/// How light is realized during a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonMode {
    /// Coherent pulses with Poisson photon statistics; channel loss, tap
    /// loss, and detector efficiency all apply.
    Coherent,
    /// Exactly one protocol photon per round, exempt from channel loss and
    /// detector efficiency; Bob's tap becomes a nondestructive monitoring
    /// read with probability `1 - t`. The noiseless reference for oracle
    /// comparisons.
    IdealSinglePhoton,
}

/// Session parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// Number of screening angles N, >= 2.
    pub n_angles: u32,
    /// Probability c that a round runs in authentication mode.
    pub amode_prob: f64,
    /// Source mean photon number mu.
    pub mean_photons: f64,
    /// Bob's tap transmission t; the diverted `1 - t` feeds his monitor.
    pub bob_tap_transmission: f64,
    /// One-way channel transmission, applied per traversal.
    pub channel_transmission: f64,
    /// Alice's detector efficiency.
    pub detector_efficiency: f64,
    /// Pulse repetition rate in Hz (reporting only).
    pub pulse_rate: f64,
    /// Sifted bits to collect before the closing hash exchange.
    pub target_key_bits: u64,
    /// Hard stop when the target is unreachable.
    pub max_rounds: u64,
    /// Master seed; every random draw of the session derives from it.
    pub seed: u64,
    pub photon_mode: PhotonMode,
    /// Trojan ancilla intensity: `None` rides exactly one photon,
    /// `Some(nu)` draws Poisson counts.
    pub trojan_mean_photons: Option<f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            n_angles: 3,
            amode_prob: 0.1,
            mean_photons: 6.0,
            bob_tap_transmission: 0.7,
            channel_transmission: 1.0,
            detector_efficiency: 1.0,
            pulse_rate: 1e6,
            target_key_bits: 256,
            max_rounds: 1_000_000,
            seed: 0,
            photon_mode: PhotonMode::Coherent,
            trojan_mean_photons: None,
        }
    }
}

impl SessionConfig {
    /// Validates every field range.
    pub fn validate(&self) -> Result<()> {
        if self.n_angles < 2 {
            return Err(Error::invalid("n_angles", format!("must be >= 2, got {}", self.n_angles)));
        }
        if !(0.0..=1.0).contains(&self.amode_prob) {
            return Err(Error::invalid(
                "amode_prob",
                format!("must be in [0, 1], got {}", self.amode_prob),
            ));
        }
        if !(self.mean_photons >= 0.0) {
            return Err(Error::invalid(
                "mean_photons",
                format!("must be >= 0, got {}", self.mean_photons),
            ));
        }
        if !(self.bob_tap_transmission > 0.0 && self.bob_tap_transmission <= 1.0) {
            return Err(Error::invalid(
                "bob_tap_transmission",
                format!("must be in (0, 1], got {}", self.bob_tap_transmission),
            ));
        }
        if !(self.channel_transmission > 0.0 && self.channel_transmission <= 1.0) {
            return Err(Error::invalid(
                "channel_transmission",
                format!("must be in (0, 1], got {}", self.channel_transmission),
            ));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(Error::invalid(
                "detector_efficiency",
                format!("must be in (0, 1], got {}", self.detector_efficiency),
            ));
        }
        if !(self.pulse_rate > 0.0) {
            return Err(Error::invalid(
                "pulse_rate",
                format!("must be > 0, got {}", self.pulse_rate),
            ));
        }
        if self.target_key_bits == 0 {
            return Err(Error::invalid("target_key_bits", "must be >= 1"));
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds", "must be >= 1"));
        }
        if let Some(nu) = self.trojan_mean_photons {
            if !(nu >= 0.0) {
                return Err(Error::invalid(
                    "trojan_mean_photons",
                    format!("must be >= 0, got {nu}"),
                ));
            }
        }
        Ok(())
    }
}

/// Round mode: authentication or transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    T,
}

/// Unusual observations attached to a round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnomalyFlags {
    /// Alice's detectors both clicked.
    pub ambiguous_alice: bool,
    /// Bob's tap detectors both clicked.
    pub ambiguous_tap: bool,
    /// Alice's input filter rejected foreign-wavelength photons.
    pub foreign_rejected: bool,
}

impl AnomalyFlags {
    pub fn any(&self) -> bool {
        self.ambiguous_alice || self.ambiguous_tap || self.foreign_rejected
    }

    /// Names of the set flags, in a fixed order.
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.ambiguous_alice {
            out.push("ambig_alice");
        }
        if self.ambiguous_tap {
            out.push("ambig_tap");
        }
        if self.foreign_rejected {
            out.push("foreign");
        }
        out
    }
}

/// Everything drawn at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundInputs {
    pub mode: Mode,
    /// Alice's hiding polarization (equals `theta_star` in A mode).
    pub theta: Angle,
    /// Alice's screening factor: apply her angle at preparation (0) or at
    /// compensation (1).
    pub s: u8,
    pub theta_star: Option<Angle>,
    pub alpha_a_idx: u32,
    /// Bob's key bit for the round.
    pub key_bit: u8,
    pub alpha_b_idx: u32,
}

/// Audit record of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub mode: Mode,
    pub theta: Angle,
    pub s: u8,
    pub theta_star: Option<Angle>,
    pub alpha_a_idx: u32,
    pub alpha_b_idx: u32,
    pub key_bit: u8,
    pub outcome_alice: MeasurementOutcome,
    pub outcome_bob_tap: MeasurementOutcome,
    pub matched: bool,
    pub sifted: bool,
    /// Result of the integrity check; `None` when the round does not qualify.
    pub integrity_ok: Option<bool>,
    pub anomaly_flags: AnomalyFlags,
}

/// Session outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Closing hashes agreed.
    Accepted,
    /// Closing hashes disagreed.
    HashMismatch,
    /// An authentication round failed the integrity condition.
    AuthFailure,
    /// The session ended with no key material.
    Aborted,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Accepted => "accepted",
            Verdict::HashMismatch => "hash_mismatch",
            Verdict::AuthFailure => "auth_failure",
            Verdict::Aborted => "aborted",
        }
    }
}

/// Full session log.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: SessionConfig,
    pub attack: AttackModel,
    pub rounds: Vec<RoundRecord>,
    pub alice_key_bits: Vec<u8>,
    pub bob_key_bits: Vec<u8>,
    pub hash_alice: Option<u64>,
    pub hash_bob: Option<u64>,
    pub verdict: Verdict,
    pub eve: EveSummary,
}

impl Transcript {
    /// Fraction of sifted bits where Alice and Bob disagree; `None` without
    /// key material.
    pub fn qber(&self) -> Option<f64> {
        if self.alice_key_bits.is_empty() {
            return None;
        }
        let errors = self
            .alice_key_bits
            .iter()
            .zip(&self.bob_key_bits)
            .filter(|(a, b)| a != b)
            .count();
        Some(errors as f64 / self.alice_key_bits.len() as f64)
    }

    /// Sifted bits per executed round.
    pub fn sift_rate(&self) -> f64 {
        if self.rounds.is_empty() {
            return 0.0;
        }
        self.alice_key_bits.len() as f64 / self.rounds.len() as f64
    }

    /// Rounds carrying any anomaly flag.
    pub fn anomaly_count(&self) -> u64 {
        self.rounds.iter().filter(|r| r.anomaly_flags.any()).count() as u64
    }
}

/// Draws the secret inputs of both parties for one round.
///
/// Order is fixed (mode, theta, s, alpha_a, k, alpha_b) so seeded replays
/// are stable.
pub fn draw_round_inputs(cfg: &SessionConfig, rng: &mut SessionRng) -> RoundInputs {
    let amode = rng.random_bool(cfg.amode_prob);
    let (mode, theta, theta_star) = if amode {
        let star = if rng.random_range(0..2u8) == 0 {
            Angle::new(0.0)
        } else {
            Angle::new(std::f64::consts::FRAC_PI_2)
        };
        (Mode::A, star, Some(star))
    } else {
        (
            Mode::T,
            Angle::new(rng.random_range(0.0..std::f64::consts::PI)),
            None,
        )
    };
    let s = rng.random_range(0..2u8);
    let alpha_a_idx = rng.random_range(1..=cfg.n_angles);
    let key_bit = rng.random_range(0..2u8);
    let alpha_b_idx = rng.random_range(1..=cfg.n_angles);
    RoundInputs {
        mode,
        theta,
        s,
        theta_star,
        alpha_a_idx,
        key_bit,
        alpha_b_idx,
    }
}

/// Alice's preparation: polarization `theta + alpha_a` when `s = 0`, bare
/// `theta` when `s = 1`, at the configured intensity.
pub fn alice_prepare(
    theta: Angle,
    alpha_a_idx: u32,
    s: u8,
    cfg: &SessionConfig,
) -> Result<crate::optics::CoherentPulse> {
    let screening = ScreeningSet::new(cfg.n_angles)?;
    let alpha_a = screening.angle(alpha_a_idx)?;
    let polarization = if s == 0 {
        theta.rotated(alpha_a.radians())
    } else {
        theta
    };
    Ok(crate::optics::CoherentPulse::new(polarization, cfg.mean_photons))
}

/// Bob's station: rotate by `(-1)^k pi/4 + alpha_b`, divert the fraction
/// `1 - t` into his monitor, read the monitor at the common basis.
///
/// Foreign-wavelength riders receive the same rotation and tap; their
/// diverted photons land in the same detectors.
pub fn bob_encode(
    transmission: Transmission,
    key_bit: u8,
    alpha_b_idx: u32,
    cfg: &SessionConfig,
    rng: &mut SessionRng,
) -> Result<(Transmission, MeasurementOutcome)> {
    let screening = ScreeningSet::new(cfg.n_angles)?;
    let alpha_b = screening.angle(alpha_b_idx)?;
    let sign = if key_bit == 0 { 1.0 } else { -1.0 };
    let phi = sign * std::f64::consts::FRAC_PI_4 + alpha_b.radians();
    let protocol = transmission.protocol.rotated(phi);
    let foreign = transmission.foreign.map(|b| b.rotated(phi));

    let t = cfg.bob_tap_transmission;
    let mut tap_outcome = MeasurementOutcome::empty();
    let onward_protocol = match protocol {
        Light::Pulse(pulse) => {
            let (onward, reflected) = beamsplit(pulse, t)?;
            let diverted = sample_photons(&reflected, rng);
            tap_outcome.record_batch(&diverted, Angle::PBS_BASIS, rng);
            Light::Pulse(onward)
        }
        Light::Batch(batch) => {
            // single-photon mode: the monitor is a nondestructive read that
            // fires with probability 1 - t and never consumes the photon
            if batch.count > 0 && rng.random_bool(1.0 - t) {
                tap_outcome.record_batch(&batch, Angle::PBS_BASIS, rng);
            }
            Light::Batch(batch)
        }
    };
    let onward_foreign = foreign.map(|batch| {
        let (diverted, onward) = tap(&batch, 1.0 - t, rng);
        tap_outcome.record_batch(&diverted, Angle::PBS_BASIS, rng);
        onward
    });
    Ok((
        Transmission {
            protocol: onward_protocol,
            foreign: onward_foreign,
        },
        tap_outcome,
    ))
}

/// Alice's closing stage: rotate by `-theta + alpha_a` (the angle only when
/// `s = 1`), apply her detector efficiency, measure at the common basis.
pub fn alice_compensate_measure(
    light: Light,
    theta: Angle,
    s: u8,
    alpha_a_idx: u32,
    cfg: &SessionConfig,
    rng: &mut SessionRng,
) -> Result<MeasurementOutcome> {
    let screening = ScreeningSet::new(cfg.n_angles)?;
    let alpha_a = screening.angle(alpha_a_idx)?;
    let phi = -theta.radians() + if s == 1 { alpha_a.radians() } else { 0.0 };
    match light.rotated(phi) {
        Light::Pulse(pulse) => {
            let thinned = pulse.attenuated(cfg.detector_efficiency);
            let batch = sample_photons(&thinned, rng);
            Ok(measure_pbs(&batch, Angle::PBS_BASIS, rng))
        }
        // single-photon mode: detector efficiency spared by construction
        Light::Batch(batch) => Ok(measure_pbs(&batch, Angle::PBS_BASIS, rng)),
    }
}

/// Integrity condition on a qualifying record: the tapped bit must equal
/// `k XOR (2 theta* / pi)`.
///
/// Qualifying means authentication mode, matched angles, `s = 0`, and a
/// single-detector tap outcome; anything else returns `None` (skipped, not
/// verified).
pub fn amode_verify(record: &RoundRecord) -> Option<bool> {
    if record.mode != Mode::A || !record.matched || record.s != 0 {
        return None;
    }
    let theta_star = record.theta_star?;
    let OutcomeKind::Bit(tap_bit) = record.outcome_bob_tap.kind() else {
        return None;
    };
    let shift = if theta_star.radians() > std::f64::consts::FRAC_PI_4 {
        1
    } else {
        0
    };
    Some(tap_bit == record.key_bit ^ shift)
}

/// Sifting rule: a matched transmission round with a single-detector
/// outcome yields its bit; empty and ambiguous outcomes are discarded.
pub fn tmode_sift(record: &RoundRecord) -> Option<u8> {
    if record.mode != Mode::T || !record.matched {
        return None;
    }
    record.outcome_alice.bit()
}

/// 64-bit digest of a key: SHA-256 over the bit length and the MSB-first
/// packed bits, truncated to the first eight bytes.
pub fn hash_key(bits: &[u8]) -> Result<u64> {
    if bits.is_empty() {
        return Err(Error::invalid("bits", "key must be nonempty"));
    }
    let mut packed = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        packed[i / 8] |= (b & 1) << (7 - i % 8);
    }
    let mut hasher = Sha256::new();
    hasher.update((bits.len() as u64).to_be_bytes());
    hasher.update(&packed);
    let digest = hasher.finalize();
    Ok(u64::from_be_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes")))
}

fn channel_loss(light: Light, cfg: &SessionConfig) -> Light {
    match light {
        Light::Pulse(pulse) => Light::Pulse(pulse.attenuated(cfg.channel_transmission)),
        // single-photon mode is exempt from channel loss by construction
        Light::Batch(batch) => Light::Batch(batch),
    }
}

/// Runs a full session: rounds until the key target, an integrity failure,
/// or the round cap; then the closing hash exchange.
///
/// Protocol failures are verdicts, not errors; `Err` means an invalid
/// configuration.
pub fn run_session(cfg: &SessionConfig, attack: AttackModel) -> Result<Transcript> {
    cfg.validate()?;
    if let AttackModel::Pns { eta } = attack {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid(
                "pns_eta",
                format!("must be strictly inside (0, 1), got {eta}"),
            ));
        }
    }
    let screening = ScreeningSet::new(cfg.n_angles)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut eve = EveState::default();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut alice_bits: Vec<u8> = Vec::new();
    let mut bob_bits: Vec<u8> = Vec::new();
    let mut decoded_bits = 0u64;
    let mut matching_bits = 0u64;
    let mut exposed_rounds = 0u64;
    let mut auth_failed = false;

    for _ in 0..cfg.max_rounds {
        eve.begin_round();
        let inputs = draw_round_inputs(cfg, &mut rng);
        let pulse = alice_prepare(inputs.theta, inputs.alpha_a_idx, inputs.s, cfg)?;
        let light = match cfg.photon_mode {
            PhotonMode::Coherent => Light::Pulse(pulse),
            PhotonMode::IdealSinglePhoton => {
                Light::Batch(PhotonBatch::new(1, pulse.polarization))
            }
        };

        // forward leg
        let transmission = match attack {
            AttackModel::Honest => Transmission::bare(channel_loss(light, cfg)),
            AttackModel::Pns { eta } => {
                // Eve substitutes a lossless line for the fiber
                Transmission::bare(pns_intercept(
                    light,
                    eta,
                    Direction::AliceToBob,
                    &mut eve,
                    &mut rng,
                ))
            }
            AttackModel::Impersonation => {
                // intercepted at Alice's doorstep; only the fake rides the
                // fiber
                let fake =
                    impersonate_forward(light, &screening, cfg.mean_photons, &mut eve, &mut rng);
                Transmission::bare(channel_loss(fake, cfg))
            }
            AttackModel::TrojanHorse => {
                // the ancilla joins at Bob's doorstep, after the fiber
                trojan_attach(channel_loss(light, cfg), cfg.trojan_mean_photons, &mut rng)
            }
        };

        let (mut onward, tap_outcome) =
            bob_encode(transmission, inputs.key_bit, inputs.alpha_b_idx, cfg, &mut rng)?;

        // return leg
        let mut eve_decoded: Option<u8> = None;
        match attack {
            AttackModel::Honest => {
                onward.protocol = channel_loss(onward.protocol, cfg);
            }
            AttackModel::Pns { eta } => {
                onward.protocol = pns_intercept(
                    onward.protocol,
                    eta,
                    Direction::BobToAlice,
                    &mut eve,
                    &mut rng,
                );
            }
            AttackModel::TrojanHorse => {
                // separated at Bob's doorstep, before the fiber
                let alpha_b = screening.angle(inputs.alpha_b_idx)?;
                let (stripped, bit) = trojan_extract(onward, alpha_b, &mut eve, &mut rng);
                onward = stripped;
                eve_decoded = bit;
                onward.protocol = channel_loss(onward.protocol, cfg);
            }
            AttackModel::Impersonation => {
                // decoded at Alice's doorstep; the re-encoded original skips
                // the fiber
                let returned = channel_loss(onward.protocol, cfg);
                let bit = impersonate_decode(returned, &screening, &mut eve, &mut rng);
                eve_decoded = Some(bit);
                onward.protocol = impersonate_reencode(&screening, &mut eve);
            }
        }

        // Alice's door: the wavelength filter strips foreign light
        let foreign_rejected = onward.foreign.is_some_and(|b| b.count > 0);
        let outcome_alice = alice_compensate_measure(
            onward.protocol,
            inputs.theta,
            inputs.s,
            inputs.alpha_a_idx,
            cfg,
            &mut rng,
        )?;

        let mut record = RoundRecord {
            mode: inputs.mode,
            theta: inputs.theta,
            s: inputs.s,
            theta_star: inputs.theta_star,
            alpha_a_idx: inputs.alpha_a_idx,
            alpha_b_idx: inputs.alpha_b_idx,
            key_bit: inputs.key_bit,
            outcome_alice,
            outcome_bob_tap: tap_outcome,
            matched: screening.matches(inputs.alpha_a_idx, inputs.alpha_b_idx),
            sifted: false,
            integrity_ok: None,
            anomaly_flags: AnomalyFlags {
                ambiguous_alice: outcome_alice.kind() == OutcomeKind::Ambiguous,
                ambiguous_tap: tap_outcome.kind() == OutcomeKind::Ambiguous,
                foreign_rejected,
            },
        };
        record.integrity_ok = amode_verify(&record);
        if let Some(bit) = tmode_sift(&record) {
            record.sifted = true;
            alice_bits.push(bit);
            bob_bits.push(inputs.key_bit);
            if let Some(decoded) = eve_decoded {
                decoded_bits += 1;
                if decoded == inputs.key_bit {
                    matching_bits += 1;
                }
            }
        }
        let failed = record.integrity_ok == Some(false);
        rounds.push(record);
        if failed {
            exposed_rounds += 1;
            auth_failed = true;
            break;
        }
        if alice_bits.len() as u64 >= cfg.target_key_bits {
            break;
        }
    }

    let (verdict, hash_alice, hash_bob) = if auth_failed {
        (Verdict::AuthFailure, None, None)
    } else if alice_bits.is_empty() {
        (Verdict::Aborted, None, None)
    } else {
        let ha = hash_key(&alice_bits)?;
        let hb = hash_key(&bob_bits)?;
        let verdict = if ha == hb {
            Verdict::Accepted
        } else {
            Verdict::HashMismatch
        };
        (verdict, Some(ha), Some(hb))
    };

    let (pns_forward_mean, pns_return_mean) = pns_leg_means(cfg, &eve);
    Ok(Transcript {
        config: *cfg,
        attack,
        rounds,
        alice_key_bits: alice_bits,
        bob_key_bits: bob_bits,
        hash_alice,
        hash_bob,
        verdict,
        eve: EveSummary {
            decoded_bits,
            matching_bits,
            exposed_rounds,
            pns_forward_mean,
            pns_return_mean,
        },
    })
}

/// Per-leg harvest means: the round-invariant stored mean in coherent mode
/// (taken from the first round, asserted constant), the average realized
/// count in single-photon mode.
fn pns_leg_means(cfg: &SessionConfig, eve: &EveState) -> (Option<f64>, Option<f64>) {
    let leg = |direction: Direction| {
        let mut first = None;
        let mut sum = 0.0;
        let mut n = 0u64;
        for (d, p) in &eve.reflected_pulses {
            if *d != direction {
                continue;
            }
            if first.is_none() {
                first = Some(p.mean_photons);
            } else if cfg.photon_mode == PhotonMode::Coherent {
                debug_assert_eq!(Some(p.mean_photons), first);
            }
            sum += p.mean_photons;
            n += 1;
        }
        match cfg.photon_mode {
            PhotonMode::Coherent => first,
            PhotonMode::IdealSinglePhoton => (n > 0).then(|| sum / n as f64),
        }
    };
    (leg(Direction::AliceToBob), leg(Direction::BobToAlice))
}
