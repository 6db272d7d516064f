//! Built-in verification suite behind the `selfcheck` command.
//!
//! Ten independent checks cover the numerical bounds, the protocol state
//! machine, the three adversaries, and output determinism. Every check is
//! seeded, so a given build either always passes or always fails.

use std::time::Instant;

use rand::Rng;

use crate::adversary::{trojan_violation_probability, AttackModel};
use crate::analysis::{
    critical_annotations, critical_info, critical_mu, eve_info, fidelity_bound,
    poisson_weighted_info, sweep_curve, ChannelParams,
};
use crate::protocol::{run_session, PhotonMode, SessionConfig, Verdict};
use crate::report::{fmt_sig9, write_curves, write_transcript};
use crate::rng::{rng_from_seed, session_seed};

/// Reference value for the information bound at unit return-leg intensity,
/// frozen from an independent high-precision partial-sum evaluation.
pub const CRITICAL_INFO_REFERENCE: f64 = 0.6900255605860062;

/// Result of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, what: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn lib<T>(r: crate::error::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Runs the full suite in a fixed order.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Outcome); 10] = [
        ("critical-info", check_critical_info),
        ("information-advantage", check_information_advantage),
        ("critical-amplitude", check_critical_amplitude),
        ("fidelity-series", check_fidelity_series),
        ("honest-protocol", check_honest_protocol),
        ("impersonation-detection", check_impersonation_detection),
        ("trojan-horse", check_trojan_horse),
        ("pns-accounting", check_pns_accounting),
        ("sweep-shape", check_sweep_shape),
        ("determinism", check_determinism),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => Check {
                name,
                passed: true,
                detail,
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

fn check_critical_info() -> Outcome {
    let started = Instant::now();
    let value = lib(poisson_weighted_info(1.0, 1e-10))?;
    let shortcut = critical_info();
    ensure(
        (value - CRITICAL_INFO_REFERENCE).abs() < 1e-6,
        format!("bound {value} deviates from reference {CRITICAL_INFO_REFERENCE}"),
    )?;
    ensure(
        (value - 0.6900).abs() < 5e-4,
        format!("bound {value} outside 0.6900 +/- 5e-4"),
    )?;
    ensure(
        (shortcut - value).abs() < 1e-9,
        format!("critical_info {shortcut} disagrees with direct evaluation {value}"),
    )?;
    let elapsed = started.elapsed();
    ensure(
        elapsed.as_secs_f64() < 1.0,
        format!("evaluation took {elapsed:?}, budget 1 s"),
    )?;
    Ok(format!("I_E* = {} in {elapsed:?}", fmt_sig9(value)))
}

fn check_information_advantage() -> Outcome {
    let advantage = 1.0 - critical_info();
    ensure(
        (0.305..=0.315).contains(&advantage),
        format!("legitimate advantage {advantage} outside [0.305, 0.315]"),
    )?;
    Ok(format!("1 - I_E* = {}", fmt_sig9(advantage)))
}

fn check_critical_amplitude() -> Outcome {
    let mu = lib(critical_mu(0.5, 0.7))?;
    ensure(
        (mu - 5.7142857).abs() < 1e-6,
        format!("critical amplitude at (0.5, 0.7) is {mu}, expected 5.7142857"),
    )?;
    for tenths in 2..=8 {
        let eta = tenths as f64 / 10.0;
        let mu = lib(critical_mu(eta, 0.7))?;
        ensure(
            (5.0..=15.0).contains(&mu),
            format!("mu* = {mu} at eta = {eta}, t = 0.7 leaves [5, 15]"),
        )?;
    }
    // unit return-leg intensity pins the bound regardless of (eta, t)
    let mut rng = rng_from_seed(0x51f7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eta = rng.random_range(0.05..0.95);
        let t = rng.random_range(0.1..=1.0);
        let mu = lib(critical_mu(eta, t))?;
        let info = lib(eve_info(ChannelParams { mu, eta, t }, 1e-9))?;
        worst = worst.max((info.i_e - CRITICAL_INFO_REFERENCE).abs());
    }
    ensure(
        worst < 1e-6,
        format!("bound at mu* drifts by {worst} across (eta, t) pairs"),
    )?;
    Ok(format!(
        "mu*(0.5, 0.7) = {}, invariance drift {:.2e}",
        fmt_sig9(mu),
        worst
    ))
}

fn check_fidelity_series() -> Outcome {
    ensure(fidelity_bound(0) == 0.5, "I(0) != 1/2".to_string())?;
    ensure(fidelity_bound(1) == 0.75, "I(1) != 3/4".to_string())?;
    let two = fidelity_bound(2);
    let expected = 0.5 + std::f64::consts::SQRT_2 / 4.0;
    ensure(
        (two - expected).abs() < 1e-12,
        format!("I(2) = {two}, expected 1/2 + sqrt(2)/4"),
    )?;
    let mut prev = fidelity_bound(0);
    for n in 1..=1000u64 {
        let next = fidelity_bound(n);
        ensure(next > prev, format!("series not increasing at n = {n}"))?;
        ensure(next < 1.0, format!("I({n}) = {next} reaches 1"))?;
        prev = next;
    }
    Ok(format!("exact anchors hold, I(1000) = {}", fmt_sig9(prev)))
}

fn check_honest_protocol() -> Outcome {
    let mut total_bits = 0usize;
    for (n_angles, amode_prob, seed) in [(2u32, 0.0, 101u64), (3, 0.1, 102), (5, 0.5, 103)] {
        let cfg = SessionConfig {
            n_angles,
            amode_prob,
            target_key_bits: u64::MAX,
            max_rounds: 10_000,
            seed,
            photon_mode: PhotonMode::IdealSinglePhoton,
            ..SessionConfig::default()
        };
        let transcript = lib(run_session(&cfg, AttackModel::Honest))?;
        let tag = format!("(N = {n_angles}, c = {amode_prob})");
        ensure(
            transcript.rounds.len() == 10_000,
            format!("{tag}: ran {} rounds, expected 10000", transcript.rounds.len()),
        )?;
        ensure(
            transcript.verdict == Verdict::Accepted,
            format!("{tag}: verdict {}", transcript.verdict.as_str()),
        )?;
        ensure(
            transcript.qber() == Some(0.0),
            format!("{tag}: nonzero error rate {:?}", transcript.qber()),
        )?;
        let verified = transcript
            .rounds
            .iter()
            .filter(|r| r.integrity_ok == Some(true))
            .count();
        let violated = transcript
            .rounds
            .iter()
            .filter(|r| r.integrity_ok == Some(false))
            .count();
        ensure(violated == 0, format!("{tag}: {violated} integrity violations"))?;
        if amode_prob > 0.0 {
            ensure(verified > 0, format!("{tag}: integrity check never exercised"))?;
        }
        let p = (1.0 - amode_prob) / n_angles as f64;
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        let rate = transcript.sift_rate();
        ensure(
            (rate - p).abs() < 3.0 * sigma,
            format!("{tag}: sift rate {rate} vs {p} +/- {}", 3.0 * sigma),
        )?;
        total_bits += transcript.alice_key_bits.len();
    }
    Ok(format!("3 noiseless sessions, {total_bits} clean bits"))
}

fn check_impersonation_detection() -> Outcome {
    let cfg = SessionConfig {
        n_angles: 2,
        amode_prob: 0.0,
        target_key_bits: 10_000,
        max_rounds: 100_000,
        seed: 211,
        photon_mode: PhotonMode::IdealSinglePhoton,
        ..SessionConfig::default()
    };
    let transcript = lib(run_session(&cfg, AttackModel::Impersonation))?;
    ensure(
        transcript.verdict == Verdict::HashMismatch,
        format!("verdict {}", transcript.verdict.as_str()),
    )?;
    let qber = transcript.qber().unwrap_or(0.0);
    ensure(
        (qber - 0.1875).abs() < 0.01,
        format!("sifted error rate {qber}, expected 0.1875 +/- 0.01"),
    )?;
    // probability that a 256-bit key carries at least one error
    let detect = 1.0 - (1.0 - qber).powi(256);
    ensure(
        detect >= 0.999,
        format!("256-bit detection probability {detect} below 0.999"),
    )?;
    Ok(format!(
        "QBER {} over {} bits, detection prob {:.6}",
        fmt_sig9(qber),
        transcript.alice_key_bits.len(),
        detect
    ))
}

fn check_trojan_horse() -> Outcome {
    // silent key readout when authentication is off
    let quiet = SessionConfig {
        amode_prob: 0.0,
        target_key_bits: 2_000,
        seed: 307,
        ..SessionConfig::default()
    };
    let transcript = lib(run_session(&quiet, AttackModel::TrojanHorse))?;
    ensure(
        transcript.verdict == Verdict::Accepted,
        format!("quiet session verdict {}", transcript.verdict.as_str()),
    )?;
    let agreement =
        transcript.eve.matching_bits as f64 / transcript.alice_key_bits.len() as f64;
    ensure(
        (agreement - 0.7).abs() < 0.02,
        format!("read fraction {agreement}, expected tap transmission 0.7 +/- 0.02"),
    )?;
    // detection latency against the closed-form per-round violation rate
    let p = trojan_violation_probability(3, 0.1, 0.7, 1.0, 2.0);
    let expected_mean = 1.0 / p;
    let sessions = 200u64;
    let mut total_rounds = 0u64;
    for i in 0..sessions {
        let cfg = SessionConfig {
            mean_photons: 2.0,
            target_key_bits: u64::MAX,
            max_rounds: 100_000,
            seed: session_seed(0x16000, i),
            ..SessionConfig::default()
        };
        let transcript = lib(run_session(&cfg, AttackModel::TrojanHorse))?;
        ensure(
            transcript.verdict == Verdict::AuthFailure,
            format!("session {i} ended {}", transcript.verdict.as_str()),
        )?;
        total_rounds += transcript.rounds.len() as u64;
    }
    let mean = total_rounds as f64 / sessions as f64;
    ensure(
        (mean - expected_mean).abs() < 0.1 * expected_mean,
        format!("mean exposure after {mean} rounds, closed form {expected_mean}"),
    )?;
    Ok(format!(
        "read fraction {}, mean exposure {} rounds vs {}",
        fmt_sig9(agreement),
        fmt_sig9(mean),
        fmt_sig9(expected_mean)
    ))
}

fn check_pns_accounting() -> Outcome {
    let (mu, eta, t) = (6.0, 0.5, 0.7);
    let cfg = SessionConfig {
        mean_photons: mu,
        bob_tap_transmission: t,
        channel_transmission: 0.25, // replaced by Eve's lossless line
        target_key_bits: 64,
        seed: 401,
        ..SessionConfig::default()
    };
    let transcript = lib(run_session(&cfg, AttackModel::Pns { eta }))?;
    ensure(
        transcript.eve.pns_forward_mean == Some((1.0 - eta) * mu),
        format!("forward harvest {:?}", transcript.eve.pns_forward_mean),
    )?;
    ensure(
        transcript.eve.pns_return_mean == Some((1.0 - eta) * (t * (eta * mu))),
        format!("return harvest {:?}", transcript.eve.pns_return_mean),
    )?;
    // the return leg is always the weaker one
    for mu in [0.5, 2.0, 6.0, 12.0, 20.0] {
        for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for t in [0.4, 0.7, 1.0] {
                let info = lib(eve_info(ChannelParams { mu, eta, t }, 1e-9))?;
                ensure(
                    info.i_ba <= info.i_ab + 1e-12,
                    format!("I_BA {} > I_AB {} at ({mu}, {eta}, {t})", info.i_ba, info.i_ab),
                )?;
                ensure(
                    info.i_e == info.i_ba.min(info.i_ab),
                    "overall bound is not the minimum".to_string(),
                )?;
            }
        }
    }
    Ok("harvest means exact, return leg binds on 5x5x3 grid".to_string())
}

fn check_sweep_shape() -> Outcome {
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
    let etas = [0.3, 0.5, 0.8];
    for t in [0.7, 0.9] {
        let points = lib(sweep_curve(&grid, &etas, t, 1e-8))?;
        let annotations = lib(critical_annotations(&etas, t, 1e-8))?;
        for (curve, annotation) in etas.iter().zip(&annotations) {
            let curve_points: Vec<_> = points.iter().filter(|p| p.eta == *curve).collect();
            ensure(
                curve_points.first().is_some_and(|p| p.mu == 0.0 && p.i_e == 0.5),
                format!("curve eta = {curve}, t = {t} does not start at 1/2"),
            )?;
            for pair in curve_points.windows(2) {
                ensure(
                    pair[1].i_e >= pair[0].i_e,
                    format!("curve eta = {curve}, t = {t} not monotone at mu = {}", pair[1].mu),
                )?;
            }
            let critical: Vec<_> = curve_points.iter().filter(|p| p.is_critical).collect();
            ensure(
                critical.len() == 1,
                format!("curve eta = {curve}, t = {t} has {} critical markers", critical.len()),
            )?;
            let crossing = critical[0];
            ensure(
                (crossing.i_e - 0.6900).abs() < 5e-4,
                format!("crossing level {} at eta = {curve}, t = {t}", crossing.i_e),
            )?;
            let mu_star = lib(critical_mu(*curve, t))?;
            ensure(
                (crossing.mu - mu_star).abs() < 1e-12
                    && (annotation.mu_star - mu_star).abs() < 1e-12,
                format!("critical marker off mu* at eta = {curve}, t = {t}"),
            )?;
        }
    }
    Ok("6 curves monotone from 1/2 with annotated crossings".to_string())
}

fn check_determinism() -> Outcome {
    let cfg = SessionConfig {
        target_key_bits: 128,
        seed: 7,
        ..SessionConfig::default()
    };
    let mut first = Vec::new();
    let mut second = Vec::new();
    let a = lib(run_session(&cfg, AttackModel::Honest))?;
    let b = lib(run_session(&cfg, AttackModel::Honest))?;
    write_transcript(&a, &mut first).map_err(|e| e.to_string())?;
    write_transcript(&b, &mut second).map_err(|e| e.to_string())?;
    ensure(first == second, "replay produced different transcripts".to_string())?;
    let other_cfg = SessionConfig { seed: 8, ..cfg };
    let other = lib(run_session(&other_cfg, AttackModel::Honest))?;
    let mut third = Vec::new();
    write_transcript(&other, &mut third).map_err(|e| e.to_string())?;
    ensure(first != third, "seed change left the transcript unchanged".to_string())?;

    let grid: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    let sweep_a = lib(sweep_curve(&grid, &[0.5], 0.7, 1e-8))?;
    let sweep_b = lib(sweep_curve(&grid, &[0.5], 0.7, 1e-8))?;
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_curves(&sweep_a, &mut csv_a).map_err(|e| e.to_string())?;
    write_curves(&sweep_b, &mut csv_b).map_err(|e| e.to_string())?;
    ensure(csv_a == csv_b, "sweep replay produced different bytes".to_string())?;
    Ok(format!("{} transcript bytes replayed identically", first.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_healthy_build() {
        let checks = run_all();
        assert_eq!(checks.len(), 10);
        for check in &checks {
            assert!(check.passed, "{}: {}", check.name, check.detail);
            assert!(!check.detail.is_empty());
        }
    }

    #[test]
    fn check_names_are_unique() {
        let checks = run_all();
        let mut names: Vec<_> = checks.iter().map(|c| c.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), checks.len());
    }
}
