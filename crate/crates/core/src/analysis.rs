//! Eavesdropper information bounds for the beam-splitting attack and the
//! derived critical-amplitude quantities.
//!
//! The attacker's per-round knowledge given `n` stolen photons is the optimal
//! estimation fidelity `I(n)`; averaging over Poisson photon statistics of the
//! stolen fraction gives the leg bounds `I_AB` (forward path) and `I_BA`
//! (return path), and the overall bound is their minimum. Driving the mean
//! photon number to the critical value `mu* = 1/((1-eta)*eta*t)` pins the
//! return-leg mean at one photon, where the bound evaluates to about 0.6900.

use crate::error::{Error, Result};

/// Default series tolerance used by [`critical_info`].
pub const DEFAULT_TOL: f64 = 1e-8;

/// Channel parameters of the beam-splitting analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Source mean photon number, >= 0.
    pub mu: f64,
    /// Eavesdropper beam-splitter transmission, strictly inside (0, 1).
    pub eta: f64,
    /// Bob's tap transmission, in (0, 1].
    pub t: f64,
}

impl ChannelParams {
    fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::invalid("mu", format!("must be >= 0, got {}", self.mu)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid(
                "eta",
                format!("must be strictly inside (0, 1), got {}", self.eta),
            ));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::invalid("t", format!("must be in (0, 1], got {}", self.t)));
        }
        Ok(())
    }
}

/// Information bounds for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoBoundResult {
    /// Bound for the forward (source -> encoder) leg.
    pub i_ab: f64,
    /// Bound for the return (encoder -> source) leg.
    pub i_ba: f64,
    /// Overall bound, `min(i_ab, i_ba)`.
    pub i_e: f64,
    /// Largest series length used across the two legs.
    pub n_truncation: u64,
    /// Rigorous bound on the neglected series mass, below the requested
    /// tolerance.
    pub truncation_error_bound: f64,
}

/// Factors of the raw key rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Protocol sifting factor, `(1 - c) / N`, in (0, 1].
    pub q: f64,
    /// Pulse repetition rate in Hz, > 0.
    pub f_rep: f64,
    /// Channel transmission, in (0, 1].
    pub t_link: f64,
    /// Detector efficiency, in (0, 1].
    pub eta_det: f64,
}

impl RateParams {
    /// Rate factors for a protocol instance with `n_angles` screening angles
    /// and authentication fraction `c`.
    pub fn from_protocol(
        n_angles: u32,
        c: f64,
        f_rep: f64,
        t_link: f64,
        eta_det: f64,
    ) -> Result<Self> {
        if n_angles < 2 {
            return Err(Error::invalid("n_angles", format!("must be >= 2, got {n_angles}")));
        }
        if !(0.0..1.0).contains(&c) {
            return Err(Error::invalid("c", format!("must be in [0, 1), got {c}")));
        }
        Ok(RateParams {
            q: (1.0 - c) / n_angles as f64,
            f_rep,
            t_link,
            eta_det,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::invalid("q", format!("must be in (0, 1], got {}", self.q)));
        }
        if !(self.f_rep > 0.0) {
            return Err(Error::invalid("f_rep", format!("must be > 0, got {}", self.f_rep)));
        }
        if !(self.t_link > 0.0 && self.t_link <= 1.0) {
            return Err(Error::invalid(
                "t_link",
                format!("must be in (0, 1], got {}", self.t_link),
            ));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::invalid(
                "eta_det",
                format!("must be in (0, 1], got {}", self.eta_det),
            ));
        }
        Ok(())
    }
}

/// One grid point of an `I_E(mu)` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mu: f64,
    pub eta: f64,
    pub t: f64,
    pub i_e: f64,
    /// True on the point injected (or found) exactly at `mu*` for this curve.
    pub is_critical: bool,
}

/// Per-curve critical annotation: where the curve crosses the critical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub eta: f64,
    pub t: f64,
    pub mu_star: f64,
    pub i_e_at_mu_star: f64,
}

/// Optimal estimation fidelity `I(n)` for `n` identically polarized photons:
/// `1/2 + 2^{-(n+1)} * sum_{l=0}^{n-1} sqrt(C(n,l) * C(n,l+1))`.
///
/// The empty sum makes `I(0) = 1/2` exact. Binomials run through a
/// logarithmic recurrence so the series stays finite far beyond the ~n = 60
/// overflow point of direct products.
pub fn fidelity_bound(n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let ln2 = std::f64::consts::LN_2;
    let mut ln_c = 0.0; // ln C(n, 0)
    let mut sum = 0.0;
    for l in 0..n {
        let ln_next = ln_c + ((n - l) as f64 / (l + 1) as f64).ln();
        sum += (0.5 * (ln_c + ln_next) - (n as f64 + 1.0) * ln2).exp();
        ln_c = ln_next;
    }
    0.5 + sum
}

struct SeriesEval {
    value: f64,
    n_terms: u64,
    tail_bound: f64,
}

/// Poisson-weighted fidelity series, truncated once the remaining Poisson
/// mass (a rigorous error bound, since every `I(n) < 1`) drops below `tol`.
fn poisson_series(lambda: f64, tol: f64) -> SeriesEval {
    debug_assert!(lambda >= 0.0 && tol > 0.0);
    // Poisson mass essentially never extends past lambda + 20*sqrt(lambda);
    // the cap guards against tol too small for f64 cancellation to reach.
    let n_cap = (lambda + 20.0 * lambda.sqrt() + 50.0).ceil() as u64;
    let mut ln_p = -lambda; // ln P(n)
    let mut cumulative = 0.0;
    let mut sum = 0.0;
    let mut n = 0u64;
    loop {
        let p = ln_p.exp();
        sum += p * fidelity_bound(n);
        cumulative += p;
        let tail = (1.0 - cumulative).max(0.0);
        if tail < tol || n >= n_cap {
            return SeriesEval {
                value: sum,
                n_terms: n + 1,
                tail_bound: tail,
            };
        }
        ln_p += (lambda / (n + 1) as f64).ln();
        n += 1;
    }
}

/// Average information available from a Poisson-distributed photon harvest
/// with mean `lambda`: `sum_n e^{-lambda} lambda^n / n! * I(n)`.
pub fn poisson_weighted_info(lambda: f64, tol: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", format!("must be >= 0, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    Ok(poisson_series(lambda, tol).value)
}

/// Information bounds for both legs of the two-way channel under a
/// beam-splitting attack: the stolen means are `(1-eta)*mu` forward and
/// `(1-eta)*eta*t*mu` on the return.
pub fn eve_info(params: ChannelParams, tol: f64) -> Result<InfoBoundResult> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let lambda_ab = (1.0 - params.eta) * params.mu;
    let lambda_ba = (1.0 - params.eta) * (params.eta * params.t * params.mu);
    let ab = poisson_series(lambda_ab, tol);
    let ba = poisson_series(lambda_ba, tol);
    Ok(InfoBoundResult {
        i_ab: ab.value,
        i_ba: ba.value,
        i_e: ab.value.min(ba.value),
        n_truncation: ab.n_terms.max(ba.n_terms),
        truncation_error_bound: ab.tail_bound.max(ba.tail_bound),
    })
}

/// Critical source intensity `mu* = 1/((1-eta)*eta*t)`: the mean that leaves
/// exactly one photon (on average) in the attacker's return-leg harvest.
pub fn critical_mu(eta: f64, t: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(
            "eta",
            format!("must be strictly inside (0, 1), got {eta}"),
        ));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid("t", format!("must be in (0, 1], got {t}")));
    }
    Ok(1.0 / ((1.0 - eta) * eta * t))
}

/// The information bound at the critical intensity: the return-leg series at
/// mean one, about 0.6900 for every `(eta, t)`.
pub fn critical_info() -> f64 {
    poisson_series(1.0, DEFAULT_TOL).value
}

/// Raw key rate in bits per second: `q * mu * f_rep * t_link * eta_det`.
pub fn raw_key_rate(rate: RateParams, mu: f64) -> Result<f64> {
    rate.validate()?;
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", format!("must be >= 0, got {mu}")));
    }
    Ok(rate.q * mu * rate.f_rep * rate.t_link * rate.eta_det)
}

/// Evaluates `I_E(mu)` over `mu_grid` for each `eta`, at a single tap
/// transmission `t`.
///
/// Each curve additionally carries a point exactly at its `mu*` (injected
/// when the grid does not already contain it and `mu*` lies inside the grid
/// range), flagged `is_critical`. Points are grouped by `eta` in input order
/// with `mu` ascending within a group.
pub fn sweep_curve(
    mu_grid: &[f64],
    eta_list: &[f64],
    t: f64,
    tol: f64,
) -> Result<Vec<CurvePoint>> {
    if mu_grid.is_empty() {
        return Err(Error::invalid("mu_grid", "must be nonempty"));
    }
    if !mu_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("mu_grid", "must be strictly ascending"));
    }
    if eta_list.is_empty() {
        return Err(Error::invalid("eta_list", "must be nonempty"));
    }
    let mut points = Vec::with_capacity(eta_list.len() * (mu_grid.len() + 1));
    for &eta in eta_list {
        let mu_star = critical_mu(eta, t)?;
        let in_range = (mu_grid[0]..=mu_grid[mu_grid.len() - 1]).contains(&mu_star);
        let mut mus: Vec<(f64, bool)> = mu_grid.iter().map(|&mu| (mu, mu == mu_star)).collect();
        if in_range && !mu_grid.contains(&mu_star) {
            let at = mus.partition_point(|&(mu, _)| mu < mu_star);
            mus.insert(at, (mu_star, true));
        }
        for (mu, is_critical) in mus {
            let bounds = eve_info(ChannelParams { mu, eta, t }, tol)?;
            points.push(CurvePoint {
                mu,
                eta,
                t,
                i_e: bounds.i_e,
                is_critical,
            });
        }
    }
    Ok(points)
}

/// The `(mu*, I_E(mu*))` annotation for each curve of a sweep.
pub fn critical_annotations(
    eta_list: &[f64],
    t: f64,
    tol: f64,
) -> Result<Vec<CriticalPoint>> {
    eta_list
        .iter()
        .map(|&eta| {
            let mu_star = critical_mu(eta, t)?;
            let bounds = eve_info(ChannelParams { mu: mu_star, eta, t }, tol)?;
            Ok(CriticalPoint {
                eta,
                t,
                mu_star,
                i_e_at_mu_star: bounds.i_e,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact-arithmetic oracle for small n: Pascal-triangle binomials in
    /// u128, square roots taken only at the end.
    fn fidelity_oracle(n: usize) -> f64 {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128];
            for w in row.windows(2) {
                next.push(w[0] + w[1]);
            }
            next.push(1);
            row = next;
        }
        let sum: f64 = (0..n)
            .map(|l| ((row[l] as f64) * (row[l + 1] as f64)).sqrt())
            .sum();
        0.5 + sum / 2f64.powi(n as i32 + 1)
    }

    #[test]
    fn fidelity_small_values() {
        assert_eq!(fidelity_bound(0), 0.5);
        assert!((fidelity_bound(1) - 0.75).abs() < 1e-15);
        let i2 = 0.5 + std::f64::consts::SQRT_2 / 4.0;
        assert!((fidelity_bound(2) - i2).abs() < 1e-12);
    }

    #[test]
    fn fidelity_matches_exact_binomial_oracle() {
        for n in 0..=30 {
            let diff = (fidelity_bound(n as u64) - fidelity_oracle(n)).abs();
            assert!(diff < 1e-12, "n={n} diff={diff}");
        }
    }

    #[test]
    fn fidelity_monotone_and_below_one() {
        let mut prev = fidelity_bound(0);
        for n in 1..=1000 {
            let cur = fidelity_bound(n);
            assert!(cur > prev, "not increasing at n={n}");
            assert!(cur < 1.0, "reached 1 at n={n}");
            prev = cur;
        }
    }

    #[test]
    fn series_vacuum_is_half() {
        assert_eq!(poisson_weighted_info(0.0, 1e-10).unwrap(), 0.5);
    }

    #[test]
    fn series_at_mean_one() {
        // 40-digit reference for the mean-one series, frozen from an
        // independent arbitrary-precision evaluation.
        let reference = 0.6900255605860062;
        let v = poisson_weighted_info(1.0, 1e-12).unwrap();
        assert!((v - reference).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn series_spot_values() {
        let v5 = poisson_weighted_info(5.0, 1e-12).unwrap();
        let v10 = poisson_weighted_info(10.0, 1e-12).unwrap();
        assert!((v5 - 0.9272237559175039).abs() < 1e-9, "got {v5}");
        assert!((v10 - 0.9713910597815225).abs() < 1e-9, "got {v10}");
    }

    #[test]
    fn series_monotone_in_lambda() {
        let mut prev = 0.0;
        for i in 0..=60 {
            let v = poisson_weighted_info(i as f64 * 0.5, 1e-10).unwrap();
            assert!(v > prev || i == 0, "not increasing at lambda={}", i as f64 * 0.5);
            assert!((0.5..1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn series_rejects_bad_arguments() {
        assert!(poisson_weighted_info(-1.0, 1e-8).is_err());
        assert!(poisson_weighted_info(1.0, 0.0).is_err());
        assert!(poisson_weighted_info(f64::NAN, 1e-8).is_err());
    }

    #[test]
    fn critical_info_value() {
        assert!((critical_info() - 0.6900255605860062).abs() < 1e-7);
        assert!((critical_info() - 0.6900).abs() < 5e-4);
        let advantage = 1.0 - critical_info();
        assert!((0.305..=0.315).contains(&advantage), "advantage {advantage}");
    }

    #[test]
    fn critical_mu_examples() {
        assert!((critical_mu(0.5, 0.7).unwrap() - 5.714285714285714).abs() < 1e-12);
        assert_eq!(critical_mu(0.5, 1.0).unwrap(), 4.0);
        assert!(critical_mu(0.0, 0.7).is_err());
        assert!(critical_mu(1.0, 0.7).is_err());
        assert!(critical_mu(0.5, 0.0).is_err());
        assert!(critical_mu(0.5, 1.5).is_err());
    }

    #[test]
    fn eve_info_at_critical_mu_is_invariant() {
        let reference = critical_info();
        for &(eta, t) in &[(0.5, 0.7), (0.2, 1.0), (0.83, 0.91), (0.11, 0.45)] {
            let mu = critical_mu(eta, t).unwrap();
            let r = eve_info(ChannelParams { mu, eta, t }, 1e-9).unwrap();
            assert!(
                (r.i_ba - reference).abs() < 1e-6,
                "eta={eta} t={t} i_ba={}",
                r.i_ba
            );
            assert_eq!(r.i_e, r.i_ba.min(r.i_ab));
        }
    }

    #[test]
    fn eve_info_vacuum() {
        let r = eve_info(ChannelParams { mu: 0.0, eta: 0.5, t: 0.7 }, 1e-9).unwrap();
        assert_eq!(r.i_e, 0.5);
        assert_eq!(r.i_ab, 0.5);
    }

    #[test]
    fn return_leg_never_exceeds_forward_leg() {
        for i in 1..10 {
            for j in 1..10 {
                for &t in &[0.3, 0.7, 1.0] {
                    let p = ChannelParams {
                        mu: i as f64 * 2.0,
                        eta: j as f64 / 10.0,
                        t,
                    };
                    let r = eve_info(p, 1e-9).unwrap();
                    assert!(r.i_ba <= r.i_ab, "{p:?}");
                    assert_eq!(r.i_e, r.i_ba);
                }
            }
        }
    }

    #[test]
    fn rate_formula() {
        let rate = RateParams {
            q: 0.3,
            f_rep: 1e6,
            t_link: 0.25,
            eta_det: 0.1,
        };
        assert_eq!(raw_key_rate(rate, 6.0).unwrap(), 45_000.0);
        assert_eq!(raw_key_rate(rate, 0.0).unwrap(), 0.0);
        let from_protocol = RateParams::from_protocol(3, 0.1, 1e6, 0.25, 0.1).unwrap();
        assert!((from_protocol.q - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sweep_injects_critical_point() {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let points = sweep_curve(&grid, &[0.5], 0.7, 1e-9).unwrap();
        assert_eq!(points.len(), grid.len() + 1);
        let critical: Vec<_> = points.iter().filter(|p| p.is_critical).collect();
        assert_eq!(critical.len(), 1);
        assert!((critical[0].mu - 5.714285714285714).abs() < 1e-12);
        assert!((critical[0].i_e - 0.6900).abs() < 5e-4);
        // ascending mu, curve monotone nondecreasing, starts at the vacuum
        assert_eq!(points[0].i_e, 0.5);
        for w in points.windows(2) {
            assert!(w[0].mu < w[1].mu);
            assert!(w[0].i_e <= w[1].i_e + 1e-12);
        }
    }

    #[test]
    fn sweep_skips_out_of_range_critical_point() {
        // eta=0.5, t=0.7 puts mu* at 5.71, outside [0, 2]
        let grid = [0.0, 1.0, 2.0];
        let points = sweep_curve(&grid, &[0.5], 0.7, 1e-9).unwrap();
        assert_eq!(points.len(), 3);
        assert!(points.iter().all(|p| !p.is_critical));
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        assert!(sweep_curve(&[1.0, 0.5], &[0.5], 0.7, 1e-9).is_err());
        assert!(sweep_curve(&[], &[0.5], 0.7, 1e-9).is_err());
        assert!(sweep_curve(&[0.0, 1.0], &[], 0.7, 1e-9).is_err());
    }

    #[test]
    fn annotations_match_curves() {
        let annotations = critical_annotations(&[0.2, 0.5, 0.8], 0.7, 1e-9).unwrap();
        assert_eq!(annotations.len(), 3);
        for a in &annotations {
            let expect = critical_mu(a.eta, a.t).unwrap();
            assert_eq!(a.mu_star, expect);
            assert!((a.i_e_at_mu_star - critical_info()).abs() < 1e-6);
        }
        // symmetric etas share mu* up to float association order
        let relative = (annotations[0].mu_star - annotations[2].mu_star).abs()
            / annotations[0].mu_star;
        assert!(relative < 1e-15, "{} vs {}", annotations[0].mu_star, annotations[2].mu_star);
    }

    proptest! {
        #[test]
        fn truncation_bound_is_honest(lambda in 0.0..30.0f64, tighter in prop::bool::ANY) {
            let tol = if tighter { 1e-10 } else { 1e-6 };
            let eval = poisson_series(lambda, tol);
            prop_assert!(eval.tail_bound < tol);
            // extending the series by 50 terms moves the value by at most
            // the reported bound
            let mut ln_p = -lambda;
            let mut extended = 0.0;
            for n in 0..eval.n_terms + 50 {
                extended += ln_p.exp() * fidelity_bound(n);
                ln_p += (lambda / (n + 1) as f64).ln();
            }
            prop_assert!((extended - eval.value).abs() <= eval.tail_bound + 1e-15);
        }

        #[test]
        fn critical_mu_symmetry(eta in 0.01..0.99f64, t in 0.05..1.0f64) {
            let a = critical_mu(eta, t).unwrap();
            let b = critical_mu(1.0 - eta, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs());
            // minimized at eta = 1/2
            prop_assert!(critical_mu(0.5, t).unwrap() <= a + 1e-12);
        }

        #[test]
        fn rate_linear_in_mu(mu in 0.0..100.0f64, scale in 0.1..10.0f64) {
            let rate = RateParams { q: 0.25, f_rep: 1e6, t_link: 0.8, eta_det: 0.6 };
            let base = raw_key_rate(rate, mu).unwrap();
            let scaled = raw_key_rate(rate, mu * scale).unwrap();
            prop_assert!((scaled - base * scale).abs() <= 1e-9 * scaled.abs().max(1.0));
        }
    }
}
