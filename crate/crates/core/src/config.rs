//! Flat `key = value` configuration: file parsing, override application, and
//! the sweep grid specification.
//!
//! Precedence is defaults, then file entries in order, then overrides in
//! order; the last assignment of a key wins. Every diagnostic names the key
//! exactly as the user wrote it.

use std::path::Path;

use crate::adversary::AttackModel;
use crate::error::{Error, Result};
use crate::protocol::{PhotonMode, SessionConfig};

/// Grid specification for `I_E(mu)` sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mu_min: f64,
    pub mu_max: f64,
    /// Number of equal grid intervals; the grid has `mu_steps + 1` points.
    pub mu_steps: u32,
    pub eta_list: Vec<f64>,
    /// One output curve file per tap transmission.
    pub t_list: Vec<f64>,
    /// Series truncation tolerance.
    pub tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            mu_min: 0.0,
            mu_max: 20.0,
            mu_steps: 80,
            eta_list: (1..=9).map(|i| i as f64 / 10.0).collect(),
            t_list: vec![0.7, 0.9],
            tol: 1e-9,
        }
    }
}

impl SweepSpec {
    /// The ascending grid points.
    pub fn mu_grid(&self) -> Vec<f64> {
        let step = (self.mu_max - self.mu_min) / self.mu_steps as f64;
        (0..=self.mu_steps)
            .map(|i| self.mu_min + i as f64 * step)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu_min >= 0.0) {
            return Err(Error::config("mu_min", format!("must be >= 0, got {}", self.mu_min)));
        }
        if !(self.mu_max > self.mu_min) {
            return Err(Error::config(
                "mu_max",
                format!("must exceed mu_min, got {} <= {}", self.mu_max, self.mu_min),
            ));
        }
        if self.mu_steps == 0 {
            return Err(Error::config("mu_steps", "must be >= 1"));
        }
        if self.eta_list.is_empty() {
            return Err(Error::config("eta_list", "must be nonempty"));
        }
        for &eta in &self.eta_list {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::config(
                    "eta_list",
                    format!("entries must be strictly inside (0, 1), got {eta}"),
                ));
            }
        }
        if self.t_list.is_empty() {
            return Err(Error::config("t_list", "must be nonempty"));
        }
        for &t in &self.t_list {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config(
                    "t_list",
                    format!("entries must be in (0, 1], got {t}"),
                ));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", format!("must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttackKind {
    Honest,
    Pns,
    Impersonation,
    Trojan,
}

/// Fully resolved configuration: session parameters, adversary selection,
/// and sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub session: SessionConfig,
    pub sweep: SweepSpec,
    attack_kind: AttackKind,
    pns_eta: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            session: SessionConfig::default(),
            sweep: SweepSpec::default(),
            attack_kind: AttackKind::Honest,
            pns_eta: 0.5,
        }
    }
}

impl Settings {
    /// Defaults, then the optional file, then `overrides` in order.
    pub fn from_sources(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Settings> {
        let mut settings = Settings::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (key, value) in parse_kv_text(&text, path)? {
                settings.set(&key, &value)?;
            }
        }
        for (key, value) in overrides {
            settings.set(key, value)?;
        }
        settings.validate()?;
        Ok(settings)
    }

    /// The selected adversary.
    pub fn attack(&self) -> AttackModel {
        match self.attack_kind {
            AttackKind::Honest => AttackModel::Honest,
            AttackKind::Pns => AttackModel::Pns { eta: self.pns_eta },
            AttackKind::Impersonation => AttackModel::Impersonation,
            AttackKind::Trojan => AttackModel::TrojanHorse,
        }
    }

    /// Final cross-field validation (individual keys are checked on
    /// assignment).
    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        self.sweep.validate()?;
        if self.attack_kind == AttackKind::Pns && !(self.pns_eta > 0.0 && self.pns_eta < 1.0) {
            return Err(Error::config(
                "pns_eta",
                format!("must be strictly inside (0, 1), got {}", self.pns_eta),
            ));
        }
        Ok(())
    }

    /// Assigns one key, validating its range under the name the caller used.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" | "n_angles" => {
                let n: u32 = parse_num(key, value)?;
                if n < 2 {
                    return Err(Error::config(key, format!("must be >= 2, got {n}")));
                }
                self.session.n_angles = n;
            }
            "c" => {
                let c: f64 = parse_num(key, value)?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::config(key, format!("must be in [0, 1], got {c}")));
                }
                self.session.amode_prob = c;
            }
            "mu" => {
                let mu: f64 = parse_num(key, value)?;
                if !(mu >= 0.0) {
                    return Err(Error::config(key, format!("must be >= 0, got {mu}")));
                }
                self.session.mean_photons = mu;
            }
            "t" => {
                let t: f64 = parse_num(key, value)?;
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::config(key, format!("must be in (0, 1], got {t}")));
                }
                self.session.bob_tap_transmission = t;
            }
            "t_link" => {
                let t: f64 = parse_num(key, value)?;
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::config(key, format!("must be in (0, 1], got {t}")));
                }
                self.session.channel_transmission = t;
            }
            "eta_det" => {
                let e: f64 = parse_num(key, value)?;
                if !(e > 0.0 && e <= 1.0) {
                    return Err(Error::config(key, format!("must be in (0, 1], got {e}")));
                }
                self.session.detector_efficiency = e;
            }
            "f_rep" => {
                let f: f64 = parse_num(key, value)?;
                if !(f > 0.0) {
                    return Err(Error::config(key, format!("must be > 0, got {f}")));
                }
                self.session.pulse_rate = f;
            }
            "target_bits" => {
                let n: u64 = parse_num(key, value)?;
                if n == 0 {
                    return Err(Error::config(key, "must be >= 1"));
                }
                self.session.target_key_bits = n;
            }
            "max_rounds" => {
                let n: u64 = parse_num(key, value)?;
                if n == 0 {
                    return Err(Error::config(key, "must be >= 1"));
                }
                self.session.max_rounds = n;
            }
            "seed" => self.session.seed = parse_num(key, value)?,
            "photon_mode" => {
                self.session.photon_mode = match value {
                    "coherent" => PhotonMode::Coherent,
                    "ideal" => PhotonMode::IdealSinglePhoton,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("expected `coherent` or `ideal`, got `{other}`"),
                        ))
                    }
                };
            }
            "attack" => {
                self.attack_kind = match value {
                    "honest" => AttackKind::Honest,
                    "pns" => AttackKind::Pns,
                    "impersonation" => AttackKind::Impersonation,
                    "trojan" => AttackKind::Trojan,
                    other => {
                        return Err(Error::config(
                            key,
                            format!(
                                "expected `honest`, `pns`, `impersonation`, or `trojan`, got `{other}`"
                            ),
                        ))
                    }
                };
            }
            "eta" | "pns_eta" => {
                let eta: f64 = parse_num(key, value)?;
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(Error::config(
                        key,
                        format!("must be strictly inside (0, 1), got {eta}"),
                    ));
                }
                self.pns_eta = eta;
            }
            "trojan_mu" => {
                let nu: f64 = parse_num(key, value)?;
                if !(nu >= 0.0) {
                    return Err(Error::config(key, format!("must be >= 0, got {nu}")));
                }
                self.session.trojan_mean_photons = Some(nu);
            }
            "mu_min" => self.sweep.mu_min = parse_num(key, value)?,
            "mu_max" => self.sweep.mu_max = parse_num(key, value)?,
            "mu_steps" => self.sweep.mu_steps = parse_num(key, value)?,
            "eta_list" => self.sweep.eta_list = parse_list(key, value)?,
            "t_list" => self.sweep.t_list = parse_list(key, value)?,
            "tol" => self.sweep.tol = parse_num(key, value)?,
            other => {
                return Err(Error::config(other, "unknown key"));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}` as a number")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{item}` in list")))
        })
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment anywhere, blank lines are
/// skipped.
fn parse_kv_text(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                reason: format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
            });
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses a config file and applies `overrides`; the CLI entry point.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Settings> {
    Settings::from_sources(path, overrides)
}
