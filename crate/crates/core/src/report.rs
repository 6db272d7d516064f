//! Artifact emission and ingestion: the transcript file, the run summary,
//! and the sweep CSVs.
//!
//! All floating-point values are written with nine significant digits in a
//! fixed layout, so identical runs produce byte-identical files and goldens
//! diff cleanly. Every writer has a parser for the same schema.

use std::io::Write;
use std::path::Path;

use crate::analysis::{raw_key_rate, CriticalPoint, CurvePoint, RateParams};
use crate::error::{Error, Result};
use crate::optics::OutcomeKind;
use crate::protocol::{Mode, PhotonMode, Transcript};

/// Magic first line of a transcript file.
pub const TRANSCRIPT_MAGIC: &str = "# twoway-qkd transcript v1";

const TRANSCRIPT_HEADER: &str =
    "round,mode,theta,s,theta_star,alpha_a,alpha_b,k,outcome_alice,outcome_bob_tap,matched,sifted,integrity_ok,anomalies";
const CURVES_HEADER: &str = "mu,eta,t,i_e,is_critical";
const ANNOTATIONS_HEADER: &str = "eta,t,mu_star,i_e_at_mu_star";

/// Nine-significant-digit rendering: plain decimal while the exponent stays
/// in `[-4, 8]`, scientific outside, never trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (_, exp) = sci.split_once('e').expect("{:e} always carries an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..=8).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// `curves_t{t}.csv` for one tap transmission.
pub fn curves_file_name(t: f64) -> String {
    format!("curves_t{t}.csv")
}

/// `annotations_t{t}.csv` for one tap transmission.
pub fn annotations_file_name(t: f64) -> String {
    format!("annotations_t{t}.csv")
}

fn outcome_label(kind: OutcomeKind) -> &'static str {
    match kind {
        OutcomeKind::Bit(0) => "bit0",
        OutcomeKind::Bit(_) => "bit1",
        OutcomeKind::Empty => "empty",
        OutcomeKind::Ambiguous => "ambig",
    }
}

fn parse_outcome(label: &str) -> Option<OutcomeKind> {
    match label {
        "bit0" => Some(OutcomeKind::Bit(0)),
        "bit1" => Some(OutcomeKind::Bit(1)),
        "empty" => Some(OutcomeKind::Empty),
        "ambig" => Some(OutcomeKind::Ambiguous),
        _ => None,
    }
}

/// The `key = value` config echo embedded in transcripts.
pub fn config_pairs(transcript: &Transcript) -> Vec<(String, String)> {
    let cfg = &transcript.config;
    let mut pairs = vec![
        ("N".to_string(), cfg.n_angles.to_string()),
        ("c".to_string(), cfg.amode_prob.to_string()),
        ("mu".to_string(), cfg.mean_photons.to_string()),
        ("t".to_string(), cfg.bob_tap_transmission.to_string()),
        ("t_link".to_string(), cfg.channel_transmission.to_string()),
        ("eta_det".to_string(), cfg.detector_efficiency.to_string()),
        ("f_rep".to_string(), cfg.pulse_rate.to_string()),
        ("target_bits".to_string(), cfg.target_key_bits.to_string()),
        ("max_rounds".to_string(), cfg.max_rounds.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        (
            "photon_mode".to_string(),
            match cfg.photon_mode {
                PhotonMode::Coherent => "coherent".to_string(),
                PhotonMode::IdealSinglePhoton => "ideal".to_string(),
            },
        ),
        ("attack".to_string(), transcript.attack.name().to_string()),
    ];
    if let crate::adversary::AttackModel::Pns { eta } = transcript.attack {
        pairs.push(("pns_eta".to_string(), eta.to_string()));
    }
    if let Some(nu) = cfg.trojan_mean_photons {
        pairs.push(("trojan_mu".to_string(), nu.to_string()));
    }
    pairs
}

/// The `key = value` summary block: verdict, counts, rates, adversary
/// statistics.
pub fn summary_pairs(transcript: &Transcript) -> Vec<(String, String)> {
    let cfg = &transcript.config;
    let rounds = transcript.rounds.len();
    let sifted = transcript.alice_key_bits.len();
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_sig9);
    let integrity_checks = transcript
        .rounds
        .iter()
        .filter(|r| r.integrity_ok.is_some())
        .count();
    let integrity_failures = transcript
        .rounds
        .iter()
        .filter(|r| r.integrity_ok == Some(false))
        .count();
    let count_flag = |f: fn(&crate::protocol::AnomalyFlags) -> bool| {
        transcript
            .rounds
            .iter()
            .filter(|r| f(&r.anomaly_flags))
            .count()
    };
    let raw_rate = if cfg.amode_prob < 1.0 {
        RateParams::from_protocol(
            cfg.n_angles,
            cfg.amode_prob,
            cfg.pulse_rate,
            cfg.channel_transmission,
            cfg.detector_efficiency,
        )
        .and_then(|rate| raw_key_rate(rate, cfg.mean_photons))
        .ok()
    } else {
        None
    };
    let mut pairs = vec![
        ("verdict".to_string(), transcript.verdict.as_str().to_string()),
        ("rounds".to_string(), rounds.to_string()),
        ("sifted_bits".to_string(), sifted.to_string()),
        ("qber".to_string(), opt(transcript.qber())),
        ("sift_rate".to_string(), fmt_sig9(transcript.sift_rate())),
        ("raw_rate_bits_per_s".to_string(), opt(raw_rate)),
        ("integrity_checks".to_string(), integrity_checks.to_string()),
        ("integrity_failures".to_string(), integrity_failures.to_string()),
        (
            "ambiguous_alice".to_string(),
            count_flag(|f| f.ambiguous_alice).to_string(),
        ),
        (
            "ambiguous_tap".to_string(),
            count_flag(|f| f.ambiguous_tap).to_string(),
        ),
        (
            "foreign_rejected".to_string(),
            count_flag(|f| f.foreign_rejected).to_string(),
        ),
        (
            "hash_alice".to_string(),
            transcript
                .hash_alice
                .map_or_else(|| "-".to_string(), |h| format!("{h:016x}")),
        ),
        (
            "hash_bob".to_string(),
            transcript
                .hash_bob
                .map_or_else(|| "-".to_string(), |h| format!("{h:016x}")),
        ),
        (
            "eve_decoded_bits".to_string(),
            transcript.eve.decoded_bits.to_string(),
        ),
        (
            "eve_matching_bits".to_string(),
            transcript.eve.matching_bits.to_string(),
        ),
        (
            "eve_exposed_rounds".to_string(),
            transcript.eve.exposed_rounds.to_string(),
        ),
        (
            "eve_key_fraction".to_string(),
            if sifted > 0 {
                fmt_sig9(transcript.eve.matching_bits as f64 / sifted as f64)
            } else {
                "-".to_string()
            },
        ),
    ];
    if let Some(mean) = transcript.eve.pns_forward_mean {
        pairs.push(("pns_forward_mean".to_string(), fmt_sig9(mean)));
    }
    if let Some(mean) = transcript.eve.pns_return_mean {
        pairs.push(("pns_return_mean".to_string(), fmt_sig9(mean)));
    }
    pairs
}

/// Writes the full transcript: magic line, config echo, one CSV row per
/// round, summary block.
pub fn write_transcript(transcript: &Transcript, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{TRANSCRIPT_MAGIC}")?;
    for (key, value) in config_pairs(transcript) {
        writeln!(w, "# config: {key} = {value}")?;
    }
    writeln!(w, "{TRANSCRIPT_HEADER}")?;
    for (i, r) in transcript.rounds.iter().enumerate() {
        let mode = match r.mode {
            Mode::A => "A",
            Mode::T => "T",
        };
        let theta_star = r
            .theta_star
            .map_or_else(|| "-".to_string(), |a| fmt_sig9(a.radians()));
        let integrity = match r.integrity_ok {
            None => "-",
            Some(true) => "1",
            Some(false) => "0",
        };
        let names = r.anomaly_flags.names();
        let anomalies = if names.is_empty() {
            "-".to_string()
        } else {
            names.join(";")
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            i,
            mode,
            fmt_sig9(r.theta.radians()),
            r.s,
            theta_star,
            r.alpha_a_idx,
            r.alpha_b_idx,
            r.key_bit,
            outcome_label(r.outcome_alice.kind()),
            outcome_label(r.outcome_bob_tap.kind()),
            r.matched as u8,
            r.sifted as u8,
            integrity,
            anomalies,
        )?;
    }
    for (key, value) in summary_pairs(transcript) {
        writeln!(w, "# summary: {key} = {value}")?;
    }
    Ok(())
}

/// Writes the summary block alone as plain `key = value` lines.
pub fn write_summary(transcript: &Transcript, mut w: impl Write) -> std::io::Result<()> {
    for (key, value) in summary_pairs(transcript) {
        writeln!(w, "{key} = {value}")?;
    }
    Ok(())
}

/// Writes one sweep's curve points.
pub fn write_curves(points: &[CurvePoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CURVES_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig9(p.mu),
            fmt_sig9(p.eta),
            fmt_sig9(p.t),
            fmt_sig9(p.i_e),
            p.is_critical as u8,
        )?;
    }
    Ok(())
}

/// Writes one sweep's per-curve critical annotations.
pub fn write_annotations(points: &[CriticalPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{ANNOTATIONS_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_sig9(p.eta),
            fmt_sig9(p.t),
            fmt_sig9(p.mu_star),
            fmt_sig9(p.i_e_at_mu_star),
        )?;
    }
    Ok(())
}

/// One parsed transcript row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRound {
    pub round: u64,
    pub mode: Mode,
    pub theta: f64,
    pub s: u8,
    pub theta_star: Option<f64>,
    pub alpha_a_idx: u32,
    pub alpha_b_idx: u32,
    pub key_bit: u8,
    pub outcome_alice: OutcomeKind,
    pub outcome_bob_tap: OutcomeKind,
    pub matched: bool,
    pub sifted: bool,
    pub integrity_ok: Option<bool>,
    pub anomalies: Vec<String>,
}

/// A transcript read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTranscript {
    pub config: Vec<(String, String)>,
    pub rounds: Vec<ParsedRound>,
    pub summary: Vec<(String, String)>,
}

impl ParsedTranscript {
    /// Stored summary value, if present.
    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Error rate recomputed from the rows (sifted outcome vs key bit).
    pub fn qber(&self) -> Option<f64> {
        let sifted: Vec<_> = self.rounds.iter().filter(|r| r.sifted).collect();
        if sifted.is_empty() {
            return None;
        }
        let errors = sifted
            .iter()
            .filter(|r| r.outcome_alice != OutcomeKind::Bit(r.key_bit))
            .count();
        Some(errors as f64 / sifted.len() as f64)
    }

    /// Sift rate recomputed from the rows.
    pub fn sift_rate(&self) -> f64 {
        if self.rounds.is_empty() {
            return 0.0;
        }
        self.rounds.iter().filter(|r| r.sifted).count() as f64 / self.rounds.len() as f64
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Parses a transcript file produced by [`write_transcript`].
pub fn parse_transcript(path: &Path) -> Result<ParsedTranscript> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line == TRANSCRIPT_MAGIC => {}
        _ => return Err(malformed(path, format!("missing magic line `{TRANSCRIPT_MAGIC}`"))),
    }
    let mut config = Vec::new();
    let mut summary = Vec::new();
    let mut rounds = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in lines {
        let describe = |reason: String| malformed(path, format!("line {}: {reason}", lineno + 1));
        if let Some(rest) = line.strip_prefix("# config: ") {
            let (k, v) = rest
                .split_once(" = ")
                .ok_or_else(|| describe("bad config echo".to_string()))?;
            config.push((k.to_string(), v.to_string()));
        } else if let Some(rest) = line.strip_prefix("# summary: ") {
            let (k, v) = rest
                .split_once(" = ")
                .ok_or_else(|| describe("bad summary entry".to_string()))?;
            summary.push((k.to_string(), v.to_string()));
        } else if line == TRANSCRIPT_HEADER {
            seen_header = true;
        } else if line.trim().is_empty() || line.starts_with('#') {
            continue;
        } else {
            if !seen_header {
                return Err(describe("data row before column header".to_string()));
            }
            rounds.push(parse_round(line).map_err(describe)?);
        }
    }
    if !seen_header {
        return Err(malformed(path, "missing column header"));
    }
    Ok(ParsedTranscript {
        config,
        rounds,
        summary,
    })
}

fn parse_round(line: &str) -> std::result::Result<ParsedRound, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 14 {
        return Err(format!("expected 14 fields, got {}", fields.len()));
    }
    let num = |i: usize, what: &str| -> std::result::Result<f64, String> {
        fields[i]
            .parse()
            .map_err(|_| format!("bad {what} `{}`", fields[i]))
    };
    let int = |i: usize, what: &str| -> std::result::Result<u64, String> {
        fields[i]
            .parse()
            .map_err(|_| format!("bad {what} `{}`", fields[i]))
    };
    let mode = match fields[1] {
        "A" => Mode::A,
        "T" => Mode::T,
        other => return Err(format!("bad mode `{other}`")),
    };
    let theta_star = match fields[4] {
        "-" => None,
        v => Some(v.parse().map_err(|_| format!("bad theta_star `{v}`"))?),
    };
    let outcome_alice =
        parse_outcome(fields[8]).ok_or_else(|| format!("bad outcome `{}`", fields[8]))?;
    let outcome_bob_tap =
        parse_outcome(fields[9]).ok_or_else(|| format!("bad outcome `{}`", fields[9]))?;
    let flag = |i: usize| -> std::result::Result<bool, String> {
        match fields[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("bad flag `{other}`")),
        }
    };
    let integrity_ok = match fields[12] {
        "-" => None,
        "1" => Some(true),
        "0" => Some(false),
        other => return Err(format!("bad integrity flag `{other}`")),
    };
    let anomalies = if fields[13] == "-" {
        Vec::new()
    } else {
        fields[13].split(';').map(str::to_string).collect()
    };
    Ok(ParsedRound {
        round: int(0, "round")?,
        mode,
        theta: num(2, "theta")?,
        s: int(3, "s")? as u8,
        theta_star,
        alpha_a_idx: int(5, "alpha_a")? as u32,
        alpha_b_idx: int(6, "alpha_b")? as u32,
        key_bit: int(7, "k")? as u8,
        outcome_alice,
        outcome_bob_tap,
        matched: flag(10)?,
        sifted: flag(11)?,
        integrity_ok,
        anomalies,
    })
}

fn parse_csv_rows<'a>(
    path: &Path,
    text: &'a str,
    header: &str,
    fields: usize,
) -> Result<Vec<Vec<&'a str>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(line) if line == header => {}
        _ => return Err(malformed(path, format!("missing header `{header}`"))),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != fields {
            return Err(malformed(
                path,
                format!("line {}: expected {fields} fields, got {}", lineno + 2, row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a curves file produced by [`write_curves`].
pub fn parse_curves(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_rows(path, &text, CURVES_HEADER, 5)?
        .into_iter()
        .map(|row| {
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse()
                    .map_err(|_| malformed(path, format!("bad number `{}`", row[i])))
            };
            Ok(CurvePoint {
                mu: num(0)?,
                eta: num(1)?,
                t: num(2)?,
                i_e: num(3)?,
                is_critical: row[4] == "1",
            })
        })
        .collect()
}

/// Parses an annotations file produced by [`write_annotations`].
pub fn parse_annotations(path: &Path) -> Result<Vec<CriticalPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_rows(path, &text, ANNOTATIONS_HEADER, 4)?
        .into_iter()
        .map(|row| {
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse()
                    .map_err(|_| malformed(path, format!("bad number `{}`", row[i])))
            };
            Ok(CriticalPoint {
                eta: num(0)?,
                t: num(1)?,
                mu_star: num(2)?,
                i_e_at_mu_star: num(3)?,
            })
        })
        .collect()
}
