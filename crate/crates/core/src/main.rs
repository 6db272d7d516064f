//! Command-line front end: `simulate`, `analyze`, `report`, and `selfcheck`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twoway_qkd::config::parse_config;
use twoway_qkd::error::{Error, Result};
use twoway_qkd::protocol::{run_session, Verdict};
use twoway_qkd::report::{
    annotations_file_name, curves_file_name, fmt_sig9, parse_transcript, summary_pairs,
    write_annotations, write_curves, write_summary, write_transcript,
};
use twoway_qkd::{critical_annotations, selfcheck, sweep_curve};

/// A session verdict other than acceptance.
const EXIT_DETECTED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "twoway-qkd",
    version,
    about = "Simulate and analyze a two-way QKD protocol with polarized coherent pulses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines (`#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Single-key override, repeatable; applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Seed override; beats the file and `--set`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Adversary override; beats the file and `--set`.
    #[arg(long, global = true, value_name = "MODEL")]
    attack: Option<String>,

    /// Suppress stdout; communicate through files and the exit code.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol session; write `transcript.csv` and `summary.txt`.
    Simulate,
    /// Sweep the eavesdropper bound over mu; write `curves_t{t}.csv` and
    /// `annotations_t{t}.csv` per tap transmission.
    Analyze,
    /// Re-derive and print the summary of a stored `transcript.csv`.
    Report,
    /// Run the built-in verification suite.
    Selfcheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io { .. } => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_USAGE),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Analyze => cmd_analyze(cli),
        Command::Report => cmd_report(cli),
        Command::Selfcheck => cmd_selfcheck(cli),
    }
}

/// `--set` pairs in order, then the dedicated flags, so the flags win.
fn collect_overrides(cli: &Cli) -> Result<Vec<(String, String)>> {
    let mut overrides = Vec::new();
    for item in &cli.set {
        let Some((key, value)) = item.split_once('=') else {
            return Err(Error::config(item.clone(), "expected KEY=VALUE"));
        };
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(attack) = &cli.attack {
        overrides.push(("attack".to_string(), attack.clone()));
    }
    Ok(overrides)
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn ensure_out_dir(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))
}

fn cmd_simulate(cli: &Cli) -> Result<ExitCode> {
    let overrides = collect_overrides(cli)?;
    let settings = parse_config(cli.config.as_deref(), &overrides)?;
    let transcript = run_session(&settings.session, settings.attack())?;

    ensure_out_dir(cli)?;
    let transcript_path = cli.out.join("transcript.csv");
    write_file(&transcript_path, |w| write_transcript(&transcript, w))?;
    let summary_path = cli.out.join("summary.txt");
    write_file(&summary_path, |w| write_summary(&transcript, w))?;

    if !cli.quiet {
        for (key, value) in summary_pairs(&transcript) {
            println!("{key} = {value}");
        }
        println!("wrote {}", transcript_path.display());
        println!("wrote {}", summary_path.display());
    }
    Ok(if transcript.verdict == Verdict::Accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DETECTED)
    })
}

fn cmd_analyze(cli: &Cli) -> Result<ExitCode> {
    let overrides = collect_overrides(cli)?;
    let settings = parse_config(cli.config.as_deref(), &overrides)?;
    let sweep = &settings.sweep;
    let grid = sweep.mu_grid();

    ensure_out_dir(cli)?;
    for &t in &sweep.t_list {
        let points = sweep_curve(&grid, &sweep.eta_list, t, sweep.tol)?;
        let annotations = critical_annotations(&sweep.eta_list, t, sweep.tol)?;
        let curves_path = cli.out.join(curves_file_name(t));
        write_file(&curves_path, |w| write_curves(&points, w))?;
        let annotations_path = cli.out.join(annotations_file_name(t));
        write_file(&annotations_path, |w| write_annotations(&annotations, w))?;
        if !cli.quiet {
            println!(
                "wrote {} ({} points, {} curves)",
                curves_path.display(),
                points.len(),
                sweep.eta_list.len()
            );
            println!("wrote {}", annotations_path.display());
            for a in &annotations {
                println!(
                    "  eta = {}: mu* = {}, bound {}",
                    fmt_sig9(a.eta),
                    fmt_sig9(a.mu_star),
                    fmt_sig9(a.i_e_at_mu_star)
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(cli: &Cli) -> Result<ExitCode> {
    let path = cli.out.join("transcript.csv");
    let parsed = parse_transcript(&path)?;
    let verdict = parsed
        .summary_value("verdict")
        .ok_or_else(|| Error::Malformed {
            path: path.display().to_string(),
            reason: "summary block lacks a verdict".into(),
        })?
        .to_string();

    if !cli.quiet {
        for (key, value) in &parsed.config {
            println!("config {key} = {value}");
        }
        for (key, value) in &parsed.summary {
            println!("{key} = {value}");
        }
        // independent recomputation from the raw rows
        let qber = parsed
            .qber()
            .map_or_else(|| "-".to_string(), fmt_sig9);
        println!("recomputed_qber = {qber}");
        println!("recomputed_sift_rate = {}", fmt_sig9(parsed.sift_rate()));
        println!("rounds_on_file = {}", parsed.rounds.len());
    }
    Ok(if verdict == "accepted" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DETECTED)
    })
}

fn cmd_selfcheck(cli: &Cli) -> Result<ExitCode> {
    let checks = selfcheck::run_all();
    let mut failed = 0;
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        if cli.quiet {
            println!("{status} {}", check.name);
        } else {
            println!("{status} {}: {}", check.name, check.detail);
        }
        if !check.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", checks.len());
        Ok(ExitCode::from(EXIT_DETECTED))
    } else {
        if !cli.quiet {
            println!("all {} checks passed", checks.len());
        }
        Ok(ExitCode::SUCCESS)
    }
}
