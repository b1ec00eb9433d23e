//! `fairaudit`: command-line driver for the two-setting fairness audit.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fairaudit_core::compress::Subsampling;
use fairaudit_core::report::ReportFormat;
use fairaudit_core::ScoreMode;
use serde::de::DeserializeOwned;

use crate::config::{AuditConfig, Phase};

#[derive(Parser, Debug)]
#[command(name = "fairaudit", version, about = "Fairness audit for GAN image detectors")]
struct Cli {
    /// TOML audit configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Manifest for the selected setting.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Prediction file for the selected setting.
    #[arg(long, global = true)]
    predictions: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "uncompressed")]
    setting: Phase,
    /// JPEG quality factor used by `compress`.
    #[arg(long, global = true)]
    quality: Option<u8>,
    /// Chroma subsampling used by `compress` (420 or 444).
    #[arg(long, global = true)]
    subsampling: Option<String>,
    #[arg(long, global = true)]
    dp_threshold: Option<f64>,
    /// truth_class_score or predicted_confidence.
    #[arg(long, global = true)]
    score_mode: Option<String>,
    /// Output format; repeat for several (markdown, csv, json).
    #[arg(long, global = true)]
    format: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check a manifest and report group sizes.
    Validate,
    /// Re-encode the uncompressed corpus as JPEG.
    Compress,
    /// Compute the audit for one setting.
    Evaluate,
    /// Compare the uncompressed and compressed audits.
    Compare,
    /// Write a combined markdown report.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Compress => "compress",
            Command::Evaluate => "evaluate",
            Command::Compare => "compare",
            Command::Report => "report",
        }
    }
}

fn parse_enum<T: DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| fairaudit_core::Error::InvalidConfig(format!("invalid {what} {s:?}")).into())
}

fn build_config(cli: &Cli) -> Result<AuditConfig> {
    let mut cfg = match &cli.config {
        Some(path) => AuditConfig::load(path)?,
        None => AuditConfig::default(),
    };
    if let Some(p) = &cli.manifest {
        cfg.phase_mut(cli.setting).manifest = Some(p.clone());
    }
    if let Some(p) = &cli.predictions {
        cfg.phase_mut(cli.setting).predictions = Some(p.clone());
    }
    if let Some(q) = cli.quality {
        cfg.compression.quality = q;
    }
    if let Some(s) = &cli.subsampling {
        cfg.compression.subsampling = s.parse::<Subsampling>()?;
    }
    if let Some(t) = cli.dp_threshold {
        cfg.dp_threshold = t;
    }
    if let Some(m) = &cli.score_mode {
        cfg.score_mode = parse_enum::<ScoreMode>(m, "score mode")?;
    }
    if !cli.format.is_empty() {
        cfg.formats = cli
            .format
            .iter()
            .map(|f| f.parse::<ReportFormat>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()
        .map_err(|e| fairaudit_core::Error::InvalidConfig(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &AuditConfig) -> Result<String> {
    match cli.command {
        Command::Validate => commands::cmd_validate(cfg, cli.setting),
        Command::Compress => commands::cmd_compress(cfg),
        Command::Evaluate => commands::cmd_evaluate(cfg, cli.setting),
        Command::Compare => commands::cmd_compare(cfg),
        Command::Report => commands::cmd_report(cfg),
    }
}

/// Appends one JSON line per invocation to `run.log`. This is the only
/// output carrying a timestamp.
fn log_run(cfg: &AuditConfig, cli: &Cli, code: i32, message: &str) -> Result<()> {
    if !cfg.out_dir.is_dir() {
        return Ok(());
    }
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let entry = serde_json::json!({
        "timestamp": ts,
        "command": cli.command.name(),
        "setting": cli.setting.name(),
        "exit_code": code,
        "message": message,
    });
    let path = cfg.out_dir.join("run.log");
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{entry}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(commands::exit_code(&e) as u8);
        }
    };
    let (code, message) = match run(&cli, &cfg) {
        Ok(summary) => {
            println!("{summary}");
            (commands::EXIT_OK, summary)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            (commands::exit_code(&e), format!("{e:#}"))
        }
    };
    if let Err(e) = log_run(&cfg, &cli, code, &message) {
        eprintln!("warning: could not write run log: {e:#}");
    }
    ExitCode::from(code as u8)
}
