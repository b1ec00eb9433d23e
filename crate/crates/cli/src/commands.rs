use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use fairaudit_core::compress::{compress_corpus, verify_derived};
use fairaudit_core::manifest::validate_manifest_with;
use fairaudit_core::metrics::{evaluate_all_with, EvalOptions};
use fairaudit_core::predictions::{join_with, load_predictions};
use fairaudit_core::report::{
    compare_settings_with, flag_bias, render_comparison, render_flags, render_individual_table,
    render_pairwise_table_with, ReportFormat, SettingComparison,
};
use fairaudit_core::{write_json, AuditResult, Error as CoreError, Manifest, ValidationReport};

use crate::config::{AuditConfig, Phase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// A check completed but found problems; the report has already been written.
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailed {}

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ValidationFailed>() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Io { .. }
                | CoreError::Compression(_)
                | CoreError::InvalidConfig(_)
                | CoreError::OutputCollision { .. } => EXIT_IO,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_IO
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out_dir(cfg: &AuditConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
}

fn require(path: Option<PathBuf>, what: &str, phase: Phase) -> Result<PathBuf> {
    path.ok_or_else(|| {
        CoreError::InvalidConfig(format!("no {what} configured for the {} setting", phase.name())).into()
    })
}

fn summarize(report: &ValidationReport) -> String {
    format!(
        "{} error(s), {} warning(s)",
        report.errors().count(),
        report.warnings().count()
    )
}

pub fn cmd_validate(cfg: &AuditConfig, phase: Phase) -> Result<String> {
    let path = require(cfg.manifest_for(phase), "manifest", phase)?;
    let manifest = Manifest::load(&path)?;
    let report = validate_manifest_with(&manifest, cfg.uri_check);
    create_out_dir(cfg)?;
    let out = cfg.out_dir.join(format!("validation-{}.json", phase.name()));
    write_json(&out, &report)?;
    for f in report.errors().chain(report.warnings()) {
        println!("{:?} {}: {}", f.severity, f.code, f.message);
    }
    let summary = format!("{}: {} records, {}", path.display(), manifest.len(), summarize(&report));
    if report.has_errors() {
        return Err(ValidationFailed(summary).into());
    }
    Ok(summary)
}

pub fn cmd_compress(cfg: &AuditConfig) -> Result<String> {
    let src_path = require(cfg.uncompressed.manifest.clone(), "manifest", Phase::Uncompressed)?;
    let src = Manifest::load(&src_path)?;
    let dir = cfg.compressed_dir();
    let derived = compress_corpus(&src, &cfg.compression, &dir)?;
    let manifest_path = dir.join("manifest.jsonl");
    derived.write(&manifest_path)?;
    let reloaded = Manifest::load(&manifest_path)?;
    let report = verify_derived(&src, &reloaded);
    write_json(&dir.join("verify.json"), &report)?;
    let summary = format!(
        "{} images -> {} ({}), verification: {}",
        derived.len(),
        manifest_path.display(),
        derived.setting(),
        summarize(&report)
    );
    if report.has_errors() {
        return Err(ValidationFailed(summary).into());
    }
    Ok(summary)
}

fn audit_path(cfg: &AuditConfig, phase: Phase) -> PathBuf {
    cfg.out_dir.join(format!("audit-{}.json", phase.name()))
}

fn rendered_tables(cfg: &AuditConfig, r: &AuditResult, phase: Phase) -> Vec<(PathBuf, String)> {
    let flags = flag_bias(r, cfg.dp_threshold);
    let mut files = Vec::new();
    for &fmt in &cfg.formats {
        let ext = fmt.extension();
        let name = |stem: &str| cfg.out_dir.join(format!("{stem}-{}.{ext}", phase.name()));
        files.push((name("individual"), render_individual_table(r, fmt)));
        files.push((
            name("pairwise"),
            render_pairwise_table_with(r, fmt, cfg.dp_threshold),
        ));
        files.push((name("flags"), render_flags(&flags, fmt)));
    }
    files
}

/// Everything is computed before the first file is written, so a failing
/// input never leaves a partial audit behind.
pub fn cmd_evaluate(cfg: &AuditConfig, phase: Phase) -> Result<String> {
    let manifest_path = require(cfg.manifest_for(phase), "manifest", phase)?;
    let pred_path = require(cfg.phase(phase).predictions.clone(), "predictions", phase)?;
    let manifest = Manifest::load(&manifest_path)?;
    let preds = load_predictions(&pred_path)?;
    let es = join_with(&manifest, &preds, cfg.tie_rule)?;
    let result = evaluate_all_with(
        &es,
        EvalOptions {
            score_mode: cfg.score_mode,
        },
    );
    let tables = rendered_tables(cfg, &result, phase);
    let n_flags = flag_bias(&result, cfg.dp_threshold).len();

    create_out_dir(cfg)?;
    write_json(&audit_path(cfg, phase), &result)?;
    for (path, text) in &tables {
        write_text(path, text)?;
    }
    Ok(format!(
        "{} ({}) on {} rows: {} flag(s) at DP < {}",
        result.model_id,
        result.setting,
        es.len(),
        n_flags,
        cfg.dp_threshold
    ))
}

fn load_comparison(cfg: &AuditConfig) -> Result<SettingComparison> {
    let base = AuditResult::load(audit_path(cfg, Phase::Uncompressed))?;
    let comp = AuditResult::load(audit_path(cfg, Phase::Compressed))?;
    Ok(compare_settings_with(&base, &comp, cfg.amplification_epsilon)?)
}

pub fn cmd_compare(cfg: &AuditConfig) -> Result<String> {
    let c = load_comparison(cfg)?;
    for &fmt in &cfg.formats {
        let path = cfg.out_dir.join(format!("comparison.{}", fmt.extension()));
        write_text(&path, &render_comparison(&c, fmt))?;
    }
    Ok(format!(
        "{}: {} -> {}, {} amplified DP entr{}",
        c.model_id,
        c.baseline_setting,
        c.comparison_setting,
        c.amplified_dp.len(),
        if c.amplified_dp.len() == 1 { "y" } else { "ies" }
    ))
}

/// One markdown document holding every available audit and the comparison.
pub fn cmd_report(cfg: &AuditConfig) -> Result<String> {
    let md = ReportFormat::Markdown;
    let mut doc = String::from("# Fairness audit\n");
    let mut audits = 0;
    for phase in [Phase::Uncompressed, Phase::Compressed] {
        let path = audit_path(cfg, phase);
        if !path.exists() {
            continue;
        }
        let r = AuditResult::load(&path)?;
        audits += 1;
        doc.push_str(&format!("\n## {} setting\n\n", phase.name()));
        doc.push_str(&render_individual_table(&r, md));
        doc.push('\n');
        doc.push_str(&render_pairwise_table_with(&r, md, cfg.dp_threshold));
        doc.push('\n');
        doc.push_str(&render_flags(&flag_bias(&r, cfg.dp_threshold), md));
    }
    if audits == 0 {
        return Err(anyhow!(
            "no audit results under {}; run evaluate first",
            cfg.out_dir.display()
        ));
    }
    if audits == 2 {
        doc.push_str("\n## Uncompressed vs compressed\n\n");
        doc.push_str(&render_comparison(&load_comparison(cfg)?, md));
    }
    let out = cfg.out_dir.join("report.md");
    write_text(&out, &doc)?;
    Ok(format!("wrote {}", out.display()))
}
