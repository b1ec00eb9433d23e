use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairaudit_core::compress::CompressionConfig;
use fairaudit_core::manifest::UriCheck;
use fairaudit_core::report::{ReportFormat, DEFAULT_AMPLIFICATION_EPSILON, DEFAULT_DP_THRESHOLD};
use fairaudit_core::{ScoreMode, TieRule};
use serde::Deserialize;

/// Inputs of one evaluation phase.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseInputs {
    pub manifest: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Phase {
    Uncompressed,
    Compressed,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Uncompressed => "uncompressed",
            Phase::Compressed => "compressed",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub out_dir: PathBuf,
    pub dp_threshold: f64,
    pub amplification_epsilon: f64,
    pub score_mode: ScoreMode,
    pub tie_rule: TieRule,
    pub formats: Vec<ReportFormat>,
    pub uri_check: UriCheck,
    pub uncompressed: PhaseInputs,
    pub compressed: PhaseInputs,
    pub compression: CompressionConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("audit-out"),
            dp_threshold: DEFAULT_DP_THRESHOLD,
            amplification_epsilon: DEFAULT_AMPLIFICATION_EPSILON,
            score_mode: ScoreMode::default(),
            tie_rule: TieRule::default(),
            formats: ReportFormat::ALL.to_vec(),
            uri_check: UriCheck::Strict,
            uncompressed: PhaseInputs::default(),
            compressed: PhaseInputs::default(),
            compression: CompressionConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl AuditConfig {
    /// Reads a TOML config. Relative paths are taken relative to the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: AuditConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        for phase in [&mut cfg.uncompressed, &mut cfg.compressed] {
            rebase(base, &mut phase.manifest);
            rebase(base, &mut phase.predictions);
        }
        Ok(cfg)
    }

    pub fn phase(&self, p: Phase) -> &PhaseInputs {
        match p {
            Phase::Uncompressed => &self.uncompressed,
            Phase::Compressed => &self.compressed,
        }
    }

    pub fn phase_mut(&mut self, p: Phase) -> &mut PhaseInputs {
        match p {
            Phase::Uncompressed => &mut self.uncompressed,
            Phase::Compressed => &mut self.compressed,
        }
    }

    /// Directory receiving the compressed corpus.
    pub fn compressed_dir(&self) -> PathBuf {
        self.out_dir.join(format!("jpeg-q{}", self.compression.quality))
    }

    /// The compressed-phase manifest: configured, or the output of `compress`.
    pub fn compressed_manifest(&self) -> PathBuf {
        self.compressed
            .manifest
            .clone()
            .unwrap_or_else(|| self.compressed_dir().join("manifest.jsonl"))
    }

    pub fn manifest_for(&self, p: Phase) -> Option<PathBuf> {
        match p {
            Phase::Uncompressed => self.uncompressed.manifest.clone(),
            Phase::Compressed => Some(self.compressed_manifest()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dp_threshold > 0.0 && self.dp_threshold <= 1.0) {
            bail!("dp_threshold {} must lie in (0, 1]", self.dp_threshold);
        }
        if self.amplification_epsilon.is_nan() || self.amplification_epsilon < 0.0 {
            bail!("amplification_epsilon must be non-negative");
        }
        if self.formats.is_empty() {
            bail!("at least one output format is required");
        }
        self.compression.validate()?;
        let mut seen = HashSet::new();
        let paths = [
            &self.uncompressed.manifest,
            &self.uncompressed.predictions,
            &self.compressed.manifest,
            &self.compressed.predictions,
        ];
        for p in paths.into_iter().flatten() {
            if !seen.insert(p) {
                bail!("path {} is referenced more than once", p.display());
            }
        }
        Ok(())
    }
}
