//! Demographic fairness auditing for natural-vs-GAN image classifiers.
//!
//! The crate is organised around the two-phase audit workflow:
//!
//! * [`manifest`] loads and validates the evaluation corpus and defines the
//!   standard demographic groups and group pairs.
//! * [`predictions`] loads per-model prediction files and joins them with a
//!   manifest into an [`predictions::EvaluationSet`].
//! * [`metrics`] computes the individual measures (Acc, Acc_gan, Acc_real,
//!   FPR, FNR) and the pairwise measures (ACS, DP, EO).
//! * [`compress`] re-encodes a corpus as JPEG to produce the compressed phase.
//! * [`report`] renders tables, flags bias and compares two settings.
//! * [`synth`] builds evaluation sets with prescribed confusion counts.

pub mod compress;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod predictions;
pub mod report;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
pub use manifest::{
    standard_groups, standard_pairs, Affect, AttributeSet, ClassLabel, Condition, Gender,
    GroupSelector, ImageRecord, Manifest, ManifestMeta, PairSpec, Skin,
};
pub use metrics::{AuditResult, ConfusionCounts, GroupMetrics, Measure, PairResult, ScoreMode};
pub use predictions::{EvaluationSet, PredictionRecord, TieRule};
pub use validation::{Finding, Severity, ValidationReport};

/// Writes any serialisable value as pretty JSON followed by a newline.
pub fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
