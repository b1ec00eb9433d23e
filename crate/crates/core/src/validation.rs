//! Report type shared by manifest validation and derived-corpus verification.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
}

/// Per-group record counts, split by ground-truth class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSize {
    pub group: String,
    pub n_gan: usize,
    pub n_real: usize,
}

impl GroupSize {
    pub fn total(&self) -> usize {
        self.n_gan + self.n_real
    }
}

/// How many records carry each demographic attribute.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeCoverage {
    pub records: usize,
    pub gender: usize,
    pub skin: usize,
    pub affect: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    #[serde(default)]
    pub group_sizes: Vec<GroupSize>,
    #[serde(default)]
    pub coverage: AttributeCoverage,
}

impl ValidationReport {
    pub(crate) fn push(
        &mut self,
        severity: Severity,
        code: &str,
        message: impl Into<String>,
        image_id: Option<&str>,
    ) {
        self.findings.push(Finding {
            severity,
            code: code.to_owned(),
            message: message.into(),
            image_id: image_id.map(str::to_owned),
        });
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn group_size(&self, name: &str) -> Option<&GroupSize> {
        self.group_sizes.iter().find(|g| g.group == name)
    }
}
