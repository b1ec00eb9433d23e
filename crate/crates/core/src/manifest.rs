//! Evaluation corpus data model, demographic group registry and the standard
//! group pairs.
//!
//! A manifest is a JSONL or CSV file with one image per line. Demographic
//! attributes are optional per record; group membership is always derived
//! from attribute predicates, so disjoint sub-corpora (e.g. an affect-only
//! corpus next to a gender/skin corpus) and fully cross-annotated corpora are
//! handled the same way.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compress::CompressionProvenance;
use crate::error::{Error, Result};
use crate::validation::{AttributeCoverage, GroupSize, Severity, ValidationReport};

/// Ground-truth or predicted class of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "GAN")]
    Gan,
    #[serde(rename = "Real")]
    Real,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Gan, ClassLabel::Real];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Gan => "GAN",
            ClassLabel::Real => "Real",
        }
    }

    pub fn other(self) -> ClassLabel {
        match self {
            ClassLabel::Gan => ClassLabel::Real,
            ClassLabel::Real => ClassLabel::Gan,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "GAN" => Ok(ClassLabel::Gan),
            "Real" => Ok(ClassLabel::Real),
            _ => Err(()),
        }
    }
}

macro_rules! attribute_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = ();

            fn from_str(s: &str) -> std::result::Result<Self, ()> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(()),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

attribute_enum!(Gender { Female => "F", Male => "M" });
attribute_enum!(Skin { Dark => "D", Light => "L" });
attribute_enum!(Affect { NonSmiling => "Ns", Smiling => "S" });

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skin: Option<Skin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affect: Option<Affect>,
}

impl AttributeSet {
    pub fn is_empty(&self) -> bool {
        self.gender.is_none() && self.skin.is_none() && self.affect.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub uri: String,
    pub true_class: ClassLabel,
    #[serde(flatten)]
    pub attributes: AttributeSet,
}

/// Manifest-level metadata, stored in a JSON sidecar next to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub source: String,
    pub setting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression: Option<CompressionProvenance>,
}

impl ManifestMeta {
    pub fn new(source: impl Into<String>, setting: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            setting: setting.into(),
            compression: None,
        }
    }
}

pub const DEFAULT_SETTING: &str = "uncompressed";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub meta: ManifestMeta,
    pub records: Vec<ImageRecord>,
    /// Directory that relative uris resolve against.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestFormat {
    Jsonl,
    Csv,
}

impl ManifestFormat {
    /// `.csv` files are CSV, everything else is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ManifestFormat::Csv,
            _ => ManifestFormat::Jsonl,
        }
    }
}

/// Path of the metadata sidecar for a manifest file.
pub fn sidecar_path(manifest_path: &Path) -> PathBuf {
    let mut name = manifest_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// One manifest line before attribute validation. Every field is a string so
/// that unknown enumeration values can be reported with their field name.
#[derive(Debug, Default, Deserialize)]
struct RawRecord {
    image_id: Option<String>,
    uri: Option<String>,
    true_class: Option<String>,
    gender: Option<String>,
    skin: Option<String>,
    affect: Option<String>,
}

fn non_empty(v: Option<String>) -> Option<String> {
    v.filter(|s| !s.trim().is_empty())
}

fn parse_attr<T: FromStr>(line: usize, field: &'static str, v: Option<String>) -> Result<Option<T>> {
    match non_empty(v) {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::UnknownAttribute {
                line,
                field,
                value: s,
            }),
    }
}

impl RawRecord {
    fn into_record(self, line: usize) -> Result<ImageRecord> {
        let image_id = non_empty(self.image_id).ok_or(Error::MissingField {
            line,
            field: "image_id",
        })?;
        let uri = self.uri.unwrap_or_default();
        let class = non_empty(self.true_class).ok_or(Error::MissingField {
            line,
            field: "true_class",
        })?;
        let true_class = class.trim().parse().map_err(|_| Error::UnknownAttribute {
            line,
            field: "true_class",
            value: class.clone(),
        })?;
        Ok(ImageRecord {
            image_id,
            uri,
            true_class,
            attributes: AttributeSet {
                gender: parse_attr(line, "gender", self.gender)?,
                skin: parse_attr(line, "skin", self.skin)?,
                affect: parse_attr(line, "affect", self.affect)?,
            },
        })
    }
}

impl Manifest {
    pub fn new(meta: ManifestMeta, records: Vec<ImageRecord>) -> Self {
        Self {
            meta,
            records,
            base_dir: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn setting(&self) -> &str {
        &self.meta.setting
    }

    /// Loads a manifest, detecting the format from the file extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        load_manifest(path, ManifestFormat::from_path(path))
    }

    /// Resolves a record's uri to a local path. Remote uris return `None`.
    pub fn resolve_uri(&self, record: &ImageRecord) -> Option<PathBuf> {
        if is_remote(&record.uri) || record.uri.is_empty() {
            return None;
        }
        let uri = record.uri.strip_prefix("file://").unwrap_or(&record.uri);
        let p = Path::new(uri);
        Some(match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        })
    }

    /// Writes the manifest and its metadata sidecar.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        match ManifestFormat::from_path(path) {
            ManifestFormat::Jsonl => {
                for r in &self.records {
                    serde_json::to_writer(&mut buf, r)?;
                    buf.push(b'\n');
                }
            }
            ManifestFormat::Csv => {
                let mut w = csv::Writer::from_writer(&mut buf);
                let io = |e: csv::Error| Error::io(path, e.into());
                w.write_record(["image_id", "uri", "true_class", "gender", "skin", "affect"])
                    .map_err(io)?;
                for r in &self.records {
                    let a = &r.attributes;
                    w.write_record([
                        r.image_id.as_str(),
                        r.uri.as_str(),
                        r.true_class.as_str(),
                        a.gender.map_or("", Gender::as_str),
                        a.skin.map_or("", Skin::as_str),
                        a.affect.map_or("", Affect::as_str),
                    ])
                    .map_err(io)?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        let mut meta = serde_json::to_vec_pretty(&self.meta)?;
        meta.push(b'\n');
        fs::write(&sidecar, meta).map_err(|e| Error::io(&sidecar, e))
    }
}

fn is_remote(uri: &str) -> bool {
    uri.starts_with("http://") || uri.starts_with("https://")
}

/// Loads a manifest in the given format, preserving input order.
///
/// Metadata comes from the `<path>.meta.json` sidecar when present; otherwise
/// the source name is the file stem and the setting is `uncompressed`.
pub fn load_manifest(path: &Path, format: ManifestFormat) -> Result<Manifest> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<(usize, RawRecord)> = match format {
        ManifestFormat::Jsonl => {
            let mut rows = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line_no = idx + 1;
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message: e.to_string(),
                })?;
                rows.push((line_no, raw));
            }
            rows
        }
        ManifestFormat::Csv => {
            let mut reader = csv::Reader::from_reader(file);
            let mut rows = Vec::new();
            for (idx, row) in reader.deserialize::<RawRecord>().enumerate() {
                // header is line 1
                let line_no = idx + 2;
                let raw = row.map_err(|e| Error::Parse {
                    path: path.to_owned(),
                    line: e.position().map_or(line_no, |p| p.line() as usize),
                    message: e.to_string(),
                })?;
                rows.push((line_no, raw));
            }
            rows
        }
    };

    let mut seen = HashSet::with_capacity(raw.len());
    let mut records = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        let record = r.into_record(line)?;
        if !seen.insert(record.image_id.clone()) {
            return Err(Error::DuplicateId {
                line,
                id: record.image_id,
            });
        }
        records.push(record);
    }

    let sidecar = sidecar_path(path);
    let meta = if sidecar.exists() {
        let bytes = fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: sidecar.clone(),
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        let source = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("manifest")
            .to_owned();
        ManifestMeta::new(source, DEFAULT_SETTING)
    };

    Ok(Manifest {
        meta,
        records,
        base_dir: path.parent().map(Path::to_path_buf),
    })
}

/// One attribute equality inside a group predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "attribute", content = "value", rename_all = "lowercase")]
pub enum Condition {
    Gender(Gender),
    Skin(Skin),
    Affect(Affect),
}

impl Condition {
    pub fn matches(&self, a: &AttributeSet) -> bool {
        match *self {
            Condition::Gender(g) => a.gender == Some(g),
            Condition::Skin(s) => a.skin == Some(s),
            Condition::Affect(x) => a.affect == Some(x),
        }
    }
}

/// A named conjunction of attribute equalities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSelector {
    pub name: String,
    pub predicate: Vec<Condition>,
}

impl GroupSelector {
    pub fn new(name: impl Into<String>, predicate: Vec<Condition>) -> Self {
        Self {
            name: name.into(),
            predicate,
        }
    }

    pub fn matches(&self, a: &AttributeSet) -> bool {
        self.predicate.iter().all(|c| c.matches(a))
    }

    /// Looks up one of the ten standard groups by name (`"F"`, `"D+F"`, ...).
    pub fn standard(name: &str) -> Option<GroupSelector> {
        standard_groups().into_iter().find(|g| g.name == name)
    }
}

impl fmt::Display for GroupSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSpec {
    pub left: GroupSelector,
    pub right: GroupSelector,
    pub domain_tag: String,
}

impl PairSpec {
    pub fn new(left: GroupSelector, right: GroupSelector, domain_tag: impl Into<String>) -> Self {
        Self {
            left,
            right,
            domain_tag: domain_tag.into(),
        }
    }

    /// Display label, e.g. `D+F×L+M`.
    pub fn label(&self) -> String {
        format!("{}×{}", self.left.name, self.right.name)
    }

    pub fn swapped(&self) -> PairSpec {
        PairSpec {
            left: self.right.clone(),
            right: self.left.clone(),
            domain_tag: self.domain_tag.clone(),
        }
    }
}

fn single(name: &str, c: Condition) -> GroupSelector {
    GroupSelector::new(name, vec![c])
}

fn intersection(skin: Skin, gender: Gender) -> GroupSelector {
    GroupSelector::new(
        format!("{}+{}", skin.as_str(), gender.as_str()),
        vec![Condition::Skin(skin), Condition::Gender(gender)],
    )
}

/// The ten standard groups in table column order:
/// F, M, D, L, Ns, S, D+F, D+M, L+F, L+M.
pub fn standard_groups() -> Vec<GroupSelector> {
    vec![
        single("F", Condition::Gender(Gender::Female)),
        single("M", Condition::Gender(Gender::Male)),
        single("D", Condition::Skin(Skin::Dark)),
        single("L", Condition::Skin(Skin::Light)),
        single("Ns", Condition::Affect(Affect::NonSmiling)),
        single("S", Condition::Affect(Affect::Smiling)),
        intersection(Skin::Dark, Gender::Female),
        intersection(Skin::Dark, Gender::Male),
        intersection(Skin::Light, Gender::Female),
        intersection(Skin::Light, Gender::Male),
    ]
}

/// The nine standard pairs in table column order.
pub fn standard_pairs() -> Vec<PairSpec> {
    let g = |n: &str| GroupSelector::standard(n).expect("standard group");
    let p = |a: &str, b: &str, tag: &str| PairSpec::new(g(a), g(b), tag);
    vec![
        p("F", "M", "gender"),
        p("D", "L", "race"),
        p("Ns", "S", "affect"),
        p("D+F", "D+M", "intersection"),
        p("L+F", "L+M", "intersection"),
        p("D+F", "L+F", "intersection"),
        p("D+M", "L+M", "intersection"),
        p("D+F", "L+M", "intersection"),
        p("L+F", "D+M", "intersection"),
    ]
}

/// Records matching every conjunct of the selector, in manifest order.
pub fn select_group<'a>(m: &'a Manifest, g: &GroupSelector) -> Vec<&'a ImageRecord> {
    m.records
        .iter()
        .filter(|r| g.matches(&r.attributes))
        .collect()
}

/// How the validator treats uris that do not resolve to a readable file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UriCheck {
    /// Do not look at uris.
    Skip,
    /// Unresolvable local uris are errors.
    #[default]
    Strict,
    /// Unresolvable local uris are warnings.
    Offline,
}

pub fn validate_manifest(m: &Manifest) -> ValidationReport {
    validate_manifest_with(m, UriCheck::Strict)
}

/// Reports group sizes, per-class counts, unresolved uris and attribute
/// coverage. The manifest is never modified.
pub fn validate_manifest_with(m: &Manifest, uri_check: UriCheck) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = HashSet::new();
    let mut coverage = AttributeCoverage {
        records: m.records.len(),
        ..Default::default()
    };
    for r in &m.records {
        if !seen.insert(r.image_id.as_str()) {
            report.push(
                Severity::Error,
                "duplicate-id",
                format!("duplicate image_id {:?}", r.image_id),
                Some(&r.image_id),
            );
        }
        let a = &r.attributes;
        coverage.gender += a.gender.is_some() as usize;
        coverage.skin += a.skin.is_some() as usize;
        coverage.affect += a.affect.is_some() as usize;
        if a.is_empty() {
            report.push(
                Severity::Error,
                "no-attributes",
                format!("record {:?} carries no demographic attribute", r.image_id),
                Some(&r.image_id),
            );
        }

        if uri_check == UriCheck::Skip {
            continue;
        }
        if is_remote(&r.uri) {
            report.push(
                Severity::Info,
                "remote-uri",
                format!("remote uri {:?} not checked", r.uri),
                Some(&r.image_id),
            );
            continue;
        }
        let resolved = m.resolve_uri(r).filter(|p| p.is_file());
        if resolved.is_none() {
            let severity = match uri_check {
                UriCheck::Offline => Severity::Warning,
                _ => Severity::Error,
            };
            report.push(
                severity,
                "unresolved-uri",
                format!("uri {:?} does not resolve to a file", r.uri),
                Some(&r.image_id),
            );
        }
    }
    report.coverage = coverage;

    for g in standard_groups() {
        let selected = select_group(m, &g);
        let n_gan = selected
            .iter()
            .filter(|r| r.true_class == ClassLabel::Gan)
            .count();
        let size = GroupSize {
            group: g.name.clone(),
            n_gan,
            n_real: selected.len() - n_gan,
        };
        if size.total() == 0 {
            report.push(
                Severity::Warning,
                "empty-group",
                format!("group {} has no records; its measures are undefined", g.name),
                None,
            );
        } else {
            if size.n_gan == 0 {
                report.push(
                    Severity::Warning,
                    "no-gan-rows",
                    format!("metric Acc_gan undefined for group {}", g.name),
                    None,
                );
            }
            if size.n_real == 0 {
                report.push(
                    Severity::Warning,
                    "no-real-rows",
                    format!("metric Acc_real undefined for group {}", g.name),
                    None,
                );
            }
        }
        report.group_sizes.push(size);
    }
    report
}
