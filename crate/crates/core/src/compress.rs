//! JPEG re-encoding of an evaluation corpus.
//!
//! Every source image is decoded to an 8-bit RGB raster and re-encoded as a
//! baseline JPEG, including sources that are already JPEG. The output
//! manifest keeps ids, classes and attributes; only `uri` and the setting tag
//! change.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FileFailure, Result};
use crate::manifest::{ImageRecord, Manifest, ManifestMeta};
use crate::validation::{Severity, ValidationReport};

/// Identifier of the pinned encoder, recorded in derived manifests.
pub const ENCODER_ID: &str = "jpeg-encoder-0.6/baseline";

/// Directory under `out_dir` holding the re-encoded images.
pub const IMAGE_DIR: &str = "images";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsampling {
    #[default]
    #[serde(rename = "420")]
    S420,
    #[serde(rename = "444")]
    S444,
}

impl Subsampling {
    fn sampling_factor(self) -> SamplingFactor {
        match self {
            Subsampling::S420 => SamplingFactor::R_4_2_0,
            Subsampling::S444 => SamplingFactor::R_4_4_4,
        }
    }
}

impl fmt::Display for Subsampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsampling::S420 => "4:2:0",
            Subsampling::S444 => "4:4:4",
        })
    }
}

impl FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "420" | "4:2:0" => Ok(Subsampling::S420),
            "444" | "4:4:4" => Ok(Subsampling::S444),
            _ => Err(Error::InvalidConfig(format!(
                "unknown chroma subsampling {s:?} (expected 420 or 444)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionConfig {
    pub quality: u8,
    pub subsampling: Subsampling,
    pub encoder_id: String,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            quality: 90,
            subsampling: Subsampling::S420,
            encoder_id: ENCODER_ID.to_owned(),
        }
    }
}

impl CompressionConfig {
    pub fn with_quality(quality: u8) -> Self {
        Self {
            quality,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.quality) {
            return Err(Error::InvalidConfig(format!(
                "JPEG quality {} outside 1..=100",
                self.quality
            )));
        }
        Ok(())
    }
}

/// Provenance stored in a derived manifest's metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionProvenance {
    pub quality: u8,
    pub subsampling: Subsampling,
    pub encoder_id: String,
    pub source_setting: String,
}

/// Setting tag for a corpus produced by compressing `source` at `quality`.
///
/// `uncompressed` becomes `jpeg-q90`; compressing `jpeg-q90` again at 90
/// gives `jpeg-q90-x2`, then `-x3`, and so on. Any other source is prefixed:
/// `jpeg-q75` at 90 becomes `jpeg-q75+jpeg-q90`.
pub fn derived_setting(source: &str, quality: u8) -> String {
    let tag = format!("jpeg-q{quality}");
    if source == crate::manifest::DEFAULT_SETTING {
        return tag;
    }
    if source == tag {
        return format!("{tag}-x2");
    }
    if let Some(n) = source
        .strip_prefix(&tag)
        .and_then(|rest| rest.strip_prefix("-x"))
        .and_then(|n| n.parse::<u32>().ok())
    {
        return format!("{tag}-x{}", n + 1);
    }
    format!("{source}+{tag}")
}

/// File name used for an image id inside the output directory.
pub fn output_file_name(image_id: &str) -> String {
    let stem: String = image_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{stem}.jpg")
}

/// Encodes an RGB raster as a baseline JPEG.
pub fn encode_jpeg(rgb: &image::RgbImage, cfg: &CompressionConfig) -> Result<Vec<u8>> {
    let (w, h) = rgb.dimensions();
    let (w, h) = match (u16::try_from(w), u16::try_from(h)) {
        (Ok(w), Ok(h)) => (w, h),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "image of {w}x{h} exceeds the JPEG size limit"
            )))
        }
    };
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, cfg.quality);
    enc.set_sampling_factor(cfg.subsampling.sampling_factor());
    enc.encode(rgb.as_raw(), w, h, ColorType::Rgb)
        .map_err(|e| Error::InvalidConfig(format!("JPEG encoding failed: {e}")))?;
    Ok(out)
}

fn compress_one(
    m: &Manifest,
    record: &ImageRecord,
    cfg: &CompressionConfig,
    dest: &Path,
) -> std::result::Result<(), String> {
    let src = m
        .resolve_uri(record)
        .ok_or_else(|| format!("uri {:?} is not a local file", record.uri))?;
    let img = image::open(&src).map_err(|e| format!("{}: {e}", src.display()))?;
    let bytes = encode_jpeg(&img.to_rgb8(), cfg).map_err(|e| e.to_string())?;
    fs::write(dest, bytes).map_err(|e| format!("{}: {e}", dest.display()))
}

/// Re-encodes every image of `m` into `out_dir/images/` and returns the
/// derived manifest (not yet written to disk; see [`Manifest::write`]).
///
/// Per-image failures are collected; if any image fails the whole call
/// returns [`Error::Compression`] listing all of them.
pub fn compress_corpus(m: &Manifest, cfg: &CompressionConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;

    let mut names: HashMap<String, &str> = HashMap::with_capacity(m.len());
    for r in &m.records {
        let name = output_file_name(&r.image_id);
        if let Some(first) = names.insert(name.clone(), &r.image_id) {
            return Err(Error::OutputCollision {
                first: first.to_owned(),
                second: r.image_id.clone(),
                file_name: name,
            });
        }
    }

    let image_dir = out_dir.join(IMAGE_DIR);
    fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;

    let failures: Vec<FileFailure> = m
        .records
        .par_iter()
        .filter_map(|r| {
            let dest = image_dir.join(output_file_name(&r.image_id));
            compress_one(m, r, cfg, &dest).err().map(|message| FileFailure {
                image_id: r.image_id.clone(),
                message,
            })
        })
        .collect();
    if !failures.is_empty() {
        return Err(Error::Compression(failures));
    }

    let records = m
        .records
        .iter()
        .map(|r| ImageRecord {
            uri: format!("{IMAGE_DIR}/{}", output_file_name(&r.image_id)),
            ..r.clone()
        })
        .collect();
    let meta = ManifestMeta {
        source: m.meta.source.clone(),
        setting: derived_setting(&m.meta.setting, cfg.quality),
        compression: Some(CompressionProvenance {
            quality: cfg.quality,
            subsampling: cfg.subsampling,
            encoder_id: cfg.encoder_id.clone(),
            source_setting: m.meta.setting.clone(),
        }),
    };
    Ok(Manifest {
        meta,
        records,
        base_dir: Some(out_dir.to_path_buf()),
    })
}

fn is_jpeg(path: &Path) -> std::result::Result<(u32, u32), String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    if !bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        return Err("not a JPEG stream".into());
    }
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg)
        .map_err(|e| e.to_string())?;
    Ok((img.width(), img.height()))
}

fn source_dimensions(m: &Manifest, r: &ImageRecord) -> Option<(u32, u32)> {
    let p: PathBuf = m.resolve_uri(r)?;
    image::image_dimensions(p).ok()
}

/// Checks that `dst` is a faithful derived copy of `src`: same ids, classes
/// and attributes, and every destination file is a decodable JPEG with the
/// source's dimensions.
pub fn verify_derived(src: &Manifest, dst: &Manifest) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dst_by_id: HashMap<&str, &ImageRecord> =
        dst.records.iter().map(|r| (r.image_id.as_str(), r)).collect();
    let src_ids: HashMap<&str, &ImageRecord> =
        src.records.iter().map(|r| (r.image_id.as_str(), r)).collect();

    for s in &src.records {
        let id = Some(s.image_id.as_str());
        let Some(d) = dst_by_id.get(s.image_id.as_str()) else {
            report.push(
                Severity::Error,
                "missing-record",
                format!("{} missing from derived manifest", s.image_id),
                id,
            );
            continue;
        };
        if d.true_class != s.true_class {
            report.push(
                Severity::Error,
                "class-changed",
                format!("{}: true_class {} became {}", s.image_id, s.true_class, d.true_class),
                id,
            );
        }
        if d.attributes != s.attributes {
            report.push(
                Severity::Error,
                "attributes-changed",
                format!("{}: attributes differ", s.image_id),
                id,
            );
        }
        let Some(path) = dst.resolve_uri(d) else {
            report.push(
                Severity::Error,
                "missing-file",
                format!("{}: uri {:?} is not a local file", s.image_id, d.uri),
                id,
            );
            continue;
        };
        match is_jpeg(&path) {
            Err(e) => report.push(
                Severity::Error,
                if path.exists() { "not-jpeg" } else { "missing-file" },
                format!("{}: {}: {e}", s.image_id, path.display()),
                id,
            ),
            Ok(dims) => {
                if let Some(src_dims) = source_dimensions(src, s) {
                    if src_dims != dims {
                        report.push(
                            Severity::Error,
                            "dimensions-changed",
                            format!("{}: {:?} became {:?}", s.image_id, src_dims, dims),
                            id,
                        );
                    }
                }
            }
        }
    }
    for d in &dst.records {
        if !src_ids.contains_key(d.image_id.as_str()) {
            report.push(
                Severity::Error,
                "extra-record",
                format!("{} not present in source manifest", d.image_id),
                Some(&d.image_id),
            );
        }
    }
    report
}
