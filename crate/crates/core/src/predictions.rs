//! Model prediction files and the join with a manifest.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{ClassLabel, GroupSelector, ImageRecord, Manifest};

/// Allowed deviation of `score_gan + score_real` from 1.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub image_id: String,
    pub score_gan: f64,
    pub score_real: f64,
    pub model_id: String,
    pub setting: String,
}

impl PredictionRecord {
    pub fn score(&self, class: ClassLabel) -> f64 {
        match class {
            ClassLabel::Gan => self.score_gan,
            ClassLabel::Real => self.score_real,
        }
    }

    fn check_scores(&self, line: usize) -> Result<()> {
        for (name, v) in [("score_gan", self.score_gan), ("score_real", self.score_real)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::MalformedScore {
                    line,
                    id: self.image_id.clone(),
                    message: format!("{name} = {v} is not a probability"),
                });
            }
        }
        let sum = self.score_gan + self.score_real;
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(Error::ScoreSum {
                line,
                id: self.image_id.clone(),
                sum,
            });
        }
        Ok(())
    }
}

/// Class assigned when both scores are exactly equal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    #[default]
    Real,
    Gan,
}

pub fn predicted_class(p: &PredictionRecord, tie_rule: TieRule) -> ClassLabel {
    if p.score_gan > p.score_real {
        ClassLabel::Gan
    } else if p.score_real > p.score_gan {
        ClassLabel::Real
    } else {
        match tie_rule {
            TieRule::Real => ClassLabel::Real,
            TieRule::Gan => ClassLabel::Gan,
        }
    }
}

/// Loose row shape so that non-numeric scores are reported per line instead
/// of as a generic deserialisation failure.
#[derive(Debug, Deserialize)]
struct RawPrediction {
    image_id: Option<String>,
    score_gan: Option<serde_json::Value>,
    score_real: Option<serde_json::Value>,
    model_id: Option<String>,
    setting: Option<String>,
}

fn score_value(line: usize, id: &str, name: &str, v: Option<serde_json::Value>) -> Result<f64> {
    let bad = |message: String| Error::MalformedScore {
        line,
        id: id.to_owned(),
        message,
    };
    match v {
        Some(serde_json::Value::Number(n)) => n.as_f64().ok_or_else(|| bad(format!("{name} out of range"))),
        Some(serde_json::Value::String(s)) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{name} = {s:?} is not a number"))),
        Some(other) => Err(bad(format!("{name} = {other} is not a number"))),
        None => Err(bad(format!("{name} missing"))),
    }
}

impl RawPrediction {
    fn into_record(self, line: usize) -> Result<PredictionRecord> {
        let image_id = self
            .image_id
            .filter(|s| !s.is_empty())
            .ok_or(Error::MissingField {
                line,
                field: "image_id",
            })?;
        let score_gan = score_value(line, &image_id, "score_gan", self.score_gan)?;
        let score_real = score_value(line, &image_id, "score_real", self.score_real)?;
        Ok(PredictionRecord {
            score_gan,
            score_real,
            model_id: self.model_id.ok_or(Error::MissingField {
                line,
                field: "model_id",
            })?,
            setting: self.setting.ok_or(Error::MissingField {
                line,
                field: "setting",
            })?,
            image_id,
        })
    }
}

/// Loads a prediction file (`.csv` or JSONL) and checks every record.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    let mut raw = Vec::new();
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        for (idx, row) in reader.records().enumerate() {
            let line = idx + 2;
            let row = row.map_err(|e| parse_err(line, e.to_string()))?;
            let get = |k: &str| {
                headers
                    .iter()
                    .position(|h| h == k)
                    .and_then(|i| row.get(i))
                    .map(str::to_owned)
            };
            raw.push((
                line,
                RawPrediction {
                    image_id: get("image_id"),
                    score_gan: get("score_gan").map(serde_json::Value::String),
                    score_real: get("score_real").map(serde_json::Value::String),
                    model_id: get("model_id"),
                    setting: get("setting"),
                },
            ));
        }
    } else {
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: RawPrediction =
                serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
            raw.push((line_no, r));
        }
    }

    let mut seen = HashSet::with_capacity(raw.len());
    let mut out: Vec<PredictionRecord> = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        let rec = r.into_record(line)?;
        rec.check_scores(line)?;
        if let Some(first) = out.first() {
            for (field, a, b) in [
                ("model_id", &first.model_id, &rec.model_id),
                ("setting", &first.setting, &rec.setting),
            ] {
                if a != b {
                    return Err(Error::MixedPredictionFile {
                        line,
                        field,
                        first: a.clone(),
                        found: b.clone(),
                    });
                }
            }
        }
        if !seen.insert(rec.image_id.clone()) {
            return Err(Error::DuplicateId {
                line,
                id: rec.image_id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes predictions as JSONL or CSV (by extension).
pub fn write_predictions(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut w = csv::Writer::from_writer(&mut buf);
        for p in preds {
            w.serialize(p).map_err(|e| Error::io(path, e.into()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    } else {
        for p in preds {
            serde_json::to_writer(&mut buf, p)?;
            buf.push(b'\n');
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub record: ImageRecord,
    pub prediction: PredictionRecord,
    pub predicted: ClassLabel,
}

/// Manifest records joined one-to-one with a single model's predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub model_id: String,
    pub setting: String,
    pub rows: Vec<EvalRow>,
}

impl EvaluationSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows of the group, in manifest order.
    pub fn select<'a>(&'a self, g: &'a GroupSelector) -> impl Iterator<Item = &'a EvalRow> + 'a {
        self.rows.iter().filter(move |r| g.matches(&r.record.attributes))
    }
}

pub fn join(m: &Manifest, preds: &[PredictionRecord]) -> Result<EvaluationSet> {
    join_with(m, preds, TieRule::default())
}

/// Bijective join on `image_id`. Rows follow manifest order.
pub fn join_with(m: &Manifest, preds: &[PredictionRecord], tie_rule: TieRule) -> Result<EvaluationSet> {
    let by_id: HashMap<&str, &PredictionRecord> =
        preds.iter().map(|p| (p.image_id.as_str(), p)).collect();

    let missing: Vec<String> = m
        .records
        .iter()
        .filter(|r| !by_id.contains_key(r.image_id.as_str()))
        .map(|r| r.image_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    let ids: HashSet<&str> = m.records.iter().map(|r| r.image_id.as_str()).collect();
    let orphans: Vec<String> = preds
        .iter()
        .filter(|p| !ids.contains(p.image_id.as_str()))
        .map(|p| p.image_id.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(Error::OrphanPredictions(orphans));
    }

    let (model_id, setting) = match preds.first() {
        Some(p) => (p.model_id.clone(), p.setting.clone()),
        None => (String::new(), m.meta.setting.clone()),
    };
    if setting != m.meta.setting {
        return Err(Error::SettingMismatch {
            manifest: m.meta.setting.clone(),
            predictions: setting,
        });
    }

    let rows = m
        .records
        .iter()
        .map(|r| {
            let p = by_id[r.image_id.as_str()];
            EvalRow {
                record: r.clone(),
                prediction: p.clone(),
                predicted: predicted_class(p, tie_rule),
            }
        })
        .collect();
    Ok(EvaluationSet {
        model_id,
        setting,
        rows,
    })
}
