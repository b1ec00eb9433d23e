//! Individual and pairwise fairness measures.
//!
//! Individual measures are computed from the confusion counts of one group:
//!
//! | measure    | definition               |
//! |------------|--------------------------|
//! | `acc`      | (TP + TN) / all          |
//! | `acc_gan`  | TP / (TP + FN)           |
//! | `acc_real` | TN / (TN + FP)           |
//! | `fpr`      | FP / (FP + TN)           |
//! | `fnr`      | FN / (TP + FN)           |
//!
//! GAN is the positive class. Pairwise measures compare two groups for one
//! class `c`:
//!
//! * ACS = 1 - mean_score(left) / mean_score(right)
//! * DP  = min(r_left, r_right) / max(r_left, r_right), where r is the rate
//!   of predicting `c` over the whole group
//! * EO  = the same ratio over the rates of predicting `c` among rows whose
//!   ground truth is `c`
//!
//! DP and EO use the min/max orientation so that they always lie in (0, 1];
//! which side had the larger rate is kept in [`Orientation`].
//!
//! Division by zero never produces 0 or infinity: the affected measure is
//! [`Measure::Undefined`] with a reason.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{standard_groups, standard_pairs, ClassLabel, GroupSelector, PairSpec};
use crate::predictions::{EvalRow, EvaluationSet};

/// A computed value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Value(f64),
    Undefined(String),
}

impl Measure {
    pub fn value(&self) -> Option<f64> {
        match self {
            Measure::Value(v) => Some(*v),
            Measure::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Measure::Value(_))
    }

    pub fn undefined(reason: impl Into<String>) -> Self {
        Measure::Undefined(reason.into())
    }

    fn ratio(num: u64, den: u64, reason: impl FnOnce() -> String) -> Self {
        if den == 0 {
            Measure::Undefined(reason())
        } else {
            Measure::Value(num as f64 / den as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// GAN truth, predicted GAN.
    pub tp: u64,
    /// Real truth, predicted Real.
    pub tn: u64,
    /// Real truth, predicted GAN.
    pub fp: u64,
    /// GAN truth, predicted Real.
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fn_: u64, tn: u64, fp: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn n_gan(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn n_real(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.n_gan() + self.n_real()
    }

    pub fn add(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Gan, ClassLabel::Gan) => self.tp += 1,
            (ClassLabel::Gan, ClassLabel::Real) => self.fn_ += 1,
            (ClassLabel::Real, ClassLabel::Real) => self.tn += 1,
            (ClassLabel::Real, ClassLabel::Gan) => self.fp += 1,
        }
    }

    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a EvalRow>) -> Self {
        let mut c = Self::default();
        for r in rows {
            c.add(r.record.true_class, r.predicted);
        }
        c
    }

    /// Rows predicted as `class`, over both truth classes.
    pub fn predicted_as(&self, class: ClassLabel) -> u64 {
        match class {
            ClassLabel::Gan => self.tp + self.fp,
            ClassLabel::Real => self.tn + self.fn_,
        }
    }

    /// Rows whose truth and prediction are both `class`.
    pub fn correct(&self, class: ClassLabel) -> u64 {
        match class {
            ClassLabel::Gan => self.tp,
            ClassLabel::Real => self.tn,
        }
    }

    pub fn with_truth(&self, class: ClassLabel) -> u64 {
        match class {
            ClassLabel::Gan => self.n_gan(),
            ClassLabel::Real => self.n_real(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub counts: ConfusionCounts,
    pub n_gan: u64,
    pub n_real: u64,
    pub acc: Measure,
    pub acc_gan: Measure,
    pub acc_real: Measure,
    pub fpr: Measure,
    pub fnr: Measure,
}

impl GroupMetrics {
    fn undefined(group: &str, reason: &str) -> Self {
        let u = || Measure::undefined(reason);
        GroupMetrics {
            group: group.to_owned(),
            counts: ConfusionCounts::default(),
            n_gan: 0,
            n_real: 0,
            acc: u(),
            acc_gan: u(),
            acc_real: u(),
            fpr: u(),
            fnr: u(),
        }
    }

    pub fn measure(&self, m: IndividualMeasure) -> &Measure {
        match m {
            IndividualMeasure::Acc => &self.acc,
            IndividualMeasure::AccGan => &self.acc_gan,
            IndividualMeasure::AccReal => &self.acc_real,
            IndividualMeasure::Fpr => &self.fpr,
            IndividualMeasure::Fnr => &self.fnr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndividualMeasure {
    Acc,
    AccGan,
    AccReal,
    Fpr,
    Fnr,
}

impl IndividualMeasure {
    pub const ALL: [IndividualMeasure; 5] = [
        IndividualMeasure::Acc,
        IndividualMeasure::AccGan,
        IndividualMeasure::AccReal,
        IndividualMeasure::Fpr,
        IndividualMeasure::Fnr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IndividualMeasure::Acc => "Acc",
            IndividualMeasure::AccGan => "Acc_gan",
            IndividualMeasure::AccReal => "Acc_real",
            IndividualMeasure::Fpr => "FPR",
            IndividualMeasure::Fnr => "FNR",
        }
    }

    /// Accuracies are displayed as percentages, error rates as ratios.
    pub fn is_percentage(self) -> bool {
        matches!(
            self,
            IndividualMeasure::Acc | IndividualMeasure::AccGan | IndividualMeasure::AccReal
        )
    }
}

/// Confusion counts of one group. Errors when the group selects no rows.
pub fn confusion(es: &EvaluationSet, g: &GroupSelector) -> Result<ConfusionCounts> {
    let c = ConfusionCounts::from_rows(es.select(g));
    if c.total() == 0 {
        return Err(Error::EmptyGroup(g.name.clone()));
    }
    Ok(c)
}

pub fn group_metrics(c: &ConfusionCounts, group: &GroupSelector) -> Result<GroupMetrics> {
    if c.total() == 0 {
        return Err(Error::ZeroCounts);
    }
    let no_gan = || format!("group {} has no GAN-truth rows", group.name);
    let no_real = || format!("group {} has no Real-truth rows", group.name);
    Ok(GroupMetrics {
        group: group.name.clone(),
        counts: *c,
        n_gan: c.n_gan(),
        n_real: c.n_real(),
        acc: Measure::ratio(c.tp + c.tn, c.total(), || unreachable!()),
        acc_gan: Measure::ratio(c.tp, c.tp + c.fn_, no_gan),
        acc_real: Measure::ratio(c.tn, c.tn + c.fp, no_real),
        fpr: Measure::ratio(c.fp, c.fp + c.tn, no_real),
        fnr: Measure::ratio(c.fn_, c.tp + c.fn_, no_gan),
    })
}

/// Fraction of the group's rows (both truth classes) predicted as `class`.
pub fn class_prediction_rate(es: &EvaluationSet, g: &GroupSelector, class: ClassLabel) -> Result<f64> {
    let mut n = 0u64;
    let mut hits = 0u64;
    for r in es.select(g) {
        n += 1;
        hits += (r.predicted == class) as u64;
    }
    if n == 0 {
        return Err(Error::EmptyGroup(g.name.clone()));
    }
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Equal,
}

/// Outcome of a min/max ratio measure (DP or EO) for one pair and class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioOutcome {
    pub value: Measure,
    pub left_rate: Option<f64>,
    pub right_rate: Option<f64>,
    /// Which group had the higher rate.
    pub higher: Option<Side>,
}

fn min_max_ratio(left: Option<f64>, right: Option<f64>, undefined_note: String) -> RatioOutcome {
    let (l, r) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return RatioOutcome {
                value: Measure::Undefined(undefined_note),
                left_rate: left,
                right_rate: right,
                higher: None,
            }
        }
    };
    let (lo, hi) = if l <= r { (l, r) } else { (r, l) };
    let higher = if l > r {
        Side::Left
    } else if r > l {
        Side::Right
    } else {
        Side::Equal
    };
    let value = if hi == 0.0 {
        Measure::undefined("both rates are zero")
    } else {
        Measure::Value(lo / hi)
    };
    RatioOutcome {
        value,
        left_rate: Some(l),
        right_rate: Some(r),
        higher: Some(higher),
    }
}

/// Demographic parity of a pair for one predicted class.
pub fn dp(es: &EvaluationSet, pair: &PairSpec, class: ClassLabel) -> Result<RatioOutcome> {
    let l = class_prediction_rate(es, &pair.left, class)?;
    let r = class_prediction_rate(es, &pair.right, class)?;
    Ok(min_max_ratio(Some(l), Some(r), String::new()))
}

/// Rate of predicting `class` among the group's rows whose truth is `class`.
/// `None` when the group has no such rows.
fn opportunity_rate(es: &EvaluationSet, g: &GroupSelector, class: ClassLabel) -> Result<Option<f64>> {
    let c = confusion(es, g)?;
    let n = c.with_truth(class);
    Ok((n > 0).then(|| c.correct(class) as f64 / n as f64))
}

/// Equal opportunity of a pair for one class: the TPR ratio for GAN, the TNR
/// ratio for Real.
pub fn eo(es: &EvaluationSet, pair: &PairSpec, class: ClassLabel) -> Result<RatioOutcome> {
    let l = opportunity_rate(es, &pair.left, class)?;
    let r = opportunity_rate(es, &pair.right, class)?;
    let missing: Vec<&str> = [(&pair.left, l), (&pair.right, r)]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(g, _)| g.name.as_str())
        .collect();
    let note = format!("no {class}-truth rows in {}", missing.join(", "));
    Ok(min_max_ratio(l, r, note))
}

/// Which rows and which score enter the ACS means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Rows whose truth is the class; score of that class.
    #[default]
    TruthClassScore,
    /// Rows whose truth is the class; score of the predicted class.
    PredictedConfidence,
}

impl ScoreMode {
    fn score(self, row: &EvalRow, class: ClassLabel) -> f64 {
        match self {
            ScoreMode::TruthClassScore => row.prediction.score(class),
            ScoreMode::PredictedConfidence => row.prediction.score(row.predicted),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsOutcome {
    pub value: Measure,
    pub left_mean: f64,
    pub right_mean: f64,
}

fn mean_score(es: &EvaluationSet, g: &GroupSelector, class: ClassLabel, mode: ScoreMode) -> Result<f64> {
    let mut n = 0u64;
    let mut sum = 0.0;
    for r in es.select(g).filter(|r| r.record.true_class == class) {
        n += 1;
        sum += mode.score(r, class);
    }
    if n == 0 {
        return Err(Error::NoEligibleRows {
            group: g.name.clone(),
            what: format!("ACS ({class})"),
        });
    }
    Ok(sum / n as f64)
}

/// Average confidence score: `1 - mean(left) / mean(right)`. Positive when
/// the left group's scores are lower.
pub fn acs(es: &EvaluationSet, pair: &PairSpec, class: ClassLabel, mode: ScoreMode) -> Result<AcsOutcome> {
    let left_mean = mean_score(es, &pair.left, class, mode)?;
    let right_mean = mean_score(es, &pair.right, class, mode)?;
    let value = if right_mean == 0.0 {
        Measure::undefined(format!("mean score of {} is zero", pair.right.name))
    } else {
        Measure::Value(1.0 - left_mean / right_mean)
    };
    Ok(AcsOutcome {
        value,
        left_mean,
        right_mean,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub dp_higher: Option<Side>,
    pub eo_higher: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: String,
    pub left: String,
    pub right: String,
    pub domain: String,
    pub class_label: ClassLabel,
    pub acs: Measure,
    pub dp: Measure,
    pub eo: Measure,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl PairResult {
    pub fn measure(&self, m: PairMeasure) -> &Measure {
        match m {
            PairMeasure::Acs => &self.acs,
            PairMeasure::Dp => &self.dp,
            PairMeasure::Eo => &self.eo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PairMeasure {
    Acs,
    Dp,
    Eo,
}

impl PairMeasure {
    pub const ALL: [PairMeasure; 3] = [PairMeasure::Acs, PairMeasure::Dp, PairMeasure::Eo];

    pub fn label(self) -> &'static str {
        match self {
            PairMeasure::Acs => "ACS",
            PairMeasure::Dp => "DP",
            PairMeasure::Eo => "EO",
        }
    }
}

pub const AUDIT_VERSION: u32 = 1;

/// All individual and pairwise results for one model under one setting.
///
/// Serialised as JSON, this is the hand-off between evaluation and
/// reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub audit_version: u32,
    pub model_id: String,
    pub setting: String,
    pub score_mode: ScoreMode,
    pub groups: Vec<GroupMetrics>,
    pub pairs: Vec<PairResult>,
}

impl AuditResult {
    pub fn group(&self, name: &str) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.group == name)
    }

    /// Pair lookup by label, e.g. `pair("D×L", ClassLabel::Gan)`.
    pub fn pair(&self, label: &str, class: ClassLabel) -> Option<&PairResult> {
        self.pairs
            .iter()
            .find(|p| p.pair == label && p.class_label == class)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub score_mode: ScoreMode,
}

fn evaluate_group(es: &EvaluationSet, g: &GroupSelector) -> GroupMetrics {
    match confusion(es, g).and_then(|c| group_metrics(&c, g)) {
        Ok(m) => m,
        Err(e) => GroupMetrics::undefined(&g.name, &e.to_string()),
    }
}

fn evaluate_pair(es: &EvaluationSet, pair: &PairSpec, class: ClassLabel, mode: ScoreMode) -> PairResult {
    let mut notes = Vec::new();
    let mut unwrap = |r: Result<Measure>| match r {
        Ok(m) => m,
        Err(e) => {
            let reason = e.to_string();
            notes.push(reason.clone());
            Measure::Undefined(reason)
        }
    };
    let acs_v = unwrap(acs(es, pair, class, mode).map(|o| o.value));
    let dp_o = dp(es, pair, class);
    let eo_o = eo(es, pair, class);
    let orientation = Orientation {
        dp_higher: dp_o.as_ref().ok().and_then(|o| o.higher),
        eo_higher: eo_o.as_ref().ok().and_then(|o| o.higher),
    };
    let dp_v = unwrap(dp_o.map(|o| o.value));
    let eo_v = unwrap(eo_o.map(|o| o.value));
    for m in [&dp_v, &eo_v] {
        if let Measure::Undefined(reason) = m {
            if !notes.contains(reason) {
                notes.push(reason.clone());
            }
        }
    }
    PairResult {
        pair: pair.label(),
        left: pair.left.name.clone(),
        right: pair.right.name.clone(),
        domain: pair.domain_tag.clone(),
        class_label: class,
        acs: acs_v,
        dp: dp_v,
        eo: eo_v,
        orientation,
        notes,
    }
}

pub fn evaluate_all(es: &EvaluationSet) -> AuditResult {
    evaluate_all_with(es, EvalOptions::default())
}

/// Metrics for the ten standard groups and all nine standard pairs for both
/// classes (GAN block first). Groups or pairs that cannot be computed carry
/// undefined markers; nothing here fails.
pub fn evaluate_all_with(es: &EvaluationSet, opts: EvalOptions) -> AuditResult {
    let groups: Vec<GroupMetrics> = standard_groups()
        .par_iter()
        .map(|g| evaluate_group(es, g))
        .collect();
    let jobs: Vec<(ClassLabel, PairSpec)> = ClassLabel::ALL
        .iter()
        .flat_map(|&c| standard_pairs().into_iter().map(move |p| (c, p)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|(c, p)| evaluate_pair(es, p, *c, opts.score_mode))
        .collect();
    AuditResult {
        audit_version: AUDIT_VERSION,
        model_id: es.model_id.clone(),
        setting: es.setting.clone(),
        score_mode: opts.score_mode,
        groups,
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{AttributeSet, Gender, ImageRecord, Skin};
    use crate::predictions::PredictionRecord;

    fn row(id: usize, truth: ClassLabel, score_gan: f64, gender: Gender) -> EvalRow {
        let prediction = PredictionRecord {
            image_id: id.to_string(),
            score_gan,
            score_real: 1.0 - score_gan,
            model_id: "m".into(),
            setting: "s".into(),
        };
        EvalRow {
            predicted: crate::predictions::predicted_class(&prediction, Default::default()),
            record: ImageRecord {
                image_id: id.to_string(),
                uri: String::new(),
                true_class: truth,
                attributes: AttributeSet {
                    gender: Some(gender),
                    skin: Some(Skin::Dark),
                    affect: None,
                },
            },
            prediction,
        }
    }

    fn set(rows: Vec<EvalRow>) -> EvaluationSet {
        EvaluationSet {
            model_id: "m".into(),
            setting: "s".into(),
            rows,
        }
    }

    fn fm() -> PairSpec {
        standard_pairs().remove(0)
    }

    fn close(a: &Measure, b: f64) -> bool {
        a.value().is_some_and(|v| (v - b).abs() < 1e-12)
    }

    #[test]
    fn vit_female_column() {
        let c = ConfusionCounts::new(931, 69, 833, 167);
        let g = GroupSelector::standard("F").unwrap();
        let m = group_metrics(&c, &g).unwrap();
        assert!(close(&m.acc, 0.882));
        assert!(close(&m.acc_gan, 0.931));
        assert!(close(&m.acc_real, 0.833));
        assert!(close(&m.fpr, 0.167));
        assert!(close(&m.fnr, 0.069));
    }

    #[test]
    fn empty_class_is_undefined() {
        let g = GroupSelector::standard("F").unwrap();
        let m = group_metrics(&ConfusionCounts::new(10, 0, 0, 0), &g).unwrap();
        assert_eq!(m.acc, Measure::Value(1.0));
        assert_eq!(m.acc_gan, Measure::Value(1.0));
        assert!(!m.acc_real.is_defined());
        assert!(!m.fpr.is_defined());
        assert_eq!(m.fnr, Measure::Value(0.0));
        assert!(matches!(
            group_metrics(&ConfusionCounts::default(), &g),
            Err(Error::ZeroCounts)
        ));
    }

    #[test]
    fn all_correct_group_has_no_errors() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.9, Gender::Female),
            row(1, ClassLabel::Real, 0.1, Gender::Female),
        ]);
        let c = confusion(&es, &GroupSelector::standard("F").unwrap()).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert!(matches!(
            confusion(&es, &GroupSelector::standard("M").unwrap()),
            Err(Error::EmptyGroup(name)) if name == "M"
        ));
    }

    #[test]
    fn rates_and_identical_groups() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.9, Gender::Female),
            row(1, ClassLabel::Real, 0.3, Gender::Female),
            row(2, ClassLabel::Gan, 0.9, Gender::Male),
            row(3, ClassLabel::Real, 0.3, Gender::Male),
        ]);
        let f = GroupSelector::standard("F").unwrap();
        let gan = class_prediction_rate(&es, &f, ClassLabel::Gan).unwrap();
        let real = class_prediction_rate(&es, &f, ClassLabel::Real).unwrap();
        assert_eq!(gan + real, 1.0);
        for c in ClassLabel::ALL {
            assert_eq!(dp(&es, &fm(), c).unwrap().value, Measure::Value(1.0));
            assert_eq!(eo(&es, &fm(), c).unwrap().value, Measure::Value(1.0));
            assert_eq!(
                acs(&es, &fm(), c, ScoreMode::TruthClassScore).unwrap().value,
                Measure::Value(0.0)
            );
        }
    }

    #[test]
    fn all_real_predictions_make_gan_dp_undefined() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.1, Gender::Female),
            row(1, ClassLabel::Gan, 0.2, Gender::Male),
        ]);
        assert_eq!(
            class_prediction_rate(&es, &GroupSelector::standard("F").unwrap(), ClassLabel::Gan).unwrap(),
            0.0
        );
        let o = dp(&es, &fm(), ClassLabel::Gan).unwrap();
        assert!(!o.value.is_defined());
        // no Real-truth rows anywhere
        let o = eo(&es, &fm(), ClassLabel::Real).unwrap();
        assert!(matches!(&o.value, Measure::Undefined(n) if n.contains("F, M")));
    }

    #[test]
    fn acs_sign_convention() {
        // left mean 0.45, right mean 0.50
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.40, Gender::Female),
            row(1, ClassLabel::Gan, 0.50, Gender::Female),
            row(2, ClassLabel::Gan, 0.50, Gender::Male),
            row(3, ClassLabel::Gan, 0.50, Gender::Male),
        ]);
        let v = acs(&es, &fm(), ClassLabel::Gan, ScoreMode::TruthClassScore).unwrap();
        assert!((v.value.value().unwrap() - 0.1).abs() < 1e-12);
        let v = acs(&es, &fm().swapped(), ClassLabel::Gan, ScoreMode::TruthClassScore).unwrap();
        assert!((v.value.value().unwrap() - (1.0 - 10.0 / 9.0)).abs() < 1e-12);
        assert!(matches!(
            acs(&es, &fm(), ClassLabel::Real, ScoreMode::TruthClassScore),
            Err(Error::NoEligibleRows { .. })
        ));
    }

    #[test]
    fn acs_zero_right_mean_is_undefined() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.4, Gender::Female),
            row(1, ClassLabel::Gan, 0.0, Gender::Male),
        ]);
        let v = acs(&es, &fm(), ClassLabel::Gan, ScoreMode::TruthClassScore).unwrap();
        assert!(!v.value.is_defined());
    }

    #[test]
    fn predicted_confidence_mode_uses_winning_score() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.2, Gender::Female),
            row(1, ClassLabel::Gan, 0.6, Gender::Male),
        ]);
        let v = acs(&es, &fm(), ClassLabel::Gan, ScoreMode::PredictedConfidence).unwrap();
        assert!((v.left_mean - 0.8).abs() < 1e-12);
        assert!((v.right_mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn evaluate_all_marks_missing_affect_groups() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.9, Gender::Female),
            row(1, ClassLabel::Real, 0.3, Gender::Male),
        ]);
        let r = evaluate_all(&es);
        assert_eq!(r.groups.len(), 10);
        assert_eq!(r.pairs.len(), 18);
        assert!(!r.group("Ns").unwrap().acc.is_defined());
        assert!(r.group("F").unwrap().acc.is_defined());
        let ns = r.pair("Ns×S", ClassLabel::Gan).unwrap();
        assert!(!ns.dp.is_defined() && !ns.notes.is_empty());
        assert_eq!(r.pairs[0].class_label, ClassLabel::Gan);
        assert_eq!(r.pairs[9].class_label, ClassLabel::Real);
    }

    #[test]
    fn audit_result_json_round_trip() {
        let es = set(vec![
            row(0, ClassLabel::Gan, 0.9, Gender::Female),
            row(1, ClassLabel::Real, 0.3, Gender::Male),
        ]);
        let r = evaluate_all(&es);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"fn\":"));
        let back: AuditResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
