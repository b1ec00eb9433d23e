//! Brute-force reference implementation of the audit measures.
//!
//! Works on plain tuples and shares no code with the library: membership,
//! predictions and every ratio are recomputed from the raw rows.

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub gender: Option<&'static str>,
    pub skin: Option<&'static str>,
    pub affect: Option<&'static str>,
    pub gan: bool,
    pub score_gan: f64,
    pub score_real: f64,
}

impl Row {
    pub fn predicts_gan(&self) -> bool {
        self.score_gan > self.score_real
    }

    fn has(&self, code: &str) -> bool {
        match code {
            "F" | "M" => self.gender == Some(code),
            "D" | "L" => self.skin == Some(code),
            "Ns" | "S" => self.affect == Some(code),
            other => panic!("unknown attribute code {other}"),
        }
    }

    pub fn in_group(&self, group: &str) -> bool {
        group.split('+').all(|c| self.has(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub acc: Option<f64>,
    pub acc_gan: Option<f64>,
    pub acc_real: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn frac(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `None` when the group selects nothing.
pub fn individual(rows: &[Row], group: &str) -> Option<Individual> {
    let members: Vec<&Row> = rows.iter().filter(|r| r.in_group(group)).collect();
    if members.is_empty() {
        return None;
    }
    let tp = members.iter().filter(|r| r.gan && r.predicts_gan()).count();
    let fn_ = members.iter().filter(|r| r.gan && !r.predicts_gan()).count();
    let tn = members.iter().filter(|r| !r.gan && !r.predicts_gan()).count();
    let fp = members.iter().filter(|r| !r.gan && r.predicts_gan()).count();
    Some(Individual {
        acc: frac(tp + tn, members.len()),
        acc_gan: frac(tp, tp + fn_),
        acc_real: frac(tn, tn + fp),
        fpr: frac(fp, fp + tn),
        fnr: frac(fn_, tp + fn_),
    })
}

fn min_over_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?, b?);
    let hi = a.max(b);
    (hi > 0.0).then(|| a.min(b) / hi)
}

/// Rate of predicting the class over all group rows.
fn prediction_rate(rows: &[Row], group: &str, gan: bool) -> Option<f64> {
    let members: Vec<&Row> = rows.iter().filter(|r| r.in_group(group)).collect();
    let hits = members.iter().filter(|r| r.predicts_gan() == gan).count();
    frac(hits, members.len())
}

/// Rate of correct predictions among group rows whose truth is the class.
fn opportunity_rate(rows: &[Row], group: &str, gan: bool) -> Option<f64> {
    let truth: Vec<&Row> = rows.iter().filter(|r| r.in_group(group) && r.gan == gan).collect();
    let hits = truth.iter().filter(|r| r.predicts_gan() == gan).count();
    frac(hits, truth.len())
}

pub fn dp(rows: &[Row], left: &str, right: &str, gan: bool) -> Option<f64> {
    min_over_max(prediction_rate(rows, left, gan), prediction_rate(rows, right, gan))
}

pub fn eo(rows: &[Row], left: &str, right: &str, gan: bool) -> Option<f64> {
    min_over_max(opportunity_rate(rows, left, gan), opportunity_rate(rows, right, gan))
}

fn mean_truth_score(rows: &[Row], group: &str, gan: bool) -> Option<f64> {
    let scores: Vec<f64> = rows
        .iter()
        .filter(|r| r.in_group(group) && r.gan == gan)
        .map(|r| if gan { r.score_gan } else { r.score_real })
        .collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn acs(rows: &[Row], left: &str, right: &str, gan: bool) -> Option<f64> {
    let l = mean_truth_score(rows, left, gan)?;
    let r = mean_truth_score(rows, right, gan)?;
    (r != 0.0).then(|| 1.0 - l / r)
}

pub const GROUPS: [&str; 10] = ["F", "M", "D", "L", "Ns", "S", "D+F", "D+M", "L+F", "L+M"];

pub const PAIRS: [(&str, &str); 9] = [
    ("F", "M"),
    ("D", "L"),
    ("Ns", "S"),
    ("D+F", "D+M"),
    ("L+F", "L+M"),
    ("D+F", "L+F"),
    ("D+M", "L+M"),
    ("D+F", "L+M"),
    ("L+F", "D+M"),
];
