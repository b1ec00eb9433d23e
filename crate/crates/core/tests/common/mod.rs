#![allow(dead_code)]

pub mod oracle;
pub mod props;

use fairaudit_core::predictions::join;
use fairaudit_core::{
    AttributeSet, ClassLabel, EvaluationSet, ImageRecord, Manifest, ManifestMeta, PredictionRecord,
};
use proptest::prelude::*;

use oracle::Row;

pub fn to_evaluation_set(rows: &[Row], model_id: &str, setting: &str) -> EvaluationSet {
    let (m, p) = to_inputs(rows, model_id, setting);
    join(&m, &p).unwrap()
}

pub fn to_inputs(rows: &[Row], model_id: &str, setting: &str) -> (Manifest, Vec<PredictionRecord>) {
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let id = format!("img-{i:05}");
        records.push(ImageRecord {
            image_id: id.clone(),
            uri: String::new(),
            true_class: if r.gan { ClassLabel::Gan } else { ClassLabel::Real },
            attributes: AttributeSet {
                gender: r.gender.map(|g| g.parse().unwrap()),
                skin: r.skin.map(|s| s.parse().unwrap()),
                affect: r.affect.map(|a| a.parse().unwrap()),
            },
        });
        preds.push(PredictionRecord {
            image_id: id,
            score_gan: r.score_gan,
            score_real: r.score_real,
            model_id: model_id.to_owned(),
            setting: setting.to_owned(),
        });
    }
    (Manifest::new(ManifestMeta::new("prop", setting), records), preds)
}

/// Scores on a coarse grid so that exact ties occur regularly.
fn score() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        (0u32..=20).prop_map(|k| {
            let g = k as f64 / 20.0;
            (g, 1.0 - g)
        }),
        (0.0f64..=1.0).prop_map(|g| (g, 1.0 - g)),
    ]
}

pub fn row() -> impl Strategy<Value = Row> {
    (
        prop::option::weighted(0.9, prop::sample::select(vec!["F", "M"])),
        prop::option::weighted(0.9, prop::sample::select(vec!["D", "L"])),
        prop::option::weighted(0.7, prop::sample::select(vec!["Ns", "S"])),
        any::<bool>(),
        score(),
    )
        .prop_map(|(gender, skin, affect, gan, (sg, sr))| {
            let mut r = Row {
                gender,
                skin,
                affect,
                gan,
                score_gan: sg,
                score_real: sr,
            };
            if r.gender.is_none() && r.skin.is_none() && r.affect.is_none() {
                r.gender = Some("F");
            }
            r
        })
}

pub fn rows(max: usize) -> impl Strategy<Value = Vec<Row>> {
    prop::collection::vec(row(), 1..=max)
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}

/// Compares every group and pair cell of `result` with the oracle.
/// Returns the first disagreement.
pub fn check_against_oracle(
    rows: &[Row],
    result: &fairaudit_core::AuditResult,
    tol: f64,
) -> Result<(), String> {
    use fairaudit_core::metrics::{IndividualMeasure as I, PairMeasure as P};
    for g in oracle::GROUPS {
        let got = result.group(g).ok_or(format!("group {g} missing"))?;
        let want = oracle::individual(rows, g);
        let cells = [
            (I::Acc, want.and_then(|w| w.acc)),
            (I::AccGan, want.and_then(|w| w.acc_gan)),
            (I::AccReal, want.and_then(|w| w.acc_real)),
            (I::Fpr, want.and_then(|w| w.fpr)),
            (I::Fnr, want.and_then(|w| w.fnr)),
        ];
        for (m, w) in cells {
            let v = got.measure(m).value();
            if !close(v, w, tol) {
                return Err(format!("{g} {}: library {v:?}, oracle {w:?}", m.label()));
            }
        }
    }
    for (l, r) in oracle::PAIRS {
        for class in ClassLabel::ALL {
            let gan = class == ClassLabel::Gan;
            let label = format!("{l}×{r}");
            let got = result.pair(&label, class).ok_or(format!("pair {label} missing"))?;
            let cells = [
                (P::Acs, oracle::acs(rows, l, r, gan)),
                (P::Dp, oracle::dp(rows, l, r, gan)),
                (P::Eo, oracle::eo(rows, l, r, gan)),
            ];
            for (m, w) in cells {
                let v = got.measure(m).value();
                if !close(v, w, tol) {
                    return Err(format!("{label} {class} {}: library {v:?}, oracle {w:?}", m.label()));
                }
            }
        }
    }
    Ok(())
}
