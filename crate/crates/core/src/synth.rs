//! Synthetic evaluation sets with prescribed confusion counts.
//!
//! Used to rebuild published result tables as fixtures and to produce toy
//! prediction files. Scores are drawn from a seeded generator so that the
//! output is reproducible; the winning score always lies in (0.5, 1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifest::{
    Affect, AttributeSet, ClassLabel, Gender, ImageRecord, Manifest, ManifestMeta, Skin,
};
use crate::metrics::ConfusionCounts;
use crate::predictions::{join, EvaluationSet, PredictionRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub attributes: AttributeSet,
    pub counts: ConfusionCounts,
}

impl GroupSpec {
    pub fn new(attributes: AttributeSet, counts: ConfusionCounts) -> Self {
        Self { attributes, counts }
    }
}

fn attr_code(a: &AttributeSet) -> String {
    let parts: Vec<&str> = [
        a.skin.map(Skin::as_str),
        a.gender.map(Gender::as_str),
        a.affect.map(Affect::as_str),
    ]
    .into_iter()
    .flatten()
    .collect();
    if parts.is_empty() {
        "none".to_owned()
    } else {
        parts.join("")
    }
}

/// Group specs for a corpus made of the four skin x gender intersection
/// groups plus a separate affect-only corpus.
///
/// `intersections` is ordered D+F, D+M, L+F, L+M; `affect` is Ns, S.
pub fn intersection_and_affect_layout(
    intersections: [ConfusionCounts; 4],
    affect: [ConfusionCounts; 2],
) -> Vec<GroupSpec> {
    let cells = [
        (Skin::Dark, Gender::Female),
        (Skin::Dark, Gender::Male),
        (Skin::Light, Gender::Female),
        (Skin::Light, Gender::Male),
    ];
    let mut specs: Vec<GroupSpec> = cells
        .iter()
        .zip(intersections)
        .map(|(&(skin, gender), counts)| {
            GroupSpec::new(
                AttributeSet {
                    gender: Some(gender),
                    skin: Some(skin),
                    affect: None,
                },
                counts,
            )
        })
        .collect();
    specs.extend(
        [Affect::NonSmiling, Affect::Smiling]
            .iter()
            .zip(affect)
            .map(|(&a, counts)| {
                GroupSpec::new(
                    AttributeSet {
                        affect: Some(a),
                        ..Default::default()
                    },
                    counts,
                )
            }),
    );
    specs
}

/// Builds a manifest and one model's predictions realising exactly the
/// given counts per group. Image ids are `<attrs>-<n>`, e.g. `DF-000012`.
pub fn synthesize(
    specs: &[GroupSpec],
    model_id: &str,
    setting: &str,
    seed: u64,
) -> (Manifest, Vec<PredictionRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut preds = Vec::new();

    for spec in specs {
        let code = attr_code(&spec.attributes);
        let c = spec.counts;
        let cells = [
            (ClassLabel::Gan, ClassLabel::Gan, c.tp),
            (ClassLabel::Gan, ClassLabel::Real, c.fn_),
            (ClassLabel::Real, ClassLabel::Real, c.tn),
            (ClassLabel::Real, ClassLabel::Gan, c.fp),
        ];
        let mut n = 0usize;
        for (truth, predicted, count) in cells {
            for _ in 0..count {
                let image_id = format!("{code}-{n:06}");
                n += 1;
                let winning: f64 = rng.gen_range(0.501..0.999);
                let score_gan = match predicted {
                    ClassLabel::Gan => winning,
                    ClassLabel::Real => 1.0 - winning,
                };
                records.push(ImageRecord {
                    image_id: image_id.clone(),
                    uri: format!("synthetic/{image_id}.png"),
                    true_class: truth,
                    attributes: spec.attributes,
                });
                preds.push(PredictionRecord {
                    image_id,
                    score_gan,
                    score_real: 1.0 - score_gan,
                    model_id: model_id.to_owned(),
                    setting: setting.to_owned(),
                });
            }
        }
    }
    let manifest = Manifest::new(ManifestMeta::new("synthetic", setting), records);
    (manifest, preds)
}

/// [`synthesize`] followed by the join.
pub fn evaluation_set(specs: &[GroupSpec], model_id: &str, setting: &str, seed: u64) -> EvaluationSet {
    let (m, p) = synthesize(specs, model_id, setting, seed);
    join(&m, &p).expect("synthesised manifest and predictions join bijectively")
}
