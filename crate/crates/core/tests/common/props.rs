//! Property checks over random evaluation sets. Each check is a plain
//! function so that it can be driven by `proptest!` or a `TestRunner`.

use std::collections::BTreeSet;

use fairaudit_core::metrics::{
    acs, confusion, dp, eo, evaluate_all, IndividualMeasure, PairMeasure, ScoreMode, Side,
};
use fairaudit_core::report::{
    compare_settings, flag_bias, parse_cell, render_individual_table, render_pairwise_table,
    FlagSeverity, ReportFormat,
};
use fairaudit_core::{standard_pairs, ClassLabel, ConfusionCounts, GroupSelector, PairSpec};
use proptest::prelude::*;

use super::oracle::{self, Row};
use super::{check_against_oracle, close, to_evaluation_set};

fn sel(name: &str) -> GroupSelector {
    GroupSelector::standard(name).unwrap()
}

fn counts(rows: &[Row], group: &str) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in rows.iter().filter(|r| r.in_group(group)) {
        let truth = if r.gan { ClassLabel::Gan } else { ClassLabel::Real };
        let pred = if r.predicts_gan() { ClassLabel::Gan } else { ClassLabel::Real };
        c.add(truth, pred);
    }
    c
}

fn sum(a: ConfusionCounts, b: ConfusionCounts) -> ConfusionCounts {
    ConfusionCounts::new(a.tp + b.tp, a.fn_ + b.fn_, a.tn + b.tn, a.fp + b.fp)
}

pub fn matches_oracle(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let r = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    prop_assert_eq!(check_against_oracle(&rows, &r, 1e-12), Ok(()));
    Ok(())
}

pub fn individual_identities(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let r = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    for g in &r.groups {
        if let (Some(a), Some(f)) = (g.acc_gan.value(), g.fnr.value()) {
            prop_assert!((a + f - 1.0).abs() < 1e-12);
        }
        if let (Some(a), Some(f)) = (g.acc_real.value(), g.fpr.value()) {
            prop_assert!((a + f - 1.0).abs() < 1e-12);
        }
        if let (Some(acc), Some(ag), Some(ar)) =
            (g.acc.value(), g.acc_gan.value(), g.acc_real.value())
        {
            let n = (g.n_gan + g.n_real) as f64;
            let mixed = (ag * g.n_gan as f64 + ar * g.n_real as f64) / n;
            prop_assert!((acc - mixed).abs() < 1e-12);
        }
        prop_assert_eq!(g.counts.total(), g.n_gan + g.n_real);
    }
    Ok(())
}

pub fn ratio_measures_bounded_and_symmetric(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let es = to_evaluation_set(&rows, "m", "uncompressed");
    for pair in standard_pairs() {
        let swapped = pair.swapped();
        for class in ClassLabel::ALL {
            for (a, b) in [
                (dp(&es, &pair, class), dp(&es, &swapped, class)),
                (eo(&es, &pair, class), eo(&es, &swapped, class)),
            ] {
                let (a, b) = match (a, b) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(_), Err(_)) => continue,
                    _ => return Err(TestCaseError::fail("asymmetric failure")),
                };
                prop_assert_eq!(a.value.value(), b.value.value());
                if let Some(v) = a.value.value() {
                    prop_assert!((0.0..=1.0).contains(&v));
                    if a.left_rate.unwrap() > 0.0 && a.right_rate.unwrap() > 0.0 {
                        prop_assert!(v > 0.0);
                    }
                }
                let flipped = a.higher.map(|s| match s {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                    Side::Equal => Side::Equal,
                });
                prop_assert_eq!(flipped, b.higher);
            }
        }
    }
    Ok(())
}

pub fn acs_reflexive_and_reciprocal(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let es = to_evaluation_set(&rows, "m", "uncompressed");
    for pair in standard_pairs() {
        for class in ClassLabel::ALL {
            for mode in [ScoreMode::TruthClassScore, ScoreMode::PredictedConfidence] {
                let same = PairSpec::new(pair.left.clone(), pair.left.clone(), "self");
                if let Ok(o) = acs(&es, &same, class, mode) {
                    if let Some(v) = o.value.value() {
                        prop_assert_eq!(v, 0.0);
                    }
                }
                let (Ok(a), Ok(b)) = (acs(&es, &pair, class, mode), acs(&es, &pair.swapped(), class, mode)) else {
                    continue;
                };
                if let (Some(x), Some(y)) = (a.value.value(), b.value.value()) {
                    prop_assert!(((1.0 - x) * (1.0 - y) - 1.0).abs() < 1e-9);
                    prop_assert!(x.signum() == -y.signum() || x == 0.0);
                }
            }
        }
    }
    Ok(())
}

pub fn duplication_invariant(rows: Vec<Row>, k: usize) -> Result<(), TestCaseError> {
    let base = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    let repeated: Vec<Row> = rows.iter().cloned().cycle().take(rows.len() * k).collect();
    let dup = evaluate_all(&to_evaluation_set(&repeated, "m", "uncompressed"));
    for (a, b) in base.groups.iter().zip(&dup.groups) {
        for m in IndividualMeasure::ALL {
            prop_assert!(close(a.measure(m).value(), b.measure(m).value(), 1e-12));
        }
    }
    for (a, b) in base.pairs.iter().zip(&dup.pairs) {
        for m in PairMeasure::ALL {
            prop_assert!(close(a.measure(m).value(), b.measure(m).value(), 1e-12));
        }
    }
    Ok(())
}

pub fn partition_counts(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let es = to_evaluation_set(&rows, "m", "uncompressed");
    let c = |g: &str| confusion(&es, &sel(g)).unwrap_or_default();
    let gendered: Vec<Row> = rows.iter().filter(|r| r.gender.is_some()).cloned().collect();
    let skinned: Vec<Row> = rows.iter().filter(|r| r.skin.is_some()).cloned().collect();
    prop_assert_eq!(sum(c("F"), c("M")), sum(counts(&gendered, "F"), counts(&gendered, "M")));
    prop_assert_eq!(sum(c("F"), c("M")).total() as usize, gendered.len());
    prop_assert_eq!(sum(c("D"), c("L")).total() as usize, skinned.len());
    let both: Vec<Row> = rows.iter().filter(|r| r.gender.is_some() && r.skin.is_some()).cloned().collect();
    prop_assert_eq!(sum(counts(&both, "D+F"), counts(&both, "L+F")), counts(&both, "F"));
    prop_assert_eq!(sum(counts(&both, "D+F"), counts(&both, "D+M")), counts(&both, "D"));
    for g in oracle::GROUPS {
        prop_assert_eq!(c(g), counts(&rows, g));
    }
    Ok(())
}

pub fn flags_monotone_in_threshold(rows: Vec<Row>, t1: f64, t2: f64) -> Result<(), TestCaseError> {
    let r = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let flagged = |t| -> BTreeSet<(String, ClassLabel)> {
        flag_bias(&r, t)
            .into_iter()
            .filter(|f| f.severity == FlagSeverity::Flagged)
            .map(|f| (f.pair, f.class_label))
            .collect()
    };
    prop_assert!(flagged(lo).is_subset(&flagged(hi)));
    Ok(())
}

pub fn csv_tables_round_trip_at_display_precision(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let r = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    let csv = render_individual_table(&r, ReportFormat::Csv);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (line, m) in lines.zip(IndividualMeasure::ALL) {
        let cells: Vec<&str> = line.split(',').collect();
        prop_assert_eq!(cells[0], m.label());
        for (cell, group) in cells[1..].iter().zip(&header[1..]) {
            let v = r.group(group).unwrap().measure(m).value();
            let parsed = parse_cell(cell);
            let (scale, half) = if m.is_percentage() { (100.0, 0.005) } else { (1.0, 0.0005) };
            prop_assert!(close(parsed, v.map(|x| x * scale), half + 1e-9));
        }
    }
    let csv = render_pairwise_table(&r, ReportFormat::Csv);
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let class: ClassLabel = cells[0].parse().unwrap();
        let m = PairMeasure::ALL.into_iter().find(|m| m.label() == cells[1]).unwrap();
        let v = r.pair(cells[2], class).unwrap().measure(m).value();
        prop_assert!(close(parse_cell(cells[3]), v, 0.00005 + 1e-9));
    }
    Ok(())
}

pub fn class_blocks_follow_oracle_independently(rows: Vec<Row>) -> Result<(), TestCaseError> {
    let es = to_evaluation_set(&rows, "m", "uncompressed");
    for (pair, (l, r)) in standard_pairs().iter().zip(oracle::PAIRS) {
        for (class, gan) in [(ClassLabel::Gan, true), (ClassLabel::Real, false)] {
            let got = dp(&es, pair, class).ok().and_then(|o| o.value.value());
            prop_assert!(close(got, oracle::dp(&rows, l, r, gan), 1e-12));
        }
    }
    Ok(())
}

pub fn row_order_irrelevant(rows: Vec<Row>, seed: u64) -> Result<(), TestCaseError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut shuffled = rows.clone();
    shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let a = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    let b = evaluate_all(&to_evaluation_set(&shuffled, "m", "uncompressed"));
    let again = evaluate_all(&to_evaluation_set(&rows, "m", "uncompressed"));
    prop_assert_eq!(&a, &again);
    prop_assert_eq!(
        a.groups.iter().map(|g| g.counts).collect::<Vec<_>>(),
        b.groups.iter().map(|g| g.counts).collect::<Vec<_>>()
    );
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        for m in PairMeasure::ALL {
            prop_assert!(close(x.measure(m).value(), y.measure(m).value(), 1e-12));
        }
    }
    Ok(())
}

pub fn comparison_antisymmetric(a: Vec<Row>, b: Vec<Row>) -> Result<(), TestCaseError> {
    let ra = evaluate_all(&to_evaluation_set(&a, "m", "uncompressed"));
    let rb = evaluate_all(&to_evaluation_set(&b, "m", "jpeg-q90"));
    let ab = compare_settings(&ra, &rb).unwrap();
    let ba = compare_settings(&rb, &ra).unwrap();
    prop_assert_eq!(ab.pairs.len(), ba.pairs.len());
    for (x, y) in ab.pairs.iter().zip(&ba.pairs) {
        match (x.delta.value(), y.delta.value()) {
            (Some(p), Some(q)) => prop_assert_eq!(p, -q),
            (None, None) => {}
            _ => return Err(TestCaseError::fail("definedness differs")),
        }
    }
    for (x, y) in ab.groups.iter().zip(&ba.groups) {
        prop_assert!(close(x.delta.value(), y.delta.value().map(|v| -v), 0.0));
    }
    Ok(())
}
