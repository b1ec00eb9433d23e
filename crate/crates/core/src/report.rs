//! Table rendering, bias flags and setting comparison.
//!
//! Display precision: accuracies as percentages with 2 decimals, FPR/FNR with
//! 3 decimals, pairwise measures with 4 decimals (ACS signed). Rounding is
//! round-half-to-even on the exact value of the double and happens only here.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::manifest::{standard_pairs, ClassLabel};
use crate::metrics::{AuditResult, IndividualMeasure, Measure, PairMeasure};

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_DP_THRESHOLD: f64 = 0.80;
pub const DEFAULT_AMPLIFICATION_EPSILON: f64 = 0.005;
/// Cell text for undefined values.
pub const UNDEFINED_CELL: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown report format {s:?}"))),
        }
    }
}

/// Fixed-point formatting with round-half-to-even; never yields `-0.00`.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_owned(),
        _ => s,
    }
}

pub fn format_individual(m: IndividualMeasure, v: &Measure) -> String {
    match v.value() {
        None => UNDEFINED_CELL.to_owned(),
        Some(x) if m.is_percentage() => fixed(x * 100.0, 2),
        Some(x) => fixed(x, 3),
    }
}

pub fn format_pairwise(m: PairMeasure, v: &Measure) -> String {
    match (m, v.value()) {
        (_, None) => UNDEFINED_CELL.to_owned(),
        (PairMeasure::Acs, Some(x)) => {
            let s = fixed(x, 4);
            if s.starts_with('-') || s == "0.0000" {
                s
            } else {
                format!("+{s}")
            }
        }
        (_, Some(x)) => fixed(x, 4),
    }
}

/// Parses a rendered cell back to a number; `None` for the undefined marker.
pub fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim().trim_matches('*');
    if cell == UNDEFINED_CELL {
        return None;
    }
    cell.trim_start_matches('+').parse().ok()
}

fn cell_json(cell: &str) -> serde_json::Value {
    parse_cell(cell).map_or(serde_json::Value::Null, |v| json!(v))
}

fn csv_line(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(cells).expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 cells")
}

fn markdown_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn markdown_rule(n: usize) -> String {
    format!("|{}\n", "---|".repeat(n))
}

fn json_doc(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json values serialise");
    s.push('\n');
    s
}

/// Rows Acc, Acc_gan, Acc_real, FPR, FNR by the ten group columns.
pub fn render_individual_table(r: &AuditResult, fmt: ReportFormat) -> String {
    let columns: Vec<String> = r.groups.iter().map(|g| g.group.clone()).collect();
    let rows: Vec<(IndividualMeasure, Vec<String>)> = IndividualMeasure::ALL
        .iter()
        .map(|&m| {
            let cells = r
                .groups
                .iter()
                .map(|g| format_individual(m, g.measure(m)))
                .collect();
            (m, cells)
        })
        .collect();

    match fmt {
        ReportFormat::Markdown => {
            let mut out = format!(
                "### Individual measures: {} ({})\n\n",
                r.model_id, r.setting
            );
            let mut header = vec!["Metric".to_owned()];
            header.extend(columns.iter().cloned());
            out += &markdown_row(&header);
            out += &markdown_rule(header.len());
            for (m, cells) in &rows {
                let mut line = vec![m.label().to_owned()];
                line.extend(cells.iter().cloned());
                out += &markdown_row(&line);
            }
            out
        }
        ReportFormat::Csv => {
            let mut header = vec!["metric".to_owned()];
            header.extend(columns.iter().cloned());
            let mut out = csv_line(&header);
            for (m, cells) in &rows {
                let mut line = vec![m.label().to_owned()];
                line.extend(cells.iter().cloned());
                out += &csv_line(&line);
            }
            out
        }
        ReportFormat::Json => json_doc(json!({
            "report_version": REPORT_VERSION,
            "kind": "individual",
            "model_id": r.model_id,
            "setting": r.setting,
            "columns": columns,
            "rows": rows.iter().map(|(m, cells)| json!({
                "metric": m.label(),
                "values": cells.iter().map(|c| cell_json(c)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })),
    }
}

pub fn render_pairwise_table(r: &AuditResult, fmt: ReportFormat) -> String {
    render_pairwise_table_with(r, fmt, DEFAULT_DP_THRESHOLD)
}

/// Two blocks (GAN, Real) of ACS/DP/EO rows by the nine pair columns. DP
/// cells below `dp_threshold` are marked (bold in markdown, `flagged` column
/// in csv and json).
pub fn render_pairwise_table_with(r: &AuditResult, fmt: ReportFormat, dp_threshold: f64) -> String {
    let columns: Vec<String> = standard_pairs().iter().map(|p| p.label()).collect();
    struct Row {
        class: ClassLabel,
        measure: PairMeasure,
        cells: Vec<String>,
        flagged: Vec<bool>,
    }
    let mut rows = Vec::new();
    for class in ClassLabel::ALL {
        for measure in PairMeasure::ALL {
            let mut cells = Vec::with_capacity(columns.len());
            let mut flagged = Vec::with_capacity(columns.len());
            for label in &columns {
                let v = r.pair(label, class).map(|p| p.measure(measure).clone());
                let v = v.unwrap_or_else(|| Measure::undefined("pair missing from result"));
                flagged.push(measure == PairMeasure::Dp && v.value().is_some_and(|x| x < dp_threshold));
                cells.push(format_pairwise(measure, &v));
            }
            rows.push(Row {
                class,
                measure,
                cells,
                flagged,
            });
        }
    }

    match fmt {
        ReportFormat::Markdown => {
            let mut out = format!(
                "### Pairwise measures: {} ({})\n\n",
                r.model_id, r.setting
            );
            let mut header = vec!["Class".to_owned(), "Measure".to_owned()];
            header.extend(columns.iter().cloned());
            out += &markdown_row(&header);
            out += &markdown_rule(header.len());
            for row in &rows {
                let mut line = vec![row.class.to_string(), row.measure.label().to_owned()];
                line.extend(row.cells.iter().zip(&row.flagged).map(|(c, &f)| {
                    if f {
                        format!("**{c}**")
                    } else {
                        c.clone()
                    }
                }));
                out += &markdown_row(&line);
            }
            let _ = write!(out, "\nBold DP cells are below {}.\n", fixed(dp_threshold, 2));
            out
        }
        ReportFormat::Csv => {
            let header = ["class", "measure", "pair", "value", "flagged"].map(String::from);
            let mut out = csv_line(&header);
            for row in &rows {
                for ((label, cell), flagged) in columns.iter().zip(&row.cells).zip(&row.flagged) {
                    out += &csv_line(&[
                        row.class.to_string(),
                        row.measure.label().to_owned(),
                        label.clone(),
                        cell.clone(),
                        flagged.to_string(),
                    ]);
                }
            }
            out
        }
        ReportFormat::Json => json_doc(json!({
            "report_version": REPORT_VERSION,
            "kind": "pairwise",
            "model_id": r.model_id,
            "setting": r.setting,
            "dp_threshold": dp_threshold,
            "columns": columns,
            "rows": rows.iter().map(|row| json!({
                "class": row.class,
                "measure": row.measure.label(),
                "values": row.cells.iter().map(|c| cell_json(c)).collect::<Vec<_>>(),
                "flagged": row.flagged,
            })).collect::<Vec<_>>(),
        })),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagSeverity {
    Flagged,
    Watch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFlag {
    pub pair: String,
    pub class_label: ClassLabel,
    pub measure: PairMeasure,
    pub value: f64,
    pub rule: String,
    pub severity: FlagSeverity,
}

/// One `flagged` entry per (pair, class) with DP below the threshold, then
/// `watch` entries for EO values in the lowest decile of the result's
/// defined EO values. EO and ACS are never hard-flagged.
pub fn flag_bias(r: &AuditResult, dp_threshold: f64) -> Vec<BiasFlag> {
    let mut flags: Vec<BiasFlag> = r
        .pairs
        .iter()
        .filter_map(|p| {
            let v = p.dp.value()?;
            (v < dp_threshold).then(|| BiasFlag {
                pair: p.pair.clone(),
                class_label: p.class_label,
                measure: PairMeasure::Dp,
                value: v,
                rule: format!("DP < {}", fixed(dp_threshold, 2)),
                severity: FlagSeverity::Flagged,
            })
        })
        .collect();

    let mut eo: Vec<f64> = r.pairs.iter().filter_map(|p| p.eo.value()).collect();
    if !eo.is_empty() {
        eo.sort_by(f64::total_cmp);
        // nearest-rank 10th percentile
        let rank = (eo.len() as f64 * 0.1).ceil().max(1.0) as usize;
        let cutoff = eo[rank - 1];
        flags.extend(r.pairs.iter().filter_map(|p| {
            let v = p.eo.value()?;
            (v <= cutoff && v < 1.0).then(|| BiasFlag {
                pair: p.pair.clone(),
                class_label: p.class_label,
                measure: PairMeasure::Eo,
                value: v,
                rule: format!("EO in lowest decile (<= {})", fixed(cutoff, 4)),
                severity: FlagSeverity::Watch,
            })
        }));
    }
    flags
}

/// Renders flags as a markdown list, CSV or JSON.
pub fn render_flags(flags: &[BiasFlag], fmt: ReportFormat) -> String {
    match fmt {
        ReportFormat::Markdown => {
            let mut out = String::from("### Bias flags\n\n");
            if flags.is_empty() {
                out += "No flags.\n";
            }
            for f in flags {
                let _ = writeln!(
                    out,
                    "- [{}] {} {} {} = {} ({})",
                    match f.severity {
                        FlagSeverity::Flagged => "flagged",
                        FlagSeverity::Watch => "watch",
                    },
                    f.class_label,
                    f.pair,
                    f.measure.label(),
                    fixed(f.value, 4),
                    f.rule
                );
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = csv_line(&["severity", "class", "pair", "measure", "value", "rule"].map(String::from));
            for f in flags {
                out += &csv_line(&[
                    format!("{:?}", f.severity).to_lowercase(),
                    f.class_label.to_string(),
                    f.pair.clone(),
                    f.measure.label().to_owned(),
                    fixed(f.value, 4),
                    f.rule.clone(),
                ]);
            }
            out
        }
        ReportFormat::Json => json_doc(json!({
            "report_version": REPORT_VERSION,
            "kind": "flags",
            "flags": flags,
        })),
    }
}

fn delta(base: &Measure, comparison: &Measure) -> Measure {
    match (base, comparison) {
        (Measure::Value(b), Measure::Value(c)) => Measure::Value(c - b),
        (Measure::Undefined(why), _) => Measure::Undefined(format!("baseline undefined: {why}")),
        (_, Measure::Undefined(why)) => Measure::Undefined(format!("comparison undefined: {why}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDelta {
    pub group: String,
    pub measure: IndividualMeasure,
    pub base: Option<f64>,
    pub comparison: Option<f64>,
    pub delta: Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDelta {
    pub pair: String,
    pub class_label: ClassLabel,
    pub measure: PairMeasure,
    pub base: Option<f64>,
    pub comparison: Option<f64>,
    pub delta: Measure,
    /// DP/EO only: the value decreased, i.e. moved away from 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplified: Option<bool>,
}

/// Between-group accuracy gap of one pair in both settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyGap {
    pub pair: String,
    pub measure: IndividualMeasure,
    pub base_gap: Option<f64>,
    pub comparison_gap: Option<f64>,
    pub widened: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingComparison {
    pub report_version: u32,
    pub model_id: String,
    pub baseline_setting: String,
    pub comparison_setting: String,
    pub epsilon: f64,
    pub groups: Vec<GroupDelta>,
    pub pairs: Vec<PairDelta>,
    /// DP entries that decreased by more than `epsilon`.
    pub amplified_dp: Vec<PairDelta>,
    pub accuracy_gaps: Vec<AccuracyGap>,
}

impl SettingComparison {
    pub fn pair_delta(&self, pair: &str, class: ClassLabel, measure: PairMeasure) -> Option<&PairDelta> {
        self.pairs
            .iter()
            .find(|d| d.pair == pair && d.class_label == class && d.measure == measure)
    }

    pub fn gap(&self, pair: &str, measure: IndividualMeasure) -> Option<&AccuracyGap> {
        self.accuracy_gaps
            .iter()
            .find(|g| g.pair == pair && g.measure == measure)
    }
}

pub fn compare_settings(base: &AuditResult, comp: &AuditResult) -> Result<SettingComparison> {
    compare_settings_with(base, comp, DEFAULT_AMPLIFICATION_EPSILON)
}

/// Per-cell deltas (`comparison - baseline`) between two results of the same
/// model. Cells missing on either side have undefined deltas.
pub fn compare_settings_with(base: &AuditResult, comp: &AuditResult, epsilon: f64) -> Result<SettingComparison> {
    if base.model_id != comp.model_id {
        return Err(Error::ModelMismatch {
            base: base.model_id.clone(),
            comparison: comp.model_id.clone(),
        });
    }
    let missing = || Measure::undefined("not present in comparison result");

    let mut groups = Vec::new();
    for g in &base.groups {
        let other = comp.group(&g.group);
        for m in IndividualMeasure::ALL {
            let b = g.measure(m);
            let c = other.map_or_else(missing, |o| o.measure(m).clone());
            groups.push(GroupDelta {
                group: g.group.clone(),
                measure: m,
                base: b.value(),
                comparison: c.value(),
                delta: delta(b, &c),
            });
        }
    }

    let mut pairs = Vec::new();
    for p in &base.pairs {
        let other = comp.pair(&p.pair, p.class_label);
        for m in PairMeasure::ALL {
            let b = p.measure(m);
            let c = other.map_or_else(missing, |o| o.measure(m).clone());
            let d = delta(b, &c);
            let amplified = match m {
                PairMeasure::Acs => None,
                _ => d.value().map(|x| x < 0.0),
            };
            pairs.push(PairDelta {
                pair: p.pair.clone(),
                class_label: p.class_label,
                measure: m,
                base: b.value(),
                comparison: c.value(),
                delta: d,
                amplified,
            });
        }
    }
    let amplified_dp = pairs
        .iter()
        .filter(|d| d.measure == PairMeasure::Dp && d.delta.value().is_some_and(|x| x < -epsilon))
        .cloned()
        .collect();

    let gap = |r: &AuditResult, left: &str, right: &str, m: IndividualMeasure| {
        let l = r.group(left)?.measure(m).value()?;
        let rr = r.group(right)?.measure(m).value()?;
        Some((l - rr).abs())
    };
    let mut accuracy_gaps = Vec::new();
    for p in standard_pairs() {
        for m in [IndividualMeasure::Acc, IndividualMeasure::AccGan, IndividualMeasure::AccReal] {
            let base_gap = gap(base, &p.left.name, &p.right.name, m);
            let comparison_gap = gap(comp, &p.left.name, &p.right.name, m);
            accuracy_gaps.push(AccuracyGap {
                pair: p.label(),
                measure: m,
                base_gap,
                comparison_gap,
                widened: base_gap.zip(comparison_gap).map(|(b, c)| c > b),
            });
        }
    }

    Ok(SettingComparison {
        report_version: REPORT_VERSION,
        model_id: base.model_id.clone(),
        baseline_setting: base.setting.clone(),
        comparison_setting: comp.setting.clone(),
        epsilon,
        groups,
        pairs,
        amplified_dp,
        accuracy_gaps,
    })
}

fn opt_cell(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| UNDEFINED_CELL.to_owned(), |x| fixed(x, decimals))
}

fn signed(v: &Measure, decimals: usize) -> String {
    match v.value() {
        None => UNDEFINED_CELL.to_owned(),
        Some(x) => {
            let s = fixed(x, decimals);
            if s.starts_with('-') || s.bytes().all(|b| b == b'0' || b == b'.') {
                s
            } else {
                format!("+{s}")
            }
        }
    }
}

pub fn render_comparison(c: &SettingComparison, fmt: ReportFormat) -> String {
    match fmt {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(c).expect("comparison serialises");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut out = csv_line(&["kind", "class", "subject", "measure", "base", "comparison", "delta", "amplified"].map(String::from));
            for g in &c.groups {
                let pct = if g.measure.is_percentage() { 100.0 } else { 1.0 };
                let d = g.delta.value().map(|x| x * pct);
                out += &csv_line(&[
                    "group".into(),
                    String::new(),
                    g.group.clone(),
                    g.measure.label().into(),
                    opt_cell(g.base.map(|x| x * pct), 4),
                    opt_cell(g.comparison.map(|x| x * pct), 4),
                    opt_cell(d, 4),
                    String::new(),
                ]);
            }
            for p in &c.pairs {
                out += &csv_line(&[
                    "pair".into(),
                    p.class_label.to_string(),
                    p.pair.clone(),
                    p.measure.label().into(),
                    opt_cell(p.base, 4),
                    opt_cell(p.comparison, 4),
                    signed(&p.delta, 4),
                    p.amplified.map(|a| a.to_string()).unwrap_or_default(),
                ]);
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = format!(
                "### {}: {} vs {}\n\n",
                c.model_id, c.baseline_setting, c.comparison_setting
            );
            out += &markdown_row(&["Class", "Pair", "Measure", "Baseline", "Comparison", "Delta", "Amplified"].map(String::from));
            out += &markdown_rule(7);
            for p in c.pairs.iter().filter(|p| p.measure != PairMeasure::Acs) {
                out += &markdown_row(&[
                    p.class_label.to_string(),
                    p.pair.clone(),
                    p.measure.label().into(),
                    opt_cell(p.base, 4),
                    opt_cell(p.comparison, 4),
                    signed(&p.delta, 4),
                    match p.amplified {
                        Some(true) => "yes".into(),
                        Some(false) => "no".into(),
                        None => UNDEFINED_CELL.into(),
                    },
                ]);
            }
            let _ = write!(
                out,
                "\n#### DP decreased by more than {}\n\n",
                fixed(c.epsilon, 3)
            );
            if c.amplified_dp.is_empty() {
                out += "None.\n";
            }
            for p in &c.amplified_dp {
                let _ = writeln!(
                    out,
                    "- {} {}: {} -> {} ({})",
                    p.class_label,
                    p.pair,
                    opt_cell(p.base, 4),
                    opt_cell(p.comparison, 4),
                    signed(&p.delta, 4)
                );
            }
            out += "\n#### Accuracy gaps (percentage points)\n\n";
            out += &markdown_row(&["Pair", "Measure", "Baseline gap", "Comparison gap", "Widened"].map(String::from));
            out += &markdown_rule(5);
            for g in &c.accuracy_gaps {
                out += &markdown_row(&[
                    g.pair.clone(),
                    g.measure.label().into(),
                    opt_cell(g.base_gap.map(|x| x * 100.0), 2),
                    opt_cell(g.comparison_gap.map(|x| x * 100.0), 2),
                    match g.widened {
                        Some(true) => "yes".into(),
                        Some(false) => "no".into(),
                        None => UNDEFINED_CELL.into(),
                    },
                ]);
            }
            out
        }
    }
}
