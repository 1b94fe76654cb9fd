//! Metrics, comparison reports and the submission writer.
//!
//! Precision, recall and F1 are 0 whenever their denominator is 0; such
//! cases set the `degenerate` flag instead of producing NaN.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts with the class roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "{} gold labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Some denominator was zero and the 0 convention applied.
    pub degenerate: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassMetrics {
    /// Metrics of the positive class of `c`.
    pub fn positive(c: &ConfusionCounts) -> Self {
        let (precision, dp) = ratio(c.tp, c.tp + c.fp);
        let (recall, dr) = ratio(c.tp, c.tp + c.fn_);
        let (f1, df) = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
        Self {
            precision,
            recall,
            f1,
            degenerate: dp || dr || df,
        }
    }
}

fn check_nonempty(y_true: &[Label]) -> Result<()> {
    if y_true.is_empty() {
        return Err(Error::Undefined("F1 of an empty label list".to_owned()));
    }
    Ok(())
}

/// Unweighted mean of the class-0 and class-1 F1 scores.
pub fn macro_f1(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    let c = confusion(y_true, y_pred)?;
    check_nonempty(y_true)?;
    Ok(0.5 * (ClassMetrics::positive(&c).f1 + ClassMetrics::positive(&c.swapped()).f1))
}

/// F1 of the check-worthy class alone.
pub fn positive_f1(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    let c = confusion(y_true, y_pred)?;
    check_nonempty(y_true)?;
    Ok(ClassMetrics::positive(&c).f1)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub macro_f1: f64,
    pub positive_f1: f64,
    /// Indexed by label value: `[not check-worthy, check-worthy]`.
    pub classes: [ClassMetrics; 2],
    pub degenerate: bool,
}

impl Metrics {
    pub fn compute(y_true: &[Label], y_pred: &[Label]) -> Result<Self> {
        let c = confusion(y_true, y_pred)?;
        check_nonempty(y_true)?;
        let pos = ClassMetrics::positive(&c);
        let neg = ClassMetrics::positive(&c.swapped());
        Ok(Self {
            n: c.total(),
            macro_f1: 0.5 * (pos.f1 + neg.f1),
            positive_f1: pos.f1,
            classes: [neg, pos],
            degenerate: pos.degenerate || neg.degenerate,
        })
    }

    /// Metrics known only by their headline scores, as in a published table.
    pub fn from_scores(macro_f1: f64, positive_f1: f64) -> Self {
        Self {
            macro_f1,
            positive_f1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunRole {
    /// Sentence encoder alone; the triple branch is zeroed.
    LmOnly,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRun {
    pub system: String,
    pub role: RunRole,
    pub language: String,
    pub split: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub language: String,
    pub split: String,
    /// Macro-F1 x 100, rounded to 3 decimals.
    pub lm_score: f64,
    pub fused_score: f64,
    pub delta: f64,
    pub rendered_delta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ScoredRun>,
    pub gains: Vec<GainRow>,
}

/// Score x 100 in integer thousandths; the basis of every rendered number.
fn thousandths(score: f64) -> i64 {
    (score * 100_000.0).round() as i64
}

fn format_thousandths(v: i64, signed: bool) -> String {
    let sign = if v < 0 {
        "-"
    } else if signed {
        "+"
    } else {
        ""
    };
    format!("{sign}{}.{:03}", v.unsigned_abs() / 1000, v.unsigned_abs() % 1000)
}

/// Dev-report style: x 100 with three decimals, e.g. `84.042`.
pub fn render_score(score: f64) -> String {
    format_thousandths(thousandths(score), false)
}

/// Final-test style: x 100 with one decimal, e.g. `71.1`.
pub fn render_final(score: f64) -> String {
    let tenths = (score * 1000.0).round() as i64;
    let sign = if tenths < 0 { "-" } else { "" };
    format!("{sign}{}.{}", tenths.unsigned_abs() / 10, tenths.unsigned_abs() % 10)
}

/// Signed difference of two rendered scores, e.g. `+2.416`.
pub fn render_delta(lm: f64, fused: f64) -> String {
    format_thousandths(thousandths(fused) - thousandths(lm), true)
}

/// Pairs every LM-only run with the fused run of the same language and split.
pub fn build_report(runs: &[ScoredRun]) -> Result<EvalReport> {
    let mut groups: BTreeMap<(&str, &str), [Option<&ScoredRun>; 2]> = BTreeMap::new();
    let mut order = Vec::new();
    for run in runs {
        let key = (run.language.as_str(), run.split.as_str());
        let slot = groups.entry(key).or_insert_with(|| {
            order.push(key);
            [None, None]
        });
        let i = match run.role {
            RunRole::LmOnly => 0,
            RunRole::Fused => 1,
        };
        if slot[i].is_some() {
            return Err(Error::Report(format!(
                "two {:?} runs for language `{}`, split `{}`",
                run.role, run.language, run.split
            )));
        }
        slot[i] = Some(run);
    }

    let mut gains = Vec::with_capacity(order.len());
    for key in order {
        let (lm, fused) = match groups[&key] {
            [Some(lm), Some(fused)] => (lm, fused),
            [lm, _] => {
                let missing = if lm.is_none() { "LM-only" } else { "fused" };
                return Err(Error::Report(format!(
                    "no {missing} run to pair with for language `{}`, split `{}`",
                    key.0, key.1
                )));
            }
        };
        let (l, f) = (thousandths(lm.metrics.macro_f1), thousandths(fused.metrics.macro_f1));
        gains.push(GainRow {
            language: key.0.to_owned(),
            split: key.1.to_owned(),
            lm_score: l as f64 / 1000.0,
            fused_score: f as f64 / 1000.0,
            delta: (f - l) as f64 / 1000.0,
            rendered_delta: format_thousandths(f - l, true),
        });
    }
    Ok(EvalReport {
        rows: runs.to_vec(),
        gains,
    })
}

impl EvalReport {
    /// Fixed-width text table; scores x 100 with three decimals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:<6} {:<8} {:>6} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}  flags",
            "system", "lang", "split", "n", "macro_f1", "pos_f1", "P(No)", "R(No)", "P(Yes)", "R(Yes)"
        );
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{:<14} {:<6} {:<8} {:>6} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}  {}",
                r.system,
                r.language,
                r.split,
                m.n,
                render_score(m.macro_f1),
                render_score(m.positive_f1),
                render_score(m.classes[0].precision),
                render_score(m.classes[0].recall),
                render_score(m.classes[1].precision),
                render_score(m.classes[1].recall),
                if m.degenerate { "degenerate" } else { "" }
            );
        }
        if !self.gains.is_empty() {
            out.push('\n');
            let _ = writeln!(out, "{:<6} {:<8} {:>9} {:>11} {:>17}", "lang", "split", "LM", "LM+Triples", "Performance gain");
            for g in &self.gains {
                let _ = writeln!(
                    out,
                    "{:<6} {:<8} {:>9} {:>11} {:>17}",
                    g.language,
                    g.split,
                    format_thousandths((g.lm_score * 1000.0).round() as i64, false),
                    format_thousandths((g.fused_score * 1000.0).round() as i64, false),
                    g.rendered_delta
                );
            }
        }
        out
    }

    /// Final-test style lines, one decimal, both F1 variants.
    pub fn render_final(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{} {} {} macro_f1={} positive_f1={}",
                r.system,
                r.language,
                r.split,
                render_final(r.metrics.macro_f1),
                render_final(r.metrics.positive_f1)
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes `id<TAB>Yes|No<TAB>run_id` lines and returns the line count.
pub fn write_submission(preds: &[(String, Label)], run_id: &str, path: &Path) -> Result<usize> {
    let mut seen = HashSet::with_capacity(preds.len());
    let mut out = String::new();
    for (id, label) in preds {
        if !seen.insert(id.as_str()) {
            return Err(Error::Validation(format!("duplicate id `{id}` in submission")));
        }
        let _ = writeln!(out, "{id}\t{}\t{run_id}", label.as_str());
    }
    fs::write(path, out)?;
    Ok(preds.len())
}
