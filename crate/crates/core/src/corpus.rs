//! Shared-task corpus ingestion.
//!
//! Files are UTF-8, tab-separated, with a header line followed by
//! `sentence_id<TAB>text<TAB>class_label` rows. The label column is
//! optional for the unlabeled test split. Text is kept verbatim.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TSV_HEADER: &str = "sentence_id\ttext\tclass_label";

/// Binary check-worthiness label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "No")]
    NotCheckworthy = 0,
    #[serde(rename = "Yes")]
    Checkworthy = 1,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Checkworthy
        } else {
            Label::NotCheckworthy
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Checkworthy
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    /// Target value for the sigmoid head.
    pub fn target(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Checkworthy => "Yes",
            Label::NotCheckworthy => "No",
        }
    }

    /// Case-insensitive `Yes`/`No`; anything else is rejected.
    pub fn parse(s: &str) -> Option<Self> {
        if s.eq_ignore_ascii_case("yes") {
            Some(Label::Checkworthy)
        } else if s.eq_ignore_ascii_case("no") {
            Some(Label::NotCheckworthy)
        } else {
            None
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub language: String,
    pub label: Option<Label>,
}

impl LabeledSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>, language: impl Into<String>, label: Option<Label>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            language: language.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Devtest,
    Test,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Devtest, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Devtest => "devtest",
            Split::Test => "test",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Split::Test
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "devtest" | "dev-test" | "dev_test" => Ok(Split::Devtest),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub language: String,
    pub train: Vec<LabeledSentence>,
    pub dev: Vec<LabeledSentence>,
    pub devtest: Vec<LabeledSentence>,
    pub test: Option<Vec<LabeledSentence>>,
}

impl DatasetSplits {
    pub fn get(&self, split: Split) -> Option<&[LabeledSentence]> {
        match split {
            Split::Train => Some(&self.train),
            Split::Dev => Some(&self.dev),
            Split::Devtest => Some(&self.devtest),
            Split::Test => self.test.as_deref(),
        }
    }

    /// Splits that are present, in canonical order.
    pub fn present(&self) -> impl Iterator<Item = (Split, &[LabeledSentence])> {
        Split::ALL.into_iter().filter_map(move |s| self.get(s).map(|rows| (s, rows)))
    }

    pub fn find(&self, id: &str) -> Option<(Split, &LabeledSentence)> {
        self.present()
            .find_map(|(split, rows)| rows.iter().find(|r| r.id == id).map(|r| (split, r)))
    }
}

/// Parses one TSV stream. The first line is a header and is skipped.
pub fn parse_tsv(content: &str, has_labels: bool, language: &str) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in content.lines().enumerate().skip(1) {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let label = match (cols.len(), has_labels) {
            (3, _) => {
                let cell = cols[2].trim();
                match Label::parse(cell) {
                    Some(l) => Some(l),
                    None => {
                        return Err(Error::Validation(format!(
                            "line {line_no}: unknown label `{cell}` (expected Yes or No)"
                        )))
                    }
                }
            }
            (2, false) => None,
            (n, _) => {
                let expected = if has_labels { "3" } else { "2 or 3" };
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {expected} tab-separated columns, found {n}"),
                });
            }
        };

        let id = cols[0];
        let text = cols[1];
        if id.is_empty() {
            return Err(Error::Validation(format!("line {line_no}: empty sentence id")));
        }
        if text.trim().is_empty() {
            return Err(Error::Validation(format!("line {line_no}: empty text for id `{id}`")));
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::Validation(format!("line {line_no}: duplicate id `{id}`")));
        }
        out.push(LabeledSentence::new(id, text, language, label));
    }
    Ok(out)
}

/// Writes rows back in the distribution format, LF line endings.
pub fn serialize_tsv(rows: &[LabeledSentence], with_labels: bool) -> String {
    let mut out = String::new();
    if with_labels {
        out.push_str(TSV_HEADER);
    } else {
        out.push_str("sentence_id\ttext");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.id);
        out.push('\t');
        out.push_str(&row.text);
        if with_labels {
            out.push('\t');
            out.push_str(row.label.map(Label::as_str).unwrap_or(""));
        }
        out.push('\n');
    }
    out
}

pub fn read_tsv(path: &Path, has_labels: bool, language: &str) -> Result<Vec<LabeledSentence>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let content = fs::read_to_string(path)?;
    parse_tsv(&content, has_labels, language)
}

/// Loads and cross-validates all configured splits. `train`, `dev` and
/// `devtest` are required; `test` is optional and may be unlabeled.
pub fn load_splits(paths: &BTreeMap<Split, PathBuf>, language: &str) -> Result<DatasetSplits> {
    let load = |split: Split| -> Result<Option<Vec<LabeledSentence>>> {
        let Some(path) = paths.get(&split) else {
            return if split.is_labeled() {
                Err(Error::Config(format!("missing required split `{split}`")))
            } else {
                Ok(None)
            };
        };
        let rows = read_tsv(path, split.is_labeled(), language)?;
        if split.is_labeled() {
            if let Some(r) = rows.iter().find(|r| r.label.is_none()) {
                return Err(Error::Validation(format!("split `{split}`: row `{}` has no label", r.id)));
            }
        }
        Ok(Some(rows))
    };

    let splits = DatasetSplits {
        language: language.to_owned(),
        train: load(Split::Train)?.unwrap_or_default(),
        dev: load(Split::Dev)?.unwrap_or_default(),
        devtest: load(Split::Devtest)?.unwrap_or_default(),
        test: load(Split::Test)?,
    };
    check_disjoint(&splits)?;
    Ok(splits)
}

fn check_disjoint(splits: &DatasetSplits) -> Result<()> {
    let mut owner: BTreeMap<&str, Split> = BTreeMap::new();
    for (split, rows) in splits.present() {
        for row in rows {
            if let Some(prev) = owner.insert(&row.id, split) {
                return Err(Error::Validation(format!(
                    "id `{}` appears in both `{prev}` and `{split}`",
                    row.id
                )));
            }
        }
    }
    Ok(())
}

/// Per-label counts. Empty input gives an empty map; otherwise both labels
/// are present, possibly with a zero count.
pub fn class_balance(rows: &[LabeledSentence]) -> Result<BTreeMap<Label, usize>> {
    let mut counts = BTreeMap::new();
    if rows.is_empty() {
        return Ok(counts);
    }
    counts.insert(Label::NotCheckworthy, 0);
    counts.insert(Label::Checkworthy, 0);
    for row in rows {
        let label = row
            .label
            .ok_or_else(|| Error::Validation(format!("row `{}` has no label", row.id)))?;
        *counts.entry(label).or_default() += 1;
    }
    Ok(counts)
}
