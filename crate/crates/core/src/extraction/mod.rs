//! Triple extraction and refinement.
//!
//! Backends implement [`Extractor`]. [`extract_triples`] applies the
//! four-triple cap and keeps the uncapped count so coverage can be measured
//! without re-running extraction. Refinements (entity filtering, pronoun
//! substitution) operate on [`TripleSet`]s and never reorder or renumber.

mod rules;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapter::JsonLineProcess;
use crate::corpus::LabeledSentence;
use crate::error::{Error, Result};

pub use rules::rule_based_extract;

/// Maximum number of triples kept per sentence.
pub const MAX_TRIPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub source_id: String,
    pub rank: usize,
}

impl Triple {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        Self {
            subject: subject.to_owned(),
            predicate: predicate.to_owned(),
            object: object.to_owned(),
            source_id: String::new(),
            rank: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    pub source_id: String,
    pub triples: Vec<Triple>,
    /// Number of triples the backend produced before capping.
    pub pre_cap_count: usize,
}

impl TripleSet {
    pub fn empty(source_id: &str) -> Self {
        Self {
            source_id: source_id.to_owned(),
            triples: Vec::new(),
            pre_cap_count: 0,
        }
    }

    /// Builds a set from already-ordered triples, assigning ranks and the
    /// source id and applying the cap.
    pub fn from_ordered(source_id: &str, triples: Vec<Triple>) -> Self {
        let pre_cap_count = triples.len();
        let triples = triples
            .into_iter()
            .take(MAX_TRIPLES)
            .enumerate()
            .map(|(rank, t)| Triple {
                source_id: source_id.to_owned(),
                rank,
                ..t
            })
            .collect();
        Self {
            source_id: source_id.to_owned(),
            triples,
            pre_cap_count,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// An open information extraction backend.
pub trait Extractor: Send + Sync {
    fn name(&self) -> &str;

    fn supports(&self, language: &str) -> bool;

    /// Triples for `text` in emission order; `rank` orders them.
    fn extract(&self, text: &str) -> std::result::Result<Vec<Triple>, String>;

    /// Same as [`Extractor::extract`], for backends that want the sentence id.
    fn extract_sentence(&self, id: &str, text: &str) -> std::result::Result<Vec<Triple>, String> {
        let _ = id;
        self.extract(text)
    }
}

/// Runs `extractor` on one sentence and caps the result by rank.
pub fn extract_triples(extractor: &dyn Extractor, sentence: &LabeledSentence) -> Result<TripleSet> {
    if !extractor.supports(&sentence.language) {
        return Err(Error::Capability {
            extractor: extractor.name().to_owned(),
            language: sentence.language.clone(),
        });
    }
    let mut raw = extractor.extract_sentence(&sentence.id, &sentence.text).map_err(|message| Error::Extraction {
        id: sentence.id.clone(),
        message,
    })?;
    raw.sort_by_key(|t| t.rank);
    if raw.windows(2).any(|w| w[0].rank == w[1].rank) {
        return Err(Error::Extraction {
            id: sentence.id.clone(),
            message: "backend returned duplicate ranks".to_owned(),
        });
    }
    Ok(TripleSet::from_ordered(&sentence.id, raw))
}

/// The built-in heuristic extractor (English only).
#[derive(Debug, Clone, Default)]
pub struct RuleBasedExtractor;

impl Extractor for RuleBasedExtractor {
    fn name(&self) -> &str {
        "rule"
    }

    fn supports(&self, language: &str) -> bool {
        language == "en"
    }

    fn extract(&self, text: &str) -> std::result::Result<Vec<Triple>, String> {
        Ok(rule_based_extract(text))
    }
}

/// Replays fixed extractions keyed by sentence text. Unknown texts yield no
/// triples.
#[derive(Debug, Clone, Default)]
pub struct StaticExtractor {
    table: HashMap<String, Vec<Triple>>,
}

impl StaticExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: &str, spo: &[(&str, &str, &str)]) {
        let triples = spo
            .iter()
            .enumerate()
            .map(|(rank, (s, p, o))| Triple {
                rank,
                ..Triple::new(s, p, o)
            })
            .collect();
        self.table.insert(text.to_owned(), triples);
    }
}

impl Extractor for StaticExtractor {
    fn name(&self) -> &str {
        "static"
    }

    fn supports(&self, _language: &str) -> bool {
        true
    }

    fn extract(&self, text: &str) -> std::result::Result<Vec<Triple>, String> {
        Ok(self.table.get(text).cloned().unwrap_or_default())
    }
}

#[derive(Serialize)]
struct AdapterRequest<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireTriple {
    s: String,
    p: String,
    #[serde(default)]
    o: String,
}

#[derive(Deserialize)]
struct AdapterResponse {
    id: String,
    triples: Vec<WireTriple>,
}

/// An out-of-process backend speaking line-delimited JSON:
/// `{"id","text"}` in, `{"id","triples":[{"s","p","o"}]}` out.
pub struct AdapterExtractor {
    name: String,
    languages: BTreeSet<String>,
    process: JsonLineProcess,
}

impl AdapterExtractor {
    pub fn spawn(command: &str, languages: impl IntoIterator<Item = String>) -> Result<Self> {
        let process = JsonLineProcess::spawn(command)?;
        Ok(Self {
            name: format!("adapter:{command}"),
            languages: languages.into_iter().collect(),
            process,
        })
    }
}

impl Extractor for AdapterExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, language: &str) -> bool {
        self.languages.is_empty() || self.languages.contains(language)
    }

    fn extract(&self, text: &str) -> std::result::Result<Vec<Triple>, String> {
        self.extract_sentence("", text)
    }

    fn extract_sentence(&self, id: &str, text: &str) -> std::result::Result<Vec<Triple>, String> {
        let resp: AdapterResponse = self.process.request(&AdapterRequest { id, text })?;
        if resp.id != id {
            return Err(format!("response id `{}` does not match request `{id}`", resp.id));
        }
        Ok(resp
            .triples
            .into_iter()
            .enumerate()
            .map(|(rank, t)| Triple {
                rank,
                ..Triple::new(&t.s, &t.p, &t.o)
            })
            .collect())
    }
}

/// Triples computed ahead of time, looked up by sentence id. Reads the
/// same JSON-lines layout that [`write_triples_jsonl`] produces.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedExtractor {
    by_id: BTreeMap<String, Vec<Triple>>,
}

impl PrecomputedExtractor {
    pub fn from_sets(sets: impl IntoIterator<Item = TripleSet>) -> Self {
        Self {
            by_id: sets.into_iter().map(|ts| (ts.source_id, ts.triples)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_sets(read_triples_jsonl(path)?))
    }
}

impl Extractor for PrecomputedExtractor {
    fn name(&self) -> &str {
        "precomputed"
    }

    fn supports(&self, _language: &str) -> bool {
        true
    }

    fn extract(&self, _text: &str) -> std::result::Result<Vec<Triple>, String> {
        Err("precomputed triples are looked up by sentence id".to_owned())
    }

    fn extract_sentence(&self, id: &str, _text: &str) -> std::result::Result<Vec<Triple>, String> {
        self.by_id.get(id).cloned().ok_or_else(|| "no precomputed triples for this id".to_owned())
    }
}

/// Returns entity mentions found in a text span.
pub trait EntityRecognizer {
    fn entities(&self, text: &str) -> BTreeSet<String>;
}

impl<F> EntityRecognizer for F
where
    F: Fn(&str) -> BTreeSet<String>,
{
    fn entities(&self, text: &str) -> BTreeSet<String> {
        self(text)
    }
}

/// Matches a fixed list of entity names on token boundaries.
#[derive(Debug, Clone, Default)]
pub struct GazetteerRecognizer {
    names: Vec<Vec<String>>,
}

impl GazetteerRecognizer {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let names = names
            .into_iter()
            .map(|n| n.as_ref().split_whitespace().map(str::to_owned).collect::<Vec<_>>())
            .filter(|n| !n.is_empty())
            .collect();
        Self { names }
    }
}

fn core_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .collect()
}

impl EntityRecognizer for GazetteerRecognizer {
    fn entities(&self, text: &str) -> BTreeSet<String> {
        let tokens = core_tokens(text);
        self.names
            .iter()
            .filter(|name| tokens.windows(name.len()).any(|w| w == name.as_slice()))
            .map(|name| name.join(" "))
            .collect()
    }
}

/// Treats runs of capitalised tokens as entity mentions, ignoring
/// capitalised function words and pronouns.
#[derive(Debug, Clone, Copy, Default)]
pub struct CapitalizationRecognizer;

const NON_ENTITY_CAPITALS: &[&str] = &[
    "i", "the", "a", "an", "this", "that", "these", "those", "he", "she", "it", "we", "they", "you", "my", "our",
    "their", "his", "her", "its", "your", "in", "on", "at", "for", "and", "but", "or", "if", "when", "there",
    "what", "who", "why", "how", "yes", "no", "mr", "mrs", "ms", "dr",
];

impl EntityRecognizer for CapitalizationRecognizer {
    fn entities(&self, text: &str) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        let mut run: Vec<&str> = Vec::new();
        for tok in core_tokens(text) {
            let capital = tok.chars().next().is_some_and(char::is_uppercase)
                && !NON_ENTITY_CAPITALS.contains(&tok.to_lowercase().as_str());
            if capital {
                run.push(tok);
            } else if !run.is_empty() {
                found.insert(run.join(" "));
                run.clear();
            }
        }
        if !run.is_empty() {
            found.insert(run.join(" "));
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityFilterMode {
    /// Keep triples with an entity in the subject or the object.
    #[default]
    Or,
    /// Keep triples with an entity in both the subject and the object.
    And,
}

/// Drops triples whose subject/object lack named entities. Ranks are kept.
pub fn filter_named_entities(ts: &TripleSet, recognizer: &dyn EntityRecognizer, mode: EntityFilterMode) -> TripleSet {
    let keep = |t: &Triple| {
        let in_subject = !recognizer.entities(&t.subject).is_empty();
        let in_object = !recognizer.entities(&t.object).is_empty();
        match mode {
            EntityFilterMode::Or => in_subject || in_object,
            EntityFilterMode::And => in_subject && in_object,
        }
    };
    TripleSet {
        source_id: ts.source_id.clone(),
        triples: ts.triples.iter().filter(|t| keep(t)).cloned().collect(),
        pre_cap_count: ts.pre_cap_count,
    }
}

/// Replaces whole tokens equal to a map key, preserving the surrounding
/// whitespace and edge punctuation.
fn substitute_tokens(text: &str, antecedents: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        let tok_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let token = &rest[..tok_len];
        rest = &rest[tok_len..];

        let lead = token.len() - token.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let inner = token[lead..].trim_end_matches(|c: char| !c.is_alphanumeric());
        match antecedents.get(inner) {
            Some(replacement) if !inner.is_empty() => {
                out.push_str(&token[..lead]);
                out.push_str(replacement);
                out.push_str(&token[lead + inner.len()..]);
            }
            _ => out.push_str(token),
        }
    }
    out
}

/// Substitutes pronouns in subjects and objects using an antecedent map.
/// Matching is exact and case-sensitive; predicates are untouched.
pub fn resolve_coreference(ts: &TripleSet, antecedents: &BTreeMap<String, String>) -> TripleSet {
    if antecedents.is_empty() {
        return ts.clone();
    }
    TripleSet {
        source_id: ts.source_id.clone(),
        triples: ts
            .triples
            .iter()
            .map(|t| Triple {
                subject: substitute_tokens(&t.subject, antecedents),
                object: substitute_tokens(&t.object, antecedents),
                ..t.clone()
            })
            .collect(),
        pre_cap_count: ts.pre_cap_count,
    }
}

/// Fraction of sentences whose uncapped extraction fits within `cap`.
pub fn coverage_stats(corpus: &[TripleSet], cap: usize) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Undefined("coverage of an empty corpus".to_owned()));
    }
    let fits = corpus.iter().filter(|ts| ts.pre_cap_count <= cap).count();
    Ok(fits as f64 / corpus.len() as f64)
}

#[derive(Serialize, Deserialize)]
struct JsonTriple {
    s: String,
    p: String,
    o: String,
    rank: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonTripleSet {
    id: String,
    pre_cap_count: usize,
    triples: Vec<JsonTriple>,
}

pub fn triple_set_to_json(ts: &TripleSet) -> String {
    let rec = JsonTripleSet {
        id: ts.source_id.clone(),
        pre_cap_count: ts.pre_cap_count,
        triples: ts
            .triples
            .iter()
            .map(|t| JsonTriple {
                s: t.subject.clone(),
                p: t.predicate.clone(),
                o: t.object.clone(),
                rank: t.rank,
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("plain strings serialize")
}

pub fn triple_set_from_json(line: &str) -> Result<TripleSet> {
    let rec: JsonTripleSet = serde_json::from_str(line).map_err(|e| Error::Integrity(format!("triples record: {e}")))?;
    if rec.triples.len() > MAX_TRIPLES || rec.pre_cap_count < rec.triples.len() {
        return Err(Error::Integrity(format!(
            "triples record `{}`: {} triples with pre_cap_count {}",
            rec.id,
            rec.triples.len(),
            rec.pre_cap_count
        )));
    }
    if rec.triples.windows(2).any(|w| w[0].rank >= w[1].rank) {
        return Err(Error::Integrity(format!("triples record `{}`: ranks not ascending", rec.id)));
    }
    let triples = rec
        .triples
        .into_iter()
        .map(|t| Triple {
            subject: t.s,
            predicate: t.p,
            object: t.o,
            source_id: rec.id.clone(),
            rank: t.rank,
        })
        .collect();
    Ok(TripleSet {
        source_id: rec.id,
        triples,
        pre_cap_count: rec.pre_cap_count,
    })
}

pub fn write_triples_jsonl(path: &Path, sets: &[TripleSet]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for ts in sets {
        w.write_all(triple_set_to_json(ts).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_triples_jsonl(path: &Path) -> Result<Vec<TripleSet>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            triple_set_from_json(&line)
                .map_err(|e| Error::Integrity(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}
