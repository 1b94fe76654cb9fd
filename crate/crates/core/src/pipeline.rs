//! File-based pipeline stages driven by one JSON configuration.
//!
//! Stages only talk through files in `output_dir`:
//!
//! | stage     | reads                         | writes                                          |
//! |-----------|-------------------------------|-------------------------------------------------|
//! | extract   | corpus TSVs                   | `triples_<split>.jsonl`                         |
//! | featurize | corpus, triples               | `bundles_<split>.cwb`                           |
//! | train     | corpus, bundles               | `model.cwfm`, `model_lm_only.cwfm`, records     |
//! | eval      | corpus, bundles, both models  | `report.txt`, `report.json`                     |
//! | predict   | bundles, `model.cwfm`         | `submission.tsv`                                |
//! | explain   | corpus, triples, bundles, model | nothing; returns an attribution table        |
//!
//! Every stage also writes `config.effective.json`, the configuration after
//! defaults, overrides and path resolution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{load_splits, DatasetSplits, Split};
use crate::embedding::{
    build_bundle, load_bundles, save_bundles_with_dims, AdapterSentenceEncoder, EmbeddingBundle, FeatureDims,
    SentenceEncoder, StubSentenceEncoder, StubWordVectors, TextWordVectors, WordVectors, DEFAULT_PART_DIM,
    DEFAULT_SENTENCE_DIM,
};
use crate::error::{Error, Result};
use crate::evaluation::{build_report, write_submission, EvalReport, RunRole, ScoredRun};
use crate::extraction::{
    coverage_stats, extract_triples, filter_named_entities, read_triples_jsonl, resolve_coreference,
    write_triples_jsonl, AdapterExtractor, CapitalizationRecognizer, EntityFilterMode, EntityRecognizer, Extractor,
    GazetteerRecognizer, PrecomputedExtractor, RuleBasedExtractor, TripleSet, MAX_TRIPLES,
};
use crate::fusion::{
    integrated_gradients, load_model, save_model, sigmoid, zero_baseline, FusionHyper, FusionModel, TriplePooling,
    DEFAULT_HIDDEN,
};
use crate::training::{ablate_lm_only, evaluate, predict, strip_triples, train, LabeledBundle, TrainConfig};

pub const EFFECTIVE_CONFIG: &str = "config.effective.json";
pub const MODEL_FILE: &str = "model.cwfm";
pub const LM_ONLY_MODEL_FILE: &str = "model_lm_only.cwfm";
pub const TRAIN_RECORD: &str = "train_record.json";
pub const LM_ONLY_TRAIN_RECORD: &str = "train_record_lm_only.json";
pub const TIMING_FILE: &str = "timing.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const SUBMISSION: &str = "submission.tsv";

pub fn triples_file(split: Split) -> String {
    format!("triples_{split}.jsonl")
}

pub fn bundles_file(split: Split) -> String {
    format!("bundles_{split}.cwb")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeFilter {
    #[default]
    Off,
    Or,
    And,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    /// Hash-based vectors; no external resources.
    Stub {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_sentence_dim")]
        sentence_dim: usize,
        #[serde(default = "default_part_dim")]
        part_dim: usize,
    },
    /// Word vectors from a text file plus an encoder subprocess.
    External {
        wordvec_file: PathBuf,
        encoder_command: String,
        #[serde(default = "default_sentence_dim")]
        sentence_dim: usize,
    },
}

fn default_sentence_dim() -> usize {
    DEFAULT_SENTENCE_DIM
}

fn default_part_dim() -> usize {
    DEFAULT_PART_DIM
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Stub {
            seed: 0,
            sentence_dim: DEFAULT_SENTENCE_DIM,
            part_dim: DEFAULT_PART_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: usize,
    pub init_seed: u64,
    pub init_scale: f64,
    pub pooling: TriplePooling,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            init_seed: 0,
            init_scale: 1.0,
            pooling: TriplePooling::ValidOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub language: String,
    pub splits: BTreeMap<Split, PathBuf>,
    /// `rule`, `adapter:<command>` or `precomputed:<triples.jsonl>`.
    pub extractor: String,
    pub ne_filter: NeFilter,
    /// Entity names, one per line. Without it capitalised runs count as entities.
    pub ne_gazetteer: Option<PathBuf>,
    /// JSON object mapping pronoun tokens to replacements.
    pub coref_map: Option<PathBuf>,
    pub providers: ProviderConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub explain_steps: usize,
    pub run_id: String,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            language: "en".to_owned(),
            splits: BTreeMap::new(),
            extractor: "rule".to_owned(),
            ne_filter: NeFilter::Off,
            ne_gazetteer: None,
            coref_map: None,
            providers: ProviderConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            explain_steps: 512,
            run_id: "HYBRID1".to_owned(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Sets the dotted `path` inside `root`, creating objects as needed.
/// The value is parsed as JSON when possible, otherwise kept as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key `{path}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just created")
            }
            _ => {
                return Err(Error::Config(format!(
                    "override `{path}`: `{}` is not an object",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            obj.insert((*key).to_owned(), value);
            return Ok(());
        }
        node = obj.entry((*key).to_owned()).or_insert(Value::Null);
    }
    unreachable!("keys is never empty")
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::path::absolute(&joined).unwrap_or(joined)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingPath(path.to_path_buf()))
    }
}

impl PipelineConfig {
    /// Parses a JSON document after applying `overrides`; relative paths are
    /// resolved against `base`.
    pub fn from_value(mut doc: Value, overrides: &[String], base: &Path) -> Result<Self> {
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: PipelineConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        for p in cfg.splits.values_mut() {
            *p = resolve(base, p);
        }
        for p in [&mut cfg.ne_gazetteer, &mut cfg.coref_map].into_iter().flatten() {
            *p = resolve(base, p);
        }
        if let ProviderConfig::External { wordvec_file, .. } = &mut cfg.providers {
            *wordvec_file = resolve(base, wordvec_file);
        }
        if let Some(path) = cfg.extractor.strip_prefix("precomputed:") {
            cfg.extractor = format!("precomputed:{}", resolve(base, Path::new(path)).display());
        }
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file; relative paths are taken from its directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        require(path)?;
        let text = fs::read_to_string(path)?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_value(doc, overrides, base)
    }

    pub fn validate(&self) -> Result<()> {
        for split in [Split::Train, Split::Dev, Split::Devtest] {
            if !self.splits.contains_key(&split) {
                return Err(Error::Config(format!("split `{split}` has no path")));
            }
        }
        for p in self.splits.values() {
            require(p)?;
        }
        for p in [&self.ne_gazetteer, &self.coref_map].into_iter().flatten() {
            require(p)?;
        }
        match self.extractor.as_str() {
            "rule" => {}
            e if e.strip_prefix("adapter:").is_some_and(|c| !c.trim().is_empty()) => {}
            e if e.starts_with("precomputed:") => require(Path::new(&e["precomputed:".len()..]))?,
            other => {
                return Err(Error::Config(format!(
                    "extractor must be `rule`, `adapter:<command>` or `precomputed:<path>`, got `{other}`"
                )))
            }
        }
        match &self.providers {
            ProviderConfig::Stub {
                sentence_dim, part_dim, ..
            } if *sentence_dim == 0 || *part_dim == 0 => {
                return Err(Error::Config("provider dimensions must be >= 1".into()));
            }
            ProviderConfig::External {
                wordvec_file,
                encoder_command,
                sentence_dim,
            } => {
                require(wordvec_file)?;
                if encoder_command.trim().is_empty() || *sentence_dim == 0 {
                    return Err(Error::Config("external providers need an encoder command and a dimension".into()));
                }
            }
            _ => {}
        }
        if self.model.hidden == 0 {
            return Err(Error::Config("model.hidden must be >= 1".into()));
        }
        if self.explain_steps == 0 {
            return Err(Error::Config("explain_steps must be >= 1".into()));
        }
        if self.run_id.is_empty() || self.run_id.contains(['\t', '\n']) {
            return Err(Error::Config(format!("bad run_id `{}`", self.run_id)));
        }
        self.train.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    /// Creates the output directory and echoes the effective configuration.
    fn prepare_output(&self) -> Result<()> {
        fs::create_dir_all(&self.output_dir)?;
        fs::write(self.out(EFFECTIVE_CONFIG), self.to_json() + "\n")?;
        Ok(())
    }

    fn corpus(&self) -> Result<DatasetSplits> {
        load_splits(&self.splits, &self.language)
    }

    fn extractor(&self) -> Result<Box<dyn Extractor>> {
        if self.extractor == "rule" {
            return Ok(Box::new(RuleBasedExtractor));
        }
        if let Some(cmd) = self.extractor.strip_prefix("adapter:") {
            return Ok(Box::new(AdapterExtractor::spawn(cmd, [self.language.clone()])?));
        }
        if let Some(path) = self.extractor.strip_prefix("precomputed:") {
            return Ok(Box::new(PrecomputedExtractor::load(Path::new(path))?));
        }
        Err(Error::Config(format!("unknown extractor `{}`", self.extractor)))
    }

    fn providers(&self) -> Result<(Box<dyn SentenceEncoder>, Box<dyn WordVectors>)> {
        match &self.providers {
            ProviderConfig::Stub {
                seed,
                sentence_dim,
                part_dim,
            } => Ok((
                Box::new(StubSentenceEncoder::with_dim(*seed, *sentence_dim)),
                Box::new(StubWordVectors::with_dim(*seed, *part_dim)),
            )),
            ProviderConfig::External {
                wordvec_file,
                encoder_command,
                sentence_dim,
            } => Ok((
                Box::new(AdapterSentenceEncoder::spawn(encoder_command, *sentence_dim)?),
                Box::new(TextWordVectors::load(wordvec_file)?),
            )),
        }
    }

    fn coref_map(&self) -> Result<Option<BTreeMap<String, String>>> {
        let Some(path) = &self.coref_map else { return Ok(None) };
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Config(format!("{}: expected a JSON object of strings: {e}", path.display())))
    }

    fn recognizer(&self) -> Result<Box<dyn EntityRecognizer + Sync>> {
        match &self.ne_gazetteer {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                Ok(Box::new(GazetteerRecognizer::new(text.lines().map(str::trim))))
            }
            None => Ok(Box::new(CapitalizationRecognizer)),
        }
    }

    fn model_path(&self, lm_only: bool) -> PathBuf {
        self.out(if lm_only { LM_ONLY_MODEL_FILE } else { MODEL_FILE })
    }

    fn load_model(&self, lm_only: bool) -> Result<FusionModel> {
        let path = self.model_path(lm_only);
        if !path.exists() {
            return Err(Error::MissingModel(path));
        }
        load_model(&path)
    }

    fn bundles(&self, split: Split) -> Result<Vec<EmbeddingBundle>> {
        load_bundles(&self.out(&bundles_file(split)))
    }
}

/// Pairs cached bundles with the labels of `split`, checking the ids.
fn labeled_bundles(cfg: &PipelineConfig, corpus: &DatasetSplits, split: Split) -> Result<Vec<LabeledBundle>> {
    let rows = corpus
        .get(split)
        .ok_or_else(|| Error::Config(format!("split `{split}` is not configured")))?;
    let bundles = cfg.bundles(split)?;
    check_alignment(split, rows.iter().map(|r| r.id.as_str()), bundles.iter().map(|b| b.source_id.as_str()))?;
    rows.iter()
        .zip(bundles)
        .map(|(row, bundle)| {
            let label = row
                .label
                .ok_or_else(|| Error::Validation(format!("sentence `{}` in `{split}` has no label", row.id)))?;
            Ok(LabeledBundle { bundle, label })
        })
        .collect()
}

fn check_alignment<'a>(
    split: Split,
    corpus_ids: impl ExactSizeIterator<Item = &'a str>,
    artifact_ids: impl ExactSizeIterator<Item = &'a str>,
) -> Result<()> {
    if corpus_ids.len() != artifact_ids.len() {
        return Err(Error::Integrity(format!(
            "`{split}` has {} sentences but its artifact has {} records",
            corpus_ids.len(),
            artifact_ids.len()
        )));
    }
    for (a, b) in corpus_ids.zip(artifact_ids) {
        if a != b {
            return Err(Error::Integrity(format!(
                "`{split}` artifact record `{b}` does not match sentence `{a}`"
            )));
        }
    }
    Ok(())
}

/// Extracts, refines and stores triples for every configured split.
pub fn cmd_extract(cfg: &PipelineConfig) -> Result<String> {
    let corpus = cfg.corpus()?;
    let extractor = cfg.extractor()?;
    let coref = cfg.coref_map()?;
    let recognizer = cfg.recognizer()?;
    cfg.prepare_output()?;

    let mut summary = String::new();
    for (split, rows) in corpus.present() {
        let sets: Vec<TripleSet> = rows
            .par_iter()
            .map(|s| {
                let mut ts = extract_triples(extractor.as_ref(), s)?;
                if let Some(map) = &coref {
                    ts = resolve_coreference(&ts, map);
                }
                ts = match cfg.ne_filter {
                    NeFilter::Off => ts,
                    NeFilter::Or => filter_named_entities(&ts, recognizer.as_ref(), EntityFilterMode::Or),
                    NeFilter::And => filter_named_entities(&ts, recognizer.as_ref(), EntityFilterMode::And),
                };
                Ok(ts)
            })
            .collect::<Result<_>>()?;
        write_triples_jsonl(&cfg.out(&triples_file(split)), &sets)?;
        let kept: usize = sets.iter().map(TripleSet::len).sum();
        let coverage = match coverage_stats(&sets, MAX_TRIPLES) {
            Ok(c) => format!("{c:.3}"),
            Err(_) => "n/a".to_owned(),
        };
        let _ = writeln!(
            summary,
            "{split}: {} sentences, {kept} triples, coverage@{MAX_TRIPLES}={coverage}",
            sets.len()
        );
    }
    Ok(summary)
}

/// Builds and caches embedding bundles for every configured split.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<String> {
    let corpus = cfg.corpus()?;
    let (enc, wv) = cfg.providers()?;
    let dims = FeatureDims {
        sentence: enc.dim(),
        part: wv.dim(),
    };
    cfg.prepare_output()?;

    let mut summary = String::new();
    for (split, rows) in corpus.present() {
        let sets = read_triples_jsonl(&cfg.out(&triples_file(split)))?;
        check_alignment(split, rows.iter().map(|r| r.id.as_str()), sets.iter().map(|t| t.source_id.as_str()))?;
        let bundles: Vec<EmbeddingBundle> = rows
            .par_iter()
            .zip(sets.par_iter())
            .map(|(s, ts)| build_bundle(enc.as_ref(), wv.as_ref(), s, ts))
            .collect::<Result<_>>()?;
        let n = save_bundles_with_dims(&bundles, dims, &cfg.out(&bundles_file(split)))?;
        let _ = writeln!(summary, "{split}: {n} bundles ({}x{})", dims.sentence, dims.part);
    }
    Ok(summary)
}

#[derive(Serialize)]
struct Timing {
    fused_seconds: f64,
    lm_only_seconds: f64,
}

/// Trains the fused model and its LM-only ablation from the same start.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<String> {
    let corpus = cfg.corpus()?;
    let train_data = labeled_bundles(cfg, &corpus, Split::Train)?;
    let selection = labeled_bundles(cfg, &corpus, cfg.train.selection_split)?;
    let dims = train_data
        .first()
        .map(|d| d.bundle.dims())
        .ok_or_else(|| Error::Config("training split is empty".to_owned()))?;
    cfg.prepare_output()?;

    let hyper = FusionHyper {
        init_scale: cfg.model.init_scale,
        pooling: cfg.model.pooling,
        ..FusionHyper::new(dims, cfg.model.hidden, cfg.model.init_seed)
    };
    let model0 = crate::fusion::init(hyper)?;

    let mut summary = String::new();
    let mut timing = Timing {
        fused_seconds: 0.0,
        lm_only_seconds: 0.0,
    };
    for lm_only in [false, true] {
        let start = Instant::now();
        let mut out = if lm_only {
            ablate_lm_only(&model0, &train_data, &selection, &cfg.train)?
        } else {
            train(&model0, &train_data, &selection, &cfg.train)?
        };
        let seconds = start.elapsed().as_secs_f64();
        let (model_name, record_name, label) = if lm_only {
            timing.lm_only_seconds = seconds;
            (LM_ONLY_MODEL_FILE, LM_ONLY_TRAIN_RECORD, "LM")
        } else {
            timing.fused_seconds = seconds;
            (MODEL_FILE, TRAIN_RECORD, "LM+Triples")
        };
        save_model(&out.best_model, &cfg.out(model_name))?;
        out.record.model_path = Some(model_name.to_owned());
        fs::write(cfg.out(record_name), out.record.to_json()? + "\n")?;
        for e in &out.record.epochs {
            let _ = writeln!(
                summary,
                "{label} epoch {}: train_loss={:.6} {}_macro_f1={:.5}",
                e.epoch, e.train_loss, cfg.train.selection_split, e.selection_macro_f1
            );
        }
        let _ = writeln!(
            summary,
            "{label} best epoch {} ({}_macro_f1={:.5})",
            out.record.best_epoch, cfg.train.selection_split, out.record.best_selection_macro_f1
        );
    }
    fs::write(cfg.out(TIMING_FILE), serde_json::to_string_pretty(&timing)? + "\n")?;
    Ok(summary)
}

/// Scores both models on the dev and dev-test splits and writes the report.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<EvalReport> {
    let corpus = cfg.corpus()?;
    let fused = cfg.load_model(false)?;
    let lm = cfg.load_model(true)?;
    cfg.prepare_output()?;

    let mut runs = Vec::new();
    for split in [Split::Dev, Split::Devtest] {
        let data = labeled_bundles(cfg, &corpus, split)?;
        if data.is_empty() {
            continue;
        }
        for (role, system, model, data) in [
            (RunRole::LmOnly, "LM", &lm, strip_triples(&data)),
            (RunRole::Fused, "LM+Triples", &fused, data),
        ] {
            runs.push(ScoredRun {
                system: system.to_owned(),
                role,
                language: cfg.language.clone(),
                split: split.to_string(),
                metrics: evaluate(model, &data, cfg.train.threshold)?,
            });
        }
    }
    let report = build_report(&runs)?;
    fs::write(cfg.out(REPORT_TEXT), report.render_text())?;
    fs::write(cfg.out(REPORT_JSON), report.to_json()? + "\n")?;
    Ok(report)
}

/// Labels the test split with the fused model and writes the submission.
pub fn cmd_predict(cfg: &PipelineConfig) -> Result<String> {
    if !cfg.splits.contains_key(&Split::Test) {
        return Err(Error::Config("predict needs a `test` split".to_owned()));
    }
    let corpus = cfg.corpus()?;
    let model = cfg.load_model(false)?;
    let rows = corpus.get(Split::Test).expect("test split configured");
    let bundles = cfg.bundles(Split::Test)?;
    check_alignment(Split::Test, rows.iter().map(|r| r.id.as_str()), bundles.iter().map(|b| b.source_id.as_str()))?;
    cfg.prepare_output()?;

    let preds = predict(&model, &bundles, cfg.train.threshold)?;
    let pairs: Vec<(String, _)> = preds.into_iter().map(|p| (p.id, p.label)).collect();
    let n = write_submission(&pairs, &cfg.run_id, &cfg.out(SUBMISSION))?;
    let positives = pairs.iter().filter(|(_, l)| l.is_positive()).count();
    Ok(format!("{n} predictions ({positives} Yes) written to {}\n", cfg.out(SUBMISSION).display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleScore {
    pub rank: usize,
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub sentence_id: String,
    pub text: String,
    pub probability: f64,
    pub logit: f64,
    pub baseline_logit: f64,
    pub sentence_score: f64,
    /// Sorted by score, highest first.
    pub triples: Vec<TripleScore>,
    pub completeness_residual: f64,
    pub steps: usize,
}

impl Explanation {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sentence {}: {}", self.sentence_id, self.text);
        let _ = writeln!(
            out,
            "p(check-worthy)={:.6} logit={:.6} baseline_logit={:.6}",
            self.probability, self.logit, self.baseline_logit
        );
        let _ = writeln!(out, "{:>4}  {:>12}  triple", "rank", "score");
        for t in &self.triples {
            let _ = writeln!(out, "{:>4}  {:>12.6}  ({}; {}; {})", t.rank, t.score, t.subject, t.predicate, t.object);
        }
        let _ = writeln!(out, "sentence vector score: {:.6}", self.sentence_score);
        let _ = writeln!(
            out,
            "completeness residual: {:.3e} ({} steps)",
            self.completeness_residual, self.steps
        );
        out
    }
}

/// Integrated-gradients scores of one sentence's triples under the fused model.
pub fn cmd_explain(cfg: &PipelineConfig, sentence_id: &str) -> Result<Explanation> {
    let corpus = cfg.corpus()?;
    let (split, sentence) = corpus
        .find(sentence_id)
        .ok_or_else(|| Error::UnknownSentence(sentence_id.to_owned()))?;
    let model = cfg.load_model(false)?;
    let bundle = cfg
        .bundles(split)?
        .into_iter()
        .find(|b| b.source_id == sentence_id)
        .ok_or_else(|| Error::Integrity(format!("no cached bundle for `{sentence_id}` in `{split}`")))?;
    let triples = read_triples_jsonl(&cfg.out(&triples_file(split)))?
        .into_iter()
        .find(|t| t.source_id == sentence_id)
        .ok_or_else(|| Error::Integrity(format!("no triples for `{sentence_id}` in `{split}`")))?;
    if triples.len() != bundle.triple_count() {
        return Err(Error::Integrity(format!(
            "`{sentence_id}`: {} triples but {} valid bundle slots",
            triples.len(),
            bundle.triple_count()
        )));
    }
    cfg.prepare_output()?;

    let attr = integrated_gradients(&model, &bundle, &zero_baseline(&bundle), cfg.explain_steps)?;
    let mut scored: Vec<TripleScore> = triples
        .triples
        .iter()
        .enumerate()
        .map(|(slot, t)| TripleScore {
            rank: t.rank,
            subject: t.subject.clone(),
            predicate: t.predicate.clone(),
            object: t.object.clone(),
            score: attr.per_triple[slot],
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.rank.cmp(&b.rank)));
    Ok(Explanation {
        sentence_id: sentence_id.to_owned(),
        text: sentence.text.clone(),
        probability: sigmoid(attr.logit),
        logit: attr.logit,
        baseline_logit: attr.baseline_logit,
        sentence_score: attr.sentence_total,
        triples: scored,
        completeness_residual: attr.completeness_residual(),
        steps: cfg.explain_steps,
    })
}
