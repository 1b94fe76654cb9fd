//! Python bindings: `import cw_py`.
//!
//! Triples cross the boundary as `(subject, predicate, object)` tuples and
//! labels as `0`/`1`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cw_core::corpus::{self, Label, LabeledSentence};
use cw_core::embedding::{self, EmbeddingBundle, FeatureDims, SentenceEncoder, StubSentenceEncoder, StubWordVectors, WordVectors};
use cw_core::extraction::{self, EntityFilterMode, GazetteerRecognizer, Triple, TripleSet};
use cw_core::fusion;
use cw_core::pipeline::{self, PipelineConfig};
use cw_core::training::{self, LabeledBundle, OptimizerKind, TrainConfig};
use cw_core::{evaluation, Error};

type Spo = (String, String, String);

fn to_py(err: Error) -> PyErr {
    match err {
        Error::MissingPath(p) | Error::MissingModel(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        Error::UnknownSentence(id) => PyKeyError::new_err(id),
        Error::Io(e) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn label(v: u8) -> PyResult<Label> {
    match v {
        0 => Ok(Label::NotCheckworthy),
        1 => Ok(Label::Checkworthy),
        _ => Err(PyValueError::new_err(format!("labels are 0 or 1, got {v}"))),
    }
}

fn labels(v: &[u8]) -> PyResult<Vec<Label>> {
    v.iter().map(|&x| label(x)).collect()
}

fn spo(t: &Triple) -> Spo {
    (t.subject.clone(), t.predicate.clone(), t.object.clone())
}

fn triple_set(id: &str, triples: &[Spo]) -> TripleSet {
    TripleSet::from_ordered(id, triples.iter().map(|(s, p, o)| Triple::new(s, p, o)).collect())
}

/// Parses shared-task TSV content into `(id, text, label or None)` tuples.
#[pyfunction]
#[pyo3(signature = (content, has_labels=true, language="en"))]
fn parse_tsv(content: &str, has_labels: bool, language: &str) -> PyResult<Vec<(String, String, Option<u8>)>> {
    let rows = corpus::parse_tsv(content, has_labels, language).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.id, r.text, r.label.map(Label::as_u8))).collect())
}

/// Triples found by the built-in rule-based extractor, in rank order.
#[pyfunction]
fn rule_based_extract(text: &str) -> Vec<Spo> {
    extraction::rule_based_extract(text).iter().map(spo).collect()
}

/// Replaces pronoun tokens in subjects and objects.
#[pyfunction]
fn resolve_coreference(triples: Vec<Spo>, antecedents: BTreeMap<String, String>) -> Vec<Spo> {
    extraction::resolve_coreference(&triple_set("", &triples), &antecedents).triples.iter().map(spo).collect()
}

/// Keeps triples whose subject/object mention one of `entities`.
#[pyfunction]
#[pyo3(signature = (triples, entities, mode="or"))]
fn filter_named_entities(triples: Vec<Spo>, entities: Vec<String>, mode: &str) -> PyResult<Vec<Spo>> {
    let mode = match mode {
        "or" => EntityFilterMode::Or,
        "and" => EntityFilterMode::And,
        _ => return Err(PyValueError::new_err("mode must be 'or' or 'and'")),
    };
    let rec = GazetteerRecognizer::new(&entities);
    Ok(extraction::filter_named_entities(&triple_set("", &triples), &rec, mode).triples.iter().map(spo).collect())
}

#[pyfunction]
fn macro_f1(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<f64> {
    evaluation::macro_f1(&labels(&y_true)?, &labels(&y_pred)?).map_err(to_py)
}

#[pyfunction]
fn positive_f1(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<f64> {
    evaluation::positive_f1(&labels(&y_true)?, &labels(&y_pred)?).map_err(to_py)
}

/// Signed gain between two scores in [0, 1], rendered x 100 with 3 decimals.
#[pyfunction]
fn render_delta(lm: f64, fused: f64) -> String {
    evaluation::render_delta(lm, fused)
}

/// Features of one sentence.
#[pyclass(name = "Bundle", module = "cw_py", from_py_object)]
#[derive(Clone)]
struct PyBundle {
    inner: EmbeddingBundle,
}

#[pymethods]
impl PyBundle {
    #[getter]
    fn source_id(&self) -> String {
        self.inner.source_id.clone()
    }

    #[getter]
    fn sentence_vec(&self) -> Vec<f64> {
        self.inner.sentence_vec.clone()
    }

    /// Flat `[4][3][part_dim]` values.
    #[getter]
    fn triple_parts(&self) -> Vec<f64> {
        self.inner.triple_parts.clone()
    }

    #[getter]
    fn mask(&self) -> Vec<bool> {
        self.inner.mask.to_vec()
    }

    fn __repr__(&self) -> String {
        let d = self.inner.dims();
        format!(
            "Bundle(id={:?}, sentence_dim={}, part_dim={}, triples={})",
            self.inner.source_id,
            d.sentence,
            d.part,
            self.inner.triple_count()
        )
    }
}

/// Deterministic hash-based providers.
#[pyclass(name = "StubProviders", module = "cw_py")]
struct PyStubProviders {
    encoder: StubSentenceEncoder,
    words: StubWordVectors,
}

#[pymethods]
impl PyStubProviders {
    #[new]
    #[pyo3(signature = (seed=0, sentence_dim=768, part_dim=300))]
    fn new(seed: u64, sentence_dim: usize, part_dim: usize) -> Self {
        Self {
            encoder: StubSentenceEncoder::with_dim(seed, sentence_dim),
            words: StubWordVectors::with_dim(seed, part_dim),
        }
    }

    fn encode(&self, text: &str) -> PyResult<Vec<f64>> {
        self.encoder.encode(text).map_err(to_py)
    }

    fn word_vector(&self, token: &str) -> Vec<f64> {
        self.words.lookup(token)
    }

    /// Builds the bundle of a sentence from its triples (at most four used).
    fn bundle(&self, sentence_id: &str, text: &str, triples: Vec<Spo>) -> PyResult<PyBundle> {
        let s = LabeledSentence::new(sentence_id, text, "en", None);
        let inner = embedding::build_bundle(&self.encoder, &self.words, &s, &triple_set(sentence_id, &triples))
            .map_err(to_py)?;
        Ok(PyBundle { inner })
    }
}

/// The fusion classifier.
#[pyclass(name = "FusionModel", module = "cw_py")]
struct PyFusionModel {
    inner: fusion::FusionModel,
}

fn labeled(data: Vec<(PyBundle, u8)>) -> PyResult<Vec<LabeledBundle>> {
    data.into_iter()
        .map(|(b, y)| {
            Ok(LabeledBundle {
                bundle: b.inner,
                label: label(y)?,
            })
        })
        .collect()
}

#[pymethods]
impl PyFusionModel {
    #[new]
    #[pyo3(signature = (sentence_dim=768, part_dim=300, hidden=256, seed=0))]
    fn new(sentence_dim: usize, part_dim: usize, hidden: usize, seed: u64) -> PyResult<Self> {
        let dims = FeatureDims {
            sentence: sentence_dim,
            part: part_dim,
        };
        Ok(Self {
            inner: fusion::FusionModel::new(dims, hidden, seed).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: fusion::load_model(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        fusion::save_model(&self.inner, &path).map_err(to_py)
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.inner.params.len()
    }

    fn predict_proba(&self, bundle: &PyBundle) -> PyResult<f64> {
        self.inner.check_bundle(&bundle.inner).map_err(to_py)?;
        fusion::predict_proba(&self.inner, &bundle.inner).map_err(to_py)
    }

    /// Integrated gradients against the zero baseline.
    #[pyo3(signature = (bundle, steps=512))]
    fn explain<'py>(&self, py: Python<'py>, bundle: &PyBundle, steps: usize) -> PyResult<Bound<'py, PyDict>> {
        let b = &bundle.inner;
        let attr = fusion::integrated_gradients(&self.inner, b, &fusion::zero_baseline(b), steps).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("per_triple", attr.per_triple.to_vec())?;
        d.set_item("sentence_total", attr.sentence_total)?;
        d.set_item("logit", attr.logit)?;
        d.set_item("baseline_logit", attr.baseline_logit)?;
        d.set_item("completeness_residual", attr.completeness_residual())?;
        Ok(d)
    }

    /// Trains in place, keeping the best epoch by selection macro-F1, and
    /// returns the training record as a JSON string.
    #[pyo3(signature = (train, selection, epochs=5, batch_size=32, learning_rate=1e-3, optimizer="adam", seed=0, lm_only=false))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &mut self,
        py: Python<'_>,
        train: Vec<(PyBundle, u8)>,
        selection: Vec<(PyBundle, u8)>,
        epochs: usize,
        batch_size: usize,
        learning_rate: f64,
        optimizer: &str,
        seed: u64,
        lm_only: bool,
    ) -> PyResult<String> {
        let optimizer = match optimizer {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::Sgd,
            _ => return Err(PyValueError::new_err("optimizer must be 'adam' or 'sgd'")),
        };
        let cfg = TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            optimizer,
            seed,
            ..TrainConfig::default()
        };
        let (train, selection) = (labeled(train)?, labeled(selection)?);
        let model0 = self.inner.clone();
        let out = py
            .detach(move || {
                if lm_only {
                    training::ablate_lm_only(&model0, &train, &selection, &cfg)
                } else {
                    training::train(&model0, &train, &selection, &cfg)
                }
            })
            .map_err(to_py)?;
        self.inner = out.best_model;
        out.record.to_json().map_err(to_py)
    }
}

/// Runs one pipeline stage (`extract`, `featurize`, `train`, `eval`,
/// `predict` or `explain`) and returns its printed summary.
#[pyfunction]
#[pyo3(signature = (stage, config, overrides=Vec::new(), sentence_id=None))]
fn run_stage(
    py: Python<'_>,
    stage: &str,
    config: PathBuf,
    overrides: Vec<String>,
    sentence_id: Option<String>,
) -> PyResult<String> {
    let cfg = PipelineConfig::load(&config, &overrides).map_err(to_py)?;
    let stage = stage.to_owned();
    py.detach(move || match stage.as_str() {
        "extract" => pipeline::cmd_extract(&cfg),
        "featurize" => pipeline::cmd_featurize(&cfg),
        "train" => pipeline::cmd_train(&cfg),
        "eval" => pipeline::cmd_eval(&cfg).map(|r| r.render_text()),
        "predict" => pipeline::cmd_predict(&cfg),
        "explain" => match sentence_id {
            Some(id) => pipeline::cmd_explain(&cfg, &id).map(|e| e.render()),
            None => Err(Error::Config("explain needs a sentence_id".to_owned())),
        },
        other => Err(Error::Config(format!("unknown stage `{other}`"))),
    })
    .map_err(to_py)
}

/// Adds every binding to `m`; used by the module initializer and by
/// embedders that build the module by hand.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_tsv, m)?)?;
    m.add_function(wrap_pyfunction!(rule_based_extract, m)?)?;
    m.add_function(wrap_pyfunction!(resolve_coreference, m)?)?;
    m.add_function(wrap_pyfunction!(filter_named_entities, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(positive_f1, m)?)?;
    m.add_function(wrap_pyfunction!(render_delta, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyStubProviders>()?;
    m.add_class::<PyFusionModel>()?;
    m.add("MAX_TRIPLES", extraction::MAX_TRIPLES)?;
    Ok(())
}

#[pymodule]
fn cw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
