//! Epoch-based mini-batch training with macro-F1 model selection.
//!
//! After every epoch the model is scored on a selection split and the best
//! epoch's parameters are kept (earliest epoch on ties).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Split};
use crate::embedding::EmbeddingBundle;
use crate::error::{Error, Result};
use crate::evaluation::Metrics;
use crate::fusion::{accumulate_gradient, predict_proba, FusionModel, FusionParams};

/// Examples per gradient chunk. Chunks are reduced in a fixed order, so
/// results do not depend on the number of worker threads.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub selection_split: Split,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            selection_split: Split::Dev,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if !matches!(self.selection_split, Split::Dev | Split::Devtest) {
            return bad(format!("selection_split must be dev or devtest, got {}", self.selection_split));
        }
        if self.optimizer == OptimizerKind::Adam
            && !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0)
        {
            return bad("Adam needs beta1, beta2 in [0, 1) and epsilon > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBundle {
    pub bundle: EmbeddingBundle,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub selection_macro_f1: f64,
}

/// Everything needed to audit a training run. Wall-clock time is kept out
/// of this record so that repeated runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub config: TrainConfig,
    pub lm_only: bool,
    pub train_size: usize,
    pub selection_size: usize,
    pub epochs: Vec<EpochRecord>,
    /// 1-based.
    pub best_epoch: usize,
    pub best_selection_macro_f1: f64,
    pub model_path: Option<String>,
}

impl TrainRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: TrainRecord,
    pub best_model: FusionModel,
}

/// 1-based index of the first maximum; `None` for an empty series.
pub fn select_best_epoch(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub probability: f64,
    pub label: Label,
}

/// Label is positive iff `probability >= threshold`.
pub fn predict(m: &FusionModel, bundles: &[EmbeddingBundle], threshold: f64) -> Result<Vec<Prediction>> {
    bundles
        .par_iter()
        .map(|b| {
            m.check_bundle(b)?;
            let probability = predict_proba(m, b)?;
            Ok(Prediction {
                id: b.source_id.clone(),
                probability,
                label: Label::from_bool(probability >= threshold),
            })
        })
        .collect()
}

/// Macro-F1 and friends of `m` on labelled bundles.
pub fn evaluate(m: &FusionModel, data: &[LabeledBundle], threshold: f64) -> Result<Metrics> {
    let bundles: Vec<EmbeddingBundle> = data.iter().map(|d| d.bundle.clone()).collect();
    let preds: Vec<Label> = predict(m, &bundles, threshold)?.into_iter().map(|p| p.label).collect();
    let gold: Vec<Label> = data.iter().map(|d| d.label).collect();
    Metrics::compute(&gold, &preds)
}

// One instance per run, so the variant size gap is irrelevant.
#[allow(clippy::large_enum_variant)]
enum Optimizer {
    Sgd,
    Adam { m: FusionParams, v: FusionParams, t: i32 },
}

impl Optimizer {
    fn new(cfg: &TrainConfig, like: &FusionParams) -> Self {
        match cfg.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                m: like.zeros_like(),
                v: like.zeros_like(),
                t: 0,
            },
        }
    }

    fn step(&mut self, cfg: &TrainConfig, params: &mut FusionParams, grad: &FusionParams) {
        match self {
            Optimizer::Sgd => params.add_scaled(-cfg.learning_rate, grad),
            Optimizer::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - cfg.beta1.powi(*t);
                let c2 = 1.0 - cfg.beta2.powi(*t);
                let (b1, b2, lr, eps) = (cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.epsilon);
                let blocks = params.blocks_mut().into_iter().zip(m.blocks_mut()).zip(v.blocks_mut()).zip(grad.blocks());
                for (((p, m), v), g) in blocks {
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

/// Mean gradient and summed loss of one mini-batch.
fn batch_gradient(model: &FusionModel, batch: &[&LabeledBundle]) -> Result<(FusionParams, f64)> {
    let partials: Vec<(FusionParams, f64)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut acc = model.params.zeros_like();
            let mut loss = 0.0;
            for ex in chunk {
                loss += accumulate_gradient(model, &ex.bundle, ex.label.target(), &mut acc)?;
            }
            Ok((acc, loss))
        })
        .collect::<Result<_>>()?;
    let mut parts = partials.into_iter();
    let (mut grad, mut loss) = parts.next().expect("batch is never empty");
    for (g, l) in parts {
        grad.add_scaled(1.0, &g);
        loss += l;
    }
    grad.scale(1.0 / batch.len() as f64);
    Ok((grad, loss))
}

/// Shuffle order for one epoch, from a stream reserved for that epoch.
fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Training loop with a caller-supplied per-epoch selection score.
pub fn train_with_evaluator<F>(
    model0: &FusionModel,
    train: &[LabeledBundle],
    cfg: &TrainConfig,
    mut score: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &FusionModel) -> Result<f64>,
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".to_owned()));
    }
    for ex in train {
        model0.check_bundle(&ex.bundle)?;
    }

    let mut model = model0.clone();
    let mut opt = Optimizer::new(cfg, &model.params);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, FusionModel)> = None;

    for epoch in 1..=cfg.epochs {
        let order = epoch_order(cfg.seed, epoch, train.len());
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&LabeledBundle> = idx.iter().map(|&i| &train[i]).collect();
            let (grad, loss) = batch_gradient(&model, &batch)?;
            if !loss.is_finite() || !grad.all_finite() {
                return Err(Error::Numeric {
                    stage: format!("training epoch {epoch}, batch {}", b + 1),
                });
            }
            loss_sum += loss;
            opt.step(cfg, &mut model.params, &grad);
            if !model.params.all_finite() {
                return Err(Error::Numeric {
                    stage: format!("parameter update, epoch {epoch}, batch {}", b + 1),
                });
            }
        }

        let f1 = score(epoch, &model)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            selection_macro_f1: f1,
        });
        if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
            best = Some((f1, model.clone()));
        }
    }

    let scores: Vec<f64> = epochs.iter().map(|e| e.selection_macro_f1).collect();
    let best_epoch = select_best_epoch(&scores).expect("at least one epoch");
    let (best_f1, best_model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        record: TrainRecord {
            config: cfg.clone(),
            lm_only: false,
            train_size: train.len(),
            selection_size: 0,
            epochs,
            best_epoch,
            best_selection_macro_f1: best_f1,
            model_path: None,
        },
        best_model,
    })
}

/// Trains and selects the epoch with the best macro-F1 on `selection`.
pub fn train(
    model0: &FusionModel,
    train: &[LabeledBundle],
    selection: &[LabeledBundle],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if selection.is_empty() {
        return Err(Error::Config("selection set is empty".to_owned()));
    }
    for ex in selection {
        model0.check_bundle(&ex.bundle)?;
    }
    let mut out = train_with_evaluator(model0, train, cfg, |_, m| Ok(evaluate(m, selection, cfg.threshold)?.macro_f1))?;
    out.record.selection_size = selection.len();
    Ok(out)
}

/// Labelled data with the triple branch emptied.
pub fn strip_triples(data: &[LabeledBundle]) -> Vec<LabeledBundle> {
    data.iter()
        .map(|d| LabeledBundle {
            bundle: d.bundle.without_triples(),
            label: d.label,
        })
        .collect()
}

/// The same loop on sentence vectors alone: every bundle has its triples
/// zeroed, so the triple branch only contributes the projection bias.
pub fn ablate_lm_only(
    model0: &FusionModel,
    train_data: &[LabeledBundle],
    selection: &[LabeledBundle],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut out = train(model0, &strip_triples(train_data), &strip_triples(selection), cfg)?;
    out.record.lm_only = true;
    Ok(out)
}
