//! The fusion classifier.
//!
//! Every subject, predicate and object vector goes through one shared
//! dense+ReLU layer. The activations are averaged per component over the
//! valid triples, the three means are concatenated and projected linearly to
//! the sentence dimension, and the projection is concatenated with the
//! sentence vector. A dense+ReLU hidden layer and a sigmoid head give the
//! probability that the sentence is check-worthy.
//!
//! ```text
//! h[i,p] = act(W_part v[i,p] + b_part)           p in {s, r, o}
//! m[p]   = mean_i h[i,p]                          (0 when no triple)
//! z      = W_proj [m_s; m_r; m_o] + b_proj
//! u      = act(W_hid [x; z] + b_hid)
//! p      = sigmoid(w_out . u + b_out)
//! ```

mod attribution;
mod io;
mod linalg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingBundle, FeatureDims, PARTS};
use crate::error::{Error, Result};
use crate::extraction::MAX_TRIPLES;

pub use attribution::{integrated_gradients, zero_baseline, Attribution};
pub use io::{load_model, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use linalg::{axpy, dot, Matrix};

pub const DEFAULT_HIDDEN: usize = 256;

/// Clamp applied to probabilities inside the loss.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    /// Linear surrogate: every ReLU replaced by the identity. Only used to
    /// check attribution against closed forms.
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative at a pre-activation; the ReLU subgradient at 0 is 0.
    fn slope(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriplePooling {
    /// Mean over valid triples only.
    #[default]
    ValidOnly,
    /// Mean over all slots, masked slots contributing `act(b_part)`.
    PaddingInclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionHyper {
    pub sentence_dim: usize,
    pub part_dim: usize,
    pub hidden: usize,
    pub init_seed: u64,
    pub init_scale: f64,
    #[serde(default)]
    pub pooling: TriplePooling,
    #[serde(default)]
    pub activation: Activation,
}

impl FusionHyper {
    pub fn new(dims: FeatureDims, hidden: usize, init_seed: u64) -> Self {
        Self {
            sentence_dim: dims.sentence,
            part_dim: dims.part,
            hidden,
            init_seed,
            init_scale: 1.0,
            pooling: TriplePooling::ValidOnly,
            activation: Activation::Relu,
        }
    }

    pub fn feature_dims(&self) -> FeatureDims {
        FeatureDims {
            sentence: self.sentence_dim,
            part: self.part_dim,
        }
    }
}

/// Trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    /// Shared by subject, predicate and object: `part x part`.
    pub part_weight: Matrix,
    pub part_bias: Vec<f64>,
    /// `sentence x 3*part`
    pub proj_weight: Matrix,
    pub proj_bias: Vec<f64>,
    /// `hidden x 2*sentence`
    pub hidden_weight: Matrix,
    pub hidden_bias: Vec<f64>,
    pub out_weight: Vec<f64>,
    pub out_bias: f64,
}

impl FusionParams {
    pub fn zeros(sentence: usize, part: usize, hidden: usize) -> Self {
        Self {
            part_weight: Matrix::zeros(part, part),
            part_bias: vec![0.0; part],
            proj_weight: Matrix::zeros(sentence, PARTS * part),
            proj_bias: vec![0.0; sentence],
            hidden_weight: Matrix::zeros(hidden, 2 * sentence),
            hidden_bias: vec![0.0; hidden],
            out_weight: vec![0.0; hidden],
            out_bias: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.proj_bias.len(), self.part_bias.len(), self.hidden_bias.len())
    }

    /// Parameter blocks in canonical order (the order of the model file).
    pub fn blocks(&self) -> [&[f64]; 8] {
        [
            &self.part_weight.data,
            &self.part_bias,
            &self.proj_weight.data,
            &self.proj_bias,
            &self.hidden_weight.data,
            &self.hidden_bias,
            &self.out_weight,
            std::slice::from_ref(&self.out_bias),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.part_weight.data,
            &mut self.part_bias,
            &mut self.proj_weight.data,
            &mut self.proj_bias,
            &mut self.hidden_weight.data,
            &mut self.hidden_bias,
            &mut self.out_weight,
            std::slice::from_mut(&mut self.out_bias),
        ]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat copy in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for b in self.blocks() {
            if idx < b.len() {
                return b[idx];
            }
            idx -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_flat(&mut self, mut idx: usize, value: f64) {
        for b in self.blocks_mut() {
            if idx < b.len() {
                b[idx] = value;
                return;
            }
            idx -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &FusionParams) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            axpy(alpha, b, a);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn fill_zero(&mut self) {
        for b in self.blocks_mut() {
            b.fill(0.0);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub hyper: FusionHyper,
    pub params: FusionParams,
}

/// Glorot-uniform weights, zero biases, fully determined by the seed.
pub fn init(hyper: FusionHyper) -> Result<FusionModel> {
    if hyper.hidden == 0 || hyper.sentence_dim == 0 || hyper.part_dim == 0 {
        return Err(Error::Config(format!("all model dimensions must be >= 1: {hyper:?}")));
    }
    if !(hyper.init_scale.is_finite() && hyper.init_scale >= 0.0) {
        return Err(Error::Config(format!("bad init_scale {}", hyper.init_scale)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.init_seed);
    let mut params = FusionParams::zeros(hyper.sentence_dim, hyper.part_dim, hyper.hidden);
    let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
        let a = hyper.init_scale * (6.0 / (fan_in + fan_out) as f64).sqrt();
        for x in w.iter_mut() {
            *x = if a > 0.0 { rng.gen_range(-a..a) } else { 0.0 };
        }
    };
    let (s, p, h) = (hyper.sentence_dim, hyper.part_dim, hyper.hidden);
    fill(&mut params.part_weight.data, p, p);
    fill(&mut params.proj_weight.data, PARTS * p, s);
    fill(&mut params.hidden_weight.data, 2 * s, h);
    fill(&mut params.out_weight, h, 1);
    Ok(FusionModel { hyper, params })
}

impl FusionModel {
    pub fn new(dims: FeatureDims, hidden: usize, seed: u64) -> Result<Self> {
        init(FusionHyper::new(dims, hidden, seed))
    }

    pub fn feature_dims(&self) -> FeatureDims {
        self.hyper.feature_dims()
    }

    pub fn check_bundle(&self, b: &EmbeddingBundle) -> Result<()> {
        let want = self.feature_dims();
        if b.dims() != want || b.triple_parts.len() != MAX_TRIPLES * PARTS * want.part {
            return Err(Error::Dimension(format!(
                "bundle `{}` has dims {:?}, model expects {:?}",
                b.source_id,
                b.dims(),
                want
            )));
        }
        Ok(())
    }

    /// Slots that enter the per-component mean, with their weight.
    fn pooled_slots(&self, b: &EmbeddingBundle) -> (Vec<usize>, f64) {
        match self.hyper.pooling {
            TriplePooling::ValidOnly => {
                let slots: Vec<usize> = b.valid_slots().collect();
                let w = if slots.is_empty() { 0.0 } else { 1.0 / slots.len() as f64 };
                (slots, w)
            }
            TriplePooling::PaddingInclusive => ((0..MAX_TRIPLES).collect(), 1.0 / MAX_TRIPLES as f64),
        }
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Slots that entered the mean, in ascending order.
    pub slots: Vec<usize>,
    pub mean_weight: f64,
    /// Per pooled slot: `PARTS * part` pre-activations of the shared layer.
    pub part_pre: Vec<Vec<f64>>,
    /// Per pooled slot: activations `h[i,p]`.
    pub part_act: Vec<Vec<f64>>,
    /// `[m_s; m_r; m_o]`
    pub means: Vec<f64>,
    /// Triple embedding, sentence-sized.
    pub triple_embedding: Vec<f64>,
    /// `[x; z]`
    pub fused_input: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logit: f64,
    pub probability: f64,
}

impl ForwardTrace {
    pub fn component_mean(&self, part: usize) -> &[f64] {
        let d = self.means.len() / PARTS;
        &self.means[part * d..(part + 1) * d]
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn ensure_finite(stage: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { stage: stage.to_owned() })
    }
}

pub fn forward(m: &FusionModel, b: &EmbeddingBundle) -> Result<ForwardTrace> {
    m.check_bundle(b)?;
    let act = m.hyper.activation;
    let p = &m.params;
    let part_dim = m.hyper.part_dim;
    let zeros = vec![0.0; part_dim];

    let (slots, mean_weight) = m.pooled_slots(b);
    let mut part_pre = Vec::with_capacity(slots.len());
    let mut part_act = Vec::with_capacity(slots.len());
    let mut means = vec![0.0; PARTS * part_dim];
    for &slot in &slots {
        let mut pre = vec![0.0; PARTS * part_dim];
        for c in 0..PARTS {
            // Masked slots read as zero input regardless of stored values.
            let v = if b.mask[slot] { b.part(slot, c) } else { &zeros[..] };
            p.part_weight
                .affine(v, &p.part_bias, &mut pre[c * part_dim..(c + 1) * part_dim]);
        }
        let h: Vec<f64> = pre.iter().map(|&x| act.apply(x)).collect();
        axpy(mean_weight, &h, &mut means);
        part_pre.push(pre);
        part_act.push(h);
    }
    ensure_finite("part layer", &means)?;

    let mut triple_embedding = vec![0.0; m.hyper.sentence_dim];
    p.proj_weight.affine(&means, &p.proj_bias, &mut triple_embedding);
    ensure_finite("projection", &triple_embedding)?;

    let mut fused_input = Vec::with_capacity(2 * m.hyper.sentence_dim);
    fused_input.extend_from_slice(&b.sentence_vec);
    fused_input.extend_from_slice(&triple_embedding);

    let mut hidden_pre = vec![0.0; m.hyper.hidden];
    p.hidden_weight.affine(&fused_input, &p.hidden_bias, &mut hidden_pre);
    let hidden: Vec<f64> = hidden_pre.iter().map(|&x| act.apply(x)).collect();
    ensure_finite("hidden layer", &hidden)?;

    let logit = p.out_bias + dot(&p.out_weight, &hidden);
    if !logit.is_finite() {
        return Err(Error::Numeric { stage: "output".to_owned() });
    }
    Ok(ForwardTrace {
        slots,
        mean_weight,
        part_pre,
        part_act,
        means,
        triple_embedding,
        fused_input,
        hidden_pre,
        hidden,
        logit,
        probability: sigmoid(logit),
    })
}

pub fn predict_proba(m: &FusionModel, b: &EmbeddingBundle) -> Result<f64> {
    Ok(forward(m, b)?.probability)
}

/// Binary cross-entropy with the probability clamped to `[eps, 1-eps]`.
pub fn bce(probability: f64, target: f64) -> f64 {
    let p = probability.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// d bce / d logit, honouring the clamp.
fn bce_logit_grad(probability: f64, target: f64) -> f64 {
    if (LOSS_EPSILON..=1.0 - LOSS_EPSILON).contains(&probability) {
        probability - target
    } else {
        0.0
    }
}

pub fn loss(m: &FusionModel, b: &EmbeddingBundle, target: f64) -> Result<f64> {
    Ok(bce(forward(m, b)?.probability, target))
}

/// Mean loss over a batch.
pub fn batch_loss(m: &FusionModel, batch: &[(&EmbeddingBundle, f64)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Undefined("loss of an empty batch".to_owned()));
    }
    let mut total = 0.0;
    for (b, y) in batch {
        total += loss(m, b, *y)?;
    }
    Ok(total / batch.len() as f64)
}

/// Gradient of a scalar output with respect to the bundle inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputGradients {
    pub sentence: Vec<f64>,
    /// Same layout as [`EmbeddingBundle::triple_parts`]; masked slots are 0.
    pub triple_parts: Vec<f64>,
}

impl InputGradients {
    pub fn zeros(dims: FeatureDims) -> Self {
        Self {
            sentence: vec![0.0; dims.sentence],
            triple_parts: vec![0.0; MAX_TRIPLES * PARTS * dims.part],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub params: FusionParams,
    pub inputs: InputGradients,
}

/// Back-propagates `upstream` (d output / d logit) through a trace.
/// Parameter gradients are added into `params` when given.
pub fn backprop(
    m: &FusionModel,
    b: &EmbeddingBundle,
    trace: &ForwardTrace,
    upstream: f64,
    mut params: Option<&mut FusionParams>,
    inputs: Option<&mut InputGradients>,
) {
    let act = m.hyper.activation;
    let p = &m.params;
    let part_dim = m.hyper.part_dim;

    if let Some(g) = params.as_deref_mut() {
        g.out_bias += upstream;
        axpy(upstream, &trace.hidden, &mut g.out_weight);
    }

    let g_hidden_pre: Vec<f64> = p
        .out_weight
        .iter()
        .zip(&trace.hidden_pre)
        .map(|(&w, &pre)| upstream * w * act.slope(pre))
        .collect();
    if let Some(g) = params.as_deref_mut() {
        axpy(1.0, &g_hidden_pre, &mut g.hidden_bias);
        g.hidden_weight.add_outer(&g_hidden_pre, &trace.fused_input);
    }

    let mut g_fused = vec![0.0; trace.fused_input.len()];
    p.hidden_weight.transpose_mul_acc(&g_hidden_pre, &mut g_fused);
    let (g_sentence, g_z) = g_fused.split_at(m.hyper.sentence_dim);

    if let Some(g) = params.as_deref_mut() {
        axpy(1.0, g_z, &mut g.proj_bias);
        g.proj_weight.add_outer(g_z, &trace.means);
    }
    let mut g_means = vec![0.0; trace.means.len()];
    p.proj_weight.transpose_mul_acc(g_z, &mut g_means);

    let mut inputs = inputs;
    if let Some(gi) = inputs.as_deref_mut() {
        axpy(1.0, g_sentence, &mut gi.sentence);
    }

    let mut g_pre = vec![0.0; part_dim];
    for (k, &slot) in trace.slots.iter().enumerate() {
        for c in 0..PARTS {
            let range = c * part_dim..(c + 1) * part_dim;
            for ((g, &gm), &pre) in g_pre.iter_mut().zip(&g_means[range.clone()]).zip(&trace.part_pre[k][range]) {
                *g = trace.mean_weight * gm * act.slope(pre);
            }
            if let Some(g) = params.as_deref_mut() {
                axpy(1.0, &g_pre, &mut g.part_bias);
                if b.mask[slot] {
                    g.part_weight.add_outer(&g_pre, b.part(slot, c));
                }
            }
            if b.mask[slot] {
                if let Some(gi) = inputs.as_deref_mut() {
                    let o = (slot * PARTS + c) * part_dim;
                    p.part_weight.transpose_mul_acc(&g_pre, &mut gi.triple_parts[o..o + part_dim]);
                }
            }
        }
    }
}

/// Loss and its gradient with respect to every parameter and input.
pub fn backward(m: &FusionModel, b: &EmbeddingBundle, target: f64) -> Result<Gradients> {
    let trace = forward(m, b)?;
    let mut params = m.params.zeros_like();
    let mut inputs = InputGradients::zeros(m.feature_dims());
    let upstream = bce_logit_grad(trace.probability, target);
    backprop(m, b, &trace, upstream, Some(&mut params), Some(&mut inputs));
    Ok(Gradients {
        loss: bce(trace.probability, target),
        params,
        inputs,
    })
}

/// Adds the loss gradient of one example into `acc`; returns the loss.
pub fn accumulate_gradient(m: &FusionModel, b: &EmbeddingBundle, target: f64, acc: &mut FusionParams) -> Result<f64> {
    let trace = forward(m, b)?;
    let upstream = bce_logit_grad(trace.probability, target);
    backprop(m, b, &trace, upstream, Some(acc), None);
    Ok(bce(trace.probability, target))
}

/// Gradient of the logit with respect to the inputs.
pub fn logit_input_gradient(m: &FusionModel, b: &EmbeddingBundle) -> Result<(f64, InputGradients)> {
    let trace = forward(m, b)?;
    let mut inputs = InputGradients::zeros(m.feature_dims());
    backprop(m, b, &trace, 1.0, None, Some(&mut inputs));
    Ok((trace.logit, inputs))
}
