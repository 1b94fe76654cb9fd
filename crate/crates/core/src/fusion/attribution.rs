//! Integrated-gradients attribution on the logit.

use rayon::prelude::*;

use super::{forward, logit_input_gradient, FusionModel, InputGradients};
use crate::embedding::{EmbeddingBundle, PARTS};
use crate::error::{Error, Result};
use crate::extraction::MAX_TRIPLES;

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// Same layout as the bundle.
    pub sentence: Vec<f64>,
    pub triple_parts: Vec<f64>,
    /// Sum of attributions over each triple slot's `3 x part` block.
    pub per_triple: [f64; MAX_TRIPLES],
    pub sentence_total: f64,
    pub logit: f64,
    pub baseline_logit: f64,
}

impl Attribution {
    pub fn total(&self) -> f64 {
        self.sentence_total + self.per_triple.iter().sum::<f64>()
    }

    /// `total - (logit - baseline_logit)`; zero for an exact path integral.
    pub fn completeness_residual(&self) -> f64 {
        self.total() - (self.logit - self.baseline_logit)
    }
}

fn interpolate(baseline: &EmbeddingBundle, input: &EmbeddingBundle, alpha: f64) -> EmbeddingBundle {
    let lerp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(&x0, &x1)| x0 + alpha * (x1 - x0)).collect();
    EmbeddingBundle {
        source_id: input.source_id.clone(),
        sentence_vec: lerp(&baseline.sentence_vec, &input.sentence_vec),
        triple_parts: lerp(&baseline.triple_parts, &input.triple_parts),
        mask: input.mask,
    }
}

/// Midpoint-rule integrated gradients from `baseline` to `input`.
///
/// Both bundles must have the same shape and mask; the zero bundle with the
/// input's mask is the usual baseline.
pub fn integrated_gradients(
    m: &FusionModel,
    input: &EmbeddingBundle,
    baseline: &EmbeddingBundle,
    steps: usize,
) -> Result<Attribution> {
    if steps == 0 {
        return Err(Error::Config("integrated gradients needs at least one step".to_owned()));
    }
    m.check_bundle(input)?;
    if baseline.dims() != input.dims() || baseline.mask != input.mask {
        return Err(Error::Config(format!(
            "baseline shape {:?}/{:?} does not match input {:?}/{:?}",
            baseline.dims(),
            baseline.mask,
            input.dims(),
            input.mask
        )));
    }

    let per_step: Vec<InputGradients> = (0..steps)
        .into_par_iter()
        .map(|k| {
            let alpha = (k as f64 + 0.5) / steps as f64;
            logit_input_gradient(m, &interpolate(baseline, input, alpha)).map(|(_, g)| g)
        })
        .collect::<Result<_>>()?;

    // Fixed-order reduction keeps the result independent of thread count.
    let mut avg = InputGradients::zeros(m.feature_dims());
    for g in &per_step {
        super::axpy(1.0, &g.sentence, &mut avg.sentence);
        super::axpy(1.0, &g.triple_parts, &mut avg.triple_parts);
    }
    let scale = 1.0 / steps as f64;

    let attr = |avg: &[f64], x: &[f64], x0: &[f64]| -> Vec<f64> {
        avg.iter().zip(x).zip(x0).map(|((&g, &xi), &bi)| g * scale * (xi - bi)).collect()
    };
    let sentence = attr(&avg.sentence, &input.sentence_vec, &baseline.sentence_vec);
    let triple_parts = attr(&avg.triple_parts, &input.triple_parts, &baseline.triple_parts);

    let width = PARTS * input.part_dim();
    let mut per_triple = [0.0; MAX_TRIPLES];
    for (slot, score) in per_triple.iter_mut().enumerate() {
        *score = triple_parts[slot * width..(slot + 1) * width].iter().sum();
    }

    Ok(Attribution {
        sentence_total: sentence.iter().sum(),
        sentence,
        triple_parts,
        per_triple,
        logit: forward(m, input)?.logit,
        baseline_logit: forward(m, baseline)?.logit,
    })
}

/// Zero bundle sharing `input`'s shape and mask.
pub fn zero_baseline(input: &EmbeddingBundle) -> EmbeddingBundle {
    let mut b = EmbeddingBundle::zeros(&input.source_id, input.dims());
    b.mask = input.mask;
    b
}
