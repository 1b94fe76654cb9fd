//! Sentence and triple features.
//!
//! An [`EmbeddingBundle`] holds everything the fusion network reads for one
//! sentence: the sentence vector and up to four triples, each as three
//! pooled word-vector encodings (subject, predicate, object).

mod cache;
mod providers;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledSentence;
use crate::error::{Error, Result};
use crate::extraction::{TripleSet, MAX_TRIPLES};

pub use cache::{load_bundles, save_bundles, save_bundles_with_dims, CACHE_MAGIC};
pub use providers::{
    whitespace_tokenize, AdapterSentenceEncoder, SentenceEncoder, StubSentenceEncoder, StubWordVectors,
    TextWordVectors, WordVectors, DEFAULT_PART_DIM, DEFAULT_SENTENCE_DIM,
};

/// Number of parts per triple: subject, predicate, object.
pub const PARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub sentence: usize,
    pub part: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        Self {
            sentence: DEFAULT_SENTENCE_DIM,
            part: DEFAULT_PART_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    pub source_id: String,
    pub sentence_vec: Vec<f64>,
    /// Row-major `[MAX_TRIPLES][PARTS][part_dim]`.
    pub triple_parts: Vec<f64>,
    pub mask: [bool; MAX_TRIPLES],
}

impl EmbeddingBundle {
    /// All-zero bundle with no valid triples.
    pub fn zeros(source_id: &str, dims: FeatureDims) -> Self {
        Self {
            source_id: source_id.to_owned(),
            sentence_vec: vec![0.0; dims.sentence],
            triple_parts: vec![0.0; MAX_TRIPLES * PARTS * dims.part],
            mask: [false; MAX_TRIPLES],
        }
    }

    pub fn dims(&self) -> FeatureDims {
        FeatureDims {
            sentence: self.sentence_vec.len(),
            part: self.triple_parts.len() / (MAX_TRIPLES * PARTS),
        }
    }

    pub fn part_dim(&self) -> usize {
        self.triple_parts.len() / (MAX_TRIPLES * PARTS)
    }

    fn offset(&self, slot: usize, part: usize) -> usize {
        (slot * PARTS + part) * self.part_dim()
    }

    pub fn part(&self, slot: usize, part: usize) -> &[f64] {
        let d = self.part_dim();
        let o = self.offset(slot, part);
        &self.triple_parts[o..o + d]
    }

    pub fn part_mut(&mut self, slot: usize, part: usize) -> &mut [f64] {
        let d = self.part_dim();
        let o = self.offset(slot, part);
        &mut self.triple_parts[o..o + d]
    }

    /// The whole `PARTS * part_dim` block of one triple slot.
    pub fn slot(&self, slot: usize) -> &[f64] {
        let w = PARTS * self.part_dim();
        &self.triple_parts[slot * w..(slot + 1) * w]
    }

    pub fn valid_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_TRIPLES).filter(|&i| self.mask[i])
    }

    pub fn triple_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Copy with the triple branch emptied, as seen by the LM-only baseline.
    pub fn without_triples(&self) -> Self {
        Self {
            source_id: self.source_id.clone(),
            sentence_vec: self.sentence_vec.clone(),
            triple_parts: vec![0.0; self.triple_parts.len()],
            mask: [false; MAX_TRIPLES],
        }
    }

    /// Checks shape, finiteness and zeroed masked slots.
    pub fn validate(&self, dims: FeatureDims) -> Result<()> {
        if self.sentence_vec.len() != dims.sentence || self.triple_parts.len() != MAX_TRIPLES * PARTS * dims.part {
            return Err(Error::Dimension(format!(
                "bundle `{}` has shape ({}, {}), expected ({}, {})",
                self.source_id,
                self.sentence_vec.len(),
                self.triple_parts.len(),
                dims.sentence,
                MAX_TRIPLES * PARTS * dims.part
            )));
        }
        if !self.sentence_vec.iter().chain(&self.triple_parts).all(|x| x.is_finite()) {
            return Err(Error::Numeric {
                stage: format!("bundle `{}`", self.source_id),
            });
        }
        if let Some(i) = (0..MAX_TRIPLES).find(|&i| !self.mask[i] && self.slot(i).iter().any(|&x| x != 0.0)) {
            return Err(Error::Integrity(format!(
                "bundle `{}`: masked slot {i} is not zero",
                self.source_id
            )));
        }
        Ok(())
    }
}

/// Unweighted mean of the token vectors of `part_text`; zero when there are
/// no tokens.
pub fn encode_part(wv: &dyn WordVectors, part_text: &str) -> Vec<f64> {
    let dim = wv.dim();
    let tokens = wv.tokenize(part_text);
    let mut acc = vec![0.0; dim];
    if tokens.is_empty() {
        return acc;
    }
    for tok in &tokens {
        for (a, v) in acc.iter_mut().zip(wv.lookup(tok)) {
            *a += v;
        }
    }
    let n = tokens.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

pub fn build_bundle(
    enc: &dyn SentenceEncoder,
    wv: &dyn WordVectors,
    sentence: &LabeledSentence,
    ts: &TripleSet,
) -> Result<EmbeddingBundle> {
    if ts.source_id != sentence.id {
        return Err(Error::Validation(format!(
            "triples for `{}` paired with sentence `{}`",
            ts.source_id, sentence.id
        )));
    }
    if ts.len() > MAX_TRIPLES {
        return Err(Error::Validation(format!("`{}` has {} triples", ts.source_id, ts.len())));
    }
    let dims = FeatureDims {
        sentence: enc.dim(),
        part: wv.dim(),
    };
    let sentence_vec = enc.encode_sentence(&sentence.id, &sentence.text)?;
    if sentence_vec.len() != dims.sentence {
        return Err(Error::Dimension(format!(
            "encoder `{}` produced {} values, declared {}",
            enc.name(),
            sentence_vec.len(),
            dims.sentence
        )));
    }

    let mut bundle = EmbeddingBundle::zeros(&sentence.id, dims);
    bundle.sentence_vec = sentence_vec;
    for (slot, triple) in ts.triples.iter().enumerate() {
        for (p, text) in [&triple.subject, &triple.predicate, &triple.object].into_iter().enumerate() {
            let v = encode_part(wv, text);
            if v.len() != dims.part {
                return Err(Error::Dimension(format!(
                    "word vectors `{}` produced {} values, declared {}",
                    wv.name(),
                    v.len(),
                    dims.part
                )));
            }
            bundle.part_mut(slot, p).copy_from_slice(&v);
        }
        bundle.mask[slot] = true;
    }
    bundle.validate(dims)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::Triple;

    struct Toy;

    impl WordVectors for Toy {
        fn name(&self) -> &str {
            "toy"
        }
        fn dim(&self) -> usize {
            2
        }
        fn lookup(&self, token: &str) -> Vec<f64> {
            match token {
                "u" => vec![1.0, 2.0],
                "v" => vec![3.0, -4.0],
                _ => vec![0.0, 0.0],
            }
        }
    }

    fn sentence() -> LabeledSentence {
        LabeledSentence::new("s1", "they wrote all the tax bills", "en", None)
    }

    fn triples(n: usize) -> TripleSet {
        TripleSet::from_ordered("s1", (0..n).map(|i| Triple::new(&format!("s{i}"), "p", "o")).collect())
    }

    #[test]
    fn encode_part_cases() {
        assert_eq!(encode_part(&Toy, "u"), [1.0, 2.0]);
        assert_eq!(encode_part(&Toy, "u v"), [2.0, -1.0]);
        assert_eq!(encode_part(&Toy, ""), [0.0, 0.0]);
        let wv = StubWordVectors::new(3);
        assert_eq!(encode_part(&wv, "wrote"), wv.lookup("wrote"));
        assert_eq!(encode_part(&wv, "").len(), 300);
    }

    #[test]
    fn no_triples_bundle() {
        let enc = StubSentenceEncoder::new(1);
        let wv = StubWordVectors::new(1);
        let b = build_bundle(&enc, &wv, &sentence(), &TripleSet::empty("s1")).unwrap();
        assert_eq!(b.mask, [false; 4]);
        assert!(b.triple_parts.iter().all(|&x| x == 0.0));
        assert_eq!(b.sentence_vec, enc.encode(&sentence().text).unwrap());
    }

    #[test]
    fn two_triples_and_default_shape() {
        let b = build_bundle(&StubSentenceEncoder::new(1), &StubWordVectors::new(1), &sentence(), &triples(2)).unwrap();
        assert_eq!(b.mask, [true, true, false, false]);
        assert_eq!(b.sentence_vec.len(), 768);
        assert_eq!(b.triple_parts.len(), 4 * 3 * 300);
        assert_eq!(b.triple_count(), 2);
        assert!(b.slot(2).iter().chain(b.slot(3)).all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_source_id() {
        let err = build_bundle(&StubSentenceEncoder::new(1), &StubWordVectors::new(1), &sentence(), &TripleSet::empty("other"))
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn lying_encoder_is_dimension_error() {
        struct Liar;
        impl SentenceEncoder for Liar {
            fn name(&self) -> &str {
                "liar"
            }
            fn dim(&self) -> usize {
                768
            }
            fn encode(&self, _: &str) -> Result<Vec<f64>> {
                Ok(vec![0.0; 10])
            }
        }
        let err = build_bundle(&Liar, &StubWordVectors::new(1), &sentence(), &triples(1)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn validate_catches_dirty_masked_slot() {
        let mut b = EmbeddingBundle::zeros("x", FeatureDims { sentence: 2, part: 2 });
        b.part_mut(3, 1)[0] = 1.0;
        assert!(matches!(b.validate(b.dims()), Err(Error::Integrity(_))));
        b.mask[3] = true;
        b.validate(b.dims()).unwrap();
        assert!(b.without_triples().triple_parts.iter().all(|&x| x == 0.0));
    }
}
