//! Synthetic corpora whose label is visible only through extracted triples.
//!
//! Each sentence reads "<subject> <verb> the <marker> <noun>"; the marker
//! decides the label and the rule-based extractor places it in the object.
//! Stub sentence vectors are hashes of the whole text, so they carry no
//! usable signal and any skill has to come from the triple branch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledSentence};

pub const POSITIVE_MARKER: &str = "zorblat";
pub const NEGATIVE_MARKER: &str = "quimfet";

const SUBJECTS: &[&str] = &[
    "the senator",
    "the committee",
    "our mayor",
    "the agency",
    "the governor",
    "a spokesman",
    "the minister",
    "the council",
];
const VERBS: &[&str] = &["approved", "rejected", "reviewed", "announced", "criticized", "funded", "blocked", "praised"];
const NOUNS: &[&str] = &["budget", "report", "plan", "bill", "program", "contract", "policy", "proposal"];

/// `n` English sentences with ids `{prefix}{i}`, half of them positive.
pub fn triple_signal_corpus(prefix: &str, n: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, positive)| {
            let marker = if positive { POSITIVE_MARKER } else { NEGATIVE_MARKER };
            let text = format!(
                "{} {} the {marker} {} number {i}",
                SUBJECTS[rng.gen_range(0..SUBJECTS.len())],
                VERBS[rng.gen_range(0..VERBS.len())],
                NOUNS[rng.gen_range(0..NOUNS.len())],
            );
            LabeledSentence::new(format!("{prefix}{i}"), text, "en", Some(Label::from_bool(positive)))
        })
        .collect()
}
