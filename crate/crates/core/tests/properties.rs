use std::collections::BTreeMap;

use cw_core::corpus::{parse_tsv, serialize_tsv, Label, LabeledSentence};
use cw_core::embedding::{encode_part, load_bundles, save_bundles, EmbeddingBundle, FeatureDims, StubWordVectors, WordVectors};
use cw_core::evaluation::{macro_f1, positive_f1, Metrics};
use cw_core::extraction::{
    extract_triples, filter_named_entities, resolve_coreference, rule_based_extract, EntityFilterMode, Extractor,
    GazetteerRecognizer, Triple, TripleSet, MAX_TRIPLES,
};
use cw_core::fusion::{forward, FusionModel, TriplePooling};
use proptest::prelude::*;

const DIMS: FeatureDims = FeatureDims { sentence: 5, part: 3 };

fn bundle_strategy() -> impl Strategy<Value = EmbeddingBundle> {
    (
        prop::collection::vec(-2.0..2.0f64, DIMS.sentence),
        prop::collection::vec(-2.0..2.0f64, MAX_TRIPLES * 3 * DIMS.part),
        0..=MAX_TRIPLES,
    )
        .prop_map(|(s, mut parts, valid)| {
            let width = 3 * DIMS.part;
            parts[valid * width..].iter_mut().for_each(|x| *x = 0.0);
            let mut b = EmbeddingBundle::zeros("p", DIMS);
            b.sentence_vec = s;
            b.triple_parts = parts;
            (0..valid).for_each(|i| b.mask[i] = true);
            b
        })
}

const VOCAB: &[&str] = &["the", "Democrats", "Congress", "they", "he", "wrote", "bills", "him", "Carter", "years"];

fn span() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..4).prop_map(|w| w.join(" "))
}

fn triple_set() -> impl Strategy<Value = TripleSet> {
    prop::collection::vec((span(), span(), span()), 0..=MAX_TRIPLES).prop_map(|v| {
        TripleSet::from_ordered("s", v.iter().map(|(s, p, o)| Triple::new(s, p, o)).collect())
    })
}

struct Fixed(usize);

impl Extractor for Fixed {
    fn name(&self) -> &str {
        "fixed"
    }
    fn supports(&self, _: &str) -> bool {
        true
    }
    fn extract(&self, _: &str) -> Result<Vec<Triple>, String> {
        Ok((0..self.0).map(|i| Triple { rank: i, ..Triple::new(&format!("s{i}"), "p", "o") }).collect())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permuting_valid_triples_keeps_output(b in bundle_strategy(), seed in 0u64..1000, perm in Just((0..MAX_TRIPLES).collect::<Vec<usize>>()).prop_shuffle()) {
        let m = FusionModel::new(DIMS, 4, seed).unwrap();
        let mut q = b.clone();
        for (dst, &src) in perm.iter().enumerate() {
            q.mask[dst] = b.mask[src];
            let width = 3 * DIMS.part;
            q.triple_parts[dst * width..(dst + 1) * width].copy_from_slice(b.slot(src));
        }
        let (a, c) = (forward(&m, &b).unwrap(), forward(&m, &q).unwrap());
        prop_assert!((a.logit - c.logit).abs() < 1e-12);
        prop_assert!((a.probability - c.probability).abs() < 1e-12);
    }

    #[test]
    fn probability_in_open_interval(b in bundle_strategy(), seed in 0u64..1000, pad in any::<bool>()) {
        let mut m = FusionModel::new(DIMS, 4, seed).unwrap();
        if pad {
            m.hyper.pooling = TriplePooling::PaddingInclusive;
        }
        let t = forward(&m, &b).unwrap();
        prop_assert!(t.probability > 0.0 && t.probability < 1.0);
    }

    #[test]
    fn cache_round_trip_and_masked_zeroing(bs in prop::collection::vec(bundle_strategy(), 0..4)) {
        let bs: Vec<EmbeddingBundle> = bs.into_iter().enumerate().map(|(i, mut b)| { b.source_id = format!("b{i}"); b }).collect();
        for b in &bs {
            for slot in (0..MAX_TRIPLES).filter(|&i| !b.mask[i]) {
                prop_assert!(b.slot(slot).iter().all(|&x| x == 0.0));
            }
            b.validate(DIMS).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cwb");
        save_bundles(&bs, &path).unwrap();
        prop_assert_eq!(load_bundles(&path).unwrap(), bs);
    }

    #[test]
    fn encode_part_is_mean_of_tokens(t1 in "[a-z]{1,8}", t2 in "[a-z]{1,8}", seed in 0u64..100) {
        let wv = StubWordVectors::new(seed);
        let both = encode_part(&wv, &format!("{t1} {t2}"));
        let (a, b) = (encode_part(&wv, &t1), encode_part(&wv, &t2));
        prop_assert_eq!(encode_part(&wv, &t1), wv.lookup(&t1));
        for i in 0..wv.dim() {
            prop_assert!((both[i] - 0.5 * (a[i] + b[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_is_four(n in 0usize..12) {
        let s = LabeledSentence::new("s", "text", "en", None);
        let ts = extract_triples(&Fixed(n), &s).unwrap();
        prop_assert_eq!(ts.len(), n.min(MAX_TRIPLES));
        prop_assert_eq!(ts.pre_cap_count, n);
        prop_assert!(ts.triples.iter().enumerate().all(|(i, t)| t.rank == i));
    }

    #[test]
    fn entity_filter_is_ordered_subset_and_idempotent(
        ts in triple_set(),
        names in prop::collection::vec(prop::sample::select(VOCAB), 0..4),
        and in any::<bool>(),
    ) {
        let rec = GazetteerRecognizer::new(&names);
        let mode = if and { EntityFilterMode::And } else { EntityFilterMode::Or };
        let once = filter_named_entities(&ts, &rec, mode);
        prop_assert!(once.len() <= ts.len());
        let mut it = ts.triples.iter();
        for t in &once.triples {
            prop_assert!(it.any(|u| u == t), "not an ordered subset");
        }
        prop_assert_eq!(filter_named_entities(&once, &rec, mode), once);
    }

    #[test]
    fn coreference_preserves_shape_and_is_idempotent(
        ts in triple_set(),
        keys in prop::collection::btree_set(prop::sample::select(&["they", "he", "him"][..]), 0..3),
    ) {
        // Replacements avoid every key, so a second pass finds nothing.
        let map: BTreeMap<String, String> = keys.iter().map(|k| (k.to_string(), format!("the {}", k.to_uppercase()))).collect();
        let once = resolve_coreference(&ts, &map);
        prop_assert_eq!(once.len(), ts.len());
        for (a, b) in once.triples.iter().zip(&ts.triples) {
            prop_assert_eq!(a.rank, b.rank);
            prop_assert_eq!(&a.predicate, &b.predicate);
        }
        prop_assert_eq!(resolve_coreference(&once, &map), once);
        prop_assert_eq!(resolve_coreference(&ts, &BTreeMap::new()), ts);
    }

    #[test]
    fn tsv_round_trip(rows in prop::collection::vec(("[A-Za-z][A-Za-z0-9 .,?!'-]{0,30}", any::<bool>()), 0..8)) {
        let rows: Vec<LabeledSentence> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (text, y))| LabeledSentence::new(format!("{i}"), text, "en", Some(Label::from_bool(y))))
            .collect();
        let text = serialize_tsv(&rows, true);
        let parsed = parse_tsv(&text, true, "en").unwrap();
        prop_assert_eq!(&parsed, &rows);
        prop_assert_eq!(&serialize_tsv(&parsed, true), &text);
        prop_assert_eq!(parse_tsv(&text, true, "en").unwrap(), parsed);
    }

    #[test]
    fn label_swap_and_symmetry(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
        let t: Vec<Label> = pairs.iter().map(|&(x, _)| Label::from_bool(x)).collect();
        let p: Vec<Label> = pairs.iter().map(|&(_, y)| Label::from_bool(y)).collect();
        let flip = |v: &[Label]| v.iter().map(|l| Label::from_bool(!l.is_positive())).collect::<Vec<_>>();
        let (ts, ps) = (flip(&t), flip(&p));
        prop_assert!((macro_f1(&t, &p).unwrap() - macro_f1(&ts, &ps).unwrap()).abs() < 1e-15);
        let class0 = Metrics::compute(&t, &p).unwrap().classes[0].f1;
        prop_assert_eq!(positive_f1(&ts, &ps).unwrap(), class0);
        if t.iter().any(|l| l.is_positive()) && t.iter().any(|l| !l.is_positive()) {
            prop_assert_eq!(macro_f1(&t, &t).unwrap(), 1.0);
        }
    }
}

#[test]
fn rule_extractor_is_deterministic() {
    let corpus = [
        "the Democrats have controlled the Congress and they wrote all the tax bills",
        "I must remind him of the facts",
        "Taxes rose.",
        "the senator who approved the budget said it was fair; critics disagreed",
        "Yes.",
        "",
    ];
    let first: Vec<Vec<Triple>> = corpus.iter().map(|t| rule_based_extract(t)).collect();
    for _ in 0..1000 {
        for (t, expected) in corpus.iter().zip(&first) {
            assert_eq!(&rule_based_extract(t), expected);
        }
    }
}
