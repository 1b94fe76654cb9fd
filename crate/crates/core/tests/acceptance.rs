//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p cw-core --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cw_core::corpus::{serialize_tsv, Label, LabeledSentence};
use cw_core::embedding::{build_bundle, EmbeddingBundle, FeatureDims, StubSentenceEncoder, StubWordVectors, PARTS};
use cw_core::evaluation::{build_report, macro_f1, positive_f1, render_delta, render_score, Metrics, RunRole, ScoredRun};
use cw_core::extraction::{
    extract_triples, filter_named_entities, resolve_coreference, CapitalizationRecognizer, EntityFilterMode,
    GazetteerRecognizer, RuleBasedExtractor, StaticExtractor, Triple, MAX_TRIPLES,
};
use cw_core::fusion::{
    backward, forward, integrated_gradients, logit_input_gradient, loss, zero_baseline, Activation, FusionModel,
};
use cw_core::pipeline::{cmd_extract, cmd_featurize, cmd_predict, cmd_train, PipelineConfig};
use cw_core::synthetic::triple_signal_corpus;
use cw_core::training::{ablate_lm_only, evaluate, train, train_with_evaluator, LabeledBundle, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_bundle(rng: &mut ChaCha8Rng, dims: FeatureDims, valid: usize) -> EmbeddingBundle {
    let mut b = EmbeddingBundle::zeros("r", dims);
    b.sentence_vec.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    for slot in 0..valid {
        b.mask[slot] = true;
        for c in 0..PARTS {
            b.part_mut(slot, c).iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
    }
    b
}

/// Model with random (non-zero) biases so every parameter block matters.
fn random_model(rng: &mut ChaCha8Rng, dims: FeatureDims, hidden: usize) -> FusionModel {
    let mut m = FusionModel::new(dims, hidden, rng.gen()).unwrap();
    let p = &mut m.params;
    for b in [&mut p.part_bias, &mut p.proj_bias, &mut p.hidden_bias] {
        b.iter_mut().for_each(|x| *x = rng.gen_range(-0.2..0.2));
    }
    p.out_bias = rng.gen_range(-0.2..0.2);
    m
}

// 1 ---------------------------------------------------------------------

const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared on an absolute scale: a central
/// difference with step 1e-6 cannot resolve them relatively in f64.
const FD_FLOOR: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;

    // Every parameter and input at small dimensions.
    for case in 0..10 {
        let dims = FeatureDims { sentence: 6, part: 4 };
        let mut m = random_model(&mut rng, dims, 5);
        let b = random_bundle(&mut rng, dims, case % (MAX_TRIPLES + 1));
        let y = (case % 2) as f64;
        let g = backward(&m, &b, y).unwrap();
        for i in 0..m.params.len() {
            let x = m.params.get_flat(i);
            m.params.set_flat(i, x + FD_STEP);
            let up = loss(&m, &b, y).unwrap();
            m.params.set_flat(i, x - FD_STEP);
            let down = loss(&m, &b, y).unwrap();
            m.params.set_flat(i, x);
            let e = rel_err(g.params.get_flat(i), (up - down) / (2.0 * FD_STEP));
            check(e < 1e-5, || format!("case {case}, parameter {i}: relative error {e:.3e}"))?;
            worst = worst.max(e);
            checked += 1;
        }
        let mut bi = b.clone();
        for i in 0..bi.sentence_vec.len() {
            let x = bi.sentence_vec[i];
            bi.sentence_vec[i] = x + FD_STEP;
            let up = loss(&m, &bi, y).unwrap();
            bi.sentence_vec[i] = x - FD_STEP;
            let down = loss(&m, &bi, y).unwrap();
            bi.sentence_vec[i] = x;
            let e = rel_err(g.inputs.sentence[i], (up - down) / (2.0 * FD_STEP));
            check(e < 1e-5, || format!("case {case}, sentence input {i}: relative error {e:.3e}"))?;
            worst = worst.max(e);
            checked += 1;
        }
        for i in (0..bi.triple_parts.len()).filter(|&i| b.mask[i / (PARTS * dims.part)]) {
            let x = bi.triple_parts[i];
            bi.triple_parts[i] = x + FD_STEP;
            let up = loss(&m, &bi, y).unwrap();
            bi.triple_parts[i] = x - FD_STEP;
            let down = loss(&m, &bi, y).unwrap();
            bi.triple_parts[i] = x;
            let e = rel_err(g.inputs.triple_parts[i], (up - down) / (2.0 * FD_STEP));
            check(e < 1e-5, || format!("case {case}, triple input {i}: relative error {e:.3e}"))?;
            worst = worst.max(e);
            checked += 1;
        }
    }

    // Sampled parameters at the default 768/300/256 shape.
    let dims = FeatureDims::default();
    let mut m = random_model(&mut rng, dims, 256);
    let b = random_bundle(&mut rng, dims, 3);
    let g = backward(&m, &b, 1.0).unwrap();
    let n = m.params.len();
    let mut full_checked = 0;
    for k in 0..400 {
        // Cover every block, then sample the rest.
        let i = if k < 8 { [0, 90_000, 90_300, 781_500, 782_268, 1_175_484, 1_175_740, n - 1][k] } else { rng.gen_range(0..n) };
        let x = m.params.get_flat(i);
        m.params.set_flat(i, x + FD_STEP);
        let up = loss(&m, &b, 1.0).unwrap();
        m.params.set_flat(i, x - FD_STEP);
        let down = loss(&m, &b, 1.0).unwrap();
        m.params.set_flat(i, x);
        let e = rel_err(g.params.get_flat(i), (up - down) / (2.0 * FD_STEP));
        check(e < 1e-5, || format!("default shape, parameter {i}: relative error {e:.3e}"))?;
        worst = worst.max(e);
        full_checked += 1;
    }

    let took = start.elapsed();
    check(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!(
        "{checked} small-shape + {full_checked} default-shape derivatives, max relative error {worst:.2e}, {took:.1?}"
    ))
}

// 2 ---------------------------------------------------------------------

/// The network written out with plain loops, straight from its definition.
#[allow(clippy::needless_range_loop)]
fn reference_forward(m: &FusionModel, b: &EmbeddingBundle) -> (f64, f64) {
    let p = &m.params;
    let (s, d, h) = (m.hyper.sentence_dim, m.hyper.part_dim, m.hyper.hidden);
    let relu = |x: f64| if x > 0.0 { x } else { 0.0 };
    let valid: Vec<usize> = (0..MAX_TRIPLES).filter(|&i| b.mask[i]).collect();

    let mut means = vec![0.0; 3 * d];
    for c in 0..3 {
        for j in 0..d {
            let mut acc = 0.0;
            for &slot in &valid {
                let v = b.part(slot, c);
                let mut pre = p.part_bias[j];
                for k in 0..d {
                    pre += p.part_weight.data[j * d + k] * v[k];
                }
                acc += relu(pre);
            }
            if !valid.is_empty() {
                means[c * d + j] = acc / valid.len() as f64;
            }
        }
    }
    let mut u_in = b.sentence_vec.clone();
    for i in 0..s {
        let mut z = p.proj_bias[i];
        for k in 0..3 * d {
            z += p.proj_weight.data[i * 3 * d + k] * means[k];
        }
        u_in.push(z);
    }
    let mut logit = p.out_bias;
    for i in 0..h {
        let mut pre = p.hidden_bias[i];
        for k in 0..2 * s {
            pre += p.hidden_weight.data[i * 2 * s + k] * u_in[k];
        }
        logit += p.out_weight[i] * relu(pre);
    }
    (logit, 1.0 / (1.0 + (-logit).exp()))
}

fn forward_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dims = if case < 5 {
            FeatureDims::default()
        } else {
            FeatureDims { sentence: rng.gen_range(1..20), part: rng.gen_range(1..12) }
        };
        let hidden = if case < 5 { 256 } else { rng.gen_range(1..16) };
        let m = random_model(&mut rng, dims, hidden);
        let valid = rng.gen_range(0..=MAX_TRIPLES);
        let b = random_bundle(&mut rng, dims, valid);
        let t = forward(&m, &b).unwrap();
        let (logit, p) = reference_forward(&m, &b);
        let e = (t.logit - logit).abs().max((t.probability - p).abs());
        check(e < 1e-12, || format!("case {case}: difference {e:.3e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("100 cases, max difference {worst:.2e}"))
}

// 3 ---------------------------------------------------------------------

/// Per-class F1 counted pair by pair.
fn brute_f1(t: &[u8], p: &[u8], class: u8) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for i in 0..t.len() {
        if p[i] == class && t[i] == class {
            tp += 1.0;
        } else if p[i] == class {
            fp += 1.0;
        } else if t[i] == class {
            fn_ += 1.0;
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut degenerate = 0;
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n = rng.gen_range(1..60);
        // Every fifth case forces a single class on one or both sides.
        let draw = |rng: &mut ChaCha8Rng, forced: Option<u8>| -> Vec<u8> {
            (0..n).map(|_| forced.unwrap_or_else(|| rng.gen_range(0..2))).collect()
        };
        let (ft, fp) = match case % 5 {
            0 => (Some((case / 5 % 2) as u8), None),
            1 => (None, Some((case / 5 % 2) as u8)),
            2 => (Some(0), Some(0)),
            _ => (None, None),
        };
        let t = draw(&mut rng, ft);
        let p = draw(&mut rng, fp);
        let lt: Vec<Label> = t.iter().map(|&x| Label::from_bool(x == 1)).collect();
        let lp: Vec<Label> = p.iter().map(|&x| Label::from_bool(x == 1)).collect();
        let m = macro_f1(&lt, &lp).unwrap();
        let pf = positive_f1(&lt, &lp).unwrap();
        let bm = 0.5 * (brute_f1(&t, &p, 0) + brute_f1(&t, &p, 1));
        let bp = brute_f1(&t, &p, 1);
        let e = (m - bm).abs().max((pf - bp).abs());
        check(e < 1e-12, || format!("case {case}: difference {e:.3e}"))?;
        worst = worst.max(e);
        if Metrics::compute(&lt, &lp).unwrap().degenerate {
            degenerate += 1;
        }
    }
    check(degenerate >= 40, || format!("only {degenerate} degenerate cases"))?;
    Ok(format!("200 cases ({degenerate} degenerate), max difference {worst:.2e}"))
}

// 4 ---------------------------------------------------------------------

const EXAMPLE_SENTENCE: &str =
    "I must remind him the Democrats have controlled the Congress for the last twenty-two years and they wrote all the tax bills.";

fn worked_example_triples() -> Outcome {
    let first = ("I", "must remind", "him the Democrats have controlled the Congress for the last twenty-two years");
    let second = ("the Democrats", "have controlled", "the Congress for the last twenty-two years");
    let third = ("they", "wrote", "all the tax bills");
    let mut ex = StaticExtractor::new();
    ex.insert(EXAMPLE_SENTENCE, &[first, second, third]);
    let s = LabeledSentence::new("carter-ford", EXAMPLE_SENTENCE, "en", Some(Label::Checkworthy));
    let ts = extract_triples(&ex, &s).unwrap();
    let spo = |t: &Triple| (t.subject.clone(), t.predicate.clone(), t.object.clone());
    let owned = |(a, b, c): (&str, &str, &str)| (a.to_owned(), b.to_owned(), c.to_owned());
    let got: Vec<_> = ts.triples.iter().map(spo).collect();
    check(got == [owned(first), owned(second), owned(third)], || format!("fixture triples {got:?}"))?;

    let map = BTreeMap::from([("they".to_owned(), "the Democrats".to_owned())]);
    let resolved = resolve_coreference(&ts, &map);
    let r3 = spo(&resolved.triples[2]);
    check(r3 == owned(("the Democrats", "wrote", "all the tax bills")), || format!("coreference gave {r3:?}"))?;
    check(spo(&resolved.triples[0]) == owned(first), || "first triple changed".into())?;

    let gazetteer = GazetteerRecognizer::new(["Democrats", "Congress"]);
    for (name, rec) in [
        ("gazetteer", &gazetteer as &dyn cw_core::extraction::EntityRecognizer),
        ("capitalization", &CapitalizationRecognizer),
    ] {
        let kept: Vec<_> = filter_named_entities(&ts, rec, EntityFilterMode::And).triples.iter().map(spo).collect();
        check(kept == [owned(second)], || format!("AND filter with {name} kept {kept:?}"))?;
    }
    let or: Vec<_> = filter_named_entities(&ts, &gazetteer, EntityFilterMode::Or).triples.iter().map(spo).collect();
    check(or == [owned(first), owned(second)], || format!("OR filter kept {or:?}"))?;

    let rule = |text: &str| {
        extract_triples(&RuleBasedExtractor, &LabeledSentence::new("x", text, "en", None))
            .unwrap()
            .triples
            .iter()
            .map(spo)
            .collect::<Vec<_>>()
    };
    check(rule("they wrote all the tax bills") == [owned(third)], || "rule extractor on the third triple".into())?;
    let spelled = rule("the Democrats wrote all the tax bills");
    check(spelled == [owned(("the Democrats", "wrote", "all the tax bills"))], || format!("rule extractor gave {spelled:?}"))?;
    Ok("3 fixture triples; coreference and AND/OR filters match the worked example".into())
}

// 5 ---------------------------------------------------------------------

fn report_arithmetic() -> Outcome {
    let table = [
        ("en", 0.84042, 0.86458, "+2.416"),
        ("ar", 0.58273, 0.62300, "+4.027"),
        ("nl", 0.40866, 0.39832, "-1.034"),
        ("es", 0.59975, 0.62371, "+2.396"),
    ];
    let mut runs = Vec::new();
    for (lang, lm, fused, _) in table {
        for (role, system, score) in [(RunRole::LmOnly, "LM", lm), (RunRole::Fused, "LM+Triples", fused)] {
            runs.push(ScoredRun {
                system: system.into(),
                role,
                language: lang.into(),
                split: "devtest".into(),
                metrics: Metrics::from_scores(score, 0.0),
            });
        }
    }
    let report = build_report(&runs).unwrap();
    let mut shown = Vec::new();
    for ((lang, lm, fused, printed), gain) in table.iter().zip(&report.gains) {
        check(&gain.language == lang, || format!("gain order {}", gain.language))?;
        check(gain.rendered_delta == *printed, || format!("{lang}: rendered {} vs {printed}", gain.rendered_delta))?;
        check(render_delta(*lm, *fused) == *printed, || format!("{lang}: render_delta"))?;
        let from_rendered: f64 = render_score(*fused).parse::<f64>().unwrap() - render_score(*lm).parse::<f64>().unwrap();
        check((from_rendered - gain.delta).abs() < 1e-9, || format!("{lang}: delta {} vs {from_rendered}", gain.delta))?;
        check(report.render_text().contains(printed), || format!("{lang}: text report lacks {printed}"))?;
        shown.push(gain.rendered_delta.clone());
    }
    Ok(format!("gains {}", shown.join(" ")))
}

// 6 ---------------------------------------------------------------------

fn synthetic_experiment() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let start = Instant::now();
        let corpus = triple_signal_corpus("syn", 400, 2024);
        let enc = StubSentenceEncoder::new(11);
        let wv = StubWordVectors::new(12);
        let data: Vec<LabeledBundle> = corpus
            .iter()
            .map(|s| {
                let ts = extract_triples(&RuleBasedExtractor, s).unwrap();
                LabeledBundle {
                    bundle: build_bundle(&enc, &wv, s, &ts).unwrap(),
                    label: s.label.unwrap(),
                }
            })
            .collect();
        let (train_set, held_out) = data.split_at(300);
        let m0 = FusionModel::new(FeatureDims::default(), 256, 7).unwrap();
        let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };

        let fused = train(&m0, train_set, held_out, &cfg).unwrap();
        let lm = ablate_lm_only(&m0, train_set, held_out, &cfg).unwrap();
        let took = start.elapsed();
        let series = |r: &cw_core::training::TrainRecord| {
            r.epochs.iter().map(|e| format!("{:.3}", e.selection_macro_f1)).collect::<Vec<_>>().join(",")
        };
        let f = evaluate(&fused.best_model, held_out, 0.5).unwrap().macro_f1;
        let l = evaluate(&lm.best_model, &cw_core::training::strip_triples(held_out), 0.5).unwrap().macro_f1;
        let detail = format!(
            "held-out macro-F1 fused {f:.3} [{}], LM-only {l:.3} [{}], {took:.1?} on one thread",
            series(&fused.record),
            series(&lm.record)
        );
        check(fused.record.epochs.len() == 5 && lm.record.epochs.len() == 5, || "epoch count".into())?;
        check(f >= 0.95, || format!("fused below 0.95: {detail}"))?;
        check(l <= 0.60, || format!("LM-only above 0.60: {detail}"))?;
        check(took < Duration::from_secs(120), || format!("too slow: {detail}"))?;
        Ok(detail)
    })
}

// 7 ---------------------------------------------------------------------

fn write_corpus(dir: &Path) {
    fs::write(dir.join("train.tsv"), serialize_tsv(&triple_signal_corpus("tr", 48, 1), true)).unwrap();
    fs::write(dir.join("dev.tsv"), serialize_tsv(&triple_signal_corpus("dv", 16, 2), true)).unwrap();
    fs::write(dir.join("devtest.tsv"), serialize_tsv(&triple_signal_corpus("dt", 16, 3), true)).unwrap();
    fs::write(dir.join("test.tsv"), serialize_tsv(&triple_signal_corpus("te", 16, 4), false)).unwrap();
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    let run = |out: &str| {
        let doc = serde_json::json!({
            "splits": {"train": "train.tsv", "dev": "dev.tsv", "devtest": "devtest.tsv", "test": "test.tsv"},
            "providers": {"kind": "stub", "seed": 9},
            "model": {"hidden": 32, "init_seed": 3},
            "train": {"seed": 4, "batch_size": 16},
            "output_dir": out,
        });
        let cfg = PipelineConfig::from_value(doc, &[], dir.path()).unwrap();
        cmd_extract(&cfg).unwrap();
        cmd_featurize(&cfg).unwrap();
        cmd_train(&cfg).unwrap();
        cmd_predict(&cfg).unwrap();
        cfg.output_dir
    };
    let (a, b) = (run("run_a"), run("run_b"));
    let files = [
        "triples_train.jsonl",
        "bundles_train.cwb",
        "bundles_dev.cwb",
        "bundles_devtest.cwb",
        "bundles_test.cwb",
        "model.cwfm",
        "model_lm_only.cwfm",
        "train_record.json",
        "train_record_lm_only.json",
        "submission.tsv",
    ];
    let mut bytes = 0;
    for f in files {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        check(x == y, || format!("{f} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("{} artifacts ({bytes} bytes) byte-identical across two runs", files.len()))
}

// 8 ---------------------------------------------------------------------

fn permutation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dims = if case < 5 { FeatureDims::default() } else { FeatureDims { sentence: 10, part: 6 } };
        let hidden = if case < 5 { 256 } else { 12 };
        let m = random_model(&mut rng, dims, hidden);
        let valid = rng.gen_range(0..=MAX_TRIPLES);
        let b = random_bundle(&mut rng, dims, valid);
        let mut perm: Vec<usize> = (0..MAX_TRIPLES).collect();
        for i in (1..MAX_TRIPLES).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut q = b.clone();
        let width = PARTS * dims.part;
        for (dst, &src) in perm.iter().enumerate() {
            q.mask[dst] = b.mask[src];
            q.triple_parts[dst * width..(dst + 1) * width].copy_from_slice(b.slot(src));
        }
        let e = (forward(&m, &b).unwrap().probability - forward(&m, &q).unwrap().probability).abs();
        check(e < 1e-12, || format!("case {case}: {e:.3e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("100 permuted bundles, max change {worst:.2e}"))
}

// 9 ---------------------------------------------------------------------

fn ig_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let (dims, hidden) = if case < 4 {
            (FeatureDims::default(), 256)
        } else {
            (FeatureDims { sentence: 24, part: 12 }, 16)
        };
        let m = random_model(&mut rng, dims, hidden);
        let valid = rng.gen_range(0..=MAX_TRIPLES);
        let b = random_bundle(&mut rng, dims, valid);
        let ig = integrated_gradients(&m, &b, &zero_baseline(&b), 512).unwrap();
        let r = ig.completeness_residual().abs();
        check(r < 1e-3, || format!("case {case}: residual {r:.3e}"))?;
        worst = worst.max(r);
    }

    // Linear surrogate: the path integral is exact for any step count.
    let mut linear_worst = 0.0f64;
    for case in 0..5 {
        let dims = FeatureDims { sentence: 16, part: 8 };
        let mut m = random_model(&mut rng, dims, 10);
        m.hyper.activation = Activation::Identity;
        let b = random_bundle(&mut rng, dims, case % 5);
        let (_, g) = logit_input_gradient(&m, &b).unwrap();
        for steps in [1, 7, 512] {
            let ig = integrated_gradients(&m, &b, &zero_baseline(&b), steps).unwrap();
            let r = ig.completeness_residual().abs();
            let attr_err = ig
                .sentence
                .iter()
                .zip(g.sentence.iter().zip(&b.sentence_vec))
                .chain(ig.triple_parts.iter().zip(g.triple_parts.iter().zip(&b.triple_parts)))
                .map(|(a, (gi, xi))| (a - gi * xi).abs())
                .fold(0.0, f64::max);
            check(r < 1e-12 && attr_err < 1e-12, || {
                format!("linear case {case}, {steps} steps: residual {r:.3e}, attribution error {attr_err:.3e}")
            })?;
            linear_worst = linear_worst.max(r.max(attr_err));
        }
    }
    Ok(format!(
        "20 ReLU cases at 512 steps, max residual {worst:.2e}; linear surrogate exact to {linear_worst:.1e}"
    ))
}

// 10 --------------------------------------------------------------------

fn training_contract() -> Outcome {
    let dims = FeatureDims { sentence: 6, part: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data: Vec<LabeledBundle> = (0..24)
        .map(|i| LabeledBundle {
            bundle: random_bundle(&mut rng, dims, i % 5),
            label: Label::from_bool(i % 2 == 0),
        })
        .collect();
    let m0 = FusionModel::new(dims, 5, 1).unwrap();
    let cfg = TrainConfig::default();
    let rec = train(&m0, &data, &data, &cfg).unwrap().record;
    check(rec.epochs.len() == 5, || format!("{} evaluation points", rec.epochs.len()))?;
    check(rec.epochs.iter().map(|e| e.epoch).eq(1..=5), || "epoch numbering".into())?;

    let script = [0.40, 0.55, 0.52, 0.55, 0.50];
    let mut snapshots = Vec::new();
    let out = train_with_evaluator(&m0, &data, &cfg, |epoch, m| {
        snapshots.push(m.clone());
        Ok(script[epoch - 1])
    })
    .unwrap();
    check(out.record.best_epoch == 2, || format!("best epoch {}", out.record.best_epoch))?;
    check(out.best_model == snapshots[1], || "kept model is not the epoch-2 snapshot".into())?;
    check(out.record.best_selection_macro_f1 == 0.55, || "best score".into())?;
    Ok("5 evaluation points; scripted series [0.40, 0.55, 0.52, 0.55, 0.50] selects epoch 2".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gradient oracle", gradient_oracle),
        ("forward oracle", forward_oracle),
        ("metric oracle", metric_oracle),
        ("worked-example triples", worked_example_triples),
        ("report arithmetic", report_arithmetic),
        ("synthetic triple-signal experiment", synthetic_experiment),
        ("determinism", determinism),
        ("triple-order invariance", permutation_invariance),
        ("integrated-gradients completeness", ig_completeness),
        ("training-loop contract", training_contract),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
