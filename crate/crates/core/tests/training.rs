//! Training behaviour of the three classifiers on synthetic inputs.

use infolab_core::classify::bag::{train_bag_ngram, BagHyper, BagNgramModel};
use infolab_core::classify::feature_lr::{train_feature_lr_on, FeatureLrHyper, FeatureLrModel};
use infolab_core::classify::ffnn::{train_context_ffnn_on, ContextFfnnModel, FfnnHyper};
use infolab_core::classify::LabeledExample;
use infolab_core::corpus::{MaskedSentence, TARGET};
use infolab_core::rng::seeded;
use rand::Rng;

/// Features where only the third column carries the label.
fn third_column_data(n: usize, seed: u64) -> (Vec<[f64; 3]>, Vec<bool>) {
    let mut rng = seeded(seed);
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let x = labels
        .iter()
        .map(|&y| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..5.0),
                if y { 1.0 } else { -1.0 } + rng.gen_range(-0.5..0.5),
            ]
        })
        .collect();
    (x, labels)
}

#[test]
fn informative_feature_dominates_the_weights() {
    let (x, y) = third_column_data(400, 1);
    let model = train_feature_lr_on(&x, &y, FeatureLrHyper::default()).unwrap();
    let w = model.weights.map(f64::abs);
    assert!(w[2] > 5.0 * w[0] && w[2] > 5.0 * w[1], "{w:?}");
    let acc = x
        .iter()
        .zip(&y)
        .filter(|(f, l)| (model.predict_features(f) >= 0.5) == **l)
        .count() as f64
        / 400.0;
    assert!(acc > 0.95, "{acc}");
}

#[test]
fn lr_gradient_at_zero_matches_finite_differences() {
    let (x, y) = third_column_data(20, 2);
    let model = FeatureLrModel {
        hyper: FeatureLrHyper::default(),
        weights: [0.0; 3],
        bias: 0.0,
        mean: [0.0; 3],
        std: [1.0; 3],
    };
    let (loss, grad) = model.loss_and_gradient(&x, &y);
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    let h = 1e-6;
    for (i, analytic) in grad.iter().enumerate() {
        let mut plus = model.clone();
        let mut minus = model.clone();
        if i < 3 {
            plus.weights[i] += h;
            minus.weights[i] -= h;
        } else {
            plus.bias += h;
            minus.bias -= h;
        }
        let fd = (plus.loss_and_gradient(&x, &y).0 - minus.loss_and_gradient(&x, &y).0) / (2.0 * h);
        assert!((fd - analytic).abs() < 1e-8, "{i}: {fd} vs {analytic}");
    }
}

#[test]
fn ffnn_training_lowers_the_loss() {
    let mut rng = seeded(3);
    let inputs: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<bool> = inputs.iter().map(|x| x[0] + x[3] > 0.0).collect();
    let hyper = FfnnHyper {
        h1: 16,
        h2: 8,
        epochs: 1,
        ..FfnnHyper::default()
    };
    let start = ContextFfnnModel::init(8, hyper, 4).batch_loss(&inputs, &labels);
    let one = train_context_ffnn_on(&inputs, &labels, hyper, 4)
        .unwrap()
        .batch_loss(&inputs, &labels);
    let many = train_context_ffnn_on(
        &inputs,
        &labels,
        FfnnHyper {
            epochs: 30,
            ..hyper
        },
        4,
    )
    .unwrap();
    let end = many.batch_loss(&inputs, &labels);
    assert!(one < start && end < one, "{start} -> {one} -> {end}");
}

fn example(tokens: &[&str], label: bool) -> LabeledExample {
    let mut t: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
    t.insert(1, TARGET.to_string());
    LabeledExample {
        masked: MaskedSentence {
            tokens: t,
            slot_index: 1,
            original_form: "x".into(),
        },
        label,
        source_word: if label { "x".into() } else { "y".into() },
        doc_id: "d".into(),
        sent_id: "s".into(),
    }
}

#[test]
fn bag_training_lowers_the_loss_and_is_seeded() {
    let mut rng = seeded(5);
    let train: Vec<LabeledExample> = (0..100)
        .map(|i| {
            let label = i % 2 == 0;
            let pool: &[&str] = if label {
                &["river", "water", "boat", "fish"]
            } else {
                &["money", "loan", "cash", "vault"]
            };
            let words: Vec<&str> = (0..5).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            example(&words, label)
        })
        .collect();
    let hyper = BagHyper {
        buckets: 1 << 12,
        dim: 10,
        epochs: 10,
        lr0: 0.5,
    };
    let fresh = BagNgramModel::new(hyper, 6);
    let batch = |m: &BagNgramModel| -> Vec<(Vec<u32>, bool)> {
        train
            .iter()
            .map(|e| (m.features(&e.masked), e.label))
            .collect()
    };
    let before = fresh.batch_loss(&batch(&fresh));
    let trained = train_bag_ngram(&train, hyper, 6).unwrap();
    let after = trained.batch_loss(&batch(&trained));
    assert!(after < 0.5 * before, "{before} -> {after}");
    assert_eq!(trained, train_bag_ngram(&train, hyper, 6).unwrap());
}
