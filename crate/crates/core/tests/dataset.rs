//! Cloze dataset construction over generated corpora.

use std::collections::BTreeSet;

use infolab_core::classify::{build_dataset, ClassifyError, DatasetConfig};
use infolab_core::corpus::{Pos, Sentence, SentenceStore, Token, TARGET};
use infolab_core::distractors::DistractorSet;
use proptest::prelude::*;

const WORDS: [&str; 4] = ["bank", "shore", "river", "coast"];

/// `counts[i]` sentences holding `WORDS[i]`, some holding two of them.
fn store(counts: &[usize], doubles: usize) -> SentenceStore {
    let mut sentences = Vec::new();
    for (w, &n) in WORDS.iter().zip(counts) {
        for k in 0..n {
            let mut tokens: Vec<Token> = ["we", "walked", "to", "the"]
                .iter()
                .map(|t| Token::new(*t, *t, Pos::Other).unwrap())
                .collect();
            tokens.push(Token::new(*w, *w, Pos::Noun).unwrap());
            tokens.push(Token::new("at", "at", Pos::Other).unwrap());
            tokens.push(Token::new("9", "9", Pos::Other).unwrap());
            if k < doubles {
                let other = WORDS[(WORDS.iter().position(|x| x == w).unwrap() + 1) % WORDS.len()];
                tokens.push(Token::new(other, other, Pos::Noun).unwrap());
            }
            sentences.push(Sentence::new(format!("d{w}"), format!("{k:04}"), tokens).unwrap());
        }
    }
    SentenceStore::from_sentences(sentences).unwrap()
}

fn distractors() -> DistractorSet {
    DistractorSet {
        target: "bank".into(),
        pos: Pos::Noun,
        distractors: WORDS[1..].iter().map(|s| s.to_string()).collect(),
        pool_size: 3,
        seed: 0,
        filter_log: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn splits_are_stratified_disjoint_and_seeded(
        n_pos in 10usize..40,
        n_neg in 4usize..12,
        doubles in 0usize..4,
        seed in any::<u64>(),
        train in 0.5f64..0.8,
    ) {
        let dev = (1.0 - train) / 2.0;
        let config = DatasetConfig { n_pos, n_per_distractor: n_neg, split: (train, dev, 1.0 - train - dev), seed, ..DatasetConfig::default() };
        let corpus = store(&[60, 30, 30, 30], doubles);
        let data = build_dataset(&corpus, &distractors(), &config).unwrap();
        prop_assert_eq!(&data, &build_dataset(&corpus, &distractors(), &config).unwrap());

        let n_negatives = 3 * n_neg;
        for (class, n) in [(true, n_pos), (false, n_negatives)] {
            let count = |s: &[infolab_core::classify::LabeledExample]| s.iter().filter(|e| e.label == class).count();
            prop_assert_eq!(count(&data.train) + count(&data.dev) + count(&data.test), n);
            prop_assert_eq!(count(&data.train), (n as f64 * train).round() as usize);
        }
        let mut ids = BTreeSet::new();
        for ex in data.train.iter().chain(&data.dev).chain(&data.test) {
            prop_assert!(ids.insert((ex.doc_id.clone(), ex.sent_id.clone())), "sentence used twice");
            prop_assert_eq!(ex.label, ex.source_word == "bank");
            prop_assert_eq!(&ex.masked.tokens[ex.masked.slot_index], TARGET);
            prop_assert_eq!(&ex.masked.original_form, &ex.source_word);
            prop_assert!(ex.masked.tokens.iter().any(|t| t == "NUMBER"), "numbers are normalized");
        }
    }
}

#[test]
fn shortage_reports_the_word() {
    let corpus = store(&[60, 30, 5, 30], 0);
    let config = DatasetConfig {
        n_pos: 20,
        n_per_distractor: 10,
        ..DatasetConfig::default()
    };
    let err = build_dataset(&corpus, &distractors(), &config).unwrap_err();
    assert_eq!(
        err,
        ClassifyError::InsufficientData {
            word: "river".into(),
            needed: 10,
            available: 5
        }
    );
}

#[test]
fn bad_split_is_rejected() {
    let config = DatasetConfig {
        split: (0.7, 0.2, 0.2),
        ..DatasetConfig::default()
    };
    assert_eq!(
        build_dataset(&store(&[1, 1, 1, 1], 0), &distractors(), &config),
        Err(ClassifyError::BadSplit)
    );
}
