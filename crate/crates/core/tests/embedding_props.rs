mod common;

use std::collections::HashMap;

use common::rng;
use creodrift::corpus::{Corpus, Document};
use creodrift::embedding::{
    build_vocab, point_cloud, train_incremental, train_skipgram, Metric, TrainParams, Vocabulary,
};
use creodrift::matrix::{dot, norm};
use proptest::prelude::*;
use rand::Rng;

const WORDS: [&str; 12] = ["ash", "bay", "cob", "dew", "elm", "fig", "gum", "hay", "ivy", "jay", "kelp", "lark"];

fn random_corpus(seed: u64, docs: usize, alphabet: usize, t0: i64) -> Corpus {
    let mut r = rng(seed);
    Corpus::new(
        (0..docs)
            .map(|i| Document {
                author: format!("u{}", i % 3),
                timestamp: t0 + i as i64,
                community: "c".into(),
                tokens: (0..r.random_range(2..10)).map(|_| WORDS[r.random_range(0..alphabet)].to_owned()).collect(),
            })
            .collect(),
    )
}

fn params(seed: u64) -> TrainParams {
    TrainParams { dim: 6, window: 2, negatives: 3, epochs: 2, min_count: 2, seed, ..TrainParams::default() }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn vocabulary_invariants(counts in prop::collection::btree_map("[a-e]{1,3}", 0u64..20, 1..30), min_count in 0u64..10) {
        match Vocabulary::from_counts(counts.iter().map(|(w, &c)| (w.clone(), c)), min_count) {
            Ok(v) => {
                let kept: Vec<&String> = counts.iter().filter(|(_, &c)| c >= min_count).map(|(w, _)| w).collect();
                prop_assert_eq!(v.len(), kept.len());
                for (i, w) in v.words().iter().enumerate() {
                    prop_assert_eq!(v.get(w), Some(i));
                    prop_assert_eq!(v.counts()[i], counts[w]);
                    prop_assert!(v.counts()[i] >= min_count);
                }
                for pair in v.words().iter().zip(v.counts()).collect::<Vec<_>>().windows(2) {
                    let ((wa, ca), (wb, cb)) = (pair[0], pair[1]);
                    prop_assert!(ca > cb || (ca == cb && wa < wb));
                }
            }
            Err(_) => prop_assert!(counts.values().all(|&c| c < min_count)),
        }
    }

    #[test]
    fn training_is_deterministic_and_finite(seed in any::<u64>(), alphabet in 3usize..12) {
        let corpus = random_corpus(seed, 20, alphabet, 0);
        let Ok(a) = train_skipgram(&corpus, &params(seed)) else {
            // nothing reached min_count
            prop_assert!(build_vocab(&corpus, 2).is_err());
            return Ok(());
        };
        let b = train_skipgram(&corpus, &params(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.input_vectors().is_finite() && a.output_vectors().is_finite());
        prop_assert_eq!(a.input_vectors().rows(), a.vocab().len());
        prop_assert_eq!(a.output_vectors().rows(), a.vocab().len());
        prop_assert_eq!(a.vocab(), &build_vocab(&corpus, 2).unwrap());
    }

    #[test]
    fn incremental_chain(seed in any::<u64>(), k in 1usize..5) {
        // later windows draw from a wider alphabet so the vocabulary can grow
        let windows: Vec<Corpus> = (0..k).map(|i| random_corpus(seed ^ i as u64, 15, 4 + 2 * i, 100 * i as i64)).collect();
        let mut models = vec![train_skipgram(&windows[0], &params(seed)).unwrap()];
        for w in &windows[1..] {
            let next = train_incremental(models.last().unwrap(), w).unwrap();
            models.push(next);
        }
        prop_assert_eq!(models.len(), k);
        for pair in models.windows(2) {
            prop_assert!(pair[1].vocab().len() >= pair[0].vocab().len());
            prop_assert!(pair[0].vocab().words().iter().all(|w| pair[1].vocab().get(w).is_some()));
            prop_assert!(pair[1].input_vectors().is_finite());
        }
    }

    #[test]
    fn angular_clouds_have_unit_rows(seed in any::<u64>(), top_n in 2usize..15) {
        let corpus = random_corpus(seed, 30, 8, 0);
        let model = train_skipgram(&corpus, &params(seed)).unwrap();
        let (cloud, clamped) = point_cloud(&model, top_n, Metric::Angular).unwrap();
        prop_assert_eq!(cloud.len(), top_n.min(model.vocab().len()));
        prop_assert_eq!(clamped, top_n > model.vocab().len());
        prop_assert_eq!(cloud.labels(), &model.vocab().words()[..cloud.len()]);
        for r in 0..cloud.len() {
            prop_assert!((norm(cloud.points().row(r)) - 1.0).abs() <= 1e-12);
        }
    }
}

/// Two topics whose words never share a document.
fn two_topic_corpus(seed: u64) -> Corpus {
    let topics = [["ash", "bay", "cob", "dew", "elm"], ["fig", "gum", "hay", "ivy", "jay"]];
    let mut r = rng(seed);
    Corpus::new(
        (0..600)
            .map(|i| Document {
                author: "a".into(),
                timestamp: i,
                community: "c".into(),
                tokens: (0..10).map(|_| topics[i as usize % 2][r.random_range(0..5)].to_owned()).collect(),
            })
            .collect(),
    )
}

#[test]
fn semantic_sanity() {
    let mut wins = 0;
    for seed in 0..10 {
        let corpus = two_topic_corpus(seed);
        let p = TrainParams { dim: 16, window: 3, negatives: 5, epochs: 5, min_count: 1, seed, ..TrainParams::default() };
        let model = train_skipgram(&corpus, &p).unwrap();
        let topic: HashMap<&str, usize> =
            model.vocab().words().iter().map(|w| (w.as_str(), usize::from(w.as_str() >= "fig"))).collect();
        let (mut intra, mut inter) = (Vec::new(), Vec::new());
        let words = model.vocab().words();
        for (i, a) in words.iter().enumerate() {
            for b in &words[i + 1..] {
                let c = cosine(model.vector(a).unwrap(), model.vector(b).unwrap());
                if topic[a.as_str()] == topic[b.as_str()] { intra.push(c) } else { inter.push(c) }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        if mean(&intra) > mean(&inter) {
            wins += 1;
        }
    }
    assert!(wins >= 9, "intra-topic similarity won in only {wins}/10 seeds");
}
