//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spanagree_core::synth::{generate, random_span_set, GroupAssignment, JitterParams};
use spanagree_core::{Corpus, Span};

/// `n` seeded (predicted, gold) span-set pairs on documents of up to
/// `max_len` tokens.
pub fn span_set_pairs(
    seed: u64,
    n: usize,
    max_len: usize,
    max_spans: usize,
) -> Vec<(Vec<Span>, Vec<Span>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (
                random_span_set(&mut rng, len, max_spans),
                random_span_set(&mut rng, len, max_spans),
            )
        })
        .collect()
}

/// A jittered corpus with experts and crowd annotators.
pub fn jittered_corpus(seed: u64, docs: usize) -> Corpus {
    let params = JitterParams {
        seed,
        ..JitterParams::default()
    };
    generate(
        &params,
        docs,
        6,
        &GroupAssignment {
            experts: 2,
            include_truth: true,
        },
    )
    .expect("default parameters are valid")
}
