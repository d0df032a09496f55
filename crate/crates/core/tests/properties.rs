//! Cross-module properties: the butterfly path against the plain prefix
//! table, kernels against each other in single precision, and file
//! formats round-tripping.

use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;

use butterfly_sums::butterfly::{run_kernel, ButterflySampler, Kernel, KernelOptions};
use butterfly_sums::dist::{InjectedUnits, PrefixTable, RandomSource, SeededRng, WeightVector};
use butterfly_sums::lda::Corpus;
use butterfly_sums::warp::WarpConfig;
use butterfly_sums::Matrix;

fn integer_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..20, 1..90)
        .prop_filter("some weight positive", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| w.into_iter().map(f64::from).collect())
}

fn docs(vocab: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..vocab, 0..12), 1..24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With integer weights every sum is exact, so the butterfly sampler
    /// must return exactly what a binary search over the prefix table
    /// returns for the same uniforms.
    #[test]
    fn butterfly_sampler_matches_prefix_table(
        weights in integer_weights(),
        lanes_log in 1u32..6,
        seed in any::<u64>(),
    ) {
        let lanes = 1usize << lanes_log;
        let w = WeightVector::new(weights).unwrap();
        let n = 4 * lanes;
        let got = ButterflySampler::<f64>::new(&w, lanes)
            .unwrap()
            .sample(n, &mut SeededRng::seed_from_u64(seed))
            .unwrap();
        let table = PrefixTable::<f64>::build(&w).unwrap();
        let mut rng = SeededRng::seed_from_u64(seed);
        let want: Vec<usize> = (0..n).map(|_| table.draw(&mut rng).unwrap()).collect();
        prop_assert_eq!(got, want);
    }

    /// Single precision with small-integer parameters: sums stay exact in
    /// f32, so all kernels must agree draw for draw.
    #[test]
    fn single_precision_kernels_agree(
        docs in docs(9),
        k in 1usize..70,
        lanes_log in 1u32..5,
        seed in any::<u64>(),
    ) {
        let lanes = 1usize << lanes_log;
        let corpus = Corpus::new(docs, 9).unwrap().pad_to_multiple(lanes);
        let mut rng = SeededRng::seed_from_u64(seed);
        let theta = Matrix::from_fn(corpus.len(), k, |_, _| (1 + rng.next_index(15)) as f32);
        let phi = Matrix::from_fn(9, k, |_, _| rng.next_index(4) as f32 + 1.0);
        let units = InjectedUnits::generate(&corpus.lengths(), seed);
        let options = KernelOptions::new(WarpConfig::with_lanes(lanes, 4).unwrap());
        let runs: Vec<_> = Kernel::ALL
            .iter()
            .map(|&kernel| run_kernel(kernel, corpus.docs(), &theta, &phi, &&units, &options).unwrap())
            .collect();
        for run in &runs[1..] {
            prop_assert_eq!(&run.z, &runs[0].z);
            prop_assert_eq!(run.draws, runs[0].draws);
        }
    }

    /// Writing a corpus and parsing it back gives the same documents.
    #[test]
    fn corpus_round_trips(docs in docs(30)) {
        let corpus = Corpus::new(docs, 30).unwrap();
        let text = corpus.to_text();
        let back = Corpus::parse(&text, None, Path::new("mem")).unwrap();
        prop_assert_eq!(back.docs(), corpus.docs());
        prop_assert_eq!(back.vocab(), 30);
    }
}

#[test]
fn event_log_csv_has_one_row_per_event() {
    let corpus = Corpus::new(vec![vec![0, 1, 2], vec![2], vec![], vec![1, 1]], 3).unwrap();
    let theta = Matrix::filled(4, 11, 1.0f64);
    let phi = Matrix::filled(3, 11, 1.0f64);
    let units = InjectedUnits::generate(&corpus.lengths(), 1);
    let options = KernelOptions::new(WarpConfig::with_lanes(4, 8).unwrap()).with_event_log();
    let run = run_kernel(
        Kernel::Butterfly,
        corpus.docs(),
        &theta,
        &phi,
        &&units,
        &options,
    )
    .unwrap();
    let mut buf = Vec::new();
    run.trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("step,space,kind,active_lanes,transactions")
    );
    assert_eq!(text.lines().count(), run.trace.events().len() + 1);
    assert!(!run.trace.events().is_empty());
}
