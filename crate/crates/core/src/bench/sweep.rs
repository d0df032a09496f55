//! Runs every kernel over a list of topic counts and tabulates memory
//! traffic and warp-instruction counts.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;

use crate::butterfly::{run_kernel, Kernel, KernelOptions, KernelRun};
use crate::dist::{stream_seed, InjectedUnits, RandomSource, SeededRng};
use crate::lda::Corpus;
use crate::warp::{AccessKind, MemorySpace, OpKind, Phase, Trace, WarpConfig};
use crate::{Error, Matrix, Precision, Real, Result};

/// Topic counts of the default sweep.
pub const DEFAULT_TOPICS: [usize; 8] = [16, 48, 80, 112, 144, 176, 208, 240];

pub const SWEEP_SCHEMA: u32 = 1;
pub const SWEEP_HEADER: &str =
    "kernel,K,global_txn,local_txn,scattered_local,shuffles,adds,draws,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub lanes: usize,
    pub precision: Precision,
    pub line_size: usize,
    /// Measure wall time. Off by default so that output is reproducible.
    pub timing: bool,
    /// Keep every memory event, not just the totals.
    pub event_log: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lanes: 32,
            precision: Precision::Single,
            line_size: 128,
            timing: false,
            event_log: false,
        }
    }
}

/// One `(kernel, K)` run.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub kernel: Kernel,
    pub topics: usize,
    pub trace: Trace,
    pub draws: u64,
    pub warp_words: u64,
    pub z: Vec<Vec<usize>>,
    pub wall_ms: Option<f64>,
}

impl SweepRun {
    /// All global transactions.
    pub fn global_txn(&self) -> u64 {
        self.trace
            .sum(|k| k.space == MemorySpace::Global)
            .transactions
    }

    /// All local transactions.
    pub fn local_txn(&self) -> u64 {
        self.trace
            .sum(|k| k.space == MemorySpace::Local)
            .transactions
    }

    /// Scattered local reads while building the per-word table.
    pub fn scattered_local(&self) -> u64 {
        self.trace
            .sum(|k| {
                k.space == MemorySpace::Local
                    && k.phase == Phase::TableBuild
                    && k.kind == AccessKind::Read
            })
            .scattered
    }

    pub fn shuffles(&self) -> u64 {
        self.trace
            .ops(|_, op| matches!(op, OpKind::Shuffle | OpKind::ShuffleXor))
    }

    pub fn adds(&self) -> u64 {
        self.trace
            .ops(|_, op| matches!(op, OpKind::Add | OpKind::Accumulate))
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kernel,
            self.topics,
            self.global_txn(),
            self.local_txn(),
            self.scattered_local(),
            self.shuffles(),
            self.adds(),
            self.draws,
            self.wall_ms
                .map(|ms| format!("{ms:.3}"))
                .unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub runs: Vec<SweepRun>,
}

impl SweepResult {
    pub fn run(&self, kernel: Kernel, topics: usize) -> Option<&SweepRun> {
        self.runs
            .iter()
            .find(|r| r.kernel == kernel && r.topics == topics)
    }

    /// Versioned CSV: a `#` line with the schema version and warp
    /// geometry, the header, then one row per `(kernel, K)`.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "# sweep schema={SWEEP_SCHEMA} lanes={} elem={} line={}\n{SWEEP_HEADER}\n",
            c.lanes,
            c.precision.elem_size(),
            c.line_size
        );
        for r in &self.runs {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }
}

/// Positive random theta (`M x K`) and phi (`V x K`) for a sweep point.
pub fn random_params(m: usize, v: usize, k: usize, seed: u64) -> (Matrix<f64>, Matrix<f64>) {
    let mut rng = SeededRng::seed_from_u64(stream_seed(seed, &[k as u64, 0]));
    let theta = Matrix::from_fn(m, k, |_, _| 1.0 - rng.next_unit());
    let phi = Matrix::from_fn(v, k, |_, _| 1.0 - rng.next_unit());
    (theta, phi)
}

/// One draw phase per `(kernel, K)` on the corpus, padded to the warp
/// width. Within one `K` every kernel sees the same parameters and the
/// same injected uniforms.
pub fn run_sweep(
    corpus: &Corpus,
    topics: &[usize],
    kernels: &[Kernel],
    seed: u64,
    config: &SweepConfig,
) -> Result<SweepResult> {
    match config.precision {
        Precision::Single => sweep::<f32>(corpus, topics, kernels, seed, config),
        Precision::Double => sweep::<f64>(corpus, topics, kernels, seed, config),
    }
}

fn sweep<F: Real>(
    corpus: &Corpus,
    topics: &[usize],
    kernels: &[Kernel],
    seed: u64,
    config: &SweepConfig,
) -> Result<SweepResult> {
    let warp = WarpConfig::new(config.lanes, F::BYTES, config.line_size)?;
    let corpus = corpus.pad_to_multiple(config.lanes);
    if corpus.vocab() == 0 {
        return Err(Error::Config("corpus vocabulary is empty".into()));
    }
    let options = KernelOptions::new(warp);
    let options = if config.event_log {
        options.with_event_log()
    } else {
        options
    };
    let lengths = corpus.lengths();
    let mut runs = Vec::new();
    for &k in topics {
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        let (theta, phi) = random_params(corpus.len(), corpus.vocab(), k, seed);
        let (theta, phi) = (theta.to_precision::<F>(), phi.to_precision::<F>());
        let units = InjectedUnits::generate(&lengths, stream_seed(seed, &[k as u64, 1]));
        for &kernel in kernels {
            let start = Instant::now();
            let KernelRun {
                z,
                trace,
                draws,
                warp_words,
                ..
            } = run_kernel(kernel, corpus.docs(), &theta, &phi, &&units, &options)?;
            let wall_ms = config.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            runs.push(SweepRun {
                kernel,
                topics: k,
                trace,
                draws,
                warp_words,
                z,
                wall_ms,
            });
        }
    }
    Ok(SweepResult {
        config: *config,
        runs,
    })
}
