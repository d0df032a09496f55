//! `bfly`: verification suites, sampling, LDA runs and trace sweeps for
//! butterfly-patterned partial sums.
//!
//! Exit codes: 0 on success, 1 when a verification or statistical check
//! fails, 2 on a usage, configuration or input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use butterfly_sums::bench::{
    chi_square, counts, critical_value, draw_samples, run_sweep, SamplerMethod, SweepConfig,
    TraceReport, DEFAULT_TOPICS,
};
use butterfly_sums::butterfly::{table_layout, verify_all, CheckOutcome, Kernel};
use butterfly_sums::dist::{read_unit_file, SeededRng, WeightVector};
use butterfly_sums::lda::{
    generate_planted_corpus, gibbs_iterate, initialize, load_corpus, log_likelihood, GibbsConfig,
    UnitMode,
};
use butterfly_sums::{Error, Precision};

/// Significance level of every chi-square check.
const ALPHA: f64 = 0.001;

#[derive(Debug, Parser)]
#[command(
    name = "bfly",
    version,
    about = "Butterfly-patterned partial sums on an emulated SIMD warp"
)]
struct Cli {
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the butterfly table and search against brute-force oracles.
    Verify(VerifyArgs),
    /// Draw from one weight vector and test the draws with chi-square.
    Sample(SampleArgs),
    /// Run the LDA Gibbs sampler with a chosen draw kernel.
    Lda(LdaArgs),
    /// Sweep the draw kernels over topic counts and tabulate their traces.
    Trace(TraceArgs),
    /// Generate a corpus with planted topics.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Warp width (a power of two, at least 2).
    #[arg(long, default_value_t = 32)]
    w: usize,
    /// Number of topics.
    #[arg(long, default_value_t = 19, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = Precision::Double)]
    precision: Precision,
    /// Write the per-check CSV here instead of after the summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Weights file: one non-negative weight per line.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value = "butterfly")]
    method: SamplerMethod,
    /// Number of draws.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Warp width of the butterfly sampler.
    #[arg(long, default_value_t = 32)]
    w: usize,
    /// Write the draws here (one per line) instead of to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LdaArgs {
    /// Corpus file: one document per line, optional `#M V` header.
    #[arg(long)]
    corpus: PathBuf,
    /// Vocabulary size, when the corpus has no header.
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    topics: u64,
    #[arg(long, default_value = "butterfly")]
    kernel: Kernel,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = Precision::Double)]
    precision: Precision,
    #[arg(long, default_value_t = 32)]
    w: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// File of pre-drawn uniforms in [0, 1), consumed in (document,
    /// position) order; iteration t uses chunk t of the file, cyclically.
    #[arg(long)]
    stop_inject: Option<PathBuf>,
    /// Output directory for z.csv, loglik.csv, theta.csv and phi.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: Option<usize>,
    /// Comma-separated topic counts.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TOPICS)]
    k: Vec<usize>,
    /// Kernels to run (default: all).
    #[arg(long, value_delimiter = ',')]
    kernel: Vec<Kernel>,
    #[arg(long, default_value_t = 32)]
    w: usize,
    #[arg(long, default_value_t = Precision::Single)]
    precision: Precision,
    /// Memory line size in bytes.
    #[arg(long, default_value_t = 128)]
    line: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fill the wall_ms column (makes the output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Print a per-array report of every run.
    #[arg(long)]
    report: bool,
    /// Directory for one per-event trace CSV per run.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Write the sweep CSV here instead of to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 4)]
    topics: usize,
    #[arg(long, default_value_t = 40)]
    vocab: usize,
    #[arg(long, default_value_t = 64)]
    docs: usize,
    /// Words per document.
    #[arg(long, default_value_t = 50)]
    len: usize,
    /// Probability that a word is drawn from the whole vocabulary.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the planted topic of each document (`doc,topic`).
    #[arg(long)]
    planted: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Sample(a) => sample(a),
        Command::Lda(a) => lda(a),
        Command::Trace(a) => trace(a),
        Command::Corpus(a) => corpus(a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn verify(a: VerifyArgs) -> Result<Status> {
    let k = a.k as usize;
    let outcomes = match a.precision {
        Precision::Single => verify_all::<f32>(a.w, k, a.seed)?,
        Precision::Double => verify_all::<f64>(a.w, k, a.seed)?,
    };
    print!("{}", table_layout(a.w, k));
    println!("precision={} seed={}", a.precision, a.seed);
    for o in &outcomes {
        println!("{o}");
    }
    let mut csv = format!("{}\n", CheckOutcome::CSV_HEADER);
    for o in &outcomes {
        let _ = writeln!(csv, "{}", o.csv_row());
    }
    match &a.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("\n{csv}"),
    }
    Ok(if outcomes.iter().all(|o| o.passed) {
        Status::Ok
    } else {
        Status::CheckFailed
    })
}

fn sample(a: SampleArgs) -> Result<Status> {
    let weights = WeightVector::from_file(&a.weights)?;
    let draws = draw_samples(a.method, &weights, a.n, a.seed, a.w)?;
    let mut out = String::new();
    for d in &draws {
        let _ = writeln!(out, "{d}");
    }
    if let Some(path) = &a.out {
        write_file(path, &out)?;
    } else {
        print!("{out}");
    }
    if a.n == 0 {
        return Ok(Status::Ok);
    }

    let observed = counts(&draws, weights.len());
    let total: f64 = weights.as_slice().iter().sum();
    let expected: Vec<f64> = weights.as_slice().iter().map(|w| w / total).collect();
    let mut summary = String::from("# outcome,count,expected\n");
    for (j, (o, e)) in observed.iter().zip(&expected).enumerate() {
        let _ = writeln!(summary, "# {j},{o},{:.3}", e * a.n as f64);
    }
    let status = match chi_square(&observed, &expected) {
        Ok(c) => {
            let critical = critical_value(c.dof, ALPHA);
            let pass = c.passes(ALPHA);
            let _ = writeln!(
                summary,
                "# chi-square method={} n={} statistic={:.4} dof={} critical({ALPHA})={:.4} {}",
                a.method,
                a.n,
                c.statistic,
                c.dof,
                critical,
                if pass { "PASS" } else { "FAIL" }
            );
            if pass {
                Status::Ok
            } else {
                Status::CheckFailed
            }
        }
        Err(Error::DegenerateBins) => {
            summary +=
                "# chi-square not applicable: fewer than two outcomes have positive weight\n";
            Status::Ok
        }
        Err(e) => return Err(e.into()),
    };
    print!("{summary}");
    Ok(status)
}

fn lda(a: LdaArgs) -> Result<Status> {
    let corpus = load_corpus(&a.corpus, a.vocab)?;
    let mut config = GibbsConfig::new(a.topics as usize, a.kernel);
    config.precision = a.precision;
    config.lanes = a.w;
    config.alpha = a.alpha;
    config.beta = a.beta;
    config.seed = a.seed;
    if let Some(path) = &a.stop_inject {
        config.units = UnitMode::Injected(read_unit_file(path)?);
    }

    let (mut params, mut z) = initialize(&corpus, &config)?;
    let mut loglik = String::from("iteration,log_likelihood\n");
    for t in 0..a.iters {
        let step = gibbs_iterate(&corpus, &params, &config, t)?;
        params = step.params;
        z = step.z;
        let ll = log_likelihood(&corpus, &params)?;
        let _ = writeln!(loglik, "{},{ll:.6}", t + 1);
        println!("iteration {:>4}  log-likelihood {ll:.6}", t + 1);
    }

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_file(&a.out.join("z.csv"), &z.to_csv())?;
    write_file(&a.out.join("loglik.csv"), &loglik)?;
    write_file(&a.out.join("theta.csv"), &params.theta.to_csv())?;
    write_file(&a.out.join("phi.csv"), &params.phi.to_csv())?;
    Ok(Status::Ok)
}

fn trace(a: TraceArgs) -> Result<Status> {
    let corpus = load_corpus(&a.corpus, a.vocab)?;
    let kernels = if a.kernel.is_empty() {
        Kernel::ALL.to_vec()
    } else {
        a.kernel.clone()
    };
    let config = SweepConfig {
        lanes: a.w,
        precision: a.precision,
        line_size: a.line,
        timing: a.timing,
        event_log: a.events.is_some(),
    };
    let result = run_sweep(&corpus, &a.k, &kernels, a.seed, &config)?;
    let csv = result.to_csv();
    match &a.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if a.report {
        for run in &result.runs {
            println!(
                "K={}\n{}",
                run.topics,
                TraceReport::new(run.kernel, &run.trace)
            );
        }
    }
    if let Some(dir) = &a.events {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for run in &result.runs {
            let path = dir.join(format!("trace-{}-K{}.csv", run.kernel, run.topics));
            let file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            run.trace
                .write_csv(std::io::BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(Status::Ok)
}

fn corpus(a: CorpusArgs) -> Result<Status> {
    let mut rng = SeededRng::seed_from_u64(a.seed);
    let (corpus, planted) =
        generate_planted_corpus(a.topics, a.vocab, a.docs, a.len, a.noise, &mut rng)?;
    write_file(&a.out, &corpus.to_text())?;
    if let Some(path) = &a.planted {
        let mut s = String::from("doc,topic\n");
        for (m, t) in planted.iter().enumerate() {
            let _ = writeln!(s, "{m},{t}");
        }
        write_file(path, &s)?;
    }
    Ok(Status::Ok)
}
