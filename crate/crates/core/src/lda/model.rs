//! Uncollapsed Gibbs sampling for LDA: new topic assignments are drawn by
//! one of the `draw_z` kernels, then theta and phi are redrawn from their
//! Dirichlet posteriors given the assignment counts.

use rand::SeedableRng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use super::Corpus;
use crate::butterfly::{draw_z_basic, run_kernel, Kernel, KernelOptions};
use crate::dist::{stream_seed, InjectedUnits, RandomSource, SeededRng, SeededStreams};
use crate::warp::{Trace, WarpConfig};
use crate::{Error, Matrix, Precision, Real, Result};

const INIT_STREAM: u64 = 0x1417;
const THETA_STREAM: u64 = 0x7e7a;
const PHI_STREAM: u64 = 0xf41;

/// `theta` is `M x K` with rows summing to one; `phi` is `V x K` with
/// columns summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Matrix<f64>,
    pub phi: Matrix<f64>,
}

impl ModelParams {
    pub fn topics(&self) -> usize {
        self.theta.cols()
    }
}

/// One topic per word of every document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignment {
    z: Vec<Vec<usize>>,
}

impl TopicAssignment {
    pub fn new(z: Vec<Vec<usize>>, corpus: &Corpus, k: usize) -> Result<Self> {
        if z.len() != corpus.len() {
            return Err(Error::Shape(format!(
                "{} assignment rows for {} documents",
                z.len(),
                corpus.len()
            )));
        }
        for (m, (row, doc)) in z.iter().zip(corpus.docs()).enumerate() {
            if row.len() != doc.len() {
                return Err(Error::Shape(format!(
                    "document {m} has {} words but {} assignments",
                    doc.len(),
                    row.len()
                )));
            }
            if let Some(&t) = row.iter().find(|&&t| t >= k) {
                return Err(Error::Shape(format!(
                    "document {m}: topic {t} is not below {k}"
                )));
            }
        }
        Ok(TopicAssignment { z })
    }

    /// Uniformly random topics.
    pub fn uniform<R: RandomSource + ?Sized>(corpus: &Corpus, k: usize, rng: &mut R) -> Self {
        let z = corpus
            .docs()
            .iter()
            .map(|doc| doc.iter().map(|_| rng.next_index(k)).collect())
            .collect();
        TopicAssignment { z }
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// `doc,pos,topic` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("doc,pos,topic\n");
        for (m, row) in self.z.iter().enumerate() {
            for (i, t) in row.iter().enumerate() {
                s += &format!("{m},{i},{t}\n");
            }
        }
        s
    }
}

/// Where the uniforms of each iteration's draws come from.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitMode {
    /// Per-document streams keyed by `(seed, iteration, doc)`.
    Seeded,
    /// Pre-drawn values, consumed in `(doc, pos)` order. Iteration `t` uses
    /// chunk `t mod chunks` of the list, each chunk covering every word once.
    Injected(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    pub topics: usize,
    pub kernel: Kernel,
    pub precision: Precision,
    pub lanes: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub units: UnitMode,
    /// Collect the memory trace of the kernel.
    pub event_log: bool,
}

impl GibbsConfig {
    pub fn new(topics: usize, kernel: Kernel) -> Self {
        GibbsConfig {
            topics,
            kernel,
            precision: Precision::Double,
            lanes: 32,
            alpha: 0.1,
            beta: 0.01,
            seed: 0,
            units: UnitMode::Seeded,
            event_log: false,
        }
    }

    fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Config("number of topics must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config(format!(
                "Dirichlet parameters must be positive (alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if corpus.vocab() == 0 {
            return Err(Error::Config("vocabulary is empty".into()));
        }
        Ok(())
    }

    fn injected(&self, corpus: &Corpus, iteration: u64) -> Result<Option<InjectedUnits>> {
        let UnitMode::Injected(values) = &self.units else {
            return Ok(None);
        };
        let total = corpus.total_words();
        if total == 0 {
            return Ok(Some(InjectedUnits::from_values(&corpus.lengths(), &[])?));
        }
        let chunks = values.len() / total;
        if chunks == 0 {
            return Err(Error::Config(format!(
                "injected stream has {} values, corpus needs {total} per iteration",
                values.len()
            )));
        }
        let start = (iteration as usize % chunks) * total;
        InjectedUnits::from_values(&corpus.lengths(), &values[start..start + total]).map(Some)
    }
}

/// Random assignments and parameters drawn from them.
pub fn initialize(corpus: &Corpus, config: &GibbsConfig) -> Result<(ModelParams, TopicAssignment)> {
    config.validate(corpus)?;
    let mut rng = SeededRng::seed_from_u64(stream_seed(config.seed, &[INIT_STREAM]));
    let z = TopicAssignment::uniform(corpus, config.topics, &mut rng);
    let params = sample_params(corpus, &z, config, u64::MAX)?;
    Ok((params, z))
}

/// Output of one sweep.
#[derive(Debug, Clone)]
pub struct GibbsStep {
    pub params: ModelParams,
    pub z: TopicAssignment,
    pub trace: Trace,
}

/// One sweep: redraw every `z` with the configured kernel, then theta and
/// phi from their posteriors.
pub fn gibbs_iterate(
    corpus: &Corpus,
    params: &ModelParams,
    config: &GibbsConfig,
    iteration: u64,
) -> Result<GibbsStep> {
    config.validate(corpus)?;
    let (z, trace) = match config.precision {
        Precision::Single => draw::<f32>(corpus, params, config, iteration)?,
        Precision::Double => draw::<f64>(corpus, params, config, iteration)?,
    };
    let z = TopicAssignment::new(z, corpus, config.topics)?;
    let params = sample_params(corpus, &z, config, iteration)?;
    Ok(GibbsStep { params, z, trace })
}

fn draw<F: Real>(
    corpus: &Corpus,
    params: &ModelParams,
    config: &GibbsConfig,
    iteration: u64,
) -> Result<(Vec<Vec<usize>>, Trace)> {
    if params.theta.rows() != corpus.len() || params.topics() != config.topics {
        return Err(Error::Shape(format!(
            "theta is {}x{}, corpus has {} documents and the model {} topics",
            params.theta.rows(),
            params.topics(),
            corpus.len(),
            config.topics
        )));
    }
    let theta = params.theta.to_precision::<F>();
    let phi = params.phi.to_precision::<F>();
    let docs = corpus.docs();
    let injected = config.injected(corpus, iteration)?;
    let seeded = SeededStreams::new(config.seed, iteration);
    if config.kernel == Kernel::Basic && !config.event_log {
        let z = match &injected {
            Some(units) => draw_z_basic(docs, &theta, &phi, &units)?,
            None => draw_z_basic(docs, &theta, &phi, &seeded)?,
        };
        return Ok((z, Trace::default()));
    }
    let mut options = KernelOptions::new(WarpConfig::with_lanes(config.lanes, F::BYTES)?);
    options.event_log = config.event_log;
    // warp kernels run whole warps: pad with empty documents, whose lanes
    // only assist, and drop their (empty) rows of z afterwards
    let padded = corpus.pad_to_multiple(config.lanes);
    let theta = Matrix::from_fn(padded.len(), config.topics, |m, k| {
        if m < corpus.len() {
            theta.get(m, k)
        } else {
            F::one()
        }
    });
    let injected = config.injected(&padded, iteration)?;
    let docs = padded.docs();
    let mut run = match &injected {
        Some(units) => run_kernel(config.kernel, docs, &theta, &phi, &units, &options)?,
        None => run_kernel(config.kernel, docs, &theta, &phi, &seeded, &options)?,
    };
    run.z.truncate(corpus.len());
    Ok((run.z, run.trace))
}

fn dirichlet(alpha: &[f64], rng: &mut SeededRng) -> Result<Vec<f64>> {
    let mut x = alpha
        .iter()
        .map(|&a| {
            let g = Gamma::new(a, 1.0).map_err(|e| Error::Config(format!("Gamma({a}, 1): {e}")))?;
            Ok(g.sample(rng).max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    Ok(x)
}

/// `theta[m] ~ Dir(alpha + topic counts of m)` and
/// `phi[., k] ~ Dir(beta + word counts of topic k)`. Each row and column
/// has its own stream keyed by `(seed, iteration, index)`, so the result
/// does not depend on scheduling.
pub fn sample_params(
    corpus: &Corpus,
    z: &TopicAssignment,
    config: &GibbsConfig,
    iteration: u64,
) -> Result<ModelParams> {
    let k = config.topics;
    let v = corpus.vocab();
    let theta_rows = z
        .rows()
        .par_iter()
        .enumerate()
        .map(|(m, row)| {
            let mut alpha = vec![config.alpha; k];
            for &t in row {
                alpha[t] += 1.0;
            }
            let mut rng = SeededRng::seed_from_u64(stream_seed(
                config.seed,
                &[THETA_STREAM, iteration, m as u64],
            ));
            dirichlet(&alpha, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = Matrix::from_vec(corpus.len(), k, theta_rows.concat())?;

    let mut counts = vec![0u64; v * k];
    for (doc, row) in corpus.docs().iter().zip(z.rows()) {
        for (&c, &t) in doc.iter().zip(row) {
            counts[c * k + t] += 1;
        }
    }
    let phi_cols = (0..k)
        .into_par_iter()
        .map(|t| {
            let beta: Vec<f64> = (0..v)
                .map(|c| config.beta + counts[c * k + t] as f64)
                .collect();
            let mut rng = SeededRng::seed_from_u64(stream_seed(
                config.seed,
                &[PHI_STREAM, iteration, t as u64],
            ));
            dirichlet(&beta, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = Matrix::from_fn(v, k, |c, t| phi_cols[t][c]);
    Ok(ModelParams { theta, phi })
}

/// `sum over words of log(sum_k theta^[m,k] * phi^[c,k])`, with theta
/// normalized by rows and phi by columns.
pub fn log_likelihood(corpus: &Corpus, params: &ModelParams) -> Result<f64> {
    let k = params.topics();
    let theta_sums: Vec<f64> = (0..params.theta.rows())
        .map(|m| params.theta.row(m).iter().sum())
        .collect();
    let phi_sums: Vec<f64> = (0..k)
        .map(|t| (0..params.phi.rows()).map(|c| params.phi.get(c, t)).sum())
        .collect();
    let mut ll = 0.0;
    for (m, doc) in corpus.docs().iter().enumerate() {
        for (i, &c) in doc.iter().enumerate() {
            let p: f64 = (0..k)
                .filter(|&t| phi_sums[t] > 0.0)
                .map(|t| {
                    params.theta.get(m, t) / theta_sums[m] * params.phi.get(c, t) / phi_sums[t]
                })
                .sum();
            if p.is_nan() || p <= 0.0 {
                return Err(Error::AllZeroDraw { doc: m, pos: i });
            }
            ll += p.ln();
        }
    }
    Ok(ll)
}
