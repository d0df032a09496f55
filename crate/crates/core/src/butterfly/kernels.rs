//! The three `draw_z` kernels: the sequential per-document reference, the
//! transposed-access kernel, and the butterfly kernel. The warp kernels
//! run one emulated warp per group of `W` documents.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::search::check_stops;
use super::{
    butterfly_search, cache_theta_transposed, compute_partial_sums_transposed, ButterflyTable,
    TransposedScratch,
};
use crate::dist::{binary_search, UnitSource, UnitStream};
use crate::warp::{
    AddressSpace, GlobalArray2D, GlobalLayout, Lanes, LocalArray, OpKind, Phase, Trace, Warp,
    WarpConfig,
};
use crate::{Error, Matrix, Real, Result};

const INDEX_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Basic,
    Transposed,
    Butterfly,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Basic, Kernel::Transposed, Kernel::Butterfly];

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::Basic => "basic",
            Kernel::Transposed => "transposed",
            Kernel::Butterfly => "butterfly",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Kernel::Basic),
            "transposed" => Ok(Kernel::Transposed),
            "butterfly" => Ok(Kernel::Butterfly),
            _ => Err(Error::Config(format!(
                "unknown kernel `{s}` (expected basic, transposed or butterfly)"
            ))),
        }
    }
}

/// How theta and phi rows are placed in simulated global memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixLayout {
    /// Plain row-major, rows packed back to back.
    RowMajor,
    /// Rows padded so that each `W`-wide topic block starts a memory line.
    #[default]
    BlockAligned,
}

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    pub config: WarpConfig,
    pub layout: MatrixLayout,
    /// Keep every memory event, not only the per-array totals.
    pub event_log: bool,
    /// Run warps on the rayon pool. Results and merged traces do not
    /// depend on this.
    pub parallel: bool,
}

impl KernelOptions {
    pub fn new(config: WarpConfig) -> Self {
        KernelOptions {
            config,
            layout: MatrixLayout::default(),
            event_log: false,
            parallel: true,
        }
    }

    pub fn with_event_log(mut self) -> Self {
        self.event_log = true;
        self
    }

    pub fn with_layout(mut self, layout: MatrixLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }
}

/// Output of one warp kernel launch.
#[derive(Debug, Clone)]
pub struct KernelRun {
    pub z: Vec<Vec<usize>>,
    pub trace: Trace,
    /// Draws whose result was kept (one per word).
    pub draws: u64,
    /// Draws performed, including repeated final words of short documents.
    pub lane_draws: u64,
    /// Table builds summed over warps: one per warp per word step.
    pub warp_words: u64,
}

fn check_inputs<F: Copy>(docs: &[Vec<usize>], theta: &Matrix<F>, phi: &Matrix<F>) -> Result<()> {
    if theta.rows() != docs.len() {
        return Err(Error::Shape(format!(
            "theta has {} rows for {} documents",
            theta.rows(),
            docs.len()
        )));
    }
    if theta.cols() == 0 || phi.cols() != theta.cols() {
        return Err(Error::Shape(format!(
            "theta has {} topics, phi has {}",
            theta.cols(),
            phi.cols()
        )));
    }
    for (m, doc) in docs.iter().enumerate() {
        if let Some((i, &c)) = doc.iter().enumerate().find(|(_, &c)| c >= phi.rows()) {
            return Err(Error::Shape(format!(
                "document {m}, position {i}: word {c} is not below vocabulary size {}",
                phi.rows()
            )));
        }
    }
    Ok(())
}

/// Sequential reference: for every word, build the document's prefix sums
/// of `theta[m, k] * phi[c, k]` and binary-search `total * u`.
pub fn draw_z_basic<F: Real, U: UnitSource>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    units: &U,
) -> Result<Vec<Vec<usize>>> {
    check_inputs(docs, theta, phi)?;
    let k = theta.cols();
    docs.par_iter()
        .enumerate()
        .map(|(m, doc)| {
            let mut stream = units.stream(m);
            let mut p = vec![F::zero(); k];
            let th = theta.row(m);
            doc.iter()
                .enumerate()
                .map(|(i, &c)| {
                    let ph = phi.row(c);
                    let mut sum = F::zero();
                    for t in 0..k {
                        sum += th[t] * ph[t];
                        p[t] = sum;
                    }
                    if sum <= F::zero() {
                        return Err(Error::AllZeroDraw { doc: m, pos: i });
                    }
                    let u = F::unit(stream.draw_unit(i)?);
                    Ok(binary_search(&p, sum * u))
                })
                .collect()
        })
        .collect()
}

/// Global arrays shared by every warp of one launch.
struct Globals<F> {
    theta: GlobalArray2D<F>,
    phi: GlobalArray2D<F>,
    words: GlobalArray2D<usize>,
    z: GlobalArray2D<usize>,
    offsets: Vec<usize>,
}

impl<F: Real> Globals<F> {
    fn new(
        docs: &[Vec<usize>],
        theta: &Matrix<F>,
        phi: &Matrix<F>,
        options: &KernelOptions,
    ) -> Self {
        let line = options.config.line_size();
        let w = options.config.lanes();
        let k = theta.cols();
        let layout = match options.layout {
            MatrixLayout::RowMajor => GlobalLayout::row_major(k),
            MatrixLayout::BlockAligned => GlobalLayout::line_aligned(k, k % w, line / F::BYTES),
        };
        let mut space = AddressSpace::new(line);
        let theta = GlobalArray2D::new("theta", theta.clone(), layout, F::BYTES, &mut space);
        let phi = GlobalArray2D::new("phi", phi.clone(), layout, F::BYTES, &mut space);
        let mut offsets = Vec::with_capacity(docs.len() + 1);
        offsets.push(0);
        for d in docs {
            offsets.push(offsets.last().unwrap() + d.len());
        }
        let flat: Vec<usize> = docs.iter().flatten().copied().collect();
        let total = flat.len().max(1);
        let mut flat_padded = flat;
        flat_padded.resize(total, 0);
        let words = GlobalArray2D::row_major(
            "w",
            Matrix::from_vec(1, total, flat_padded).expect("sized above"),
            INDEX_BYTES,
            &mut space,
        );
        let z = GlobalArray2D::row_major("z", Matrix::filled(1, total, 0), INDEX_BYTES, &mut space);
        Globals {
            theta,
            phi,
            words,
            z,
            offsets,
        }
    }

    fn flat_index(&self, m: usize, i: usize) -> (usize, usize) {
        (0, self.offsets[m] + i)
    }
}

struct BlockResult {
    z: Vec<Vec<usize>>,
    trace: Trace,
    draws: u64,
    lane_draws: u64,
    warp_words: u64,
}

fn new_warp(options: &KernelOptions) -> Warp {
    let warp = Warp::new(options.config);
    if options.event_log {
        warp.with_event_log()
    } else {
        warp
    }
}

fn check_warp_inputs<F: Real>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    options: &KernelOptions,
) -> Result<()> {
    check_inputs(docs, theta, phi)?;
    let w = options.config.lanes();
    if !docs.len().is_multiple_of(w) {
        return Err(Error::Config(format!(
            "{} documents is not a multiple of the warp width {w}; pad the corpus",
            docs.len()
        )));
    }
    if options.config.elem_size() != F::BYTES {
        return Err(Error::Config(format!(
            "warp configured for {}-byte elements, kernel computes in {}-byte floats",
            options.config.elem_size(),
            F::BYTES
        )));
    }
    Ok(())
}

fn launch<F: Real>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    options: &KernelOptions,
    block: impl Fn(&Globals<F>, usize) -> Result<BlockResult> + Sync,
) -> Result<KernelRun> {
    check_warp_inputs(docs, theta, phi, options)?;
    let globals = Globals::new(docs, theta, phi, options);
    let warps = docs.len() / options.config.lanes();
    let results: Vec<BlockResult> = if options.parallel {
        (0..warps)
            .into_par_iter()
            .map(|q| block(&globals, q))
            .collect::<Result<_>>()?
    } else {
        (0..warps)
            .map(|q| block(&globals, q))
            .collect::<Result<_>>()?
    };
    let mut run = KernelRun {
        z: Vec::with_capacity(docs.len()),
        trace: if options.event_log {
            Trace::with_events()
        } else {
            Trace::default()
        },
        draws: 0,
        lane_draws: 0,
        warp_words: 0,
    };
    for r in results {
        run.z.extend(r.z);
        run.trace.merge(r.trace);
        run.draws += r.draws;
        run.lane_draws += r.lane_draws;
        run.warp_words += r.warp_words;
    }
    Ok(run)
}

/// Per-lane binary search over each lane's own prefix-sum row.
fn lane_binary_search<F: Real>(
    warp: &mut Warp,
    p: &LocalArray<F>,
    stop: &Lanes<F>,
) -> Result<Lanes<usize>> {
    let w = warp.lanes();
    let mut lo = Lanes::splat(w, 0usize);
    let mut hi = Lanes::splat(w, p.len() - 1);
    loop {
        let open = Lanes::from_fn(w, |r| lo[r] < hi[r]);
        if !warp.any(&open) {
            break;
        }
        let mid = Lanes::from_fn(w, |r| (lo[r] + hi[r]) / 2);
        let v = p.load(warp, &Lanes::from_fn(w, |r| open[r].then_some(mid[r])))?;
        for r in 0..w {
            if open[r] {
                if stop[r] < v[r] {
                    hi[r] = mid[r];
                } else {
                    lo[r] = mid[r] + 1;
                }
            }
        }
    }
    Ok(lo)
}

/// Draws `u` for every lane at `pos` and scales it by the lane's total.
fn stops<F: Real, S: UnitStream>(
    warp: &mut Warp,
    streams: &mut [S],
    first: usize,
    pos: &Lanes<Option<usize>>,
    sums: &Lanes<F>,
) -> Result<Lanes<F>> {
    let w = warp.lanes();
    let mut u = Lanes::splat(w, F::zero());
    for r in 0..w {
        if let Some(i) = pos[r] {
            if warp.is_active(r) {
                if sums[r] <= F::zero() {
                    return Err(Error::AllZeroDraw {
                        doc: first + r,
                        pos: i,
                    });
                }
                u[r] = F::unit(streams[r].draw_unit(i)?);
            }
        }
    }
    Ok(warp.alu(OpKind::Mul, sums, &u, |s, u| s * u))
}

/// Per-word table of a master-index kernel.
enum WordTable<F> {
    Transposed(TransposedScratch<F>),
    Butterfly(ButterflyTable<F>),
}

impl<F: Real> WordTable<F> {
    /// Builds the table for `words` and draws one topic per lane.
    #[allow(clippy::too_many_arguments)]
    fn draw<S: UnitStream>(
        &mut self,
        warp: &mut Warp,
        theta_local: &LocalArray<F>,
        phi: &GlobalArray2D<F>,
        words: &Lanes<usize>,
        streams: &mut [S],
        first: usize,
        pos: &Lanes<Option<usize>>,
    ) -> Result<Lanes<usize>> {
        match self {
            WordTable::Transposed(scratch) => {
                let sums = compute_partial_sums_transposed(warp, theta_local, phi, words, scratch)?;
                warp.set_phase(Phase::Search);
                let stop = stops(warp, streams, first, pos, &sums)?;
                check_stops(&stop, &sums)?;
                lane_binary_search(warp, scratch.prefix(), &stop)
            }
            WordTable::Butterfly(table) => {
                table.build(warp, theta_local, phi, words)?;
                warp.set_phase(Phase::Search);
                let stop = stops(warp, streams, first, pos, table.sums())?;
                butterfly_search(warp, table, &stop)
            }
        }
    }
}

fn master_index_block<F: Real, U: UnitSource>(
    g: &Globals<F>,
    q: usize,
    docs: &[Vec<usize>],
    units: &U,
    options: &KernelOptions,
    kernel: Kernel,
) -> Result<BlockResult> {
    let mut warp = new_warp(options);
    let w = warp.lanes();
    let first = q * w;
    let theta_local = cache_theta_transposed(&mut warp, &g.theta, q)?;
    let topics = theta_local.len();
    let mut table = match kernel {
        Kernel::Butterfly => WordTable::Butterfly(ButterflyTable::new(&mut warp, topics)),
        _ => WordTable::Transposed(TransposedScratch::new(&mut warp, topics)),
    };

    let lens = Lanes::from_fn(w, |r| docs[first + r].len());
    let mut streams: Vec<U::Stream> = (0..w).map(|r| units.stream(first + r)).collect();
    let mut z: Vec<Vec<usize>> = (0..w).map(|r| vec![0; lens[r]]).collect();
    let (mut draws, mut lane_draws) = (0, 0);
    let mut i_master = 0;
    loop {
        warp.set_phase(Phase::Other);
        let more = Lanes::from_fn(w, |r| i_master < lens[r]);
        if !warp.any(&more) {
            break;
        }
        // short documents keep redrawing their last word; empty ones idle
        let pos = Lanes::from_fn(w, |r| (lens[r] > 0).then(|| i_master.min(lens[r] - 1)));
        let at = Lanes::from_fn(w, |r| pos[r].map(|i| g.flat_index(first + r, i)));

        warp.set_phase(Phase::TableBuild);
        let words = g.words.load(&mut warp, &at)?;
        let j = table.draw(
            &mut warp,
            &theta_local,
            &g.phi,
            &words,
            &mut streams,
            first,
            &pos,
        )?;

        warp.set_phase(Phase::Writeback);
        g.z.record_store(&mut warp, &at)?;
        for r in 0..w {
            if let Some(i) = pos[r] {
                z[r][i] = j[r];
                lane_draws += 1;
                if i == i_master {
                    draws += 1;
                }
            }
        }
        i_master += 1;
    }
    Ok(BlockResult {
        z,
        trace: warp.into_trace(),
        draws,
        lane_draws,
        warp_words: i_master as u64,
    })
}

/// Transposed-access kernel: theta cached with transposed fetches, prefix
/// sums built through the `c_warp` and `a` work arrays, then a per-lane
/// binary search. Documents of unequal length are handled with a master
/// index so every lane stays active.
pub fn draw_z_transposed<F: Real, U: UnitSource>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    units: &U,
    options: &KernelOptions,
) -> Result<KernelRun> {
    launch(docs, theta, phi, options, |g, q| {
        master_index_block(g, q, docs, units, options, Kernel::Transposed)
    })
}

/// Butterfly kernel: theta cached as for the transposed kernel, a
/// butterfly table built in registers with warp shuffles, and the
/// butterfly search.
pub fn draw_z_butterfly<F: Real, U: UnitSource>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    units: &U,
    options: &KernelOptions,
) -> Result<KernelRun> {
    launch(docs, theta, phi, options, |g, q| {
        master_index_block(g, q, docs, units, options, Kernel::Butterfly)
    })
}

/// The sequential reference written as a naive lane program: one lane per
/// document, theta and phi read with stride `K`, lanes switched off once
/// their document runs out. Draws the same `z` as [`draw_z_basic`]; exists
/// to give the memory traces a baseline.
pub fn draw_z_basic_warp<F: Real, U: UnitSource>(
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    units: &U,
    options: &KernelOptions,
) -> Result<KernelRun> {
    launch(docs, theta, phi, options, |g, q| {
        let mut warp = new_warp(options);
        let w = warp.lanes();
        let first = q * w;
        let topics = g.theta.cols();
        let mut p = LocalArray::new(&mut warp, "p", topics, F::BYTES);
        let lens = Lanes::from_fn(w, |r| docs[first + r].len());
        let mut streams: Vec<U::Stream> = (0..w).map(|r| units.stream(first + r)).collect();
        let mut z: Vec<Vec<usize>> = (0..w).map(|r| vec![0; lens[r]]).collect();
        let mut draws = 0;
        let mut i = 0;
        loop {
            warp.activate_all();
            warp.set_phase(Phase::Other);
            let active = Lanes::from_fn(w, |r| i < lens[r]);
            if !warp.any(&active) {
                break;
            }
            warp.set_active(&active);
            let pos = Lanes::from_fn(w, |r| active[r].then_some(i));
            let at = Lanes::from_fn(w, |r| pos[r].map(|i| g.flat_index(first + r, i)));

            warp.set_phase(Phase::TableBuild);
            let words = g.words.load(&mut warp, &at)?;
            let mut sum = Lanes::splat(w, F::zero());
            for k in 0..topics {
                let t = g
                    .theta
                    .load(&mut warp, &Lanes::from_fn(w, |r| Some((first + r, k))))?;
                let f = g
                    .phi
                    .load(&mut warp, &Lanes::from_fn(w, |r| Some((words[r], k))))?;
                let prod = warp.alu(OpKind::Mul, &t, &f, |x, y| x * y);
                sum = warp.alu(OpKind::Accumulate, &sum, &prod, |s, x| s + x);
                p.store_uniform(&mut warp, k, &sum)?;
            }

            warp.set_phase(Phase::Search);
            let stop = stops(&mut warp, &mut streams, first, &pos, &sum)?;
            let j = lane_binary_search(&mut warp, &p, &stop)?;

            warp.set_phase(Phase::Writeback);
            g.z.record_store(&mut warp, &at)?;
            for r in 0..w {
                if active[r] {
                    z[r][i] = j[r];
                    draws += 1;
                }
            }
            i += 1;
        }
        warp.activate_all();
        Ok(BlockResult {
            z,
            trace: warp.into_trace(),
            draws,
            lane_draws: draws,
            warp_words: i as u64,
        })
    })
}

/// Runs `kernel` as a warp program. The basic kernel runs the naive lane
/// program, so all three produce comparable traces.
pub fn run_kernel<F: Real, U: UnitSource>(
    kernel: Kernel,
    docs: &[Vec<usize>],
    theta: &Matrix<F>,
    phi: &Matrix<F>,
    units: &U,
    options: &KernelOptions,
) -> Result<KernelRun> {
    match kernel {
        Kernel::Basic => draw_z_basic_warp(docs, theta, phi, units, options),
        Kernel::Transposed => draw_z_transposed(docs, theta, phi, units, options),
        Kernel::Butterfly => draw_z_butterfly(docs, theta, phi, units, options),
    }
}
