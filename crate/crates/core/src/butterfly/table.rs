//! Transposed caching of theta and the two per-word table builds: plain
//! prefix sums through a transposed work array, and the butterfly table.

use crate::warp::{GlobalArray2D, Lanes, LocalArray, OpKind, Phase, Warp};
use crate::{Error, Real, Result};

const INDEX_BYTES: usize = 4;

fn check_block(warp: &Warp, rows: usize, q: usize) -> Result<usize> {
    let w = warp.lanes();
    let first = q * w;
    if first + w > rows {
        return Err(Error::Shape(format!(
            "theta has {rows} rows; warp {q} needs rows {first}..{}",
            first + w
        )));
    }
    Ok(first)
}

fn check_phi<F>(phi: &GlobalArray2D<F>, topics: usize, words: &Lanes<usize>) -> Result<()>
where
    F: Copy + Default,
{
    if phi.cols() != topics {
        return Err(Error::Shape(format!(
            "phi has {} topics, theta has {topics}",
            phi.cols()
        )));
    }
    if let Some((lane, &c)) = words.iter().enumerate().find(|(_, &c)| c >= phi.rows()) {
        return Err(Error::OutOfBounds {
            lane,
            array: phi.name(),
            index: format!("{c}, _"),
        });
    }
    Ok(())
}

/// Loads rows `qW..qW+W` of theta into per-lane local memory.
///
/// The remnant columns are fetched one lane per row. Each `W`-wide block is
/// fetched with transposed access: on step `k` all lanes read row `qW+k`,
/// so the addresses are consecutive, and lane `r` keeps topic `j+r` of
/// document `qW+k` in its slot `j+k`.
pub fn cache_theta_transposed<F: Real>(
    warp: &mut Warp,
    theta: &GlobalArray2D<F>,
    q: usize,
) -> Result<LocalArray<F>> {
    let w = warp.lanes();
    let topics = theta.cols();
    let first = check_block(warp, theta.rows(), q)?;
    let mut local = LocalArray::new(warp, "theta_local", topics, F::BYTES);
    let rem = topics % w;

    warp.set_phase(Phase::ThetaRemnant);
    for j in 0..rem {
        let v = theta.load(warp, &Lanes::from_fn(w, |r| Some((first + r, j))))?;
        local.store_uniform(warp, j, &v)?;
    }

    warp.set_phase(Phase::ThetaBlocks);
    for j in (rem..topics).step_by(w) {
        for k in 0..w {
            let v = theta.load(warp, &Lanes::from_fn(w, |r| Some((first + k, j + r))))?;
            local.store_uniform(warp, j + k, &v)?;
        }
    }
    Ok(local)
}

/// Work arrays for [`compute_partial_sums_transposed`], allocated once per
/// warp and reused for every word.
#[derive(Debug, Clone)]
pub struct TransposedScratch<F> {
    c_warp: LocalArray<usize>,
    a: LocalArray<F>,
    p: LocalArray<F>,
}

impl<F: Real> TransposedScratch<F> {
    pub fn new(warp: &mut Warp, topics: usize) -> Self {
        let w = warp.lanes();
        TransposedScratch {
            c_warp: LocalArray::new(warp, "c_warp", w, INDEX_BYTES),
            a: LocalArray::new(warp, "a", w, F::BYTES),
            p: LocalArray::new(warp, "p", topics, F::BYTES),
        }
    }

    /// Per-lane prefix sums of the last build.
    pub fn prefix(&self) -> &LocalArray<F> {
        &self.p
    }
}

/// Per-lane prefix sums of `theta * phi[c]` for word `words[r]` of each
/// lane's document. Returns each lane's total.
///
/// Words are exchanged through the `c_warp` work array (a transposed, and
/// hence scattered, write), products go through the `a` work array, and
/// reading `a` back in document order is a transposed local read: `W`
/// scattered reads per block.
pub fn compute_partial_sums_transposed<F: Real>(
    warp: &mut Warp,
    theta_local: &LocalArray<F>,
    phi: &GlobalArray2D<F>,
    words: &Lanes<usize>,
    scratch: &mut TransposedScratch<F>,
) -> Result<Lanes<F>> {
    let w = warp.lanes();
    let topics = theta_local.len();
    check_phi(phi, topics, words)?;
    assert_eq!(
        scratch.p.len(),
        topics,
        "scratch built for another topic count"
    );
    warp.set_phase(Phase::TableBuild);

    for k in 0..w {
        scratch
            .c_warp
            .store_at(warp, &Lanes::from_fn(w, |r| Some((k, r))), words)?;
    }

    let mut sum = Lanes::splat(w, F::zero());
    let rem = topics % w;
    for j in 0..rem {
        let t = theta_local.load_uniform(warp, j)?;
        let f = phi.load(warp, &Lanes::from_fn(w, |r| Some((words[r], j))))?;
        let prod = warp.alu(OpKind::Mul, &t, &f, |x, y| x * y);
        sum = warp.alu(OpKind::Accumulate, &sum, &prod, |s, x| s + x);
        scratch.p.store_uniform(warp, j, &sum)?;
    }

    for j in (rem..topics).step_by(w) {
        for k in 0..w {
            let t = theta_local.load_uniform(warp, j + k)?;
            let c = scratch.c_warp.load_uniform(warp, k)?;
            let f = phi.load(warp, &Lanes::from_fn(w, |r| Some((c[r], j + r))))?;
            let prod = warp.alu(OpKind::Mul, &t, &f, |x, y| x * y);
            scratch.a.store_uniform(warp, k, &prod)?;
        }
        for k in 0..w {
            let x = scratch
                .a
                .load_at(warp, &Lanes::from_fn(w, |r| Some((k, r))))?;
            sum = warp.alu(OpKind::Accumulate, &sum, &x, |s, x| s + x);
            scratch.p.store_uniform(warp, j + k, &sum)?;
        }
    }
    Ok(sum)
}

/// Per-lane butterfly-patterned partial sums for one word.
///
/// Slots `0..K mod W` hold ordinary prefix sums. In each following block
/// starting at topic `j`, slot `j + W - 1` of lane `r` holds the prefix sum
/// through the end of the block, and slot `j + d` for `d < W - 1` holds
/// entry `(d, r)` of the block as given by
/// [`entry_zref`](super::entry_zref): a partial sum that may belong to
/// another lane's document.
#[derive(Debug, Clone)]
pub struct ButterflyTable<F> {
    p: LocalArray<F>,
    sums: Lanes<F>,
}

impl<F: Real> ButterflyTable<F> {
    pub fn new(warp: &mut Warp, topics: usize) -> Self {
        ButterflyTable {
            p: LocalArray::new(warp, "p", topics, F::BYTES),
            sums: Lanes::splat(warp.lanes(), F::zero()),
        }
    }

    pub fn topics(&self) -> usize {
        self.p.len()
    }

    pub fn lanes(&self) -> usize {
        self.sums.len()
    }

    pub fn remnant(&self) -> usize {
        self.topics() % self.lanes()
    }

    pub fn blocks(&self) -> usize {
        self.topics() / self.lanes()
    }

    /// Each lane's total over all topics.
    pub fn sums(&self) -> &Lanes<F> {
        &self.sums
    }

    pub fn entries(&self) -> &LocalArray<F> {
        &self.p
    }

    /// Untraced value of slot `index` of lane `lane`.
    pub fn get(&self, lane: usize, index: usize) -> F {
        self.p.get(lane, index)
    }

    /// Rebuilds the table for word `words[r]` of each lane's document.
    ///
    /// Per block this takes `W` loads of theta and phi, `W` products,
    /// `W - 1` exchanges and `W - 1` butterfly additions per lane, and one
    /// running-sum addition; all local accesses use lane-uniform indices.
    pub fn build(
        &mut self,
        warp: &mut Warp,
        theta_local: &LocalArray<F>,
        phi: &GlobalArray2D<F>,
        words: &Lanes<usize>,
    ) -> Result<()> {
        let w = warp.lanes();
        let topics = theta_local.len();
        check_phi(phi, topics, words)?;
        assert_eq!(self.p.len(), topics, "table built for another topic count");
        warp.set_phase(Phase::TableBuild);

        let mut sum = Lanes::splat(w, F::zero());
        let rem = topics % w;
        for j in 0..rem {
            let t = theta_local.load_uniform(warp, j)?;
            let f = phi.load(warp, &Lanes::from_fn(w, |r| Some((words[r], j))))?;
            let prod = warp.alu(OpKind::Mul, &t, &f, |x, y| x * y);
            sum = warp.alu(OpKind::Accumulate, &sum, &prod, |s, x| s + x);
            self.p.store_uniform(warp, j, &sum)?;
        }

        if rem < topics {
            let c_warp = (0..w)
                .map(|k| warp.shuffle_uniform(words, k))
                .collect::<Result<Vec<_>>>()?;
            for j in (rem..topics).step_by(w) {
                let mut a = Vec::with_capacity(w);
                for (k, c) in c_warp.iter().enumerate() {
                    let t = theta_local.load_uniform(warp, j + k)?;
                    let f = phi.load(warp, &Lanes::from_fn(w, |r| Some((c[r], j + r))))?;
                    a.push(warp.alu(OpKind::Mul, &t, &f, |x, y| x * y));
                }
                let mut bit = 1;
                while bit < w {
                    for i in 0..w / (2 * bit) {
                        let d = 2 * bit * i + bit - 1;
                        let high = |r: usize| r & bit != 0;
                        let h =
                            Lanes::from_fn(w, |r| if high(r) { a[d][r] } else { a[d + bit][r] });
                        let v = warp.shuffle_xor(&h, bit)?;
                        a[d] = Lanes::from_fn(w, |r| if high(r) { a[d + bit][r] } else { a[d][r] });
                        a[d + bit] = warp.alu(OpKind::Add, &a[d], &v, |x, y| x + y);
                        self.p.store_uniform(warp, j + d, &a[d])?;
                    }
                    bit *= 2;
                }
                sum = warp.alu(OpKind::Accumulate, &sum, &a[w - 1], |s, x| s + x);
                self.p.store_uniform(warp, j + w - 1, &sum)?;
            }
        }
        self.sums = sum;
        Ok(())
    }
}

/// Allocates a table and builds it for one word per lane.
pub fn build_butterfly_table<F: Real>(
    warp: &mut Warp,
    theta_local: &LocalArray<F>,
    phi: &GlobalArray2D<F>,
    words: &Lanes<usize>,
) -> Result<ButterflyTable<F>> {
    let mut table = ButterflyTable::new(warp, theta_local.len());
    table.build(warp, theta_local, phi, words)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::butterfly::entry_oracle;
    use crate::warp::{AddressSpace, GlobalLayout, MemorySpace, WarpConfig};
    use crate::Matrix;

    struct Setup {
        warp: Warp,
        theta: GlobalArray2D<f64>,
        phi: GlobalArray2D<f64>,
    }

    /// One warp whose products are exactly `products[r][k]` (phi is all ones).
    fn setup(products: &Matrix<f64>) -> Setup {
        let w = products.rows();
        let k = products.cols();
        let warp = Warp::new(WarpConfig::with_lanes(w, 8).unwrap()).with_event_log();
        let mut space = AddressSpace::new(128);
        let theta = GlobalArray2D::row_major("theta", products.clone(), 8, &mut space);
        let phi = GlobalArray2D::row_major("phi", Matrix::filled(1, k, 1.0), 8, &mut space);
        Setup { warp, theta, phi }
    }

    fn products(w: usize, k: usize) -> Matrix<f64> {
        Matrix::from_fn(w, k, |r, t| ((r * 7 + t * 3) % 11 + 1) as f64)
    }

    #[test]
    fn theta_cache_holds_transposed_blocks() {
        let p = products(4, 11);
        let mut s = setup(&p);
        let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
        // remnant: own row
        for r in 0..4 {
            for j in 0..3 {
                assert_eq!(local.get(r, j), p.get(r, j));
            }
        }
        // block at 3: lane r slot 3+k holds theta[k][3+r]
        for r in 0..4 {
            for k in 0..4 {
                assert_eq!(local.get(r, 3 + k), p.get(k, 3 + r));
                assert_eq!(local.get(r, 7 + k), p.get(k, 7 + r));
            }
        }
    }

    #[test]
    fn theta_cache_rejects_short_matrix() {
        let p = products(4, 5);
        let mut s = setup(&p);
        assert!(matches!(
            cache_theta_transposed(&mut s.warp, &s.theta, 1),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn theta_block_fetch_is_one_line_when_aligned() {
        let w = 32;
        let k = 35;
        let data = Matrix::from_fn(w, k, |r, t| (r + t) as f32);
        let mut warp = Warp::new(WarpConfig::with_lanes(w, 4).unwrap()).with_event_log();
        let mut space = AddressSpace::new(128);
        let layout = GlobalLayout::line_aligned(k, k % w, 32);
        let theta = GlobalArray2D::new("theta", data, layout, 4, &mut space);
        cache_theta_transposed(&mut warp, &theta, 0).unwrap();
        let blocks: Vec<_> = warp
            .trace()
            .events()
            .iter()
            .filter(|e| e.phase == Phase::ThetaBlocks && e.space == MemorySpace::Global)
            .collect();
        assert_eq!(blocks.len(), w);
        assert!(blocks.iter().all(|e| e.transactions == 1));
    }

    fn sequential_prefix(p: &Matrix<f64>, r: usize) -> Vec<f64> {
        let mut s = 0.0;
        p.row(r)
            .iter()
            .map(|x| {
                s += x;
                s
            })
            .collect()
    }

    #[test]
    fn transposed_sums_are_per_lane_prefix_sums() {
        for (w, k) in [(4, 11), (8, 19), (8, 8), (4, 3)] {
            let p = products(w, k);
            let mut s = setup(&p);
            let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
            let mut scratch = TransposedScratch::new(&mut s.warp, k);
            let words = Lanes::splat(w, 0);
            let sums =
                compute_partial_sums_transposed(&mut s.warp, &local, &s.phi, &words, &mut scratch)
                    .unwrap();
            for r in 0..w {
                let expect = sequential_prefix(&p, r);
                assert_eq!(scratch.prefix().lane_values(r), expect, "w={w} k={k} r={r}");
                assert_eq!(sums[r], expect[k - 1]);
            }
        }
    }

    #[test]
    fn transposed_build_scatters_w_reads_per_block() {
        let (w, k) = (8, 19);
        let p = products(w, k);
        let mut s = setup(&p);
        let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
        let mut scratch = TransposedScratch::new(&mut s.warp, k);
        let before = s.warp.trace().events().len();
        compute_partial_sums_transposed(
            &mut s.warp,
            &local,
            &s.phi,
            &Lanes::splat(w, 0),
            &mut scratch,
        )
        .unwrap();
        let scattered: Vec<_> = s.warp.trace().events()[before..]
            .iter()
            .filter(|e| e.space == MemorySpace::Local && e.scattered)
            .map(|e| (e.array, e.kind))
            .collect();
        let reads = scattered
            .iter()
            .filter(|(a, kind)| *a == "a" && *kind == crate::warp::AccessKind::Read)
            .count();
        assert_eq!(reads, (k / w) * w);
    }

    #[test]
    fn butterfly_entries_match_closed_form() {
        for (w, k) in [(2, 5), (4, 11), (8, 19), (8, 8), (16, 37), (4, 2)] {
            let p = products(w, k);
            let mut s = setup(&p);
            let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
            let words = Lanes::splat(w, 0);
            let table = build_butterfly_table(&mut s.warp, &local, &s.phi, &words).unwrap();
            let rem = k % w;
            for r in 0..w {
                let prefix = sequential_prefix(&p, r);
                for (j, &want) in prefix.iter().enumerate().take(rem) {
                    assert_eq!(table.get(r, j), want);
                }
                for b in 0..k / w {
                    let start = rem + b * w;
                    let block = Matrix::from_fn(w, w, |t, c| p.get(t, start + c));
                    for d in 0..w - 1 {
                        assert_eq!(table.get(r, start + d), entry_oracle(d, r, w, &block));
                    }
                    assert_eq!(table.get(r, start + w - 1), prefix[start + w - 1]);
                }
                assert_eq!(table.sums()[r], prefix[k - 1]);
            }
        }
    }

    #[test]
    fn butterfly_build_has_no_scattered_local_access_and_counts_ops() {
        use crate::warp::OpKind;
        let (w, k) = (8, 19);
        let p = products(w, k);
        let mut s = setup(&p);
        let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
        let before = s.warp.trace().events().len();
        let words = Lanes::splat(w, 0);
        build_butterfly_table(&mut s.warp, &local, &s.phi, &words).unwrap();
        assert!(s.warp.trace().events()[before..]
            .iter()
            .all(|e| e.space != MemorySpace::Local || !e.scattered));
        let t = s.warp.trace();
        let blocks = (k / w) as u64;
        let w = w as u64;
        assert_eq!(
            t.op_count(Phase::TableBuild, OpKind::ShuffleXor),
            blocks * (w - 1)
        );
        assert_eq!(t.op_count(Phase::TableBuild, OpKind::Add), blocks * (w - 1));
        assert_eq!(t.op_count(Phase::TableBuild, OpKind::Shuffle), w);
    }

    #[test]
    fn phi_shape_is_checked() {
        let p = products(4, 6);
        let mut s = setup(&p);
        let local = cache_theta_transposed(&mut s.warp, &s.theta, 0).unwrap();
        let bad_word = Lanes::from_vec(vec![0, 0, 3, 0]);
        assert!(matches!(
            build_butterfly_table(&mut s.warp, &local, &s.phi, &bad_word),
            Err(Error::OutOfBounds { lane: 2, .. })
        ));
    }
}
