//! Searching a butterfly table: a binary search over the block-final
//! slots picks a block, a tree walk inside the block reconstructs each
//! midpoint prefix sum from table entries held by other lanes, and a
//! linear scan covers the remnant.

use super::ButterflyTable;
use crate::warp::{Lanes, LocalArray, OpKind, Phase, Warp};
use crate::{Error, Real, Result};

/// One lane's state inside the block walk. While the indices `lo..=hi` of
/// the block are still candidates, `low_value` is the prefix sum just
/// before `block_base + lo` and `high_value` the prefix sum through
/// `block_base + hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchState<F> {
    pub block_base: usize,
    pub low_value: F,
    pub high_value: F,
    pub flip: usize,
}

impl<F> SearchState<F> {
    /// Block-relative candidate range after the step that halved it to
    /// `bit` entries.
    pub fn candidates(&self, lane: usize, bit: usize) -> (usize, usize) {
        let lo = (self.flip ^ lane) & !(bit - 1);
        (lo, lo + bit - 1)
    }
}

pub(crate) fn check_stops<F: Real>(stop: &Lanes<F>, sums: &Lanes<F>) -> Result<()> {
    for (lane, (&s, &total)) in stop.iter().zip(sums).enumerate() {
        if !(s >= F::zero() && s <= total) {
            return Err(Error::StopOutOfRange {
                lane,
                stop: s.as_f64(),
                total: total.as_f64(),
            });
        }
    }
    Ok(())
}

/// Per-lane index `j` with `p[j-1] <= stop < p[j]` (clamped to the last
/// topic), where `p` is the lane's own prefix-sum row.
pub fn butterfly_search<F: Real>(
    warp: &mut Warp,
    table: &ButterflyTable<F>,
    stop: &Lanes<F>,
) -> Result<Lanes<usize>> {
    butterfly_search_observed(warp, table, stop, |_, _| {})
}

/// [`butterfly_search`] that reports every lane's state after each step
/// of the block walk, together with the step's `bit`.
pub fn butterfly_search_observed<F: Real>(
    warp: &mut Warp,
    table: &ButterflyTable<F>,
    stop: &Lanes<F>,
    mut observe: impl FnMut(usize, &Lanes<SearchState<F>>),
) -> Result<Lanes<usize>> {
    let w = warp.lanes();
    let topics = table.topics();
    let rem = table.remnant();
    let blocks = table.blocks();
    let p = table.entries();
    check_stops(stop, table.sums())?;
    warp.set_phase(Phase::Search);

    // binary search over the last slot of each block
    let search_base = rem + w - 1;
    let mut lo = Lanes::splat(w, 0usize);
    let mut hi = Lanes::splat(w, blocks.saturating_sub(1));
    loop {
        let open = Lanes::from_fn(w, |r| lo[r] < hi[r]);
        if !warp.any(&open) {
            break;
        }
        let mid = Lanes::from_fn(w, |r| (lo[r] + hi[r]) / 2);
        let idx = Lanes::from_fn(w, |r| open[r].then(|| mid[r] * w + search_base));
        let v = p.load(warp, &idx)?;
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
    let block_base = Lanes::from_fn(w, |r| rem + lo[r] * w);

    let mut j = if blocks > 0 {
        walk_block(warp, p, stop, &block_base, &mut observe)?
    } else {
        Lanes::splat(w, topics - 1)
    };

    // the block search lands on the first block when stop lies in the remnant
    if rem > 0 {
        let before = p.load(warp, &Lanes::from_fn(w, |r| Some(block_base[r] - 1)))?;
        let mut open = Lanes::from_fn(w, |r| stop[r] < before[r]);
        if warp.any(&open) {
            for i in 0..rem {
                let v = p.load(warp, &Lanes::from_fn(w, |r| open[r].then_some(i)))?;
                for r in 0..w {
                    if open[r] && stop[r] < v[r] {
                        j[r] = i;
                        open[r] = false;
                    }
                }
                if !warp.any(&open) {
                    break;
                }
            }
        }
    }
    Ok(j)
}

fn walk_block<F: Real>(
    warp: &mut Warp,
    p: &LocalArray<F>,
    stop: &Lanes<F>,
    block_base: &Lanes<usize>,
    observe: &mut impl FnMut(usize, &Lanes<SearchState<F>>),
) -> Result<Lanes<usize>> {
    let w = warp.lanes();
    let low_idx = Lanes::from_fn(w, |r| block_base[r].checked_sub(1));
    let low = p.load(warp, &low_idx)?;
    let high = p.load(warp, &Lanes::from_fn(w, |r| Some(block_base[r] + w - 1)))?;
    let mut state = Lanes::from_fn(w, |r| SearchState {
        block_base: block_base[r],
        low_value: if low_idx[r].is_some() {
            low[r]
        } else {
            F::zero()
        },
        high_value: high[r],
        flip: 0,
    });

    let mut bit = w / 2;
    while bit >= 1 {
        let mask = ((w - 1) * (2 * bit)) & (w - 1);
        let flip = state.map(|s| s.flip);
        let mut y = Lanes::splat(w, F::zero());
        for i in 0..w / (2 * bit) {
            let d = bit - 1 + 2 * bit * i;
            let him = Lanes::from_fn(w, |r| (d & mask) + (r & !mask));
            let his_base = warp.shuffle(block_base, &him)?;
            let own = p.load(warp, &Lanes::from_fn(w, |r| Some(his_base[r] + d)))?;
            let t = warp.shuffle_xor_lanes(&own, &flip)?;
            for r in 0..w {
                if (r ^ d) & mask == 0 {
                    y[r] = t[r];
                }
            }
        }
        // lanes with `bit` set subtract from the high end, others add to the low end
        let bound = Lanes::from_fn(w, |r| {
            let s = state[r];
            if r & bit != 0 {
                (s.high_value, true)
            } else {
                (s.low_value, false)
            }
        });
        let cmp = warp.alu(OpKind::Add, &bound, &y, |(b, from_high), y| {
            if from_high {
                b - y
            } else {
                b + y
            }
        });
        for r in 0..w {
            let s = &mut state[r];
            if stop[r] < cmp[r] {
                s.high_value = cmp[r];
                s.flip ^= bit & r;
            } else {
                s.low_value = cmp[r];
                s.flip ^= bit & !r;
            }
        }
        observe(bit, &state);
        bit /= 2;
    }
    Ok(Lanes::from_fn(w, |r| block_base[r] + (state[r].flip ^ r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::butterfly::{build_butterfly_table, cache_theta_transposed};
    use crate::dist::{oracle_index, RandomSource, SeededRng, WeightVector};
    use crate::warp::{AddressSpace, GlobalArray2D, WarpConfig};
    use crate::Matrix;
    use rand::SeedableRng;

    fn table_for(weights: &Matrix<f64>) -> (Warp, ButterflyTable<f64>) {
        let w = weights.rows();
        let k = weights.cols();
        let mut warp = Warp::new(WarpConfig::with_lanes(w, 8).unwrap());
        let mut space = AddressSpace::new(128);
        let theta = GlobalArray2D::row_major("theta", weights.clone(), 8, &mut space);
        let phi = GlobalArray2D::row_major("phi", Matrix::filled(1, k, 1.0), 8, &mut space);
        let local = cache_theta_transposed(&mut warp, &theta, 0).unwrap();
        let table = build_butterfly_table(&mut warp, &local, &phi, &Lanes::splat(w, 0)).unwrap();
        (warp, table)
    }

    fn prefix(row: &[f64]) -> Vec<f64> {
        row.iter()
            .scan(0.0, |s, x| {
                *s += x;
                Some(*s)
            })
            .collect()
    }

    #[test]
    fn integer_midpoints_match_oracle_for_every_topic() {
        let mut rng = SeededRng::seed_from_u64(7);
        for (w, k) in [
            (2, 1),
            (2, 2),
            (4, 3),
            (4, 4),
            (8, 19),
            (8, 8),
            (8, 24),
            (16, 21),
            (32, 70),
        ] {
            for _ in 0..20 {
                let m = Matrix::from_fn(w, k, |_, _| (rng.next_index(5)) as f64);
                let m = Matrix::from_fn(w, k, |r, t| {
                    if t == r % k {
                        m.get(r, t) + 1.0
                    } else {
                        m.get(r, t)
                    }
                });
                let (mut warp, table) = table_for(&m);
                // one stop per lane at the midpoint of a random non-empty topic
                let stop = Lanes::from_fn(w, |r| {
                    let p = prefix(m.row(r));
                    let nonzero: Vec<usize> = (0..k).filter(|&t| m.get(r, t) > 0.0).collect();
                    let t = nonzero[rng.next_index(nonzero.len())];
                    let before = if t == 0 { 0.0 } else { p[t - 1] };
                    before + m.get(r, t) / 2.0
                });
                let got = butterfly_search(&mut warp, &table, &stop).unwrap();
                for r in 0..w {
                    let wv = WeightVector::new(m.row(r).to_vec()).unwrap();
                    assert_eq!(
                        got[r],
                        oracle_index(&wv, stop[r]).unwrap(),
                        "w={w} k={k} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_stops_go_to_the_next_topic() {
        let (w, k) = (8, 19);
        let m = Matrix::from_fn(w, k, |r, t| ((r + t) % 3 + 1) as f64);
        for t in 0..k {
            let (mut warp, table) = table_for(&m);
            let stop = Lanes::from_fn(w, |r| prefix(m.row(r))[t]);
            let stop = stop.map(|&s| s.min(table.sums()[0].max(s)));
            if (0..w).any(|r| stop[r] >= table.sums()[r]) {
                continue;
            }
            let got = butterfly_search(&mut warp, &table, &stop).unwrap();
            for r in 0..w {
                assert_eq!(got[r], t + 1);
            }
        }
    }

    #[test]
    fn stop_equal_to_total_clamps_to_last_topic() {
        for (w, k) in [(8, 19), (8, 5), (4, 8)] {
            let m = Matrix::from_fn(w, k, |r, t| (r + t + 1) as f64);
            let (mut warp, table) = table_for(&m);
            let stop = table.sums().clone();
            let got = butterfly_search(&mut warp, &table, &stop).unwrap();
            assert!(got.iter().all(|&j| j == k - 1), "w={w} k={k} {got:?}");
        }
    }

    #[test]
    fn invariant_holds_after_each_step() {
        let (w, k) = (8, 19);
        let mut rng = SeededRng::seed_from_u64(3);
        for _ in 0..50 {
            let m = Matrix::from_fn(w, k, |_, _| (rng.next_index(9) + 1) as f64);
            let (mut warp, table) = table_for(&m);
            let stop = Lanes::from_fn(w, |r| prefix(m.row(r))[k - 1] * rng.next_unit());
            let mut steps = 0;
            butterfly_search_observed(&mut warp, &table, &stop, |bit, states| {
                steps += 1;
                for r in 0..w {
                    let s = states[r];
                    let p = prefix(m.row(r));
                    let (lo, hi) = s.candidates(r, bit);
                    let before = s.block_base + lo;
                    let low = if before == 0 { 0.0 } else { p[before - 1] };
                    assert_eq!(s.low_value, low);
                    assert_eq!(s.high_value, p[s.block_base + hi]);
                }
            })
            .unwrap();
            assert_eq!(steps, 3);
        }
    }

    #[test]
    fn walk_for_thread_five_at_width_eight() {
        // K=11, W=8: remnant of 3, one block; thread 5 starts with
        // low = Z5[0:2] and high = Z5[0:10]
        let m = Matrix::from_fn(8, 11, |r, t| (r * 11 + t + 1) as f64);
        let (mut warp, table) = table_for(&m);
        let p5 = prefix(m.row(5));
        let stop = Lanes::from_fn(8, |r| if r == 5 { p5[6] - 0.5 } else { 0.0 });
        let mut first = None;
        butterfly_search_observed(&mut warp, &table, &stop, |bit, s| {
            if bit == 4 {
                first = Some(s[5]);
            }
        })
        .unwrap();
        // lane 5 has bit 4 set, so the first midpoint is high - Z5[7:10]
        let s = first.unwrap();
        assert_eq!(s.high_value, p5[6]);
    }

    #[test]
    fn out_of_range_stop_is_rejected() {
        let m = Matrix::from_fn(4, 6, |_, _| 1.0);
        let (mut warp, table) = table_for(&m);
        let mut stop = Lanes::splat(4, 1.0);
        stop[2] = 7.0;
        assert!(matches!(
            butterfly_search(&mut warp, &table, &stop),
            Err(Error::StopOutOfRange { lane: 2, .. })
        ));
        stop[2] = f64::NAN;
        assert!(butterfly_search(&mut warp, &table, &stop).is_err());
    }
}
