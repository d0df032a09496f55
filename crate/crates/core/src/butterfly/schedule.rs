//! The four-entry replacement, its schedule over a `W x W` block, and the
//! closed form of what each block entry holds once the schedule has run.

use std::fmt;
use std::ops::Add;

use crate::{Error, Matrix, Real, Result};

/// Symbolic block entry: the sum of products of document `doc` over topics
/// `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZRef {
    pub doc: usize,
    pub lo: usize,
    pub hi: usize,
}

impl ZRef {
    pub fn new(doc: usize, lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "empty topic range {lo}..={hi}");
        ZRef { doc, lo, hi }
    }

    pub fn single(doc: usize, topic: usize) -> Self {
        ZRef::new(doc, topic, topic)
    }

    /// Concatenation of two adjacent ranges of the same document.
    pub fn join(self, other: ZRef) -> Option<ZRef> {
        if self.doc != other.doc {
            return None;
        }
        if self.hi + 1 == other.lo {
            Some(ZRef::new(self.doc, self.lo, other.hi))
        } else if other.hi + 1 == self.lo {
            Some(ZRef::new(self.doc, other.lo, self.hi))
        } else {
            None
        }
    }

    /// Direct summation in `f64` of `products[doc][lo..=hi]`.
    pub fn sum<F: Real>(&self, products: &Matrix<F>) -> f64 {
        products.row(self.doc)[self.lo..=self.hi]
            .iter()
            .map(|x| x.as_f64())
            .sum()
    }

    fn offset(self, topic_base: usize) -> ZRef {
        ZRef::new(self.doc, self.lo + topic_base, self.hi + topic_base)
    }
}

impl fmt::Display for ZRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z{}[{}:{}]", self.doc, self.lo, self.hi)
    }
}

/// `R[i,j;k,l]`: the replacement applied at rows `i < j` and columns
/// `k < l` of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Replacement {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R[{},{};{},{}]", self.i, self.j, self.k, self.l)
    }
}

/// `[a b; c d] -> [a d; a+b c+d]`, returned as `(a, d, a+b, c+d)`.
pub fn replace_four<T: Copy + Add<Output = T>>(a: T, b: T, c: T, d: T) -> (T, T, T, T) {
    replace_four_with(a, b, c, d, |x, y| x + y)
}

pub fn replace_four_with<T: Copy>(a: T, b: T, c: T, d: T, add: impl Fn(T, T) -> T) -> (T, T, T, T) {
    (a, d, add(a, b), add(c, d))
}

pub(crate) fn check_width(w: usize) -> Result<()> {
    if w >= 2 && w.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "block width {w} must be a power of 2, at least 2"
        )))
    }
}

/// `log2 W` ordered sets of mutually independent replacements. Set `b`
/// (with `bit = 2^b`) pairs rows `d` and `d + bit` for
/// `d = 2*bit*i + bit - 1`, and columns `k` and `k ^ bit`.
pub fn replacement_schedule(w: usize) -> Result<Vec<Vec<Replacement>>> {
    check_width(w)?;
    let sets = (0..w.trailing_zeros())
        .map(|b| {
            let bit = 1usize << b;
            let mut set = Vec::with_capacity(w / 2);
            for i in 0..w / (2 * bit) {
                let d = 2 * bit * i + (bit - 1);
                for k in (0..w).filter(|k| k & bit == 0) {
                    set.push(Replacement {
                        i: d,
                        j: d + bit,
                        k,
                        l: k | bit,
                    });
                }
            }
            set
        })
        .collect();
    Ok(sets)
}

/// Applies one set of replacements in place.
pub fn apply_set<T: Copy>(m: &mut Matrix<T>, set: &[Replacement], add: impl Fn(T, T) -> T) {
    for r in set {
        let (a, b, c, d) = (
            m.get(r.i, r.k),
            m.get(r.i, r.l),
            m.get(r.j, r.k),
            m.get(r.j, r.l),
        );
        let (na, nb, nc, nd) = replace_four_with(a, b, c, d, &add);
        m.set(r.i, r.k, na);
        m.set(r.i, r.l, nb);
        m.set(r.j, r.k, nc);
        m.set(r.j, r.l, nd);
    }
}

/// The block before any replacement: row `i`, column `j` holds the
/// product of document `i` and topic `j` (the transposed layout).
pub fn initial_block(w: usize) -> Matrix<ZRef> {
    Matrix::from_fn(w, w, ZRef::single)
}

/// Replays the schedule on symbolic entries; one snapshot per set.
pub fn replay_symbolic(w: usize) -> Result<Vec<Matrix<ZRef>>> {
    let mut m = initial_block(w);
    let mut snaps = Vec::new();
    for set in replacement_schedule(w)? {
        apply_set(&mut m, &set, |x, y| {
            x.join(y)
                .unwrap_or_else(|| panic!("schedule joined non-adjacent {x} and {y}"))
        });
        snaps.push(m.clone());
    }
    Ok(snaps)
}

/// Closed form of block entry `(row i, column j)` after the full schedule,
/// with topics numbered from the start of the block.
pub fn entry_zref(i: usize, j: usize, w: usize) -> ZRef {
    debug_assert!(i < w && j < w);
    let m = i ^ (i + 1);
    let k = m / 2;
    let u = (i & !m) + (j & m);
    let v = j & !k;
    ZRef::new(u, v, v + k)
}

/// Value of block entry `(i, j)` by direct summation over
/// `products[thread][topic]`, a `W x W` matrix for one block.
pub fn entry_oracle<F: Real>(i: usize, j: usize, w: usize, products: &Matrix<F>) -> f64 {
    entry_zref(i, j, w).sum(products)
}

/// `entry_zref` shifted to absolute topic numbers for the block that
/// starts at topic `block_start`.
pub fn entry_zref_at(i: usize, j: usize, w: usize, block_start: usize) -> ZRef {
    entry_zref(i, j, w).offset(block_start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replace_four_examples() {
        assert_eq!(replace_four(1, 2, 3, 4), (1, 4, 3, 7));
        assert_eq!(replace_four(0, 0, 0, 0), (0, 0, 0, 0));
        let z = |d, t| ZRef::single(d, t);
        let (a, b, c, d) = replace_four_with(z(0, 0), z(0, 1), z(1, 0), z(1, 1), |x, y| {
            x.join(y).unwrap()
        });
        assert_eq!((a, b), (z(0, 0), z(1, 1)));
        assert_eq!((c, d), (ZRef::new(0, 0, 1), ZRef::new(1, 0, 1)));
    }

    fn rows(set: &[Replacement]) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = set.iter().map(|r| (r.i, r.j)).collect();
        v.dedup();
        v
    }

    #[test]
    fn schedule_for_eight() {
        let s = replacement_schedule(8).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(rows(&s[0]), vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
        assert_eq!(rows(&s[1]), vec![(1, 3), (5, 7)]);
        assert_eq!(rows(&s[2]), vec![(3, 7)]);
        let listed: Vec<String> = s[1].iter().map(|r| r.to_string()).collect();
        assert_eq!(
            listed,
            [
                "R[1,3;0,2]",
                "R[1,3;1,3]",
                "R[1,3;4,6]",
                "R[1,3;5,7]",
                "R[5,7;0,2]",
                "R[5,7;1,3]",
                "R[5,7;4,6]",
                "R[5,7;5,7]"
            ]
        );
        assert_eq!(s[2].last().unwrap().to_string(), "R[3,7;3,7]");
    }

    #[test]
    fn schedule_for_two_is_single_replacement() {
        let s = replacement_schedule(2).unwrap();
        assert_eq!(
            s,
            vec![vec![Replacement {
                i: 0,
                j: 1,
                k: 0,
                l: 1
            }]]
        );
    }

    #[test]
    fn each_column_pair_gets_w_minus_one_replacements() {
        for w in [2usize, 4, 8, 16, 32, 64] {
            let s = replacement_schedule(w).unwrap();
            let per_column: usize = s
                .iter()
                .map(|set| set.iter().filter(|r| r.k == 0).count())
                .sum();
            // W/2 + W/4 + ... + 1 row pairs, each touching column 0 once
            assert_eq!(per_column, w - 1, "w={w}");
            for set in &s {
                for r in set {
                    assert_eq!(r.j - r.i, r.l - r.k);
                    assert!((r.j - r.i).is_power_of_two());
                }
            }
        }
        assert!(replacement_schedule(6).is_err());
        assert!(replacement_schedule(1).is_err());
    }

    #[test]
    fn sets_touch_disjoint_entries() {
        for w in [4usize, 8, 16] {
            for set in replacement_schedule(w).unwrap() {
                let mut seen = std::collections::HashSet::new();
                for r in set {
                    for cell in [(r.i, r.k), (r.i, r.l), (r.j, r.k), (r.j, r.l)] {
                        assert!(seen.insert(cell), "w={w} {cell:?} touched twice");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(entry_zref(3, 5, 8), ZRef::new(5, 4, 7));
        assert_eq!(entry_zref(0, 1, 8), ZRef::new(1, 1, 1));
        for j in 0..8 {
            assert_eq!(entry_zref(7, j, 8), ZRef::new(j, 0, 7));
        }
    }

    #[test]
    fn replay_matches_closed_form() {
        for w in [2usize, 4, 8, 16, 32, 64] {
            let last = replay_symbolic(w).unwrap().pop().unwrap();
            for i in 0..w {
                for j in 0..w {
                    assert_eq!(last.get(i, j), entry_zref(i, j, w), "w={w} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn entry_oracle_sums_the_range() {
        let p = Matrix::from_fn(8, 8, |t, k| (t * 8 + k) as f64);
        // thread 5, topics 4..=7
        assert_eq!(entry_oracle(3, 5, 8, &p), (44 + 45 + 46 + 47) as f64);
        assert_eq!(entry_zref_at(3, 5, 8, 3), ZRef::new(5, 7, 10));
    }

    const FIGURE: [[&str; 8]; 3] = [
        [
            "0:0-0 1:1-1 0:2-2 1:3-3 0:4-4 1:5-5 0:6-6 1:7-7",
            "0:0-1 1:0-1 0:2-3 1:2-3 0:4-5 1:4-5 0:6-7 1:6-7",
            "2:0-0 3:1-1 2:2-2 3:3-3 2:4-4 3:5-5 2:6-6 3:7-7",
            "2:0-1 3:0-1 2:2-3 3:2-3 2:4-5 3:4-5 2:6-7 3:6-7",
            "4:0-0 5:1-1 4:2-2 5:3-3 4:4-4 5:5-5 4:6-6 5:7-7",
            "4:0-1 5:0-1 4:2-3 5:2-3 4:4-5 5:4-5 4:6-7 5:6-7",
            "6:0-0 7:1-1 6:2-2 7:3-3 6:4-4 7:5-5 6:6-6 7:7-7",
            "6:0-1 7:0-1 6:2-3 7:2-3 6:4-5 7:4-5 6:6-7 7:6-7",
        ],
        [
            "0:0-0 1:1-1 0:2-2 1:3-3 0:4-4 1:5-5 0:6-6 1:7-7",
            "0:0-1 1:0-1 2:2-3 3:2-3 0:4-5 1:4-5 2:6-7 3:6-7",
            "2:0-0 3:1-1 2:2-2 3:3-3 2:4-4 3:5-5 2:6-6 3:7-7",
            "0:0-3 1:0-3 2:0-3 3:0-3 0:4-7 1:4-7 2:4-7 3:4-7",
            "4:0-0 5:1-1 4:2-2 5:3-3 4:4-4 5:5-5 4:6-6 5:7-7",
            "4:0-1 5:0-1 6:2-3 7:2-3 4:4-5 5:4-5 6:6-7 7:6-7",
            "6:0-0 7:1-1 6:2-2 7:3-3 6:4-4 7:5-5 6:6-6 7:7-7",
            "4:0-3 5:0-3 6:0-3 7:0-3 4:4-7 5:4-7 6:4-7 7:4-7",
        ],
        [
            "0:0-0 1:1-1 0:2-2 1:3-3 0:4-4 1:5-5 0:6-6 1:7-7",
            "0:0-1 1:0-1 2:2-3 3:2-3 0:4-5 1:4-5 2:6-7 3:6-7",
            "2:0-0 3:1-1 2:2-2 3:3-3 2:4-4 3:5-5 2:6-6 3:7-7",
            "0:0-3 1:0-3 2:0-3 3:0-3 4:4-7 5:4-7 6:4-7 7:4-7",
            "4:0-0 5:1-1 4:2-2 5:3-3 4:4-4 5:5-5 4:6-6 5:7-7",
            "4:0-1 5:0-1 6:2-3 7:2-3 4:4-5 5:4-5 6:6-7 7:6-7",
            "6:0-0 7:1-1 6:2-2 7:3-3 6:4-4 7:5-5 6:6-6 7:7-7",
            "0:0-7 1:0-7 2:0-7 3:0-7 4:0-7 5:0-7 6:0-7 7:0-7",
        ],
    ];

    fn render(m: &Matrix<ZRef>, row: usize) -> String {
        (0..m.cols())
            .map(|j| {
                let z = m.get(row, j);
                format!("{}:{}-{}", z.doc, z.lo, z.hi)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn replay_reproduces_each_snapshot_for_eight() {
        let snaps = replay_symbolic(8).unwrap();
        for (s, expected) in snaps.iter().zip(FIGURE.iter()) {
            for (row, line) in expected.iter().enumerate() {
                assert_eq!(render(s, row), *line, "row {row}");
            }
        }
    }
}
