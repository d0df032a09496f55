//! Self-checks of the butterfly construction against independent oracles:
//! the closed-form entry formula, the replacement schedule, the search
//! against brute force, and the block-final rows against plain prefix sums.

use std::fmt;

use num_rational::Ratio;
use rand::SeedableRng;

use super::{
    build_butterfly_table, butterfly_search, cache_theta_transposed, entry_oracle, entry_zref,
    replacement_schedule, replay_symbolic, ButterflyTable,
};
use crate::dist::{oracle_index, oracle_index_exact, RandomSource, SeededRng, WeightVector};
use crate::warp::{AddressSpace, GlobalArray2D, Lanes, Warp, WarpConfig};
use crate::{Error, Matrix, Real, Result};

/// Result of one check suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: u64,
    pub mismatches: u64,
    /// Mismatches explained by a stop within a few ulps of a boundary.
    pub ties: u64,
    pub max_rel_err: f64,
    pub passed: bool,
}

impl CheckOutcome {
    pub const CSV_HEADER: &'static str = "check,passed,cases,mismatches,ties,max_rel_err";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e}",
            self.name, self.passed, self.cases, self.mismatches, self.ties, self.max_rel_err
        )
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} cases={} mismatches={} ties={} max_rel_err={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.mismatches,
            self.ties,
            self.max_rel_err
        )
    }
}

/// How product values and stops are drawn for the search check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchRegime {
    /// Uniform real products and stops `total * u`.
    Real,
    /// Small integer products and stops at the midpoint of a non-empty
    /// topic, so every comparison is exact.
    ExactMidpoint,
}

/// One warp's butterfly table together with the products it was built from.
pub struct ProductCase<F: Real> {
    pub warp: Warp,
    pub table: ButterflyTable<F>,
    /// `products[r][t] = theta[r][t] * phi[c_r][t]`, computed in `F`.
    pub products: Matrix<F>,
}

const VOCAB: usize = 4;

impl<F: Real> ProductCase<F> {
    /// Random theta and phi and one random word per lane. With `integers`
    /// the factors are small integers and every lane has a non-zero product.
    pub fn random<R: RandomSource>(
        w: usize,
        k: usize,
        rng: &mut R,
        integers: bool,
    ) -> Result<Self> {
        let config = WarpConfig::with_lanes(w, F::BYTES)?;
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        let mut draw = |n: usize| {
            if integers {
                F::of(rng.next_index(n) as f64)
            } else {
                F::of(1.0 - rng.next_unit())
            }
        };
        let mut theta = Matrix::from_fn(w, k, |_, _| draw(16));
        let mut phi = Matrix::from_fn(VOCAB, k, |_, _| draw(4));
        let words = Lanes::from_fn(w, |_| rng.next_index(VOCAB));
        for r in 0..w {
            let c = words[r];
            if (0..k).all(|t| theta.get(r, t) * phi.get(c, t) == F::zero()) {
                // raising a factor to one never zeroes another lane's product
                let t = rng.next_index(k);
                theta.set(r, t, F::one());
                phi.set(c, t, F::one());
            }
        }
        let products = Matrix::from_fn(w, k, |r, t| theta.get(r, t) * phi.get(words[r], t));

        let mut warp = Warp::new(config);
        let mut space = AddressSpace::new(config.line_size());
        let theta = GlobalArray2D::row_major("theta", theta, F::BYTES, &mut space);
        let phi = GlobalArray2D::row_major("phi", phi, F::BYTES, &mut space);
        let local = cache_theta_transposed(&mut warp, &theta, 0)?;
        let table = build_butterfly_table(&mut warp, &local, &phi, &words)?;
        Ok(ProductCase {
            warp,
            table,
            products,
        })
    }

    fn row_f64(&self, r: usize) -> Vec<f64> {
        self.products.row(r).iter().map(|x| x.as_f64()).collect()
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// Every butterfly entry against direct summation of its closed-form
/// range, and every remnant slot against the sequential prefix sum in `F`.
pub fn check_closure<F: Real>(
    w: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let tol = F::PRECISION.sum_tolerance();
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut out = outcome("closure");
    for _ in 0..trials {
        let case = ProductCase::<F>::random(w, k, &mut rng, false)?;
        let rem = k % w;
        for r in 0..w {
            let mut sum = F::zero();
            for j in 0..rem {
                sum += case.products.get(r, j);
                out.cases += 1;
                if case.table.get(r, j) != sum {
                    out.mismatches += 1;
                }
            }
            for b in 0..k / w {
                let start = rem + b * w;
                let block = Matrix::from_fn(w, w, |t, c| case.products.get(t, start + c));
                for d in 0..w - 1 {
                    let e = rel_err(
                        case.table.get(r, start + d).as_f64(),
                        entry_oracle(d, r, w, &block),
                    );
                    out.cases += 1;
                    out.max_rel_err = out.max_rel_err.max(e);
                    if e > tol {
                        out.mismatches += 1;
                    }
                }
            }
        }
    }
    out.passed = out.mismatches == 0;
    Ok(out)
}

/// The block-final slot of every block, and the lane total, against the
/// plain prefix sum by direct summation.
pub fn check_bottom_row<F: Real>(
    w: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let tol = F::PRECISION.sum_tolerance();
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut out = outcome("bottom_row");
    for _ in 0..trials {
        let case = ProductCase::<F>::random(w, k, &mut rng, false)?;
        let rem = k % w;
        for r in 0..w {
            let row = case.row_f64(r);
            let prefix = |j: usize| row[..=j].iter().sum::<f64>();
            for b in 0..k / w {
                let last = rem + b * w + w - 1;
                let e = rel_err(case.table.get(r, last).as_f64(), prefix(last));
                out.cases += 1;
                out.max_rel_err = out.max_rel_err.max(e);
                if e > tol {
                    out.mismatches += 1;
                }
            }
            let e = rel_err(case.table.sums()[r].as_f64(), prefix(k - 1));
            out.cases += 1;
            out.max_rel_err = out.max_rel_err.max(e);
            if e > tol {
                out.mismatches += 1;
            }
        }
    }
    out.passed = out.mismatches == 0;
    Ok(out)
}

/// Symbolic replay of the schedule against the closed form, plus
/// independence of the replacements within each set.
pub fn check_schedule(w: usize) -> Result<CheckOutcome> {
    let mut out = outcome("schedule");
    let sets = replacement_schedule(w)?;
    for set in &sets {
        let mut seen = std::collections::HashSet::new();
        for r in set {
            for cell in [(r.i, r.k), (r.i, r.l), (r.j, r.k), (r.j, r.l)] {
                out.cases += 1;
                if !seen.insert(cell) {
                    out.mismatches += 1;
                }
            }
        }
    }
    let last = replay_symbolic(w)?.pop().expect("at least one set");
    for i in 0..w {
        for j in 0..w {
            out.cases += 1;
            if last.get(i, j) != entry_zref(i, j, w) {
                out.mismatches += 1;
            }
        }
    }
    out.passed = out.mismatches == 0;
    Ok(out)
}

/// `butterfly_search` against the brute-force oracle over `instances`
/// draws (rounded up to whole warps). With real products at least 99.9%
/// must agree and every disagreement must be a boundary tie; with exact
/// midpoints all must agree.
pub fn check_search<F: Real>(
    w: usize,
    k: usize,
    instances: usize,
    seed: u64,
    regime: SearchRegime,
) -> Result<CheckOutcome> {
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut out = outcome(match regime {
        SearchRegime::Real => "search",
        SearchRegime::ExactMidpoint => "search_exact",
    });
    let mut untied = 0;
    for _ in 0..instances.div_ceil(w) {
        let exact = regime == SearchRegime::ExactMidpoint;
        let mut case = ProductCase::<F>::random(w, k, &mut rng, exact)?;
        let rows: Vec<Vec<f64>> = (0..w).map(|r| case.row_f64(r)).collect();
        let mut targets = vec![Ratio::from_integer(0i128); w];
        let stop = Lanes::from_fn(w, |r| match regime {
            SearchRegime::Real => case.table.sums()[r] * F::unit(rng.next_unit()),
            SearchRegime::ExactMidpoint => {
                let nonzero: Vec<usize> = (0..k).filter(|&t| rows[r][t] > 0.0).collect();
                let t = nonzero[rng.next_index(nonzero.len())];
                let before: f64 = rows[r][..t].iter().sum();
                targets[r] = Ratio::new(2 * before as i128 + rows[r][t] as i128, 2);
                F::of(before + rows[r][t] / 2.0)
            }
        });
        let got = butterfly_search(&mut case.warp, &case.table, &stop)?;
        for r in 0..w {
            let want = match regime {
                SearchRegime::Real => {
                    oracle_index(&WeightVector::new(rows[r].clone())?, stop[r].as_f64())?
                }
                SearchRegime::ExactMidpoint => {
                    let ints: Vec<u64> = rows[r].iter().map(|&x| x as u64).collect();
                    oracle_index_exact(&ints, targets[r])?
                }
            };
            out.cases += 1;
            if got[r] != want {
                out.mismatches += 1;
                let boundary: f64 = rows[r][..=got[r].min(want)].iter().sum();
                let total: f64 = rows[r].iter().sum();
                let ulp = total * F::epsilon().as_f64();
                if regime == SearchRegime::Real && (stop[r].as_f64() - boundary).abs() <= 4.0 * ulp
                {
                    out.ties += 1;
                } else {
                    untied += 1;
                }
            }
        }
    }
    out.passed = match regime {
        SearchRegime::Real => untied == 0 && out.mismatches * 1000 <= out.cases,
        SearchRegime::ExactMidpoint => out.mismatches == 0,
    };
    Ok(out)
}

fn outcome(name: &'static str) -> CheckOutcome {
    CheckOutcome {
        name,
        cases: 0,
        mismatches: 0,
        ties: 0,
        max_rel_err: 0.0,
        passed: false,
    }
}

/// All suites for one `(W, K, seed)`.
pub fn verify_all<F: Real>(w: usize, k: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_closure::<F>(w, k, 100, seed)?,
        check_schedule(w)?,
        check_search::<F>(w, k, 10_000, seed ^ 1, SearchRegime::Real)?,
        check_search::<F>(w, k, 10_000, seed ^ 2, SearchRegime::ExactMidpoint)?,
        check_bottom_row::<F>(w, k, 100, seed ^ 3)?,
    ])
}

/// Where each slot of a lane's `p` array comes from, for `W` lanes and
/// `K` topics.
pub fn table_layout(w: usize, k: usize) -> String {
    let rem = k % w;
    let mut s = format!("K={k} W={w}: remnant of {rem}, {} block(s) of {w}\n", k / w);
    if rem > 0 {
        s += &format!("  p[0..{rem}]  prefix sums of topics 0..{}\n", rem - 1);
    }
    for b in 0..k / w {
        let start = rem + b * w;
        let end = start + w - 1;
        s += &format!("  p[{start}..{end}]  butterfly entries, row d of lane r = entry (d, r)\n");
        s += &format!("  p[{end}]  prefix sum through topic {end}\n");
    }
    s
}
