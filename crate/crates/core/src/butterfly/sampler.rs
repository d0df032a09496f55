//! Repeated draws from one distribution through the butterfly table, one
//! draw per lane per warp step.

use super::{build_butterfly_table, butterfly_search, cache_theta_transposed, ButterflyTable};
use crate::dist::{RandomSource, WeightVector};
use crate::warp::{AddressSpace, GlobalArray2D, Lanes, Warp, WarpConfig};
use crate::{Error, Matrix, Real, Result};

/// Every lane holds the same weights as its theta row (phi is all ones),
/// so each warp step yields `W` independent draws.
#[derive(Debug)]
pub struct ButterflySampler<F: Real = f64> {
    warp: Warp,
    table: ButterflyTable<F>,
}

impl<F: Real> ButterflySampler<F> {
    pub fn new(weights: &WeightVector, lanes: usize) -> Result<Self> {
        if weights.is_all_zero() {
            return Err(Error::AllZero);
        }
        let config = WarpConfig::with_lanes(lanes, F::BYTES)?;
        let mut warp = Warp::new(config);
        let k = weights.len();
        let w = weights.as_slice();
        let mut space = AddressSpace::new(config.line_size());
        let theta = Matrix::from_fn(lanes, k, |_, t| F::of(w[t]));
        let theta = GlobalArray2D::row_major("theta", theta, F::BYTES, &mut space);
        let phi =
            GlobalArray2D::row_major("phi", Matrix::filled(1, k, F::one()), F::BYTES, &mut space);
        let local = cache_theta_transposed(&mut warp, &theta, 0)?;
        let table = build_butterfly_table(&mut warp, &local, &phi, &Lanes::splat(lanes, 0))?;
        Ok(ButterflySampler { warp, table })
    }

    pub fn lanes(&self) -> usize {
        self.warp.lanes()
    }

    /// One draw per lane; lane `r` uses the `r`-th uniform taken from `rng`.
    pub fn draw_batch<R: RandomSource + ?Sized>(&mut self, rng: &mut R) -> Result<Lanes<usize>> {
        let sums = self.table.sums();
        let stop = Lanes::from_fn(self.lanes(), |r| sums[r] * F::unit(rng.next_unit()));
        butterfly_search(&mut self.warp, &self.table, &stop)
    }

    pub fn sample<R: RandomSource + ?Sized>(
        &mut self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let batch = self.draw_batch(rng)?;
            let take = (n - out.len()).min(batch.len());
            out.extend_from_slice(&batch.as_slice()[..take]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SeededRng;
    use rand::SeedableRng;

    #[test]
    fn draws_follow_the_weights() {
        let w = WeightVector::new(vec![1.0, 0.0, 3.0, 0.0, 4.0]).unwrap();
        let mut s = ButterflySampler::<f64>::new(&w, 4).unwrap();
        let mut rng = SeededRng::seed_from_u64(1);
        let draws = s.sample(80_000, &mut rng).unwrap();
        assert_eq!(draws.len(), 80_000);
        let mut counts = [0usize; 5];
        for d in draws {
            counts[d] += 1;
        }
        assert_eq!(counts[1] + counts[3], 0);
        let f = |c: usize| c as f64 / 80_000.0;
        assert!((f(counts[0]) - 0.125).abs() < 0.01);
        assert!((f(counts[2]) - 0.375).abs() < 0.01);
        assert!((f(counts[4]) - 0.5).abs() < 0.01);
    }

    #[test]
    fn zero_draws_and_zero_weights() {
        let w = WeightVector::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            ButterflySampler::<f32>::new(&w, 2),
            Err(Error::AllZero)
        ));
        let w = WeightVector::new(vec![2.0]).unwrap();
        let mut s = ButterflySampler::<f32>::new(&w, 8).unwrap();
        let mut rng = SeededRng::seed_from_u64(1);
        assert!(s.sample(0, &mut rng).unwrap().is_empty());
        assert_eq!(s.sample(3, &mut rng).unwrap(), vec![0, 0, 0]);
    }
}
