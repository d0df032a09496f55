//! Drawing many samples from one distribution with each method.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;

use crate::butterfly::ButterflySampler;
use crate::dist::{AliasTable, PrefixTable, RandomSource, SeededRng, WeightVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMethod {
    Linear,
    Binary,
    Alias,
    Butterfly,
}

impl SamplerMethod {
    pub const ALL: [SamplerMethod; 4] = [
        SamplerMethod::Linear,
        SamplerMethod::Binary,
        SamplerMethod::Alias,
        SamplerMethod::Butterfly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerMethod::Linear => "linear",
            SamplerMethod::Binary => "binary",
            SamplerMethod::Alias => "alias",
            SamplerMethod::Butterfly => "butterfly",
        }
    }
}

impl fmt::Display for SamplerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected linear, binary, alias or butterfly)"
                ))
            })
    }
}

/// `n` draws from `weights`, seeded. The butterfly sampler uses a warp of
/// `lanes` lanes.
pub fn draw_samples(
    method: SamplerMethod,
    weights: &WeightVector,
    n: usize,
    seed: u64,
    lanes: usize,
) -> Result<Vec<usize>> {
    let mut rng = SeededRng::seed_from_u64(seed);
    match method {
        SamplerMethod::Linear | SamplerMethod::Binary => {
            let table = PrefixTable::<f64>::build(weights)?;
            (0..n)
                .map(|_| {
                    let stop = table.total() * rng.next_unit();
                    Ok(if method == SamplerMethod::Linear {
                        table.linear_search(stop)
                    } else {
                        table.binary_search(stop)
                    })
                })
                .collect()
        }
        SamplerMethod::Alias => {
            let table = AliasTable::build(weights)?;
            Ok((0..n).map(|_| table.draw(&mut rng)).collect())
        }
        SamplerMethod::Butterfly => {
            ButterflySampler::<f64>::new(weights, lanes)?.sample(n, &mut rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methods_parse_and_print() {
        for m in SamplerMethod::ALL {
            assert_eq!(m.to_string().parse::<SamplerMethod>().unwrap(), m);
        }
        assert!("vose".parse::<SamplerMethod>().is_err());
    }

    #[test]
    fn every_method_respects_zero_weights() {
        let w = WeightVector::new(vec![0.0, 2.0, 0.0, 1.0]).unwrap();
        for m in SamplerMethod::ALL {
            let d = draw_samples(m, &w, 2_000, 1, 8).unwrap();
            assert_eq!(d.len(), 2_000);
            assert!(d.iter().all(|&j| j == 1 || j == 3), "{m}");
        }
        let zero = WeightVector::new(vec![0.0; 3]).unwrap();
        for m in SamplerMethod::ALL {
            assert!(
                matches!(draw_samples(m, &zero, 1, 1, 8), Err(Error::AllZero)),
                "{m}"
            );
        }
    }
}
