use std::fmt::{Debug, Display};
use std::ops::{AddAssign, SubAssign};
use std::str::FromStr;

use num_traits::Float;

/// Floating-point element type the kernels compute in.
///
/// `BYTES` is what the memory model charges per element.
pub trait Real:
    Float + AddAssign + SubAssign + Debug + Display + Default + FromStr + Send + Sync + 'static
{
    const BYTES: usize;
    const PRECISION: Precision;

    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// A uniform from `[0, 1)` in this precision. Rounding to nearest could
    /// turn values just below one into one, so those are pulled back to the
    /// largest representable value below one.
    fn unit(u: f64) -> Self {
        let x = Self::of(u);
        if x < Self::one() {
            x
        } else {
            Self::one() - Self::epsilon() / Self::of(2.0)
        }
    }
}

impl Real for f32 {
    const BYTES: usize = 4;
    const PRECISION: Precision = Precision::Single;

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const BYTES: usize = 8;
    const PRECISION: Precision = Precision::Double;

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    Single,
    #[default]
    Double,
}

impl Precision {
    pub fn elem_size(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    /// Relative tolerance for comparing butterfly (pairwise) sums with
    /// sequential prefix sums.
    pub fn sum_tolerance(self) -> f64 {
        match self {
            Precision::Single => 2f64.powi(-16),
            Precision::Double => 2f64.powi(-40),
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!(
                "unknown precision `{other}` (expected single|double)"
            )),
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::Single => "single",
            Precision::Double => "double",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_stays_below_one() {
        let just_below = 1.0 - f64::EPSILON / 2.0;
        assert!(f32::unit(just_below) < 1.0);
        assert_eq!(f32::unit(just_below), 1.0 - f32::EPSILON / 2.0);
        assert_eq!(f64::unit(just_below), just_below);
        assert_eq!(f32::unit(0.25), 0.25);
    }
}
