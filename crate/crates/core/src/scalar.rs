use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive, Zero};

/// Numeric type used for frequencies and costs.
///
/// Counts enter through [`Scalar::from_count`]; user-supplied weights through
/// [`Scalar::from_f64_lossy`].
pub trait Scalar:
    Num + Clone + Debug + Display + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `num / den`, with `x / 0` defined as `0`.
    fn ratio(num: Self, den: Self) -> Self {
        if den.is_zero() {
            Self::zero()
        } else {
            num / den
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_by_zero_is_zero() {
        assert_eq!(f64::ratio(3.0, 0.0), 0.0);
        assert_eq!(
            BigRational::ratio(BigRational::from_count(3), BigRational::zero()),
            BigRational::zero()
        );
    }

    #[test]
    fn rational_is_exact() {
        let r = BigRational::ratio(BigRational::from_count(10), BigRational::from_count(50));
        assert_eq!(r, BigRational::new(1.into(), 5.into()));
        assert_eq!(r.to_f64_lossy(), 0.2);
    }

    #[test]
    fn weights_round_trip() {
        assert_eq!(BigRational::from_f64_lossy(1.0), BigRational::from_count(1));
        assert_eq!(f32::from_f64_lossy(0.5), 0.5f32);
    }
}
