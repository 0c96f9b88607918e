//! Scalar abstraction for the scoring arithmetic.
//!
//! Precision, recall, F1 and accuracy are ratios of counts, so they can be
//! computed in floating point for reports or exactly over rationals when a
//! fixture needs to pin a value such as 2/3 without tolerance.

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait MetricScalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + std::fmt::Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    /// `num / den`, or zero when `den == 0`.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl MetricScalar for f32 {}
impl MetricScalar for f64 {}
impl MetricScalar for Ratio<i64> {}
impl MetricScalar for Ratio<i128> {}
