//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the models are generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite or infinite float converts to f64")
    }
}

impl Real for f64 {
    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator, accumulated in iteration order.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// `k * ln(x)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlogy<T: Real>(k: T, x: T) -> T {
    if k == T::zero() {
        T::zero()
    } else {
        k * x.ln()
    }
}

/// `k * ln(1 - x)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlog1my<T: Real>(k: T, x: T) -> T {
    if k == T::zero() {
        T::zero()
    } else {
        k * (-x).ln_1p()
    }
}

/// Log of the binomial coefficient `C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::neg_infinity();
    }
    if k == 0 || k == n {
        return T::zero();
    }
    let one = T::one();
    (T::of_usize(n) + one).ln_gamma()
        - (T::of_usize(k) + one).ln_gamma()
        - (T::of_usize(n - k) + one).ln_gamma()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let xs = [1.0f64, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
        assert_eq!(xs.iter().copied().sum::<f64>(), 0.0);
    }

    #[test]
    fn ln_binomial_matches_small_table() {
        assert!((ln_binomial::<f64>(10, 3) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_binomial::<f32>(10, 3) - 120f32.ln()).abs() < 1e-5);
        assert_eq!(ln_binomial::<f64>(7, 0), 0.0);
        assert_eq!(ln_binomial::<f64>(7, 7), 0.0);
        assert_eq!(ln_binomial::<f64>(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn xlogy_zero_convention() {
        assert_eq!(xlogy(0.0f64, 0.0), 0.0);
        assert_eq!(xlog1my(0.0f64, 1.0), 0.0);
        assert_eq!(xlog1my(2.0f64, 1.0), f64::NEG_INFINITY);
    }
}
