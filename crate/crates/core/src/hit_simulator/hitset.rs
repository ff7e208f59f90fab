//! Distribution of the fraction `h` of the index matching a query:
//! `S(h) = B h^-delta` on `[h_min, h_max]`, without an exponential cutoff.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default upper end of the hit fraction.
pub const DEFAULT_H_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitSetDistribution<T> {
    delta: T,
    h_min: T,
    h_max: T,
    norm: T,
}

fn is_log_uniform<T: Real>(delta: T) -> bool {
    (delta - T::one()).abs() <= T::epsilon()
}

impl<T: Real> HitSetDistribution<T> {
    /// `h_min == h_max` gives a point mass.
    pub fn new(delta: T, h_min: T, h_max: T) -> Result<Self> {
        if !(delta.is_finite() && delta > T::zero()) {
            return Err(Error::invalid(format!("delta must be finite and positive, got {delta}")));
        }
        if !(h_min > T::zero() && h_min <= h_max && h_max <= T::one()) {
            return Err(Error::invalid(format!(
                "hit fractions need 0 < h_min <= h_max <= 1, got [{h_min}, {h_max}]"
            )));
        }
        let norm = if h_min == h_max {
            T::infinity()
        } else if is_log_uniform(delta) {
            T::one() / (h_max / h_min).ln()
        } else {
            let e = T::one() - delta;
            e / (h_max.powf(e) - h_min.powf(e))
        };
        Ok(Self {
            delta,
            h_min,
            h_max,
            norm,
        })
    }

    /// Defaults for an index of `n` pages: `h_min = 1/N`, `h_max = 0.1`.
    pub fn for_index(delta: T, n: usize) -> Result<Self> {
        Self::new(delta, T::one() / T::of_usize(n), T::of(DEFAULT_H_MAX))
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn h_min(&self) -> T {
        self.h_min
    }

    pub fn h_max(&self) -> T {
        self.h_max
    }

    /// The constant `B`; infinite for a point mass.
    pub fn normalization(&self) -> T {
        self.norm
    }

    pub fn is_degenerate(&self) -> bool {
        self.h_min == self.h_max
    }

    pub fn density(&self, h: T) -> T {
        if self.is_degenerate() || h < self.h_min || h > self.h_max {
            return T::zero();
        }
        self.norm * h.powf(-self.delta)
    }

    pub fn cdf(&self, h: T) -> T {
        if h < self.h_min {
            return T::zero();
        }
        if h >= self.h_max {
            return T::one();
        }
        if is_log_uniform(self.delta) {
            return (h / self.h_min).ln() * self.norm;
        }
        let e = T::one() - self.delta;
        self.norm * (h.powf(e) - self.h_min.powf(e)) / e
    }

    /// Inverse CDF at `u` in `[0, 1]`.
    pub fn sample_hit_fraction(&self, u: T) -> T {
        if self.is_degenerate() {
            return self.h_min;
        }
        let u = u.max(T::zero()).min(T::one());
        let h = if is_log_uniform(self.delta) {
            self.h_min * (self.h_max / self.h_min).powf(u)
        } else {
            let e = T::one() - self.delta;
            let (a, b) = (self.h_min.powf(e), self.h_max.powf(e));
            (a + u * (b - a)).powf(T::one() / e)
        };
        h.max(self.h_min).min(self.h_max)
    }
}
