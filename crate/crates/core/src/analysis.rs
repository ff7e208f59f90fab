//! Logarithmic binning, density estimation and power-law fitting.
//!
//! Bin `i` at `b` bins per decade covers `[10^(i/b), 10^((i+1)/b))`. All
//! routines that bin the same abscissae therefore agree on bin membership,
//! which lets curves from different runs be compared bin by bin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hit_simulator::{HitSpec, TrafficCurve};
use crate::ranking::IndegreeMapping;
use crate::scalar::{CompensatedSum, Real};

pub const DEFAULT_BINS_PER_DECADE: usize = 10;

/// Minimum number of points accepted by the fitting routines.
pub const MIN_FIT_POINTS: usize = 5;

/// How the ordinates in a bin are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BinMean {
    /// Arithmetic means of `x` and `y`; the usual choice for averaging noisy
    /// data, and exact for proportional data.
    #[default]
    Arithmetic,
    /// Geometric means of `x` and `y` (requires `y > 0`); reproduces any exact
    /// power law exactly.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin<T> {
    pub index: i64,
    pub lower: T,
    pub upper: T,
    /// Mean abscissa of the bin's points, averaged the same way as `y`.
    pub x: T,
    pub y_mean: T,
    pub y_stderr: T,
    pub count: usize,
}

impl<T: Real> Bin<T> {
    /// Geometric centre of the bin edges.
    pub fn center(&self) -> T {
        (self.lower * self.upper).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCurve<T> {
    pub bins_per_decade: usize,
    pub bins: Vec<Bin<T>>,
}

impl<T: Real> BinnedCurve<T> {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn xs(&self) -> Vec<T> {
        self.bins.iter().map(|b| b.x).collect()
    }

    pub fn ys(&self) -> Vec<T> {
        self.bins.iter().map(|b| b.y_mean).collect()
    }

    /// Bins whose representative abscissa lies in `[lo, hi]`.
    pub fn restrict(&self, lo: T, hi: T) -> Self {
        Self {
            bins_per_decade: self.bins_per_decade,
            bins: self
                .bins
                .iter()
                .filter(|b| b.x >= lo && b.x <= hi)
                .cloned()
                .collect(),
        }
    }

    /// Log-log linear interpolation of the binned curve at `x`. Returns
    /// `None` outside the curve's support or next to a nonpositive value.
    pub fn interpolate(&self, x: T) -> Option<T> {
        let bins: Vec<&Bin<T>> = self.bins.iter().filter(|b| b.y_mean > T::zero()).collect();
        let first = bins.first()?;
        let last = bins.last()?;
        if x < first.x || x > last.x {
            return None;
        }
        let pos = bins.partition_point(|b| b.x <= x);
        if pos == 0 {
            return Some(first.y_mean);
        }
        let left = bins[pos - 1];
        if left.x == x || pos == bins.len() {
            return Some(left.y_mean);
        }
        let right = bins[pos];
        let s = (x.ln() - left.x.ln()) / (right.x.ln() - left.x.ln());
        Some((left.y_mean.ln() + s * (right.y_mean.ln() - left.y_mean.ln())).exp())
    }
}

/// Lower edge of bin `index`.
pub fn bin_edge<T: Real>(index: i64, bins_per_decade: usize) -> T {
    T::of(10f64.powf(index as f64 / bins_per_decade as f64))
}

/// Index of the logarithmic bin containing `x > 0`.
pub fn bin_index<T: Real>(x: T, bins_per_decade: usize) -> i64 {
    let xf = x.as_f64();
    let mut idx = (xf.log10() * bins_per_decade as f64).floor() as i64;
    // Correct rounding at edges so membership agrees with `bin_edge`.
    if xf < bin_edge::<f64>(idx, bins_per_decade) {
        idx -= 1;
    } else if xf >= bin_edge::<f64>(idx + 1, bins_per_decade) {
        idx += 1;
    }
    idx
}

fn check_bins_per_decade(bins_per_decade: usize) -> Result<()> {
    if bins_per_decade == 0 {
        return Err(Error::invalid("bins_per_decade must be positive"));
    }
    Ok(())
}

struct Accum<T> {
    x: CompensatedSum<T>,
    y: CompensatedSum<T>,
    y2: CompensatedSum<T>,
    count: usize,
}

/// Averages `y` over logarithmic bins of `x`. Empty bins are omitted; the
/// standard error is the sample standard deviation of the bin's `y` values
/// over `sqrt(count)` (zero for single-point bins).
pub fn log_bin<T: Real>(
    x: &[T],
    y: &[T],
    bins_per_decade: usize,
    mean: BinMean,
) -> Result<BinnedCurve<T>> {
    check_bins_per_decade(bins_per_decade)?;
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "x and y lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let mut keyed: Vec<(i64, usize)> = Vec::with_capacity(x.len());
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        if !(xi > T::zero()) || !xi.is_finite() {
            return Err(Error::invalid(format!("abscissa must be positive, got {xi}")));
        }
        if mean == BinMean::Geometric && !(yi > T::zero()) {
            return Err(Error::invalid(format!(
                "geometric binning needs positive ordinates, got {yi}"
            )));
        }
        keyed.push((bin_index(xi, bins_per_decade), i));
    }
    keyed.sort_by_key(|&(b, i)| (b, i));

    let mut bins = Vec::new();
    let mut start = 0;
    while start < keyed.len() {
        let index = keyed[start].0;
        let mut end = start;
        let mut acc = Accum {
            x: CompensatedSum::new(),
            y: CompensatedSum::new(),
            y2: CompensatedSum::new(),
            count: 0,
        };
        while end < keyed.len() && keyed[end].0 == index {
            let i = keyed[end].1;
            let (u, v) = match mean {
                BinMean::Arithmetic => (x[i], y[i]),
                BinMean::Geometric => (x[i].ln(), y[i].ln()),
            };
            acc.x.add(u);
            acc.y.add(v);
            acc.y2.add(v * v);
            acc.count += 1;
            end += 1;
        }
        let n = T::of_usize(acc.count);
        let m = acc.y.value() / n;
        let var = if acc.count > 1 {
            ((acc.y2.value() - n * m * m) / (n - T::one())).max(T::zero())
        } else {
            T::zero()
        };
        let mx = acc.x.value() / n;
        let (x_mean, y_mean, y_stderr) = match mean {
            BinMean::Arithmetic => (mx, m, (var / n).sqrt()),
            // Delta-method error of the geometric mean.
            BinMean::Geometric => (mx.exp(), m.exp(), m.exp() * (var / n).sqrt()),
        };
        bins.push(Bin {
            index,
            lower: bin_edge(index, bins_per_decade),
            upper: bin_edge(index + 1, bins_per_decade),
            x: x_mean,
            y_mean,
            y_stderr,
            count: acc.count,
        });
        start = end;
    }
    Ok(BinnedCurve {
        bins_per_decade,
        bins,
    })
}

/// Probability density estimated on logarithmic bins: counts divided by the
/// linear bin width and the sample size, placed at the geometric bin centre.
/// `y_stderr` is the Poisson error.
pub fn estimate_pdf_logbins<T: Real>(samples: &[T], bins_per_decade: usize) -> Result<BinnedCurve<T>> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let ones = vec![T::one(); samples.len()];
    let counts = log_bin(samples, &ones, bins_per_decade, BinMean::Arithmetic)?;
    let total = T::of_usize(samples.len());
    let bins = counts
        .bins
        .into_iter()
        .map(|b| {
            let c = T::of_usize(b.count);
            let width = b.upper - b.lower;
            Bin {
                x: b.center(),
                y_mean: c / (width * total),
                y_stderr: c.sqrt() / (width * total),
                ..b
            }
        })
        .collect();
    Ok(BinnedCurve {
        bins_per_decade,
        bins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    /// Slope of `log y` against `log x`.
    pub exponent: T,
    pub stderr: T,
    /// Intercept of `log10 y` at `log10 x = 0`.
    pub intercept: T,
    pub fit_range: (T, T),
    pub n_points: usize,
}

/// Ordinary least squares of `log y` on `log x`.
pub fn fit_log_log<T: Real>(x: &[T], y: &[T]) -> Result<FitResult<T>> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: x.len(),
        });
    }
    for (&xi, &yi) in x.iter().zip(y) {
        if !(xi > T::zero() && yi > T::zero()) {
            return Err(Error::invalid(format!(
                "power-law fit needs positive values, got ({xi}, {yi})"
            )));
        }
    }
    let lx: Vec<T> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.log10()).collect();
    let n = T::of_usize(x.len());
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (&a, &b) in lx.iter().zip(&ly) {
        sxx.add((a - mx) * (a - mx));
        sxy.add((a - mx) * (b - my));
    }
    let sxx = sxx.value();
    if !(sxx > T::zero()) {
        return Err(Error::InsufficientData {
            needed: 2,
            got: 1,
        });
    }
    let slope = sxy.value() / sxx;
    let intercept = my - slope * mx;
    let mut ssr = CompensatedSum::new();
    for (&a, &b) in lx.iter().zip(&ly) {
        let r = b - (intercept + slope * a);
        ssr.add(r * r);
    }
    let dof = n - T::of(2.0);
    let stderr = (ssr.value() / dof / sxx).max(T::zero()).sqrt();
    let lo = x.iter().copied().fold(T::infinity(), T::min);
    let hi = x.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(FitResult {
        exponent: slope,
        stderr,
        intercept,
        fit_range: (lo, hi),
        n_points: x.len(),
    })
}

/// Fits `y ~ x^exponent` to the bins whose abscissa lies in `range`
/// (inclusive; whole curve when `None`).
pub fn fit_power_law<T: Real>(curve: &BinnedCurve<T>, range: Option<(T, T)>) -> Result<FitResult<T>> {
    let selected = match range {
        Some((lo, hi)) => curve.restrict(lo, hi),
        None => curve.clone(),
    };
    let mut fit = fit_log_log(&selected.xs(), &selected.ys())?;
    if let Some(r) = range {
        fit.fit_range = r;
    }
    Ok(fit)
}

/// Ratio of the largest to the smallest value; infinite if any is nonpositive.
pub fn flatness_ratio<T: Real>(values: &[T]) -> T {
    let lo = values.iter().copied().fold(T::infinity(), T::min);
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    if !(lo > T::zero()) {
        return T::infinity();
    }
    hi / lo
}

/// Largest [`flatness_ratio`] of values that all lie within `±eps` of a
/// common level `c`, i.e. in `[c (1 - eps), c (1 + eps)]`.
pub fn flatness_limit<T: Real>(eps: T) -> T {
    (T::one() + eps) / (T::one() - eps)
}

/// Plateau and tail of a binned fixed-`h` traffic curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeSummary<T> {
    /// [`flatness_ratio`] of the bins with `R < 1/h`.
    pub plateau_ratio: T,
    pub plateau_bins: usize,
    /// Power-law fit to the bins with `R > 1/h`.
    pub tail: FitResult<T>,
}

pub fn fixed_h_shape<T: Real>(curve: &BinnedCurve<T>, h: T) -> Result<ShapeSummary<T>> {
    let edge = T::one() / h;
    let plateau: Vec<T> = curve.bins.iter().filter(|b| b.x < edge).map(|b| b.y_mean).collect();
    let tail = BinnedCurve {
        bins_per_decade: curve.bins_per_decade,
        bins: curve.bins.iter().filter(|b| b.x > edge).cloned().collect(),
    };
    Ok(ShapeSummary {
        plateau_ratio: flatness_ratio(&plateau),
        plateau_bins: plateau.len(),
        tail: fit_power_law(&tail, None)?,
    })
}

/// Traffic against in-degree, with the effective exponent `gamma_eff` and
/// the slopes of the two baseline models for comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndegreeTraffic<T> {
    /// Arithmetic means of `t` over log bins of `k`.
    pub curve: BinnedCurve<T>,
    pub fit: FitResult<T>,
    /// Random surfing: `t ~ k`.
    pub surfing_slope: T,
    /// Naive searching: `t ~ k^(alpha beta)`.
    pub naive_slope: T,
    /// Ranks treated as the top plateau, `1/h` (or `1/h_max`).
    pub plateau_ranks: usize,
    /// Pages left out because their in-degree is zero.
    pub zero_degree: usize,
}

/// Lowest in-degree used in `gamma_eff` fits; below it the PageRank of a
/// page is dominated by the teleportation floor rather than its links.
pub const MIN_FIT_INDEGREE: f64 = 10.0;

/// Central `decades` of `[lo, hi]` on a log scale, or the whole range if it
/// is narrower.
pub fn middle_decades<T: Real>(lo: T, hi: T, decades: T) -> (T, T) {
    let (a, b) = (lo.log10(), hi.log10());
    if b - a <= decades {
        return (lo, hi);
    }
    let mid = (a + b) / T::of(2.0);
    let ten = T::of(10.0);
    (ten.powf(mid - decades / T::of(2.0)), ten.powf(mid + decades / T::of(2.0)))
}

/// Maps each global rank of `curve` to an in-degree, bins `t` against `k`
/// and fits `gamma_eff` over the middle two decades between
/// [`MIN_FIT_INDEGREE`] and the in-degree at the edge of the top plateau.
pub fn traffic_vs_indegree<T: Real>(
    curve: &TrafficCurve<T>,
    mapping: &IndegreeMapping<T>,
    beta: T,
    bins_per_decade: usize,
) -> Result<IndegreeTraffic<T>> {
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let n = curve.n;
    let mut ks = Vec::with_capacity(n);
    let mut ts = Vec::with_capacity(n);
    let mut zero_degree = 0;
    for rank in 1..=n {
        let k = mapping.indegree(rank, n)?;
        if k > T::zero() {
            ks.push(k);
            ts.push(curve.t[rank - 1]);
        } else {
            zero_degree += 1;
        }
    }
    let binned = log_bin(&ks, &ts, bins_per_decade, BinMean::Arithmetic)?;
    let h_top = match curve.hits {
        HitSpec::Fixed { h } => h,
        HitSpec::Distributed(d) => d.h_max(),
    };
    let plateau_ranks = if h_top > T::zero() {
        (T::one() / h_top).round().as_f64().clamp(1.0, n as f64) as usize
    } else {
        1
    };
    let k_top = mapping.indegree(plateau_ranks, n)?;
    let range = middle_decades(T::of(MIN_FIT_INDEGREE), k_top, T::of(2.0));
    let fit = fit_power_law(&binned, Some(range))?;
    Ok(IndegreeTraffic {
        curve: binned,
        fit,
        surfing_slope: T::one(),
        naive_slope: curve.alpha * beta,
        plateau_ranks,
        zero_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_single_bin() {
        let c = log_bin(&[3.0f64], &[7.0], 10, BinMean::Arithmetic).unwrap();
        assert_eq!(c.len(), 1);
        let b = &c.bins[0];
        assert!(b.lower <= 3.0 && 3.0 < b.upper);
        assert_eq!((b.y_mean, b.y_stderr, b.count), (7.0, 0.0, 1));
    }

    #[test]
    fn constant_y_gives_constant_means() {
        let x: Vec<f64> = (1..5000).map(|i| i as f64 * 0.37).collect();
        let y = vec![2.5; x.len()];
        let c = log_bin(&x, &y, 10, BinMean::Arithmetic).unwrap();
        for b in &c.bins {
            assert_relative_eq!(b.y_mean, 2.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn identity_on_log_grid_matches_bin_centres() {
        // 20 points per decade, 10 bins per decade: each bin gets 2 points.
        let x: Vec<f64> = (0..80).map(|i| 10f64.powf((i as f64 + 0.5) / 20.0)).collect();
        let c = log_bin(&x, &x, 10, BinMean::Arithmetic).unwrap();
        let half_width = 10f64.powf(0.05) - 1.0;
        for b in &c.bins {
            assert_eq!(b.count, 2);
            let rel = (b.y_mean - b.center()).abs() / b.center();
            assert!(rel < half_width, "bin {} rel {rel}", b.index);
        }
    }

    #[test]
    fn rejects_nonpositive_abscissa() {
        assert!(log_bin(&[1.0f64, 0.0], &[1.0, 1.0], 10, BinMean::Arithmetic).is_err());
        assert!(log_bin(&[1.0f64, -2.0], &[1.0, 1.0], 10, BinMean::Arithmetic).is_err());
    }

    #[test]
    fn bin_membership_at_edges() {
        assert_eq!(bin_index(1.0f64, 10), 0);
        assert_eq!(bin_index(10.0f64, 10), 10);
        assert_eq!(bin_index(1000.0f64, 10), 30);
        assert_eq!(bin_index(0.1f64, 10), -10);
        assert_eq!(bin_index(9.999f64, 1), 0);
    }

    #[test]
    fn exact_power_law_fit() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(-2)).collect();
        let f = fit_log_log(&x, &y).unwrap();
        assert_relative_eq!(f.exponent, -2.0, epsilon = 1e-12);
        assert!(f.stderr < 1e-12);
        let f = fit_log_log(&x, &[4.0; 20]).unwrap();
        assert!(f.exponent.abs() < 1e-14);
    }

    #[test]
    fn noisy_power_law_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200).map(|i| 10f64.powf(i as f64 / 50.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v.powf(1.8) * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0)))
            .collect();
        let c = log_bin(&x, &y, 10, BinMean::Arithmetic).unwrap();
        let f = fit_power_law(&c, None).unwrap();
        assert!((f.exponent - 1.8).abs() < 0.05, "{}", f.exponent);
    }

    #[test]
    fn fit_refuses_short_or_nonpositive_input() {
        let c = log_bin(&[1.0f64, 2.0, 5.0, 9.0], &[1.0, 2.0, 3.0, 4.0], 10, BinMean::Arithmetic)
            .unwrap();
        assert!(matches!(
            fit_power_law(&c, None),
            Err(Error::InsufficientData { .. })
        ));
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        assert!(fit_log_log(&x, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn geometric_binning_recovers_power_law_exactly() {
        let x: Vec<f64> = (1..=5000).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.37)).collect();
        let c = log_bin(&x, &y, 10, BinMean::Geometric).unwrap();
        let f = fit_power_law(&c, None).unwrap();
        assert_relative_eq!(f.exponent, -1.37, epsilon = 1e-6);
    }

    #[test]
    fn uniform_pdf_is_flat_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..200_000).map(|_| 1.0 + 9.0 * rng.random::<f64>()).collect();
        let pdf = estimate_pdf_logbins(&s, 10).unwrap();
        let mut integral = 0.0;
        for b in &pdf.bins {
            integral += b.y_mean * (b.upper - b.lower);
            if b.lower >= 1.0 && b.upper <= 10.0 {
                assert!((b.y_mean - 1.0 / 9.0).abs() < 5.0 * b.y_stderr + 1e-3);
            }
        }
        assert!((integral - 1.0).abs() < 0.02);
    }

    #[test]
    fn pareto_pdf_slope() {
        // Inverse transform for pdf ~ x^-1.1 on [1, 1e6].
        let (lo, hi, d) = (1.0f64, 1e6f64, 1.1f64);
        let e = 1.0 - d;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<f64> = (0..500_000)
            .map(|_| {
                let u: f64 = rng.random();
                (lo.powf(e) + u * (hi.powf(e) - lo.powf(e))).powf(1.0 / e)
            })
            .collect();
        let pdf = estimate_pdf_logbins(&s, 10).unwrap();
        let f = fit_power_law(&pdf, Some((2.0, 5e5))).unwrap();
        assert!((f.exponent + 1.1).abs() < 0.1, "{}", f.exponent);
    }

    #[test]
    fn pdf_needs_enough_samples() {
        assert!(matches!(
            estimate_pdf_logbins(&[1.0f64; 10], 10),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn interpolation_is_log_log_linear() {
        let x = [1.0f64, 10.0, 100.0];
        let y = [1.0f64, 0.1, 0.01];
        let c = log_bin(&x, &y, 1, BinMean::Arithmetic).unwrap();
        assert_relative_eq!(c.interpolate(3.0).unwrap(), 1.0 / 3.0, max_relative = 1e-12);
        assert!(c.interpolate(0.5).is_none());
        assert!(c.interpolate(200.0).is_none());
    }

    fn power_law_curve(n: usize, exponent: f64, h: f64) -> TrafficCurve<f64> {
        let mut c = TrafficCurve::exact(1, 1.0, 1.63).unwrap();
        c.n = n;
        c.hits = HitSpec::Fixed { h };
        c.t = (1..=n).map(|r| (n as f64 / r as f64).powf(exponent)).collect();
        c
    }

    #[test]
    fn linear_traffic_gives_unit_gamma() {
        // t(R) = (N/R)^(1/beta) is exactly k(R).
        let beta = 1.1;
        let c = power_law_curve(100_000, 1.0 / beta, 0.1);
        let map = IndegreeMapping::PowerLaw { beta };
        let r = traffic_vs_indegree(&c, &map, beta, 10).unwrap();
        assert_relative_eq!(r.fit.exponent, 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.naive_slope, 1.63 * 1.1, epsilon = 1e-12);
        assert_eq!(r.plateau_ranks, 10);
        assert_eq!(r.zero_degree, 0);
        let (lo, hi) = r.fit.fit_range;
        assert_relative_eq!(hi.log10() - lo.log10(), 2.0, epsilon = 1e-9);
        assert!(lo >= MIN_FIT_INDEGREE);
    }

    #[test]
    fn middle_decades_centres_window() {
        let (lo, hi) = middle_decades(10.0f64, 1e5, 2.0);
        assert_relative_eq!(lo, 10f64.powf(2.0), max_relative = 1e-12);
        assert_relative_eq!(hi, 10f64.powf(4.0), max_relative = 1e-12);
        assert_eq!(middle_decades(10.0f64, 300.0, 2.0), (10.0, 300.0));
    }

    #[test]
    fn observed_mapping_skips_zero_degree() {
        let n = 20_000;
        let c = power_law_curve(n, 0.5, 0.01);
        let ks: Vec<f64> = (1..=n).map(|r| if r > n - 100 { 0.0 } else { (n as f64 / r as f64).powf(1.0 / 1.1) }).collect();
        let r = traffic_vs_indegree(&c, &IndegreeMapping::Observed(ks), 1.1, 10).unwrap();
        assert_eq!(r.zero_degree, 100);
        assert_relative_eq!(r.fit.exponent, 0.55, epsilon = 0.01);
    }

    #[test]
    fn flatness_definition() {
        assert_eq!(flatness_ratio(&[2.0f64, 2.0]), 1.0);
        assert_eq!(flatness_ratio(&[1.0f64, 0.0]), f64::INFINITY);
        // 0.9 and 1.1 are both within 10% of 1.
        assert_relative_eq!(flatness_limit(0.1f64), 1.1 / 0.9, epsilon = 1e-15);
        assert!(flatness_ratio(&[0.9f64, 1.1]) <= flatness_limit(0.1));
    }

    #[test]
    fn shape_of_closed_form_curve() {
        let h = 1e-3;
        let c = power_law_curve(100_000, 0.0, h);
        let t: Vec<f64> = (1..=100_000).map(|r| if (r as f64) * h <= 1.0 { h } else { h * (r as f64 * h).powf(-1.63) }).collect();
        let ranks: Vec<f64> = (1..=c.n).map(|r| r as f64).collect();
        let binned = log_bin(&ranks, &t, 10, BinMean::Arithmetic).unwrap();
        let s = fixed_h_shape(&binned, h).unwrap();
        assert_eq!(s.plateau_ratio, 1.0);
        assert!((s.tail.exponent + 1.63).abs() < 0.02, "{}", s.tail.exponent);
    }

    proptest! {
        #[test]
        fn fit_is_scale_equivariant(c in 1e-3f64..1e3, s in -3.0f64..3.0) {
            let x: Vec<f64> = (1..=30).map(|i| i as f64 * 1.7).collect();
            let y: Vec<f64> = x.iter().map(|v| v.powf(s) * (1.0 + 0.1 * (v * 12.9).sin())).collect();
            let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
            let a = fit_log_log(&x, &y).unwrap();
            let b = fit_log_log(&x, &cy).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-10);
            prop_assert!((b.intercept - a.intercept - c.log10()).abs() < 1e-10);
        }

        #[test]
        fn geometric_bins_then_fit_recover_exponent(s in -3.0f64..3.0, scale in 0.01f64..100.0) {
            let x: Vec<f64> = (0..400).map(|i| scale * 10f64.powf(i as f64 / 97.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| 2.0 * v.powf(s)).collect();
            let c = log_bin(&x, &y, 10, BinMean::Geometric).unwrap();
            let f = fit_power_law(&c, None).unwrap();
            prop_assert!((f.exponent - s).abs() < 1e-6);
        }
    }
}
