//! Scaling-collapse checks on binned traffic curves.
//!
//! Deviations are in decades (`|log10 a - log10 b|`), comparing each binned
//! point against the log-log interpolation of another curve. Bins with no
//! recorded clicks carry no information on a log scale and are dropped.

use serde::Serialize;

use super::{HitSpec, TrafficCurve};
use crate::analysis::{Bin, BinnedCurve};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseKind {
    /// `t / h` against `R h` at fixed `N`.
    FixedH,
    /// `f(N) t` against `R / N`.
    OverN,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseResult<T> {
    pub kind: CollapseKind,
    /// Hit fraction (fixed-h) or index size (over-N) of each curve.
    pub labels: Vec<T>,
    /// Multiplier applied to each curve's ordinate: `1/h`, or the fitted
    /// `f(N)` relative to the largest index.
    pub scale_factors: Vec<T>,
    /// Rescaled samples of the reference curve.
    pub reference: Vec<(T, T)>,
    /// Rescaled binned points of every curve.
    pub rescaled: Vec<Vec<(T, T)>>,
    /// Largest deviation of each curve from the others, in decades.
    pub deviations: Vec<T>,
    pub max_deviation: T,
    /// Abscissa range shared by all curves.
    pub overlap: (T, T),
}

fn rescale<T: Real>(curve: &BinnedCurve<T>, sx: T, sy: T) -> BinnedCurve<T> {
    BinnedCurve {
        bins_per_decade: curve.bins_per_decade,
        bins: curve
            .bins
            .iter()
            .filter(|b| b.y_mean > T::zero())
            .map(|b| Bin {
                lower: b.lower * sx,
                upper: b.upper * sx,
                x: b.x * sx,
                y_mean: b.y_mean * sy,
                y_stderr: b.y_stderr * sy,
                ..b.clone()
            })
            .collect(),
    }
}

fn points<T: Real>(c: &BinnedCurve<T>) -> Vec<(T, T)> {
    c.bins.iter().map(|b| (b.x, b.y_mean)).collect()
}

fn common_support<T: Real>(curves: &[BinnedCurve<T>]) -> Result<(T, T)> {
    let mut lo = T::neg_infinity();
    let mut hi = T::infinity();
    for c in curves {
        let (first, last) = match (c.bins.first(), c.bins.last()) {
            (Some(f), Some(l)) => (f.x, l.x),
            _ => return Err(Error::NoOverlap),
        };
        lo = lo.max(first);
        hi = hi.min(last);
    }
    if lo > hi {
        return Err(Error::NoOverlap);
    }
    Ok((lo, hi))
}

fn check_alpha<T: Real>(curves: &[TrafficCurve<T>]) -> Result<()> {
    let a = curves[0].alpha;
    if curves.iter().any(|c| (c.alpha - a).abs() > T::of(1e-12) * a.abs()) {
        return Err(Error::invalid("curves were computed with different alpha"));
    }
    Ok(())
}

/// Rescales curves at a common `N` to `(R h, t / h)` and reports the largest
/// pairwise deviation over their common support.
pub fn collapse_fixed_h<T: Real>(curves: &[TrafficCurve<T>], bins_per_decade: usize) -> Result<CollapseResult<T>> {
    if curves.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: curves.len(),
        });
    }
    check_alpha(curves)?;
    let n = curves[0].n;
    if curves.iter().any(|c| c.n != n) {
        return Err(Error::invalid("fixed-h collapse needs curves with the same N"));
    }
    let mut hs = Vec::with_capacity(curves.len());
    let mut scaled = Vec::with_capacity(curves.len());
    for c in curves {
        let h = match c.hits {
            HitSpec::Fixed { h } if h > T::zero() => h,
            _ => return Err(Error::invalid("fixed-h collapse needs curves with a fixed positive h")),
        };
        hs.push(h);
        scaled.push(rescale(&c.binned(bins_per_decade)?, h, T::one() / h));
    }
    let (lo, hi) = common_support(&scaled)?;
    let mut deviations = vec![T::zero(); curves.len()];
    let mut compared = 0usize;
    for (a, ca) in scaled.iter().enumerate() {
        for (b, cb) in scaled.iter().enumerate() {
            if a == b {
                continue;
            }
            for bin in ca.bins.iter().filter(|p| p.x >= lo && p.x <= hi) {
                if let Some(y) = cb.interpolate(bin.x) {
                    let d = (bin.y_mean.log10() - y.log10()).abs();
                    deviations[a] = deviations[a].max(d);
                    deviations[b] = deviations[b].max(d);
                    compared += 1;
                }
            }
        }
    }
    if compared == 0 {
        return Err(Error::NoOverlap);
    }
    let max_deviation = deviations.iter().copied().fold(T::zero(), T::max);
    Ok(CollapseResult {
        kind: CollapseKind::FixedH,
        scale_factors: hs.iter().map(|&h| T::one() / h).collect(),
        labels: hs,
        reference: points(&scaled[0]),
        rescaled: scaled.iter().map(points).collect(),
        deviations,
        max_deviation,
        overlap: (lo, hi),
    })
}

/// Rescales convolved curves to `R / N`, fits a multiplicative factor `f(N)`
/// for each (least squares in `log t`) against the largest index, and
/// reports the largest residual.
pub fn collapse_over_n<T: Real>(curves: &[TrafficCurve<T>], bins_per_decade: usize) -> Result<CollapseResult<T>> {
    if curves.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    check_alpha(curves)?;
    let mut dists = Vec::with_capacity(curves.len());
    for c in curves {
        match c.hits {
            HitSpec::Distributed(d) => {
                let rel = (d.h_min() * T::of_usize(c.n) - T::one()).abs();
                if rel > T::of(1e-6) {
                    return Err(Error::invalid(format!(
                        "over-N collapse needs h_min = 1/N, got {} for N = {}",
                        d.h_min(),
                        c.n
                    )));
                }
                dists.push(d);
            }
            HitSpec::Fixed { .. } => {
                return Err(Error::invalid("over-N collapse needs convolved curves"));
            }
        }
    }
    let d0 = dists[0];
    if dists.iter().any(|d| d.delta() != d0.delta() || d.h_max() != d0.h_max()) {
        return Err(Error::invalid("over-N collapse needs a common delta and h_max"));
    }
    let scaled: Vec<BinnedCurve<T>> = curves
        .iter()
        .map(|c| Ok(rescale(&c.binned(bins_per_decade)?, T::one() / T::of_usize(c.n), T::one())))
        .collect::<Result<_>>()?;
    let (lo, hi) = common_support(&scaled)?;
    let reference = (0..curves.len()).max_by_key(|&i| curves[i].n).expect("nonempty");
    let ref_curve = &scaled[reference];

    let mut scale_factors = Vec::with_capacity(curves.len());
    let mut deviations = Vec::with_capacity(curves.len());
    let mut rescaled = Vec::with_capacity(curves.len());
    for (i, c) in scaled.iter().enumerate() {
        if i == reference {
            scale_factors.push(T::one());
            deviations.push(T::zero());
            rescaled.push(points(c));
            continue;
        }
        let diffs: Vec<T> = c
            .bins
            .iter()
            .filter(|b| b.x >= lo && b.x <= hi)
            .filter_map(|b| ref_curve.interpolate(b.x).map(|y| y.log10() - b.y_mean.log10()))
            .collect();
        if diffs.is_empty() {
            return Err(Error::NoOverlap);
        }
        let log_f = diffs.iter().copied().sum::<T>() / T::of_usize(diffs.len());
        let dev = diffs.iter().map(|&d| (d - log_f).abs()).fold(T::zero(), T::max);
        let f = T::of(10.0).powf(log_f);
        scale_factors.push(f);
        deviations.push(dev);
        rescaled.push(c.bins.iter().map(|b| (b.x, b.y_mean * f)).collect());
    }
    let max_deviation = deviations.iter().copied().fold(T::zero(), T::max);
    Ok(CollapseResult {
        kind: CollapseKind::OverN,
        labels: curves.iter().map(|c| T::of_usize(c.n)).collect(),
        scale_factors,
        reference: points(ref_curve),
        rescaled,
        deviations,
        max_deviation,
        overlap: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click_models::ClickModel;
    use crate::hit_simulator::{CurveMode, HitSetDistribution};

    /// Closed-form scaling shape: `h` for `R h <= 1`, `h (R h)^-alpha` beyond.
    fn shape(n: usize, h: f64, alpha: f64) -> TrafficCurve<f64> {
        let t = (1..=n)
            .map(|r| {
                let x = r as f64 * h;
                if x <= 1.0 { h } else { h * x.powf(-alpha) }
            })
            .collect();
        TrafficCurve {
            n,
            alpha,
            hits: HitSpec::Fixed { h },
            mode: CurveMode::Exact,
            t,
            queries: 0,
            nonempty_queries: 0,
            display_cap: None,
            click_model: ClickModel::Absolute,
            seed: None,
            moments: None,
        }
    }

    fn convolved_shape(n: usize, scale: f64) -> TrafficCurve<f64> {
        let mut c = shape(n, 1.0, 1.0);
        c.t = (1..=n).map(|r| scale * (r as f64 / n as f64).powf(-0.9)).collect();
        c.hits = HitSpec::Distributed(HitSetDistribution::for_index(1.1, n).unwrap());
        c.mode = CurveMode::Convolved;
        c
    }

    #[test]
    fn identical_curves_collapse_exactly() {
        let c = shape(10_000, 0.01, 1.63);
        let r = collapse_fixed_h(&[c.clone(), c], 10).unwrap();
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn closed_form_shapes_collapse_closely() {
        let r = collapse_fixed_h(&[shape(100_000, 0.1, 1.63), shape(100_000, 0.001, 1.63)], 10).unwrap();
        // Only the bin straddling R h = 1 differs between the two shapes.
        assert!(r.max_deviation < 0.1, "{}", r.max_deviation);
        assert_eq!(r.scale_factors, vec![10.0, 1000.0]);
    }

    #[test]
    fn mismatched_alpha_is_rejected_or_deviates() {
        let a = shape(100_000, 0.1, 1.63);
        let mut b = shape(100_000, 0.001, 2.5);
        assert!(collapse_fixed_h(&[a.clone(), b.clone()], 10).is_err());
        // Same shapes with the bookkeeping alpha forced equal: the tails
        // separate well beyond the collapse tolerance.
        b.alpha = 1.63;
        let r = collapse_fixed_h(&[a, b], 10).unwrap();
        assert!(r.max_deviation > 0.5, "{}", r.max_deviation);
    }

    #[test]
    fn disjoint_supports_do_not_overlap() {
        let a = shape(100, 1e-4, 1.63);
        let b = shape(100, 1.0, 1.63);
        assert!(matches!(collapse_fixed_h(&[a, b], 10), Err(Error::NoOverlap)));
    }

    #[test]
    fn fixed_h_needs_two_curves() {
        assert!(collapse_fixed_h(&[shape(100, 0.1, 1.63)], 10).is_err());
    }

    #[test]
    fn single_curve_over_n() {
        let r = collapse_over_n(&[convolved_shape(1000, 1.0)], 10).unwrap();
        assert_eq!(r.scale_factors, vec![1.0]);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn over_n_recovers_scale_factor() {
        let r = collapse_over_n(&[convolved_shape(10_000, 10.0), convolved_shape(100_000, 1.0)], 10).unwrap();
        // Arithmetic bin means of a power law are interpolated slightly off it.
        assert!((r.scale_factors[0] - 0.1).abs() < 1e-4, "{:?}", r.scale_factors);
        assert!(r.max_deviation < 0.01, "{}", r.max_deviation);
    }

    #[test]
    fn over_n_rejects_fixed_h() {
        assert!(collapse_over_n(&[shape(100, 0.1, 1.63)], 10).is_err());
    }
}
