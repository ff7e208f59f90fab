//! Traffic under finite hit lists: exact evaluation for small indices,
//! Monte Carlo simulation, convolution over the hit-set size, and scaling
//! collapse checks.

mod collapse;
mod exact;
mod hitset;
mod monte_carlo;

pub use collapse::{collapse_fixed_h, collapse_over_n, CollapseKind, CollapseResult};
pub use exact::{exact_click_prob, exact_traffic, pr_rank_in_hitlist, EXACT_LIMIT};
pub use hitset::{HitSetDistribution, DEFAULT_H_MAX};
pub use monte_carlo::{convolved_traffic, monte_carlo_traffic, SimulationConfig, DEFAULT_DISPLAY_CAP, MAX_PAGES};

use serde::Serialize;

use crate::analysis::{bin_index, log_bin, BinMean, BinnedCurve};
use crate::click_models::ClickModel;
use crate::error::Result;
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    Exact,
    MonteCarlo,
    Convolved,
}

/// How hit lists were sized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitSpec<T> {
    Fixed { h: T },
    Distributed(HitSetDistribution<T>),
}

/// Monte Carlo moments of the per-query click mass falling in each log bin of
/// the global rank, used for standard errors of binned means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinMoments {
    pub bins_per_decade: usize,
    /// Bin index (as in [`crate::analysis::bin_index`]) of the first entry.
    pub first_index: i64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

/// Click probability against global rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficCurve<T> {
    pub n: usize,
    pub alpha: T,
    pub hits: HitSpec<T>,
    pub mode: CurveMode,
    /// `t[R - 1]` for global rank `R`.
    pub t: Vec<T>,
    pub queries: u64,
    pub nonempty_queries: u64,
    pub display_cap: Option<usize>,
    pub click_model: ClickModel,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub moments: Option<BinMoments>,
}

impl<T: Real> TrafficCurve<T> {
    /// Exact curve for a fixed hit fraction.
    pub fn exact(n: usize, h: T, alpha: T) -> Result<Self> {
        Ok(Self {
            n,
            alpha,
            hits: HitSpec::Fixed { h },
            mode: CurveMode::Exact,
            t: exact_traffic(n, h, alpha)?,
            queries: 0,
            nonempty_queries: 0,
            display_cap: None,
            click_model: ClickModel::Absolute,
            seed: None,
            moments: None,
        })
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.t.iter().copied())
    }

    /// Fixed hit fraction, if any.
    pub fn fixed_h(&self) -> Option<T> {
        match self.hits {
            HitSpec::Fixed { h } => Some(h),
            HitSpec::Distributed(_) => None,
        }
    }

    /// Arithmetic means of `t` over log bins of `R`. Simulated curves carry
    /// their Monte Carlo standard error when binned at the resolution they
    /// were simulated with; exact curves have zero error; otherwise the
    /// error is the within-bin spread.
    pub fn binned(&self, bins_per_decade: usize) -> Result<BinnedCurve<T>> {
        let ranks: Vec<T> = (1..=self.n).map(T::of_usize).collect();
        let mut curve = log_bin(&ranks, &self.t, bins_per_decade, BinMean::Arithmetic)?;
        match (&self.mode, &self.moments) {
            (CurveMode::Exact, _) => curve.bins.iter_mut().for_each(|b| b.y_stderr = T::zero()),
            (_, Some(m)) if m.bins_per_decade == bins_per_decade && self.queries > 1 => {
                let q = self.queries as f64;
                for b in &mut curve.bins {
                    let k = (b.index - m.first_index) as usize;
                    let mean = m.sum[k] / q;
                    let var = ((m.sum_sq[k] / q - mean * mean) * q / (q - 1.0)).max(0.0);
                    b.y_stderr = T::of((var / q).sqrt() / b.count as f64);
                }
            }
            _ => {}
        }
        Ok(curve)
    }
}

/// Bin of each rank `1..=n`, offset so that rank 1 falls in bin 0.
pub(crate) fn rank_bins(n: usize, bins_per_decade: usize) -> (i64, Vec<u32>) {
    let first = bin_index(1.0f64, bins_per_decade);
    let bins = (1..=n)
        .map(|r| (bin_index(r as f64, bins_per_decade) - first) as u32)
        .collect();
    (first, bins)
}
