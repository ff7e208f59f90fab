//! Monte Carlo traffic: every query picks each page independently with
//! probability `h`, the selected pages are listed by global rank, and the
//! user clicks position `r` of the displayed list with the click model's
//! probability.
//!
//! Selected ranks are generated in ascending order by geometric skips, so a
//! query costs `O(min(n, cap))` for a list of `n` hits shown up to `cap`.
//! Query `q` draws only from the ChaCha8 stream `q` of the master seed, and
//! accumulators are fixed point integers, so results are bit-identical for
//! any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{rank_bins, BinMoments, CurveMode, HitSetDistribution, HitSpec, TrafficCurve};
use crate::analysis::DEFAULT_BINS_PER_DECADE;
use crate::click_models::{harmonic_table, ClickModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Most hits a user can be shown for one query.
pub const DEFAULT_DISPLAY_CAP: usize = 1000;

/// Largest index the simulator accepts.
pub const MAX_PAGES: usize = 10_000_000;

/// Fixed-point scale of the accumulators.
const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig<T> {
    pub n: usize,
    pub alpha: T,
    pub queries: u64,
    pub seed: u64,
    /// `None` shows every hit.
    pub display_cap: Option<usize>,
    pub click_model: ClickModel,
    /// Resolution at which Monte Carlo errors of binned means are tracked.
    pub bins_per_decade: usize,
}

impl<T: Real> SimulationConfig<T> {
    pub fn new(n: usize, alpha: T, queries: u64, seed: u64) -> Self {
        Self {
            n,
            alpha,
            queries,
            seed,
            display_cap: Some(DEFAULT_DISPLAY_CAP),
            click_model: ClickModel::Absolute,
            bins_per_decade: DEFAULT_BINS_PER_DECADE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_PAGES {
            return Err(Error::invalid(format!(
                "index size must lie in 1..={MAX_PAGES}, got {}",
                self.n
            )));
        }
        if self.queries == 0 {
            return Err(Error::invalid("at least one query is required"));
        }
        if !(self.alpha >= T::zero() && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and nonnegative, got {}", self.alpha)));
        }
        if self.display_cap == Some(0) {
            return Err(Error::invalid("display cap must be at least 1"));
        }
        if let ClickModel::PageGrouped { page_size: 0 } = self.click_model {
            return Err(Error::invalid("page_size must be at least 1"));
        }
        if self.bins_per_decade == 0 {
            return Err(Error::invalid("bins per decade must be at least 1"));
        }
        Ok(())
    }

    fn longest_list(&self) -> usize {
        self.display_cap.map_or(self.n, |c| c.min(self.n))
    }
}

#[inline]
fn fixed(x: f64) -> u128 {
    (x * SCALE) as u128
}

#[inline]
fn unfixed(x: u128) -> f64 {
    x as f64 / SCALE
}

/// Click weight of position `r` in a displayed list of `len` hits.
struct Weights {
    model: ClickModel,
    pow: Vec<f64>,
    inv_norm: Vec<f64>,
}

impl Weights {
    fn new(model: ClickModel, longest: usize, alpha: f64) -> Self {
        let slots = match model {
            ClickModel::Absolute => longest,
            ClickModel::PageGrouped { page_size } => longest.div_ceil(page_size),
        };
        let pow = (0..=slots)
            .map(|r| if r == 0 { 0.0 } else { (r as f64).powf(-alpha) })
            .collect();
        let inv_norm = harmonic_table(slots, alpha)
            .into_iter()
            .map(|h| if h > 0.0 { 1.0 / h } else { 0.0 })
            .collect();
        Self { model, pow, inv_norm }
    }

    #[inline]
    fn weight(&self, r: usize, len: usize) -> f64 {
        match self.model {
            ClickModel::Absolute => self.pow[r] * self.inv_norm[len],
            ClickModel::PageGrouped { page_size } => {
                let pages = len.div_ceil(page_size);
                let page = r.div_ceil(page_size);
                let on_page = if page == pages { len - (pages - 1) * page_size } else { page_size };
                self.pow[page] * self.inv_norm[pages] / on_page as f64
            }
        }
    }
}

struct Accumulator {
    t: Vec<u128>,
    bin_sum: Vec<u128>,
    bin_sum_sq: Vec<u128>,
    nonempty: u64,
}

impl Accumulator {
    fn new(n: usize, bins: usize) -> Self {
        Self {
            t: vec![0; n],
            bin_sum: vec![0; bins],
            bin_sum_sq: vec![0; bins],
            nonempty: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.t.iter_mut().zip(&other.t) {
            *a += b;
        }
        for (a, b) in self.bin_sum.iter_mut().zip(&other.bin_sum) {
            *a += b;
        }
        for (a, b) in self.bin_sum_sq.iter_mut().zip(&other.bin_sum_sq) {
            *a += b;
        }
        self.nonempty += other.nonempty;
        self
    }
}

struct Engine {
    n: usize,
    /// Ranks to draw before stopping: one past the display cap, so that a
    /// list longer than the cap is recognised as such.
    draw_limit: usize,
    longest: usize,
    weights: Weights,
    bin_of: Vec<u32>,
    first_bin: i64,
    bins: usize,
    bins_per_decade: usize,
}

/// Per-worker scratch space.
struct Scratch {
    ranks: Vec<usize>,
    bin_mass: Vec<f64>,
    touched: Vec<u32>,
}

impl Engine {
    fn new<T: Real>(cfg: &SimulationConfig<T>) -> Self {
        let longest = cfg.longest_list();
        let (first_bin, bin_of) = rank_bins(cfg.n, cfg.bins_per_decade);
        let bins = bin_of.last().map_or(0, |&b| b as usize + 1);
        Self {
            n: cfg.n,
            draw_limit: if longest < cfg.n { longest + 1 } else { cfg.n },
            longest,
            weights: Weights::new(cfg.click_model, longest, cfg.alpha.as_f64()),
            bin_of,
            first_bin,
            bins,
            bins_per_decade: cfg.bins_per_decade,
        }
    }

    /// Ascending global ranks (1-based) selected with probability `h` each.
    fn draw(&self, rng: &mut ChaCha8Rng, h: f64, ranks: &mut Vec<usize>) {
        ranks.clear();
        if h <= 0.0 {
            return;
        }
        if h >= 1.0 {
            ranks.extend(1..=self.draw_limit);
            return;
        }
        let ln_q = (-h).ln_1p();
        let mut pos = 0usize;
        while ranks.len() < self.draw_limit {
            // 1 - U lies in (0, 1], so the logarithm is finite.
            let u = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / ln_q).floor();
            if skip >= (self.n - pos) as f64 {
                break;
            }
            pos += skip as usize + 1;
            ranks.push(pos);
        }
    }

    fn query(&self, rng: &mut ChaCha8Rng, h: f64, acc: &mut Accumulator, scratch: &mut Scratch) {
        self.draw(rng, h, &mut scratch.ranks);
        let len = scratch.ranks.len().min(self.longest);
        if len == 0 {
            return;
        }
        acc.nonempty += 1;
        for (i, &rank) in scratch.ranks[..len].iter().enumerate() {
            let w = self.weights.weight(i + 1, len);
            acc.t[rank - 1] += fixed(w);
            let b = self.bin_of[rank - 1];
            if scratch.bin_mass[b as usize] == 0.0 {
                scratch.touched.push(b);
            }
            scratch.bin_mass[b as usize] += w;
        }
        for &b in &scratch.touched {
            let s = std::mem::take(&mut scratch.bin_mass[b as usize]);
            acc.bin_sum[b as usize] += fixed(s);
            acc.bin_sum_sq[b as usize] += fixed(s * s);
        }
        scratch.touched.clear();
    }

    fn run<F>(&self, queries: u64, seed: u64, hit_fraction: F) -> Accumulator
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    {
        let master = ChaCha8Rng::seed_from_u64(seed);
        let workers = rayon::current_num_threads().max(1) as u64;
        let chunk = queries.div_ceil(workers);
        (0..workers)
            .into_par_iter()
            .map(|w| {
                let mut acc = Accumulator::new(self.n, self.bins);
                let mut scratch = Scratch {
                    ranks: Vec::with_capacity(self.draw_limit.min(1 << 16)),
                    bin_mass: vec![0.0; self.bins],
                    touched: Vec::new(),
                };
                for q in (w * chunk)..((w + 1) * chunk).min(queries) {
                    let mut rng = master.clone();
                    rng.set_stream(q);
                    let h = hit_fraction(&mut rng);
                    self.query(&mut rng, h, &mut acc, &mut scratch);
                }
                acc
            })
            .reduce_with(Accumulator::merge)
            .expect("at least one worker")
    }

    fn finish<T: Real>(&self, cfg: &SimulationConfig<T>, acc: Accumulator, hits: HitSpec<T>, mode: CurveMode) -> TrafficCurve<T> {
        let q = cfg.queries as f64;
        TrafficCurve {
            n: cfg.n,
            alpha: cfg.alpha,
            hits,
            mode,
            t: acc.t.iter().map(|&v| T::of(unfixed(v) / q)).collect(),
            queries: cfg.queries,
            nonempty_queries: acc.nonempty,
            display_cap: cfg.display_cap,
            click_model: cfg.click_model,
            seed: Some(cfg.seed),
            moments: Some(BinMoments {
                bins_per_decade: self.bins_per_decade,
                first_index: self.first_bin,
                sum: acc.bin_sum.iter().map(|&v| unfixed(v)).collect(),
                sum_sq: acc.bin_sum_sq.iter().map(|&v| unfixed(v)).collect(),
            }),
        }
    }
}

/// Simulates `cfg.queries` queries with a fixed hit fraction `h`.
pub fn monte_carlo_traffic<T: Real>(cfg: &SimulationConfig<T>, h: T) -> Result<TrafficCurve<T>> {
    cfg.validate()?;
    if !(h >= T::zero() && h <= T::one()) {
        return Err(Error::invalid(format!("hit fraction must lie in [0, 1], got {h}")));
    }
    let engine = Engine::new(cfg);
    let hf = h.as_f64();
    let acc = engine.run(cfg.queries, cfg.seed, |_| hf);
    Ok(engine.finish(cfg, acc, HitSpec::Fixed { h }, CurveMode::MonteCarlo))
}

/// Simulates queries whose hit fraction is drawn afresh from `dist`.
pub fn convolved_traffic<T: Real>(cfg: &SimulationConfig<T>, dist: &HitSetDistribution<T>) -> Result<TrafficCurve<T>> {
    cfg.validate()?;
    let d = HitSetDistribution::new(dist.delta().as_f64(), dist.h_min().as_f64(), dist.h_max().as_f64())?;
    let engine = Engine::new(cfg);
    let acc = engine.run(cfg.queries, cfg.seed, |rng| d.sample_hit_fraction(rng.random::<f64>()));
    Ok(engine.finish(cfg, acc, HitSpec::Distributed(*dist), CurveMode::Convolved))
}
