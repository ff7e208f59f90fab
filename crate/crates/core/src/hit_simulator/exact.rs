//! Exact click probabilities for hit lists built by independent per-page
//! selection with probability `h`.
//!
//! Writing `i` for the selected pages ranked above `R` and `j` for those
//! ranked below it,
//!
//! ```text
//! t(R) = h * sum_i Bin(i; R-1, h) (i+1)^-alpha * g(i+1, N-R)
//! g(s, m) = sum_j Bin(j; m, h) / H(s + j)
//! ```
//!
//! where `H(n)` is the generalized harmonic number normalizing a list of
//! `n` hits. `g` obeys `g(s, m) = (1-h) g(s, m-1) + h g(s+1, m-1)`, so the
//! whole curve costs `O(N^2)` rather than the `O(N^3)` of the naive double
//! sum over list size and position.

use crate::click_models::harmonic_table;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, ln_binomial, xlog1my, xlogy, Real};

/// Largest index size accepted by the exact routines.
pub const EXACT_LIMIT: usize = 10_000;

fn check_h<T: Real>(h: T) -> Result<()> {
    if !(h >= T::zero() && h <= T::one()) {
        return Err(Error::invalid(format!("hit fraction must lie in [0, 1], got {h}")));
    }
    Ok(())
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha >= T::zero() && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    Ok(())
}

/// Probability that a hit list of exactly `n` pages contains page `R` at
/// position `r`: `h^n (1-h)^(N-n) C(R-1, r-1) C(N-R, n-r)`. Impossible
/// combinations have probability zero.
pub fn pr_rank_in_hitlist<T: Real>(rank: usize, r: usize, n_pages: usize, n: usize, h: T) -> Result<T> {
    check_h(h)?;
    if rank == 0 || rank > n_pages || n > n_pages {
        return Err(Error::invalid(format!(
            "rank {rank} and list size {n} must lie within 1..={n_pages}"
        )));
    }
    if r == 0 || r > n || r > rank || n - r > n_pages - rank {
        return Ok(T::zero());
    }
    let ln = ln_binomial::<T>(rank - 1, r - 1)
        + ln_binomial::<T>(n_pages - rank, n - r)
        + xlogy(T::of_usize(n), h)
        + xlog1my(T::of_usize(n_pages - n), h);
    Ok(ln.exp())
}

/// Binomial pmf `Bin(i; n, h)` over the window of `i` that carries all but a
/// negligible (below `e^-70` relative) part of the mass. Returns the first
/// index of the window and the values.
pub(crate) fn binomial_window<T: Real>(n: usize, h: T) -> (usize, Vec<T>) {
    if h == T::zero() {
        return (0, vec![T::one()]);
    }
    if h == T::one() {
        return (n, vec![T::one()]);
    }
    let nf = n as f64;
    let hf = h.as_f64();
    let mean = nf * hf;
    let width = 12.0 * (nf * hf * (1.0 - hf)).sqrt() + 30.0;
    let lo = (mean - width).floor().max(0.0) as usize;
    let hi = ((mean + width).ceil() as usize).min(n);
    let lh = h.ln();
    let lq = (-h).ln_1p();
    let values = (lo..=hi)
        .map(|i| {
            (ln_binomial::<T>(n, i) + T::of_usize(i) * lh + T::of_usize(n - i) * lq).exp()
        })
        .collect();
    (lo, values)
}

/// Exact traffic `t(R)` for every global rank `R = 1..=N` (index `R - 1`).
/// Lists are not truncated for display.
pub fn exact_traffic<T: Real>(n_pages: usize, h: T, alpha: T) -> Result<Vec<T>> {
    check_h(h)?;
    check_alpha(alpha)?;
    if n_pages == 0 {
        return Err(Error::invalid("index size must be at least 1"));
    }
    if n_pages > EXACT_LIMIT {
        return Err(Error::TooLargeForExact {
            n: n_pages,
            limit: EXACT_LIMIT,
        });
    }
    if h == T::zero() {
        return Ok(vec![T::zero(); n_pages]);
    }
    let harm = harmonic_table(n_pages, alpha);
    let pow: Vec<T> = (0..=n_pages)
        .map(|r| if r == 0 { T::zero() } else { T::of_usize(r).powf(-alpha) })
        .collect();
    // g[s] = g(s, m) for s = 1..=N-m, starting from m = 0.
    let mut g: Vec<T> = (0..=n_pages)
        .map(|s| if s == 0 { T::zero() } else { T::one() / harm[s] })
        .collect();
    let q = T::one() - h;
    let mut t = vec![T::zero(); n_pages];
    for rank in (1..=n_pages).rev() {
        let (lo, pmf) = binomial_window(rank - 1, h);
        let inner = compensated_sum(pmf.iter().enumerate().map(|(k, &p)| {
            let i = lo + k;
            p * pow[i + 1] * g[i + 1]
        }));
        t[rank - 1] = h * inner;
        // Advance m by one; s+1 still holds the previous row when s is read.
        for s in 1..rank {
            g[s] = q * g[s] + h * g[s + 1];
        }
    }
    Ok(t)
}

/// Exact click probability of the page with global rank `R`.
pub fn exact_click_prob<T: Real>(rank: usize, n_pages: usize, h: T, alpha: T) -> Result<T> {
    if rank == 0 || rank > n_pages {
        return Err(Error::invalid(format!("rank {rank} outside 1..={n_pages}")));
    }
    Ok(exact_traffic(n_pages, h, alpha)?[rank - 1])
}
