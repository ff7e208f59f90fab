//! Closed-form baseline traffic models.
//!
//! Every traffic vector returned here is normalized to sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Model exponents and sizes shared by the traffic models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Click probability against position in a hit list, `t ~ r^-alpha`.
    pub alpha: T,
    /// Global rank against PageRank, `R ~ p^-beta`.
    pub beta: T,
    /// PageRank density exponent.
    pub mu: T,
    /// Hit-set density exponent.
    pub delta: T,
    pub damping: T,
    pub index_size: usize,
    /// Hits per result page.
    pub page_size: usize,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::of(1.63),
            beta: T::of(1.1),
            mu: T::of(2.1),
            delta: T::of(1.1),
            damping: T::of(0.85),
            index_size: 100_000,
            page_size: 10,
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu", self.mu),
            ("delta", self.delta),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !(self.damping > T::zero() && self.damping < T::one()) {
            return Err(Error::invalid(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if self.page_size == 0 {
            return Err(Error::invalid("page_size must be at least 1"));
        }
        if self.index_size == 0 {
            return Err(Error::invalid("index size must be at least 1"));
        }
        Ok(())
    }

    /// Exponent of traffic against in-degree predicted by the naive
    /// search model.
    pub fn naive_gamma(&self) -> T {
        self.alpha * self.beta
    }
}

/// Generalized harmonic number `sum_{m=1..n} m^-alpha`.
pub fn harmonic<T: Real>(n: usize, alpha: T) -> T {
    // Smallest terms first keeps the rounding error down.
    compensated_sum((1..=n).rev().map(|m| T::of_usize(m).powf(-alpha)))
}

/// Prefix table of generalized harmonic numbers: `table[n] = H(n, alpha)`
/// for `n = 0..=len`.
pub fn harmonic_table<T: Real>(len: usize, alpha: T) -> Vec<T> {
    let mut out = Vec::with_capacity(len + 1);
    let mut acc = crate::scalar::CompensatedSum::new();
    out.push(T::zero());
    for m in 1..=len {
        acc.add(T::of_usize(m).powf(-alpha));
        out.push(acc.value());
    }
    out
}

fn check_position(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::invalid(format!("position {r} outside a list of {n} hits")));
    }
    Ok(())
}

/// Probability of clicking position `r` in a list of `n` hits,
/// `r^-alpha / H(n, alpha)`.
pub fn click_prob_from_rank<T: Real>(r: usize, n: usize, alpha: T) -> Result<T> {
    check_position(r, n)?;
    Ok(T::of_usize(r).powf(-alpha) / harmonic(n, alpha))
}

/// Probability of clicking position `r` when hits are shown `page_size` to a
/// result page: page `q` receives mass `q^-alpha` (normalized over pages),
/// shared uniformly among the hits it shows. The last page may be partial.
pub fn page_grouped_click_prob<T: Real>(r: usize, n: usize, alpha: T, page_size: usize) -> Result<T> {
    check_position(r, n)?;
    if page_size == 0 {
        return Err(Error::invalid("page_size must be at least 1"));
    }
    let pages = n.div_ceil(page_size);
    let page = r.div_ceil(page_size);
    let on_page = if page == pages { n - (pages - 1) * page_size } else { page_size };
    Ok(T::of_usize(page).powf(-alpha) / harmonic(pages, alpha) / T::of_usize(on_page))
}

/// Position-dependent click model used inside a hit list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClickModel {
    /// `r^-alpha` in the absolute position.
    #[default]
    Absolute,
    /// `q^-alpha` in the result page `q`, uniform within a page.
    PageGrouped { page_size: usize },
}

impl ClickModel {
    /// Click probabilities for every position of a list of `n` hits.
    pub fn weights<T: Real>(&self, n: usize, alpha: T) -> Vec<T> {
        match *self {
            ClickModel::Absolute => {
                let norm = harmonic(n, alpha);
                (1..=n).map(|r| T::of_usize(r).powf(-alpha) / norm).collect()
            }
            ClickModel::PageGrouped { page_size } => (1..=n)
                .map(|r| page_grouped_click_prob(r, n, alpha, page_size.max(1)).expect("position in range"))
                .collect(),
        }
    }
}

fn normalized<T: Real>(values: Vec<T>) -> Result<Vec<T>> {
    let total = compensated_sum(values.iter().copied());
    if !(total > T::zero() && total.is_finite()) {
        return Err(Error::invalid("traffic weights sum to zero"));
    }
    Ok(values.into_iter().map(|v| v / total).collect())
}

fn check_degrees<T: Real>(k: &[T]) -> Result<()> {
    match k.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
        Some(v) => Err(Error::invalid(format!("in-degree must be finite and nonnegative, got {v}"))),
        None => Ok(()),
    }
}

/// Random-surfer traffic, proportional to in-degree.
pub fn surfing_traffic<T: Real>(in_degrees: &[T]) -> Result<Vec<T>> {
    check_degrees(in_degrees)?;
    normalized(in_degrees.to_vec())
}

/// Naive search-engine traffic, `t ~ k^(alpha beta)`.
pub fn naive_search_traffic<T: Real>(in_degrees: &[T], alpha: T, beta: T) -> Result<Vec<T>> {
    check_degrees(in_degrees)?;
    let gamma = alpha * beta;
    normalized(
        in_degrees
            .iter()
            .map(|&k| if k == T::zero() { T::zero() } else { k.powf(gamma) })
            .collect(),
    )
}

/// `lambda * surf + (1 - lambda) * search`.
pub fn mixture_traffic<T: Real>(surf: &[T], search: &[T], lambda: T) -> Result<Vec<T>> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::invalid(format!("mixture weight must lie in [0, 1], got {lambda}")));
    }
    if surf.len() != search.len() {
        return Err(Error::invalid("traffic vectors differ in length"));
    }
    Ok(surf
        .iter()
        .zip(search)
        .map(|(&a, &b)| lambda * a + (T::one() - lambda) * b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sum(v: &[f64]) -> f64 {
        compensated_sum(v.iter().copied())
    }

    #[test]
    fn surfing_is_proportional() {
        assert_eq!(surfing_traffic(&[1.0f64; 4]).unwrap(), vec![0.25; 4]);
        assert_eq!(surfing_traffic(&[3.0f64, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert!(surfing_traffic(&[0.0f64, 0.0]).is_err());
        assert!(surfing_traffic(&[-1.0f64, 2.0]).is_err());
    }

    #[test]
    fn click_prob_examples() {
        assert_eq!(click_prob_from_rank(1, 1, 1.63f64).unwrap(), 1.0);
        assert_relative_eq!(click_prob_from_rank(2, 2, 1.0f64).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(click_prob_from_rank(3, 2, 1.0f64).is_err());
        assert!(click_prob_from_rank(0, 2, 1.0f64).is_err());
    }

    #[test]
    fn page_grouping_reduces_with_unit_pages() {
        for n in 1..30 {
            for r in 1..=n {
                assert_relative_eq!(
                    page_grouped_click_prob(r, n, 1.63f64, 1).unwrap(),
                    click_prob_from_rank(r, n, 1.63f64).unwrap(),
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn two_full_pages() {
        let a = 1.63f64;
        let p: Vec<f64> = (1..=20).map(|r| page_grouped_click_prob(r, 20, a, 10).unwrap()).collect();
        let first = 1.0 / (1.0 + 2f64.powf(-a)) / 10.0;
        for (r, &v) in p.iter().enumerate() {
            let expect = if r < 10 { first } else { first * 2f64.powf(-a) };
            assert_relative_eq!(v, expect, max_relative = 1e-14);
        }
        assert_relative_eq!(sum(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_last_page() {
        let p: Vec<f64> = (1..=13).map(|r| page_grouped_click_prob(r, 13, 1.0, 10).unwrap()).collect();
        // Pages of 10 and 3 hits with masses 2/3 and 1/3.
        assert_relative_eq!(p[0], 2.0 / 30.0, max_relative = 1e-14);
        assert_relative_eq!(p[12], 1.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(sum(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn naive_search_examples() {
        let k = [5.0f64, 2.0, 7.0, 0.0];
        assert_eq!(naive_search_traffic(&k, 1.0, 1.0).unwrap(), surfing_traffic(&k).unwrap());
        let t = naive_search_traffic(&[4.0f64, 1.0], 1.63, 1.1).unwrap();
        assert_relative_eq!(t[0] / t[1], 4f64.powf(1.63 * 1.1), max_relative = 1e-12);
        // 4^1.793 = 8 * 2^0.586, evaluated by hand.
        assert!((t[0] / t[1] - 12.009).abs() < 1e-3, "{}", t[0] / t[1]);
        let t = naive_search_traffic(&[10.0f64, 100.0, 1000.0], 1.63, 1.1).unwrap();
        let slope = (t[2] / t[0]).log10() / 2.0;
        assert_relative_eq!(slope, 1.793, max_relative = 1e-12);
    }

    #[test]
    fn mixture_examples() {
        let surf = [1.0f64, 0.0];
        let search = [0.0f64, 1.0];
        assert_eq!(mixture_traffic(&surf, &search, 1.0).unwrap(), surf.to_vec());
        assert_eq!(mixture_traffic(&surf, &search, 0.0).unwrap(), search.to_vec());
        assert_eq!(mixture_traffic(&surf, &search, 0.5).unwrap(), vec![0.5, 0.5]);
        assert!(mixture_traffic(&surf, &search, 1.5).is_err());
        assert!(mixture_traffic(&surf, &search, -0.1).is_err());
    }

    #[test]
    fn harmonic_table_matches_direct_sum() {
        let t = harmonic_table(50, 1.63f64);
        for n in [0, 1, 7, 50] {
            assert_relative_eq!(t[n], harmonic(n, 1.63f64), max_relative = 1e-14);
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::<f64>::default().validate().is_ok());
        let p = ModelParams::<f64> { page_size: 0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ModelParams::<f64> { alpha: f64::NAN, ..Default::default() };
        assert!(p.validate().is_err());
        assert_relative_eq!(ModelParams::<f64>::default().naive_gamma(), 1.793, epsilon = 1e-12);
    }

    #[test]
    fn f32_click_weights_sum_to_one() {
        let w = ClickModel::Absolute.weights(1000, 1.63f32);
        assert!((w.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn click_probs_normalized(n in 1usize..300, alpha in 0.1f64..3.0, page in 1usize..25) {
            let abs = ClickModel::Absolute.weights(n, alpha);
            let grouped = ClickModel::PageGrouped { page_size: page }.weights(n, alpha);
            prop_assert!((sum(&abs) - 1.0).abs() < 1e-12);
            prop_assert!((sum(&grouped) - 1.0).abs() < 1e-12);
            for w in abs.windows(2) {
                prop_assert!(w[0] > w[1]);
            }
        }

        #[test]
        fn traffic_vectors_normalized(
            k in proptest::collection::vec(0u32..10_000, 2..100),
            lambda in 0.0f64..=1.0,
        ) {
            let k: Vec<f64> = k.iter().map(|&v| v as f64 + 1.0).collect();
            let surf = surfing_traffic(&k).unwrap();
            let search = naive_search_traffic(&k, 1.63, 1.1).unwrap();
            let mix = mixture_traffic(&surf, &search, lambda).unwrap();
            for v in [&surf, &search, &mix] {
                prop_assert!((sum(v) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn surfing_is_permutation_equivariant(
            k in proptest::collection::vec(1u32..1000, 2..50),
            rot in 0usize..50,
        ) {
            let k: Vec<f64> = k.iter().map(|&v| v as f64).collect();
            let rot = rot % k.len();
            let mut kr = k.clone();
            kr.rotate_left(rot);
            let mut t = surfing_traffic(&k).unwrap();
            t.rotate_left(rot);
            let tr = surfing_traffic(&kr).unwrap();
            for (a, b) in t.iter().zip(&tr) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }

        #[test]
        fn naive_search_favours_top_node(
            k in proptest::collection::vec(1u32..1000, 2..50),
            alpha in 0.5f64..2.5,
            beta in 0.5f64..2.0,
        ) {
            prop_assume!(alpha * beta > 1.0);
            let k: Vec<f64> = k.iter().map(|&v| v as f64).collect();
            let top = (0..k.len()).max_by(|&a, &b| k[a].partial_cmp(&k[b]).unwrap()).unwrap();
            let surf = surfing_traffic(&k).unwrap();
            let search = naive_search_traffic(&k, alpha, beta).unwrap();
            prop_assert!(search[top] >= surf[top] * (1.0 - 1e-12));
        }
    }
}
