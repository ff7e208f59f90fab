//! Global rank by descending score, and the rank/score/in-degree relations
//! derived from it.

use serde::Serialize;

use crate::analysis::{fit_power_law, log_bin, BinMean, FitResult, DEFAULT_BINS_PER_DECADE};
use crate::error::{Error, Result};
use crate::graph::WebGraph;
use crate::scalar::Real;

/// Pages sorted by descending score. Ranks are 1-based, node ids 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankTable {
    order: Vec<usize>,
    rank_of: Vec<usize>,
}

impl RankTable {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Node ids from best (rank 1) to worst.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Node holding global rank `rank` (1-based).
    pub fn node_at(&self, rank: usize) -> usize {
        self.order[rank - 1]
    }

    /// Global rank of `node`.
    pub fn rank_of(&self, node: usize) -> usize {
        self.rank_of[node]
    }
}

/// Sorts nodes by descending score; ties go to the lower node id.
pub fn build_rank_table<T: Real>(scores: &[T]) -> Result<RankTable> {
    if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(Error::invalid(format!("score of node {i} is not finite: {s}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores compare")
            .then(a.cmp(&b))
    });
    let mut rank_of = vec![0usize; scores.len()];
    for (r, &node) in order.iter().enumerate() {
        rank_of[node] = r + 1;
    }
    Ok(RankTable { order, rank_of })
}

/// Fits the exponent `beta` of `R ~ score^-beta` over global ranks in
/// `rank_range` (inclusive), on geometric log bins of the score. The
/// returned `exponent` is `beta`, i.e. the negated log-log slope.
pub fn rank_vs_score_exponent<T: Real>(
    table: &RankTable,
    scores: &[T],
    rank_range: (usize, usize),
) -> Result<FitResult<T>> {
    if scores.len() != table.len() {
        return Err(Error::invalid("score vector does not match the rank table"));
    }
    let (lo, hi) = rank_range;
    let hi = hi.min(table.len());
    if lo == 0 || lo > hi {
        return Err(Error::invalid(format!("invalid rank range {rank_range:?}")));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for r in lo..=hi {
        let s = scores[table.node_at(r)];
        if s > T::zero() {
            xs.push(s);
            ys.push(T::of_usize(r));
        }
    }
    let curve = log_bin(&xs, &ys, DEFAULT_BINS_PER_DECADE, BinMean::Geometric)?;
    let mut fit = fit_power_law(&curve, None)?;
    fit.exponent = -fit.exponent;
    Ok(fit)
}

/// In-degree implied by global rank, `k(R) = (N / R)^(1 / beta)`, so that
/// the last page has `k = 1`.
pub fn rank_to_indegree<T: Real>(rank: usize, n: usize, beta: T) -> Result<T> {
    if rank == 0 || rank > n {
        return Err(Error::invalid(format!("rank {rank} outside 1..={n}")));
    }
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    Ok((T::of_usize(n) / T::of_usize(rank)).powf(T::one() / beta))
}

/// How global rank is turned into in-degree.
#[derive(Debug, Clone, PartialEq)]
pub enum IndegreeMapping<T> {
    /// `k(R) = (N / R)^(1 / beta)`.
    PowerLaw { beta: T },
    /// Observed in-degree of the page at each rank, indexed by `R - 1`.
    Observed(Vec<T>),
}

impl<T: Real> IndegreeMapping<T> {
    /// Uses a graph's in-degrees ordered by the given ranking.
    pub fn from_graph(graph: &WebGraph, table: &RankTable) -> Self {
        IndegreeMapping::Observed(
            table
                .order()
                .iter()
                .map(|&node| T::of(graph.in_degree(node) as f64))
                .collect(),
        )
    }

    pub fn indegree(&self, rank: usize, n: usize) -> Result<T> {
        match self {
            IndegreeMapping::PowerLaw { beta } => rank_to_indegree(rank, n, *beta),
            IndegreeMapping::Observed(ks) => ks
                .get(rank.wrapping_sub(1))
                .copied()
                .ok_or_else(|| Error::invalid(format!("rank {rank} outside observed mapping"))),
        }
    }
}
