//! PageRank by power iteration.
//!
//! Each iteration computes, for every node `i`,
//!
//! ```text
//! p'(i) = (1 - d) / N + d * ( sum_{j -> i} p(j) / out(j) + D / N )
//! ```
//!
//! where `D` is the total score held by dangling nodes. The new vector is
//! renormalized to sum 1 and the iteration stops once the L1 change drops
//! below the tolerance.
//!
//! Nodes are split into a fixed number of contiguous partitions that are
//! updated in parallel. Every score is a pure function of the previous
//! vector with a fixed summation order, so the result does not depend on
//! the partition count or the thread pool.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{log_bin, BinMean, BinnedCurve};
use crate::error::{Error, Result};
use crate::graph::WebGraph;
use crate::scalar::{compensated_sum, Real};

pub const DEFAULT_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankOptions<T> {
    pub damping: T,
    pub tol: T,
    pub max_iter: usize,
    pub partitions: usize,
}

impl<T: Real> Default for PageRankOptions<T> {
    fn default() -> Self {
        Self {
            damping: T::of(DEFAULT_DAMPING),
            tol: T::of(1e-10),
            max_iter: 1000,
            partitions: 16,
        }
    }
}

impl<T: Real> PageRankOptions<T> {
    /// Defaults with the tolerance used for large graphs (`N >= 10^5`).
    pub fn for_graph(graph: &WebGraph) -> Self {
        let tol = if graph.node_count() >= 100_000 { 1e-8 } else { 1e-10 };
        Self {
            tol: T::of(tol),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageRankVector<T> {
    pub scores: Vec<T>,
    pub damping: T,
    pub iterations_used: usize,
    pub residual: T,
    pub partitions: usize,
    /// L1 change after each iteration.
    pub residual_history: Vec<T>,
}

pub fn compute_pagerank<T: Real>(graph: &WebGraph, opts: &PageRankOptions<T>) -> Result<PageRankVector<T>> {
    let d = opts.damping;
    if !(d > T::zero() && d < T::one()) {
        return Err(Error::invalid(format!("damping must lie in (0, 1), got {d}")));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::invalid(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.partitions == 0 {
        return Err(Error::invalid("partitions must be positive"));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::invalid("graph has no nodes"));
    }

    let (in_offsets, in_sources) = graph.transpose();
    let out_deg: Vec<usize> = (0..n).map(|i| graph.out_degree(i)).collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| out_deg[i] == 0).collect();
    let nf = T::of_usize(n);
    let chunk = n.div_ceil(opts.partitions);

    let mut scores = vec![T::one() / nf; n];
    let mut next = vec![T::zero(); n];
    let mut share = vec![T::zero(); n];
    let mut history = Vec::new();

    for iteration in 1..=opts.max_iter {
        for i in 0..n {
            share[i] = if out_deg[i] > 0 {
                scores[i] / T::of_usize(out_deg[i])
            } else {
                T::zero()
            };
        }
        let dangling_mass = compensated_sum(dangling.iter().map(|&i| scores[i]));
        let base = (T::one() - d) / nf + d * dangling_mass / nf;

        next.par_chunks_mut(chunk).enumerate().for_each(|(c, out)| {
            let start = c * chunk;
            for (offset, slot) in out.iter_mut().enumerate() {
                let i = start + offset;
                let inflow = compensated_sum(
                    in_sources[in_offsets[i]..in_offsets[i + 1]]
                        .iter()
                        .map(|&j| share[j as usize]),
                );
                *slot = base + d * inflow;
            }
        });

        let total = compensated_sum(next.iter().copied());
        for v in next.iter_mut() {
            *v /= total;
        }
        let residual = compensated_sum(next.iter().zip(&scores).map(|(a, b)| (*a - *b).abs()));
        std::mem::swap(&mut scores, &mut next);
        history.push(residual);

        if residual < opts.tol {
            return Ok(PageRankVector {
                scores,
                damping: d,
                iterations_used: iteration,
                residual,
                partitions: opts.partitions,
                residual_history: history,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: history.last().map(|r| r.as_f64()).unwrap_or(f64::INFINITY),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeCurve<T> {
    pub curve: BinnedCurve<T>,
    /// Nodes with `k = 0`, which have no logarithmic bin.
    pub zero_degree_nodes: usize,
    pub zero_degree_mean_score: Option<T>,
}

/// Mean PageRank over logarithmic bins of in-degree.
pub fn pagerank_vs_indegree_curve<T: Real>(
    graph: &WebGraph,
    pr: &PageRankVector<T>,
    bins_per_decade: usize,
) -> Result<DegreeCurve<T>> {
    if pr.scores.len() != graph.node_count() {
        return Err(Error::invalid("PageRank vector does not match the graph"));
    }
    let mut ks = Vec::new();
    let mut ps = Vec::new();
    let mut zero = Vec::new();
    for (i, &k) in graph.in_degrees().iter().enumerate() {
        if k == 0 {
            zero.push(pr.scores[i]);
        } else {
            ks.push(T::of(k as f64));
            ps.push(pr.scores[i]);
        }
    }
    let curve = log_bin(&ks, &ps, bins_per_decade, BinMean::Arithmetic)?;
    let zero_degree_mean_score = if zero.is_empty() {
        None
    } else {
        Some(compensated_sum(zero.iter().copied()) / T::of_usize(zero.len()))
    };
    Ok(DegreeCurve {
        curve,
        zero_degree_nodes: zero.len(),
        zero_degree_mean_score,
    })
}
