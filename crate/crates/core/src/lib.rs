//! Search-engine traffic under finite hit lists: scale-free web graphs,
//! PageRank, click models, Monte Carlo hit-list simulation and the analysis
//! tools used to compare them.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`; [`single`] has the `f32` ones.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod click_models;
pub mod config;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod hit_simulator;
pub mod io;
pub mod pagerank;
pub mod ranking;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BinnedCurve = analysis::BinnedCurve<f64>;
pub type FitResult = analysis::FitResult<f64>;
pub type ModelParams = click_models::ModelParams<f64>;
pub type PageRankOptions = pagerank::PageRankOptions<f64>;
pub type PageRankVector = pagerank::PageRankVector<f64>;
pub type HitSetDistribution = hit_simulator::HitSetDistribution<f64>;
pub type SimulationConfig = hit_simulator::SimulationConfig<f64>;
pub type TrafficCurve = hit_simulator::TrafficCurve<f64>;
pub type CollapseResult = hit_simulator::CollapseResult<f64>;
pub type IndegreeMapping = ranking::IndegreeMapping<f64>;

/// Single-precision aliases.
pub mod single {
    use super::*;

    pub type BinnedCurve = analysis::BinnedCurve<f32>;
    pub type FitResult = analysis::FitResult<f32>;
    pub type ModelParams = click_models::ModelParams<f32>;
    pub type PageRankOptions = pagerank::PageRankOptions<f32>;
    pub type PageRankVector = pagerank::PageRankVector<f32>;
    pub type HitSetDistribution = hit_simulator::HitSetDistribution<f32>;
    pub type SimulationConfig = hit_simulator::SimulationConfig<f32>;
    pub type TrafficCurve = hit_simulator::TrafficCurve<f32>;
    pub type CollapseResult = hit_simulator::CollapseResult<f32>;
    pub type IndegreeMapping = ranking::IndegreeMapping<f32>;
}
