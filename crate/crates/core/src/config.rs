//! Experiment configuration: a flat `key = value` text file.
//!
//! `#` starts a comment. Unknown keys, malformed values and out-of-range
//! parameters are all collected and reported together, each with its line.
//! Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::click_models::ClickModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Monte Carlo traffic at several fixed hit fractions.
    FixedHTraffic,
    /// Traffic convolved over the hit-set distribution, mapped to in-degree.
    ConvolvedTraffic,
    /// Binned PageRank against in-degree on a generated graph.
    PagerankVsIndegree,
    /// PageRank and in-degree densities, and rank against PageRank.
    PagerankDistribution,
    /// `t/h` against `R h` for several fixed hit fractions.
    FixedHCollapse,
    /// Convolved traffic for several index sizes against `R / N`.
    SizeCollapse,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::FixedHTraffic,
        Experiment::ConvolvedTraffic,
        Experiment::PagerankVsIndegree,
        Experiment::PagerankDistribution,
        Experiment::FixedHCollapse,
        Experiment::SizeCollapse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FixedHTraffic => "fixed-h-traffic",
            Experiment::ConvolvedTraffic => "convolved-traffic",
            Experiment::PagerankVsIndegree => "pagerank-vs-indegree",
            Experiment::PagerankDistribution => "pagerank-distribution",
            Experiment::FixedHCollapse => "fixed-h-collapse",
            Experiment::SizeCollapse => "size-collapse",
        }
    }

    /// Short name after the figure the pipeline regenerates.
    pub fn alias(self) -> &'static str {
        match self {
            Experiment::FixedHTraffic => "fig3a",
            Experiment::ConvolvedTraffic => "fig3c",
            Experiment::PagerankVsIndegree => "suppl2",
            Experiment::PagerankDistribution => "suppl3",
            Experiment::FixedHCollapse => "suppl7",
            Experiment::SizeCollapse => "suppl1",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s || e.alias() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment {s:?} (expected one of {})", names.join(", "))
            })
    }
}

/// How global rank is turned into in-degree for traffic-vs-k curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    /// `k = (N/R)^(1/beta)`.
    PowerLaw,
    /// In-degrees of a generated graph ranked by PageRank.
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub delta: f64,
    pub damping: f64,
    pub page_size: usize,
    pub h_values: Vec<f64>,
    /// Defaults to `1/N` for each index size.
    pub h_min: Option<f64>,
    pub h_max: f64,
    pub n_values: Vec<usize>,
    pub queries: u64,
    pub display_cap: Option<usize>,
    pub click_model: ClickModel,
    pub graph_out_links: usize,
    pub graph_attractiveness: f64,
    pub indegree_mapping: MappingKind,
    pub bins_per_decade: usize,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
}

impl ExperimentConfig {
    /// Defaults for `experiment`; the seed still has to be chosen.
    pub fn defaults(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            output_dir: PathBuf::from("out").join(experiment.name()),
            n: 100_000,
            alpha: 1.63,
            beta: 1.1,
            mu: 2.1,
            delta: 1.1,
            damping: 0.85,
            page_size: 10,
            h_values: vec![0.1, 0.01, 0.001],
            h_min: None,
            h_max: 0.1,
            n_values: vec![10_000, 30_000, 100_000],
            queries: 1_000_000,
            display_cap: Some(1000),
            click_model: ClickModel::Absolute,
            graph_out_links: 7,
            graph_attractiveness: 0.7,
            indegree_mapping: MappingKind::PowerLaw,
            bins_per_decade: 10,
            pagerank_tol: 1e-10,
            pagerank_max_iter: 1000,
        }
    }

    /// Parses a config file's text, reporting every problem at once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut errors = Vec::new();
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(format!("line {line}: expected `key = value`, got {content:?}"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                errors.push(format!("line {line}: unknown key {key:?}"));
                continue;
            }
            if let Some((first, _)) = entries.insert(key, (line, value)) {
                errors.push(format!("line {line}: duplicate key {key:?} (first set on line {first})"));
            }
        }

        let experiment = match entries.get("experiment") {
            Some(&(line, v)) => match v.parse::<Experiment>() {
                Ok(e) => Some(e),
                Err(msg) => {
                    errors.push(format!("line {line}: {msg}"));
                    None
                }
            },
            None => {
                errors.push("missing key \"experiment\"".to_string());
                None
            }
        };
        let seed = match entries.get("seed") {
            Some(&(line, v)) => match v.parse::<u64>() {
                Ok(s) => Some(s),
                Err(_) => {
                    errors.push(format!("line {line}: seed must be a nonnegative integer, got {v:?}"));
                    None
                }
            },
            None => {
                errors.push("seed required for reproducibility".to_string());
                None
            }
        };
        let mut cfg = Self::defaults(experiment.unwrap_or(Experiment::FixedHTraffic), seed.unwrap_or(0));
        for (&key, &(line, value)) in &entries {
            if let Err(msg) = cfg.set(key, value) {
                errors.push(format!("line {line}: {key}: {msg}"));
            }
        }
        for (key, msg) in cfg.range_errors() {
            match entries.get(key) {
                Some(&(line, _)) => errors.push(format!("line {line}: {key}: {msg}")),
                None => errors.push(format!("{key}: {msg}")),
            }
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks ranges; returns the same aggregated error as [`Self::parse`].
    pub fn validate(&self) -> Result<()> {
        let errors: Vec<String> = self
            .range_errors()
            .into_iter()
            .map(|(k, m)| format!("{k}: {m}"))
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        fn num<F: FromStr>(v: &str) -> std::result::Result<F, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn list<F: FromStr>(v: &str) -> std::result::Result<Vec<F>, String> {
            v.split(',').map(|s| num(s.trim())).collect()
        }
        match key {
            "experiment" | "seed" => {}
            "output_dir" => self.output_dir = PathBuf::from(v),
            "n" => self.n = num(v)?,
            "alpha" => self.alpha = num(v)?,
            "beta" => self.beta = num(v)?,
            "mu" => self.mu = num(v)?,
            "delta" => self.delta = num(v)?,
            "damping" => self.damping = num(v)?,
            "page_size" => self.page_size = num(v)?,
            "h_values" => self.h_values = list(v)?,
            "h_min" => {
                self.h_min = match v {
                    "auto" => None,
                    _ => Some(num(v)?),
                }
            }
            "h_max" => self.h_max = num(v)?,
            "n_values" => self.n_values = list(v)?,
            "queries" => self.queries = num(v)?,
            "display_cap" => {
                self.display_cap = match v {
                    "none" => None,
                    _ => Some(num(v)?),
                }
            }
            "click_model" => {
                self.click_model = match v {
                    "absolute" => ClickModel::Absolute,
                    "page-grouped" => ClickModel::PageGrouped { page_size: self.page_size },
                    _ => return Err(format!("expected absolute or page-grouped, got {v:?}")),
                }
            }
            "graph_out_links" => self.graph_out_links = num(v)?,
            "graph_attractiveness" => self.graph_attractiveness = num(v)?,
            "indegree_mapping" => {
                self.indegree_mapping = match v {
                    "power-law" => MappingKind::PowerLaw,
                    "graph" => MappingKind::Graph,
                    _ => return Err(format!("expected power-law or graph, got {v:?}")),
                }
            }
            "bins_per_decade" => self.bins_per_decade = num(v)?,
            "pagerank_tol" => self.pagerank_tol = num(v)?,
            "pagerank_max_iter" => self.pagerank_max_iter = num(v)?,
            _ => unreachable!("key list checked by the caller"),
        }
        // The page size may be set after the click model.
        if let ClickModel::PageGrouped { page_size } = &mut self.click_model {
            *page_size = self.page_size;
        }
        Ok(())
    }

    fn range_errors(&self) -> Vec<(&'static str, String)> {
        let mut e = Vec::new();
        let mut positive = |key: &'static str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                e.push((key, format!("must be positive, got {v}")));
            }
        };
        positive("alpha", self.alpha);
        positive("beta", self.beta);
        positive("mu", self.mu);
        positive("delta", self.delta);
        positive("pagerank_tol", self.pagerank_tol);
        if !(self.damping > 0.0 && self.damping < 1.0) {
            e.push(("damping", format!("must lie in (0, 1), got {}", self.damping)));
        }
        if self.graph_attractiveness.is_nan() || self.graph_attractiveness < 0.0 {
            e.push(("graph_attractiveness", format!("must be nonnegative, got {}", self.graph_attractiveness)));
        }
        if self.n < 2 || self.n > crate::hit_simulator::MAX_PAGES {
            e.push(("n", format!("must lie in 2..={}, got {}", crate::hit_simulator::MAX_PAGES, self.n)));
        }
        if self.n_values.iter().any(|n| !(2..=crate::hit_simulator::MAX_PAGES).contains(n)) {
            e.push(("n_values", "every index size must lie in 2..=10^7".to_string()));
        }
        if self.n_values.is_empty() {
            e.push(("n_values", "must not be empty".to_string()));
        }
        if self.h_values.is_empty() {
            e.push(("h_values", "must not be empty".to_string()));
        }
        if self.h_values.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
            e.push(("h_values", "every hit fraction must lie in (0, 1]".to_string()));
        }
        if !(self.h_max > 0.0 && self.h_max <= 1.0) {
            e.push(("h_max", format!("must lie in (0, 1], got {}", self.h_max)));
        }
        if let Some(h) = self.h_min {
            if !(h > 0.0 && h <= self.h_max) {
                e.push(("h_min", format!("must lie in (0, h_max], got {h}")));
            }
        }
        if self.queries == 0 {
            e.push(("queries", "must be at least 1".to_string()));
        }
        if self.page_size == 0 {
            e.push(("page_size", "must be at least 1".to_string()));
        }
        if self.display_cap == Some(0) {
            e.push(("display_cap", "must be at least 1, or none".to_string()));
        }
        if self.graph_out_links == 0 {
            e.push(("graph_out_links", "must be at least 1".to_string()));
        }
        if self.bins_per_decade == 0 {
            e.push(("bins_per_decade", "must be at least 1".to_string()));
        }
        if self.pagerank_max_iter == 0 {
            e.push(("pagerank_max_iter", "must be at least 1".to_string()));
        }
        e
    }

    /// The fully resolved config in the file format, defaults included.
    pub fn to_text(&self) -> String {
        fn join<D: fmt::Display>(v: &[D]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.to_string());
        kv("seed", self.seed.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("n", self.n.to_string());
        kv("alpha", self.alpha.to_string());
        kv("beta", self.beta.to_string());
        kv("mu", self.mu.to_string());
        kv("delta", self.delta.to_string());
        kv("damping", self.damping.to_string());
        kv("page_size", self.page_size.to_string());
        kv("h_values", join(&self.h_values));
        kv("h_min", self.h_min.map_or("auto".to_string(), |h| h.to_string()));
        kv("h_max", self.h_max.to_string());
        kv("n_values", join(&self.n_values));
        kv("queries", self.queries.to_string());
        kv("display_cap", self.display_cap.map_or("none".to_string(), |c| c.to_string()));
        kv(
            "click_model",
            match self.click_model {
                ClickModel::Absolute => "absolute",
                ClickModel::PageGrouped { .. } => "page-grouped",
            }
            .to_string(),
        );
        kv("graph_out_links", self.graph_out_links.to_string());
        kv("graph_attractiveness", self.graph_attractiveness.to_string());
        kv(
            "indegree_mapping",
            match self.indegree_mapping {
                MappingKind::PowerLaw => "power-law",
                MappingKind::Graph => "graph",
            }
            .to_string(),
        );
        kv("bins_per_decade", self.bins_per_decade.to_string());
        kv("pagerank_tol", self.pagerank_tol.to_string());
        kv("pagerank_max_iter", self.pagerank_max_iter.to_string());
        s
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "output_dir",
    "n",
    "alpha",
    "beta",
    "mu",
    "delta",
    "damping",
    "page_size",
    "h_values",
    "h_min",
    "h_max",
    "n_values",
    "queries",
    "display_cap",
    "click_model",
    "graph_out_links",
    "graph_attractiveness",
    "indegree_mapping",
    "bins_per_decade",
    "pagerank_tol",
    "pagerank_max_iter",
];
