//! Named pipelines that regenerate each model curve, with manifests.
//!
//! A run writes its CSV files, `manifest.json` (resolved config, fitted
//! exponents, runtimes, version), `summary.txt` and `resolved.cfg` into the
//! output directory. `resolved.cfg` reproduces the run exactly. A `.lock`
//! file keeps concurrent runs out of the same directory, and a failed run
//! removes whatever it had written.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    estimate_pdf_logbins, fit_power_law, fixed_h_shape, flatness_ratio, log_bin, traffic_vs_indegree, BinMean,
    BinnedCurve, FitResult,
};
use crate::click_models::ClickModel;
use crate::config::{Experiment, ExperimentConfig, MappingKind};
use crate::error::{Error, Result};
use crate::graph::{generate_scale_free_digraph, GeneratorConfig, WebGraph};
use crate::hit_simulator::{
    collapse_fixed_h, collapse_over_n, convolved_traffic, monte_carlo_traffic, CollapseResult, HitSetDistribution,
    SimulationConfig, TrafficCurve,
};
use crate::io::{save_curve, write_binned_with_header, write_collapse_csv, write_json, write_rows, VERSION};
use crate::pagerank::{compute_pagerank, pagerank_vs_indegree_curve, DegreeCurve, PageRankOptions, PageRankVector};
use crate::ranking::{build_rank_table, rank_vs_score_exponent, IndegreeMapping};

/// In-degree range (and PageRank range, in units of `1/E`) of the density
/// and PageRank–in-degree fits on generated graphs.
pub const DEGREE_FIT_RANGE: (f64, f64) = (10.0, 1000.0);

/// Global-rank range of the rank–PageRank fit.
pub const RANK_FIT_RANGE: (usize, usize) = (10, 10_000);

/// Exponents measured on a generated graph and its PageRank.
#[derive(Debug, Clone, Serialize)]
pub struct GraphStudy {
    /// Density of `k > 0` on log bins.
    pub indegree_pdf: BinnedCurve<f64>,
    /// Density of `p E` (PageRank in in-degree units) on log bins.
    pub pagerank_pdf: BinnedCurve<f64>,
    pub pagerank_vs_indegree: DegreeCurve<f64>,
    /// Slopes; the density exponents are the negated slopes.
    pub indegree_pdf_fit: FitResult<f64>,
    pub pagerank_pdf_fit: FitResult<f64>,
    pub pagerank_vs_indegree_fit: FitResult<f64>,
    /// `beta` in `R ~ p^-beta`.
    pub rank_fit: FitResult<f64>,
}

pub fn graph_study(graph: &WebGraph, pr: &PageRankVector<f64>, bins_per_decade: usize) -> Result<GraphStudy> {
    let ks: Vec<f64> = graph.in_degrees().iter().filter(|&&k| k > 0).map(|&k| k as f64).collect();
    let edges = graph.edge_count() as f64;
    let ps: Vec<f64> = pr.scores.iter().map(|&p| p * edges).collect();
    let indegree_pdf = estimate_pdf_logbins(&ks, bins_per_decade)?;
    let pagerank_pdf = estimate_pdf_logbins(&ps, bins_per_decade)?;
    let pk = pagerank_vs_indegree_curve(graph, pr, bins_per_decade)?;
    let table = build_rank_table(&pr.scores)?;
    let (lo, hi) = RANK_FIT_RANGE;
    Ok(GraphStudy {
        indegree_pdf_fit: fit_power_law(&indegree_pdf, Some(DEGREE_FIT_RANGE))?,
        pagerank_pdf_fit: fit_power_law(&pagerank_pdf, Some(DEGREE_FIT_RANGE))?,
        pagerank_vs_indegree_fit: fit_power_law(&pk.curve, Some(DEGREE_FIT_RANGE))?,
        rank_fit: rank_vs_score_exponent(&table, &pr.scores, (lo, hi.min(graph.node_count())))?,
        indegree_pdf,
        pagerank_pdf,
        pagerank_vs_indegree: pk,
    })
}

/// What a finished run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub fits: BTreeMap<String, Value>,
    pub runtimes_secs: BTreeMap<String, f64>,
    pub summary: Vec<String>,
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    files: Vec<PathBuf>,
    fits: BTreeMap<String, Value>,
    runtimes: BTreeMap<String, f64>,
    summary: Vec<String>,
}

impl<'a> Run<'a> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> Result<R>) -> Result<R> {
        let start = Instant::now();
        info!("{stage}");
        let out = f()?;
        self.runtimes.insert(stage.to_string(), start.elapsed().as_secs_f64());
        Ok(out)
    }

    fn fit(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.fits.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn save_curve(&mut self, curve: &TrafficCurve<f64>, stem: &str) -> Result<()> {
        let stem = self.dir.join(stem);
        // Register first so a failure halfway still cleans up.
        let (a, b, c) = crate::io::bundle_paths(&stem);
        self.files.extend([a, b, c]);
        save_curve(curve, &stem, self.cfg.bins_per_decade)?;
        Ok(())
    }

    fn sim(&self, n: usize, seed: u64) -> SimulationConfig<f64> {
        SimulationConfig {
            n,
            alpha: self.cfg.alpha,
            queries: self.cfg.queries,
            seed,
            display_cap: self.cfg.display_cap,
            click_model: match self.cfg.click_model {
                ClickModel::Absolute => ClickModel::Absolute,
                ClickModel::PageGrouped { .. } => ClickModel::PageGrouped {
                    page_size: self.cfg.page_size,
                },
            },
            bins_per_decade: self.cfg.bins_per_decade,
        }
    }

    fn distribution(&self, n: usize) -> Result<HitSetDistribution<f64>> {
        HitSetDistribution::new(self.cfg.delta, self.cfg.h_min.unwrap_or(1.0 / n as f64), self.cfg.h_max)
    }

    fn graph(&mut self, n: usize) -> Result<(WebGraph, PageRankVector<f64>)> {
        let cfg = self.cfg;
        let gen = GeneratorConfig::new(n, cfg.graph_out_links, cfg.graph_attractiveness, cfg.seed);
        let graph = self.timed("generate graph", || generate_scale_free_digraph(&gen))?;
        let opts = PageRankOptions {
            damping: cfg.damping,
            tol: cfg.pagerank_tol,
            max_iter: cfg.pagerank_max_iter,
            ..PageRankOptions::default()
        };
        let pr = self.timed("pagerank", || compute_pagerank(&graph, &opts))?;
        self.fit("pagerank_iterations", pr.iterations_used)?;
        if graph.forced_duplicates() > 0 {
            self.fit("forced_duplicate_links", graph.forced_duplicates())?;
        }
        Ok((graph, pr))
    }

    fn fixed_h_curves(&mut self) -> Result<Vec<TrafficCurve<f64>>> {
        let cfg = self.cfg;
        let mut curves = Vec::new();
        for (i, &h) in cfg.h_values.iter().enumerate() {
            let sim = self.sim(cfg.n, curve_seed(cfg.seed, i));
            let curve = self.timed(&format!("simulate h={h}"), || monte_carlo_traffic(&sim, h))?;
            self.save_curve(&curve, &format!("traffic_h{h}"))?;
            curves.push(curve);
        }
        Ok(curves)
    }

    fn fixed_h_traffic(&mut self) -> Result<()> {
        for curve in self.fixed_h_curves()? {
            let h = curve.fixed_h().expect("fixed h");
            let binned = curve.binned(self.cfg.bins_per_decade)?;
            match fixed_h_shape(&binned, h) {
                Ok(shape) => {
                    self.summary.push(format!(
                        "h = {h}: plateau max/min {:.3} over {} bins, tail slope {:.3} +- {:.3}",
                        shape.plateau_ratio, shape.plateau_bins, shape.tail.exponent, shape.tail.stderr
                    ));
                    self.fit(&format!("h={h}"), shape)?;
                }
                Err(e) => self.summary.push(format!("h = {h}: no tail fit ({e})")),
            }
        }
        Ok(())
    }

    fn convolved_traffic(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let dist = self.distribution(cfg.n)?;
        let sim = self.sim(cfg.n, cfg.seed);
        let curve = self.timed("simulate", || convolved_traffic(&sim, &dist))?;
        self.save_curve(&curve, "traffic")?;
        let mapping = match cfg.indegree_mapping {
            MappingKind::PowerLaw => IndegreeMapping::PowerLaw { beta: cfg.beta },
            MappingKind::Graph => {
                let (graph, pr) = self.graph(cfg.n)?;
                IndegreeMapping::from_graph(&graph, &build_rank_table(&pr.scores)?)
            }
        };
        let tk = traffic_vs_indegree(&curve, &mapping, cfg.beta, cfg.bins_per_decade)?;
        let path = self.path("traffic_vs_k.csv");
        write_binned_with_header(&tk.curve, &path, ["k_center", "t_mean", "t_stderr", "count"])?;
        let top = &curve.t[..tk.plateau_ranks.min(curve.n)];
        let top_ratio = flatness_ratio(top);
        self.summary.push(format!(
            "gamma_eff = {:.3} +- {:.3} over k in [{:.3}, {:.3}] (surfing 1, naive searching {:.3})",
            tk.fit.exponent, tk.fit.stderr, tk.fit.fit_range.0, tk.fit.fit_range.1, tk.naive_slope
        ));
        self.summary.push(format!("top {} ranks: max/min traffic {:.3}", top.len(), top_ratio));
        self.fit("gamma_eff", &tk.fit)?;
        self.fit("naive_gamma", tk.naive_slope)?;
        self.fit("top_ratio", top_ratio)?;
        Ok(())
    }

    fn pagerank_vs_indegree(&mut self) -> Result<()> {
        let (graph, pr) = self.graph(self.cfg.n)?;
        let study = graph_study(&graph, &pr, self.cfg.bins_per_decade)?;
        let path = self.path("pagerank_vs_indegree.csv");
        write_binned_with_header(&study.pagerank_vs_indegree.curve, &path, ["k_center", "p_mean", "p_stderr", "count"])?;
        let path = self.path("nodes.csv");
        write_rows(
            &path,
            &["node", "k", "p"],
            (0..graph.node_count()).map(|i| [i.to_string(), graph.in_degree(i).to_string(), pr.scores[i].to_string()]),
        )?;
        let fit = &study.pagerank_vs_indegree_fit;
        self.summary.push(format!(
            "p ~ k^{:.3} +- {:.3} over k in [{}, {}]",
            fit.exponent, fit.stderr, DEGREE_FIT_RANGE.0, DEGREE_FIT_RANGE.1
        ));
        self.fit("pagerank_vs_indegree", fit)?;
        Ok(())
    }

    fn pagerank_distribution(&mut self) -> Result<()> {
        let (graph, pr) = self.graph(self.cfg.n)?;
        let study = graph_study(&graph, &pr, self.cfg.bins_per_decade)?;
        let path = self.path("indegree_pdf.csv");
        write_binned_with_header(&study.indegree_pdf, &path, ["k_center", "pdf", "pdf_stderr", "count"])?;
        let path = self.path("pagerank_pdf.csv");
        write_binned_with_header(&study.pagerank_pdf, &path, ["pE_center", "pdf", "pdf_stderr", "count"])?;
        let table = build_rank_table(&pr.scores)?;
        let (ps, rs): (Vec<f64>, Vec<f64>) = table
            .order()
            .iter()
            .enumerate()
            .map(|(i, &node)| (pr.scores[node], (i + 1) as f64))
            .unzip();
        let rank_curve = log_bin(&ps, &rs, self.cfg.bins_per_decade, BinMean::Geometric)?;
        let path = self.path("rank_vs_pagerank.csv");
        write_binned_with_header(&rank_curve, &path, ["p_center", "rank_mean", "rank_stderr", "count"])?;
        self.summary.push(format!(
            "in-degree density exponent {:.3}, PageRank density exponent {:.3}, beta {:.3}",
            -study.indegree_pdf_fit.exponent, -study.pagerank_pdf_fit.exponent, study.rank_fit.exponent
        ));
        self.fit("indegree_pdf", &study.indegree_pdf_fit)?;
        self.fit("pagerank_pdf", &study.pagerank_pdf_fit)?;
        self.fit("beta", &study.rank_fit)?;
        Ok(())
    }

    fn write_collapse(&mut self, result: &CollapseResult<f64>) -> Result<()> {
        let path = self.path("collapse.csv");
        write_collapse_csv(result, &path)?;
        self.summary.push(format!(
            "max deviation {:.4} dex over [{:.4e}, {:.4e}]; scale factors {:?}",
            result.max_deviation, result.overlap.0, result.overlap.1, result.scale_factors
        ));
        self.fit("collapse", result_summary(result))?;
        Ok(())
    }

    fn fixed_h_collapse(&mut self) -> Result<()> {
        let curves = self.fixed_h_curves()?;
        let result = collapse_fixed_h(&curves, self.cfg.bins_per_decade)?;
        self.write_collapse(&result)
    }

    fn size_collapse(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut curves = Vec::new();
        for (i, &n) in cfg.n_values.iter().enumerate() {
            let dist = self.distribution(n)?;
            let sim = self.sim(n, curve_seed(cfg.seed, i));
            let curve = self.timed(&format!("simulate N={n}"), || convolved_traffic(&sim, &dist))?;
            self.save_curve(&curve, &format!("traffic_N{n}"))?;
            curves.push(curve);
        }
        let result = collapse_over_n(&curves, cfg.bins_per_decade)?;
        self.write_collapse(&result)
    }
}

fn result_summary(r: &CollapseResult<f64>) -> Value {
    json!({
        "kind": r.kind,
        "labels": r.labels,
        "scale_factors": r.scale_factors,
        "deviations": r.deviations,
        "max_deviation": r.max_deviation,
        "overlap": r.overlap,
    })
}

/// Seed of the `i`-th curve of a multi-curve pipeline.
pub fn curve_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Runs the configured pipeline into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    let created = !dir.exists();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let lock = match Lock::acquire(&dir) {
        Ok(l) => l,
        Err(e) => {
            if created {
                let _ = fs::remove_dir(&dir);
            }
            return Err(e);
        }
    };
    let mut run = Run {
        cfg,
        dir: dir.clone(),
        files: Vec::new(),
        fits: BTreeMap::new(),
        runtimes: BTreeMap::new(),
        summary: Vec::new(),
    };
    let start = Instant::now();
    let result = match cfg.experiment {
        Experiment::FixedHTraffic => run.fixed_h_traffic(),
        Experiment::ConvolvedTraffic => run.convolved_traffic(),
        Experiment::PagerankVsIndegree => run.pagerank_vs_indegree(),
        Experiment::PagerankDistribution => run.pagerank_distribution(),
        Experiment::FixedHCollapse => run.fixed_h_collapse(),
        Experiment::SizeCollapse => run.size_collapse(),
    }
    .and_then(|()| {
        run.runtimes.insert("total".into(), start.elapsed().as_secs_f64());
        write_outputs(&mut run)
    });
    if let Err(e) = result {
        for f in &run.files {
            let _ = fs::remove_file(f);
        }
        drop(lock);
        if created {
            let _ = fs::remove_dir(&dir);
        }
        return Err(e);
    }
    drop(lock);
    Ok(RunReport {
        experiment: cfg.experiment,
        output_dir: dir.clone(),
        files: run
            .files
            .iter()
            .map(|f| f.strip_prefix(&dir).unwrap_or(f).display().to_string())
            .collect(),
        fits: run.fits,
        runtimes_secs: run.runtimes,
        summary: run.summary,
    })
}

fn write_outputs(run: &mut Run<'_>) -> Result<()> {
    let cfg = run.cfg;
    let resolved = run.path("resolved.cfg");
    fs::write(&resolved, cfg.to_text()).map_err(|e| Error::io(&resolved, e))?;
    let files: Vec<String> = run
        .files
        .iter()
        .chain([&run.dir.join("manifest.json"), &run.dir.join("summary.txt")])
        .map(|f| f.strip_prefix(&run.dir).unwrap_or(f).display().to_string())
        .collect();
    let manifest = json!({
        "experiment": cfg.experiment,
        "version": VERSION,
        "config": cfg,
        "fits": run.fits,
        "runtimes_secs": run.runtimes,
        "files": files,
    });
    let path = run.path("manifest.json");
    write_json(&manifest, &path)?;
    let mut text = format!("{} (seed {}, version {VERSION})\n", cfg.experiment, cfg.seed);
    for line in &run.summary {
        text.push_str(line);
        text.push('\n');
    }
    let path = run.path("summary.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            output_dir: dir.to_path_buf(),
            n: 3000,
            n_values: vec![1000, 3000],
            h_values: vec![0.1, 0.01],
            queries: 2000,
            ..ExperimentConfig::defaults(experiment, 11)
        }
    }

    #[test]
    fn every_pipeline_runs_and_writes_manifest() {
        let root = tempfile::tempdir().unwrap();
        for e in Experiment::ALL {
            let dir = root.path().join(e.name());
            let report = run_experiment(&small(e, &dir)).unwrap();
            assert!(!dir.join(".lock").exists());
            for f in &report.files {
                assert!(dir.join(f).exists(), "{e}: {f}");
            }
            let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
            assert_eq!(manifest["experiment"], e.name());
            assert_eq!(manifest["config"]["seed"], 11);
            let resolved = ExperimentConfig::load(&dir.join("resolved.cfg")).unwrap();
            assert_eq!(resolved, small(e, &dir));
        }
    }

    #[test]
    fn rerun_is_byte_identical() {
        let root = tempfile::tempdir().unwrap();
        let a = root.path().join("a");
        let b = root.path().join("b");
        run_experiment(&small(Experiment::FixedHTraffic, &a)).unwrap();
        let report = run_experiment(&small(Experiment::FixedHTraffic, &b)).unwrap();
        for f in report.files.iter().filter(|f| f.ends_with(".csv")) {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn locked_directory_is_refused() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join(".lock"), "").unwrap();
        let err = run_experiment(&small(Experiment::FixedHTraffic, root.path())).unwrap_err();
        assert!(matches!(err, Error::Locked(_)));
        assert!(root.path().join(".lock").exists());
    }

    #[test]
    fn failure_removes_partial_outputs() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("out");
        // The single curve is written before the collapse refuses it.
        let cfg = ExperimentConfig {
            h_values: vec![0.1],
            ..small(Experiment::FixedHCollapse, &dir)
        };
        assert!(run_experiment(&cfg).is_err());
        assert!(!dir.exists());
    }
}
