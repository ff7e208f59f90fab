use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use ranktraffic_core::analysis::{fit_log_log, fit_power_law, log_bin, BinMean};
use ranktraffic_core::click_models::{mixture_traffic, naive_search_traffic, surfing_traffic, ClickModel};
use ranktraffic_core::config::ExperimentConfig;
use ranktraffic_core::experiments::run_experiment;
use ranktraffic_core::graph::{generate_scale_free_digraph, load_graph, save_graph, GeneratorConfig};
use ranktraffic_core::hit_simulator::{
    collapse_fixed_h, collapse_over_n, convolved_traffic, monte_carlo_traffic, DEFAULT_DISPLAY_CAP,
};
use ranktraffic_core::io::{load_curve, read_xy_csv, save_curve, write_collapse_csv, write_json, write_rows};
use ranktraffic_core::pagerank::compute_pagerank;
use ranktraffic_core::ranking::{build_rank_table, rank_to_indegree};
use ranktraffic_core::{Error, HitSetDistribution, PageRankOptions, SimulationConfig, TrafficCurve};

/// Search-engine traffic simulator: scale-free graphs, PageRank, click
/// models and finite hit-list Monte Carlo.
#[derive(Parser)]
#[command(name = "ranktraffic", version)]
struct Cli {
    /// Worker threads. Changes speed only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a directed scale-free graph and write its edge list.
    GenerateGraph {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 7)]
        out_degree: usize,
        #[arg(long, default_value_t = 0.7)]
        attractiveness: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// PageRank of every node, written as `node,k,p`.
    Pagerank {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        damping: f64,
        /// L1 convergence tolerance; 1e-8 for graphs of 10^5 nodes or more,
        /// 1e-10 otherwise.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rank nodes by score, written as `node,R,score,k_est`.
    Rank {
        /// CSV with a `node` column and a `score` or `p` column.
        #[arg(long)]
        scores: PathBuf,
        /// Rank-score exponent used for the in-degree estimate.
        #[arg(long, default_value_t = 1.1)]
        beta: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Closed-form traffic per node, written as `node,k,t`.
    Baseline {
        #[arg(long, value_enum)]
        model: Baseline,
        #[arg(long)]
        graph: PathBuf,
        /// `key = value` lines setting alpha, beta or lambda.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Exact traffic for a fixed hit fraction.
    Exact {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.63)]
        alpha: f64,
        /// Output stem: writes STEM.csv, STEM_binned.csv and STEM.json.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: usize,
    },
    /// Monte Carlo traffic for a fixed hit fraction.
    Simulate {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Monte Carlo traffic with the hit fraction drawn per query.
    Convolve {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1.1)]
        delta: f64,
        /// Smallest hit fraction; defaults to 1/N.
        #[arg(long)]
        hmin: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        hmax: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Rescale saved curves onto one another.
    Collapse {
        #[arg(value_enum)]
        kind: CollapseArg,
        /// Raw `R,t` CSVs, each next to its `.json` manifest.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Writes the rescaled points here and the summary beside it as JSON.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: usize,
    },
    /// Least-squares power law on log-log axes of an `x,y` CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        range: Option<Vec<f64>>,
        /// Fit the points as given instead of averaging them in log bins.
        #[arg(long)]
        no_bin: bool,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: usize,
    },
    /// Run a named experiment pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a config file without running anything.
    ValidateConfig { config: PathBuf },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1.63)]
    alpha: f64,
    #[arg(long, default_value_t = 1_000_000)]
    queries: u64,
    #[arg(long)]
    seed: u64,
    /// Hits shown per query, or `none`.
    #[arg(long, default_value_t = DEFAULT_DISPLAY_CAP.to_string())]
    display_cap: String,
    #[arg(long)]
    page_grouped: bool,
    #[arg(long, default_value_t = 10)]
    page_size: usize,
    #[arg(long, default_value_t = 10)]
    bins_per_decade: usize,
    /// Output stem: writes STEM.csv, STEM_binned.csv and STEM.json.
    #[arg(long)]
    output: PathBuf,
}

impl SimArgs {
    fn config(&self, n: usize) -> anyhow::Result<SimulationConfig> {
        let display_cap = match self.display_cap.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|_| {
                Error::InvalidParameter(format!("display cap must be a count or \"none\", got {s:?}"))
            })?),
        };
        let click_model = if self.page_grouped {
            ClickModel::PageGrouped {
                page_size: self.page_size,
            }
        } else {
            ClickModel::Absolute
        };
        Ok(SimulationConfig {
            display_cap,
            click_model,
            bins_per_decade: self.bins_per_decade,
            ..SimulationConfig::new(n, self.alpha, self.queries, self.seed)
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Surf,
    Search,
    Mixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollapseArg {
    FixedH,
    OverN,
}

/// Creates the directory an output file will live in.
fn parent_dir(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn save(curve: &TrafficCurve, stem: &Path, bins_per_decade: usize) -> anyhow::Result<()> {
    parent_dir(stem)?;
    for f in save_curve(curve, stem, bins_per_decade)? {
        println!("{}", f.display());
    }
    Ok(())
}

struct BaselineParams {
    alpha: f64,
    beta: f64,
    lambda: f64,
}

fn baseline_params(path: Option<&Path>) -> anyhow::Result<BaselineParams> {
    let mut p = BaselineParams {
        alpha: 1.63,
        beta: 1.1,
        lambda: 0.5,
    };
    let Some(path) = path else { return Ok(p) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected key = value", i + 1));
            continue;
        };
        let slot = match key.trim() {
            "alpha" => &mut p.alpha,
            "beta" => &mut p.beta,
            "lambda" => &mut p.lambda,
            other => {
                errors.push(format!("line {}: unknown key {other:?}", i + 1));
                continue;
            }
        };
        match value.trim().parse() {
            Ok(v) => *slot = v,
            Err(_) => errors.push(format!("line {}: not a number: {:?}", i + 1, value.trim())),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors).into());
    }
    Ok(p)
}

/// Reads `node` and `score` (or `p`) columns.
fn read_scores(path: &Path) -> anyhow::Result<(Vec<usize>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let (Some(node_col), Some(score_col)) = (col(&["node"]), col(&["score", "p"])) else {
        bail!(Error::Parse {
            line: 1,
            message: "expected a node column and a score or p column".into()
        });
    };
    let (mut nodes, mut scores) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| Error::Parse {
            line: i + 2,
            message: format!("bad {what}"),
        };
        nodes.push(rec.get(node_col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| parse_err("node"))?);
        scores.push(rec.get(score_col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| parse_err("score"))?);
    }
    Ok((nodes, scores))
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::GenerateGraph {
            nodes,
            out_degree,
            attractiveness,
            seed,
            output,
        } => {
            let g = generate_scale_free_digraph(&GeneratorConfig::new(nodes, out_degree, attractiveness, seed))?;
            parent_dir(&output)?;
            save_graph(&g, &output)?;
            info!("{} nodes, {} edges", g.node_count(), g.edge_count());
        }
        Command::Pagerank {
            graph,
            damping,
            tol,
            max_iter,
            output,
        } => {
            let g = load_graph(&graph)?;
            let defaults = PageRankOptions::for_graph(&g);
            let opts = PageRankOptions {
                damping,
                tol: tol.unwrap_or(defaults.tol),
                max_iter,
                ..defaults
            };
            let pr = compute_pagerank(&g, &opts)?;
            info!("converged in {} iterations (residual {:e})", pr.iterations_used, pr.residual);
            let rows = (0..g.node_count()).map(|i| [i.to_string(), g.in_degree(i).to_string(), pr.scores[i].to_string()]);
            parent_dir(&output)?;
            write_rows(&output, &["node", "k", "p"], rows)?;
        }
        Command::Rank { scores, beta, output } => {
            let (nodes, values) = read_scores(&scores)?;
            let table = build_rank_table(&values)?;
            let n = values.len();
            let mut rows = Vec::with_capacity(n);
            for (rank, &row) in table.order().iter().enumerate() {
                let r = rank + 1;
                let k_est: f64 = rank_to_indegree(r, n, beta)?;
                rows.push([nodes[row].to_string(), r.to_string(), values[row].to_string(), k_est.to_string()]);
            }
            parent_dir(&output)?;
            write_rows(&output, &["node", "R", "score", "k_est"], rows)?;
        }
        Command::Baseline {
            model,
            graph,
            params,
            output,
        } => {
            let p = baseline_params(params.as_deref())?;
            let g = load_graph(&graph)?;
            let k: Vec<f64> = g.in_degrees().iter().map(|&k| k as f64).collect();
            let t = match model {
                Baseline::Surf => surfing_traffic(&k)?,
                Baseline::Search => naive_search_traffic(&k, p.alpha, p.beta)?,
                Baseline::Mixture => mixture_traffic(&surfing_traffic(&k)?, &naive_search_traffic(&k, p.alpha, p.beta)?, p.lambda)?,
            };
            let rows = k.iter().zip(&t).enumerate().map(|(i, (k, t))| [i.to_string(), k.to_string(), t.to_string()]);
            parent_dir(&output)?;
            write_rows(&output, &["node", "k", "t"], rows)?;
        }
        Command::Exact {
            n,
            h,
            alpha,
            output,
            bins_per_decade,
        } => save(&TrafficCurve::exact(n, h, alpha)?, &output, bins_per_decade)?,
        Command::Simulate { n, h, sim } => {
            let curve = monte_carlo_traffic(&sim.config(n)?, h)?;
            save(&curve, &sim.output, sim.bins_per_decade)?;
        }
        Command::Convolve {
            n,
            delta,
            hmin,
            hmax,
            sim,
        } => {
            let dist = HitSetDistribution::new(delta, hmin.unwrap_or(1.0 / n as f64), hmax)?;
            let curve = convolved_traffic(&sim.config(n)?, &dist)?;
            save(&curve, &sim.output, sim.bins_per_decade)?;
        }
        Command::Collapse {
            kind,
            inputs,
            output,
            bins_per_decade,
        } => {
            let curves = inputs.iter().map(|p| load_curve(p)).collect::<Result<Vec<_>, _>>()?;
            let result = match kind {
                CollapseArg::FixedH => collapse_fixed_h(&curves, bins_per_decade)?,
                CollapseArg::OverN => collapse_over_n(&curves, bins_per_decade)?,
            };
            parent_dir(&output)?;
            write_collapse_csv(&result, &output)?;
            write_json(&result, &output.with_extension("json"))?;
            println!(
                "max deviation {:.4} dex over [{:.4e}, {:.4e}]; scale factors {:?}",
                result.max_deviation, result.overlap.0, result.overlap.1, result.scale_factors
            );
        }
        Command::Fit {
            input,
            range,
            no_bin,
            bins_per_decade,
        } => {
            let (x, y) = read_xy_csv(&input)?;
            let total = x.len();
            let (x, y): (Vec<f64>, Vec<f64>) = x.into_iter().zip(y).filter(|&(x, y)| x > 0.0 && y > 0.0).unzip();
            if x.len() < total {
                warn!("skipped {} points with non-positive coordinates", total - x.len());
            }
            let range = range.map(|r| (r[0], r[1]));
            let fit = if no_bin {
                let (lo, hi) = range.unwrap_or((f64::MIN_POSITIVE, f64::INFINITY));
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    x.iter().zip(&y).filter(|(&x, _)| x >= lo && x <= hi).unzip();
                fit_log_log(&xs, &ys)?
            } else {
                let binned = log_bin(&x, &y, bins_per_decade, BinMean::Arithmetic)?;
                fit_power_law(&binned, range)?
            };
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            let report = run_experiment(&cfg)?;
            for line in &report.summary {
                println!("{line}");
            }
            println!("wrote {} files to {}", report.files.len(), report.output_dir.display());
        }
        Command::ValidateConfig { config } => {
            ExperimentConfig::load(&config)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

/// 1 for bad input, 2 for failures while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::NodeOutOfRange { .. }
            | Error::Config(_)
            | Error::TooLargeForExact { .. },
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
