//! CSV and JSON formats for traffic curves.
//!
//! A curve saved under the stem `out/curve` consists of `out/curve.csv`
//! (`R,t`), `out/curve_binned.csv` (`bin_center,t_mean,t_stderr,count`) and
//! `out/curve.json`, which holds everything but the values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::BinnedCurve;
use crate::click_models::ClickModel;
use crate::error::{Error, Result};
use crate::hit_simulator::{CollapseKind, CollapseResult, CurveMode, HitSetDistribution, HitSpec, TrafficCurve};
use crate::scalar::Real;

/// Crate version recorded in every manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Writes `R,t` rows.
pub fn write_curve_csv<T: Real>(curve: &TrafficCurve<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["R", "t"])?;
    for (i, t) in curve.t.iter().enumerate() {
        w.write_record([(i + 1).to_string(), t.to_string()])?;
    }
    finish(path, w)
}

/// Writes `bin_center,t_mean,t_stderr,count` rows.
pub fn write_binned_csv<T: Real>(curve: &BinnedCurve<T>, path: &Path) -> Result<()> {
    write_binned_with_header(curve, path, ["bin_center", "t_mean", "t_stderr", "count"])
}

/// Binned curve with custom column names.
pub fn write_binned_with_header<T: Real>(curve: &BinnedCurve<T>, path: &Path, header: [&str; 4]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for b in &curve.bins {
        w.write_record([
            b.center().to_string(),
            b.y_mean.to_string(),
            b.y_stderr.to_string(),
            b.count.to_string(),
        ])?;
    }
    finish(path, w)
}

/// Writes rows of displayable values under `header`.
pub fn write_rows<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    R: IntoIterator,
    R::Item: ToString,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(|v| v.to_string()))?;
    }
    finish(path, w)
}

/// Writes the rescaled points of every curve of a collapse, labelled by
/// hit fraction or index size.
pub fn write_collapse_csv<T: Real>(result: &CollapseResult<T>, path: &Path) -> Result<()> {
    let header = match result.kind {
        CollapseKind::FixedH => ["curve", "Rh", "t_over_h"],
        CollapseKind::OverN => ["curve", "R_over_N", "f_times_t"],
    };
    let rows = result
        .labels
        .iter()
        .zip(&result.rescaled)
        .flat_map(|(label, pts)| pts.iter().map(move |(x, y)| [*label, *x, *y]));
    write_rows(path, &header, rows)
}

pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Everything about a curve except its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub version: String,
    pub mode: String,
    pub n: usize,
    pub alpha: f64,
    /// Fixed hit fraction, when the curve has one.
    pub h: Option<f64>,
    pub delta: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub queries: u64,
    pub nonempty_queries: u64,
    pub display_cap: Option<usize>,
    pub click_model: ClickModel,
    pub seed: Option<u64>,
}

impl CurveMeta {
    pub fn of<T: Real>(curve: &TrafficCurve<T>) -> Self {
        let (h, delta, h_min, h_max) = match curve.hits {
            HitSpec::Fixed { h } => (Some(h.as_f64()), None, None, None),
            HitSpec::Distributed(d) => (
                None,
                Some(d.delta().as_f64()),
                Some(d.h_min().as_f64()),
                Some(d.h_max().as_f64()),
            ),
        };
        let mode = match curve.mode {
            CurveMode::Exact => "exact",
            CurveMode::MonteCarlo => "monte_carlo",
            CurveMode::Convolved => "convolved",
        };
        Self {
            version: VERSION.to_string(),
            mode: mode.to_string(),
            n: curve.n,
            alpha: curve.alpha.as_f64(),
            h,
            delta,
            h_min,
            h_max,
            queries: curve.queries,
            nonempty_queries: curve.nonempty_queries,
            display_cap: curve.display_cap,
            click_model: curve.click_model,
            seed: curve.seed,
        }
    }

    fn hits(&self) -> Result<HitSpec<f64>> {
        match (self.h, self.delta, self.h_min, self.h_max) {
            (Some(h), None, None, None) => Ok(HitSpec::Fixed { h }),
            (None, Some(d), Some(lo), Some(hi)) => Ok(HitSpec::Distributed(HitSetDistribution::new(d, lo, hi)?)),
            _ => Err(Error::invalid(
                "curve manifest needs either h or all of delta, h_min, h_max",
            )),
        }
    }

    fn mode(&self) -> Result<CurveMode> {
        match self.mode.as_str() {
            "exact" => Ok(CurveMode::Exact),
            "monte_carlo" => Ok(CurveMode::MonteCarlo),
            "convolved" => Ok(CurveMode::Convolved),
            other => Err(Error::invalid(format!("unknown curve mode {other:?}"))),
        }
    }
}

/// Paths of the three files of a curve saved under `stem`.
pub fn bundle_paths(stem: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let name = stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let sibling = |suffix: &str| stem.with_file_name(format!("{name}{suffix}"));
    (sibling(".csv"), sibling("_binned.csv"), sibling(".json"))
}

/// Saves the raw curve, its binned form and its manifest; returns the paths.
pub fn save_curve<T: Real>(curve: &TrafficCurve<T>, stem: &Path, bins_per_decade: usize) -> Result<Vec<PathBuf>> {
    let (raw, binned, meta) = bundle_paths(stem);
    write_curve_csv(curve, &raw)?;
    write_binned_csv(&curve.binned(bins_per_decade)?, &binned)?;
    write_json(&CurveMeta::of(curve), &meta)?;
    Ok(vec![raw, binned, meta])
}

/// Reads an `x,y` CSV with a header row. Extra columns are ignored.
pub fn read_xy_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| -> Result<f64> {
            let s = rec.get(j).ok_or_else(|| Error::Parse {
                line,
                message: format!("expected at least two columns, got {}", rec.len()),
            })?;
            s.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: {s:?}"),
            })
        };
        xs.push(field(0)?);
        ys.push(field(1)?);
    }
    Ok((xs, ys))
}

/// Loads a curve from its `R,t` CSV and the sibling `.json` manifest.
pub fn load_curve(csv_path: &Path) -> Result<TrafficCurve<f64>> {
    let meta_path = csv_path.with_extension("json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: CurveMeta = serde_json::from_str(&text)?;
    let (ranks, t) = read_xy_csv(csv_path)?;
    if t.len() != meta.n || ranks.iter().enumerate().any(|(i, &r)| r != (i + 1) as f64) {
        return Err(Error::invalid(format!(
            "{}: expected ranks 1..={} in order",
            csv_path.display(),
            meta.n
        )));
    }
    Ok(TrafficCurve {
        n: meta.n,
        alpha: meta.alpha,
        hits: meta.hits()?,
        mode: meta.mode()?,
        t,
        queries: meta.queries,
        nonempty_queries: meta.nonempty_queries,
        display_cap: meta.display_cap,
        click_model: meta.click_model,
        seed: meta.seed,
        moments: None,
    })
}
