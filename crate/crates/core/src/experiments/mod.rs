//! Configuration-driven experiments. Each run writes one directory with
//! `config-echo.json`, result tables and an MC summary.

pub mod config;
pub mod ingest;
pub mod protocols;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub use config::{BasisSpec, ExperimentConfig, ExperimentKind, HeatmapSpec, NoiseSource, DEFAULT_CONVERGENCE_THRESHOLD, SCHEMA_VERSION};
pub use ingest::{ingest_series, read_channel, surrogate_csv, write_series_csv, ExternalSeriesFile, IngestedSeries, BUNDLED_SURROGATE_PATH};
pub use protocols::{
    basis_split, columns_nonincreasing, convergence_curve, convergence_point, convergence_size, eeg_compare, heatmap_grid, mf_compare,
    noise_sweep, topology_sweep, trial_seeds, ConvergencePoint, GridPoint, McSummary, MfCompareResult, TrialSeeds,
};

/// Files written by one run, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Out { dir, files: Vec::new() })
    }

    fn sub(&mut self, name: &str) -> Result<Out> {
        Out::new(self.dir.join(name))
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn absorb(&mut self, other: Out) {
        self.files.extend(other.files);
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    label: &'a str,
    mc_numeric_mean: f64,
    mc_numeric_std: f64,
    mc_analytic_mean: Option<f64>,
    rank_mean: f64,
}

#[derive(Serialize)]
struct HeatmapSummary {
    n: usize,
    n_beta: usize,
    n_r: usize,
    columns_nonincreasing_in_r: bool,
    min_mc_over_n: f64,
    max_mc_over_n: f64,
}

#[derive(Serialize)]
struct ConvergenceSummary {
    threshold: f64,
    n_star: Option<usize>,
    curve: Vec<ConvergencePoint>,
}

fn write_mf_compare(out: &mut Out, result: &MfCompareResult) -> Result<()> {
    out.csv("mf.csv", &result.rows)?;
    out.json("mc.json", &result.summary)
}

fn write_sweep(out: &mut Out, results: &[MfCompareResult]) -> Result<()> {
    for r in results {
        let mut sub = out.sub(&r.summary.label)?;
        write_mf_compare(&mut sub, r)?;
        out.absorb(sub);
    }
    let rows: Vec<SweepRow> = results
        .iter()
        .map(|r| SweepRow {
            label: &r.summary.label,
            mc_numeric_mean: r.summary.mc_numeric_mean,
            mc_numeric_std: r.summary.mc_numeric_std,
            mc_analytic_mean: r.summary.mc_analytic_mean,
            rank_mean: r.summary.rank_mean,
        })
        .collect();
    out.csv("sweep.csv", &rows)?;
    out.json("mc.json", &results.iter().map(|r| &r.summary).collect::<Vec<_>>())
}

/// Runs the experiment named in the config and writes its output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_in(cfg, &cfg.output_dir())
}

/// As [`run_experiment`] with an explicit output directory.
pub fn run_experiment_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let mut out = Out::new(dir.to_path_buf())?;
    out.text("config-echo.json", &cfg.to_json())?;
    match cfg.experiment {
        ExperimentKind::MfCompare => write_mf_compare(&mut out, &mf_compare(cfg, cfg.experiment.label())?)?,
        ExperimentKind::TopologySweep => write_sweep(&mut out, &topology_sweep(cfg)?)?,
        ExperimentKind::NoiseSweep => write_sweep(&mut out, &noise_sweep(cfg)?)?,
        ExperimentKind::HeatmapBetaR => {
            let h = cfg.heatmap.as_ref().expect("validated");
            let grid = heatmap_grid(h)?;
            out.csv("grid.csv", &grid)?;
            let values = grid.iter().map(|g| g.mc_over_n);
            out.json(
                "mc.json",
                &HeatmapSummary {
                    n: h.n,
                    n_beta: h.n_beta,
                    n_r: h.n_r,
                    columns_nonincreasing_in_r: columns_nonincreasing(&grid),
                    min_mc_over_n: values.clone().fold(f64::INFINITY, f64::min),
                    max_mc_over_n: values.fold(f64::NEG_INFINITY, f64::max),
                },
            )?;
        }
        ExperimentKind::EegCompare => {
            let (rows, summaries) = eeg_compare(cfg)?;
            out.csv("sizes.csv", &rows)?;
            out.json("mc.json", &summaries)?;
        }
        ExperimentKind::BasisSplit => {
            let result = basis_split(cfg)?;
            out.csv("mf.csv", &result.rows)?;
            out.json("decomposition.json", &result.trials)?;
        }
    }
    Ok(RunReport { dir: out.dir, files: out.files })
}

/// Evaluates the convergence curve, writes `convergence.csv` and `mc.json`,
/// and returns N* (or `NotConverged` after writing the curve).
pub fn run_convergence(cfg: &ExperimentConfig, dir: &Path, threshold: f64) -> Result<(usize, RunReport)> {
    cfg.validate()?;
    let mut out = Out::new(dir.to_path_buf())?;
    out.text("config-echo.json", &cfg.to_json())?;
    let curve = convergence_curve(cfg)?;
    let n_star = convergence_point(&curve, threshold);
    out.csv("convergence.csv", &curve)?;
    out.json("mc.json", &ConvergenceSummary { threshold, n_star: n_star.as_ref().ok().copied(), curve: curve.clone() })?;
    let report = RunReport { dir: out.dir, files: out.files };
    n_star.map(|n| (n, report))
}
