//! Trial loops behind each experiment kind. Everything here is in-memory;
//! file output lives in the parent module.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{asi_profile, asinc_profile, large_n_mc, mc_lower_bound, truncation_horizon, AnalyticContext, AnalyticProfile};
use crate::decomposition::{decompose_memory_with, NoiseDecomposition, DEFAULT_TOL_NEW};
use crate::error::{Error, Result};
use crate::noise::{generate_noise, input_series, scale_to_nsr, shuffle_series, NoiseKind, NoiseSpec};
use crate::numeric::{default_tau_max, memory_function, RidgePolicy, DEFAULT_REL_TOL};
use crate::reservoir::{EigenSpectrum, Reservoir, ReservoirSpec, StateMatrix, TopologySpec};
use crate::spectral::{estimate_autocorrelation, shape_psd, PsdShape, PsdShapeSpec, SignalSeries};

use super::config::{ExperimentConfig, HeatmapSpec, NoiseSource};
use super::ingest::ingest_series;

/// Seeds of one trial: `base` is config seed + trial index, the others are
/// independent streams derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSeeds {
    pub base: u64,
    pub reservoir: u64,
    pub input: u64,
    pub noise: u64,
    pub shuffle: u64,
}

pub fn trial_seeds(config_seed: u64, trial: usize) -> TrialSeeds {
    let base = config_seed.wrapping_add(trial as u64);
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(base);
        rng.set_stream(s);
        rng.next_u64()
    };
    TrialSeeds { base, reservoir: stream(1), input: stream(2), noise: stream(3), shuffle: stream(4) }
}

/// Worker count from MEMCAP_THREADS (unset or 0 means one per core).
pub fn thread_count() -> Result<usize> {
    match std::env::var("MEMCAP_THREADS") {
        Ok(s) => s.trim().parse().map_err(|_| Error::Config(format!("MEMCAP_THREADS={s:?} is not a nonnegative integer"))),
        Err(_) => Ok(0),
    }
}

/// Runs `f` over trial indices on a bounded pool; results and the reported
/// error (the lowest failing trial) do not depend on scheduling.
pub fn run_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()?).build().map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<T>> = pool.install(|| (0..trials).into_par_iter().map(|i| f(i).map_err(|e| e.in_trial(i))).collect());
    results.into_iter().collect()
}

/// Noise ready for per-trial use: a generator, or a fixed external series.
#[derive(Debug, Clone)]
pub enum PreparedNoise {
    Silent,
    Model(NoiseSpec),
    Series(SignalSeries),
}

impl PreparedNoise {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.noise {
            None => Ok(PreparedNoise::Silent),
            Some(NoiseSource::Model(spec)) => Ok(PreparedNoise::Model(spec.clone())),
            Some(NoiseSource::File(file)) => {
                let mut file = file.clone();
                if file.path.to_str() != Some(super::ingest::BUNDLED_SURROGATE_PATH) {
                    file.path = cfg.resolve(&file.path);
                }
                let series = ingest_series(&file)?.series;
                if series.len() < cfg.t {
                    return Err(Error::LengthMismatch { expected: cfg.t, found: series.len() });
                }
                let head = SignalSeries::new(series.values()[..cfg.t].to_vec(), None)?;
                Ok(PreparedNoise::Series(head))
            }
        }
    }

    /// Unscaled noise for one trial.
    fn sample(&self, t: usize, seed: u64) -> Result<Option<SignalSeries>> {
        match self {
            PreparedNoise::Silent => Ok(None),
            PreparedNoise::Model(spec) => generate_noise(&spec.with_seed(seed), t).map(Some),
            PreparedNoise::Series(s) => Ok(Some(s.clone())),
        }
    }
}

struct TrialRun {
    reservoir: Reservoir,
    u: SignalSeries,
    v_raw: Option<SignalSeries>,
    x: StateMatrix,
}

fn run_network(cfg: &ExperimentConfig, spec: &ReservoirSpec, noise: &PreparedNoise, seeds: &TrialSeeds) -> Result<TrialRun> {
    let reservoir = Reservoir::build(&spec.with_seed(seeds.reservoir))?;
    let u = input_series(cfg.input, cfg.t, seeds.input);
    let v_raw = if cfg.nsr > 0.0 { noise.sample(cfg.t, seeds.noise)? } else { None };
    let v = match &v_raw {
        Some(raw) => scale_to_nsr(raw, &u, cfg.nsr)?,
        None => SignalSeries::zeros(cfg.t),
    };
    let x = reservoir.run(&u, &v, cfg.washout())?;
    Ok(TrialRun { reservoir, u, v_raw, x })
}

/// Closed-form MF on 0..=tau_max: ASInc for no noise or i.i.d. noise, ASI with
/// the model autocorrelation when known, else with the sample autocorrelation.
pub fn analytic_profile(
    eigs: &EigenSpectrum,
    noise: &PreparedNoise,
    v_raw: Option<&SignalSeries>,
    r: f64,
    tau_max: usize,
) -> Result<AnalyticProfile> {
    let v = match v_raw {
        Some(v) if r > 0.0 => v,
        _ => return asinc_profile(eigs, 0.0, tau_max),
    };
    if let PreparedNoise::Model(NoiseSpec { kind: NoiseKind::Iid { .. }, .. }) = noise {
        return asinc_profile(eigs, r, tau_max);
    }
    let k = truncation_horizon(eigs);
    let model = match noise {
        PreparedNoise::Model(spec) => spec.analytic_autocorrelation(k)?,
        _ => None,
    };
    let c = match model {
        Some(c) => c,
        None => estimate_autocorrelation(v, k - 1)?,
    };
    let ctx = AnalyticContext::with_correlation(eigs.clone(), r, &c)?;
    let mut profile = asi_profile(&ctx, tau_max.min(k - 1))?;
    profile.mf.resize(tau_max + 1, 0.0);
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMf {
    pub trial: usize,
    pub seed: u64,
    pub mf: Vec<f64>,
    pub mc: f64,
    pub rank: usize,
    pub mf_analytic: Vec<f64>,
    pub rank_analytic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfRow {
    pub tau: usize,
    pub mf_numeric_mean: f64,
    pub mf_numeric_std: f64,
    pub mf_analytic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMc {
    pub trial: usize,
    pub seed: u64,
    pub mc_numeric: f64,
    pub rank: usize,
    pub mc_analytic: Option<f64>,
    pub rank_analytic: Option<usize>,
}

/// MC totals over delays 0..=tau_max, numeric and closed-form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub label: String,
    pub n: usize,
    pub nsr: f64,
    pub trials: usize,
    pub tau_max: usize,
    pub mc_numeric_mean: f64,
    pub mc_numeric_std: f64,
    pub mc_analytic_mean: Option<f64>,
    pub mc_lower_bound: f64,
    pub rank_mean: f64,
    pub per_trial: Vec<TrialMc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfCompareResult {
    pub rows: Vec<MfRow>,
    pub summary: McSummary,
    pub trials: Vec<TrialMf>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    mean_std(&v).0
}

/// Numeric and closed-form MF over `trials` seeded networks.
pub fn mf_compare(cfg: &ExperimentConfig, label: &str) -> Result<MfCompareResult> {
    let noise = PreparedNoise::from_config(cfg)?;
    let tau_max = cfg.tau_max();
    let trials = run_trials(cfg.trials, |i| {
        let seeds = trial_seeds(cfg.seed, i);
        let run = run_network(cfg, &cfg.reservoir, &noise, &seeds)?;
        let p = memory_function(&run.x, &run.u, tau_max, &cfg.policy)?;
        let eigs = run.reservoir.spectrum()?;
        let a = analytic_profile(&eigs, &noise, run.v_raw.as_ref(), cfg.nsr, tau_max)?;
        Ok(TrialMf {
            trial: i,
            seed: seeds.base,
            mc: p.mc,
            mf: p.mf,
            rank: p.rank_used,
            mf_analytic: a.mf,
            rank_analytic: a.rank_used,
        })
    })?;
    let rows = (0..=tau_max)
        .map(|tau| {
            let (mean, std) = mean_std(&trials.iter().map(|t| t.mf[tau]).collect::<Vec<_>>());
            MfRow { tau, mf_numeric_mean: mean, mf_numeric_std: std, mf_analytic: Some(mean_of(trials.iter().map(|t| t.mf_analytic[tau]))) }
        })
        .collect();
    let per_trial: Vec<TrialMc> = trials
        .iter()
        .map(|t| TrialMc {
            trial: t.trial,
            seed: t.seed,
            mc_numeric: t.mc,
            rank: t.rank,
            mc_analytic: Some(t.mf_analytic.iter().sum()),
            rank_analytic: Some(t.rank_analytic),
        })
        .collect();
    let (mc_mean, mc_std) = mean_std(&per_trial.iter().map(|t| t.mc_numeric).collect::<Vec<_>>());
    let summary = McSummary {
        label: label.to_string(),
        n: cfg.reservoir.n,
        nsr: cfg.nsr,
        trials: cfg.trials,
        tau_max,
        mc_numeric_mean: mc_mean,
        mc_numeric_std: mc_std,
        mc_analytic_mean: Some(mean_of(per_trial.iter().filter_map(|t| t.mc_analytic))),
        mc_lower_bound: mc_lower_bound(cfg.reservoir.n, cfg.nsr),
        rank_mean: mean_of(per_trial.iter().map(|t| t.rank as f64)),
        per_trial,
    };
    Ok(MfCompareResult { rows, summary, trials })
}

/// Sweep entries of `topology_sweep`, defaulting to every topology.
pub fn sweep_topologies(cfg: &ExperimentConfig) -> Vec<TopologySpec> {
    if !cfg.topologies.is_empty() {
        return cfg.topologies.clone();
    }
    vec![
        TopologySpec::Sparse { p: 0.1 },
        TopologySpec::Dense,
        TopologySpec::Diagonal,
        TopologySpec::Ring1,
        TopologySpec::Ring2,
        TopologySpec::WattsStrogatz { p: 0.1 },
        TopologySpec::BarabasiAlbert { m: 2 },
    ]
}

/// One `mf_compare` per topology.
pub fn topology_sweep(cfg: &ExperimentConfig) -> Result<Vec<MfCompareResult>> {
    sweep_topologies(cfg)
        .into_iter()
        .enumerate()
        .map(|(i, topology)| {
            let sub = ExperimentConfig { reservoir: ReservoirSpec { topology: topology.clone(), ..cfg.reservoir.clone() }, ..cfg.clone() };
            mf_compare(&sub, &format!("{i:02}_{}", topology.label()))
        })
        .collect()
}

/// One `mf_compare` per noise model at the config's NSR.
pub fn noise_sweep(cfg: &ExperimentConfig) -> Result<Vec<MfCompareResult>> {
    cfg.noises
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let sub = ExperimentConfig { noise: Some(NoiseSource::Model(spec.clone())), ..cfg.clone() };
            mf_compare(&sub, &format!("{i:02}_{}", spec.kind.label()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub beta: f64,
    pub r: f64,
    pub mc_over_n: f64,
}

/// Normalized large-N input capacity over the β–r grid, β-major.
pub fn heatmap_grid(h: &HeatmapSpec) -> Result<Vec<GridPoint>> {
    let rs = h.rs();
    let mut grid = Vec::with_capacity(h.n_beta * h.n_r);
    for beta in h.betas() {
        let psd = shape_psd(&PsdShapeSpec::new(PsdShape::PowerLaw { beta }, h.n))?;
        for &r in &rs {
            grid.push(GridPoint { beta, r, mc_over_n: large_n_mc(&psd, r).m_sum_u / h.n as f64 });
        }
    }
    Ok(grid)
}

/// True when every β column is nonincreasing in r.
pub fn columns_nonincreasing(grid: &[GridPoint]) -> bool {
    grid.windows(2).all(|w| w[0].beta != w[1].beta || w[1].mc_over_n <= w[0].mc_over_n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EegRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub mc_original: f64,
    pub mc_shuffled: f64,
    pub rank_original: usize,
    pub rank_shuffled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EegSummary {
    pub n: usize,
    pub trials: usize,
    /// Trials with MC(original) > MC(shuffled).
    pub wins: usize,
    pub mc_original_mean: f64,
    pub mc_shuffled_mean: f64,
    /// Mean of MC / rank.
    pub ratio_original_mean: f64,
    pub ratio_shuffled_mean: f64,
}

/// Input MC under the noise and under a shuffled copy of it, per size and trial.
/// Both runs of a trial share the network and the input.
pub fn eeg_compare(cfg: &ExperimentConfig) -> Result<(Vec<EegRow>, Vec<EegSummary>)> {
    let noise = PreparedNoise::from_config(cfg)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for n in cfg.sizes() {
        let spec = ReservoirSpec { n, ..cfg.reservoir.clone() };
        let tau_max = cfg.tau_max.unwrap_or_else(|| default_tau_max(n));
        let per_n = run_trials(cfg.trials, |i| {
            let seeds = trial_seeds(cfg.seed, i);
            let reservoir = Reservoir::build(&spec.with_seed(seeds.reservoir))?;
            let u = input_series(cfg.input, cfg.t, seeds.input);
            let raw = noise.sample(cfg.t, seeds.noise)?.ok_or_else(|| Error::Config("eeg_compare needs noise".into()))?;
            let mc = |v: &SignalSeries| -> Result<(f64, usize)> {
                let x = reservoir.run(&u, &scale_to_nsr(v, &u, cfg.nsr)?, cfg.washout())?;
                let p = memory_function(&x, &u, tau_max, &cfg.policy)?;
                Ok((p.mc, p.rank_used))
            };
            let (mc_original, rank_original) = mc(&raw)?;
            let (mc_shuffled, rank_shuffled) = mc(&shuffle_series(&raw, seeds.shuffle))?;
            Ok(EegRow { n, trial: i, seed: seeds.base, mc_original, mc_shuffled, rank_original, rank_shuffled })
        })?;
        summaries.push(EegSummary {
            n,
            trials: per_n.len(),
            wins: per_n.iter().filter(|r| r.mc_original > r.mc_shuffled).count(),
            mc_original_mean: mean_of(per_n.iter().map(|r| r.mc_original)),
            mc_shuffled_mean: mean_of(per_n.iter().map(|r| r.mc_shuffled)),
            ratio_original_mean: mean_of(per_n.iter().map(|r| r.mc_original / r.rank_original.max(1) as f64)),
            ratio_shuffled_mean: mean_of(per_n.iter().map(|r| r.mc_shuffled / r.rank_shuffled.max(1) as f64)),
        });
        rows.extend(per_n);
    }
    Ok((rows, summaries))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub trial: usize,
    pub seed: u64,
    pub m_sum_u: f64,
    pub m_sum_v: f64,
    pub m_sum: f64,
    pub m_n_sum: f64,
    pub m_a_sum: f64,
    pub n_a: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSplitResult {
    /// Per-delay input memory M[u]; no closed form is attached.
    pub rows: Vec<MfRow>,
    pub trials: Vec<DecompositionRow>,
}

/// Splits M_sum into input, white-noise and correlated-noise parts. The
/// correlated component is the config noise at `nsr`, the white component is
/// i.i.d. at `basis.white_nsr`.
pub fn basis_split(cfg: &ExperimentConfig) -> Result<BasisSplitResult> {
    let noise = PreparedNoise::from_config(cfg)?;
    let tau_max = cfg.tau_max();
    let rel_tol = match cfg.policy {
        RidgePolicy::TruncatedSvd { rel_tol } => rel_tol,
        RidgePolicy::Tikhonov { .. } => DEFAULT_REL_TOL,
    };
    let results = run_trials(cfg.trials, |i| {
        let seeds = trial_seeds(cfg.seed, i);
        let reservoir = Reservoir::build(&cfg.reservoir.with_seed(seeds.reservoir))?;
        let u = input_series(cfg.input, cfg.t, seeds.input);
        let correlated = match noise.sample(cfg.t, seeds.noise)? {
            Some(raw) if cfg.nsr > 0.0 => Some(scale_to_nsr(&raw, &u, cfg.nsr)?),
            _ => None,
        };
        let white = if cfg.basis.white_nsr > 0.0 {
            Some(scale_to_nsr(&input_series(cfg.input, cfg.t, seeds.shuffle), &u, cfg.basis.white_nsr)?)
        } else {
            None
        };
        let mut v = SignalSeries::zeros(cfg.t);
        for part in white.iter().chain(correlated.iter()) {
            v = v.add(part)?;
        }
        let x = reservoir.run(&u, &v, cfg.washout())?;
        let dec = NoiseDecomposition::for_states(&x, tau_max, white.as_ref(), correlated.as_ref(), cfg.basis.k_max_a, DEFAULT_TOL_NEW)?;
        let d = decompose_memory_with(&x, &u, &dec, tau_max, rel_tol)?;
        let row = DecompositionRow {
            trial: i,
            seed: seeds.base,
            m_sum_u: d.m_sum_u,
            m_sum_v: d.m_sum_v,
            m_sum: d.m_sum,
            m_n_sum: d.m_n.iter().sum(),
            m_a_sum: d.m_a.iter().sum(),
            n_a: dec.n_a,
            rank: d.rank,
        };
        Ok((d.m_u, row))
    })?;
    let rows = (0..=tau_max)
        .map(|tau| {
            let (mean, std) = mean_std(&results.iter().map(|(m, _)| m[tau].clamp(0.0, 1.0)).collect::<Vec<_>>());
            MfRow { tau, mf_numeric_mean: mean, mf_numeric_std: std, mf_analytic: None }
        })
        .collect();
    Ok(BasisSplitResult { rows, trials: results.into_iter().map(|(_, r)| r).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    /// Trial mean of M_sum,u / rank.
    pub ratio: f64,
}

/// Normalized input capacity at every grid size.
pub fn convergence_curve(cfg: &ExperimentConfig) -> Result<Vec<ConvergencePoint>> {
    let noise = PreparedNoise::from_config(cfg)?;
    cfg.sizes()
        .into_iter()
        .map(|n| {
            let spec = ReservoirSpec { n, ..cfg.reservoir.clone() };
            let tau_max = cfg.tau_max.unwrap_or_else(|| default_tau_max(n));
            let ratios = run_trials(cfg.trials, |i| {
                let seeds = trial_seeds(cfg.seed, i);
                let run = run_network(cfg, &spec, &noise, &seeds)?;
                let p = memory_function(&run.x, &run.u, tau_max, &cfg.policy)?;
                Ok(p.mc / p.rank_used.max(1) as f64)
            })?;
            Ok(ConvergencePoint { n, ratio: mean_std(&ratios).0 })
        })
        .collect()
}

/// The first grid size whose ratio differs from the next one by less than
/// `threshold`.
pub fn convergence_point(curve: &[ConvergencePoint], threshold: f64) -> Result<usize> {
    curve.windows(2).find(|w| (w[1].ratio - w[0].ratio).abs() < threshold).map(|w| w[0].n).ok_or(Error::NotConverged)
}

pub fn convergence_size(cfg: &ExperimentConfig, threshold: f64) -> Result<usize> {
    convergence_point(&convergence_curve(cfg)?, threshold)
}
