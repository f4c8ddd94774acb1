//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{Distribution, NoiseSpec};
use crate::numeric::{default_tau_max, RidgePolicy};
use crate::reservoir::{default_washout, ReservoirSpec, TopologySpec};

use super::ingest::ExternalSeriesFile;

pub const SCHEMA_VERSION: u32 = 1;

/// Threshold on successive M_sum,u/M_sum differences used by `convergence_size`.
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MfCompare,
    TopologySweep,
    NoiseSweep,
    HeatmapBetaR,
    EegCompare,
    BasisSplit,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::MfCompare => "mf_compare",
            ExperimentKind::TopologySweep => "topology_sweep",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::HeatmapBetaR => "heatmap_beta_r",
            ExperimentKind::EegCompare => "eeg_compare",
            ExperimentKind::BasisSplit => "basis_split",
        }
    }
}

/// A generated noise model or a column of an external CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSource {
    Model(NoiseSpec),
    File(ExternalSeriesFile),
}

/// β–r grid evaluated with the large-N closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSpec {
    pub n: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub n_beta: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    #[serde(default = "default_true")]
    pub log_r: bool,
}

impl HeatmapSpec {
    pub fn betas(&self) -> Vec<f64> {
        linspace(self.beta_min, self.beta_max, self.n_beta)
    }

    pub fn rs(&self) -> Vec<f64> {
        if self.log_r {
            linspace(self.r_min.log10(), self.r_max.log10(), self.n_r).into_iter().map(|e| 10f64.powf(e)).collect()
        } else {
            linspace(self.r_min, self.r_max, self.n_r)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("heatmap: {m}")));
        if self.n < 2 || self.n_beta == 0 || self.n_r == 0 {
            return bad("n must be at least 2 and both axes non-empty");
        }
        if !(self.beta_min.is_finite() && self.beta_max.is_finite() && self.beta_min >= 0.0 && self.beta_max >= self.beta_min) {
            return bad("beta range must satisfy 0 ≤ beta_min ≤ beta_max");
        }
        if !(self.r_min.is_finite() && self.r_max.is_finite() && self.r_min >= 0.0 && self.r_max >= self.r_min) {
            return bad("r range must satisfy 0 ≤ r_min ≤ r_max");
        }
        if self.log_r && self.r_min <= 0.0 {
            return bad("log-spaced r needs r_min > 0");
        }
        Ok(())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Extra white noise and correlated-basis settings for `basis_split`. The
/// correlated component is the config's `noise` at NSR `nsr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    #[serde(default)]
    pub white_nsr: f64,
    #[serde(default = "default_k_max_a")]
    pub k_max_a: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec { white_nsr: 0.0, k_max_a: default_k_max_a() }
    }
}

fn default_k_max_a() -> usize {
    100
}

fn default_true() -> bool {
    true
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub reservoir: ReservoirSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSource>,
    #[serde(default)]
    pub nsr: f64,
    pub trials: usize,
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub washout: Option<usize>,
    pub output: PathBuf,
    #[serde(default)]
    pub policy: RidgePolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: Distribution,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub topologies: Vec<TopologySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noises: Vec<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub basis: BasisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_threshold: Option<f64>,
    /// Directory that relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads and validates a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Parses and validates; relative paths resolve against the working directory.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn washout(&self) -> usize {
        self.washout.unwrap_or_else(|| default_washout(self.reservoir.rho))
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max.unwrap_or_else(|| default_tau_max(self.reservoir.n))
    }

    /// Network sizes for `eeg_compare` and `convergence_size`.
    pub fn sizes(&self) -> Vec<usize> {
        if self.sizes.is_empty() {
            vec![16, 32, 64, 128]
        } else {
            self.sizes.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.nsr >= 0.0 && self.nsr.is_finite()) {
            return bad(format!("nsr {} must be nonnegative", self.nsr));
        }
        if let Some(th) = self.convergence_threshold {
            if !(th >= 0.0 && th.is_finite()) {
                return bad(format!("convergence_threshold {th} must be nonnegative"));
            }
        }
        self.reservoir.validate()?;
        self.policy.validate()?;
        if let Some(NoiseSource::Model(spec)) = &self.noise {
            spec.validate()?;
        }
        for spec in &self.noises {
            spec.validate()?;
        }
        for topology in &self.topologies {
            ReservoirSpec { topology: topology.clone(), ..self.reservoir.clone() }.validate()?;
        }
        if self.experiment == ExperimentKind::HeatmapBetaR {
            return match &self.heatmap {
                Some(h) => h.validate(),
                None => bad("heatmap_beta_r needs a `heatmap` section".into()),
            };
        }
        if self.nsr > 0.0 && self.noise.is_none() && self.experiment != ExperimentKind::NoiseSweep {
            return bad("nsr > 0 needs a `noise` source".into());
        }
        match self.experiment {
            ExperimentKind::NoiseSweep if self.noises.is_empty() => return bad("noise_sweep needs a non-empty `noises` list".into()),
            ExperimentKind::EegCompare if self.noise.is_none() => return bad("eeg_compare needs a `noise` source".into()),
            _ => {}
        }
        if !(self.basis.white_nsr >= 0.0 && self.basis.white_nsr.is_finite()) {
            return bad("basis.white_nsr must be nonnegative".into());
        }
        let sizes = self.sizes();
        if sizes.contains(&0) || sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be positive and strictly increasing".into());
        }
        let largest_n = match self.experiment {
            ExperimentKind::EegCompare => *sizes.last().expect("non-empty"),
            _ => self.reservoir.n,
        };
        let tau_max = self.tau_max.unwrap_or_else(|| default_tau_max(largest_n));
        let washout = self.washout();
        if self.t < washout.max(tau_max) + 2 {
            return bad(format!("t = {} leaves fewer than 2 rows after washout {washout} and tau_max {tau_max}", self.t));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "experiment": "mf_compare",
        "reservoir": {"n": 20, "topology": {"kind": "dense"}, "rho": 0.9},
        "trials": 2,
        "t": 5000,
        "output": "out"
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.tau_max(), 100);
        assert_eq!(cfg.washout(), default_washout(0.9));
        assert_eq!(cfg.policy, RidgePolicy::default());
        assert!(cfg.noise.is_none());
    }

    #[test]
    fn echo_parses_back_to_the_same_config() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn noise_source_accepts_models_and_files() {
        let with = |noise: &str| MINIMAL.replace("\"trials\"", &format!("\"noise\": {noise}, \"nsr\": 1.0, \"trials\""));
        let cfg = ExperimentConfig::from_json(&with(r#"{"kind": "ou", "alpha_prime": 0.25}"#)).unwrap();
        assert!(matches!(cfg.noise, Some(NoiseSource::Model(_))));
        let cfg = ExperimentConfig::from_json(&with(r#"{"path": "bundled:surrogate", "channel": "Cz"}"#)).unwrap();
        assert!(matches!(cfg.noise, Some(NoiseSource::File(_))));
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let cases = [
            MINIMAL.replace("\"trials\": 2", "\"trials\": 0"),
            MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2"),
            MINIMAL.replace("\"rho\": 0.9", "\"rho\": 1.2"),
            MINIMAL.replace("\"t\": 5000", "\"t\": 50"),
            MINIMAL.replace("\"output\"", "\"unknown\": 1, \"output\""),
            MINIMAL.replace("\"trials\": 2", "\"trials\": 2, \"nsr\": 1.0"),
            MINIMAL.replace("mf_compare", "heatmap_beta_r"),
        ];
        for text in cases {
            let err = ExperimentConfig::from_json(&text).unwrap_err();
            assert!(err.is_config(), "{err}");
        }
    }

    #[test]
    fn log_r_axis_hits_both_endpoints() {
        let h = HeatmapSpec { n: 100, beta_min: 0.0, beta_max: 3.0, n_beta: 4, r_min: 0.1, r_max: 100.0, n_r: 4, log_r: true };
        assert_eq!(h.rs(), vec![0.1, 1.0, 10.0, 100.0]);
        assert_eq!(h.betas(), vec![0.0, 1.0, 2.0, 3.0]);
    }
}
