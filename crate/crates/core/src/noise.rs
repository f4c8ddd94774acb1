//! Seeded noise generators, NSR scaling and shuffled controls.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::spectral::{autocorrelation_from_psd, shape_psd, CorrelationFunction, PsdShapeSpec, SignalSeries, VARIANCE_FLOOR};

/// Default guard constant of the modified-Bernoulli map.
pub const MB_EPSILON: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on [-1, 1].
    #[default]
    Uniform,
    /// Standard normal.
    Gaussian,
}

impl Distribution {
    pub fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Distribution::Uniform => 2.0 * rng.random::<f64>() - 1.0,
            Distribution::Gaussian => rng.sample(StandardNormal),
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            Distribution::Uniform => 1.0 / 3.0,
            Distribution::Gaussian => 1.0,
        }
    }
}

fn default_epsilon() -> f64 {
    MB_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Iid {
        #[serde(default)]
        dist: Distribution,
    },
    Ou {
        alpha_prime: f64,
        #[serde(default)]
        driver: Distribution,
    },
    Mb {
        b: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Rw {
        #[serde(default)]
        driver: Distribution,
    },
    Sin {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    PsdShaped {
        shape: PsdShapeSpec,
    },
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::Iid { .. } => "iid",
            NoiseKind::Ou { .. } => "ou",
            NoiseKind::Mb { .. } => "mb",
            NoiseKind::Rw { .. } => "rw",
            NoiseKind::Sin { .. } => "sin",
            NoiseKind::PsdShaped { .. } => "psd_shaped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        NoiseSpec { kind, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseSpec { kind: self.kind.clone(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match &self.kind {
            NoiseKind::Ou { alpha_prime, .. } if !(*alpha_prime > 0.0 && *alpha_prime < 1.0) => {
                bad(format!("OU alpha' = {alpha_prime} must lie in (0, 1)"))
            }
            NoiseKind::Mb { b, .. } if !(*b >= 1.0 && b.is_finite()) => bad(format!("MB B = {b} must be at least 1")),
            NoiseKind::Mb { epsilon, .. } if !(*epsilon > 0.0 && *epsilon < 1e-3) => {
                bad(format!("MB epsilon = {epsilon} must be small and positive"))
            }
            NoiseKind::Sin { amplitude, .. } if !(*amplitude > 0.0 && amplitude.is_finite()) => {
                bad(format!("sinusoid amplitude {amplitude} must be positive"))
            }
            NoiseKind::Sin { frequency, .. } if !(*frequency > 0.0 && *frequency < 0.5) => {
                bad(format!("sinusoid frequency {frequency} must lie in (0, 0.5)"))
            }
            NoiseKind::Sin { phase, .. } if !phase.is_finite() => bad("sinusoid phase must be finite".into()),
            NoiseKind::PsdShaped { shape } => shape.validate(),
            _ => Ok(()),
        }
    }

    /// Closed-form normalized autocorrelation on `k` lags, when the model has one.
    pub fn analytic_autocorrelation(&self, k: usize) -> Result<Option<CorrelationFunction>> {
        self.validate()?;
        let c = match &self.kind {
            NoiseKind::Iid { .. } => Some(CorrelationFunction::delta(k)),
            NoiseKind::Ou { alpha_prime, .. } => {
                let a = 1.0 - alpha_prime;
                Some(CorrelationFunction::from_fn(k, |t| a.powi(t as i32))?)
            }
            NoiseKind::Sin { frequency, .. } => {
                Some(CorrelationFunction::from_fn(k, |t| (2.0 * PI * frequency * t as f64).cos())?)
            }
            NoiseKind::PsdShaped { shape } => {
                let base = autocorrelation_from_psd(&shape_psd(shape)?);
                let period = base.len();
                Some(CorrelationFunction::from_fn(k, |t| base.values()[t % period])?)
            }
            NoiseKind::Mb { .. } | NoiseKind::Rw { .. } => None,
        };
        Ok(c)
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generates T samples of the given noise, bit-for-bit deterministic in the seed.
pub fn generate_noise(spec: &NoiseSpec, t: usize) -> Result<SignalSeries> {
    spec.validate()?;
    if t == 0 {
        return Err(Error::InvalidSpec("T must be positive".into()));
    }
    let mut rng = rng_for(spec.seed);
    let values = match &spec.kind {
        NoiseKind::Iid { dist } => (0..t).map(|_| dist.sample(&mut rng)).collect(),
        NoiseKind::Ou { alpha_prime, driver } => ou(*alpha_prime, *driver, t, &mut rng),
        NoiseKind::Mb { b, epsilon } => modified_bernoulli(*b, *epsilon, t, &mut rng)?,
        NoiseKind::Rw { driver } => random_walk(*driver, t, &mut rng),
        NoiseKind::Sin { amplitude, frequency, phase } => {
            (0..t).map(|i| amplitude * (2.0 * PI * frequency * i as f64 + phase).sin()).collect()
        }
        NoiseKind::PsdShaped { shape } => psd_shaped(shape, t, &mut rng)?,
    };
    SignalSeries::new(values, Some(spec.seed))
}

fn ou(alpha_prime: f64, driver: Distribution, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let burn_in = (10.0 / alpha_prime).ceil() as usize;
    let mut v = 0.0;
    let mut out = Vec::with_capacity(t);
    for i in 0..burn_in + t {
        v = (1.0 - alpha_prime) * v + alpha_prime * driver.sample(rng);
        if i >= burn_in {
            out.push(v);
        }
    }
    out
}

/// Modified-Bernoulli map; the emitted series is the centered binary symbol
/// sequence (1 on the upper half-interval, 0 on the lower).
fn modified_bernoulli(b: f64, eps: f64, t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let c = 2f64.powf(b - 1.0) * (1.0 - 2.0 * eps);
    'draw: for _ in 0..64 {
        let mut x: f64 = rng.random();
        let mut sym = Vec::with_capacity(t);
        for _ in 0..t {
            x = if x <= 0.5 { x + c * x.powf(b) + eps } else { x - c * (1.0 - x).powf(b) - eps };
            if !(0.0..=1.0).contains(&x) {
                continue 'draw;
            }
            sym.push(if x >= 0.5 { 1.0 } else { 0.0 });
        }
        let mean = sym.iter().sum::<f64>() / t as f64;
        return Ok(sym.into_iter().map(|s| s - mean).collect());
    }
    Err(Error::InvalidSpec("modified-Bernoulli orbit keeps escaping [0, 1]".into()))
}

fn random_walk(driver: Distribution, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut acc = 0.0;
    let walk: Vec<f64> = (0..t)
        .map(|_| {
            acc += driver.sample(rng);
            acc
        })
        .collect();
    let mean = walk.iter().sum::<f64>() / t as f64;
    walk.into_iter().map(|v| v - mean).collect()
}

/// One period of length K with the spectrum's amplitudes and uniform random
/// phases, tiled to T samples. Mean square is exactly one.
fn psd_shaped(shape: &PsdShapeSpec, t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let s = shape_psd(shape)?;
    let s = s.values();
    let k = s.len();
    let kf = k as f64;
    let mut spec = vec![Complex64::new(0.0, 0.0); k];
    let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    spec[0] = Complex64::new(sign(rng) * (kf * s[0]).sqrt(), 0.0);
    for bin in 1..k.div_ceil(2) {
        let amp = (kf * 0.5 * (s[bin] + s[k - bin])).sqrt();
        let phase = 2.0 * PI * rng.random::<f64>();
        spec[bin] = Complex64::from_polar(amp, phase);
        spec[k - bin] = spec[bin].conj();
    }
    if k % 2 == 0 && k > 1 {
        spec[k / 2] = Complex64::new(sign(rng) * (kf * s[k / 2]).sqrt(), 0.0);
    }
    let period: Vec<f64> = fft::idft(&spec).iter().map(|z| z.re).collect();
    Ok((0..t).map(|i| period[i % k]).collect())
}

/// Rescales v so that var(out) / var(u) = r exactly on the samples.
pub fn scale_to_nsr(v: &SignalSeries, u: &SignalSeries, r: f64) -> Result<SignalSeries> {
    if v.len() != u.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidSpec(format!("NSR r = {r} must be nonnegative")));
    }
    if r == 0.0 {
        return Ok(SignalSeries::zeros(v.len()));
    }
    let var_v = v.variance();
    if var_v < VARIANCE_FLOOR {
        return Err(Error::ZeroVariance);
    }
    let gain = (r * u.variance() / var_v).sqrt();
    let m = v.mean();
    SignalSeries::new(v.values().iter().map(|x| (x - m) * gain).collect(), v.seed())
}

/// Seeded uniform random permutation of the samples.
pub fn shuffle_series(v: &SignalSeries, seed: u64) -> SignalSeries {
    let mut values = v.values().to_vec();
    values.shuffle(&mut rng_for(seed));
    SignalSeries::new(values, Some(seed)).expect("permutation of a valid series")
}

/// i.i.d. input series drawn from `dist`.
pub fn input_series(dist: Distribution, t: usize, seed: u64) -> SignalSeries {
    let mut rng = rng_for(seed);
    SignalSeries::new((0..t).map(|_| dist.sample(&mut rng)).collect(), Some(seed)).expect("finite samples")
}
