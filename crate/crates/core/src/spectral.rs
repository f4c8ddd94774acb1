//! Autocorrelation and spectrum estimation, Toeplitz correlation matrices and
//! model spectral shapes.
//!
//! Spectra live on K integer frequency bins and are normalized to sum to K, so
//! that they coincide with the eigenvalue set of the K×K correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Variance below this is treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// Finite real-valued time series with optional seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SignalSeries {
    pub fn new(values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpec("series must have at least one sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: i, col: 0 });
        }
        Ok(SignalSeries { values, seed })
    }

    pub fn zeros(len: usize) -> Self {
        SignalSeries { values: vec![0.0; len.max(1)], seed: None }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (1/T normalization).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// Time-averaged square, the inner product ⟨x, x⟩.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    pub fn centered(&self) -> SignalSeries {
        let m = self.mean();
        SignalSeries { values: self.values.iter().map(|v| v - m).collect(), seed: self.seed }
    }

    /// Elementwise sum; lengths must agree.
    pub fn add(&self, other: &SignalSeries) -> Result<SignalSeries> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: other.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(SignalSeries { values, seed: self.seed })
    }
}

/// Autocorrelation normalized by the variance, lags 0..K-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFunction {
    c: Vec<f64>,
}

impl CorrelationFunction {
    /// Accepts c[0] within 1e-9 of one (then pinned to one) and |c| ≤ 1 + 1e-9.
    pub fn new(mut c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidSpec("autocorrelation needs at least one lag".into()));
        }
        if (c[0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("c[0] = {} is not 1", c[0])));
        }
        if let Some(v) = c.iter().find(|v| !v.is_finite() || v.abs() > 1.0 + 1e-9) {
            return Err(Error::InvalidSpec(format!("autocorrelation value {v} outside [-1, 1]")));
        }
        c[0] = 1.0;
        c.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        Ok(CorrelationFunction { c })
    }

    /// White-noise autocorrelation δ(τ) on K lags.
    pub fn delta(k: usize) -> Self {
        let mut c = vec![0.0; k.max(1)];
        c[0] = 1.0;
        CorrelationFunction { c }
    }

    /// Builds c[τ] = f(τ) for τ = 0..K-1 and validates it.
    pub fn from_fn(k: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..k).map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Nonnegative spectrum on K bins with Σ s = K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdVector {
    s: Vec<f64>,
}

impl PsdVector {
    /// Validates nonnegativity and the trace normalization (1e-8 relative).
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidSpec("spectrum needs at least one bin".into()));
        }
        if let Some(&v) = s.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotPsd { min: v });
        }
        let k = s.len() as f64;
        let total: f64 = s.iter().sum();
        if ((total - k) / k).abs() > 1e-8 {
            return Err(Error::InvalidSpec(format!("spectrum sums to {total}, expected {k}")));
        }
        Ok(PsdVector { s })
    }

    /// Rescales a nonnegative vector so it sums to its length.
    pub fn normalized(mut s: Vec<f64>) -> Result<Self> {
        if let Some(&v) = s.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotPsd { min: v });
        }
        let total: f64 = s.iter().sum();
        if s.is_empty() || total <= 0.0 {
            return Err(Error::DegenerateShape);
        }
        let scale = s.len() as f64 / total;
        s.iter_mut().for_each(|v| *v *= scale);
        Ok(PsdVector { s })
    }

    pub fn flat(k: usize) -> Self {
        PsdVector { s: vec![1.0; k.max(1)] }
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values sorted in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.s.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// Symmetric Toeplitz correlation matrix, entry (i, j) = C(|i - j|).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    first_row: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn is_identity(&self) -> bool {
        self.first_row[1..].iter().all(|&v| v == 0.0)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| self.first_row[i.abs_diff(j)])
    }
}

/// Model spectral shapes on K bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsdShape {
    Flat,
    SomePeaks { bins: Vec<usize> },
    Linear { n_a: usize },
    Exponential { b: f64, n_a: usize },
    Lorentzian { n_w: f64 },
    PowerLaw { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdShapeSpec {
    #[serde(flatten)]
    pub shape: PsdShape,
    pub k: usize,
}

impl PsdShapeSpec {
    pub fn new(shape: PsdShape, k: usize) -> Self {
        PsdShapeSpec { shape, k }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        match &self.shape {
            PsdShape::Flat => Ok(()),
            PsdShape::SomePeaks { bins } => match bins.iter().find(|&&b| b >= self.k) {
                Some(b) => bad(format!("peak bin {b} outside 0..{}", self.k)),
                None => Ok(()),
            },
            PsdShape::Linear { n_a } if *n_a > self.k => bad(format!("N_a = {n_a} exceeds K")),
            PsdShape::Exponential { n_a, .. } if *n_a > self.k => bad(format!("N_a = {n_a} exceeds K")),
            PsdShape::Exponential { b, .. } if !(*b > 0.0 && b.is_finite()) => bad(format!("B = {b} must be positive")),
            PsdShape::Lorentzian { n_w } if !(*n_w > 0.0 && n_w.is_finite()) => bad(format!("N_w = {n_w} must be positive")),
            PsdShape::PowerLaw { beta } if !(*beta >= 0.0 && beta.is_finite()) => bad(format!("beta = {beta} must be nonnegative")),
            _ => Ok(()),
        }
    }
}

/// Bins in the order 0, 1, K-1, 2, K-2, ... used to lay out one-sided shapes.
fn interleaved_bins(k: usize) -> impl Iterator<Item = usize> {
    std::iter::once(0).chain((1..k).map(move |i| if i % 2 == 1 { i.div_ceil(2) } else { k - i / 2 }))
}

/// Folded frequency index of bin k; the DC bin takes the top index ⌈K/2⌉ so
/// that every index 1..K/2 appears twice for even K.
fn power_law_index(bin: usize, k: usize) -> usize {
    if bin == 0 {
        k.div_ceil(2).max(1)
    } else {
        bin.min(k - bin)
    }
}

/// Sample autocorrelation (biased, 1/T) normalized by the sample variance.
pub fn estimate_autocorrelation(x: &SignalSeries, max_lag: usize) -> Result<CorrelationFunction> {
    let t = x.len();
    if max_lag >= t {
        return Err(Error::LagTooLarge { max_lag, len: t });
    }
    let var = x.variance();
    if var < VARIANCE_FLOOR {
        return Err(Error::ZeroVariance);
    }
    let d = x.centered();
    let sums = fft::autocorr_sums(d.values(), max_lag);
    let denom = sums[0];
    let c = sums.iter().map(|s| (s / denom).clamp(-1.0, 1.0)).collect::<Vec<_>>();
    CorrelationFunction::new(c)
}

/// Spectrum of an autocorrelation via the length-K circular embedding
/// g[τ] = c[min(τ, K-τ)].
pub fn psd_from_autocorrelation(c: &CorrelationFunction) -> Result<PsdVector> {
    let k = c.len();
    if k < 2 {
        return Err(Error::InvalidSpec("spectrum needs K ≥ 2".into()));
    }
    let cv = c.values();
    let g: Vec<f64> = (0..k).map(|t| cv[t.min(k - t)]).collect();
    let mut s: Vec<f64> = fft::dft_real(&g).iter().map(|z| z.re).collect();
    let kf = k as f64;
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-6 * kf {
        return Err(Error::NotPsd { min });
    }
    s.iter_mut().for_each(|v| {
        if *v < 1e-10 * kf {
            *v = 0.0
        }
    });
    PsdVector::normalized(s)
}

/// Inverse of [`psd_from_autocorrelation`], normalized so c[0] = 1.
pub fn autocorrelation_from_psd(s: &PsdVector) -> CorrelationFunction {
    let spec: Vec<_> = s.values().iter().map(|&v| rustfft::num_complex::Complex64::new(v, 0.0)).collect();
    let g = fft::idft(&spec);
    let c0 = g[0].re;
    let c = g.iter().map(|z| (z.re / c0).clamp(-1.0, 1.0)).collect::<Vec<_>>();
    CorrelationFunction::new(c).expect("normalized inverse DFT of a valid spectrum")
}

/// K×K Toeplitz matrix from the first K lags; PSD-checked for K ≤ 512.
pub fn toeplitz_matrix(c: &CorrelationFunction, k: usize) -> Result<CorrelationMatrix> {
    if k == 0 || k > c.len() {
        return Err(Error::LagTooLarge { max_lag: k, len: c.len() });
    }
    let m = CorrelationMatrix { first_row: c.values()[..k].to_vec() };
    if k <= 512 && !m.is_identity() {
        let eig = SymmetricEigen::try_new(m.dense(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-8 * k as f64 {
            return Err(Error::NotPsd { min });
        }
    }
    Ok(m)
}

/// Eigenvalues of a correlation matrix, sorted descending, as a spectrum.
pub fn eigvals_correlation(m: &CorrelationMatrix) -> PsdVector {
    let k = m.dim();
    if m.is_identity() {
        return PsdVector::flat(k);
    }
    let eig = m.dense().symmetric_eigenvalues();
    let mut s: Vec<f64> = eig.iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    PsdVector::normalized(s).expect("trace of a correlation matrix is K")
}

/// Spectrum of a model shape, normalized to Σ = K.
pub fn shape_psd(spec: &PsdShapeSpec) -> Result<PsdVector> {
    spec.validate()?;
    let k = spec.k;
    let mut s = vec![0.0; k];
    match &spec.shape {
        PsdShape::Flat => s.iter_mut().for_each(|v| *v = 1.0),
        PsdShape::SomePeaks { bins } => {
            let mut bins = bins.clone();
            bins.sort_unstable();
            bins.dedup();
            for b in bins {
                s[b] = 1.0;
            }
        }
        PsdShape::Linear { n_a } => {
            for (n, bin) in interleaved_bins(k).take(*n_a).enumerate() {
                s[bin] = (n_a - n) as f64;
            }
        }
        PsdShape::Exponential { b, n_a } => {
            for (n, bin) in interleaved_bins(k).take(*n_a).enumerate() {
                s[bin] = 10f64.powf(-b * n as f64);
            }
        }
        PsdShape::Lorentzian { n_w } => {
            for (bin, v) in s.iter_mut().enumerate() {
                let n = bin.min(k - bin) as f64;
                *v = 1.0 / (1.0 + (n / n_w).powi(2));
            }
        }
        PsdShape::PowerLaw { beta } => {
            for (bin, v) in s.iter_mut().enumerate() {
                *v = (power_law_index(bin, k) as f64).powf(-beta);
            }
        }
    }
    PsdVector::normalized(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cos_acf(k: usize, f: usize) -> CorrelationFunction {
        CorrelationFunction::from_fn(k, |t| (2.0 * PI * (f * t) as f64 / k as f64).cos()).unwrap()
    }

    #[test]
    fn white_autocorrelation_gives_flat_spectrum() {
        let s = psd_from_autocorrelation(&CorrelationFunction::delta(16)).unwrap();
        for v in s.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cosine_autocorrelation_gives_two_spikes() {
        let k = 64;
        let s = psd_from_autocorrelation(&cos_acf(k, 5)).unwrap();
        for (bin, v) in s.values().iter().enumerate() {
            let expect = if bin == 5 || bin == k - 5 { 32.0 } else { 0.0 };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-10);
        }
        assert_eq!(s.values().iter().filter(|v| **v > 0.0).count(), 2);
    }

    #[test]
    fn geometric_autocorrelation_matches_direct_dft() {
        let k = 32;
        let c = CorrelationFunction::from_fn(k, |t| 0.75f64.powi(t as i32)).unwrap();
        let s = psd_from_autocorrelation(&c).unwrap();
        let direct: Vec<f64> = (0..k)
            .map(|f| {
                (0..k)
                    .map(|t| 0.75f64.powi(t.min(k - t) as i32) * (2.0 * PI * (f * t) as f64 / k as f64).cos())
                    .sum::<f64>()
            })
            .collect();
        let scale = k as f64 / direct.iter().sum::<f64>();
        for (a, b) in s.values().iter().zip(&direct) {
            assert_abs_diff_eq!(*a, b * scale, epsilon = 1e-10);
        }
        // Lorentzian: decreasing in folded frequency
        for f in 1..k / 2 {
            assert!(s.values()[f] < s.values()[f - 1]);
        }
    }

    #[test]
    fn inverse_transform_examples() {
        let c = autocorrelation_from_psd(&PsdVector::flat(8));
        assert_abs_diff_eq!(c.values()[0], 1.0);
        for v in &c.values()[1..] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
        let k = 40;
        let spikes = shape_psd(&PsdShapeSpec::new(PsdShape::SomePeaks { bins: vec![3, k - 3] }, k)).unwrap();
        let c = autocorrelation_from_psd(&spikes);
        for (t, v) in c.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, (2.0 * PI * 3.0 * t as f64 / k as f64).cos(), epsilon = 1e-12);
        }
        let lor = shape_psd(&PsdShapeSpec::new(PsdShape::Lorentzian { n_w: 3.0 }, 64)).unwrap();
        let c = autocorrelation_from_psd(&lor);
        for t in 1..10 {
            assert!(c.values()[t] < c.values()[t - 1] && c.values()[t] > 0.0);
        }
    }

    #[test]
    fn toeplitz_examples() {
        let m = toeplitz_matrix(&CorrelationFunction::delta(4), 4).unwrap();
        assert_eq!(m.dense(), DMatrix::identity(4, 4));
        let e = eigvals_correlation(&toeplitz_matrix(&cos_acf(8, 1), 8).unwrap());
        let expect = [4.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in e.values().iter().zip(&expect) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        let g = CorrelationFunction::from_fn(3, |t| 0.5f64.powi(t as i32)).unwrap();
        let e = eigvals_correlation(&toeplitz_matrix(&g, 3).unwrap());
        assert_abs_diff_eq!(e.values().iter().sum::<f64>(), 3.0, epsilon = 1e-12);
        let e = eigvals_correlation(&toeplitz_matrix(&CorrelationFunction::delta(5), 5).unwrap());
        assert_eq!(e.values(), &[1.0; 5]);
    }

    #[test]
    fn toeplitz_rejects_invalid_autocorrelation() {
        let c = CorrelationFunction::new(vec![1.0, 0.9, -0.9]).unwrap();
        assert!(matches!(toeplitz_matrix(&c, 3), Err(Error::NotPsd { .. })));
        assert!(matches!(toeplitz_matrix(&c, 4), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn ou_toeplitz_eigenvalues_track_circular_spectrum() {
        let k = 256;
        let c = CorrelationFunction::from_fn(k, |t| 0.75f64.powi(t as i32)).unwrap();
        let eig = eigvals_correlation(&toeplitz_matrix(&c, k).unwrap()).sorted_desc();
        let psd = psd_from_autocorrelation(&c).unwrap().sorted_desc();
        let second = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / k as f64;
        let (a, b) = (second(&eig), second(&psd));
        assert!((a - b).abs() / b < 0.01, "{a} vs {b}");
        let (a, b) = (eig[k / 2], psd[k / 2]);
        assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
    }

    #[test]
    fn shape_examples() {
        let flat = shape_psd(&PsdShapeSpec::new(PsdShape::Flat, 10)).unwrap();
        assert_eq!(flat.values(), &[1.0; 10]);
        let peaks = shape_psd(&PsdShapeSpec::new(PsdShape::SomePeaks { bins: vec![7, 93] }, 100)).unwrap();
        assert_abs_diff_eq!(peaks.values()[7], 50.0);
        assert_abs_diff_eq!(peaks.values()[93], 50.0);
        let e = shape_psd(&PsdShapeSpec::new(PsdShape::Exponential { b: 1.0, n_a: 4 }, 100)).unwrap();
        let gamma = 100.0 / 1.111;
        let mut got = e.sorted_desc();
        got.truncate(5);
        for (a, b) in got.iter().zip(&[gamma, gamma * 0.1, gamma * 0.01, gamma * 0.001, 0.0]) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        let lin = shape_psd(&PsdShapeSpec::new(PsdShape::Linear { n_a: 3 }, 10)).unwrap();
        assert_abs_diff_eq!(lin.values()[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lin.values()[1], 10.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lin.values()[9], 5.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn power_law_uses_each_frequency_twice() {
        let k = 8;
        let s = shape_psd(&PsdShapeSpec::new(PsdShape::PowerLaw { beta: 1.0 }, k)).unwrap();
        let gamma = 8.0 / (2.0 * (1.0 + 0.5 + 1.0 / 3.0 + 0.25));
        let mut expect: Vec<f64> = (1..=4).flat_map(|i| [gamma / i as f64; 2]).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.sorted_desc().iter().zip(&expect) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        let zero = shape_psd(&PsdShapeSpec::new(PsdShape::PowerLaw { beta: 0.0 }, k)).unwrap();
        assert_eq!(zero.values(), &[1.0; 8]);
    }

    #[test]
    fn shape_validation() {
        let bad = [
            PsdShapeSpec::new(PsdShape::Linear { n_a: 11 }, 10),
            PsdShapeSpec::new(PsdShape::Exponential { b: 0.0, n_a: 2 }, 10),
            PsdShapeSpec::new(PsdShape::Lorentzian { n_w: -1.0 }, 10),
            PsdShapeSpec::new(PsdShape::PowerLaw { beta: -0.5 }, 10),
            PsdShapeSpec::new(PsdShape::SomePeaks { bins: vec![10] }, 10),
        ];
        for spec in bad {
            assert!(matches!(shape_psd(&spec), Err(Error::InvalidSpec(_))), "{spec:?}");
        }
        let empty = PsdShapeSpec::new(PsdShape::SomePeaks { bins: vec![] }, 10);
        assert!(matches!(shape_psd(&empty), Err(Error::DegenerateShape)));
    }

    #[test]
    fn estimator_errors() {
        let x = SignalSeries::new(vec![2.0; 10], None).unwrap();
        assert!(matches!(estimate_autocorrelation(&x, 3), Err(Error::ZeroVariance)));
        let y = SignalSeries::new((0..10).map(|i| i as f64).collect(), None).unwrap();
        assert!(matches!(estimate_autocorrelation(&y, 10), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn estimator_sinusoid_follows_cosine() {
        let f = 0.0371;
        let x = SignalSeries::new((0..200_000).map(|t| 1.7 * (2.0 * PI * f * t as f64).sin()).collect(), None).unwrap();
        let c = estimate_autocorrelation(&x, 30).unwrap();
        for (t, v) in c.values().iter().enumerate() {
            assert!((v - (2.0 * PI * f * t as f64).cos()).abs() < 2e-3);
        }
    }

    fn random_psd() -> impl Strategy<Value = PsdVector> {
        prop::collection::vec(0.0f64..10.0, 2..64)
            .prop_filter("nonzero", |v| v.iter().sum::<f64>() > 1e-3)
            .prop_map(|v| PsdVector::normalized(v).unwrap())
    }

    proptest! {
        #[test]
        fn roundtrip_spectrum(s in random_psd()) {
            let c = autocorrelation_from_psd(&s);
            let back = psd_from_autocorrelation(&c).unwrap();
            // the circular embedding keeps only the even part of the spectrum
            let k = s.len();
            for bin in 0..k {
                let even = 0.5 * (s.values()[bin] + s.values()[(k - bin) % k]);
                prop_assert!((back.values()[bin] - even).abs() < 1e-8);
            }
            let c2 = autocorrelation_from_psd(&back);
            for (a, b) in c.values().iter().zip(c2.values()) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn trace_and_psd_laws(s in random_psd()) {
            let c = autocorrelation_from_psd(&s);
            let k = c.len();
            let m = toeplitz_matrix(&c, k).unwrap();
            let e = m.dense().symmetric_eigenvalues();
            prop_assert!(e.min() >= -1e-8 * k as f64);
            let total: f64 = eigvals_correlation(&m).values().iter().sum();
            prop_assert!(((total - k as f64) / k as f64).abs() < 1e-8);
        }

        #[test]
        fn integer_bin_sinusoid_eigenvalues(k in 4usize..80, f_raw in 1usize..40) {
            let f = 1 + f_raw % ((k - 1) / 2).max(1);
            prop_assume!(2 * f != k);
            let e = eigvals_correlation(&toeplitz_matrix(&cos_acf(k, f), k).unwrap());
            let spikes = shape_psd(&PsdShapeSpec::new(PsdShape::SomePeaks { bins: vec![f, k - f] }, k)).unwrap();
            for (a, b) in e.values().iter().zip(spikes.sorted_desc()) {
                prop_assert!((a - b).abs() < 1e-9 * k as f64);
            }
        }
    }
}
