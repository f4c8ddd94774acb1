//! Closed-form memory functions of linear reservoirs.
//!
//! The state after a long run is x_t = Σ_k W^k w s_{t-k}, so in the
//! eigenbasis of W each mode carries the sequence λ_m^k and the memory
//! function is a quadratic form on the span of these geometric sequences over
//! a horizon of K lags. Here that span is represented by its
//! Takenaka–Malmquist orthonormal basis (impulse responses of a cascade of
//! first-order all-pass sections), which stays well conditioned when
//! eigenvalues cluster, unlike the Vandermonde Gram matrix 1/(1 - λ_l λ_m).
//! Eigenvalues whose Blaschke residual falls below a tolerance are treated as
//! duplicates and dropped, which is the rank reduction of repeated modes.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::EigenSpectrum;
use crate::spectral::{shape_psd, CorrelationFunction, CorrelationMatrix, PsdShape, PsdShapeSpec, PsdVector};

/// Blaschke-residual cutoff below which an eigenvalue adds no new direction.
pub const BASIS_TOL: f64 = 1e-13;
/// Horizon cap for K.
pub const MAX_HORIZON: usize = 4096;
const HORIZON_EPS: f64 = 1e-12;

type CMatrix = DMatrix<Complex64>;

/// Smallest K with (max|λ|)^K < 1e-12, capped at 4096, and at least N + 1.
pub fn truncation_horizon(eigs: &EigenSpectrum) -> usize {
    let rho = eigs.radius();
    let k = if rho <= 0.0 { 1 } else { (HORIZON_EPS.ln() / rho.ln()).floor() as usize + 1 };
    k.max(eigs.len() + 1).min(MAX_HORIZON)
}

fn check_stable(eigs: &EigenSpectrum) -> Result<()> {
    if eigs.is_empty() {
        return Err(Error::InvalidSpec("empty eigenvalue set".into()));
    }
    let rho = eigs.radius();
    if rho.is_nan() || rho >= 1.0 {
        return Err(Error::InvalidSpec(format!("spectral radius {rho} must be below 1")));
    }
    Ok(())
}

/// Orthonormal basis of span{λ_m^k : k = 0..K-1} as columns of a K×p matrix.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub q: CMatrix,
    /// Indices into the eigenvalue list that contributed a direction.
    pub kept: Vec<usize>,
}

impl ModeBasis {
    pub fn new(eigs: &EigenSpectrum, k: usize, tol: f64) -> Self {
        let lam = &eigs.eigenvalues;
        let mut kept: Vec<usize> = Vec::new();
        let mut residual = vec![1.0f64; lam.len()];
        let mut remaining: Vec<usize> = (0..lam.len()).collect();
        while !remaining.is_empty() {
            let (pos, &best) = remaining
                .iter()
                .enumerate()
                .max_by(|a, b| residual[*a.1].total_cmp(&residual[*b.1]).then(b.0.cmp(&a.0)))
                .expect("nonempty");
            if residual[best] < tol {
                break;
            }
            remaining.remove(pos);
            kept.push(best);
            let l = lam[best];
            for &i in &remaining {
                residual[i] *= ((lam[i] - l) / (Complex64::new(1.0, 0.0) - l.conj() * lam[i])).norm();
            }
        }
        let p = kept.len();
        let mut q = CMatrix::zeros(k, p);
        let mut allpass = vec![Complex64::new(0.0, 0.0); k];
        allpass[0] = Complex64::new(1.0, 0.0);
        for (m, &i) in kept.iter().enumerate() {
            let l = lam[i];
            let c = l.conj();
            let scale = (1.0 - l.norm_sqr()).sqrt();
            let mut prev = Complex64::new(0.0, 0.0);
            for (row, a) in allpass.iter().enumerate() {
                prev = a + c * prev;
                q[(row, m)] = prev * scale;
            }
            // allpass ← allpass·(z - λ)/(1 - λ̄ z)
            let mut prev = Complex64::new(0.0, 0.0);
            let mut last = Complex64::new(0.0, 0.0);
            for a in allpass.iter_mut() {
                let num = -l * *a + last;
                last = *a;
                prev = num + c * prev;
                *a = prev;
            }
        }
        ModeBasis { q, kept }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn horizon(&self) -> usize {
        self.q.nrows()
    }

    fn row_norm_sqr(&self, tau: usize) -> f64 {
        self.q.row(tau).iter().map(|z| z.norm_sqr()).sum()
    }
}

/// MF profile from a closed form, with the rank actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticProfile {
    pub mf: Vec<f64>,
    pub mc: f64,
    pub rank_used: usize,
    /// True when the rank fell below the number of eigenvalues.
    pub rank_reduced: bool,
}

/// MF for white noise at NSR r: (1/(1+r))·‖q_τ‖², τ = 0..=tau_max.
pub fn asinc_profile(eigs: &EigenSpectrum, r: f64, tau_max: usize) -> Result<AnalyticProfile> {
    check_stable(eigs)?;
    check_r(r)?;
    let k = truncation_horizon(eigs).max(tau_max + 1);
    let basis = ModeBasis::new(eigs, k, BASIS_TOL);
    let mf: Vec<f64> = (0..=tau_max).map(|t| basis.row_norm_sqr(t) / (1.0 + r)).collect();
    Ok(AnalyticProfile {
        mf,
        mc: basis.rank() as f64 / (1.0 + r),
        rank_used: basis.rank(),
        rank_reduced: basis.rank() < eigs.len(),
    })
}

/// ASInc memory function at one delay.
pub fn asinc_mf(eigs: &EigenSpectrum, r: f64, tau: usize) -> Result<f64> {
    Ok(asinc_profile(eigs, r, tau)?.mf[tau])
}

/// ASInc memory capacity rank/(1+r).
pub fn asinc_mc(eigs: &EigenSpectrum, r: f64) -> Result<f64> {
    check_stable(eigs)?;
    check_r(r)?;
    let basis = ModeBasis::new(eigs, truncation_horizon(eigs), BASIS_TOL);
    Ok(basis.rank() as f64 / (1.0 + r))
}

/// ASInc evaluated literally: (1/(1+r))·h_τᵀ G⁺ h_τ with G_lm = 1/(1 - λ_l λ_m),
/// plain transpose, truncated-SVD pseudo-inverse at `rel_tol`.
///
/// Only reliable for well-separated spectra; kept as an independent check.
pub fn asinc_mf_gram(eigs: &EigenSpectrum, r: f64, tau: usize, rel_tol: f64) -> Result<f64> {
    check_stable(eigs)?;
    check_r(r)?;
    let lam = &eigs.eigenvalues;
    let n = lam.len();
    let one = Complex64::new(1.0, 0.0);
    let g = CMatrix::from_fn(n, n, |i, j| one / (one - lam[i] * lam[j]));
    let svd = g.svd(true, true);
    let top = svd.singular_values.max();
    if top <= 0.0 {
        return Err(Error::SingularGram);
    }
    let pinv = svd.pseudo_inverse(rel_tol * top).map_err(|_| Error::SingularGram)?;
    let h = DVector::from_fn(n, |i, _| lam[i].powu(tau as u32));
    let value = (h.transpose() * pinv * &h)[(0, 0)] / (1.0 + r);
    if value.im.abs() > 1e-8 {
        return Err(Error::ImaginaryResidue { tau, imag: value.im });
    }
    Ok(value.re)
}

fn check_r(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("NSR r = {r} must be nonnegative")))
    }
}

/// Eigenvalues, horizon K, NSR and the noise correlation matrix (identity if absent).
#[derive(Debug, Clone)]
pub struct AnalyticContext {
    pub eigenvalues: EigenSpectrum,
    pub k: usize,
    pub r: f64,
    pub c_v: Option<CorrelationMatrix>,
    basis: ModeBasis,
}

impl AnalyticContext {
    /// With C_v given, K is its dimension and must satisfy (max|λ|)^K < 1e-12;
    /// otherwise K is the default horizon.
    pub fn new(eigenvalues: EigenSpectrum, r: f64, c_v: Option<CorrelationMatrix>) -> Result<Self> {
        check_stable(&eigenvalues)?;
        check_r(r)?;
        let k = match &c_v {
            Some(m) => {
                let k = m.dim();
                let rho = eigenvalues.radius();
                if k <= eigenvalues.len() || rho.powi(k as i32) >= HORIZON_EPS {
                    return Err(Error::InvalidSpec(format!("horizon K = {k} too short for spectral radius {rho}")));
                }
                k
            }
            None => truncation_horizon(&eigenvalues),
        };
        let basis = ModeBasis::new(&eigenvalues, k, BASIS_TOL);
        Ok(AnalyticContext { eigenvalues, k, r, c_v, basis })
    }

    /// Context at the default horizon with C_v built from an autocorrelation.
    pub fn with_correlation(eigenvalues: EigenSpectrum, r: f64, c: &CorrelationFunction) -> Result<Self> {
        let k = truncation_horizon(&eigenvalues);
        if c.len() < k {
            return Err(Error::LagTooLarge { max_lag: k, len: c.len() });
        }
        let m = crate::spectral::toeplitz_matrix(c, k)?;
        Self::new(eigenvalues, r, Some(m))
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn rank_reduced(&self) -> bool {
        self.basis.rank() < self.eigenvalues.len()
    }

    /// Qᴴ C_v Q, the noise correlation restricted to the mode span.
    fn projected_noise(&self) -> CMatrix {
        let q = &self.basis.q;
        match &self.c_v {
            Some(m) if !m.is_identity() => {
                let c = m.dense().map(|v| Complex64::new(v, 0.0));
                q.adjoint() * (c * q)
            }
            _ => q.adjoint() * q,
        }
    }

    /// (QᴴQ + r·QᴴC_vQ)⁻¹.
    fn inverse_gram(&self) -> Result<CMatrix> {
        let q = &self.basis.q;
        let m = q.adjoint() * q + self.projected_noise() * Complex64::new(self.r, 0.0);
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        m.cholesky().map(|c| c.inverse()).ok_or(Error::SingularGram)
    }
}

/// ASI memory function for τ = 0..=tau_max (tau_max < K); mc sums all K delays.
pub fn asi_profile(ctx: &AnalyticContext, tau_max: usize) -> Result<AnalyticProfile> {
    if tau_max >= ctx.k {
        return Err(Error::LagTooLarge { max_lag: tau_max, len: ctx.k });
    }
    let inv = ctx.inverse_gram()?;
    let q = &ctx.basis.q;
    let mut mf = Vec::with_capacity(tau_max + 1);
    for tau in 0..=tau_max {
        let row = q.row(tau);
        let value = (row.conjugate() * &inv * row.transpose())[(0, 0)];
        if value.im.abs() > 1e-8 {
            return Err(Error::ImaginaryResidue { tau, imag: value.im });
        }
        mf.push(value.re);
    }
    let mc = (&inv * (q.adjoint() * q)).trace().re;
    Ok(AnalyticProfile { mf, mc, rank_used: ctx.rank(), rank_reduced: ctx.rank_reduced() })
}

/// ASI memory function at one delay.
pub fn asi_mf(ctx: &AnalyticContext, tau: usize) -> Result<f64> {
    Ok(asi_profile(ctx, tau)?.mf[tau])
}

/// Change in input MC from white to correlated noise of equal power:
/// (1/(1+r))·Σ rα_i/(1+r-rα_i), α_i the eigenvalues of (E - C_v)J with J the
/// projector onto the mode span.
pub fn asd_delta(ctx: &AnalyticContext) -> Result<f64> {
    if ctx.c_v.is_none() {
        return Ok(0.0);
    }
    let r = ctx.r;
    let p = ctx.projected_noise();
    let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(p, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let sum: f64 = eig
        .eigenvalues
        .iter()
        .map(|&mu| {
            let alpha = 1.0 - mu;
            r * alpha / (1.0 + r - r * alpha)
        })
        .sum();
    Ok(sum / (1.0 + r))
}

/// Input and noise capacity shares in the large-N limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeNMc {
    pub m_sum_u: f64,
    pub m_sum_v: f64,
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// M_sum,u = Σ 1/(1 + r·s_i) and M_sum,v = Σ r·s_i/(1 + r·s_i) with N = K.
pub fn large_n_mc(psd: &PsdVector, r: f64) -> LargeNMc {
    let s = psd.values();
    LargeNMc {
        m_sum_u: neumaier_sum(s.iter().map(|&x| 1.0 / (1.0 + r * x))),
        m_sum_v: neumaier_sum(s.iter().map(|&x| r * x / (1.0 + r * x))),
    }
}

/// N/(1+r), attained by white noise.
pub fn mc_lower_bound(n: usize, r: f64) -> f64 {
    n as f64 / (1.0 + r)
}

/// Single-crossing test on descending-sorted spectra. `Some(Greater)` means
/// the first spectrum yields at least the input capacity of the second at
/// every r; `None` when the sorted spectra cross more than once.
pub fn psd_order_predicate(psd1: &PsdVector, psd2: &PsdVector) -> Option<Ordering> {
    if psd1.len() != psd2.len() {
        return None;
    }
    let tol = 1e-12 * psd1.len() as f64;
    let a = psd1.sorted_desc();
    let b = psd2.sorted_desc();
    let signs: Vec<i8> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            let d = x - y;
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        })
        .filter(|&s| s != 0)
        .collect();
    if signs.is_empty() {
        return Some(Ordering::Equal);
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    match (changes, signs[0]) {
        (0 | 1, 1) => Some(Ordering::Greater),
        (0 | 1, _) => Some(Ordering::Less),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LittleDisturbance,
    Inconclusive,
    FullDisturbance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceClass {
    pub verdict: Verdict,
    pub ratio_limit: Option<f64>,
}

/// Spectrum to classify, optionally with the shape that generated it.
pub enum DisturbanceInput<'a> {
    Psd(&'a PsdVector),
    Shape(&'a PsdShapeSpec),
}

/// Ratio test on the sorted spectrum: geometric mean of successive ratios over
/// the last decile of (normal, nonzero) bins.
pub fn tail_ratio(psd: &PsdVector) -> Option<f64> {
    let floor = f64::MIN_POSITIVE * 1e3;
    let v: Vec<f64> = psd.sorted_desc().into_iter().filter(|&x| x > floor).collect();
    if v.len() < 2 {
        return None;
    }
    let ratios: Vec<f64> = v.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let take = ratios.len().div_ceil(10).max(1);
    let tail = &ratios[ratios.len() - take..];
    Some((tail.iter().sum::<f64>() / take as f64).exp())
}

pub fn classify_disturbance(input: DisturbanceInput) -> Result<DisturbanceClass> {
    let (psd, shape) = match input {
        DisturbanceInput::Psd(p) => (p.clone(), None),
        DisturbanceInput::Shape(s) => (shape_psd(s)?, Some(&s.shape)),
    };
    let s = psd.values();
    let max = s.iter().cloned().fold(f64::MIN, f64::max);
    let min = s.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = tail_ratio(&psd);
    let class = |verdict, ratio_limit| Ok(DisturbanceClass { verdict, ratio_limit });
    if max - min <= 1e-12 * max {
        return class(Verdict::FullDisturbance, Some(1.0));
    }
    if let Some(l) = ratio.filter(|&l| l < 1.0 - 1e-3) {
        return class(Verdict::LittleDisturbance, Some(l));
    }
    if let Some(PsdShape::PowerLaw { beta }) = shape {
        if *beta >= 1.0 {
            return class(Verdict::LittleDisturbance, ratio);
        }
    }
    if min == 0.0 {
        // finitely many nonzero modes: the ratio sequence terminates
        return class(Verdict::LittleDisturbance, None);
    }
    class(Verdict::Inconclusive, ratio)
}

/// Numerical bracket of M_sum,v for a 1/f power law on N bins at NSR r:
/// 2·Σ_{i=1}^{N/2} of the lower and upper per-frequency bounds.
pub fn power_law_noise_bounds(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let half = n / 2;
    let lower_c = 1.0 + (nf / 2.0).ln();
    let upper_c = (1.0 + nf / 2.0).ln();
    let lo = neumaier_sum((1..=half).map(|i| 1.0 / (2.0 * i as f64 * lower_c / (r * nf) + 1.0)));
    let hi = neumaier_sum((1..=half).map(|i| 1.0 / (2.0 * i as f64 * upper_c / (r * nf) + 1.0)));
    (2.0 * lo, 2.0 * hi)
}
