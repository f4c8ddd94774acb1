//! Expansion of reservoir states over orthonormal time-series bases and the
//! split of memory into input, white-noise and correlated-noise shares.
//!
//! Inner products are time averages over the state window. A noise
//! v = c_n n + a is represented by orthonormalized delays of the white part n
//! and by Gram–Schmidt bases of the delays of the correlated part a, which
//! span a finite space whenever a is a finite sum of sinusoids.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::numeric::{check_alignment, delayed_projections, window_start, DEFAULT_REL_TOL};
use crate::reservoir::StateMatrix;
use crate::spectral::{estimate_autocorrelation, SignalSeries, VARIANCE_FLOOR};

/// Relative residual below which a delayed copy adds no basis.
pub const DEFAULT_TOL_NEW: f64 = 1e-6;
/// Consecutive dependent delays that end the Gram–Schmidt sweep.
pub const N_STOP: usize = 5;

/// SVD-normalized state window.
#[derive(Debug, Clone)]
pub struct OrthonormalState {
    /// rows × rank, columns orthonormal.
    pub x_hat: DMatrix<f64>,
    /// Retained singular values, descending.
    pub omega: Vec<f64>,
    /// N × rank right singular vectors.
    pub psi: DMatrix<f64>,
    /// First state row of the window.
    pub start_row: usize,
}

impl OrthonormalState {
    pub fn rank(&self) -> usize {
        self.x_hat.ncols()
    }
}

/// Orthonormal basis of all state rows at the default cutoff.
pub fn orthonormalize_state(x: &StateMatrix) -> Result<OrthonormalState> {
    orthonormalize_window(x, 0, DEFAULT_REL_TOL)
}

pub fn orthonormalize_window(x: &StateMatrix, start_row: usize, rel_tol: f64) -> Result<OrthonormalState> {
    let window = x.x.rows(start_row, x.rows() - start_row).into_owned();
    let svd = thin_svd(&window)?;
    if svd.sigma.first().copied().unwrap_or(0.0) < 1e-14 {
        return Err(Error::DegenerateStates);
    }
    let rank = svd.rank(rel_tol);
    Ok(OrthonormalState {
        x_hat: svd.u.columns(0, rank).into_owned(),
        omega: svd.sigma[..rank].to_vec(),
        psi: svd.v.columns(0, rank).into_owned(),
        start_row,
    })
}

/// Gram–Schmidt bases of delayed copies of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBasis {
    /// Unit time-average norm, mutually orthogonal.
    pub bases: Vec<Vec<f64>>,
    /// coeffs[k][i] = ⟨basis_i, a_{t-k}⟩ for the delays examined.
    pub coeffs: Vec<Vec<f64>>,
    /// Delay that introduced each basis.
    pub origin: Vec<usize>,
}

impl DelayBasis {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Removes the components along `bases` twice (classical Gram–Schmidt with
/// reorthogonalization) and returns the accumulated coefficients.
fn orthogonalize(h: &mut [f64], bases: &[Vec<f64>]) -> Vec<f64> {
    let mut coeffs = vec![0.0; bases.len()];
    for _ in 0..2 {
        for (c, b) in coeffs.iter_mut().zip(bases) {
            let p = dot(b, h);
            *c += p;
            h.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    coeffs
}

/// Gram–Schmidt over a_{t-k}, k = 0..=k_max, on times first_time..first_time+len,
/// orthogonal to `prior` (which is not part of the result).
fn gram_schmidt_window(a: &[f64], first_time: usize, len: usize, k_max: usize, tol_new: f64, prior: &[Vec<f64>]) -> DelayBasis {
    let mut own: Vec<Vec<f64>> = Vec::new();
    let mut coeffs = Vec::new();
    let mut origin = Vec::new();
    let mut dependent_run = 0;
    for k in 0..=k_max {
        let mut h = a[first_time - k..first_time - k + len].to_vec();
        let norm0 = dot(&h, &h).sqrt();
        orthogonalize(&mut h, prior);
        let mut c = orthogonalize(&mut h, &own);
        let norm = dot(&h, &h).sqrt();
        if norm0 > 0.0 && norm >= tol_new * norm0 {
            h.iter_mut().for_each(|x| *x /= norm);
            own.push(h);
            c.push(norm);
            origin.push(k);
            dependent_run = 0;
        } else {
            dependent_run += 1;
        }
        coeffs.push(c);
        if dependent_run >= N_STOP {
            break;
        }
    }
    DelayBasis { bases: own, coeffs, origin }
}

/// Bases of the delays of `a` over the window t ∈ [k_max, T).
pub fn gram_schmidt_delays(a: &SignalSeries, k_max: usize, tol_new: f64) -> Result<DelayBasis> {
    let t = a.len();
    if k_max >= t {
        return Err(Error::LagTooLarge { max_lag: k_max, len: t });
    }
    if a.variance() < VARIANCE_FLOOR {
        return Err(Error::ZeroVariance);
    }
    Ok(gram_schmidt_window(a.values(), k_max, t - k_max, k_max, tol_new, &[]))
}

/// Noise split into a white part n (unit variance, weight c_n) and a
/// correlated part a, both expressed on a fixed time window.
#[derive(Debug, Clone)]
pub struct NoiseDecomposition {
    pub n: Option<SignalSeries>,
    pub c_n: f64,
    /// Orthonormalized n_{t-k}, k = 0..=tau_max.
    pub n_bases: Vec<Vec<f64>>,
    /// Gram–Schmidt bases of a with the weight of a absorbed into the coefficients.
    pub a_basis: DelayBasis,
    pub n_a: usize,
    pub first_time: usize,
    pub len: usize,
}

impl NoiseDecomposition {
    /// Builds the bases on the window that `decompose_memory` will use for
    /// states `x` and delays up to `tau_max`. `white` and `correlated` are the
    /// injected components, so that v = white + correlated.
    pub fn for_states(
        x: &StateMatrix,
        tau_max: usize,
        white: Option<&SignalSeries>,
        correlated: Option<&SignalSeries>,
        k_max_a: usize,
        tol_new: f64,
    ) -> Result<Self> {
        let start = window_start(x, tau_max);
        let first_time = x.washout + start;
        let len = x.rows().saturating_sub(start);
        if len < 2 {
            return Err(Error::LengthMismatch { expected: start + 2, found: x.rows() });
        }
        for s in white.iter().chain(correlated.iter()) {
            check_alignment(x, s.len(), tau_max)?;
        }
        let (n, c_n, n_bases) = match white {
            Some(w) if w.variance() >= VARIANCE_FLOOR => {
                let c_n = w.variance().sqrt();
                let n = SignalSeries::new(w.values().iter().map(|v| v / c_n).collect(), w.seed())?;
                let mut bases: Vec<Vec<f64>> = Vec::with_capacity(tau_max + 1);
                for tau in 0..=tau_max {
                    let mut h = n.values()[first_time - tau..first_time - tau + len].to_vec();
                    orthogonalize(&mut h, &bases);
                    let norm = dot(&h, &h).sqrt();
                    h.iter_mut().for_each(|x| *x /= norm);
                    bases.push(h);
                }
                (Some(n), c_n, bases)
            }
            _ => (None, 0.0, Vec::new()),
        };
        let a_basis = match correlated {
            Some(a) if a.variance() >= VARIANCE_FLOOR => {
                gram_schmidt_window(a.values(), first_time, len, k_max_a.min(first_time), tol_new, &n_bases)
            }
            _ => DelayBasis { bases: Vec::new(), coeffs: Vec::new(), origin: Vec::new() },
        };
        let n_a = a_basis.len();
        Ok(NoiseDecomposition { n, c_n, n_bases, a_basis, n_a, first_time, len })
    }

    /// Splits a measured noise into innovation (white part) and predictable
    /// remainder (correlated part) of an order-p linear predictor, then builds
    /// the bases as [`NoiseDecomposition::for_states`].
    pub fn estimate(x: &StateMatrix, tau_max: usize, v: &SignalSeries, order: usize, k_max_a: usize) -> Result<Self> {
        let (white, correlated) = split_innovation(v, order)?;
        Self::for_states(x, tau_max, Some(&white), Some(&correlated), k_max_a, DEFAULT_TOL_NEW)
    }

    /// Largest deviation of the joint basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let all: Vec<&Vec<f64>> = self.n_bases.iter().chain(&self.a_basis.bases).collect();
        let mut worst = 0.0f64;
        for i in 0..all.len() {
            for j in i..all.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(all[i], all[j]) - target).abs());
            }
        }
        worst
    }
}

/// Levinson–Durbin fit of an order-p predictor on the biased autocorrelation;
/// returns (innovation, prediction) with v = innovation + prediction.
pub fn split_innovation(v: &SignalSeries, order: usize) -> Result<(SignalSeries, SignalSeries)> {
    let centered = v.centered();
    let x = centered.values();
    let r = estimate_autocorrelation(&centered, order)?;
    let r = r.values();
    let mut phi = vec![0.0; order];
    let mut err = 1.0;
    for m in 0..order {
        let acc: f64 = (0..m).map(|j| phi[j] * r[m - j]).sum();
        let k = (r[m + 1] - acc) / err;
        let prev = phi.clone();
        phi[m] = k;
        for j in 0..m {
            phi[j] = prev[j] - k * prev[m - 1 - j];
        }
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    let pred: Vec<f64> = (0..x.len())
        .map(|t| phi.iter().enumerate().filter(|(j, _)| t > *j).map(|(j, p)| p * x[t - j - 1]).sum())
        .collect();
    let innov: Vec<f64> = x.iter().zip(&pred).map(|(a, b)| a - b).collect();
    Ok((SignalSeries::new(innov, v.seed())?, SignalSeries::new(pred, v.seed())?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedMemory {
    pub m_u: Vec<f64>,
    pub m_n: Vec<f64>,
    pub m_a: Vec<f64>,
    /// Delay that introduced each correlated-noise basis.
    pub a_origin: Vec<usize>,
    pub m_sum_u: f64,
    pub m_sum_v: f64,
    pub m_sum: f64,
    pub rank: usize,
}

/// Memory split at the default singular-value cutoff.
pub fn decompose_memory(x: &StateMatrix, u: &SignalSeries, dec: &NoiseDecomposition, tau_max: usize) -> Result<DecomposedMemory> {
    decompose_memory_with(x, u, dec, tau_max, DEFAULT_REL_TOL)
}

pub fn decompose_memory_with(
    x: &StateMatrix,
    u: &SignalSeries,
    dec: &NoiseDecomposition,
    tau_max: usize,
    rel_tol: f64,
) -> Result<DecomposedMemory> {
    let start = check_alignment(x, u.len(), tau_max)?;
    if dec.first_time != x.washout + start || dec.len != x.rows() - start || dec.n_bases.len() > tau_max + 1 {
        return Err(Error::LengthMismatch { expected: x.washout + start, found: dec.first_time });
    }
    let defect = dec.orthonormality_defect();
    if defect > 1e-6 {
        return Err(Error::BasisNotOrthonormal { max_dev: defect });
    }
    let state = orthonormalize_window(x, start, rel_tol)?;
    let (coeffs, norms) = delayed_projections(&state.x_hat, u.values(), dec.first_time, tau_max);
    let m_u: Vec<f64> = coeffs
        .iter()
        .zip(&norms)
        .map(|(c, &zz)| if zz > 0.0 { c.iter().map(|v| v * v).sum::<f64>() / zz } else { 0.0 })
        .collect();
    let project = |b: &Vec<f64>| -> f64 {
        let coef = state.x_hat.tr_mul(&nalgebra::DVector::from_column_slice(b));
        coef.norm_squared() / b.iter().map(|v| v * v).sum::<f64>()
    };
    let m_n: Vec<f64> = dec.n_bases.iter().map(project).collect();
    let m_a: Vec<f64> = dec.a_basis.bases.iter().map(project).collect();
    let m_sum_u: f64 = m_u.iter().sum();
    let m_sum_v = m_n.iter().sum::<f64>() + m_a.iter().sum::<f64>();
    Ok(DecomposedMemory {
        m_u,
        m_n,
        m_a,
        a_origin: dec.a_basis.origin.clone(),
        m_sum_u,
        m_sum_v,
        m_sum: m_sum_u + m_sum_v,
        rank: state.rank(),
    })
}
