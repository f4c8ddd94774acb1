//! Memory function and capacity by least-squares readout on simulated states.
//!
//! For each delay τ the target z_τ = u_{t-τ} is regressed on the state window
//! X and mf(τ) = zᵀ P z / zᵀ z with P the projector onto the retained column
//! space of X. The SVD of X is computed once; the inner products Uᵀ z_τ for
//! all τ come from one FFT cross-correlation per singular vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Correlator;
use crate::linalg::{thin_svd, ThinSvd};
use crate::reservoir::StateMatrix;
use crate::spectral::SignalSeries;

/// Default relative singular-value cutoff of the truncated-SVD readout.
pub const DEFAULT_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RidgePolicy {
    Tikhonov { lambda_reg: f64 },
    TruncatedSvd { rel_tol: f64 },
}

impl Default for RidgePolicy {
    fn default() -> Self {
        RidgePolicy::TruncatedSvd { rel_tol: DEFAULT_REL_TOL }
    }
}

impl RidgePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RidgePolicy::Tikhonov { lambda_reg } if !(lambda_reg >= 0.0 && lambda_reg.is_finite()) => {
                Err(Error::InvalidSpec(format!("lambda_reg = {lambda_reg} must be nonnegative")))
            }
            RidgePolicy::TruncatedSvd { rel_tol } if !(rel_tol > 0.0 && rel_tol < 1.0) => {
                Err(Error::InvalidSpec(format!("rel_tol = {rel_tol} must lie in (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryProfile {
    /// Clamped to [0, 1].
    pub mf: Vec<f64>,
    /// Values before clamping.
    pub mf_raw: Vec<f64>,
    pub mc: f64,
    pub tau_max: usize,
    pub rank_used: usize,
}

impl MemoryProfile {
    pub fn from_mf(mf_raw: Vec<f64>, rank_used: usize) -> Self {
        let mf: Vec<f64> = mf_raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mc = mf.iter().sum();
        let tau_max = mf.len().saturating_sub(1);
        MemoryProfile { mf, mf_raw, mc, tau_max, rank_used }
    }
}

/// τ_max default: max(4N, 100).
pub fn default_tau_max(n: usize) -> usize {
    (4 * n).max(100)
}

/// First state row usable for every delay up to tau_max.
pub fn window_start(x: &StateMatrix, tau_max: usize) -> usize {
    tau_max.saturating_sub(x.washout)
}

pub(crate) fn check_alignment(x: &StateMatrix, len: usize, tau_max: usize) -> Result<usize> {
    let start = window_start(x, tau_max);
    if len < x.washout + x.rows() {
        return Err(Error::LengthMismatch { expected: x.washout + x.rows(), found: len });
    }
    if start + 1 >= x.rows() {
        return Err(Error::LengthMismatch { expected: start + 2, found: x.rows() });
    }
    Ok(start)
}

/// Delayed copies of `series` aligned with state rows start.., as inner
/// products against each column of `basis` (rows = window length).
/// Returns (coefficients[τ][j], squared norms[τ]).
pub(crate) fn delayed_projections(
    basis: &nalgebra::DMatrix<f64>,
    series: &[f64],
    first_time: usize,
    tau_max: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = basis.nrows();
    let seg = &series[first_time - tau_max..first_time + rows];
    let mut corr = Correlator::new(seg, rows);
    let per_col: Vec<Vec<f64>> = basis.column_iter().map(|c| corr.correlate(c.as_slice())).collect();
    let coeffs = (0..=tau_max).map(|tau| per_col.iter().map(|col| col[tau_max - tau]).collect()).collect();
    let norms = (0..=tau_max)
        .map(|tau| seg[tau_max - tau..tau_max - tau + rows].iter().map(|v| v * v).sum())
        .collect();
    (coeffs, norms)
}

/// MF over τ = 0..=tau_max of `target` read out linearly from the states.
pub fn memory_function(x: &StateMatrix, target: &SignalSeries, tau_max: usize, policy: &RidgePolicy) -> Result<MemoryProfile> {
    policy.validate()?;
    let start = check_alignment(x, target.len(), tau_max)?;
    let window = x.x.rows(start, x.rows() - start).into_owned();
    let svd = thin_svd(&window)?;
    let top = svd.sigma.first().copied().unwrap_or(0.0);
    if top < 1e-14 {
        return Err(Error::DegenerateStates);
    }
    let (rank, weights) = readout_weights(&svd, policy);
    let u = svd.u.columns(0, rank).into_owned();
    let (coeffs, norms) = delayed_projections(&u, target.values(), x.washout + start, tau_max);
    let mf_raw = coeffs
        .iter()
        .zip(&norms)
        .map(|(c, &zz)| {
            if zz == 0.0 {
                0.0
            } else {
                c.iter().zip(&weights).map(|(ci, wi)| ci * ci * wi).sum::<f64>() / zz
            }
        })
        .collect();
    Ok(MemoryProfile::from_mf(mf_raw, rank))
}

/// Retained rank and the per-direction fraction of explained variance.
fn readout_weights(svd: &ThinSvd, policy: &RidgePolicy) -> (usize, Vec<f64>) {
    match *policy {
        RidgePolicy::TruncatedSvd { rel_tol } => {
            let rank = svd.rank(rel_tol);
            (rank, vec![1.0; rank])
        }
        RidgePolicy::Tikhonov { lambda_reg } => {
            let rank = svd.rank(f64::EPSILON);
            let w = svd.sigma[..rank]
                .iter()
                .map(|s| {
                    let shrink = lambda_reg / (s * s + lambda_reg);
                    1.0 - shrink * shrink
                })
                .collect();
            (rank, w)
        }
    }
}

/// Σ_τ mf(τ).
pub fn memory_capacity(profile: &MemoryProfile) -> f64 {
    profile.mf.iter().sum()
}

/// Count of singular values ≥ rel_tol·σ_max over all state rows.
pub fn effective_rank(x: &StateMatrix, rel_tol: f64) -> Result<usize> {
    let svd = thin_svd(&x.x)?;
    if svd.sigma.first().copied().unwrap_or(0.0) < 1e-14 {
        return Err(Error::DegenerateStates);
    }
    Ok(svd.rank(rel_tol))
}
