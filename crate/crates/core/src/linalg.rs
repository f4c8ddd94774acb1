//! Thin SVD of tall matrices through a Householder QR.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

/// X = U diag(σ) Vᵀ with σ sorted descending and U explicitly orthonormal.
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    /// Number of singular values at or above rel_tol·σ_max.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().take_while(|&&s| s >= rel_tol * top && s > 0.0).count()
    }
}

pub fn thin_svd(x: &DMatrix<f64>) -> Result<ThinSvd> {
    let (rows, cols) = x.shape();
    if rows < cols {
        let t = thin_svd(&x.transpose())?;
        return Ok(ThinSvd { u: t.v, sigma: t.sigma, v: t.u });
    }
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let svd = SVD::try_new(r, true, true, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let ur = svd.u.ok_or(Error::EigenFailure)?;
    let vt = svd.v_t.ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let ur = ur.select_columns(&order);
    let v = vt.transpose().select_columns(&order);
    Ok(ThinSvd { u: q * ur, sigma, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_and_is_orthonormal() {
        let x = DMatrix::from_fn(40, 5, |i, j| ((i * 7 + j * 13) % 17) as f64 - 8.0 + (i as f64 * 0.1).sin());
        let s = thin_svd(&x).unwrap();
        let rebuilt = &s.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * s.v.transpose();
        assert!((rebuilt - &x).amax() < 1e-10);
        assert!((s.u.transpose() * &s.u - DMatrix::identity(5, 5)).amax() < 1e-12);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn repeated_column_drops_rank() {
        let mut x = DMatrix::from_fn(30, 3, |i, j| ((i + 1) as f64).powi(j as i32 % 2 + 1).sin());
        let c = x.column(0).clone_owned();
        x.set_column(2, &c);
        assert_eq!(thin_svd(&x).unwrap().rank(1e-10), 2);
    }
}
