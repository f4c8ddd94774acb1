//! Thin FFT helpers over rustfft.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT of a real sequence, X[k] = Σ x[n] e^{-2πikn/K}.
pub fn dft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT including the 1/K factor.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    let k = buf.len() as f64;
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf.iter_mut().for_each(|v| *v /= k);
    buf
}

/// Linear autocorrelation sums a[τ] = Σ_t x_t x_{t+τ} for τ = 0..=max_lag.
pub fn autocorr_sums(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = (x.len() + max_lag + 1).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
    planner.plan_fft_inverse(n).process(&mut buf);
    buf[..=max_lag].iter().map(|v| v.re / n as f64).collect()
}

/// Cross-correlation plan against a fixed long signal `s`.
///
/// `correlate(q)` returns out[j] = Σ_i q[i] s[i + j] for j = 0..=s.len()-q.len().
pub struct Correlator {
    n: usize,
    s_hat: Vec<Complex64>,
    s_len: usize,
    planner: FftPlanner<f64>,
}

impl Correlator {
    pub fn new(s: &[f64], q_len: usize) -> Self {
        let n = (s.len() + q_len).next_power_of_two();
        let mut s_hat = vec![Complex64::new(0.0, 0.0); n];
        for (b, &v) in s_hat.iter_mut().zip(s) {
            b.re = v;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut s_hat);
        Correlator { n, s_hat, s_len: s.len(), planner }
    }

    pub fn correlate(&mut self, q: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, &v) in buf.iter_mut().zip(q) {
            b.re = v;
        }
        self.planner.plan_fft_forward(n).process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.s_hat) {
            *b = b.conj() * s;
        }
        self.planner.plan_fft_inverse(n).process(&mut buf);
        let len = self.s_len + 1 - q.len();
        buf[..len].iter().map(|v| v.re / n as f64).collect()
    }
}
