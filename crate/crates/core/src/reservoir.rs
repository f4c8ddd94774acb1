//! Weight topologies, spectral-radius scaling, eigenvalue spectra and the
//! linear state update x_t = W x_{t-1} + w (u_t + v_t).

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SignalSeries;

const MAX_DRAWS: usize = 8;
const DIVERGENCE_LIMIT: f64 = 1e12;

fn default_sparse_p() -> f64 {
    0.1
}
fn default_rewire_p() -> f64 {
    0.1
}
fn default_ba_m() -> usize {
    2
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Sparse {
        #[serde(default = "default_sparse_p")]
        p: f64,
    },
    Dense,
    Diagonal,
    Ring1,
    Ring2,
    WattsStrogatz {
        #[serde(default = "default_rewire_p")]
        p: f64,
    },
    BarabasiAlbert {
        #[serde(default = "default_ba_m")]
        m: usize,
    },
}

impl TopologySpec {
    pub fn label(&self) -> &'static str {
        match self {
            TopologySpec::Sparse { .. } => "sparse",
            TopologySpec::Dense => "dense",
            TopologySpec::Diagonal => "diagonal",
            TopologySpec::Ring1 => "ring1",
            TopologySpec::Ring2 => "ring2",
            TopologySpec::WattsStrogatz { .. } => "watts_strogatz",
            TopologySpec::BarabasiAlbert { .. } => "barabasi_albert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub n: usize,
    pub topology: TopologySpec,
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub symmetrize: bool,
}

impl ReservoirSpec {
    pub fn new(n: usize, topology: TopologySpec, rho: f64, seed: u64) -> Self {
        ReservoirSpec { n, topology, rho, seed, symmetrize: true }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ReservoirSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("spectral radius {} must lie in (0, 1)", self.rho));
        }
        match self.topology {
            TopologySpec::Sparse { p } | TopologySpec::WattsStrogatz { p } if !(0.0..=1.0).contains(&p) => {
                bad(format!("probability {p} outside [0, 1]"))
            }
            TopologySpec::BarabasiAlbert { m } if m == 0 || m >= self.n => {
                bad(format!("attachment count m = {m} must satisfy 1 ≤ m < N"))
            }
            _ => Ok(()),
        }
    }
}

/// Eigenvalues sorted by descending magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl EigenSpectrum {
    pub fn from_values(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        EigenSpectrum { eigenvalues }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_values(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |l| l.norm())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|l| l.im.abs() < tol)
    }
}

/// Post-washout states, row i holding x at time washout + i.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub x: DMatrix<f64>,
    pub washout: usize,
}

impl StateMatrix {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }
}

/// Built weights together with the spec that produced them.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub spec: ReservoirSpec,
    pub w: DMatrix<f64>,
    pub w_in: DVector<f64>,
}

impl Reservoir {
    pub fn build(spec: &ReservoirSpec) -> Result<Self> {
        let (w, w_in) = build_weights(spec)?;
        Ok(Reservoir { spec: spec.clone(), w, w_in })
    }

    pub fn spectrum(&self) -> Result<EigenSpectrum> {
        eigen_spectrum(&self.w)
    }

    pub fn run(&self, u: &SignalSeries, v: &SignalSeries, washout: usize) -> Result<StateMatrix> {
        simulate(&self.w, &self.w_in, u, v, washout)
    }
}

/// Default washout: steps for ρ^t to fall below 1e-12, capped at 10⁴.
pub fn default_washout(rho: f64) -> usize {
    ((1e-12f64).ln() / rho.ln()).ceil().clamp(0.0, 1e4) as usize
}

fn adjacency(spec: &ReservoirSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = spec.n;
    let mut edges = Vec::new();
    let undirected = |pairs: Vec<(usize, usize)>| -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    match spec.topology {
        TopologySpec::Dense => {
            for i in 0..n {
                for j in 0..n {
                    edges.push((i, j));
                }
            }
        }
        TopologySpec::Sparse { p } => {
            for i in 0..n {
                for j in 0..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
        }
        TopologySpec::Diagonal => edges.extend((0..n).map(|i| (i, i))),
        TopologySpec::Ring1 => edges.extend((0..n).map(|i| ((i + 1) % n, i))),
        TopologySpec::Ring2 => edges = undirected(ring2_pairs(n)),
        TopologySpec::WattsStrogatz { p } => {
            let mut pairs = ring2_pairs(n);
            let key = |a: usize, b: usize| (a.min(b), a.max(b));
            let mut present: std::collections::BTreeSet<(usize, usize)> = pairs.iter().map(|&(a, b)| key(a, b)).collect();
            for e in pairs.iter_mut() {
                if n > 3 && rng.random::<f64>() < p {
                    let (a, _) = *e;
                    let choices: Vec<usize> = (0..n).filter(|&c| c != a && !present.contains(&key(a, c))).collect();
                    if !choices.is_empty() {
                        let c = choices[rng.random_range(0..choices.len())];
                        present.remove(&key(e.0, e.1));
                        present.insert(key(a, c));
                        *e = (a, c);
                    }
                }
            }
            edges = undirected(pairs);
        }
        TopologySpec::BarabasiAlbert { m } => {
            let mut pairs = Vec::new();
            let mut degree = vec![0usize; n];
            let core = (m + 1).min(n);
            for a in 0..core {
                for b in a + 1..core {
                    pairs.push((a, b));
                    degree[a] += 1;
                    degree[b] += 1;
                }
            }
            for new in core..n {
                let mut targets = Vec::with_capacity(m);
                while targets.len() < m {
                    let total: usize = (0..new).filter(|c| !targets.contains(c)).map(|c| degree[c]).sum();
                    let mut pick = rng.random_range(0..total.max(1));
                    let mut chosen = 0;
                    for c in (0..new).filter(|c| !targets.contains(c)) {
                        if pick < degree[c] {
                            chosen = c;
                            break;
                        }
                        pick -= degree[c];
                    }
                    targets.push(chosen);
                }
                for &t in &targets {
                    pairs.push((new, t));
                    degree[new] += 1;
                    degree[t] += 1;
                }
            }
            edges = undirected(pairs);
        }
    }
    edges
}

fn ring2_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for d in 1..=2 {
            let j = (i + d) % n;
            if j != i {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Draws W (scaled to spectral radius ρ) and the shared input weight vector.
pub fn build_weights(spec: &ReservoirSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_DRAWS {
        let mut w = DMatrix::zeros(n, n);
        for (i, j) in adjacency(spec, &mut rng) {
            w[(i, j)] = 2.0 * rng.random::<f64>() - 1.0;
        }
        if spec.symmetrize {
            w = (&w + w.transpose()) * 0.5;
        }
        let radius = eigen_spectrum(&w)?.radius();
        if radius > 1e-12 {
            w *= spec.rho / radius;
            let w_in = DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            return Ok((w, w_in));
        }
    }
    Err(Error::ZeroSpectralRadius)
}

/// Eigenvalues of W sorted by descending magnitude.
pub fn eigen_spectrum(w: &DMatrix<f64>) -> Result<EigenSpectrum> {
    if !w.is_square() || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("weight matrix must be square and finite".into()));
    }
    let values = if w == &w.transpose() {
        let eig = SymmetricEigen::try_new(w.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
        eig.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    } else {
        schur_eigenvalues(w).ok_or(Error::EigenFailure)?
    };
    Ok(EigenSpectrum::from_values(values))
}

// Unshifted QR can stall on cyclic structure (all eigenvalues on one circle); retry with diagonal shifts.
fn schur_eigenvalues(w: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let n = w.nrows();
    let scale = w.norm().max(f64::MIN_POSITIVE);
    for shift in [0.0, 0.31, -0.57, 0.83] {
        let sigma = shift * scale;
        let m = w + DMatrix::identity(n, n) * sigma;
        if let Some(schur) = Schur::try_new(m, f64::EPSILON, 200 * n.max(10)) {
            return Some(schur.complex_eigenvalues().iter().map(|z| z - sigma).collect());
        }
    }
    None
}

/// Runs the linear recursion from x = 0 and keeps rows from `washout` on.
pub fn simulate(w: &DMatrix<f64>, w_in: &DVector<f64>, u: &SignalSeries, v: &SignalSeries, washout: usize) -> Result<StateMatrix> {
    simulate_from(w, w_in, u, v, washout, &DVector::zeros(w.nrows()))
}

/// As [`simulate`] with an explicit initial state (the state before the first input).
pub fn simulate_from(
    w: &DMatrix<f64>,
    w_in: &DVector<f64>,
    u: &SignalSeries,
    v: &SignalSeries,
    washout: usize,
    x0: &DVector<f64>,
) -> Result<StateMatrix> {
    let n = w.nrows();
    if w_in.len() != n || x0.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: w_in.len().min(x0.len()) });
    }
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    let t = u.len();
    if t <= washout {
        return Err(Error::LengthMismatch { expected: washout + 1, found: t });
    }
    let mut cols = DMatrix::zeros(n, t - washout);
    let mut x = x0.clone();
    let mut next = DVector::zeros(n);
    for (step, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
        next.gemv(1.0, w, &x, 0.0);
        next.axpy(a + b, w_in, 1.0);
        std::mem::swap(&mut x, &mut next);
        if x.amax() > DIVERGENCE_LIMIT || x.iter().any(|e| !e.is_finite()) {
            return Err(Error::Divergence { step });
        }
        if step >= washout {
            cols.set_column(step - washout, &x);
        }
    }
    Ok(StateMatrix { x: cols.transpose(), washout })
}
