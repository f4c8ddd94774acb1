//! C ABI over the memcap library.
//!
//! Every function returns a [`MemcapStatus`]; on failure the message is
//! available from [`memcap_last_error_message`] on the same thread. Specs and
//! configs cross the boundary as JSON strings in the same format the CLI reads.
//! Panics are caught at the boundary and reported as `MEMCAP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use memcap::analytic::{asinc_profile, large_n_mc};
use memcap::experiments::{run_experiment, run_experiment_in, ExperimentConfig};
use memcap::noise::{generate_noise, input_series, scale_to_nsr, Distribution, NoiseSpec};
use memcap::numeric::{memory_function, RidgePolicy};
use memcap::reservoir::{default_washout, EigenSpectrum, Reservoir, ReservoirSpec};
use memcap::spectral::{shape_psd, PsdShapeSpec, PsdVector, SignalSeries};
use memcap::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemcapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Reservoir with its eigenvalues, created by [`memcap_reservoir_new`].
pub struct MemcapReservoir {
    reservoir: Reservoir,
    spectrum: EigenSpectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: MemcapStatus,
    message: String,
}

impl Failure {
    fn new(status: MemcapStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => MemcapStatus::Io,
            e if e.is_config() => MemcapStatus::InvalidArgument,
            _ => MemcapStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MemcapStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MemcapStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            MemcapStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(MemcapStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(MemcapStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::new(MemcapStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    non_null(p, name)?;
    if len < needed {
        return Err(Failure::new(MemcapStatus::BufferTooSmall, format!("{name} holds {len} values, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn memcap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next memcap call on the same thread.
#[no_mangle]
pub extern "C" fn memcap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Builds a reservoir from a JSON ReservoirSpec, e.g.
/// `{"n": 20, "topology": {"kind": "dense"}, "rho": 0.9, "seed": 1}`.
///
/// # Safety
/// `spec_json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn memcap_reservoir_new(spec_json: *const c_char, out: *mut *mut MemcapReservoir) -> MemcapStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec: ReservoirSpec = parse_json(read_str(spec_json, "spec_json")?, "reservoir spec")?;
        let reservoir = Reservoir::build(&spec)?;
        let spectrum = reservoir.spectrum()?;
        *out = Box::into_raw(Box::new(MemcapReservoir { reservoir, spectrum }));
        Ok(())
    })
}

/// Releases a reservoir. NULL is accepted.
///
/// # Safety
/// `handle` must come from [`memcap_reservoir_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn memcap_reservoir_free(handle: *mut MemcapReservoir) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of nodes N.
///
/// # Safety
/// `handle` must be a live reservoir and `n_out` writable.
#[no_mangle]
pub unsafe extern "C" fn memcap_reservoir_size(handle: *const MemcapReservoir, n_out: *mut usize) -> MemcapStatus {
    guard(|| {
        non_null(handle, "handle")?;
        non_null(n_out, "n_out")?;
        *n_out = (*handle).spectrum.len();
        Ok(())
    })
}

/// Writes the N eigenvalues (sorted by descending magnitude) as real and
/// imaginary parts.
///
/// # Safety
/// `re` and `im` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn memcap_reservoir_eigenvalues(handle: *const MemcapReservoir, re: *mut f64, im: *mut f64, len: usize) -> MemcapStatus {
    guard(|| {
        non_null(handle, "handle")?;
        let eigs = &(*handle).spectrum.eigenvalues;
        let re = out_slice(re, len, eigs.len(), "re")?;
        let im = out_slice(im, len, eigs.len(), "im")?;
        for (i, z) in eigs.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Simulates T steps with uniform input (seed `input_seed`) plus optional
/// noise (`noise_json` a NoiseSpec, or NULL for none) at NSR `nsr`, then
/// writes MF(τ) for τ = 0..mf_len-1. `washout` 0 selects the default.
/// `mc_out` and `rank_out` may be NULL.
///
/// # Safety
/// `handle` must be live, `noise_json` NULL or a C string, `mf_out` hold
/// `mf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn memcap_reservoir_memory_function(
    handle: *const MemcapReservoir,
    t: usize,
    input_seed: u64,
    noise_json: *const c_char,
    nsr: f64,
    washout: usize,
    mf_out: *mut f64,
    mf_len: usize,
    mc_out: *mut f64,
    rank_out: *mut usize,
) -> MemcapStatus {
    guard(|| {
        non_null(handle, "handle")?;
        if mf_len == 0 {
            return Err(Failure::new(MemcapStatus::InvalidArgument, "mf_len must be at least 1"));
        }
        if t < 2 {
            return Err(Failure::new(MemcapStatus::InvalidArgument, "t must be at least 2"));
        }
        let mf_out = out_slice(mf_out, mf_len, mf_len, "mf_out")?;
        let h = &*handle;
        let u = input_series(Distribution::Uniform, t, input_seed);
        let v = if noise_json.is_null() || nsr == 0.0 {
            SignalSeries::zeros(t)
        } else {
            let spec: NoiseSpec = parse_json(read_str(noise_json, "noise_json")?, "noise spec")?;
            scale_to_nsr(&generate_noise(&spec, t)?, &u, nsr)?
        };
        let washout = if washout == 0 { default_washout(h.reservoir.spec.rho) } else { washout };
        let x = h.reservoir.run(&u, &v, washout)?;
        let p = memory_function(&x, &u, mf_len - 1, &RidgePolicy::default())?;
        mf_out.copy_from_slice(&p.mf);
        if !mc_out.is_null() {
            *mc_out = p.mc;
        }
        if !rank_out.is_null() {
            *rank_out = p.rank_used;
        }
        Ok(())
    })
}

/// Closed-form MF under white noise at NSR `r` for eigenvalues given as
/// real/imaginary arrays of length `n`; writes τ = 0..mf_len-1 and, if
/// `mc_out` is not NULL, the MC over all delays.
///
/// # Safety
/// `eig_re`, `eig_im` must hold `n` doubles and `mf_out` `mf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn memcap_asinc_mf(
    eig_re: *const f64,
    eig_im: *const f64,
    n: usize,
    r: f64,
    mf_out: *mut f64,
    mf_len: usize,
    mc_out: *mut f64,
) -> MemcapStatus {
    guard(|| {
        non_null(eig_re, "eig_re")?;
        non_null(eig_im, "eig_im")?;
        if mf_len == 0 {
            return Err(Failure::new(MemcapStatus::InvalidArgument, "mf_len must be at least 1"));
        }
        let mf_out = out_slice(mf_out, mf_len, mf_len, "mf_out")?;
        let re = std::slice::from_raw_parts(eig_re, n);
        let im = std::slice::from_raw_parts(eig_im, n);
        let eigs = EigenSpectrum::from_values(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect());
        let p = asinc_profile(&eigs, r, mf_len - 1)?;
        mf_out.copy_from_slice(&p.mf);
        if !mc_out.is_null() {
            *mc_out = p.mc;
        }
        Ok(())
    })
}

/// Large-N input and noise capacities for a spectrum of `k` bins, rescaled
/// to mean 1 first.
///
/// # Safety
/// `psd` must hold `k` doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn memcap_large_n_mc(psd: *const f64, k: usize, r: f64, m_sum_u: *mut f64, m_sum_v: *mut f64) -> MemcapStatus {
    guard(|| {
        non_null(psd, "psd")?;
        non_null(m_sum_u, "m_sum_u")?;
        non_null(m_sum_v, "m_sum_v")?;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Failure::new(MemcapStatus::InvalidArgument, format!("r = {r} must be nonnegative")));
        }
        let psd = PsdVector::normalized(std::slice::from_raw_parts(psd, k).to_vec())?;
        let m = large_n_mc(&psd, r);
        *m_sum_u = m.m_sum_u;
        *m_sum_v = m.m_sum_v;
        Ok(())
    })
}

/// Writes the K bins of a JSON PsdShapeSpec, e.g.
/// `{"kind": "power_law", "beta": 1.0, "k": 1000}`.
///
/// # Safety
/// `shape_json` must be a C string and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn memcap_shape_psd(shape_json: *const c_char, out: *mut f64, len: usize) -> MemcapStatus {
    guard(|| {
        let spec: PsdShapeSpec = parse_json(read_str(shape_json, "shape_json")?, "shape spec")?;
        let psd = shape_psd(&spec)?;
        out_slice(out, len, psd.len(), "out")?.copy_from_slice(psd.values());
        Ok(())
    })
}

/// Fills `out` with `len` samples of a JSON NoiseSpec, e.g.
/// `{"kind": "ou", "alpha_prime": 0.25, "seed": 3}`.
///
/// # Safety
/// `spec_json` must be a C string and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn memcap_generate_noise(spec_json: *const c_char, out: *mut f64, len: usize) -> MemcapStatus {
    guard(|| {
        let spec: NoiseSpec = parse_json(read_str(spec_json, "spec_json")?, "noise spec")?;
        let out = out_slice(out, len, len, "out")?;
        out.copy_from_slice(generate_noise(&spec, len)?.values());
        Ok(())
    })
}

/// Runs an experiment from config JSON. `output_dir` overrides the config's
/// output when not NULL; relative paths resolve against the working directory.
///
/// # Safety
/// `config_json` must be a C string, `output_dir` NULL or a C string.
#[no_mangle]
pub unsafe extern "C" fn memcap_run_experiment(config_json: *const c_char, output_dir: *const c_char) -> MemcapStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(read_str(config_json, "config_json")?)?;
        if output_dir.is_null() {
            run_experiment(&cfg)?;
        } else {
            run_experiment_in(&cfg, Path::new(read_str(output_dir, "output_dir")?))?;
        }
        Ok(())
    })
}
