use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;

use memcap::analytic::asinc_profile;
use memcap::noise::{generate_noise, NoiseSpec};
use memcap::reservoir::{Reservoir, ReservoirSpec};
use memcap_ffi::*;

const SPEC: &str = r#"{"n": 12, "topology": {"kind": "dense"}, "rho": 0.8, "seed": 4}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

struct Handle(*mut MemcapReservoir);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { memcap_reservoir_free(self.0) };
    }
}

fn reservoir() -> Handle {
    let mut h = std::ptr::null_mut();
    assert_eq!(unsafe { memcap_reservoir_new(c(SPEC).as_ptr(), &mut h) }, MemcapStatus::Ok);
    Handle(h)
}

#[test]
fn eigenvalues_match_the_library() {
    let h = reservoir();
    let mut n = 0usize;
    assert_eq!(unsafe { memcap_reservoir_size(h.0, &mut n) }, MemcapStatus::Ok);
    assert_eq!(n, 12);
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { memcap_reservoir_eigenvalues(h.0, re.as_mut_ptr(), im.as_mut_ptr(), n) }, MemcapStatus::Ok);
    let spec: ReservoirSpec = serde_json::from_str(SPEC).unwrap();
    let expected = Reservoir::build(&spec).unwrap().spectrum().unwrap();
    for (i, z) in expected.eigenvalues.iter().enumerate() {
        assert_eq!((re[i], im[i]), (z.re, z.im));
    }
    let mut short = vec![0.0; n - 1];
    let status = unsafe { memcap_reservoir_eigenvalues(h.0, short.as_mut_ptr(), im.as_mut_ptr(), n - 1) };
    assert_eq!(status, MemcapStatus::BufferTooSmall);
}

#[test]
fn simulated_mf_tracks_the_closed_form() {
    let h = reservoir();
    let n = 12;
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    unsafe { memcap_reservoir_eigenvalues(h.0, re.as_mut_ptr(), im.as_mut_ptr(), n) };
    let mut numeric = vec![0.0; 30];
    let (mut mc, mut rank) = (0.0, 0usize);
    let noise = c(r#"{"kind": "iid"}"#);
    let status = unsafe {
        memcap_reservoir_memory_function(h.0, 40_000, 3, noise.as_ptr(), 1.0, 0, numeric.as_mut_ptr(), 30, &mut mc, &mut rank)
    };
    assert_eq!(status, MemcapStatus::Ok);
    assert_eq!(rank, 12);
    let mut analytic = vec![0.0; 30];
    let mut mc_analytic = 0.0;
    let status = unsafe { memcap_asinc_mf(re.as_ptr(), im.as_ptr(), n, 1.0, analytic.as_mut_ptr(), 30, &mut mc_analytic) };
    assert_eq!(status, MemcapStatus::Ok);
    assert!((mc_analytic - 6.0).abs() < 1e-12);
    for (a, b) in numeric.iter().zip(&analytic) {
        assert!((a - b).abs() < 0.03, "{a} vs {b}");
    }
    let spec: ReservoirSpec = serde_json::from_str(SPEC).unwrap();
    let eigs = Reservoir::build(&spec).unwrap().spectrum().unwrap();
    assert_eq!(asinc_profile(&eigs, 1.0, 29).unwrap().mf, analytic);
}

#[test]
fn noise_and_spectra_match_the_library() {
    let json = r#"{"kind": "ou", "alpha_prime": 0.25, "seed": 3}"#;
    let mut out = vec![0.0; 1000];
    assert_eq!(unsafe { memcap_generate_noise(c(json).as_ptr(), out.as_mut_ptr(), out.len()) }, MemcapStatus::Ok);
    let spec: NoiseSpec = serde_json::from_str(json).unwrap();
    assert_eq!(out, generate_noise(&spec, 1000).unwrap().values());

    let mut psd = vec![0.0; 64];
    let shape = c(r#"{"kind": "flat", "k": 64}"#);
    assert_eq!(unsafe { memcap_shape_psd(shape.as_ptr(), psd.as_mut_ptr(), 64) }, MemcapStatus::Ok);
    let (mut u, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { memcap_large_n_mc(psd.as_ptr(), 64, 3.0, &mut u, &mut v) }, MemcapStatus::Ok);
    assert!((u - 16.0).abs() < 1e-12 && (v - 48.0).abs() < 1e-12);
}

#[test]
fn runs_an_experiment_into_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema_version": 1, "experiment": "heatmap_beta_r", "output": "ignored",
        "reservoir": {"n": 10, "topology": {"kind": "dense"}, "rho": 0.9}, "trials": 1, "t": 1000,
        "heatmap": {"n": 100, "beta_min": 0, "beta_max": 2, "n_beta": 3, "r_min": 0.1, "r_max": 10, "n_r": 3}}"#;
    let out = c(dir.path().to_str().unwrap());
    assert_eq!(unsafe { memcap_run_experiment(c(cfg).as_ptr(), out.as_ptr()) }, MemcapStatus::Ok);
    let grid = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 10);
    assert_eq!(unsafe { memcap_run_experiment(c("{}").as_ptr(), out.as_ptr()) }, MemcapStatus::InvalidArgument);
    let msg = unsafe { CStr::from_ptr(memcap_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("configuration"), "{msg}");
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/memcap.h")).unwrap();
    for name in [
        "memcap_version",
        "memcap_last_error_message",
        "memcap_reservoir_new",
        "memcap_reservoir_free",
        "memcap_reservoir_size",
        "memcap_reservoir_eigenvalues",
        "memcap_reservoir_memory_function",
        "memcap_asinc_mf",
        "memcap_large_n_mc",
        "memcap_shape_psd",
        "memcap_generate_noise",
        "memcap_run_experiment",
        "MEMCAP_STATUS_BUFFER_TOO_SMALL",
        "typedef struct MemcapReservoir MemcapReservoir",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "memcap.h"

int main(void) {
    MemcapReservoir *r = NULL;
    if (memcap_reservoir_new("{\"n\": 8, \"topology\": {\"kind\": \"ring2\"}, \"rho\": 0.5}", &r) != MEMCAP_STATUS_OK) return 1;
    size_t n = 0;
    if (memcap_reservoir_size(r, &n) != MEMCAP_STATUS_OK || n != 8) return 2;
    double re[8], im[8];
    if (memcap_reservoir_eigenvalues(r, re, im, 8) != MEMCAP_STATUS_OK) return 3;
    memcap_reservoir_free(r);
    if (memcap_reservoir_new("{\"n\": 0}", &r) != MEMCAP_STATUS_INVALID_ARGUMENT) return 4;
    if (memcap_last_error_message() == NULL) return 5;
    printf("%s %.6f\n", memcap_version(), re[0]);
    return 0;
}
"#;

/// Compiles and links a C program against the static library when a C compiler is present.
#[test]
fn c_program_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libmemcap_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let bin = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke program exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
    assert!(stdout.trim_end().ends_with("0.500000") || stdout.contains("-0.500000"), "{stdout}");
}
