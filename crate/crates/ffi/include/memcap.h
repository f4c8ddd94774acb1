#ifndef MEMCAP_H
#define MEMCAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MemcapStatus {
  MEMCAP_STATUS_OK = 0,
  MEMCAP_STATUS_NULL_POINTER = 1,
  MEMCAP_STATUS_INVALID_ARGUMENT = 2,
  MEMCAP_STATUS_NUMERICAL = 3,
  MEMCAP_STATUS_IO = 4,
  MEMCAP_STATUS_BUFFER_TOO_SMALL = 5,
  MEMCAP_STATUS_PANIC = 6,
} MemcapStatus;

/*
 Reservoir with its eigenvalues, created by [`memcap_reservoir_new`].
 */
typedef struct MemcapReservoir MemcapReservoir;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *memcap_version(void);

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next memcap call on the same thread.
 */
const char *memcap_last_error_message(void);

/*
 Builds a reservoir from a JSON ReservoirSpec, e.g.
 `{"n": 20, "topology": {"kind": "dense"}, "rho": 0.9, "seed": 1}`.

 # Safety
 `spec_json` must be a valid C string and `out` a writable pointer.
 */
enum MemcapStatus memcap_reservoir_new(const char *spec_json, struct MemcapReservoir **out);

/*
 Releases a reservoir. NULL is accepted.

 # Safety
 `handle` must come from [`memcap_reservoir_new`] and not be used afterwards.
 */
void memcap_reservoir_free(struct MemcapReservoir *handle);

/*
 Number of nodes N.

 # Safety
 `handle` must be a live reservoir and `n_out` writable.
 */
enum MemcapStatus memcap_reservoir_size(const struct MemcapReservoir *handle, size_t *n_out);

/*
 Writes the N eigenvalues (sorted by descending magnitude) as real and
 imaginary parts.

 # Safety
 `re` and `im` must each hold `len` doubles.
 */
enum MemcapStatus memcap_reservoir_eigenvalues(const struct MemcapReservoir *handle,
                                               double *re,
                                               double *im,
                                               size_t len);

/*
 Simulates T steps with uniform input (seed `input_seed`) plus optional
 noise (`noise_json` a NoiseSpec, or NULL for none) at NSR `nsr`, then
 writes MF(τ) for τ = 0..mf_len-1. `washout` 0 selects the default.
 `mc_out` and `rank_out` may be NULL.

 # Safety
 `handle` must be live, `noise_json` NULL or a C string, `mf_out` hold
 `mf_len` doubles.
 */
enum MemcapStatus memcap_reservoir_memory_function(const struct MemcapReservoir *handle,
                                                   size_t t,
                                                   uint64_t input_seed,
                                                   const char *noise_json,
                                                   double nsr,
                                                   size_t washout,
                                                   double *mf_out,
                                                   size_t mf_len,
                                                   double *mc_out,
                                                   size_t *rank_out);

/*
 Closed-form MF under white noise at NSR `r` for eigenvalues given as
 real/imaginary arrays of length `n`; writes τ = 0..mf_len-1 and, if
 `mc_out` is not NULL, the MC over all delays.

 # Safety
 `eig_re`, `eig_im` must hold `n` doubles and `mf_out` `mf_len` doubles.
 */
enum MemcapStatus memcap_asinc_mf(const double *eig_re,
                                  const double *eig_im,
                                  size_t n,
                                  double r,
                                  double *mf_out,
                                  size_t mf_len,
                                  double *mc_out);

/*
 Large-N input and noise capacities for a spectrum of `k` bins, rescaled
 to mean 1 first.

 # Safety
 `psd` must hold `k` doubles; the outputs must be writable.
 */
enum MemcapStatus memcap_large_n_mc(const double *psd,
                                    size_t k,
                                    double r,
                                    double *m_sum_u,
                                    double *m_sum_v);

/*
 Writes the K bins of a JSON PsdShapeSpec, e.g.
 `{"kind": "power_law", "beta": 1.0, "k": 1000}`.

 # Safety
 `shape_json` must be a C string and `out` hold `len` doubles.
 */
enum MemcapStatus memcap_shape_psd(const char *shape_json, double *out, size_t len);

/*
 Fills `out` with `len` samples of a JSON NoiseSpec, e.g.
 `{"kind": "ou", "alpha_prime": 0.25, "seed": 3}`.

 # Safety
 `spec_json` must be a C string and `out` hold `len` doubles.
 */
enum MemcapStatus memcap_generate_noise(const char *spec_json, double *out, size_t len);

/*
 Runs an experiment from config JSON. `output_dir` overrides the config's
 output when not NULL; relative paths resolve against the working directory.

 # Safety
 `config_json` must be a C string, `output_dir` NULL or a C string.
 */
enum MemcapStatus memcap_run_experiment(const char *config_json, const char *output_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMCAP_H */
