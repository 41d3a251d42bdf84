#ifndef VALLEY_SHUTTLE_H
#define VALLEY_SHUTTLE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_INVALID_ARGUMENT = 2,
  VS_STATUS_CONFIG = 3,
  VS_STATUS_NUMERICAL = 4,
  VS_STATUS_IO = 5,
  VS_STATUS_NOT_APPLICABLE = 6,
  VS_STATUS_PANIC = 7,
} VsStatus;

/**
 * Parsed experiment config.
 */
typedef struct VsExperiment VsExperiment;

/**
 * Sampled disorder landscape.
 */
typedef struct VsLandscape VsLandscape;

/**
 * Completed shuttle run.
 */
typedef struct VsShuttleRun VsShuttleRun;

/**
 * Parameters of a five-pocket shuttle run (m/s, μm, μeV, nm).
 */
typedef struct VsShuttleParams {
  double velocity;
  double distance_um;
  double t0;
  double pitch;
  double l_dot;
  double sigma_delta;
  double sigma_eps;
  uint64_t seed;
} VsShuttleParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t vs_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vs_version(void);

/**
 * Final |⟨g,R|ψ⟩|² of a paused transfer with fixed valley couplings
 * (μeV, ns).
 */
enum VsStatus vs_transfer_paused(double epsilon0,
                                 double t0,
                                 double tau_tot,
                                 double delta_l_re,
                                 double delta_l_im,
                                 double delta_r_re,
                                 double delta_r_im,
                                 double *fidelity);

/**
 * Paused-transfer success probability over `n` valley draws.
 */
enum VsStatus vs_transfer_monte_carlo(double epsilon0,
                                      double t0,
                                      double tau_tot,
                                      double sigma_delta,
                                      size_t n,
                                      uint64_t seed,
                                      double *p_suc,
                                      double *stderr);

/**
 * Samples Δ, alloy and gate disorder along `n_channels` horizontal lines
 * at heights `channels` (nm) over [x_min, x_max].
 *
 * # Safety
 * `channels` must point to `n_channels` values; `handle` must be writable.
 */
enum VsStatus vs_landscape_sample(double sigma_delta,
                                  double sigma_eps,
                                  double l_dot,
                                  double pitch,
                                  double x_min,
                                  double x_max,
                                  const double *channels,
                                  size_t n_channels,
                                  bool correlated_gates,
                                  uint64_t seed,
                                  struct VsLandscape **handle);

/**
 * Interpolated valley coupling Δ (μeV) on channel `k` at `x` (nm).
 *
 * # Safety
 * `h` must be a live handle; `re` and `im` must be writable.
 */
enum VsStatus vs_landscape_delta(const struct VsLandscape *h,
                                 size_t k,
                                 double x,
                                 double *re,
                                 double *im);

/**
 * Total potential disorder (alloy plus gate, μeV) on channel `k` at `x`.
 *
 * # Safety
 * `h` must be a live handle; `eps` must be writable.
 */
enum VsStatus vs_landscape_eps(const struct VsLandscape *h, size_t k, double x, double *eps);

/**
 * # Safety
 * `h` must be null or a handle from [`vs_landscape_sample`], freed once.
 */
void vs_landscape_free(struct VsLandscape *h);

/**
 * Fills `p` with the library defaults.
 *
 * # Safety
 * `p` must be writable.
 */
enum VsStatus vs_shuttle_params_default(struct VsShuttleParams *p);

/**
 * Runs one shuttle under phonon relaxation.
 *
 * # Safety
 * `params` must be readable; `handle` must be writable.
 */
enum VsStatus vs_shuttle_run(const struct VsShuttleParams *params, struct VsShuttleRun **handle);

/**
 * Leakage 1 − F and the population left in the central pocket.
 *
 * # Safety
 * `h` must be a live handle; outputs must be writable.
 */
enum VsStatus vs_shuttle_result(const struct VsShuttleRun *h,
                                double *leakage,
                                double *fidelity,
                                size_t *steps);

/**
 * Number of recorded trace points.
 *
 * # Safety
 * `h` must be a live handle; `len` must be writable.
 */
enum VsStatus vs_shuttle_trace_len(const struct VsShuttleRun *h, size_t *len);

/**
 * Trace point `i`: center position (nm), trace of ρ and the six pocket
 * populations (central ground, central excited, neighbors 2–5) into
 * `populations`.
 *
 * # Safety
 * `h` must be a live handle; `populations` must hold 6 values.
 */
enum VsStatus vs_shuttle_trace_point(const struct VsShuttleRun *h,
                                     size_t i,
                                     double *x,
                                     double *trace,
                                     double *populations);

/**
 * # Safety
 * `h` must be null or a handle from [`vs_shuttle_run`], freed once.
 */
void vs_shuttle_free(struct VsShuttleRun *h);

/**
 * Orbital energy E_orb and neighbor tunnel coupling t_p (both meV) of a
 * static clavette pocket.
 *
 * # Safety
 * Outputs must be writable.
 */
enum VsStatus vs_electro_cell(double pitch, double v_amp, double *e_orb, double *t_p);

/**
 * Parses a TOML experiment config.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `handle` must be writable.
 */
enum VsStatus vs_experiment_parse(const char *toml, struct VsExperiment **handle);

/**
 * Runs the experiment with `jobs` threads (0 for all cores) and writes
 * its outputs into `out_dir`. `failed` receives the number of failed
 * records.
 *
 * # Safety
 * `h` must be a live handle, `out_dir` a NUL-terminated string and
 * `failed` writable.
 */
enum VsStatus vs_experiment_run(const struct VsExperiment *h,
                                size_t jobs,
                                const char *out_dir,
                                size_t *failed);

/**
 * # Safety
 * `h` must be null or a handle from [`vs_experiment_parse`], freed once.
 */
void vs_experiment_free(struct VsExperiment *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALLEY_SHUTTLE_H */
