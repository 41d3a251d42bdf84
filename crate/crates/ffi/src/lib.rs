//! C interface to the valley-shuttle engine.
//!
//! Every function returns a [`VsStatus`]. On failure the message of the
//! last error on the calling thread can be copied out with
//! [`vs_last_error_message`]. Objects that own memory are passed as opaque
//! handles and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use valley_shuttle::disorder::{sample_landscape_bundle, CrossChannel, GateCorrelation, LandscapeBundle, LandscapeConfig};
use valley_shuttle::electrostatics::{window_cell, WindowOptions};
use valley_shuttle::harness::{run_experiment, write_outputs, ExperimentConfig};
use valley_shuttle::lindblad::{phonon_table_for, run_shuttle, ShuttleConfig, ShuttleRun};
use valley_shuttle::linalg::C64;
use valley_shuttle::transfer::{
    evolve_transfer, monte_carlo_success, IntegratorOptions, McConfig, TransferScenario, TransferSchedule,
};
use valley_shuttle::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    NotApplicable = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> VsStatus {
    match e {
        Error::InvalidParameter { .. } | Error::OutOfDomain { .. } | Error::StepTooSmall { .. } => {
            VsStatus::InvalidArgument
        }
        Error::Config(_) | Error::MalformedRow { .. } => VsStatus::Config,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => VsStatus::Io,
        Error::NotApplicable(_) => VsStatus::NotApplicable,
        Error::Panicked(_) => VsStatus::Panic,
        _ => VsStatus::Numerical,
    }
}

/// Runs `f`, records its error message and maps it to a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            VsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside valley-shuttle".into());
            VsStatus::Panic
        }
    }
}

struct Failure(VsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(VsStatus::NullPointer, format!("`{what}` is null"))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null pointers must reference a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(VsStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Final |⟨g,R|ψ⟩|² of a paused transfer with fixed valley couplings
/// (μeV, ns).
#[no_mangle]
pub extern "C" fn vs_transfer_paused(
    epsilon0: f64,
    t0: f64,
    tau_tot: f64,
    delta_l_re: f64,
    delta_l_im: f64,
    delta_r_re: f64,
    delta_r_im: f64,
    fidelity: *mut f64,
) -> VsStatus {
    guard(|| {
        let f = out(fidelity, "fidelity")?;
        let s = TransferSchedule::new(epsilon0, t0, tau_tot)?;
        let scenario = TransferScenario::Paused {
            delta_l: C64::new(delta_l_re, delta_l_im),
            delta_r: C64::new(delta_r_re, delta_r_im),
        };
        let opts = IntegratorOptions::default();
        *f = evolve_transfer(&s, scenario, &opts, McConfig::default().success_threshold, false)?.fidelity;
        Ok(())
    })
}

/// Paused-transfer success probability over `n` valley draws.
#[no_mangle]
pub extern "C" fn vs_transfer_monte_carlo(
    epsilon0: f64,
    t0: f64,
    tau_tot: f64,
    sigma_delta: f64,
    n: usize,
    seed: u64,
    p_suc: *mut f64,
    stderr: *mut f64,
) -> VsStatus {
    guard(|| {
        let (p, e) = (out(p_suc, "p_suc")?, out(stderr, "stderr")?);
        let s = TransferSchedule::new(epsilon0, t0, tau_tot)?;
        let cfg = McConfig { sigma_delta, ..McConfig::default() };
        let m = monte_carlo_success(&s, n, &cfg, seed)?;
        (*p, *e) = (m.p_suc, m.stderr);
        Ok(())
    })
}

/// Sampled disorder landscape.
pub struct VsLandscape(LandscapeBundle);

/// Samples Δ, alloy and gate disorder along `n_channels` horizontal lines
/// at heights `channels` (nm) over [x_min, x_max].
///
/// # Safety
/// `channels` must point to `n_channels` values; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_landscape_sample(
    sigma_delta: f64,
    sigma_eps: f64,
    l_dot: f64,
    pitch: f64,
    x_min: f64,
    x_max: f64,
    channels: *const f64,
    n_channels: usize,
    correlated_gates: bool,
    seed: u64,
    handle: *mut *mut VsLandscape,
) -> VsStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = std::ptr::null_mut();
        if channels.is_null() {
            return Err(null("channels"));
        }
        let ys = std::slice::from_raw_parts(channels, n_channels).to_vec();
        let cfg = LandscapeConfig {
            sigma_delta,
            sigma_eps,
            l_dot,
            pitch,
            channels: ys,
            x_min,
            x_max,
            gate_mode: if correlated_gates { GateCorrelation::Correlated } else { GateCorrelation::Uncorrelated },
            cross_channel: CrossChannel::Independent,
            tunnel: None,
            master_seed: seed,
        };
        *h = Box::into_raw(Box::new(VsLandscape(sample_landscape_bundle(&cfg)?)));
        Ok(())
    })
}

fn landscape<'a>(h: *const VsLandscape) -> Result<&'a LandscapeBundle, Failure> {
    // SAFETY: handles come from vs_landscape_sample and are not yet freed.
    unsafe { h.as_ref() }.map(|l| &l.0).ok_or_else(|| null("landscape"))
}

fn channel(b: &LandscapeBundle, k: usize) -> Result<&valley_shuttle::disorder::ChannelFields, Failure> {
    b.channels
        .get(k)
        .ok_or_else(|| Failure(VsStatus::InvalidArgument, format!("channel {k} of {}", b.channels.len())))
}

/// Interpolated valley coupling Δ (μeV) on channel `k` at `x` (nm).
///
/// # Safety
/// `h` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_landscape_delta(
    h: *const VsLandscape,
    k: usize,
    x: f64,
    re: *mut f64,
    im: *mut f64,
) -> VsStatus {
    guard(|| {
        let (re, im) = (out(re, "re")?, out(im, "im")?);
        let d = channel(landscape(h)?, k)?.delta(x)?;
        (*re, *im) = (d.re, d.im);
        Ok(())
    })
}

/// Total potential disorder (alloy plus gate, μeV) on channel `k` at `x`.
///
/// # Safety
/// `h` must be a live handle; `eps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_landscape_eps(h: *const VsLandscape, k: usize, x: f64, eps: *mut f64) -> VsStatus {
    guard(|| {
        let e = out(eps, "eps")?;
        *e = channel(landscape(h)?, k)?.eps(x)?;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`vs_landscape_sample`], freed once.
#[no_mangle]
pub unsafe extern "C" fn vs_landscape_free(h: *mut VsLandscape) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Parameters of a five-pocket shuttle run (m/s, μm, μeV, nm).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VsShuttleParams {
    pub velocity: f64,
    pub distance_um: f64,
    pub t0: f64,
    pub pitch: f64,
    pub l_dot: f64,
    pub sigma_delta: f64,
    pub sigma_eps: f64,
    pub seed: u64,
}

/// Fills `p` with the library defaults.
///
/// # Safety
/// `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_params_default(p: *mut VsShuttleParams) -> VsStatus {
    guard(|| {
        let d = ShuttleConfig::default();
        *out(p, "params")? = VsShuttleParams {
            velocity: d.velocity,
            distance_um: d.distance_um,
            t0: d.t0,
            pitch: d.pitch,
            l_dot: d.l_dot,
            sigma_delta: d.sigma_delta,
            sigma_eps: d.sigma_eps,
            seed: d.seed,
        };
        Ok(())
    })
}

/// Completed shuttle run.
pub struct VsShuttleRun(ShuttleRun);

/// Runs one shuttle under phonon relaxation.
///
/// # Safety
/// `params` must be readable; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_run(params: *const VsShuttleParams, handle: *mut *mut VsShuttleRun) -> VsStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = std::ptr::null_mut();
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let cfg = ShuttleConfig {
            velocity: p.velocity,
            distance_um: p.distance_um,
            t0: p.t0,
            pitch: p.pitch,
            l_dot: p.l_dot,
            sigma_delta: p.sigma_delta,
            sigma_eps: p.sigma_eps,
            seed: p.seed,
            ..ShuttleConfig::default()
        };
        let table = phonon_table_for(&cfg)?;
        *h = Box::into_raw(Box::new(VsShuttleRun(run_shuttle(&cfg, &table)?)));
        Ok(())
    })
}

fn shuttle<'a>(h: *const VsShuttleRun) -> Result<&'a ShuttleRun, Failure> {
    // SAFETY: handles come from vs_shuttle_run and are not yet freed.
    unsafe { h.as_ref() }.map(|r| &r.0).ok_or_else(|| null("run"))
}

/// Leakage 1 − F and the population left in the central pocket.
///
/// # Safety
/// `h` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_result(
    h: *const VsShuttleRun,
    leakage: *mut f64,
    fidelity: *mut f64,
    steps: *mut usize,
) -> VsStatus {
    guard(|| {
        let r = shuttle(h)?;
        *out(leakage, "leakage")? = r.leakage;
        *out(fidelity, "fidelity")? = r.fidelity;
        *out(steps, "steps")? = r.steps;
        Ok(())
    })
}

/// Number of recorded trace points.
///
/// # Safety
/// `h` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_trace_len(h: *const VsShuttleRun, len: *mut usize) -> VsStatus {
    guard(|| {
        *out(len, "len")? = shuttle(h)?.trace.len();
        Ok(())
    })
}

/// Trace point `i`: center position (nm), trace of ρ and the six pocket
/// populations (central ground, central excited, neighbors 2–5) into
/// `populations`.
///
/// # Safety
/// `h` must be a live handle; `populations` must hold 6 values.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_trace_point(
    h: *const VsShuttleRun,
    i: usize,
    x: *mut f64,
    trace: *mut f64,
    populations: *mut f64,
) -> VsStatus {
    guard(|| {
        let r = shuttle(h)?;
        let p = r
            .trace
            .get(i)
            .ok_or_else(|| Failure(VsStatus::InvalidArgument, format!("trace index {i} of {}", r.trace.len())))?;
        *out(x, "x")? = p.x;
        *out(trace, "trace")? = p.trace;
        if populations.is_null() {
            return Err(null("populations"));
        }
        std::slice::from_raw_parts_mut(populations, p.populations.len()).copy_from_slice(&p.populations);
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`vs_shuttle_run`], freed once.
#[no_mangle]
pub unsafe extern "C" fn vs_shuttle_free(h: *mut VsShuttleRun) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Orbital energy E_orb and neighbor tunnel coupling t_p (both meV) of a
/// static clavette pocket.
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_electro_cell(pitch: f64, v_amp: f64, e_orb: *mut f64, t_p: *mut f64) -> VsStatus {
    guard(|| {
        let (e, t) = (out(e_orb, "e_orb")?, out(t_p, "t_p")?);
        let c = window_cell(pitch, v_amp, &WindowOptions::default())?;
        (*e, *t) = (c.e_orb, c.t_p);
        Ok(())
    })
}

/// Parsed experiment config.
pub struct VsExperiment(ExperimentConfig);

/// Parses a TOML experiment config.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_experiment_parse(toml: *const c_char, handle: *mut *mut VsExperiment) -> VsStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = std::ptr::null_mut();
        let cfg = ExperimentConfig::from_toml(c_str(toml, "toml")?, "<ffi>")?;
        *h = Box::into_raw(Box::new(VsExperiment(cfg)));
        Ok(())
    })
}

/// Runs the experiment with `jobs` threads (0 for all cores) and writes
/// its outputs into `out_dir`. `failed` receives the number of failed
/// records.
///
/// # Safety
/// `h` must be a live handle, `out_dir` a NUL-terminated string and
/// `failed` writable.
#[no_mangle]
pub unsafe extern "C" fn vs_experiment_run(
    h: *const VsExperiment,
    jobs: usize,
    out_dir: *const c_char,
    failed: *mut usize,
) -> VsStatus {
    guard(|| {
        let cfg = &h.as_ref().ok_or_else(|| null("experiment"))?.0;
        let dir = c_str(out_dir, "out_dir")?;
        let f = out(failed, "failed")?;
        let res = run_experiment(cfg, (jobs > 0).then_some(jobs))?;
        write_outputs(cfg, &res, Path::new(dir))?;
        *f = res.failed();
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`vs_experiment_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn vs_experiment_free(h: *mut VsExperiment) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
