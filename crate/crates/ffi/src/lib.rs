//! C interface to the signal lab.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every fallible call returns a [`SlStatus`]; on failure
//! the message is kept per thread and read back with [`sl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use signal_lab::controller::ControllerKind;
use signal_lab::duration::{defuzzify_duration, FuzzyLight};
use signal_lab::harness::{throughput_rate, CellResult, EpisodeMetrics, Experiment, LoadedScenario, NoiseSpec};
use signal_lab::nn::Checkpoint;
use signal_lab::sensing::NoiseKind;
use signal_lab::sim::DurationBounds;
use signal_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Scenario = 4,
    InvalidInput = 5,
    UnknownController = 6,
    Checkpoint = 7,
    Internal = 8,
    Panic = 9,
}

/// Summary of one (controller, seed, noise) cell.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SlCell {
    pub episodes: u64,
    pub att_mean: f64,
    pub att_std: f64,
    pub throughput_mean: f64,
    pub stops_mean: f64,
}

/// A parsed scenario with its road network.
pub struct SlScenario(LoadedScenario);

/// A learned controller and its network weights.
pub struct SlModel(FuzzyLight);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Io { .. } => SlStatus::Io,
        Error::Scenario(_) | Error::Network(_) | Error::Flow(_) => SlStatus::Scenario,
        Error::UnknownController(_) => SlStatus::UnknownController,
        Error::Checkpoint(_) => SlStatus::Checkpoint,
        Error::InvalidInput(_) | Error::DurationOutOfRange { .. } | Error::Sensing(_) => SlStatus::InvalidInput,
        _ => SlStatus::Internal,
    }
}

struct Fail(SlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside signal-lab".into());
            SlStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(SlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SlStatus::InvalidUtf8, "string argument is not UTF-8".into()))
}

unsafe fn noise_arg(kind: *const c_char, scale: f64) -> Result<NoiseSpec, Fail> {
    let kind: NoiseKind = str_arg(kind)?.parse()?;
    Ok(NoiseSpec { kind, scale })
}

fn cell_of(c: &CellResult) -> SlCell {
    SlCell {
        episodes: c.episodes as u64,
        att_mean: c.att_mean,
        att_std: c.att_std,
        throughput_mean: c.throughput_mean,
        stops_mean: c.stops_mean,
    }
}

/// Copies the calling thread's last error message into `buf` (always NUL
/// terminated when `len > 0`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_scenario_load(path: *const c_char, out: *mut *mut SlScenario) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let sc = LoadedScenario::from_path(&PathBuf::from(str_arg(path)?))?;
        *out = Box::into_raw(Box::new(SlScenario(sc)));
        Ok(())
    })
}

/// # Safety
/// `sc` must come from [`sl_scenario_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_scenario_free(sc: *mut SlScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Episode length in seconds, 0 for a null handle.
///
/// # Safety
/// `sc` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn sl_scenario_episode_length(sc: *const SlScenario) -> u32 {
    sc.as_ref().map_or(0, |s| s.0.episode_length())
}

/// Runs one cell: learned controllers train for `rounds`, rule-based ones
/// run a single episode.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_run_cell(
    sc: *const SlScenario,
    controller: *const c_char,
    seed: u64,
    noise_kind: *const c_char,
    noise_scale: f64,
    rounds: usize,
    out: *mut SlCell,
) -> SlStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let kind: ControllerKind = str_arg(controller)?.parse()?;
        let noise = noise_arg(noise_kind, noise_scale)?;
        let (cell, _, _) = Experiment::new(&sc.0).run_cell(kind, seed, noise, rounds)?;
        *out = cell_of(&cell);
        Ok(())
    })
}

/// Trains a learned controller (`fuzzylight` or `fuzzy_cycle`).
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_model_train(
    sc: *const SlScenario,
    controller: *const c_char,
    seed: u64,
    noise_kind: *const c_char,
    noise_scale: f64,
    rounds: usize,
    out: *mut *mut SlModel,
) -> SlStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let kind: ControllerKind = str_arg(controller)?.parse()?;
        if !kind.is_learned() {
            return Err(Fail(SlStatus::InvalidInput, format!("{kind} has nothing to train")));
        }
        let noise = noise_arg(noise_kind, noise_scale)?;
        let exp = Experiment::new(&sc.0);
        let mut model = exp.fuzzy(kind, seed)?;
        exp.train(&mut model, seed, noise, rounds, |_| {})?;
        *out = Box::into_raw(Box::new(SlModel(model)));
        Ok(())
    })
}

/// Frozen evaluation of `model` over `count` episodes of `sc`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_model_evaluate(
    model: *mut SlModel,
    sc: *const SlScenario,
    seed: u64,
    noise_kind: *const c_char,
    noise_scale: f64,
    count: usize,
    out: *mut SlCell,
) -> SlStatus {
    guard(|| {
        let model = model.as_mut().ok_or_else(null)?;
        let sc = sc.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        if count == 0 {
            return Err(Fail(SlStatus::InvalidInput, "count must be positive".into()));
        }
        let noise = noise_arg(noise_kind, noise_scale)?;
        let exp = Experiment::new(&sc.0);
        let kind = signal_lab::controller::SignalController::kind(&model.0);
        let rows = exp.evaluate(&mut model.0, seed, noise, count)?;
        let refs: Vec<&EpisodeMetrics> = rows.iter().collect();
        *out = cell_of(&exp.summarise(kind, seed, noise, &refs)?);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_model_save(model: *const SlModel, path: *const c_char) -> SlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(null)?;
        let agent = model.0.agent().ok_or_else(|| Fail(SlStatus::InvalidInput, "model has no network".into()))?;
        agent.checkpoint().save(&PathBuf::from(str_arg(path)?))?;
        Ok(())
    })
}

/// Loads weights saved by [`sl_model_save`] into `model`.
///
/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_model_load_weights(model: *mut SlModel, path: *const c_char) -> SlStatus {
    guard(|| {
        let model = model.as_mut().ok_or_else(null)?;
        let ck = Checkpoint::load(&PathBuf::from(str_arg(path)?))?;
        let agent = model
            .0
            .agent_mut()
            .ok_or_else(|| Fail(SlStatus::InvalidInput, "model has no network".into()))?;
        agent.load_checkpoint(&ck)?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`sl_model_train`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_model_free(model: *mut SlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Green seconds for actor output `h`, reference `refer` and exploration
/// offset `eps`, clipped to `[low, high]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_defuzzify_duration(
    h: f64,
    refer: f64,
    eps: f64,
    low: u32,
    high: u32,
    out: *mut u32,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let bounds = DurationBounds::new(low, high)?;
        *out = defuzzify_duration(h, refer, eps, bounds);
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_throughput_rate(xi: u32, xj: u32, out: *mut f64) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = throughput_rate(xi, xj)?;
        Ok(())
    })
}
