//! C ABI over the softflock simulator.
//!
//! A simulation lives behind an opaque [`SfSimulation`] pointer created by
//! [`sf_simulation_new`] and released with [`sf_simulation_free`]. Every
//! fallible call returns an [`SfStatus`]; the message for the most recent
//! failure on the calling thread is available from [`sf_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use softflock::control::{delta, u_beta, validate_manual};
use softflock::harness::{ControlMode, RunConfig};
use softflock::model::{apply_command, step, AgentState, ModelParams, SwarmState};
use softflock::{analysis, generate_scenario, CommandSource, ControlCommand, Error, UBetaParams};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    ScenarioViolation = 4,
    InvalidCommand = 5,
    ContractViolation = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Internal = 9,
}

/// One agent as seen from C.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SfAgent {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl From<&AgentState> for SfAgent {
    fn from(a: &AgentState) -> Self {
        SfAgent { x: a.position[0], y: a.position[1], heading: a.heading }
    }
}

/// Opaque simulation handle.
pub struct SfSimulation {
    params: ModelParams,
    state: SwarmState,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: SfStatus, msg: impl Into<String>) -> SfStatus {
    set_last_error(msg);
    status
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::Config(_) | Error::Json(_) => SfStatus::Config,
        Error::ScenarioViolation { .. } => SfStatus::ScenarioViolation,
        Error::InvalidCommand(_) => SfStatus::InvalidCommand,
        Error::ContractViolation(_) | Error::BoundAnomaly { .. } | Error::InsufficientWindow { .. } => {
            SfStatus::ContractViolation
        }
        _ => SfStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), SfStatus>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SfStatus::Panic, "panic inside softflock"),
    }
}

fn lift<T>(r: softflock::Result<T>) -> Result<T, SfStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn sim_mut<'a>(sim: *mut SfSimulation) -> Result<&'a mut SfSimulation, SfStatus> {
    sim.as_mut().ok_or_else(|| fail(SfStatus::NullPointer, "simulation handle is null"))
}

unsafe fn sim_ref<'a>(sim: *const SfSimulation) -> Result<&'a SfSimulation, SfStatus> {
    sim.as_ref().ok_or_else(|| fail(SfStatus::NullPointer, "simulation handle is null"))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, SfStatus> {
    p.as_mut().ok_or_else(|| fail(SfStatus::NullPointer, format!("{what} is null")))
}

/// Copies the last error message of this thread into `buf` as a NUL-terminated
/// string, truncating if needed. Returns the buffer size required to hold the
/// whole message including the terminator, or 0 when there is no message.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if msg.is_empty() {
            return 0;
        }
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a simulation from a JSON run config. The config's control mode is
/// ignored: the caller chooses a control for each step.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid
/// pointer. On success `*out` owns a handle that must be released with
/// [`sf_simulation_free`].
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_new(config_json: *const c_char, out: *mut *mut SfSimulation) -> SfStatus {
    guarded(|| {
        let out = out_mut(out, "out")?;
        *out = ptr::null_mut();
        if config_json.is_null() {
            return Err(fail(SfStatus::NullPointer, "config_json is null"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| fail(SfStatus::InvalidUtf8, e.to_string()))?;
        let mut config: RunConfig =
            serde_json::from_str(text).map_err(|e| fail(SfStatus::Config, e.to_string()))?;
        config.control = ControlMode::None;
        lift(config.validate())?;
        let state = lift(generate_scenario(&config.scenario))?;
        *out = Box::into_raw(Box::new(SfSimulation { params: config.model, state }));
        Ok(())
    })
}

/// Releases a handle. Null is accepted and ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`sf_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_free(sim: *mut SfSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Current tick, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_tick(sim: *const SfSimulation) -> u64 {
    sim.as_ref().map_or(0, |s| s.state.t)
}

/// Number of ordinary agents, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_agent_count(sim: *const SfSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.state.n())
}

/// Copies agents 1..=n into `buf`. `*written` receives the agent count; when
/// `len` is smaller than that, nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must point to `len` writable `SfAgent` slots (it may be null when
/// `len` is 0) and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_agents(
    sim: *const SfSimulation,
    buf: *mut SfAgent,
    len: usize,
    written: *mut usize,
) -> SfStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        let written = out_mut(written, "written")?;
        let n = sim.state.n();
        *written = n;
        if len < n {
            return Err(fail(SfStatus::BufferTooSmall, format!("need {n} slots, got {len}")));
        }
        if n > 0 && buf.is_null() {
            return Err(fail(SfStatus::NullPointer, "buf is null"));
        }
        for (i, a) in sim.state.agents.iter().enumerate() {
            *buf.add(i) = a.into();
        }
        Ok(())
    })
}

/// Writes the shill into `*shill` and sets `*present`; `*shill` is untouched
/// when there is no shill.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_shill(
    sim: *const SfSimulation,
    shill: *mut SfAgent,
    present: *mut bool,
) -> SfStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        let present = out_mut(present, "present")?;
        let shill = out_mut(shill, "shill")?;
        *present = sim.state.shill.is_some();
        if let Some(s) = &sim.state.shill {
            *shill = s.into();
        }
        Ok(())
    })
}

/// Spread of the current headings, `pi - min heading`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_delta(sim: *const SfSimulation, out: *mut f64) -> SfStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        let out = out_mut(out, "out")?;
        *out = lift(delta(&sim.state))?;
        Ok(())
    })
}

/// Advances one tick keeping whatever shill is in place.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_step(sim: *mut SfSimulation) -> SfStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        sim.state = step(&sim.state, &sim.params, None).state;
        Ok(())
    })
}

/// Removes the shill; later steps run the free flock.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_clear_shill(sim: *mut SfSimulation) -> SfStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        let cmd = ControlCommand::new([0.0, 0.0], 0.0, CommandSource::None);
        sim.state = apply_command(&sim.state, Some(&cmd));
        Ok(())
    })
}

/// Advances one tick with the shill placed by the u_beta law.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_step_ubeta(sim: *mut SfSimulation, beta: f64) -> SfStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        let params = lift(UBetaParams::new(beta).map_err(|e| Error::InvalidCommand(e.to_string())))?;
        let cmd = lift(u_beta(&sim.state, params))?;
        sim.state = step(&sim.state, &sim.params, Some(&cmd)).state;
        Ok(())
    })
}

/// Advances one tick with a manually placed shill.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_simulation_step_manual(sim: *mut SfSimulation, x: f64, y: f64, heading: f64) -> SfStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        let raw = ControlCommand::new([x, y], heading, CommandSource::Manual);
        let cmd = lift(validate_manual(&raw, &sim.state, &sim.params))?;
        sim.state = step(&sim.state, &sim.params, Some(&cmd)).state;
        Ok(())
    })
}

/// Writes eta(k) for a flock of `n` into `*out`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_eta(k: usize, n: usize, beta: f64, epsilon: f64, out: *mut f64) -> SfStatus {
    guarded(|| {
        let out = out_mut(out, "out")?;
        *out = lift(analysis::eta(k, n, beta, epsilon))?;
        Ok(())
    })
}

/// Writes the n-tick decrease bound eta(n) into `*out`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_delta_bound(n: usize, beta: f64, epsilon: f64, out: *mut f64) -> SfStatus {
    guarded(|| {
        let out = out_mut(out, "out")?;
        *out = lift(analysis::delta_bound(n, beta, epsilon))?;
        Ok(())
    })
}
