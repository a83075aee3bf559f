//! C ABI over the simulator core.
//!
//! Conventions:
//!
//! - Every fallible call returns an [`OfwlStatus`]; outputs come back through
//!   pointers. `OFWL_STATUS_OK` is zero.
//! - On failure, a thread-local message describes the error; fetch it with
//!   [`ofwl_last_error_message`]. The pointer stays valid until the next
//!   failing call on the same thread.
//! - Netlists and runners are opaque handles. Free them with their matching
//!   `_free` function exactly once; all handle arguments must be non-null
//!   unless documented otherwise.
//! - Strings returned by `*_to_json` style calls are malloc'd by Rust and
//!   must be released with [`ofwl_string_free`].
//!
//! The header `include/ofwl.h` is generated from this file by cbindgen at
//! build time.

use ofwl_core::error::Error;
use ofwl_core::harness::{run_experiment, ExperimentConfig};
use ofwl_core::network::{step, ExecConfig, NetState, Netlist, SignalModel};
use ofwl_core::optics::{self, NoiseSpec, QuantizationSpec};
use ofwl_core::pulse::{self, Activation, PulseTrain, StreamId};
use ofwl_core::subnet::TrainConfig;
use ofwl_core::zoo;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OfwlStatus {
    Ok = 0,
    /// A precondition on an argument failed.
    InvalidArgument = 1,
    /// Sub-network training missed its target error.
    TrainingFailed = 2,
    /// A wiring plan produced an ill-formed network.
    CompositionFailed = 3,
    /// A netlist violated its structural invariants.
    InvalidNetlist = 4,
    /// JSON parsing or serialization failed.
    ParseFailed = 5,
    /// A required pointer was null.
    NullPointer = 6,
    /// The callee panicked; state may be stale but memory is intact.
    Panicked = 7,
}

/// Which built-in network to construct.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OfwlNetwork {
    SigmaAnd = 0,
    Umult = 1,
    Plantran = 2,
    Boolean = 3,
}

/// Opaque recurrent netlist handle.
pub struct OfwlNetlist {
    inner: Netlist,
}

/// Opaque execution context: a netlist plus its delay-line state.
pub struct OfwlRunner {
    net: Netlist,
    cfg: ExecConfig,
    state: NetState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error message had NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> OfwlStatus {
    match err {
        Error::InvalidArgument(_) => OfwlStatus::InvalidArgument,
        Error::TrainingFailure { .. } => OfwlStatus::TrainingFailed,
        Error::Composition(_) => OfwlStatus::CompositionFailed,
        Error::InvalidNetlist(_) => OfwlStatus::InvalidNetlist,
        Error::Serde(_) => OfwlStatus::ParseFailed,
        Error::Io(_) => OfwlStatus::ParseFailed,
    }
}

fn fail(err: Error) -> OfwlStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

/// Run a closure, translating panics and errors into status codes.
fn guarded<F: FnOnce() -> Result<(), OfwlStatus>>(f: F) -> OfwlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OfwlStatus::Ok,
        Ok(Err(code)) => code,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(msg);
            OfwlStatus::Panicked
        }
    }
}

/// Message for the most recent failure on this thread, or null if none.
#[no_mangle]
pub extern "C" fn ofwl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |c| c.as_ptr())
    })
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn ofwl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string allocated by this library.
///
/// # Safety
/// `s` must have come from an `ofwl_*` call that documents this free
/// function, and must not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ofwl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

/// Theoretical optical throughput in operations per second.
///
/// # Safety
/// `out` must point to writable memory for one f64.
#[no_mangle]
pub unsafe extern "C" fn ofwl_throughput(
    inputs: u64,
    outputs: u64,
    delta_x_m: f64,
    out: *mut f64,
) -> OfwlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let rate = optics::throughput(inputs, outputs, delta_x_m).map_err(fail)?;
        *out = rate;
        Ok(())
    })
}

/// Logistic squashing function.
///
/// # Safety
/// `out` must point to writable memory for one f64.
#[no_mangle]
pub unsafe extern "C" fn ofwl_squash(s: f64, out: *mut f64) -> OfwlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        *out = optics::squash(s).map_err(fail)?;
        Ok(())
    })
}

/// Snap a signal in [0,1] to the uniform 2^bits-level grid (bits = 0 is
/// identity).
///
/// # Safety
/// `out` must point to writable memory for one f64.
#[no_mangle]
pub unsafe extern "C" fn ofwl_quantize(x: f64, bits: u8, out: *mut f64) -> OfwlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let q = QuantizationSpec::new(bits).map_err(fail)?;
        *out = optics::quantize(x, q).map_err(fail)?;
        Ok(())
    })
}

/// Encode an activation as a stochastic pulse train, writing `np` slice
/// values (each 0.0 or 1.0) into `out_slices`.
///
/// # Safety
/// `out_slices` must point to writable memory for `np` f64 values.
#[no_mangle]
pub unsafe extern "C" fn ofwl_pulse_encode(
    value: f64,
    np: usize,
    seed: u64,
    lane: u64,
    out_slices: *mut f64,
) -> OfwlStatus {
    guarded(|| {
        if out_slices.is_null() {
            set_error("out_slices is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let a = Activation::new(value).map_err(fail)?;
        let train = pulse::encode(a, np, StreamId::new(seed, lane)).map_err(fail)?;
        ptr::copy_nonoverlapping(train.slices.as_ptr(), out_slices, np);
        Ok(())
    })
}

/// Decode a pulse train (mean of its slices).
///
/// # Safety
/// `slices` must point to `np` readable f64 values in [0,1]; `out` to one
/// writable f64.
#[no_mangle]
pub unsafe extern "C" fn ofwl_pulse_decode(
    slices: *const f64,
    np: usize,
    out: *mut f64,
) -> OfwlStatus {
    guarded(|| {
        if slices.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let v = std::slice::from_raw_parts(slices, np);
        let train = PulseTrain {
            slices: v.to_vec(),
            np,
            binary: false,
        };
        train.check().map_err(fail)?;
        *out = pulse::decode(&train);
        Ok(())
    })
}

/// Slice-wise AND product of two equal-length trains, decoded to a value.
///
/// # Safety
/// `a` and `b` must each point to `np` readable f64 values in [0,1]; `out`
/// to one writable f64.
#[no_mangle]
pub unsafe extern "C" fn ofwl_pulse_and_decode(
    a: *const f64,
    b: *const f64,
    np: usize,
    out: *mut f64,
) -> OfwlStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let ta = PulseTrain {
            slices: std::slice::from_raw_parts(a, np).to_vec(),
            np,
            binary: false,
        };
        let tb = PulseTrain {
            slices: std::slice::from_raw_parts(b, np).to_vec(),
            np,
            binary: false,
        };
        ta.check().map_err(fail)?;
        tb.check().map_err(fail)?;
        let anded = pulse::and_product(&ta, &tb).map_err(fail)?;
        *out = pulse::decode(&anded);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Netlist handles
// ---------------------------------------------------------------------------

/// Build one of the reproduced networks. `eta` and `train_seed` of zero pick
/// the calibrated defaults.
///
/// # Safety
/// `out` must point to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_build(
    network: OfwlNetwork,
    eta: f64,
    train_seed: u64,
    out: *mut *mut OfwlNetlist,
) -> OfwlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let train = TrainConfig {
            seed: if train_seed == 0 {
                TrainConfig::default().seed
            } else {
                train_seed
            },
            ..TrainConfig::default()
        };
        let net = match network {
            OfwlNetwork::SigmaAnd => zoo::build_sigma_and(),
            OfwlNetwork::Umult => zoo::build_umult(&train).map_err(fail)?,
            OfwlNetwork::Plantran => {
                let eta = if eta > 0.0 { eta } else { zoo::PLANTRAN_ETA };
                zoo::build_plantran(&train, eta).map_err(fail)?
            }
            OfwlNetwork::Boolean => {
                let eta = if eta > 0.0 { eta } else { zoo::BOOLEAN_ETA };
                zoo::build_boolean(eta).map_err(fail)?
            }
        };
        *out = Box::into_raw(Box::new(OfwlNetlist { inner: net }));
        Ok(())
    })
}

/// Parse a netlist from JSON text.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_from_json(
    json: *const c_char,
    out: *mut *mut OfwlNetlist,
) -> OfwlStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(format!("json is not UTF-8: {e}"));
            OfwlStatus::ParseFailed
        })?;
        let net = Netlist::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(OfwlNetlist { inner: net }));
        Ok(())
    })
}

/// Serialize a netlist to JSON; free the result with `ofwl_string_free`.
///
/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_to_json(
    net: *const OfwlNetlist,
    out: *mut *mut c_char,
) -> OfwlStatus {
    guarded(|| {
        if net.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let json = (*net).inner.to_json().map_err(fail)?;
        let c = CString::new(json).map_err(|_| {
            set_error("netlist JSON contained NUL".into());
            OfwlStatus::ParseFailed
        })?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Structural counts: layers, neurons, synapses, external input arity,
/// output arity. Null out-pointers are skipped.
///
/// # Safety
/// `net` must be a live handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_counts(
    net: *const OfwlNetlist,
    layers: *mut usize,
    neurons: *mut usize,
    synapses: *mut usize,
    inputs: *mut usize,
    outputs: *mut usize,
) -> OfwlStatus {
    guarded(|| {
        if net.is_null() {
            set_error("net is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let n = &(*net).inner;
        if !layers.is_null() {
            *layers = n.layer_count();
        }
        if !neurons.is_null() {
            *neurons = n.neuron_count();
        }
        if !synapses.is_null() {
            *synapses = n.synapse_count();
        }
        if !inputs.is_null() {
            *inputs = n.input_arity();
        }
        if !outputs.is_null() {
            *outputs = n.outputs.len();
        }
        Ok(())
    })
}

/// Check every structural invariant; `OFWL_STATUS_INVALID_NETLIST` carries
/// the diagnostics in the error message.
///
/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_validate(net: *const OfwlNetlist) -> OfwlStatus {
    guarded(|| {
        if net.is_null() {
            set_error("net is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        (*net).inner.ensure_valid().map_err(fail)?;
        Ok(())
    })
}

/// Release a netlist handle.
///
/// # Safety
/// `net` must have come from this library and not been freed before. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn ofwl_netlist_free(net: *mut OfwlNetlist) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

// ---------------------------------------------------------------------------
// Runner handles
// ---------------------------------------------------------------------------

/// Create an execution context over a copy of the netlist. `np` is the
/// pulse-train length, `bits` the signal quantization (0 ideal), `sigma`
/// the detector noise level; `exact` selects the reference float route.
///
/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofwl_runner_new(
    net: *const OfwlNetlist,
    np: usize,
    seed: u64,
    bits: u8,
    sigma: f64,
    exact: bool,
    out: *mut *mut OfwlRunner,
) -> OfwlStatus {
    guarded(|| {
        if net.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let netlist = (*net).inner.clone();
        netlist.ensure_valid().map_err(fail)?;
        let cfg = ExecConfig {
            np,
            seed,
            quantization: QuantizationSpec::new(bits).map_err(fail)?,
            noise: NoiseSpec::new(sigma, seed ^ 0x6e6f).map_err(fail)?,
            model: if exact {
                SignalModel::Exact
            } else {
                SignalModel::Hardware
            },
            quantize_mask: false,
        };
        if np == 0 {
            set_error("np must be at least 1".into());
            return Err(OfwlStatus::InvalidArgument);
        }
        let state = NetState::zero(&netlist);
        *out = Box::into_raw(Box::new(OfwlRunner {
            net: netlist,
            cfg,
            state,
        }));
        Ok(())
    })
}

/// Advance one macro-step. `inputs` supplies `n_inputs` external values in
/// [0,1); `outputs` receives `n_outputs` activations.
///
/// # Safety
/// `runner` must be a live handle; `inputs` must hold `n_inputs` readable
/// f64 values and `outputs` room for `n_outputs`.
#[no_mangle]
pub unsafe extern "C" fn ofwl_runner_step(
    runner: *mut OfwlRunner,
    inputs: *const f64,
    n_inputs: usize,
    outputs: *mut f64,
    n_outputs: usize,
) -> OfwlStatus {
    guarded(|| {
        if runner.is_null() || (n_inputs > 0 && inputs.is_null()) {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let r = &mut *runner;
        if n_inputs != r.net.input_arity() {
            set_error(format!(
                "expected {} inputs, got {n_inputs}",
                r.net.input_arity()
            ));
            return Err(OfwlStatus::InvalidArgument);
        }
        if n_outputs < r.net.outputs.len() {
            set_error(format!(
                "need room for {} outputs, got {n_outputs}",
                r.net.outputs.len()
            ));
            return Err(OfwlStatus::InvalidArgument);
        }
        let external = std::slice::from_raw_parts(inputs, n_inputs);
        let state = std::mem::replace(&mut r.state, NetState::zero(&r.net));
        let (next, outs) = step(&r.net, state, external, &r.cfg).map_err(fail)?;
        r.state = next;
        if !outputs.is_null() {
            ptr::copy_nonoverlapping(outs.as_ptr(), outputs, outs.len());
        }
        Ok(())
    })
}

/// Reset delay lines to the zero-initialized state.
///
/// # Safety
/// `runner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ofwl_runner_reset(runner: *mut OfwlRunner) -> OfwlStatus {
    guarded(|| {
        if runner.is_null() {
            set_error("runner is null".into());
            return Err(OfwlStatus::NullPointer);
        }
        let r = &mut *runner;
        r.state = NetState::zero(&r.net);
        Ok(())
    })
}

/// Release a runner handle.
///
/// # Safety
/// `runner` must have come from `ofwl_runner_new` and not been freed. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn ofwl_runner_free(runner: *mut OfwlRunner) {
    if !runner.is_null() {
        drop(Box::from_raw(runner));
    }
}

// ---------------------------------------------------------------------------
// Whole experiments
// ---------------------------------------------------------------------------

/// Run one full experiment from an `ExperimentConfig` JSON document and
/// return the run record (config echo, task, per-step MSE series, detected
/// convergence step, post-convergence MSE) as JSON. Free the result with
/// `ofwl_string_free`.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ofwl_run_experiment_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> OfwlStatus {
    guarded(|| {
        if config_json.is_null() || out.is_null() {
            set_error("null pointer".into());
            return Err(OfwlStatus::NullPointer);
        }
        let text = CStr::from_ptr(config_json).to_str().map_err(|e| {
            set_error(format!("config is not UTF-8: {e}"));
            OfwlStatus::ParseFailed
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            set_error(format!("config: {e}"));
            OfwlStatus::ParseFailed
        })?;
        let record = run_experiment(&cfg).map_err(fail)?;
        let json = serde_json::to_string(&record).map_err(|e| {
            set_error(e.to_string());
            OfwlStatus::ParseFailed
        })?;
        let c = CString::new(json).map_err(|_| {
            set_error("record JSON contained NUL".into());
            OfwlStatus::ParseFailed
        })?;
        *out = c.into_raw();
        Ok(())
    })
}
