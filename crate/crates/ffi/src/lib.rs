//! C ABI for the two-way QKD simulator.
//!
//! The interface follows the usual C conventions: opaque handles created and
//! destroyed by paired functions, integer status codes, and a thread-local
//! textual error retrievable with [`twq_last_error`]. All handle pointers
//! must come from this library and must not be used after being freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use twoway_qkd::analysis::{self, ChannelParams};
use twoway_qkd::config::Settings;
use twoway_qkd::protocol::{run_session, Transcript, Verdict};
use twoway_qkd::report::{write_summary, write_transcript};

/// Success.
pub const TWQ_OK: i32 = 0;
/// A required pointer was null.
pub const TWQ_ERR_NULL: i32 = 1;
/// A string argument was not valid UTF-8.
pub const TWQ_ERR_UTF8: i32 = 2;
/// A key, value, or numeric parameter was rejected; details via
/// `twq_last_error`.
pub const TWQ_ERR_ARG: i32 = 3;
/// A file operation failed; details via `twq_last_error`.
pub const TWQ_ERR_IO: i32 = 4;

/// Session verdict: the closing hashes agreed.
pub const TWQ_VERDICT_ACCEPTED: i32 = 0;
/// Session verdict: the closing hashes disagreed.
pub const TWQ_VERDICT_HASH_MISMATCH: i32 = 1;
/// Session verdict: an authentication round failed the integrity condition.
pub const TWQ_VERDICT_AUTH_FAILURE: i32 = 2;
/// Session verdict: the session ended with no key material.
pub const TWQ_VERDICT_ABORTED: i32 = 3;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::default());
}

/// Opaque configuration handle: session parameters and adversary selection,
/// keyed exactly like the config file format.
pub struct TwqConfig {
    settings: Settings,
}

/// Opaque handle to one completed session.
pub struct TwqTranscript {
    transcript: Transcript,
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(TWQ_ERR_NULL);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8".to_string());
        TWQ_ERR_UTF8
    })
}

/// Creates a configuration with the documented defaults. Free with
/// `twq_config_free`. Returns null only on allocation failure.
#[no_mangle]
pub extern "C" fn twq_config_new() -> *mut TwqConfig {
    clear_last_error();
    Box::into_raw(Box::new(TwqConfig {
        settings: Settings::default(),
    }))
}

/// Assigns one configuration key (`N`, `c`, `mu`, `t`, `seed`, `attack`,
/// ...), validating the value range.
///
/// # Safety
/// `cfg` must be a live handle from `twq_config_new`; `key` and `value` must
/// be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn twq_config_set(
    cfg: *mut TwqConfig,
    key: *const c_char,
    value: *const c_char,
) -> i32 {
    clear_last_error();
    let Some(cfg) = cfg.as_mut() else {
        return TWQ_ERR_NULL;
    };
    let key = match utf8_arg(key) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let value = match utf8_arg(value) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match cfg.settings.set(key, value) {
        Ok(()) => TWQ_OK,
        Err(err) => {
            set_last_error(err.to_string());
            TWQ_ERR_ARG
        }
    }
}

/// Releases a configuration handle; null is ignored.
///
/// # Safety
/// `cfg` must be null or a live handle from `twq_config_new`.
#[no_mangle]
pub unsafe extern "C" fn twq_config_free(cfg: *mut TwqConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one full session under the configured adversary and stores a new
/// transcript handle in `out`. Free the transcript with
/// `twq_transcript_free`.
///
/// # Safety
/// `cfg` must be a live configuration handle; `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn twq_run(cfg: *const TwqConfig, out: *mut *mut TwqTranscript) -> i32 {
    clear_last_error();
    let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
        return TWQ_ERR_NULL;
    };
    if let Err(err) = cfg.settings.validate() {
        set_last_error(err.to_string());
        return TWQ_ERR_ARG;
    }
    match run_session(&cfg.settings.session, cfg.settings.attack()) {
        Ok(transcript) => {
            *out = Box::into_raw(Box::new(TwqTranscript { transcript }));
            TWQ_OK
        }
        Err(err) => {
            set_last_error(err.to_string());
            TWQ_ERR_ARG
        }
    }
}

/// Releases a transcript handle; null is ignored.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_free(transcript: *mut TwqTranscript) {
    if !transcript.is_null() {
        drop(Box::from_raw(transcript));
    }
}

/// The session verdict as a `TWQ_VERDICT_*` value, or -1 on a null handle.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_verdict(transcript: *const TwqTranscript) -> i32 {
    match transcript.as_ref() {
        None => -1,
        Some(t) => match t.transcript.verdict {
            Verdict::Accepted => TWQ_VERDICT_ACCEPTED,
            Verdict::HashMismatch => TWQ_VERDICT_HASH_MISMATCH,
            Verdict::AuthFailure => TWQ_VERDICT_AUTH_FAILURE,
            Verdict::Aborted => TWQ_VERDICT_ABORTED,
        },
    }
}

/// The sifted error rate, or NaN when the session produced no key or the
/// handle is null.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_qber(transcript: *const TwqTranscript) -> f64 {
    transcript
        .as_ref()
        .and_then(|t| t.transcript.qber())
        .unwrap_or(f64::NAN)
}

/// Sifted bits per executed round, or NaN on a null handle.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_sift_rate(transcript: *const TwqTranscript) -> f64 {
    transcript
        .as_ref()
        .map(|t| t.transcript.sift_rate())
        .unwrap_or(f64::NAN)
}

/// Number of executed rounds; 0 on a null handle.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_rounds(transcript: *const TwqTranscript) -> u64 {
    transcript
        .as_ref()
        .map(|t| t.transcript.rounds.len() as u64)
        .unwrap_or(0)
}

/// Number of sifted key bits; 0 on a null handle.
///
/// # Safety
/// `transcript` must be null or a live handle from `twq_run`.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_key_bits(transcript: *const TwqTranscript) -> u64 {
    transcript
        .as_ref()
        .map(|t| t.transcript.alice_key_bits.len() as u64)
        .unwrap_or(0)
}

unsafe fn save_with(
    transcript: *const TwqTranscript,
    path: *const c_char,
    write: impl Fn(&Transcript, &mut BufWriter<File>) -> std::io::Result<()>,
) -> i32 {
    clear_last_error();
    let Some(t) = transcript.as_ref() else {
        return TWQ_ERR_NULL;
    };
    let path = match utf8_arg(path) {
        Ok(s) => Path::new(s),
        Err(code) => return code,
    };
    let result = File::create(path)
        .map(BufWriter::new)
        .and_then(|mut w| write(&t.transcript, &mut w).and_then(|()| w.flush()));
    match result {
        Ok(()) => TWQ_OK,
        Err(err) => {
            set_last_error(format!("{}: {err}", path.display()));
            TWQ_ERR_IO
        }
    }
}

/// Writes the full round-by-round transcript file to `path`.
///
/// # Safety
/// `transcript` must be a live handle from `twq_run`; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_save(
    transcript: *const TwqTranscript,
    path: *const c_char,
) -> i32 {
    save_with(transcript, path, |t, w| write_transcript(t, w))
}

/// Writes the `key = value` summary block to `path`.
///
/// # Safety
/// `transcript` must be a live handle from `twq_run`; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn twq_transcript_save_summary(
    transcript: *const TwqTranscript,
    path: *const c_char,
) -> i32 {
    save_with(transcript, path, |t, w| write_summary(t, w))
}

/// Optimal estimation fidelity for `n` identically polarized photons.
#[no_mangle]
pub extern "C" fn twq_fidelity_bound(n: u64) -> f64 {
    analysis::fidelity_bound(n)
}

/// The eavesdropper information bound at unit return-leg intensity.
#[no_mangle]
pub extern "C" fn twq_critical_info() -> f64 {
    analysis::critical_info()
}

/// Stores the critical mean photon number `1 / ((1 - eta) eta t)` in `out`.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn twq_critical_mu(eta: f64, t: f64, out: *mut f64) -> i32 {
    clear_last_error();
    if out.is_null() {
        return TWQ_ERR_NULL;
    }
    match analysis::critical_mu(eta, t) {
        Ok(mu) => {
            *out = mu;
            TWQ_OK
        }
        Err(err) => {
            set_last_error(err.to_string());
            TWQ_ERR_ARG
        }
    }
}

/// Stores the overall eavesdropper information bound for a beam-splitting
/// attack at `(mu, eta, t)` in `out`, evaluated to series tolerance `tol`.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn twq_eve_info(
    mu: f64,
    eta: f64,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> i32 {
    clear_last_error();
    if out.is_null() {
        return TWQ_ERR_NULL;
    }
    match analysis::eve_info(ChannelParams { mu, eta, t }, tol) {
        Ok(info) => {
            *out = info.i_e;
            TWQ_OK
        }
        Err(err) => {
            set_last_error(err.to_string());
            TWQ_ERR_ARG
        }
    }
}

/// Copies the current thread's last error message into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
/// full message length in bytes. Returns 0 when no error is pending.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn twq_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
