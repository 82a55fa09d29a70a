//! C interface to the treegrowth engine.
//!
//! Groups are opaque handles built from a JSON configuration. Every call
//! returns a [`TgStatus`]; on failure the message is available from
//! [`tg_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use treegrowth::config::GroupConfig;
use treegrowth::growth::SphereTable;
use treegrowth::growth::Tables;
use treegrowth::incompressible::{level_counts, Incompressibility};
use treegrowth::{Error, Group};

/// Result codes; the non-zero values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    Domain = 1,
    Parse = 2,
    Budget = 3,
    NullArgument = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// An opaque group handle.
pub struct TgGroup {
    config: GroupConfig,
    group: Arc<Group>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> TgStatus {
    let status = match e.exit_code() {
        2 => TgStatus::Parse,
        3 => TgStatus::Budget,
        _ => TgStatus::Domain,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), TgStatus>) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            TgStatus::Panic
        }
    }
}

fn null(what: &str) -> TgStatus {
    set_error(format!("{what} is null"));
    TgStatus::NullArgument
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, TgStatus> {
    if s.is_null() {
        return Err(null("string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        set_error(format!("invalid UTF-8: {e}"));
        TgStatus::Parse
    })
}

unsafe fn group_ref<'a>(g: *const TgGroup) -> Result<&'a TgGroup, TgStatus> {
    g.as_ref().ok_or_else(|| null("group handle"))
}

fn copy_out(values: &[u64], out: *mut u64, out_len: usize, written: *mut usize) -> Result<(), TgStatus> {
    if written.is_null() {
        return Err(null("written"));
    }
    // SAFETY: checked non-null; the caller owns the slot.
    unsafe { *written = values.len() };
    if values.len() > out_len {
        set_error(format!("buffer holds {out_len} values, {} needed", values.len()));
        return Err(TgStatus::BufferTooSmall);
    }
    if out.is_null() {
        return if values.is_empty() { Ok(()) } else { Err(null("out")) };
    }
    // SAFETY: `out` has room for `out_len ≥ values.len()` values.
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Parses a JSON configuration and builds a validated group.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_group_from_config_json(json: *const c_char, out: *mut *mut TgGroup) -> TgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let config = GroupConfig::from_json(read_str(json)?).map_err(fail)?;
        let group = config.build().map_err(fail)?;
        *out = Box::into_raw(Box::new(TgGroup { config, group }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `group` must come from [`tg_group_from_config_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tg_group_free(group: *mut TgGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// Validates a configuration without keeping the group. On failure the
/// last error names the failing checks.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tg_validate_config_json(json: *const c_char) -> TgStatus {
    guard(|| {
        let config = GroupConfig::from_json(read_str(json)?).map_err(fail)?;
        config.family().and_then(|f| f.spec.validate().into_result()).map_err(fail)?;
        Ok(())
    })
}

/// Tree degree and number of distinct level classes.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tg_group_shape(group: *const TgGroup, degree: *mut usize, levels: *mut usize) -> TgStatus {
    guard(|| {
        let g = group_ref(group)?;
        if degree.is_null() || levels.is_null() {
            return Err(null("output"));
        }
        *degree = g.group.degree();
        *levels = g.group.num_classes();
        Ok(())
    })
}

fn check_level(g: &TgGroup, level: usize) -> Result<(), TgStatus> {
    if level >= g.group.num_classes() {
        return Err(fail(Error::InvalidArgument(format!("level class {level} out of range"))));
    }
    Ok(())
}

fn enumerate(g: &TgGroup, max_radius: u32) -> Result<Tables, TgStatus> {
    let t = Tables::enumerate(&g.group, max_radius, g.config.caps.max_elements).map_err(fail)?;
    if t.truncated() {
        return Err(fail(Error::BudgetExceeded { budget: g.config.caps.max_elements }));
    }
    Ok(t)
}

/// Writes `|Ω(0)|, …, |Ω(max_radius)|` at a level class. `written` receives
/// the number of values, also when the buffer is too small.
///
/// # Safety
/// `out` must have room for `out_len` values; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tg_sphere_sizes(
    group: *const TgGroup,
    level: usize,
    max_radius: u32,
    out: *mut u64,
    out_len: usize,
    written: *mut usize,
) -> TgStatus {
    guard(|| {
        let g = group_ref(group)?;
        check_level(g, level)?;
        let t = SphereTable::enumerate(&g.group, level, max_radius, g.config.caps.max_elements).map_err(fail)?;
        if t.truncated {
            return Err(fail(Error::BudgetExceeded { budget: g.config.caps.max_elements }));
        }
        let sizes: Vec<u64> = t.sphere_sizes().into_iter().map(|s| s as u64).collect();
        copy_out(&sizes, out, out_len, written)
    })
}

/// Writes `|I_k ∩ Ω(n)|` for `n = 0..=max_radius` at a level class.
///
/// # Safety
/// As for [`tg_sphere_sizes`].
#[no_mangle]
pub unsafe extern "C" fn tg_incompressible_counts(
    group: *const TgGroup,
    level: usize,
    max_radius: u32,
    k: u32,
    out: *mut u64,
    out_len: usize,
    written: *mut usize,
) -> TgStatus {
    guard(|| {
        let g = group_ref(group)?;
        check_level(g, level)?;
        let inc = Incompressibility::new(enumerate(g, max_radius)?, k).map_err(fail)?;
        let counts: Vec<u64> = level_counts(&inc, level, k).into_iter().map(|c| c as u64).collect();
        copy_out(&counts, out, out_len, written)
    })
}

/// The message of the last failing call on this thread, or null. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn tg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
