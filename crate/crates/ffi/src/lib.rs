//! C ABI over `bfexact`.
//!
//! Every fallible call returns a [`BfStatus`]; on failure a message is kept
//! per thread and read with [`bf_last_error`]. Tables are opaque handles
//! released with [`bf_table_free`]. Pass [`BF_N_INFINITE`] as `n1` for the
//! limit `n1 = ∞`.

use bfexact::error::Error;
use bfexact::fisher_behrens::{fb_prob, fb_prob_inf_n1, solve_fb_criterion, FbQuery};
use bfexact::ideal::{solve_ideal, solve_ideal_inf_n1, InitialGuess, SolveOptions};
use bfexact::kernel::{prob_v_below, prob_v_below_inf_n1};
use bfexact::power::{power_t, power_v_ideal, PowerSpec};
use bfexact::{io, CriterionTable, Design, SampleSize, VariancePoint};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// `n1` value standing for an infinite first sample.
pub const BF_N_INFINITE: u32 = u32::MAX;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The solver stopped above tolerance; the table is still returned.
    NotConverged = 3,
    Numerical = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

/// An ideal or Fisher–Behrens criterion table.
pub struct BfTable {
    inner: CriterionTable,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BfTableInfo {
    /// [`BF_N_INFINITE`] for the limit design.
    pub n1: u32,
    pub n2: u32,
    pub alpha: f64,
    /// 0 ideal, 1 Fisher–Behrens.
    pub family: u32,
    pub len: usize,
    pub converged: bool,
    pub max_abs_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BfStatus {
    match e {
        Error::Quadrature { .. } | Error::Bracket { .. } => BfStatus::Numerical,
        Error::Io(_) => BfStatus::Io,
        Error::Schema(_) | Error::Validation { .. } | Error::UnsupportedVersion { .. } => BfStatus::Format,
        _ => BfStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<BfStatus>) -> BfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BfStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            BfStatus::Panic
        }
    }
}

unsafe fn table_ref<'a>(t: *const BfTable) -> FfiResult<&'a CriterionTable> {
    t.as_ref().map(|t| &t.inner).ok_or(Fail::Null("table"))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &'static str) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> FfiResult<&'a Path> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Error::Domain("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn design(n1: u32, n2: u32) -> FfiResult<Design> {
    let n1 = if n1 == BF_N_INFINITE { SampleSize::Infinite } else { SampleSize::Finite(n1) };
    Ok(Design::with_sizes(n1, n2)?)
}

unsafe fn give_table(t: CriterionTable, out: *mut *mut BfTable) -> FfiResult<BfStatus> {
    let status = if t.converged { BfStatus::Ok } else { BfStatus::NotConverged };
    if !t.converged {
        set_error(format!("not converged: max |residual| {:e} above {:e}", t.max_abs_residual(), t.tolerance));
    }
    write_out(out, Box::into_raw(Box::new(BfTable { inner: t })), "out")?;
    Ok(status)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn bf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Solve the ideal criterion. `tol <= 0` selects the default tier for the
/// design. On `BF_STATUS_NOT_CONVERGED` the table is still written to `out`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_solve_ideal(n1: u32, n2: u32, alpha: f64, tol: f64, out: *mut *mut BfTable) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let d = design(n1, n2)?;
        let mut opts = SolveOptions::for_design(&d);
        if tol > 0.0 {
            opts.tol = tol;
        }
        let t = if d.is_finite() {
            solve_ideal(&d, alpha, InitialGuess::Auto, &opts)?
        } else {
            solve_ideal_inf_n1(n2, alpha, &opts)?
        };
        give_table(t, out)
    })
}

/// Tabulate the Fisher–Behrens criterion.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_solve_fb(n1: u32, n2: u32, alpha: f64, out: *mut *mut BfTable) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let t = solve_fb_criterion(&design(n1, n2)?, alpha)?;
        give_table(t, out)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_table_read(path: *const c_char, out: *mut *mut BfTable) -> BfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let t = io::read_table(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(BfTable { inner: t })), "out")?;
        Ok(BfStatus::Ok)
    })
}

/// # Safety
/// `table` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bf_table_write(table: *const BfTable, path: *const c_char) -> BfStatus {
    guard(|| {
        io::write_table(table_ref(table)?, path_arg(path)?)?;
        Ok(BfStatus::Ok)
    })
}

/// Release a table; NULL is ignored.
///
/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bf_table_free(table: *mut BfTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must come from this library; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bf_table_info(table: *const BfTable, out: *mut BfTableInfo) -> BfStatus {
    guard(|| {
        let t = table_ref(table)?;
        let info = BfTableInfo {
            n1: match t.design.n1 {
                SampleSize::Finite(n) => n,
                SampleSize::Infinite => BF_N_INFINITE,
            },
            n2: t.design.n2,
            alpha: t.alpha,
            family: match t.family {
                bfexact::Family::Ideal => 0,
                bfexact::Family::FisherBehrens => 1,
            },
            len: t.values.len(),
            converged: t.converged,
            max_abs_residual: t.max_abs_residual(),
        };
        write_out(out, info, "out")?;
        Ok(BfStatus::Ok)
    })
}

/// Copy lattice nodes and criterion values; `len` must equal the table length.
/// Either output may be NULL.
///
/// # Safety
/// Non-null outputs must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bf_table_values(
    table: *const BfTable,
    nodes: *mut f64,
    values: *mut f64,
    len: usize,
) -> BfStatus {
    guard(|| {
        let t = table_ref(table)?;
        if len != t.values.len() {
            return Err(Error::Length { expected: t.values.len(), got: len }.into());
        }
        if !nodes.is_null() {
            std::slice::from_raw_parts_mut(nodes, len).copy_from_slice(&t.nodes);
        }
        if !values.is_null() {
            std::slice::from_raw_parts_mut(values, len).copy_from_slice(&t.values);
        }
        Ok(BfStatus::Ok)
    })
}

/// Criterion value at `c = sin²θ ∈ [0, 1]`.
///
/// # Safety
/// `table` must come from this library; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bf_table_value_at_c(table: *const BfTable, c: f64, out: *mut f64) -> BfStatus {
    guard(|| {
        let t = table_ref(table)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain(format!("c must lie in [0, 1], got {c}")).into());
        }
        write_out(out, t.value_at_c(c), "out")?;
        Ok(BfStatus::Ok)
    })
}

/// `Pr{V ≤ v(Θ)}` at the nuisance value `γ ∈ [0, 1]` for the table's design.
///
/// # Safety
/// `table` must come from this library; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bf_prob_v_below(table: *const BfTable, gamma: f64, out: *mut f64) -> BfStatus {
    guard(|| {
        let t = table_ref(table)?;
        let d = t.design;
        let p = if d.is_finite() {
            prob_v_below(&t.interpolant(), &VariancePoint::from_gamma(gamma, &d)?, &d)?
        } else {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::Domain(format!("gamma must lie in [0, 1], got {gamma}")).into());
            }
            prob_v_below_inf_n1(&t.interpolant(), gamma, d.nu2())?
        };
        write_out(out, p, "out")?;
        Ok(BfStatus::Ok)
    })
}

/// Fisher–Behrens `Pr{V < v | Θ = θ}`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bf_fb_prob(n1: u32, n2: u32, theta_deg: f64, v: f64, out: *mut f64) -> BfStatus {
    guard(|| {
        let d = design(n1, n2)?;
        let p = if d.is_finite() {
            fb_prob(&FbQuery { design: d, theta_deg, v })?
        } else {
            fb_prob_inf_n1(d.nu2(), theta_deg, v)?
        };
        write_out(out, p, "out")?;
        Ok(BfStatus::Ok)
    })
}

/// Two-sided power at noncentrality `delta` of `T(ζ̃)` with a correct guess
/// and of `V` with the ideal criterion in `table`, at variance ratio `zeta`.
///
/// # Safety
/// `table` must come from this library; outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn bf_power(
    table: *const BfTable,
    zeta: f64,
    delta: f64,
    power_t_out: *mut f64,
    power_v_out: *mut f64,
) -> BfStatus {
    guard(|| {
        let t = table_ref(table)?;
        if power_t_out.is_null() || power_v_out.is_null() {
            return Err(Fail::Null("out"));
        }
        if !delta.is_finite() {
            return Err(Error::Domain(format!("delta must be finite, got {delta}")).into());
        }
        let spec = PowerSpec::new(t.clone(), zeta)?;
        let pt = power_t(delta, &t.design, t.alpha)?;
        let pv = power_v_ideal(delta, &spec)?;
        write_out(power_t_out, pt, "out")?;
        write_out(power_v_out, pv, "out")?;
        Ok(BfStatus::Ok)
    })
}
