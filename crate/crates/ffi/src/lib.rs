//! C ABI over `specbayes`.
//!
//! Spectrum sets, observation tensors and Gaussian beliefs cross the
//! boundary as opaque handles created by `sb_*_new`/`sb_*_load` and released
//! with the matching `sb_*_free`. Every fallible call returns an
//! [`SbStatus`]; on failure a message is kept per thread and can be read
//! with [`sb_last_error_message`]. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::DMatrix;

use specbayes::estimators::{bayes_estimate, least_squares_estimate, EstimationProblem};
use specbayes::jiang::jiang_estimate;
use specbayes::priors::{flat_prior, PrecisionSpec};
use specbayes::{
    dataio, Error, GaussianBelief, NoiseModel, Observations, Role, Spectrum, SpectrumSet,
    WavelengthGrid,
};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    OutOfBounds = 4,
    GridMismatch = 5,
    RoleConflict = 6,
    NotPositiveDefinite = 7,
    Degenerate = 8,
    MethodScope = 9,
    Io = 10,
    Parse = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbRole {
    Illumination = 0,
    Reflectance = 1,
    Sensitivity = 2,
}

impl From<SbRole> for Role {
    fn from(role: SbRole) -> Self {
        match role {
            SbRole::Illumination => Role::Illumination,
            SbRole::Reflectance => Role::Reflectance,
            SbRole::Sensitivity => Role::Sensitivity,
        }
    }
}

/// Wavelength sampling: `count` samples from `start_nm` every `step_nm`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbGrid {
    pub start_nm: f64,
    pub step_nm: f64,
    pub count: usize,
}

/// Opaque family of spectra sharing one role and grid.
pub struct SbSpectrumSet(SpectrumSet);

/// Opaque `I × J × K` observation tensor.
pub struct SbObservations(Observations);

/// Opaque Gaussian belief (mean and precision).
pub struct SbBelief(GaussianBelief);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(error: &Error) -> SbStatus {
    match error {
        Error::InvalidGrid(_) | Error::InvalidArgument(_) | Error::IndexOutOfRange { .. } => {
            SbStatus::InvalidArgument
        }
        Error::LengthMismatch { .. } => SbStatus::LengthMismatch,
        Error::NonFinite { .. }
        | Error::OutOfBounds { .. }
        | Error::ExtrapolationRequired { .. } => SbStatus::OutOfBounds,
        Error::GridMismatch { .. } => SbStatus::GridMismatch,
        Error::RoleConflict(_) => SbStatus::RoleConflict,
        Error::NotSymmetric(_) | Error::NotPositiveDefinite | Error::NonPositivePosterior => {
            SbStatus::NotPositiveDefinite
        }
        Error::DegenerateDesign(_)
        | Error::DegenerateMean
        | Error::DegenerateBasis(_)
        | Error::NonConverged { .. }
        | Error::NoConfidenceAvailable => SbStatus::Degenerate,
        Error::MethodScope(_) => SbStatus::MethodScope,
        Error::Io(_) => SbStatus::Io,
        Error::MalformedRow { .. }
        | Error::NonUniformGrid { .. }
        | Error::NonIncreasing { .. }
        | Error::Manifest(_)
        | Error::Json(_)
        | Error::Dataset { .. } => SbStatus::Parse,
        Error::File { source, .. } => status_of(source),
    }
}

struct Failure(SbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SbStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SbStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn copy_into(dest: &mut [f64], src: &[f64]) -> Result<(), Failure> {
    if dest.len() != src.len() {
        return Err(Error::LengthMismatch {
            expected: src.len(),
            actual: dest.len(),
        }
        .into());
    }
    dest.copy_from_slice(src);
    Ok(())
}

fn grid_of(grid: SbGrid) -> Result<WavelengthGrid, Failure> {
    Ok(WavelengthGrid::new(
        grid.start_nm,
        grid.step_nm,
        grid.count,
    )?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a set from `members` spectra stored back to back in `values`
/// (`members * grid.count` doubles).
///
/// # Safety
/// `values` must point to that many readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_set_new(
    role: SbRole,
    grid: SbGrid,
    values: *const f64,
    members: usize,
    out: *mut *mut SbSpectrumSet,
) -> SbStatus {
    guard(|| {
        let g = grid_of(grid)?;
        let n = g.count();
        let data = slice(values, members.saturating_mul(n), "values")?;
        let rows = data.chunks(n).map(<[f64]>::to_vec).collect();
        let set = SpectrumSet::from_rows(g, role.into(), rows)?;
        put(out, SbSpectrumSet(set))
    })
}

/// Loads a dataset manifest resampled onto `grid`. Illumination and
/// sensitivity members are peak-normalized, as in the command-line tool.
///
/// # Safety
/// `manifest_path` must be a NUL-terminated UTF-8 path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_set_load(
    manifest_path: *const c_char,
    grid: SbGrid,
    out: *mut *mut SbSpectrumSet,
) -> SbStatus {
    guard(|| {
        if manifest_path.is_null() {
            return Err(null("manifest_path"));
        }
        let path = CStr::from_ptr(manifest_path)
            .to_str()
            .map_err(|_| Failure(SbStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let set = dataio::load_dataset(Path::new(path), &grid_of(grid)?)?;
        let set = specbayes::benchmark::prepare_inputs(&set)?;
        put(out, SbSpectrumSet(set))
    })
}

/// Number of members, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_set_len(set: *const SbSpectrumSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Copies member `index` into `out` (`len` must equal the grid count).
///
/// # Safety
/// `set` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_set_member(
    set: *const SbSpectrumSet,
    index: usize,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let set = handle(set, "set")?;
        let member = set.0.get(index)?;
        copy_into(slice_mut(out, len, "out")?, member.values())
    })
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_set_free(set: *mut SbSpectrumSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Wraps a row-major `I × J × K` tensor.
///
/// # Safety
/// `extents` must hold 3 values, `values` their product, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_observations_new(
    extents: *const usize,
    values: *const f64,
    len: usize,
    out: *mut *mut SbObservations,
) -> SbStatus {
    guard(|| {
        if extents.is_null() {
            return Err(null("extents"));
        }
        let e = std::slice::from_raw_parts(extents, 3);
        let obs = Observations::new([e[0], e[1], e[2]], slice(values, len, "values")?.to_vec())?;
        put(out, SbObservations(obs))
    })
}

/// Renders pixels from one set per role, passed in any order. `sigma` 0
/// disables noise; otherwise noise is seeded by `seed`.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_observations_render(
    a: *const SbSpectrumSet,
    b: *const SbSpectrumSet,
    c: *const SbSpectrumSet,
    sigma: f64,
    seed: u64,
    out: *mut *mut SbObservations,
) -> SbStatus {
    guard(|| {
        let noise = NoiseModel::from_sigma(sigma, seed)?;
        let obs = specbayes::render_observations(
            &handle(a, "a")?.0,
            &handle(b, "b")?.0,
            &handle(c, "c")?.0,
            &noise,
        )?;
        put(out, SbObservations(obs))
    })
}

/// # Safety
/// `obs` must be a live handle and `out` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn sb_observations_extents(
    obs: *const SbObservations,
    out: *mut usize,
) -> SbStatus {
    guard(|| {
        let obs = handle(obs, "obs")?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&obs.0.extents());
        Ok(())
    })
}

/// Copies the row-major tensor into `out`.
///
/// # Safety
/// `obs` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_observations_values(
    obs: *const SbObservations,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let obs = handle(obs, "obs")?;
        copy_into(slice_mut(out, len, "out")?, obs.0.values())
    })
}

/// # Safety
/// `obs` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_observations_free(obs: *mut SbObservations) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// Gaussian belief from a mean of length `dim` and a row-major
/// `dim × dim` precision. Fails unless the precision is symmetric positive
/// definite.
///
/// # Safety
/// `mean` must hold `dim` doubles, `precision` `dim * dim`, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_new(
    mean: *const f64,
    precision: *const f64,
    dim: usize,
    out: *mut *mut SbBelief,
) -> SbStatus {
    guard(|| {
        let belief = GaussianBelief::from_slices(
            slice(mean, dim, "mean")?,
            slice(precision, dim.saturating_mul(dim), "precision")?,
        )?;
        put(out, SbBelief(belief))
    })
}

/// Zero-mean prior with precision `alpha I + gamma D2ᵀD2` on `grid`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_flat_prior(
    grid: SbGrid,
    alpha: f64,
    gamma: f64,
    out: *mut *mut SbBelief,
) -> SbStatus {
    guard(|| {
        let prior = flat_prior(&grid_of(grid)?, PrecisionSpec::new(alpha, gamma)?)?;
        put(out, SbBelief(prior))
    })
}

/// Dimension, or 0 for NULL.
///
/// # Safety
/// `belief` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_dim(belief: *const SbBelief) -> usize {
    belief.as_ref().map_or(0, |b| b.0.dim())
}

/// # Safety
/// `belief` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_mean(
    belief: *const SbBelief,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let b = handle(belief, "belief")?;
        copy_into(slice_mut(out, len, "out")?, b.0.mean().as_slice())
    })
}

/// Row-major precision matrix.
///
/// # Safety
/// `belief` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_precision(
    belief: *const SbBelief,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let b = handle(belief, "belief")?;
        // symmetric, so column-major storage is also row-major
        copy_into(slice_mut(out, len, "out")?, b.0.precision().as_slice())
    })
}

/// # Safety
/// `belief` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_belief_free(belief: *mut SbBelief) {
    if !belief.is_null() {
        drop(Box::from_raw(belief));
    }
}

unsafe fn problem(
    target: SbRole,
    index: usize,
    known_a: *const SbSpectrumSet,
    known_b: *const SbSpectrumSet,
    obs: *const SbObservations,
    noise_precision: f64,
) -> Result<EstimationProblem, Failure> {
    Ok(EstimationProblem::new(
        target.into(),
        index,
        handle(known_a, "known_a")?.0.clone(),
        handle(known_b, "known_b")?.0.clone(),
        handle(obs, "obs")?.0.clone(),
        noise_precision,
    )?)
}

/// Least-squares estimate of member `index` of the `target` family.
/// Writes the max-normalized spectrum to `out` (`len` = grid count).
///
/// # Safety
/// Handles must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_estimate_lsq(
    target: SbRole,
    index: usize,
    known_a: *const SbSpectrumSet,
    known_b: *const SbSpectrumSet,
    obs: *const SbObservations,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let p = problem(target, index, known_a, known_b, obs, 1.0)?;
        let estimate = least_squares_estimate(&p)?;
        copy_into(slice_mut(out, len, "out")?, estimate.normalized().values())
    })
}

/// Bayesian estimate with noise precision `beta`. Writes the max-normalized
/// posterior mean to `out`; when `posterior` is not NULL it receives a new
/// handle to the unnormalized posterior.
///
/// # Safety
/// Handles must be live, `out` must hold `len` doubles and `posterior`
/// must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sb_estimate_bayes(
    target: SbRole,
    index: usize,
    known_a: *const SbSpectrumSet,
    known_b: *const SbSpectrumSet,
    obs: *const SbObservations,
    beta: f64,
    prior: *const SbBelief,
    out: *mut f64,
    len: usize,
    posterior: *mut *mut SbBelief,
) -> SbStatus {
    guard(|| {
        let p = problem(target, index, known_a, known_b, obs, beta)?;
        let estimate = bayes_estimate(&p, &handle(prior, "prior")?.0)?;
        copy_into(slice_mut(out, len, "out")?, estimate.normalized().values())?;
        if !posterior.is_null() {
            if let Some(belief) = estimate.posterior() {
                put(posterior, SbBelief(belief.clone()))?;
            }
        }
        Ok(())
    })
}

/// Basis-constrained sensitivity estimate of channel `index` from known
/// illumination and reflectance. `basis` is row-major `grid count × components`.
///
/// # Safety
/// Handles must be live; `mean` and `out` must hold `len` doubles and
/// `basis` `len * components`.
#[no_mangle]
pub unsafe extern "C" fn sb_estimate_jiang(
    index: usize,
    illumination: *const SbSpectrumSet,
    reflectance: *const SbSpectrumSet,
    obs: *const SbObservations,
    mean: *const f64,
    basis: *const f64,
    components: usize,
    out: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let p = problem(
            SbRole::Sensitivity,
            index,
            illumination,
            reflectance,
            obs,
            1.0,
        )?;
        let mean = Spectrum::unbounded(
            *p.grid(),
            slice(mean, len, "mean")?.to_vec(),
            Role::Sensitivity,
        )?;
        let basis = DMatrix::from_row_slice(
            len,
            components,
            slice(basis, len.saturating_mul(components), "basis")?,
        );
        let estimate = jiang_estimate(&p, &mean, &basis)?;
        copy_into(slice_mut(out, len, "out")?, estimate.normalized().values())
    })
}
