//! C ABI for `tailcav`.
//!
//! Every fallible function returns a [`TcStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! read with [`tc_last_error_message`]. Handles are opaque and released
//! with their `_free` function; strings returned by the library are
//! released with [`tc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde::Deserialize;

use tailcav::descriptor::{build_pair, BuildContext, GameFile, SigmaDescriptor, TauDescriptor};
use tailcav::game::{Belief, GameSpec};
use tailcav::payoff::PayoffEvaluator;
use tailcav::simulate::{estimate_payoff, SimConfig};
use tailcav::solver::{concavify, matrix_value, u_example1, ConcaveEnvelope, MatrixGame};
use tailcav::strategy::{oracle_for, ExploitParams};
use tailcav::Error;

/// Result of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The game spec failed validation.
    InvalidSpec = 3,
    /// The payoff family has no value oracle.
    NoOracle = 4,
    /// A belief, grid, descriptor or parameter was rejected.
    InvalidArgument = 5,
    /// The output buffer is too small.
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// A game spec with its payoff.
pub struct TcGame {
    spec: GameSpec,
    payoff: PayoffEvaluator,
}

/// A sampled concave envelope.
pub struct TcEnvelope(ConcaveEnvelope);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(TcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Validation(_) => TcStatus::InvalidSpec,
            Error::NoOracle(_) => TcStatus::NoOracle,
            Error::Io(_) | Error::Lp(_) => TcStatus::Internal,
            _ => TcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(TcStatus::InvalidArgument, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(TcStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tailcav".into());
            TcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(TcStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

fn belief(coords: &[f64]) -> Result<Belief, Failure> {
    Ok(Belief::new(coords.to_vec())?)
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Parses a game file (spec plus `payoff` object) from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_game_from_json(json: *const c_char, out: *mut *mut TcGame) -> TcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let (spec, payoff) = GameFile::from_json(str_arg(json, "json")?)?.build()?;
        *out = Box::into_raw(Box::new(TcGame { spec, payoff }));
        Ok(())
    })
}

/// # Safety
/// `game` must come from [`tc_game_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tc_game_free(game: *mut TcGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_game_num_states(game: *const TcGame, out: *mut usize) -> TcStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(game, "game")?.spec.num_states();
        Ok(())
    })
}

/// Value `u(p)` of the non-revealing game; `p` has `len` coordinates.
///
/// # Safety
/// `game` must be a live handle, `p` must point to `len` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_nr_value(game: *const TcGame, p: *const f64, len: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        let game = ref_arg(game, "game")?;
        let q = belief(slice_arg(p, len, "p")?)?;
        let oracle = oracle_for(&game.payoff, &game.spec)?;
        *out_arg(out, "out")? = oracle.value(&q)?;
        Ok(())
    })
}

/// Envelope of `u` sampled on a grid of spacing `mesh` plus the kinks of
/// `u`.
///
/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_envelope_from_game(game: *const TcGame, mesh: f64, out: *mut *mut TcEnvelope) -> TcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let game = ref_arg(game, "game")?;
        let (_, _, env) = oracle_for(&game.payoff, &game.spec)?.envelope(mesh)?;
        *out = Box::into_raw(Box::new(TcEnvelope(env)));
        Ok(())
    })
}

/// Envelope of `n` samples; `points` is `n × k` row-major.
///
/// # Safety
/// `points` must hold `n·k` doubles, `values` `n` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tc_envelope_from_samples(
    points: *const f64,
    values: *const f64,
    n: usize,
    k: usize,
    out: *mut *mut TcEnvelope,
) -> TcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let coords = slice_arg(points, n * k, "points")?;
        let values = slice_arg(values, n, "values")?;
        if k == 0 {
            return Err(Failure(TcStatus::InvalidArgument, "k must be positive".into()));
        }
        let grid = coords.chunks(k).map(belief).collect::<Result<Vec<_>, _>>()?;
        *out = Box::into_raw(Box::new(TcEnvelope(concavify(&grid, values)?)));
        Ok(())
    })
}

/// # Safety
/// `env` must be a live handle, `p` must point to `len` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_envelope_eval(env: *const TcEnvelope, p: *const f64, len: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        let env = ref_arg(env, "env")?;
        *out_arg(out, "out")? = env.0.eval(&belief(slice_arg(p, len, "p")?)?)?;
        Ok(())
    })
}

/// Decomposition of `p` achieving the envelope value. Writes up to
/// `capacity` points (each `len` doubles, row-major, into `points`) and
/// their weights; `count` receives the number of points, also when the
/// buffers are too small.
///
/// # Safety
/// `points` must hold `capacity·len` doubles and `weights` `capacity`
/// doubles; `env`, `p` and `count` as in [`tc_envelope_eval`].
#[no_mangle]
pub unsafe extern "C" fn tc_envelope_split(
    env: *const TcEnvelope,
    p: *const f64,
    len: usize,
    points: *mut f64,
    weights: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> TcStatus {
    guard(|| {
        let env = ref_arg(env, "env")?;
        let split = env.0.split(&belief(slice_arg(p, len, "p")?)?)?;
        *out_arg(count, "count")? = split.len();
        if split.len() > capacity {
            return Err(Failure(
                TcStatus::BufferTooSmall,
                format!("split has {} points, capacity is {capacity}", split.len()),
            ));
        }
        if points.is_null() || weights.is_null() {
            return Err(null("points or weights"));
        }
        let points = std::slice::from_raw_parts_mut(points, capacity * len);
        let weights = std::slice::from_raw_parts_mut(weights, capacity);
        for (n, s) in split.iter().enumerate() {
            points[n * len..(n + 1) * len].copy_from_slice(s.point.as_slice());
            weights[n] = s.weight;
        }
        Ok(())
    })
}

/// # Safety
/// `env` must come from an envelope constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tc_envelope_free(env: *mut TcEnvelope) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// `(cav u)(p)` for the game, sampled at spacing `mesh`.
///
/// # Safety
/// As [`tc_nr_value`].
#[no_mangle]
pub unsafe extern "C" fn tc_cav_value(
    game: *const TcGame,
    p: *const f64,
    len: usize,
    mesh: f64,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let game = ref_arg(game, "game")?;
        let q = belief(slice_arg(p, len, "p")?)?;
        let (_, _, env) = oracle_for(&game.payoff, &game.spec)?.envelope(mesh)?;
        *out_arg(out, "out")? = env.eval(&q)?;
        Ok(())
    })
}

/// Value of the `rows × cols` matrix game `entries` (row-major, row player
/// maximizes). `row_strategy` and `col_strategy` may be null.
///
/// # Safety
/// `entries` must hold `rows·cols` doubles; non-null strategy buffers must
/// hold `rows` and `cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn tc_matrix_value(
    entries: *const f64,
    rows: usize,
    cols: usize,
    value: *mut f64,
    row_strategy: *mut f64,
    col_strategy: *mut f64,
) -> TcStatus {
    guard(|| {
        let entries = slice_arg(entries, rows * cols, "entries")?;
        if cols == 0 {
            return Err(Failure(TcStatus::InvalidArgument, "empty matrix".into()));
        }
        let g = MatrixGame::new(entries.chunks(cols).map(<[f64]>::to_vec).collect())?;
        let sol = matrix_value(&g)?;
        *out_arg(value, "value")? = sol.value;
        if !row_strategy.is_null() {
            std::slice::from_raw_parts_mut(row_strategy, rows).copy_from_slice(&sol.row);
        }
        if !col_strategy.is_null() {
            std::slice::from_raw_parts_mut(col_strategy, cols).copy_from_slice(&sol.col);
        }
        Ok(())
    })
}

/// Non-revealing value of the `ℓ`/`r` example at `p = P(k1)`; NaN outside
/// `[0, 1]`.
#[no_mangle]
pub extern "C" fn tc_u_example1(p: f64) -> f64 {
    if (0.0..=1.0).contains(&p) {
        u_example1(p)
    } else {
        f64::NAN
    }
}

#[derive(Deserialize)]
struct SimulateOptions {
    #[serde(flatten)]
    sim: SimConfig,
    #[serde(default = "default_mesh")]
    mesh: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
}

fn default_mesh() -> f64 {
    0.01
}

fn default_epsilon() -> f64 {
    0.05
}

/// Monte Carlo estimate for a strategy pair given as JSON descriptors.
/// `options` is a JSON object with the simulation config fields plus
/// `mesh` and `epsilon`; null means defaults. The summary JSON is written
/// to `out` and must be released with [`tc_string_free`].
///
/// # Safety
/// `game` must be a live handle, string arguments NUL-terminated (or null
/// for `options`), `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_simulate(
    game: *const TcGame,
    sigma: *const c_char,
    tau: *const c_char,
    options: *const c_char,
    out: *mut *mut c_char,
) -> TcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let game = ref_arg(game, "game")?;
        let sigma: SigmaDescriptor = serde_json::from_str(str_arg(sigma, "sigma")?)?;
        let tau: TauDescriptor = serde_json::from_str(str_arg(tau, "tau")?)?;
        let options: SimulateOptions = if options.is_null() {
            serde_json::from_str("{}")?
        } else {
            serde_json::from_str(str_arg(options, "options")?)?
        };
        let ctx = BuildContext {
            mesh: options.mesh,
            epsilon: options.epsilon,
            seed: options.sim.master_seed,
            exploit: ExploitParams {
                rollouts: options.sim.exploit_rollouts,
                seed: options.sim.master_seed,
                ..ExploitParams::default()
            },
            ..BuildContext::new(game.spec.clone(), game.payoff.clone())
        };
        let (sigma, tau) = build_pair(&ctx, &sigma, &tau)?;
        let result = estimate_payoff(&game.spec, &game.payoff, sigma.as_ref(), tau.as_ref(), &options.sim)?;
        let json = serde_json::to_string(&result)?;
        *out = CString::new(json)
            .map_err(|e| Failure(TcStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
