//! C ABI for the spacetx search-space designer.
//!
//! The surface follows the usual handle/status-code pattern: opaque handles
//! created and freed through paired functions, every fallible call returning
//! a [`SpacetxStatus`], and a thread-local message retrievable through
//! [`spacetx_last_error`] after a failure. A foreign HPO loop loads a tabular
//! benchmark, opens a designer session for its target task, feeds
//! observations as they arrive, and asks for the designed candidate subset
//! (row indices into the target table) each iteration.
//!
//! The generated header lives at `include/spacetx.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use spacetx::benchmark::{load_tabular_benchmark, Benchmark};
use spacetx::gp::GpOptions;
use spacetx::seed::{rng_from_seed, stable_hash, Rng, SeedPart};
use spacetx::space::{Configuration, EncodedPoint, TaskHistory};
use spacetx::transfer::{DesignConfig, DesignedSpace, SourceTask, SpaceDesigner};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacetxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IoError = 3,
    ParseError = 4,
    UnknownTask = 5,
    BufferTooSmall = 6,
    InternalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let message = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: SpacetxStatus, message: impl Into<Vec<u8>>) -> SpacetxStatus {
    set_error(message);
    status
}

fn status_for(error: &spacetx::Error) -> SpacetxStatus {
    use spacetx::Error;
    match error {
        Error::Io(_) => SpacetxStatus::IoError,
        Error::Json(_) | Error::BenchmarkFormat(_) => SpacetxStatus::ParseError,
        Error::UnknownTask(_) => SpacetxStatus::UnknownTask,
        Error::InvalidArgument(_) | Error::InvalidConfiguration { .. } => {
            SpacetxStatus::InvalidArgument
        }
        _ => SpacetxStatus::InternalError,
    }
}

fn guard(f: impl FnOnce() -> SpacetxStatus) -> SpacetxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SpacetxStatus::InternalError, "panic inside spacetx"),
    }
}

/// Message describing the most recent failure on this thread, or NULL when no
/// failure has been recorded. The pointer stays valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn spacetx_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spacetx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque handle to a loaded tabular benchmark.
pub struct SpacetxBenchmark {
    inner: Benchmark,
}

/// Opaque handle to a design session for one target task.
pub struct SpacetxDesigner {
    benchmark: Arc<Benchmark>,
    designer: SpaceDesigner,
    candidates: Vec<Configuration>,
    encoded: Vec<EncodedPoint>,
    history: TaskHistory,
    rng: Rng,
    last_design: Option<DesignedSpace>,
    last_similarities: Vec<f64>,
}

/// Parameters of a design session. Obtain defaults from
/// [`spacetx_designer_options_default`] and override selectively.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpacetxDesignerOptions {
    /// Label quantile at similarity 1 (paper default 0.05).
    pub alpha_min: f64,
    /// Label quantile at and below similarity 0.5 (paper default 0.95).
    pub alpha_max: f64,
    /// Number of source tasks sampled per design call.
    pub k: usize,
    /// Fewer surviving candidates than this triggers the full-pool fallback.
    pub min_space_size: usize,
    /// Observations kept per source task.
    pub n_source_obs: usize,
    /// Seed for source subsampling, surrogate fits, and task sampling.
    pub seed: u64,
}

#[no_mangle]
pub extern "C" fn spacetx_designer_options_default() -> SpacetxDesignerOptions {
    SpacetxDesignerOptions {
        alpha_min: 0.05,
        alpha_max: 0.95,
        k: 5,
        min_space_size: 1,
        n_source_obs: 100,
        seed: 0,
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SpacetxStatus> {
    if ptr.is_null() {
        return Err(fail(SpacetxStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SpacetxStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Loads and validates a benchmark JSON file. On success `*out` owns the
/// benchmark; release it with [`spacetx_benchmark_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_load(
    path: *const c_char,
    out: *mut *mut SpacetxBenchmark,
) -> SpacetxStatus {
    guard(|| {
        if out.is_null() {
            return fail(SpacetxStatus::NullPointer, "out is NULL");
        }
        let path = match cstr_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match load_tabular_benchmark(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpacetxBenchmark { inner }));
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Parses a benchmark from a JSON string instead of a file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_from_json(
    json: *const c_char,
    out: *mut *mut SpacetxBenchmark,
) -> SpacetxStatus {
    guard(|| {
        if out.is_null() {
            return fail(SpacetxStatus::NullPointer, "out is NULL");
        }
        let json = match cstr_arg(json, "json") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match Benchmark::from_json_str(json) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpacetxBenchmark { inner }));
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Releases a benchmark handle. NULL is a no-op.
///
/// # Safety
/// `benchmark` must have come from a spacetx load call and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_free(benchmark: *mut SpacetxBenchmark) {
    if !benchmark.is_null() {
        drop(Box::from_raw(benchmark));
    }
}

/// Number of tasks in the benchmark; 0 when the handle is NULL.
///
/// # Safety
/// `benchmark` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_task_count(benchmark: *const SpacetxBenchmark) -> usize {
    if benchmark.is_null() {
        return 0;
    }
    (*benchmark).inner.tasks.len()
}

/// Copies the NUL-terminated id of task `index` into `buf`. `*out_len`
/// receives the id length (without the NUL) regardless of success, so a
/// too-small buffer can be retried.
///
/// # Safety
/// `benchmark` must be a live handle; `buf` must point to `buf_len` writable
/// bytes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_task_id(
    benchmark: *const SpacetxBenchmark,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    out_len: *mut usize,
) -> SpacetxStatus {
    guard(|| {
        if benchmark.is_null() || out_len.is_null() {
            return fail(SpacetxStatus::NullPointer, "benchmark or out_len is NULL");
        }
        let tasks = &(*benchmark).inner.tasks;
        let Some(task) = tasks.get(index) else {
            return fail(
                SpacetxStatus::InvalidArgument,
                format!("task index {index} out of range ({} tasks)", tasks.len()),
            );
        };
        let id = task.id.as_bytes();
        *out_len = id.len();
        if buf.is_null() || buf_len < id.len() + 1 {
            return fail(SpacetxStatus::BufferTooSmall, "id buffer too small");
        }
        std::ptr::copy_nonoverlapping(id.as_ptr(), buf as *mut u8, id.len());
        *buf.add(id.len()) = 0;
        SpacetxStatus::Ok
    })
}

/// Number of rows in the named task's table.
///
/// # Safety
/// All pointers must be valid; `task_id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn spacetx_benchmark_task_rows(
    benchmark: *const SpacetxBenchmark,
    task_id: *const c_char,
    out: *mut usize,
) -> SpacetxStatus {
    guard(|| {
        if benchmark.is_null() || out.is_null() {
            return fail(SpacetxStatus::NullPointer, "benchmark or out is NULL");
        }
        let task_id = match cstr_arg(task_id, "task_id") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match (*benchmark).inner.task(task_id) {
            Ok(task) => {
                *out = task.rows.len();
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

fn build_designer(
    benchmark: &Arc<Benchmark>,
    target_task_id: &str,
    opts: &SpacetxDesignerOptions,
) -> Result<SpacetxDesigner, spacetx::Error> {
    let target = benchmark.task(target_task_id)?;
    let cfg = DesignConfig {
        alpha_min: opts.alpha_min,
        alpha_max: opts.alpha_max,
        k: opts.k,
        n_candidates: target.rows.len().max(opts.min_space_size),
        min_space_size: opts.min_space_size,
    };
    cfg.validate()?;

    let surrogate_options = GpOptions {
        restarts: 2,
        max_opt_iters: 8,
        ..GpOptions::default()
    };
    let classifier_options = GpOptions {
        restarts: 1,
        max_opt_iters: 5,
        ..GpOptions::default()
    };
    let sources = benchmark
        .tasks
        .iter()
        .filter(|t| t.id != target.id)
        .map(|source_task| {
            let row_seed = stable_hash(&[
                SeedPart::Num(opts.seed),
                SeedPart::Str(target_task_id),
                SeedPart::Str("source_rows"),
                SeedPart::Str(&source_task.id),
            ]);
            let mut rng = rng_from_seed(row_seed);
            let n = opts.n_source_obs.min(source_task.rows.len());
            let indices = rand::seq::index::sample(&mut rng, source_task.rows.len(), n);
            let history =
                TaskHistory::new(indices.iter().map(|i| source_task.rows[i].clone()).collect());
            let fit_seed = stable_hash(&[
                SeedPart::Num(opts.seed),
                SeedPart::Str(target_task_id),
                SeedPart::Str("surrogate"),
                SeedPart::Str(&source_task.id),
            ]);
            let gpc_seed = stable_hash(&[
                SeedPart::Num(opts.seed),
                SeedPart::Str(target_task_id),
                SeedPart::Str("gpc"),
                SeedPart::Str(&source_task.id),
            ]);
            SourceTask::new(
                source_task.id.clone(),
                &benchmark.space,
                history,
                &surrogate_options.clone().with_seed(fit_seed),
                &classifier_options.clone().with_seed(gpc_seed),
            )
            .map(Arc::new)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let candidates = target.configurations();
    let encoded = candidates
        .iter()
        .map(|c| spacetx::space::encode(&benchmark.space, c))
        .collect::<Result<Vec<_>, _>>()?;
    let rng_seed = stable_hash(&[
        SeedPart::Num(opts.seed),
        SeedPart::Str(target_task_id),
        SeedPart::Str("designer"),
    ]);
    Ok(SpacetxDesigner {
        benchmark: Arc::clone(benchmark),
        designer: SpaceDesigner::new(sources, cfg)?,
        candidates,
        encoded,
        history: TaskHistory::default(),
        rng: rng_from_seed(rng_seed),
        last_design: None,
        last_similarities: Vec::new(),
    })
}

/// Opens a design session: every other task becomes a source (truncated to
/// `n_source_obs` seeded rows, surrogate fitted up front) and the target
/// task's table becomes the candidate pool. Requires at least one other task
/// and at least two rows per source.
///
/// # Safety
/// All pointers must be valid; `target_task_id` NUL-terminated. The returned
/// handle must be released with [`spacetx_designer_free`].
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_new(
    benchmark: *const SpacetxBenchmark,
    target_task_id: *const c_char,
    options: *const SpacetxDesignerOptions,
    out: *mut *mut SpacetxDesigner,
) -> SpacetxStatus {
    guard(|| {
        if benchmark.is_null() || options.is_null() || out.is_null() {
            return fail(SpacetxStatus::NullPointer, "benchmark, options, or out is NULL");
        }
        let target = match cstr_arg(target_task_id, "target_task_id") {
            Ok(p) => p,
            Err(status) => return status,
        };
        // the session outlives the benchmark handle, so it keeps its own copy
        let benchmark = Arc::new((*benchmark).inner.clone());
        match build_designer(&benchmark, target, &*options) {
            Ok(designer) => {
                *out = Box::into_raw(Box::new(designer));
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Releases a designer handle. NULL is a no-op.
///
/// # Safety
/// `designer` must have come from [`spacetx_designer_new`] and not yet be
/// freed.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_free(designer: *mut SpacetxDesigner) {
    if !designer.is_null() {
        drop(Box::from_raw(designer));
    }
}

/// Appends a target observation given as a JSON object
/// (`{"param": value, ...}`) and its objective value.
///
/// # Safety
/// `designer` must be a live handle; `config_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_observe_json(
    designer: *mut SpacetxDesigner,
    config_json: *const c_char,
    y: f64,
) -> SpacetxStatus {
    guard(|| {
        if designer.is_null() {
            return fail(SpacetxStatus::NullPointer, "designer is NULL");
        }
        let json = match cstr_arg(config_json, "config_json") {
            Ok(p) => p,
            Err(status) => return status,
        };
        let session = &mut *designer;
        let map: serde_json::Map<String, serde_json::Value> = match serde_json::from_str(json) {
            Ok(m) => m,
            Err(e) => return fail(SpacetxStatus::ParseError, e.to_string()),
        };
        match Configuration::from_json_map(&session.benchmark.space, &map) {
            Ok(config) => {
                session.history.push(config, y);
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

/// Appends a target observation identified by its row index in the target
/// task's table.
///
/// # Safety
/// `designer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_observe_row(
    designer: *mut SpacetxDesigner,
    row_index: usize,
    y: f64,
) -> SpacetxStatus {
    guard(|| {
        if designer.is_null() {
            return fail(SpacetxStatus::NullPointer, "designer is NULL");
        }
        let session = &mut *designer;
        let Some(config) = session.candidates.get(row_index).cloned() else {
            return fail(
                SpacetxStatus::InvalidArgument,
                format!(
                    "row index {row_index} out of range ({} rows)",
                    session.candidates.len()
                ),
            );
        };
        session.history.push(config, y);
        SpacetxStatus::Ok
    })
}

/// Number of observations fed so far.
///
/// # Safety
/// `designer` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_observation_count(
    designer: *const SpacetxDesigner,
) -> usize {
    if designer.is_null() {
        return 0;
    }
    (*designer).history.len()
}

/// Runs one design pass over the target table with the current observations.
/// Results are read with [`spacetx_designer_member_count`],
/// [`spacetx_designer_members`], [`spacetx_designer_fallback_used`], and
/// [`spacetx_designer_similarities`].
///
/// # Safety
/// `designer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_design(designer: *mut SpacetxDesigner) -> SpacetxStatus {
    guard(|| {
        if designer.is_null() {
            return fail(SpacetxStatus::NullPointer, "designer is NULL");
        }
        let session = &mut *designer;
        let similarities = match session
            .designer
            .similarities(&session.benchmark.space, &session.history)
        {
            Ok(s) => s,
            Err(e) => return fail(status_for(&e), e.to_string()),
        };
        match session.designer.design_encoded(
            &session.benchmark.space,
            &session.history,
            &session.candidates,
            &session.encoded,
            &mut session.rng,
        ) {
            Ok(designed) => {
                session.last_design = Some(designed);
                session.last_similarities = similarities;
                SpacetxStatus::Ok
            }
            Err(e) => fail(status_for(&e), e.to_string()),
        }
    })
}

fn last_design<'a>(designer: *const SpacetxDesigner) -> Result<&'a DesignedSpace, SpacetxStatus> {
    if designer.is_null() {
        return Err(fail(SpacetxStatus::NullPointer, "designer is NULL"));
    }
    unsafe { (*designer).last_design.as_ref() }.ok_or_else(|| {
        fail(
            SpacetxStatus::InvalidArgument,
            "no design yet: call spacetx_designer_design first",
        )
    })
}

/// Number of candidates admitted by the most recent design pass.
///
/// # Safety
/// `designer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_member_count(
    designer: *const SpacetxDesigner,
    out: *mut usize,
) -> SpacetxStatus {
    guard(|| {
        if out.is_null() {
            return fail(SpacetxStatus::NullPointer, "out is NULL");
        }
        match last_design(designer) {
            Ok(design) => {
                *out = design.member_indices.len();
                SpacetxStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Copies the admitted candidates' row indices (into the target task's table)
/// from the most recent design pass. `*out_len` always receives the full
/// member count.
///
/// # Safety
/// `designer` must be a live handle; `buf` must point to `buf_len` writable
/// elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_members(
    designer: *const SpacetxDesigner,
    buf: *mut usize,
    buf_len: usize,
    out_len: *mut usize,
) -> SpacetxStatus {
    guard(|| {
        if out_len.is_null() {
            return fail(SpacetxStatus::NullPointer, "out_len is NULL");
        }
        let design = match last_design(designer) {
            Ok(d) => d,
            Err(status) => return status,
        };
        *out_len = design.member_indices.len();
        if buf.is_null() || buf_len < design.member_indices.len() {
            return fail(SpacetxStatus::BufferTooSmall, "member buffer too small");
        }
        std::ptr::copy_nonoverlapping(design.member_indices.as_ptr(), buf, design.member_indices.len());
        SpacetxStatus::Ok
    })
}

/// Whether the most recent design fell back to the full pool.
///
/// # Safety
/// `designer` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_fallback_used(
    designer: *const SpacetxDesigner,
    out: *mut bool,
) -> SpacetxStatus {
    guard(|| {
        if out.is_null() {
            return fail(SpacetxStatus::NullPointer, "out is NULL");
        }
        match last_design(designer) {
            Ok(design) => {
                *out = design.fallback_used;
                SpacetxStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Number of source tasks in the session.
///
/// # Safety
/// `designer` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_source_count(designer: *const SpacetxDesigner) -> usize {
    if designer.is_null() {
        return 0;
    }
    (*designer).designer.sources().len()
}

/// Copies the per-source ranking similarities computed by the most recent
/// design pass (source order matches the benchmark's task order with the
/// target removed). `*out_len` always receives the source count.
///
/// # Safety
/// `designer` must be a live handle; `buf` must point to `buf_len` writable
/// doubles; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spacetx_designer_similarities(
    designer: *const SpacetxDesigner,
    buf: *mut f64,
    buf_len: usize,
    out_len: *mut usize,
) -> SpacetxStatus {
    guard(|| {
        if designer.is_null() || out_len.is_null() {
            return fail(SpacetxStatus::NullPointer, "designer or out_len is NULL");
        }
        let session = &*designer;
        if session.last_design.is_none() {
            return fail(
                SpacetxStatus::InvalidArgument,
                "no design yet: call spacetx_designer_design first",
            );
        }
        *out_len = session.last_similarities.len();
        if buf.is_null() || buf_len < session.last_similarities.len() {
            return fail(SpacetxStatus::BufferTooSmall, "similarity buffer too small");
        }
        std::ptr::copy_nonoverlapping(
            session.last_similarities.as_ptr(),
            buf,
            session.last_similarities.len(),
        );
        SpacetxStatus::Ok
    })
}
