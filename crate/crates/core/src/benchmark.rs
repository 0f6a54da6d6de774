//! Tabular benchmark ingestion, synthetic transfer families, the leave-one-out
//! experiment protocol, NCE computation, and result aggregation.
//!
//! Benchmark file schema (JSON):
//! `{"space": {...}, "tasks": [{"id": "segment", "rows": [{"config": {...}, "y": 0.123}, ...]}]}`

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use rand_distr::Distribution as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpOptions;
use crate::optimizer::{run_bo, run_random_search, DesignerSpec, ExperimentResult, RunParams};
use crate::seed::{cell_seed, rng_from_seed, stable_hash, SeedPart};
use crate::space::{sample_uniform, ConfigKey, Configuration, ParamValue, ParameterDef, SearchSpace, TaskHistory};
use crate::transfer::{similarity_from_means, SourceTask};

/// One task's lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTask {
    pub id: String,
    pub rows: Vec<(Configuration, f64)>,
    pub y_min: f64,
    pub y_max: f64,
    lookup: HashMap<ConfigKey, f64>,
}

impl BenchmarkTask {
    /// Index of the table's best row (global optimum of the task).
    pub fn best_row(&self) -> usize {
        let mut best = 0;
        for (i, (_, y)) in self.rows.iter().enumerate() {
            if *y < self.rows[best].1 {
                best = i;
            }
        }
        best
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        self.rows.iter().map(|(c, _)| c.clone()).collect()
    }
}

/// A tabular benchmark: one shared space, one table per task.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub space: SearchSpace,
    pub tasks: Vec<BenchmarkTask>,
}

#[derive(Serialize, Deserialize)]
struct BenchmarkDoc {
    space: SearchSpace,
    tasks: Vec<TaskDoc>,
}

#[derive(Serialize, Deserialize)]
struct TaskDoc {
    id: String,
    rows: Vec<RowDoc>,
}

#[derive(Serialize, Deserialize)]
struct RowDoc {
    config: serde_json::Map<String, serde_json::Value>,
    y: f64,
}

impl Benchmark {
    /// Validates tables against the space and computes per-task y bounds.
    pub fn from_parts(
        space: SearchSpace,
        tasks: Vec<(String, Vec<(Configuration, f64)>)>,
    ) -> Result<Self> {
        let mut seen_ids = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(tasks.len());
        for (id, rows) in tasks {
            if !seen_ids.insert(id.clone()) {
                return Err(Error::BenchmarkFormat(format!("duplicate task id `{id}`")));
            }
            if rows.len() < 2 {
                return Err(Error::InvalidTask {
                    task_id: id,
                    reason: "needs at least 2 rows".into(),
                });
            }
            let mut lookup = HashMap::with_capacity(rows.len());
            let mut y_min = f64::INFINITY;
            let mut y_max = f64::NEG_INFINITY;
            for (config, y) in &rows {
                space.check_config(config).map_err(|e| Error::InvalidTask {
                    task_id: id.clone(),
                    reason: e.to_string(),
                })?;
                if !y.is_finite() {
                    return Err(Error::InvalidTask {
                        task_id: id.clone(),
                        reason: format!("non-finite objective {y}"),
                    });
                }
                if lookup.insert(config.key(), *y).is_some() {
                    return Err(Error::InvalidTask {
                        task_id: id.clone(),
                        reason: "duplicate configuration row".into(),
                    });
                }
                y_min = y_min.min(*y);
                y_max = y_max.max(*y);
            }
            if !(y_min < y_max) {
                return Err(Error::InvalidTask {
                    task_id: id,
                    reason: "degenerate task: y_min == y_max".into(),
                });
            }
            out.push(BenchmarkTask {
                id,
                rows,
                y_min,
                y_max,
                lookup,
            });
        }
        Ok(Benchmark { space, tasks: out })
    }

    pub fn task(&self, id: &str) -> Result<&BenchmarkTask> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTask(id.to_string()))
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: BenchmarkDoc = serde_json::from_str(json)
            .map_err(|e| Error::BenchmarkFormat(format!("{e} (line {}, column {})", e.line(), e.column())))?;
        let tasks = doc
            .tasks
            .into_iter()
            .map(|t| {
                let rows = t
                    .rows
                    .into_iter()
                    .map(|r| {
                        let config = Configuration::from_json_map(&doc.space, &r.config)
                            .map_err(|e| Error::InvalidTask {
                                task_id: t.id.clone(),
                                reason: e.to_string(),
                            })?;
                        Ok((config, r.y))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((t.id, rows))
            })
            .collect::<Result<Vec<_>>>()?;
        Benchmark::from_parts(doc.space, tasks)
    }

    pub fn to_json_string(&self) -> String {
        let doc = BenchmarkDoc {
            space: self.space.clone(),
            tasks: self
                .tasks
                .iter()
                .map(|t| TaskDoc {
                    id: t.id.clone(),
                    rows: t
                        .rows
                        .iter()
                        .map(|(c, y)| RowDoc {
                            config: c.to_json_map(&self.space),
                            y: *y,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("benchmark serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Loads and validates a benchmark file.
pub fn load_tabular_benchmark(path: &Path) -> Result<Benchmark> {
    let text = std::fs::read_to_string(path)?;
    Benchmark::from_json_str(&text)
}

/// Exact table lookup of a configuration's objective; configurations that are
/// not table rows (even by 1e-9) are errors.
pub fn evaluate_config(benchmark: &Benchmark, task_id: &str, config: &Configuration) -> Result<f64> {
    let task = benchmark.task(task_id)?;
    task.lookup
        .get(&config.key())
        .copied()
        .ok_or_else(|| Error::ConfigNotInTable {
            task_id: task_id.to_string(),
        })
}

// --- Synthetic families ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticFamily {
    ShiftedQuadratic,
    ShiftedBranin,
}

/// Desk-scale synthetic transfer family: one shared candidate grid, per-task
/// shifted surfaces, optional adversarial negation of alternate tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: SyntheticFamily,
    pub n_tasks: usize,
    /// Magnitude of the per-task input shift (unit-cube coordinates).
    pub shift_scale: f64,
    pub n_grid: usize,
    pub noise_std: f64,
    /// Negate the surfaces of odd-indexed tasks.
    pub adversarial: bool,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_tasks must be >= 2, got {}",
                self.n_tasks
            )));
        }
        if self.n_grid < 100 {
            return Err(Error::InvalidArgument(format!(
                "n_grid must be >= 100, got {}",
                self.n_grid
            )));
        }
        if self.shift_scale < 0.0 || self.noise_std < 0.0 {
            return Err(Error::InvalidArgument(
                "shift_scale and noise_std must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn branin(x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    a * (y - b * x * x + c * x - r).powi(2) + s * (1.0 - t) * x.cos() + s
}

const QUADRATIC_DIM: usize = 2;

/// The quadratic surface carries a sinusoidal ripple (amplitude and spatial
/// frequency below). A bare bowl is GP-learnable from a handful of samples,
/// which leaves nothing for transfer to speed up; the ripple creates several
/// local dips that a surrogate only resolves with dozens of observations,
/// while 100-observation source histories resolve them easily. The ripple is
/// deterministic, so rankings between configurations stay noise-free and the
/// task-similarity signal stays crisp under exploitation.
const RIPPLE_AMPLITUDE: f64 = 0.4;
const RIPPLE_PERIODS: [f64; 2] = [2.5, 2.5];

/// Fixed phases break the carton's symmetry so the dips have distinct depths
/// and the best one is unique.
const RIPPLE_PHASES: [f64; 2] = [0.8, 2.1];

fn synthetic_space(family: SyntheticFamily) -> SearchSpace {
    let dims = match family {
        SyntheticFamily::ShiftedQuadratic => QUADRATIC_DIM,
        SyntheticFamily::ShiftedBranin => 2,
    };
    SearchSpace::new(
        (0..dims)
            .map(|i| ParameterDef::continuous(&format!("x{i}"), 0.0, 1.0, false, 0.5))
            .collect(),
    )
    .expect("static space is valid")
}

fn config_coords(config: &Configuration) -> Vec<f64> {
    config
        .values
        .iter()
        .map(|v| match v {
            ParamValue::Float(x) => *x,
            _ => unreachable!("synthetic space is continuous"),
        })
        .collect()
}

/// Noise-free surfaces of every task over the shared grid, plus the grid.
fn synthetic_surfaces(spec: &SyntheticSpec, seed: u64) -> (Vec<Configuration>, Vec<Vec<f64>>) {
    let space = synthetic_space(spec.family);
    let dims = space.len();
    let mut rng = rng_from_seed(seed);
    let grid = sample_uniform(&space, spec.n_grid, &mut rng);
    let mut tables = Vec::with_capacity(spec.n_tasks);
    for task in 0..spec.n_tasks {
        use rand::Rng as _;
        // shift window of total width shift_scale per dimension
        let shift: Vec<f64> = if spec.shift_scale > 0.0 {
            (0..dims)
                .map(|_| rng.random_range(-spec.shift_scale / 2.0..=spec.shift_scale / 2.0))
                .collect()
        } else {
            vec![0.0; dims]
        };
        let negate = spec.adversarial && task % 2 == 1;
        let values = grid
            .iter()
            .map(|c| {
                let x = config_coords(c);
                let v = match spec.family {
                    SyntheticFamily::ShiftedQuadratic => {
                        let bowl: f64 = x
                            .iter()
                            .zip(&shift)
                            .map(|(xi, si)| (xi - 0.5 - si) * (xi - 0.5 - si))
                            .sum();
                        // the ripple is shared across the family (only the
                        // bowl shifts): related tuning tasks keep common
                        // structure while the optimum drifts
                        let ripple: f64 = x
                            .iter()
                            .enumerate()
                            .map(|(j, xi)| {
                                (2.0 * std::f64::consts::PI * RIPPLE_PERIODS[j % 2] * xi
                                    + RIPPLE_PHASES[j % 2])
                                .cos()
                            })
                            .product();
                        bowl + RIPPLE_AMPLITUDE * ripple
                    }
                    SyntheticFamily::ShiftedBranin => {
                        let u0 = x[0] + shift[0];
                        let u1 = x[1] + shift[1];
                        branin(-5.0 + 15.0 * u0, 15.0 * u1)
                    }
                };
                if negate {
                    -v
                } else {
                    v
                }
            })
            .collect();
        tables.push(values);
    }
    (grid, tables)
}

/// Generates a synthetic family as a fixed table: observation noise is drawn
/// once here, so the benchmark is frozen. Deterministic per seed.
pub fn generate_synthetic_family(spec: &SyntheticSpec, seed: u64) -> Result<Benchmark> {
    spec.validate()?;
    let (grid, surfaces) = synthetic_surfaces(spec, seed);
    let mut noise_rng = rng_from_seed(stable_hash(&[SeedPart::Num(seed), SeedPart::Str("noise")]));
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    let tasks = surfaces
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            let rows = grid
                .iter()
                .zip(values)
                .map(|(c, v)| {
                    let noise = if spec.noise_std > 0.0 {
                        spec.noise_std * normal.sample(&mut noise_rng)
                    } else {
                        0.0
                    };
                    (c.clone(), v + noise)
                })
                .collect();
            (format!("task{i}"), rows)
        })
        .collect();
    Benchmark::from_parts(synthetic_space(spec.family), tasks)
}

/// Pairwise ranking similarity between the noise-free task surfaces over (a
/// subsample of) the shared grid: the oracle counterpart of the surrogate
/// similarity.
pub fn synthetic_true_similarities(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<Vec<(String, String, f64)>> {
    spec.validate()?;
    let (_, surfaces) = synthetic_surfaces(spec, seed);
    let limit = surfaces[0].len().min(500);
    let mut out = Vec::new();
    for i in 0..surfaces.len() {
        for j in (i + 1)..surfaces.len() {
            let s = similarity_from_means(&surfaces[i][..limit], &surfaces[j][..limit]);
            out.push((format!("task{i}"), format!("task{j}"), s));
        }
    }
    Ok(out)
}

// --- NCE ---------------------------------------------------------------------

/// Normalized classification error of an incumbent trajectory:
/// `(incumbent_t - y_min) / (y_max - y_min)`, in [0, 1], nonincreasing.
pub fn compute_nce(trajectory: &[f64], y_min: f64, y_max: f64) -> Result<Vec<f64>> {
    if !(y_min < y_max) {
        return Err(Error::InvalidArgument(format!(
            "need y_min < y_max, got {y_min} and {y_max}"
        )));
    }
    let mut out = Vec::with_capacity(trajectory.len());
    let mut prev = f64::INFINITY;
    for &v in trajectory {
        if v > prev {
            return Err(Error::InvalidArgument(
                "incumbent trajectory must be nonincreasing".into(),
            ));
        }
        if v < y_min || v > y_max {
            return Err(Error::InvalidArgument(format!(
                "incumbent {v} outside [{y_min}, {y_max}]"
            )));
        }
        prev = v;
        out.push((v - y_min) / (y_max - y_min));
    }
    Ok(out)
}

// --- Leave-one-out protocol ---------------------------------------------------

/// Which driver a method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    RandomSearch,
    GpBo,
}

/// One benchmarked method: a driver plus a space designer.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    /// Token used in file names and reports, e.g. "ours-gp".
    pub name: String,
    pub driver: DriverKind,
    pub designer: DesignerSpec,
}

/// Leave-one-out protocol parameters.
#[derive(Debug, Clone)]
pub struct Protocol {
    /// Observations kept per source task (N_S).
    pub n_source_obs: usize,
    /// Evaluations per run (N_T).
    pub trials: usize,
    pub n_init: usize,
    pub reps: usize,
    pub base_seed: u64,
    /// GP options for the per-iteration target surrogate refit.
    pub surrogate_options: GpOptions,
    /// GP options for the one-off source surrogate fits. These rank every
    /// similarity comparison for the rest of the run, so they get a richer
    /// multi-start budget than the per-iteration refits.
    pub source_surrogate_options: GpOptions,
    /// GPC options for promising-region classifiers.
    pub classifier_options: GpOptions,
}

impl Protocol {
    pub fn new(base_seed: u64) -> Self {
        Protocol {
            n_source_obs: 100,
            trials: 50,
            n_init: 3,
            reps: 20,
            base_seed,
            // lean search budgets: the target surrogate is refit every trial
            // and the classifiers on every label change, so per-fit cost
            // dominates harness wall time
            surrogate_options: GpOptions {
                restarts: 1,
                max_opt_iters: 6,
                ..GpOptions::default()
            },
            source_surrogate_options: GpOptions {
                restarts: 4,
                max_opt_iters: 10,
                ..GpOptions::default()
            },
            classifier_options: GpOptions {
                restarts: 1,
                max_opt_iters: 4,
                ..GpOptions::default()
            },
        }
    }
}

/// Protocol metadata carried alongside the result cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMeta {
    pub n_source_obs: usize,
    pub trials: usize,
    pub n_init: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub method_names: Vec<String>,
    pub task_ids: Vec<String>,
}

/// One completed run cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultCell {
    pub result: ExperimentResult,
    pub nce: Vec<f64>,
}

/// Key: (task id, method name, rep).
pub type CellKey = (String, String, usize);

/// All cells of a leave-one-out experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub meta: ProtocolMeta,
    pub cells: BTreeMap<CellKey, ResultCell>,
}

/// Runs every method on every task (as target) `reps` times, pairing methods
/// through shared initial designs and shared sources per (target, rep). Cells
/// execute in parallel; results are keyed, so collection order is irrelevant.
pub fn run_leave_one_out(
    benchmark: &Benchmark,
    methods: &[MethodSpec],
    protocol: &Protocol,
) -> Result<ResultSet> {
    if methods.is_empty() {
        return Err(Error::EmptyInput("methods"));
    }
    if benchmark.tasks.len() < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least 2 tasks".into(),
        ));
    }
    let need = protocol.n_source_obs.max(protocol.trials);
    for task in &benchmark.tasks {
        if task.rows.len() < need {
            return Err(Error::InvalidTask {
                task_id: task.id.clone(),
                reason: format!("needs at least {need} rows, has {}", task.rows.len()),
            });
        }
    }

    let units: Vec<(usize, usize)> = (0..benchmark.tasks.len())
        .flat_map(|t| (0..protocol.reps).map(move |r| (t, r)))
        .collect();

    let cell_results: Vec<Result<Vec<(CellKey, ResultCell)>>> = units
        .par_iter()
        .map(|&(target_idx, rep)| run_unit(benchmark, methods, protocol, target_idx, rep))
        .collect();

    let mut cells = BTreeMap::new();
    for unit in cell_results {
        for (key, cell) in unit? {
            cells.insert(key, cell);
        }
    }
    Ok(ResultSet {
        meta: ProtocolMeta {
            n_source_obs: protocol.n_source_obs,
            trials: protocol.trials,
            n_init: protocol.n_init,
            reps: protocol.reps,
            base_seed: protocol.base_seed,
            method_names: methods.iter().map(|m| m.name.clone()).collect(),
            task_ids: benchmark.tasks.iter().map(|t| t.id.clone()).collect(),
        },
        cells,
    })
}

/// All methods of one (target, rep) unit, sharing sources and initial design.
fn run_unit(
    benchmark: &Benchmark,
    methods: &[MethodSpec],
    protocol: &Protocol,
    target_idx: usize,
    rep: usize,
) -> Result<Vec<(CellKey, ResultCell)>> {
    let target = &benchmark.tasks[target_idx];
    let base = protocol.base_seed;

    // sources: every other task, truncated to N_S seeded-uniform rows; fit once
    let needs_sources = methods.iter().any(|m| m.designer != DesignerSpec::None);
    let sources: Vec<Arc<SourceTask>> = if needs_sources {
        benchmark
            .tasks
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target_idx)
            .map(|(_, source_task)| {
                let row_seed = stable_hash(&[
                    SeedPart::Num(base),
                    SeedPart::Str(&target.id),
                    SeedPart::Str("source_rows"),
                    SeedPart::Str(&source_task.id),
                    SeedPart::Num(rep as u64),
                ]);
                let mut rng = rng_from_seed(row_seed);
                let indices = rand::seq::index::sample(
                    &mut rng,
                    source_task.rows.len(),
                    protocol.n_source_obs.min(source_task.rows.len()),
                );
                let history = TaskHistory::new(
                    indices.iter().map(|i| source_task.rows[i].clone()).collect(),
                );
                let surrogate_seed = stable_hash(&[
                    SeedPart::Num(base),
                    SeedPart::Str(&target.id),
                    SeedPart::Str("surrogate"),
                    SeedPart::Str(&source_task.id),
                    SeedPart::Num(rep as u64),
                ]);
                let gpc_seed = stable_hash(&[
                    SeedPart::Num(base),
                    SeedPart::Str(&target.id),
                    SeedPart::Str("gpc"),
                    SeedPart::Str(&source_task.id),
                    SeedPart::Num(rep as u64),
                ]);
                SourceTask::new(
                    source_task.id.clone(),
                    &benchmark.space,
                    history,
                    &protocol.source_surrogate_options.clone().with_seed(surrogate_seed),
                    &protocol.classifier_options.clone().with_seed(gpc_seed),
                )
                .map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let candidates = target.configurations();
    let tracked = candidates[target.best_row()].clone();
    let init_seed = stable_hash(&[
        SeedPart::Num(base),
        SeedPart::Str(&target.id),
        SeedPart::Str("init"),
        SeedPart::Num(rep as u64),
    ]);

    let evaluate = |c: &Configuration| evaluate_config(benchmark, &target.id, c);

    methods
        .iter()
        .map(|method| {
            let seed = cell_seed(base, &target.id, &method.name, rep);
            let params = RunParams {
                trials: protocol.trials,
                n_init: protocol.n_init,
                seed,
                init_seed: Some(init_seed),
                tracked_config: Some(tracked.clone()),
                gp_options: protocol.surrogate_options.clone(),
            };
            let result = match method.driver {
                DriverKind::GpBo => run_bo(
                    &evaluate,
                    &benchmark.space,
                    &candidates,
                    &method.designer,
                    &sources,
                    &params,
                ),
                DriverKind::RandomSearch => run_random_search(
                    &evaluate,
                    &benchmark.space,
                    &candidates,
                    &method.designer,
                    &sources,
                    &params,
                ),
            }?;
            let nce = compute_nce(&result.incumbent_trajectory, target.y_min, target.y_max)?;
            Ok((
                (target.id.clone(), method.name.clone(), rep),
                ResultCell { result, nce },
            ))
        })
        .collect()
}

// --- Aggregation and export ---------------------------------------------------

/// Aggregated NCE of one method: the reps-then-tasks mean per trial, plus the
/// population std across all (task, rep) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub mean_nce: Vec<f64>,
    pub std_nce: Vec<f64>,
}

/// Per-task mean and std (across reps) of one method's NCE.
#[derive(Debug, Clone, PartialEq)]
pub struct PerTaskRow {
    pub method: String,
    pub task: String,
    pub mean_nce: Vec<f64>,
    pub std_nce: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub methods: Vec<AggregateRow>,
    pub per_task: Vec<PerTaskRow>,
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Per trial: mean over reps within each task, then mean over tasks (the
/// paper's averaging order). Fails listing any missing (task, method, rep)
/// cells.
pub fn aggregate_results(results: &ResultSet) -> Result<Aggregate> {
    let meta = &results.meta;
    let mut missing = Vec::new();
    for task in &meta.task_ids {
        for method in &meta.method_names {
            for rep in 0..meta.reps {
                let key = (task.clone(), method.clone(), rep);
                match results.cells.get(&key) {
                    None => missing.push(format!("{task}/{method}/rep{rep}")),
                    Some(cell) if cell.nce.len() != meta.trials => {
                        missing.push(format!("{task}/{method}/rep{rep} (incomplete)"))
                    }
                    _ => {}
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }

    let mut methods = Vec::new();
    let mut per_task = Vec::new();
    for method in &meta.method_names {
        let mut mean_nce = Vec::with_capacity(meta.trials);
        let mut std_nce = Vec::with_capacity(meta.trials);
        for t in 0..meta.trials {
            let mut task_means = Vec::with_capacity(meta.task_ids.len());
            let mut all_cells = Vec::with_capacity(meta.task_ids.len() * meta.reps);
            for task in &meta.task_ids {
                let rep_values: Vec<f64> = (0..meta.reps)
                    .map(|rep| results.cells[&(task.clone(), method.clone(), rep)].nce[t])
                    .collect();
                task_means.push(rep_values.iter().sum::<f64>() / rep_values.len() as f64);
                all_cells.extend(rep_values);
            }
            let mean = task_means.iter().sum::<f64>() / task_means.len() as f64;
            let flat_mean = all_cells.iter().sum::<f64>() / all_cells.len() as f64;
            mean_nce.push(mean);
            std_nce.push(population_std(&all_cells, flat_mean));
        }
        methods.push(AggregateRow {
            method: method.clone(),
            mean_nce,
            std_nce,
        });

        for task in &meta.task_ids {
            let mut task_mean = Vec::with_capacity(meta.trials);
            let mut task_std = Vec::with_capacity(meta.trials);
            for t in 0..meta.trials {
                let rep_values: Vec<f64> = (0..meta.reps)
                    .map(|rep| results.cells[&(task.clone(), method.clone(), rep)].nce[t])
                    .collect();
                let mean = rep_values.iter().sum::<f64>() / rep_values.len() as f64;
                task_mean.push(mean);
                task_std.push(population_std(&rep_values, mean));
            }
            per_task.push(PerTaskRow {
                method: method.clone(),
                task: task.clone(),
                mean_nce: task_mean,
                std_nce: task_std,
            });
        }
    }
    Ok(Aggregate { methods, per_task })
}

/// One method's result rows as CSV: `task,rep,trial,incumbent,nce,space_size`.
pub fn method_csv_string(results: &ResultSet, method: &str) -> String {
    let mut out = String::from("task,rep,trial,incumbent,nce,space_size\n");
    for ((task, m, rep), cell) in &results.cells {
        if m != method {
            continue;
        }
        for (i, (trial, _, _)) in cell.result.evaluations.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                task,
                rep,
                trial,
                cell.result.incumbent_trajectory[i],
                cell.nce[i],
                cell.result.designed_space_sizes[i],
            ));
        }
    }
    out
}

/// The aggregate CSV: `method,trial,mean_nce,std_nce`.
pub fn aggregate_csv_string(aggregate: &Aggregate) -> String {
    let mut out = String::from("method,trial,mean_nce,std_nce\n");
    for row in &aggregate.methods {
        for t in 0..row.mean_nce.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.method,
                t + 1,
                row.mean_nce[t],
                row.std_nce[t]
            ));
        }
    }
    out
}
