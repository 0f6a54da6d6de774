//! Optimization drivers: GP-based Bayesian optimization and random search,
//! both running over a candidate pool that any space designer may filter
//! each iteration.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::gp::{expected_improvement, fit_gp, GpModel, GpOptions};
use crate::seed::{rng_from_seed, stable_hash, Rng, SeedPart};
use crate::space::{encode, ConfigKey, Configuration, EncodedPoint, SearchSpace, TaskHistory};
use crate::transfer::baselines::{box_design, ellipsoid_design, SpacePredicate};
use crate::transfer::{DesignConfig, SelectionRule, SourceTask, SpaceDesigner};

/// Which space designer a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignerSpec {
    /// No design: the full candidate pool every iteration.
    None,
    /// Bounding box over source incumbents.
    Box,
    /// Minimum-volume enclosing ellipsoid over source incumbents.
    Ellipsoid,
    /// Similarity-weighted k-task sampling with majority voting.
    Ours(DesignConfig),
    /// Ablation: region of the most similar task only.
    OursMostSimilar(DesignConfig),
    /// Ablation: region of a single similarity-sampled task.
    OursSingleSample(DesignConfig),
}

impl DesignerSpec {
    pub fn design_config(&self) -> Option<&DesignConfig> {
        match self {
            DesignerSpec::Ours(c)
            | DesignerSpec::OursMostSimilar(c)
            | DesignerSpec::OursSingleSample(c) => Some(c),
            _ => None,
        }
    }
}

/// Per-iteration record of one promising-region extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionExtraction {
    /// 1-based trial at which the extraction happened.
    pub trial: usize,
    pub source_id: String,
    pub similarity: f64,
    pub alpha_used: f64,
}

/// The full record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// (1-based trial, configuration, observed y).
    pub evaluations: Vec<(usize, Configuration, f64)>,
    /// Best observed y after each trial; monotone nonincreasing.
    pub incumbent_trajectory: Vec<f64>,
    /// Size of the designed space at each trial (pool size during the
    /// initial design and for the `None` designer).
    pub designed_space_sizes: Vec<usize>,
    pub seed: u64,
    /// Extraction telemetry from the `Ours*` designers.
    pub region_extractions: Vec<RegionExtraction>,
    /// Per trial, whether the tracked configuration was a member of the
    /// designed space (always true when nothing is tracked).
    pub tracked_membership: Vec<bool>,
}

/// Run-shape parameters shared by both drivers.
#[derive(Debug, Clone)]
pub struct RunParams {
    /// Total number of evaluations T.
    pub trials: usize,
    /// Number of uniformly drawn initial configurations.
    pub n_init: usize,
    /// Seed of the run's own random stream.
    pub seed: u64,
    /// Seed for the initial design; deriving it from `seed` alone would break
    /// pairing across methods, so the harness passes a method-independent
    /// value here. Defaults to a value derived from `seed`.
    pub init_seed: Option<u64>,
    /// Configuration whose designed-space membership is recorded per trial
    /// (typically the pool's global optimum).
    pub tracked_config: Option<Configuration>,
    /// Options for the per-iteration target surrogate refit.
    pub gp_options: GpOptions,
}

impl RunParams {
    pub fn new(trials: usize, n_init: usize, seed: u64) -> Self {
        RunParams {
            trials,
            n_init,
            seed,
            init_seed: None,
            tracked_config: None,
            gp_options: GpOptions::default(),
        }
    }

    fn init_seed(&self) -> u64 {
        self.init_seed
            .unwrap_or_else(|| stable_hash(&[SeedPart::Num(self.seed), SeedPart::Str("__init__")]))
    }
}

/// Draws `n_init` distinct candidates uniformly without replacement, in
/// random order.
pub fn initial_design(
    candidates: &[Configuration],
    n_init: usize,
    rng: &mut Rng,
) -> Result<Vec<Configuration>> {
    Ok(initial_design_indices(candidates.len(), n_init, rng)?
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

fn initial_design_indices(pool_len: usize, n_init: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n_init > pool_len {
        return Err(Error::InvalidArgument(format!(
            "n_init {n_init} exceeds pool size {pool_len}"
        )));
    }
    Ok(rand::seq::index::sample(rng, pool_len, n_init).into_vec())
}

/// Picks the unvisited member with maximal EI against the incumbent, ties to
/// the lowest pool index. When every member is visited, draws a uniform
/// unvisited candidate from the full pool; when the pool itself is exhausted,
/// fails with a budget error. Returns the pool index.
pub fn suggest_next(
    target_gp: &GpModel,
    encoded_pool: &[EncodedPoint],
    member_indices: &[usize],
    visited: &HashSet<ConfigKey>,
    pool: &[Configuration],
    incumbent: f64,
    rng: &mut Rng,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &idx in member_indices {
        if visited.contains(&pool[idx].key()) {
            continue;
        }
        let ei = expected_improvement(target_gp, &encoded_pool[idx], incumbent)?;
        if best.is_none_or(|(_, b)| ei > b) {
            best = Some((idx, ei));
        }
    }
    if let Some((idx, _)) = best {
        return Ok(idx);
    }
    uniform_unvisited(pool, visited, rng)
}

fn uniform_unvisited(
    pool: &[Configuration],
    visited: &HashSet<ConfigKey>,
    rng: &mut Rng,
) -> Result<usize> {
    let unvisited: Vec<usize> = (0..pool.len())
        .filter(|&i| !visited.contains(&pool[i].key()))
        .collect();
    if unvisited.is_empty() {
        return Err(Error::BudgetExceedsPool);
    }
    Ok(unvisited[rng.random_range(0..unvisited.len())])
}

struct RunState<'a> {
    space: &'a SearchSpace,
    pool: &'a [Configuration],
    encoded_pool: Vec<EncodedPoint>,
    designer: &'a DesignerSpec,
    sources: &'a [Arc<SourceTask>],
    tracked_index: Option<usize>,
    visited: HashSet<ConfigKey>,
    history: TaskHistory,
    encoded_history: Vec<EncodedPoint>,
    result: ExperimentResult,
    // designer runtime state
    predicate: Option<SpacePredicate>,
    space_designer: Option<SpaceDesigner>,
    rng: Rng,
}

impl<'a> RunState<'a> {
    fn new(
        space: &'a SearchSpace,
        pool: &'a [Configuration],
        designer: &'a DesignerSpec,
        sources: &'a [Arc<SourceTask>],
        params: &RunParams,
    ) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyInput("candidates"));
        }
        let encoded_pool = pool
            .iter()
            .map(|c| encode(space, c))
            .collect::<Result<Vec<_>>>()?;
        let tracked_index = params.tracked_config.as_ref().and_then(|t| {
            let key = t.key();
            pool.iter().position(|c| c.key() == key)
        });
        Ok(RunState {
            space,
            pool,
            encoded_pool,
            designer,
            sources,
            tracked_index,
            visited: HashSet::new(),
            history: TaskHistory::default(),
            encoded_history: Vec::new(),
            result: ExperimentResult {
                evaluations: Vec::new(),
                incumbent_trajectory: Vec::new(),
                designed_space_sizes: Vec::new(),
                seed: params.seed,
                region_extractions: Vec::new(),
                tracked_membership: Vec::new(),
            },
            predicate: None,
            space_designer: None,
            rng: rng_from_seed(params.seed),
        })
    }

    fn incumbent(&self) -> f64 {
        self.result
            .incumbent_trajectory
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    fn record_evaluation(&mut self, index: usize, y: f64, space_size: usize, tracked_in: bool) {
        let trial = self.result.evaluations.len() + 1;
        let config = self.pool[index].clone();
        self.visited.insert(config.key());
        self.encoded_history.push(self.encoded_pool[index].clone());
        self.history.push(config.clone(), y);
        let incumbent = self.incumbent().min(y);
        self.result.evaluations.push((trial, config, y));
        self.result.incumbent_trajectory.push(incumbent);
        self.result.designed_space_sizes.push(space_size);
        self.result.tracked_membership.push(tracked_in);
    }

    fn abort(self, reason: String) -> Error {
        let completed = self.result.evaluations.len();
        Error::EvaluationAborted {
            reason,
            completed,
            partial: Box::new(self.result),
        }
    }

    /// Applies the designer for the trial about to run. Returns member pool
    /// indices (ascending) and whether the tracked configuration is in.
    fn designed_members(&mut self, trial: usize) -> Result<(Vec<usize>, bool)> {
        let members = match self.designer {
            DesignerSpec::None => (0..self.pool.len()).collect::<Vec<usize>>(),
            DesignerSpec::Box | DesignerSpec::Ellipsoid => {
                if self.predicate.is_none() {
                    self.predicate = Some(match self.designer {
                        DesignerSpec::Box => box_design(self.sources, self.space)?,
                        _ => ellipsoid_design(self.sources, self.space)?,
                    });
                }
                let predicate = self.predicate.as_ref().unwrap();
                (0..self.pool.len())
                    .filter(|&i| predicate.contains_encoded(&self.encoded_pool[i]))
                    .collect()
            }
            DesignerSpec::Ours(cfg)
            | DesignerSpec::OursMostSimilar(cfg)
            | DesignerSpec::OursSingleSample(cfg) => {
                if self.space_designer.is_none() {
                    let rule = match self.designer {
                        DesignerSpec::Ours(_) => SelectionRule::Vote,
                        DesignerSpec::OursMostSimilar(_) => SelectionRule::MostSimilar,
                        _ => SelectionRule::SingleSample,
                    };
                    self.space_designer = Some(SpaceDesigner::with_rule(
                        self.sources.to_vec(),
                        cfg.clone(),
                        rule,
                    )?);
                }
                let designed = self.space_designer.as_mut().unwrap().design_encoded(
                    self.space,
                    &self.history,
                    self.pool,
                    &self.encoded_pool,
                    &mut self.rng,
                )?;
                for region in &designed.regions {
                    self.result.region_extractions.push(RegionExtraction {
                        trial,
                        source_id: region.source_id.clone(),
                        similarity: region.similarity,
                        alpha_used: region.alpha_used,
                    });
                }
                designed.member_indices
            }
        };
        let tracked_in = match self.tracked_index {
            None => true,
            Some(t) => members.binary_search(&t).is_ok(),
        };
        Ok((members, tracked_in))
    }

    fn run_initial_design(
        &mut self,
        evaluate: &dyn Fn(&Configuration) -> Result<f64>,
        params: &RunParams,
    ) -> std::result::Result<(), String> {
        let mut init_rng = rng_from_seed(params.init_seed());
        let init = initial_design_indices(self.pool.len(), params.n_init, &mut init_rng)
            .map_err(|e| e.to_string())?;
        for index in init {
            let y = evaluate(&self.pool[index]).map_err(|e| e.to_string())?;
            self.record_evaluation(index, y, self.pool.len(), true);
        }
        Ok(())
    }
}

/// Bayesian optimization: initial design, then per iteration refit the target
/// GP on all observations, design the space over the candidate pool, evaluate
/// the member maximizing EI. Fully deterministic given the seeds in `params`.
pub fn run_bo(
    evaluate: &dyn Fn(&Configuration) -> Result<f64>,
    space: &SearchSpace,
    candidates: &[Configuration],
    designer: &DesignerSpec,
    sources: &[Arc<SourceTask>],
    params: &RunParams,
) -> Result<ExperimentResult> {
    if params.n_init < 1 || params.trials < params.n_init {
        return Err(Error::InvalidArgument(format!(
            "need trials >= n_init >= 1, got trials {} and n_init {}",
            params.trials, params.n_init
        )));
    }
    let mut state = RunState::new(space, candidates, designer, sources, params)?;
    if let Err(reason) = state.run_initial_design(evaluate, params) {
        return Err(state.abort(reason));
    }

    for trial in (params.n_init + 1)..=params.trials {
        let gp_seed: u64 = state.rng.random();
        let target_gp = fit_gp(
            &state.encoded_history,
            &state.history.targets(),
            &params.gp_options.clone().with_seed(gp_seed),
        )?;
        let (members, tracked_in) = state.designed_members(trial)?;
        let space_size = members.len();
        let incumbent = state.incumbent();
        let index = {
            let RunState {
                encoded_pool,
                visited,
                pool,
                rng,
                ..
            } = &mut state;
            suggest_next(&target_gp, encoded_pool, &members, visited, pool, incumbent, rng)?
        };
        match evaluate(&state.pool[index]) {
            Ok(y) => state.record_evaluation(index, y, space_size, tracked_in),
            Err(e) => return Err(state.abort(e.to_string())),
        }
    }
    Ok(state.result)
}

/// Random search: per iteration the designer produces the member set and an
/// unvisited member is drawn uniformly. With `DesignerSpec::None` this is
/// plain random search.
pub fn run_random_search(
    evaluate: &dyn Fn(&Configuration) -> Result<f64>,
    space: &SearchSpace,
    candidates: &[Configuration],
    designer: &DesignerSpec,
    sources: &[Arc<SourceTask>],
    params: &RunParams,
) -> Result<ExperimentResult> {
    if params.trials < 1 || params.trials < params.n_init {
        return Err(Error::InvalidArgument(format!(
            "need trials >= max(1, n_init), got trials {} and n_init {}",
            params.trials, params.n_init
        )));
    }
    let mut state = RunState::new(space, candidates, designer, sources, params)?;
    if let Err(reason) = state.run_initial_design(evaluate, params) {
        return Err(state.abort(reason));
    }

    for trial in (params.n_init + 1)..=params.trials {
        let (members, tracked_in) = state.designed_members(trial)?;
        let space_size = members.len();
        let index = {
            let unvisited: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| !state.visited.contains(&state.pool[i].key()))
                .collect();
            if unvisited.is_empty() {
                uniform_unvisited(state.pool, &state.visited, &mut state.rng)?
            } else {
                unvisited[state.rng.random_range(0..unvisited.len())]
            }
        };
        match evaluate(&state.pool[index]) {
            Ok(y) => state.record_evaluation(index, y, space_size, tracked_in),
            Err(e) => return Err(state.abort(e.to_string())),
        }
    }
    Ok(state.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{sample_uniform, ParamValue, ParameterDef};

    fn space_1d() -> SearchSpace {
        SearchSpace::new(vec![ParameterDef::continuous("x", 0.0, 1.0, false, 0.5)]).unwrap()
    }

    fn space_2d() -> SearchSpace {
        SearchSpace::new(vec![
            ParameterDef::continuous("x0", 0.0, 1.0, false, 0.5),
            ParameterDef::continuous("x1", 0.0, 1.0, false, 0.5),
        ])
        .unwrap()
    }

    fn value(c: &Configuration, i: usize) -> f64 {
        match &c.values[i] {
            ParamValue::Float(v) => *v,
            _ => unreachable!(),
        }
    }

    fn quadratic_1d(c: &Configuration) -> f64 {
        (value(c, 0) - 0.37).powi(2)
    }

    fn quadratic_2d(c: &Configuration) -> f64 {
        (value(c, 0) - 0.5).powi(2) + (value(c, 1) - 0.5).powi(2)
    }

    fn fast_gp() -> GpOptions {
        GpOptions {
            restarts: 1,
            max_opt_iters: 5,
            ..GpOptions::default()
        }
    }

    fn params(trials: usize, n_init: usize, seed: u64) -> RunParams {
        RunParams {
            gp_options: fast_gp(),
            ..RunParams::new(trials, n_init, seed)
        }
    }

    #[test]
    fn initial_design_contract() {
        let pool = sample_uniform(&space_1d(), 100, &mut rng_from_seed(1));
        let picked = initial_design(&pool, 3, &mut rng_from_seed(2)).unwrap();
        assert_eq!(picked.len(), 3);
        let keys: HashSet<_> = picked.iter().map(|c| c.key()).collect();
        assert_eq!(keys.len(), 3);

        // n_init = pool size returns the whole pool, shuffled
        let small: Vec<_> = pool[..5].to_vec();
        let all = initial_design(&small, 5, &mut rng_from_seed(3)).unwrap();
        let keys: HashSet<_> = all.iter().map(|c| c.key()).collect();
        assert_eq!(keys.len(), 5);

        // determinism
        let a = initial_design(&pool, 4, &mut rng_from_seed(9)).unwrap();
        let b = initial_design(&pool, 4, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);

        assert!(initial_design(&small, 6, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn suggest_next_picks_argmax_ei() {
        let space = space_1d();
        let pool = sample_uniform(&space, 30, &mut rng_from_seed(4));
        let encoded: Vec<_> = pool.iter().map(|c| encode(&space, c).unwrap()).collect();
        let obs: Vec<usize> = vec![0, 1, 2, 3, 4];
        let ys: Vec<f64> = obs.iter().map(|&i| quadratic_1d(&pool[i])).collect();
        let obs_points: Vec<_> = obs.iter().map(|&i| encoded[i].clone()).collect();
        let gp = fit_gp(&obs_points, &ys, &fast_gp()).unwrap();
        let incumbent = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let visited: HashSet<_> = obs.iter().map(|&i| pool[i].key()).collect();

        // single unvisited member -> that member
        let members = vec![3, 7];
        let mut rng = rng_from_seed(5);
        let got = suggest_next(&gp, &encoded, &members, &visited, &pool, incumbent, &mut rng).unwrap();
        assert_eq!(got, 7);

        // argmax over several members matches a direct scan
        let members: Vec<usize> = (5..30).collect();
        let got = suggest_next(&gp, &encoded, &members, &visited, &pool, incumbent, &mut rng).unwrap();
        let best = members
            .iter()
            .map(|&i| (i, expected_improvement(&gp, &encoded[i], incumbent).unwrap()))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, ei)| {
                if ei > acc.1 {
                    (i, ei)
                } else {
                    acc
                }
            });
        assert_eq!(got, best.0);

        // all members visited -> uniform fallback from the pool
        let members = vec![0, 1];
        let got = suggest_next(&gp, &encoded, &members, &visited, &pool, incumbent, &mut rng).unwrap();
        assert!(!visited.contains(&pool[got].key()));
    }

    #[test]
    fn suggest_next_tie_breaks_to_lowest_index() {
        let space = space_1d();
        let pool: Vec<Configuration> = vec![
            Configuration::new(vec![ParamValue::Float(0.001)]),
            Configuration::new(vec![ParamValue::Float(0.002)]),
            Configuration::new(vec![ParamValue::Float(0.9990)]),
            Configuration::new(vec![ParamValue::Float(0.9990)]),
        ];
        let encoded: Vec<_> = pool.iter().map(|c| encode(&space, c).unwrap()).collect();
        let gp = crate::gp::GpModel::with_fixed_hyperparams(
            &encoded[..2],
            &[0.5, 0.6],
            crate::kernel::KernelKind::Matern52Ard,
            vec![0.01],
            1.0,
            1e-6,
        )
        .unwrap();
        let visited: HashSet<_> = pool[..2].iter().map(|c| c.key()).collect();
        let mut rng = rng_from_seed(1);
        // members 2 and 3 are the same encoded point: identical EI, lowest wins
        let got = suggest_next(&gp, &encoded, &[2, 3], &visited, &pool, 0.5, &mut rng).unwrap();
        assert_eq!(got, 2);
    }

    #[test]
    fn bo_without_designer_is_clean_loop() {
        let space = space_1d();
        let pool = sample_uniform(&space, 50, &mut rng_from_seed(7));
        let evaluate = |c: &Configuration| Ok(quadratic_1d(c));
        let result = run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &params(10, 3, 1)).unwrap();
        assert_eq!(result.evaluations.len(), 10);
        // distinct evaluations
        let keys: HashSet<_> = result.evaluations.iter().map(|(_, c, _)| c.key()).collect();
        assert_eq!(keys.len(), 10);
        // monotone incumbent that matches the running minimum
        let mut best = f64::INFINITY;
        for (i, (_, _, y)) in result.evaluations.iter().enumerate() {
            best = best.min(*y);
            assert_eq!(result.incumbent_trajectory[i], best);
            if i > 0 {
                assert!(result.incumbent_trajectory[i] <= result.incumbent_trajectory[i - 1]);
            }
        }
        // vanilla BO: designed size = pool size everywhere
        assert!(result.designed_space_sizes.iter().all(|&s| s == 50));
        assert!(result.tracked_membership.iter().all(|&m| m));
    }

    #[test]
    fn bo_boundary_pure_initial_design() {
        let space = space_1d();
        let pool = sample_uniform(&space, 20, &mut rng_from_seed(8));
        let evaluate = |c: &Configuration| Ok(quadratic_1d(c));
        let result = run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &params(3, 3, 2)).unwrap();
        assert_eq!(result.evaluations.len(), 3);
    }

    #[test]
    fn bo_is_deterministic() {
        let space = space_1d();
        let pool = sample_uniform(&space, 40, &mut rng_from_seed(9));
        let evaluate = |c: &Configuration| Ok(quadratic_1d(c));
        let p = params(8, 3, 77);
        let a = run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
        let b = run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_failure_attaches_partial_result() {
        let space = space_1d();
        let pool = sample_uniform(&space, 20, &mut rng_from_seed(10));
        let calls = std::cell::Cell::new(0usize);
        let evaluate = |c: &Configuration| {
            calls.set(calls.get() + 1);
            if calls.get() > 5 {
                Err(Error::InvalidArgument("backend down".into()))
            } else {
                Ok(quadratic_1d(c))
            }
        };
        match run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &params(10, 3, 3)) {
            Err(Error::EvaluationAborted { completed, partial, .. }) => {
                assert_eq!(completed, 5);
                assert_eq!(partial.evaluations.len(), 5);
            }
            other => panic!("expected EvaluationAborted, got {other:?}"),
        }
    }

    #[test]
    fn random_search_exhausts_pool_exactly_once() {
        let space = space_1d();
        let pool = sample_uniform(&space, 50, &mut rng_from_seed(11));
        let evaluate = |c: &Configuration| Ok(quadratic_1d(c));
        let mut p = params(50, 0, 4);
        p.n_init = 0;
        let result =
            run_random_search(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
        let keys: HashSet<_> = result.evaluations.iter().map(|(_, c, _)| c.key()).collect();
        assert_eq!(keys.len(), 50);

        // one more trial than the pool has rows
        let mut p = params(51, 0, 4);
        p.n_init = 0;
        assert!(matches!(
            run_random_search(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p),
            Err(Error::BudgetExceedsPool)
        ));
    }

    #[test]
    fn random_search_single_trial() {
        let space = space_1d();
        let pool = sample_uniform(&space, 10, &mut rng_from_seed(12));
        let evaluate = |c: &Configuration| Ok(quadratic_1d(c));
        let mut p = params(1, 0, 5);
        p.n_init = 0;
        let result =
            run_random_search(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
        assert_eq!(result.evaluations.len(), 1);
    }

    fn clone_sources(space: &SearchSpace, n_obs: usize, seeds: &[u64]) -> Vec<Arc<SourceTask>> {
        seeds
            .iter()
            .map(|&seed| {
                let configs = sample_uniform(space, n_obs, &mut rng_from_seed(seed));
                let history = TaskHistory::new(
                    configs
                        .into_iter()
                        .map(|c| {
                            let y = quadratic_2d(&c);
                            (c, y)
                        })
                        .collect(),
                );
                let gpc = GpOptions {
                    restarts: 1,
                    max_opt_iters: 4,
                    ..GpOptions::default()
                };
                Arc::new(
                    SourceTask::new(format!("src{seed}"), space, history, &fast_gp().with_seed(seed), &gpc)
                        .unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn bo_with_clone_sources_usually_beats_vanilla() {
        let space = space_2d();
        let pool = sample_uniform(&space, 120, &mut rng_from_seed(100));
        let sources = clone_sources(&space, 40, &[201, 202]);
        let evaluate = |c: &Configuration| Ok(quadratic_2d(c));
        let cfg = DesignConfig {
            k: 2,
            ..DesignConfig::default()
        };
        let mut wins = 0;
        let reps = 20u64;
        for rep in 0..reps {
            let mut p = params(15, 3, 1000 + rep);
            p.init_seed = Some(2000 + rep);
            let ours =
                run_bo(&evaluate, &space, &pool, &DesignerSpec::Ours(cfg.clone()), &sources, &p)
                    .unwrap();
            let none = run_bo(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
            // paired: identical initial design
            assert_eq!(ours.evaluations[..3], none.evaluations[..3]);
            if ours.incumbent_trajectory.last().unwrap() <= none.incumbent_trajectory.last().unwrap()
            {
                wins += 1;
            }
        }
        assert!(wins * 10 >= reps * 6, "ours won only {wins}/{reps}");
    }

    #[test]
    fn random_search_with_clone_sources_helps() {
        let space = space_2d();
        let pool = sample_uniform(&space, 120, &mut rng_from_seed(300));
        let sources = clone_sources(&space, 40, &[301, 302]);
        let evaluate = |c: &Configuration| Ok(quadratic_2d(c));
        let cfg = DesignConfig {
            k: 2,
            ..DesignConfig::default()
        };
        let mut ours_finals = Vec::new();
        let mut plain_finals = Vec::new();
        for rep in 0..10u64 {
            let mut p = params(15, 3, 4000 + rep);
            p.init_seed = Some(5000 + rep);
            let ours = run_random_search(
                &evaluate,
                &space,
                &pool,
                &DesignerSpec::Ours(cfg.clone()),
                &sources,
                &p,
            )
            .unwrap();
            let plain =
                run_random_search(&evaluate, &space, &pool, &DesignerSpec::None, &[], &p).unwrap();
            ours_finals.push(*ours.incumbent_trajectory.last().unwrap());
            plain_finals.push(*plain.incumbent_trajectory.last().unwrap());
        }
        let median = |xs: &mut Vec<f64>| {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs[xs.len() / 2]
        };
        assert!(median(&mut ours_finals) <= median(&mut plain_finals));
    }

    #[test]
    fn box_designer_filters_pool() {
        let space = space_2d();
        let pool = sample_uniform(&space, 100, &mut rng_from_seed(400));
        let sources = clone_sources(&space, 30, &[401, 402]);
        let evaluate = |c: &Configuration| Ok(quadratic_2d(c));
        let result =
            run_bo(&evaluate, &space, &pool, &DesignerSpec::Box, &sources, &params(8, 3, 6)).unwrap();
        // init trials see the whole pool, box iterations are no larger
        assert_eq!(result.designed_space_sizes[..3], [100, 100, 100]);
        assert!(result.designed_space_sizes[3..].iter().all(|&s| s <= 100));
    }
}
