//! Search-space design by transfer: ranking-based task similarity, adaptive
//! quantiles, promising-region extraction, similarity-weighted task sampling,
//! and the voting ensemble that produces the designed space. The geometric
//! baseline designers live in [`baselines`].

pub mod baselines;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::gp::{fit_gp, gp_predict, GpModel, GpOptions};
use crate::gpc::{fit_gpc, gpc_predict_label, make_region_labels, GpcModel};
use crate::seed::{stable_hash, Rng, SeedPart};
use crate::space::{encode, Configuration, EncodedPoint, SearchSpace, TaskHistory};

/// Similarity assigned when the target history is too small to rank
/// (fewer than two observations).
pub const NEUTRAL_SIMILARITY: f64 = 0.5;

/// Parameters of the space designer.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Number of source tasks sampled per design call.
    pub k: usize,
    /// Candidate pool size used when a pool has to be generated.
    pub n_candidates: usize,
    /// Fewer surviving candidates than this triggers the full-pool fallback.
    pub min_space_size: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            alpha_min: 0.05,
            alpha_max: 0.95,
            k: 5,
            n_candidates: 2000,
            min_space_size: 1,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= alpha_min < alpha_max <= 1, got {} and {}",
                self.alpha_min, self.alpha_max
            )));
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.min_space_size < 1 || self.n_candidates < self.min_space_size {
            return Err(Error::InvalidArgument(
                "need n_candidates >= min_space_size >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// A source task: its tuning history and the surrogate fitted on it once, up
/// front. Classifiers for already-seen label vectors are cached behind a lock
/// so concurrent designs can share them; fits are pure functions of
/// (points, labels, seed), making the shared cache scheduling-independent.
#[derive(Debug)]
pub struct SourceTask {
    pub id: String,
    pub history: TaskHistory,
    pub surrogate: GpModel,
    encoded: Vec<EncodedPoint>,
    gpc_options: GpOptions,
    classifier_cache: RwLock<HashMap<Vec<u8>, Arc<GpcModel>>>,
}

impl SourceTask {
    /// Encodes the history and fits the surrogate.
    pub fn new(
        id: impl Into<String>,
        space: &SearchSpace,
        history: TaskHistory,
        surrogate_options: &GpOptions,
        gpc_options: &GpOptions,
    ) -> Result<Self> {
        let id = id.into();
        let wrap = |e: Error| Error::SourceTask {
            source_id: id.clone(),
            source: Box::new(e),
        };
        let encoded = history.encoded_points(space).map_err(wrap)?;
        let targets = history.targets();
        let surrogate = fit_gp(&encoded, &targets, surrogate_options).map_err(wrap)?;
        Ok(SourceTask {
            id,
            history,
            surrogate,
            encoded,
            gpc_options: gpc_options.clone(),
            classifier_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn encoded_points(&self) -> &[EncodedPoint] {
        &self.encoded
    }

    /// Observed incumbent: the history's argmin configuration.
    pub fn incumbent(&self) -> Option<&Configuration> {
        self.history
            .incumbent_index()
            .map(|i| &self.history.observations[i].0)
    }

    /// Returns the cached classifier for this label vector or fits one. The
    /// fit seed is derived from the label vector, so the result does not
    /// depend on which caller fit it first.
    fn classifier_for(&self, labels: &[u8]) -> Result<Arc<GpcModel>> {
        if let Some(model) = self.classifier_cache.read().unwrap().get(labels) {
            return Ok(Arc::clone(model));
        }
        let label_str: String = labels.iter().map(|&l| char::from(b'0' + l)).collect();
        let seed = stable_hash(&[
            SeedPart::Num(self.gpc_options.seed),
            SeedPart::Str(&self.id),
            SeedPart::Str(&label_str),
        ]);
        let opts = self.gpc_options.clone().with_seed(seed);
        let model = Arc::new(fit_gpc(&self.encoded, labels, &opts).map_err(|e| {
            Error::SourceTask {
                source_id: self.id.clone(),
                source: Box::new(e),
            }
        })?);
        let mut cache = self.classifier_cache.write().unwrap();
        let entry = cache.entry(labels.to_vec()).or_insert_with(|| Arc::clone(&model));
        Ok(Arc::clone(entry))
    }

    /// Number of distinct label vectors fitted so far.
    pub fn classifier_cache_len(&self) -> usize {
        self.classifier_cache.read().unwrap().len()
    }
}

/// Number of order-preserving pairs between predicted means and observed
/// targets: pairs where `m_j < m_k` and `y_j < y_k` agree (XNOR, so tied
/// pairs on both sides count as preserving).
pub fn order_preserving_pairs(means: &[f64], targets: &[f64]) -> Result<usize> {
    if means.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: means.len(),
            got: targets.len(),
        });
    }
    let n = means.len();
    if n < 2 {
        return Err(Error::TooFewObservations { need: 2, got: n });
    }
    let mut count = 0;
    for j in 0..n {
        for k in (j + 1)..n {
            if (means[j] < means[k]) == (targets[j] < targets[k]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn surrogate_means(
    surrogate: &GpModel,
    space: &SearchSpace,
    target_obs: &TaskHistory,
) -> Result<Vec<f64>> {
    target_obs
        .observations
        .iter()
        .map(|(c, _)| Ok(gp_predict(surrogate, &encode(space, c)?)?.0))
        .collect()
}

/// Order-preserving pair count of a surrogate against the target history.
pub fn order_preserving_count(
    surrogate: &GpModel,
    space: &SearchSpace,
    target_obs: &TaskHistory,
) -> Result<usize> {
    let means = surrogate_means(surrogate, space, target_obs)?;
    order_preserving_pairs(&means, &target_obs.targets())
}

/// Ranking similarity from raw predicted means: `2F / (n (n-1))`, or the
/// neutral 0.5 when fewer than two observations exist.
pub fn similarity_from_means(means: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len();
    if n < 2 {
        return NEUTRAL_SIMILARITY;
    }
    let f = order_preserving_pairs(means, targets).expect("lengths checked") as f64;
    2.0 * f / (n as f64 * (n - 1) as f64)
}

/// Ranking similarity of a source surrogate to the target history.
pub fn task_similarity(
    surrogate: &GpModel,
    space: &SearchSpace,
    target_obs: &TaskHistory,
) -> Result<f64> {
    if target_obs.len() < 2 {
        return Ok(NEUTRAL_SIMILARITY);
    }
    let means = surrogate_means(surrogate, space, target_obs)?;
    Ok(similarity_from_means(&means, &target_obs.targets()))
}

/// Maps similarity to the label quantile:
/// `alpha = alpha_min + (1 - 2 max(S - 0.5, 0)) (alpha_max - alpha_min)`.
/// Returns `alpha_max` directly for S <= 0.5 (the formula reduces to it, and
/// the early return keeps the value bit-exact).
pub fn adaptive_quantile(similarity: f64, cfg: &DesignConfig) -> f64 {
    if similarity <= 0.5 {
        return cfg.alpha_max;
    }
    if similarity >= 1.0 {
        return cfg.alpha_min;
    }
    cfg.alpha_min + (1.0 - 2.0 * (similarity - 0.5)) * (cfg.alpha_max - cfg.alpha_min)
}

/// One source task's promising region: its classifier plus the similarity and
/// quantile that produced it.
#[derive(Debug, Clone)]
pub struct PromisingRegion {
    pub source_id: String,
    pub classifier: Arc<GpcModel>,
    pub alpha_used: f64,
    pub similarity: f64,
}

fn extract_with_similarity(
    source: &SourceTask,
    similarity: f64,
    cfg: &DesignConfig,
) -> Result<PromisingRegion> {
    let alpha = adaptive_quantile(similarity, cfg);
    let labels = make_region_labels(&source.history, alpha).map_err(|e| Error::SourceTask {
        source_id: source.id.clone(),
        source: Box::new(e),
    })?;
    let classifier = source.classifier_for(&labels.labels)?;
    Ok(PromisingRegion {
        source_id: source.id.clone(),
        classifier,
        alpha_used: alpha,
        similarity,
    })
}

/// Extracts the promising region of one source task against the current
/// target history: similarity -> adaptive quantile -> labels -> classifier
/// (reusing the cached classifier when the label vector is unchanged).
pub fn extract_promising_region(
    source: &SourceTask,
    space: &SearchSpace,
    target_obs: &TaskHistory,
    cfg: &DesignConfig,
) -> Result<PromisingRegion> {
    let similarity = task_similarity(&source.surrogate, space, target_obs)?;
    extract_with_similarity(source, similarity, cfg)
}

/// Samples `min(k, K)` distinct task indices, drawing each with probability
/// proportional to its similarity among those still available; falls back to
/// uniform when the remaining weights sum to zero.
pub fn sample_source_tasks(similarities: &[f64], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..similarities.len()).collect();
    let mut picked = Vec::with_capacity(k.min(remaining.len()));
    while picked.len() < k && !remaining.is_empty() {
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| similarities[i].max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let pos = if total <= 0.0 {
            rng.random_range(0..remaining.len())
        } else {
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = remaining.len() - 1;
            for (j, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            chosen
        };
        picked.push(remaining.remove(pos));
    }
    picked
}

/// Majority threshold: `max(1, floor(k / 2))`. The clamp to 1 matters only at
/// k = 1, where the literal floor would admit every point.
pub fn vote_threshold(k: usize) -> usize {
    (k / 2).max(1)
}

/// Ensemble membership of one point: 1 iff at least [`vote_threshold`] of the
/// region classifiers vote 1.
pub fn vote_membership(regions: &[PromisingRegion], point: &EncodedPoint) -> Result<u8> {
    if regions.is_empty() {
        return Err(Error::EmptyInput("regions"));
    }
    let mut votes = 0usize;
    for region in regions {
        votes += usize::from(gpc_predict_label(&region.classifier, point)?);
    }
    Ok(u8::from(votes >= vote_threshold(regions.len())))
}

/// The designed search space: the sampled tasks, the region ensemble behind
/// the membership predicate, and the surviving candidates.
#[derive(Debug, Clone)]
pub struct DesignedSpace {
    pub sampled_task_ids: Vec<String>,
    pub regions: Vec<PromisingRegion>,
    /// Indices into the candidate pool passed to [`design_space`].
    pub member_indices: Vec<usize>,
    pub member_configs: Vec<Configuration>,
    /// True iff the vote admitted fewer than `min_space_size` candidates and
    /// the full pool was returned instead.
    pub fallback_used: bool,
}

/// How the ensemble is selected from the per-source similarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// Sample k tasks by similarity and take the majority vote.
    Vote,
    /// Use only the most similar task's region.
    MostSimilar,
    /// Sample a single task by similarity and use its region.
    SingleSample,
}

/// Votes of one region over an encoded candidate pool.
type VoteCache = HashMap<(usize, Vec<u8>), Arc<Vec<u8>>>;

/// A reusable design session over a fixed source set: holds the selection
/// rule and a per-pool vote cache so repeated designs only re-score
/// candidates for classifiers that were actually refit.
///
/// The cache is keyed by each classifier's label vector and assumes the
/// candidate pool passed to [`SpaceDesigner::design_encoded`] is the same
/// across calls; use a fresh designer per pool.
#[derive(Debug)]
pub struct SpaceDesigner {
    sources: Vec<Arc<SourceTask>>,
    cfg: DesignConfig,
    rule: SelectionRule,
    vote_cache: VoteCache,
}

impl SpaceDesigner {
    pub fn new(sources: Vec<Arc<SourceTask>>, cfg: DesignConfig) -> Result<Self> {
        Self::with_rule(sources, cfg, SelectionRule::Vote)
    }

    pub fn with_rule(
        sources: Vec<Arc<SourceTask>>,
        cfg: DesignConfig,
        rule: SelectionRule,
    ) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::EmptyInput("sources"));
        }
        cfg.validate()?;
        Ok(SpaceDesigner {
            sources,
            cfg,
            rule,
            vote_cache: VoteCache::new(),
        })
    }

    pub fn sources(&self) -> &[Arc<SourceTask>] {
        &self.sources
    }

    /// Similarity of every source to the given target history.
    pub fn similarities(&self, space: &SearchSpace, target_obs: &TaskHistory) -> Result<Vec<f64>> {
        self.sources
            .iter()
            .map(|s| task_similarity(&s.surrogate, space, target_obs))
            .collect()
    }

    pub fn design(
        &mut self,
        space: &SearchSpace,
        target_obs: &TaskHistory,
        candidates: &[Configuration],
        rng: &mut Rng,
    ) -> Result<DesignedSpace> {
        let encoded = candidates
            .iter()
            .map(|c| encode(space, c))
            .collect::<Result<Vec<_>>>()?;
        self.design_encoded(space, target_obs, candidates, &encoded, rng)
    }

    /// As [`SpaceDesigner::design`], with the pool already encoded.
    pub fn design_encoded(
        &mut self,
        space: &SearchSpace,
        target_obs: &TaskHistory,
        candidates: &[Configuration],
        encoded_candidates: &[EncodedPoint],
        rng: &mut Rng,
    ) -> Result<DesignedSpace> {
        design_space_inner(
            &self.sources,
            space,
            target_obs,
            candidates,
            encoded_candidates,
            &self.cfg,
            self.rule,
            rng,
            Some(&mut self.vote_cache),
        )
    }
}

fn region_votes(
    region: &PromisingRegion,
    encoded: &[EncodedPoint],
    source_index: usize,
    cache: Option<&mut VoteCache>,
) -> Result<Arc<Vec<u8>>> {
    let compute = |region: &PromisingRegion| -> Result<Vec<u8>> {
        encoded
            .iter()
            .map(|p| gpc_predict_label(&region.classifier, p))
            .collect()
    };
    match cache {
        None => Ok(Arc::new(compute(region)?)),
        Some(cache) => {
            let key = (source_index, region.classifier.train_labels().to_vec());
            if let Some(votes) = cache.get(&key) {
                return Ok(Arc::clone(votes));
            }
            let votes = Arc::new(compute(region)?);
            cache.insert(key, Arc::clone(&votes));
            Ok(votes)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn design_space_inner(
    sources: &[Arc<SourceTask>],
    space: &SearchSpace,
    target_obs: &TaskHistory,
    candidates: &[Configuration],
    encoded_candidates: &[EncodedPoint],
    cfg: &DesignConfig,
    rule: SelectionRule,
    rng: &mut Rng,
    mut vote_cache: Option<&mut VoteCache>,
) -> Result<DesignedSpace> {
    if sources.is_empty() {
        return Err(Error::EmptyInput("sources"));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidates"));
    }
    cfg.validate()?;

    let similarities = sources
        .iter()
        .map(|s| task_similarity(&s.surrogate, space, target_obs))
        .collect::<Result<Vec<_>>>()?;

    let sampled: Vec<usize> = match rule {
        SelectionRule::Vote => sample_source_tasks(&similarities, cfg.k, rng),
        SelectionRule::MostSimilar => {
            let mut best = 0;
            for (i, s) in similarities.iter().enumerate() {
                if *s > similarities[best] {
                    best = i;
                }
            }
            vec![best]
        }
        SelectionRule::SingleSample => sample_source_tasks(&similarities, 1, rng),
    };

    // regions only for the sampled tasks; unsampled ones would never vote
    let regions = sampled
        .iter()
        .map(|&i| extract_with_similarity(&sources[i], similarities[i], cfg))
        .collect::<Result<Vec<_>>>()?;

    let threshold = vote_threshold(regions.len());
    let mut vote_sums = vec![0usize; encoded_candidates.len()];
    for (region, &source_index) in regions.iter().zip(&sampled) {
        let votes = region_votes(region, encoded_candidates, source_index, vote_cache.as_deref_mut())?;
        for (sum, &v) in vote_sums.iter_mut().zip(votes.iter()) {
            *sum += usize::from(v);
        }
    }

    let mut member_indices: Vec<usize> = vote_sums
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v >= threshold).then_some(i))
        .collect();
    let fallback_used = member_indices.len() < cfg.min_space_size;
    if fallback_used {
        member_indices = (0..candidates.len()).collect();
    }
    let member_configs = member_indices.iter().map(|&i| candidates[i].clone()).collect();
    Ok(DesignedSpace {
        sampled_task_ids: sampled.iter().map(|&i| sources[i].id.clone()).collect(),
        regions,
        member_indices,
        member_configs,
        fallback_used,
    })
}

/// Designs the target search space over a candidate pool: per-source
/// similarity, region extraction for the k sampled tasks, and the majority
/// vote filter. Falls back to the full pool when fewer than
/// `cfg.min_space_size` candidates survive.
pub fn design_space(
    sources: &[Arc<SourceTask>],
    space: &SearchSpace,
    target_obs: &TaskHistory,
    candidates: &[Configuration],
    cfg: &DesignConfig,
    rng: &mut Rng,
) -> Result<DesignedSpace> {
    let encoded = candidates
        .iter()
        .map(|c| encode(space, c))
        .collect::<Result<Vec<_>>>()?;
    design_space_inner(
        sources,
        space,
        target_obs,
        candidates,
        &encoded,
        cfg,
        SelectionRule::Vote,
        rng,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::seed::rng_from_seed;
    use crate::space::{sample_uniform, ParamValue, ParameterDef};

    fn unit_space_2d() -> SearchSpace {
        SearchSpace::new(vec![
            ParameterDef::continuous("x0", 0.0, 1.0, false, 0.5),
            ParameterDef::continuous("x1", 0.0, 1.0, false, 0.5),
        ])
        .unwrap()
    }

    fn quadratic(c: &Configuration, center: (f64, f64), negate: bool) -> f64 {
        let (x0, x1) = match (&c.values[0], &c.values[1]) {
            (ParamValue::Float(a), ParamValue::Float(b)) => (*a, *b),
            _ => unreachable!(),
        };
        let v = (x0 - center.0).powi(2) + (x1 - center.1).powi(2);
        if negate {
            -v
        } else {
            v
        }
    }

    fn make_source(
        id: &str,
        space: &SearchSpace,
        n: usize,
        center: (f64, f64),
        negate: bool,
        seed: u64,
    ) -> Arc<SourceTask> {
        let mut rng = rng_from_seed(seed);
        let configs = sample_uniform(space, n, &mut rng);
        let history = TaskHistory::new(
            configs
                .into_iter()
                .map(|c| {
                    let y = quadratic(&c, center, negate);
                    (c, y)
                })
                .collect(),
        );
        let gp_opts = GpOptions::default().with_seed(seed ^ 0xA5);
        let gpc_opts = GpOptions {
            restarts: 1,
            max_opt_iters: 6,
            ..GpOptions::default()
        };
        Arc::new(SourceTask::new(id, space, history, &gp_opts, &gpc_opts).unwrap())
    }

    fn target_history(space: &SearchSpace, n: usize, center: (f64, f64), seed: u64) -> TaskHistory {
        let mut rng = rng_from_seed(seed);
        TaskHistory::new(
            sample_uniform(space, n, &mut rng)
                .into_iter()
                .map(|c| {
                    let y = quadratic(&c, center, false);
                    (c, y)
                })
                .collect(),
        )
    }

    #[test]
    fn order_preserving_examples() {
        // perfectly monotone: means rank exactly like the targets
        assert_eq!(order_preserving_pairs(&[1.0, 3.0, 2.0], &[0.1, 0.3, 0.2]).unwrap(), 3);
        // perfectly anti-monotone: means rank exactly opposite
        assert_eq!(order_preserving_pairs(&[3.0, 1.0, 2.0], &[0.1, 0.3, 0.2]).unwrap(), 0);
        // reverse-sorted means still agree with the targets on the (1,2) pair
        assert_eq!(order_preserving_pairs(&[3.0, 2.0, 1.0], &[0.1, 0.3, 0.2]).unwrap(), 1);
        // mixed
        assert_eq!(order_preserving_pairs(&[2.0, 1.0, 3.0], &[0.1, 0.3, 0.2]).unwrap(), 1);
        assert!(order_preserving_pairs(&[1.0], &[0.1]).is_err());
    }

    #[test]
    fn order_preserving_matches_brute_force() {
        let mut rng = rng_from_seed(17);
        for _ in 0..200 {
            let n = rng.random_range(2..=25usize);
            let means: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            // independent enumeration, written as the literal double loop
            let mut expect = 0usize;
            for j in 0..n {
                for k in 0..n {
                    if j < k {
                        let a = means[j] < means[k];
                        let b = ys[j] < ys[k];
                        if a == b {
                            expect += 1;
                        }
                    }
                }
            }
            assert_eq!(order_preserving_pairs(&means, &ys).unwrap(), expect);
        }
    }

    #[test]
    fn similarity_arithmetic() {
        // F = 3 out of 3 pairs
        assert_eq!(similarity_from_means(&[1.0, 3.0, 2.0], &[0.1, 0.3, 0.2]), 1.0);
        // F = 1 out of 3 pairs
        let s = similarity_from_means(&[2.0, 1.0, 3.0], &[0.1, 0.3, 0.2]);
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
        // single observation -> neutral
        assert_eq!(similarity_from_means(&[1.0], &[0.1]), 0.5);
    }

    #[test]
    fn similarity_of_negated_surrogate_complements() {
        let space = unit_space_2d();
        let mut rng = rng_from_seed(3);
        let configs = sample_uniform(&space, 20, &mut rng);
        let points: Vec<_> = configs.iter().map(|c| encode(&space, c).unwrap()).collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let fit = |targets: &[f64]| {
            GpModel::with_fixed_hyperparams(
                &points,
                targets,
                KernelKind::Matern52Ard,
                vec![0.4, 0.4],
                1.0,
                1e-6,
            )
            .unwrap()
        };
        let m = fit(&ys);
        let m_neg = fit(&neg);
        let obs = target_history(&space, 15, (0.4, 0.6), 5);
        let s = task_similarity(&m, &space, &obs).unwrap();
        let s_neg = task_similarity(&m_neg, &space, &obs).unwrap();
        assert!((s + s_neg - 1.0).abs() < 1e-12, "{s} + {s_neg}");
    }

    #[test]
    fn adaptive_quantile_endpoints() {
        let cfg = DesignConfig::default();
        assert_eq!(adaptive_quantile(1.0, &cfg), 0.05);
        assert_eq!(adaptive_quantile(0.5, &cfg), 0.95);
        assert_eq!(adaptive_quantile(0.2, &cfg), 0.95);
        assert_eq!(adaptive_quantile(0.0, &cfg), 0.95);
        assert!((adaptive_quantile(0.75, &cfg) - 0.50).abs() < 1e-12);
        // nonincreasing in S
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let a = adaptive_quantile(i as f64 / 100.0, &cfg);
            assert!(a <= prev + 1e-15);
            prev = a;
        }
    }

    #[test]
    fn extraction_alpha_tracks_similarity() {
        let space = unit_space_2d();
        let source = make_source("s", &space, 40, (0.5, 0.5), false, 2);
        let cfg = DesignConfig::default();

        // empty target history: neutral similarity, maximally conservative
        let region = extract_promising_region(&source, &space, &TaskHistory::default(), &cfg).unwrap();
        assert_eq!(region.similarity, 0.5);
        assert_eq!(region.alpha_used, 0.95);

        // identical task: similarity near 1, so alpha near alpha_min and the
        // positive fraction tracks it
        let obs = target_history(&space, 25, (0.5, 0.5), 9);
        let region = extract_promising_region(&source, &space, &obs, &cfg).unwrap();
        assert!(region.similarity > 0.9, "similarity {}", region.similarity);
        assert_eq!(region.alpha_used, adaptive_quantile(region.similarity, &cfg));
        let ones = region
            .classifier
            .train_labels()
            .iter()
            .filter(|&&l| l == 1)
            .count() as f64;
        let frac = ones / source.history.len() as f64;
        assert!((frac - region.alpha_used).abs() <= 2.0 / source.history.len() as f64);

        // adversarial task: similarity near 0 -> alpha_max exactly
        let adv = make_source("adv", &space, 40, (0.5, 0.5), true, 4);
        let region = extract_promising_region(&adv, &space, &obs, &cfg).unwrap();
        assert!(region.similarity < 0.5, "similarity {}", region.similarity);
        assert_eq!(region.alpha_used, 0.95);
    }

    #[test]
    fn classifier_cache_reuses_fits() {
        let space = unit_space_2d();
        let source = make_source("s", &space, 30, (0.5, 0.5), false, 7);
        let cfg = DesignConfig::default();
        let obs = target_history(&space, 20, (0.5, 0.5), 11);
        let a = extract_promising_region(&source, &space, &obs, &cfg).unwrap();
        let before = source.classifier_cache_len();
        let b = extract_promising_region(&source, &space, &obs, &cfg).unwrap();
        assert_eq!(source.classifier_cache_len(), before);
        assert!(Arc::ptr_eq(&a.classifier, &b.classifier));
    }

    #[test]
    fn sampling_exhaustive_and_degenerate() {
        let mut rng = rng_from_seed(1);
        let mut all = sample_source_tasks(&[0.2, 0.4, 0.1, 0.9, 0.3], 5, &mut rng);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);

        for seed in 0..10_000u64 {
            let picked = sample_source_tasks(&[1.0, 0.0, 0.0], 1, &mut rng_from_seed(seed));
            assert_eq!(picked, vec![0]);
        }
    }

    #[test]
    fn sampling_frequency_matches_weights() {
        let mut zero_hits = 0usize;
        for seed in 0..10_000u64 {
            let picked = sample_source_tasks(&[0.8, 0.2], 1, &mut rng_from_seed(seed));
            if picked[0] == 0 {
                zero_hits += 1;
            }
        }
        let freq = zero_hits as f64 / 10_000.0;
        assert!((freq - 0.8).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn sampling_zero_weights_fall_back_to_uniform() {
        let mut counts = [0usize; 3];
        for seed in 0..3000u64 {
            let picked = sample_source_tasks(&[0.0, 0.0, 0.0], 1, &mut rng_from_seed(seed));
            counts[picked[0]] += 1;
        }
        for c in counts {
            assert!(c > 800, "counts {counts:?}");
        }
    }

    #[test]
    fn vote_threshold_examples() {
        assert_eq!(vote_threshold(1), 1);
        assert_eq!(vote_threshold(2), 1);
        assert_eq!(vote_threshold(5), 2);
        assert_eq!(vote_threshold(7), 3);
    }

    #[test]
    fn design_space_on_clone_sources_shrinks_and_keeps_best() {
        let space = unit_space_2d();
        let sources: Vec<_> = (0..3)
            .map(|i| make_source(&format!("s{i}"), &space, 60, (0.5, 0.5), false, 20 + i as u64))
            .collect();
        let obs = target_history(&space, 20, (0.5, 0.5), 33);
        let mut pool_rng = rng_from_seed(44);
        let candidates = sample_uniform(&space, 300, &mut pool_rng);
        let cfg = DesignConfig {
            k: 3,
            ..DesignConfig::default()
        };
        let mut rng = rng_from_seed(55);
        let designed = design_space(&sources, &space, &obs, &candidates, &cfg, &mut rng).unwrap();
        assert!(!designed.fallback_used);
        assert!(
            designed.member_indices.len() <= candidates.len() * 3 / 10,
            "kept {} of {}",
            designed.member_indices.len(),
            candidates.len()
        );
        // pool's best candidate stays in the designed space
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                quadratic(a, (0.5, 0.5), false)
                    .partial_cmp(&quadratic(b, (0.5, 0.5), false))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        assert!(designed.member_indices.contains(&best));
        // membership is a subset of the pool
        assert!(designed.member_indices.iter().all(|&i| i < candidates.len()));
    }

    #[test]
    fn design_space_on_adversarial_sources_retains_majority() {
        let space = unit_space_2d();
        let sources: Vec<_> = (0..3)
            .map(|i| make_source(&format!("a{i}"), &space, 60, (0.5, 0.5), true, 60 + i as u64))
            .collect();
        let obs = target_history(&space, 20, (0.5, 0.5), 71);
        let mut pool_rng = rng_from_seed(72);
        let candidates = sample_uniform(&space, 300, &mut pool_rng);
        let cfg = DesignConfig {
            k: 3,
            ..DesignConfig::default()
        };
        let mut rng = rng_from_seed(73);
        let designed = design_space(&sources, &space, &obs, &candidates, &cfg, &mut rng).unwrap();
        for region in &designed.regions {
            assert_eq!(region.alpha_used, 0.95, "S = {}", region.similarity);
        }
        assert!(
            designed.member_indices.len() * 2 >= candidates.len(),
            "kept only {} of {}",
            designed.member_indices.len(),
            candidates.len()
        );
    }

    #[test]
    fn design_space_falls_back_when_vote_empties_pool() {
        let space = unit_space_2d();
        // source whose good region is the far corner
        let source = make_source("corner", &space, 60, (0.95, 0.95), false, 90);
        // target history perfectly correlated with the source surrogate so
        // similarity is high and the region tight around (0.95, 0.95)
        let obs = target_history(&space, 25, (0.95, 0.95), 91);
        // candidates clustered in the opposite corner
        let candidates: Vec<Configuration> = (0..50)
            .map(|i| {
                Configuration::new(vec![
                    ParamValue::Float(0.001 * i as f64),
                    ParamValue::Float(0.0005 * i as f64),
                ])
            })
            .collect();
        let cfg = DesignConfig {
            k: 1,
            ..DesignConfig::default()
        };
        let mut rng = rng_from_seed(92);
        let designed = design_space(&[source], &space, &obs, &candidates, &cfg, &mut rng).unwrap();
        assert!(designed.fallback_used);
        assert_eq!(designed.member_indices.len(), candidates.len());
    }

    #[test]
    fn design_space_wall_time_scales_linearly_in_sources() {
        let space = unit_space_2d();
        let obs = target_history(&space, 10, (0.5, 0.5), 7);
        let mut pool_rng = rng_from_seed(8);
        let candidates = sample_uniform(&space, 100, &mut pool_rng);
        let cfg = DesignConfig {
            k: 5,
            ..DesignConfig::default()
        };
        let time_for = |n_sources: usize| {
            let sources: Vec<_> = (0..n_sources)
                .map(|i| make_source(&format!("s{i}"), &space, 20, (0.5, 0.5), false, i as u64))
                .collect();
            // warm the classifier caches so the measurement isolates the
            // per-iteration cost
            let mut rng = rng_from_seed(1);
            design_space(&sources, &space, &obs, &candidates, &cfg, &mut rng).unwrap();
            let start = std::time::Instant::now();
            for s in 0..5u64 {
                let mut rng = rng_from_seed(s);
                design_space(&sources, &space, &obs, &candidates, &cfg, &mut rng).unwrap();
            }
            start.elapsed()
        };
        let t5 = time_for(5);
        let t80 = time_for(80);
        // 16x the sources; allow a loose constant over the linear budget
        assert!(
            t80 < t5 * 16 * 4 + std::time::Duration::from_millis(250),
            "t5 = {t5:?}, t80 = {t80:?}"
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn vote_is_monotone_in_single_flips(k in 1usize..=7, bits in 0u32..128) {
                // flipping any single vote 0 -> 1 never flips the ensemble 1 -> 0
                let votes: Vec<u8> = (0..k).map(|i| ((bits >> i) & 1) as u8).collect();
                let sum: usize = votes.iter().map(|&v| usize::from(v)).sum();
                let out = u8::from(sum >= vote_threshold(k));
                for i in 0..k {
                    if votes[i] == 0 {
                        let mut flipped = votes.clone();
                        flipped[i] = 1;
                        let sum2: usize = flipped.iter().map(|&v| usize::from(v)).sum();
                        let out2 = u8::from(sum2 >= vote_threshold(k));
                        prop_assert!(out2 >= out);
                    }
                }
            }
        }
    }
}
