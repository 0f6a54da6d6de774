//! Gaussian-process regression surrogate with ARD kernels, marginal-likelihood
//! hyperparameter fitting, and the Expected Improvement acquisition
//! (minimization convention).

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::kernel::{
    cholesky_with_jitter, gram_matrix, kernel_vector, log_det_half, KernelKind, KernelParams,
};
use crate::seed::rng_from_seed;
use crate::space::EncodedPoint;

const LOG_LS_BOUNDS: (f64, f64) = (-6.0, 6.0);
const LOG_SIGNAL_BOUNDS: (f64, f64) = (-5.0, 5.0);
const MAX_NOISE_VARIANCE: f64 = 4.0;
const LN_2PI: f64 = 1.8378770664093453;

/// Options controlling surrogate fitting.
#[derive(Debug, Clone)]
pub struct GpOptions {
    pub kernel: KernelKind,
    /// Lower bound on the fitted noise variance (standardized scale).
    pub noise_floor: f64,
    /// Number of local-search starts; the first start is always unit
    /// hyperparameters, the rest draw log-lengthscales uniformly in [-2, 2].
    pub restarts: usize,
    /// Maximum coordinate-search sweeps per start.
    pub max_opt_iters: usize,
    /// Seed for the restart initializer.
    pub seed: u64,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            kernel: KernelKind::Matern52Ard,
            noise_floor: 1e-6,
            restarts: 2,
            max_opt_iters: 10,
            seed: 0,
        }
    }
}

impl GpOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise_floor(mut self, floor: f64) -> Self {
        self.noise_floor = floor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.noise_floor < 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "noise_floor must be >= 1e-10, got {}",
                self.noise_floor
            )));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// A fitted GP regression model. Immutable after fit; prediction is
/// read-only and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelKind,
    train_points: Vec<EncodedPoint>,
    targets_standardized: DVector<f64>,
    target_mean: f64,
    target_std: f64,
    params: KernelParams,
    noise_variance: f64,
    /// Lower Cholesky factor of K + noise * I (plus any jitter needed).
    chol_lower: DMatrix<f64>,
    /// (K + noise I)^-1 y, on the standardized scale.
    weights: DVector<f64>,
    log_marginal_likelihood: f64,
}

impl GpModel {
    pub fn dim(&self) -> usize {
        self.train_points.first().map_or(0, |p| p.dim())
    }

    pub fn n_train(&self) -> usize {
        self.train_points.len()
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.params.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.params.signal_variance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn targets_standardized(&self) -> &[f64] {
        self.targets_standardized.as_slice()
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Builds a model at fixed hyperparameters (no marginal-likelihood
    /// search). Targets are still standardized internally.
    pub fn with_fixed_hyperparams(
        points: &[EncodedPoint],
        targets: &[f64],
        kernel: KernelKind,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        check_training_data(points, targets)?;
        if lengthscales.len() != points[0].dim() {
            return Err(Error::DimensionMismatch {
                expected: points[0].dim(),
                got: lengthscales.len(),
            });
        }
        let (y_std, mean, std) = standardize(targets)?;
        let params = KernelParams {
            lengthscales,
            signal_variance,
        };
        build_model(points, &DVector::from_vec(y_std), mean, std, kernel, params, noise_variance)
    }
}

fn check_training_data(points: &[EncodedPoint], targets: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("training points"));
    }
    if points.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: targets.len(),
        });
    }
    let d = points[0].dim();
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
    }
    Ok(())
}

/// Centers and scales to unit variance using the population formula. A
/// (near-)constant input gets std 1 and an all-zero output.
pub fn standardize(values: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("standardize"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return Ok((vec![0.0; values.len()], mean, 1.0));
    }
    Ok((values.iter().map(|v| (v - mean) / std).collect(), mean, std))
}

fn build_model(
    points: &[EncodedPoint],
    y_std: &DVector<f64>,
    target_mean: f64,
    target_std: f64,
    kernel: KernelKind,
    params: KernelParams,
    noise_variance: f64,
) -> Result<GpModel> {
    let k = gram_matrix(kernel, &params, points);
    let (chol_lower, _jitter) = cholesky_with_jitter(&k, noise_variance)?;
    let z = chol_lower
        .solve_lower_triangular(y_std)
        .ok_or_else(|| Error::FitFailure("triangular solve failed".into()))?;
    let weights = chol_lower
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::FitFailure("triangular solve failed".into()))?;
    let n = points.len() as f64;
    let lml = -0.5 * y_std.dot(&weights) - log_det_half(&chol_lower) - 0.5 * n * LN_2PI;
    Ok(GpModel {
        kernel,
        train_points: points.to_vec(),
        targets_standardized: y_std.clone(),
        target_mean,
        target_std,
        params,
        noise_variance,
        chol_lower,
        weights,
        log_marginal_likelihood: lml,
    })
}

/// Log marginal likelihood at a given log-hyperparameter vector
/// `[log_ls_1..d, log_signal, log_noise]`; -inf when the factorization fails.
fn lml_at(
    points: &[EncodedPoint],
    y_std: &DVector<f64>,
    kernel: KernelKind,
    theta: &[f64],
    noise_floor: f64,
) -> f64 {
    let d = points[0].dim();
    let params = KernelParams {
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        signal_variance: theta[d].exp(),
    };
    let noise = theta[d + 1].exp().max(noise_floor);
    let k = gram_matrix(kernel, &params, points);
    let Ok((l, _)) = cholesky_with_jitter(&k, noise) else {
        return f64::NEG_INFINITY;
    };
    let Some(z) = l.solve_lower_triangular(y_std) else {
        return f64::NEG_INFINITY;
    };
    let Some(w) = l.transpose().solve_upper_triangular(&z) else {
        return f64::NEG_INFINITY;
    };
    let n = points.len() as f64;
    -0.5 * y_std.dot(&w) - log_det_half(&l) - 0.5 * n * LN_2PI
}

/// Derivative-free coordinate search maximizing `f`, with per-coordinate step
/// halving. Deterministic.
pub(crate) fn coordinate_ascent<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    max_sweeps: usize,
) -> f64 {
    let mut fx = f(x);
    let mut steps = vec![0.5; x.len()];
    for _ in 0..max_sweeps {
        let mut any_improved = false;
        for i in 0..x.len() {
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let old = x[i];
                let cand = (old + dir * steps[i]).clamp(lo[i], hi[i]);
                if cand == old {
                    continue;
                }
                x[i] = cand;
                let fc = f(x);
                if fc > fx + 1e-12 {
                    fx = fc;
                    improved = true;
                    any_improved = true;
                    // keep walking this direction while it pays off
                    loop {
                        let prev = x[i];
                        let next = (prev + dir * steps[i]).clamp(lo[i], hi[i]);
                        if next == prev {
                            break;
                        }
                        x[i] = next;
                        let fnext = f(x);
                        if fnext > fx + 1e-12 {
                            fx = fnext;
                        } else {
                            x[i] = prev;
                            break;
                        }
                    }
                    break;
                }
                x[i] = old;
            }
            if !improved {
                steps[i] *= 0.5;
            }
        }
        if !any_improved && steps.iter().all(|&s| s < 1e-3) {
            break;
        }
    }
    fx
}

/// Fits a GP by maximizing the log marginal likelihood over
/// log-hyperparameters with multi-start coordinate search. The first start is
/// unit hyperparameters so the fit never scores below that baseline.
pub fn fit_gp(points: &[EncodedPoint], targets: &[f64], opts: &GpOptions) -> Result<GpModel> {
    opts.validate()?;
    check_training_data(points, targets)?;
    let d = points[0].dim();
    let (y_std_vec, mean, std) = standardize(targets)?;
    let y_std = DVector::from_vec(y_std_vec);

    let log_noise_lo = opts.noise_floor.ln();
    let log_noise_hi = MAX_NOISE_VARIANCE.ln();
    let mut lo = vec![LOG_LS_BOUNDS.0; d];
    lo.push(LOG_SIGNAL_BOUNDS.0);
    lo.push(log_noise_lo);
    let mut hi = vec![LOG_LS_BOUNDS.1; d];
    hi.push(LOG_SIGNAL_BOUNDS.1);
    hi.push(log_noise_hi);

    let mut rng = rng_from_seed(opts.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..opts.restarts {
        let mut theta = if restart == 0 {
            // unit lengthscales and signal, noise at the floor
            let mut t = vec![0.0; d + 1];
            t.push(log_noise_lo);
            t
        } else {
            let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..=2.0)).collect();
            t.push(0.0);
            t.push(1e-2f64.max(opts.noise_floor).ln());
            t
        };
        let fx = coordinate_ascent(
            |t| lml_at(points, &y_std, opts.kernel, t, opts.noise_floor),
            &mut theta,
            &lo,
            &hi,
            opts.max_opt_iters,
        );
        if best.as_ref().is_none_or(|(b, _)| fx > *b) {
            best = Some((fx, theta));
        }
    }
    let (best_lml, theta) = best.expect("restarts >= 1");
    if best_lml == f64::NEG_INFINITY {
        return Err(Error::FitFailure(
            "no hyperparameter setting produced a positive-definite Gram matrix".into(),
        ));
    }
    let params = KernelParams {
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        signal_variance: theta[d].exp(),
    };
    let noise = theta[d + 1].exp().max(opts.noise_floor);
    build_model(points, &y_std, mean, std, opts.kernel, params, noise)
}

/// Posterior predictive mean and variance at `point`, on the original target
/// scale. The variance is of the latent function (no observation noise) and
/// is clamped at zero.
pub fn gp_predict(model: &GpModel, point: &EncodedPoint) -> Result<(f64, f64)> {
    if point.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: point.dim(),
        });
    }
    let k_star = kernel_vector(model.kernel, &model.params, &model.train_points, &point.coords);
    let mean_std = k_star.dot(&model.weights);
    let v = model
        .chol_lower
        .solve_lower_triangular(&k_star)
        .expect("Cholesky factor has positive diagonal");
    let var_std = (model.params.signal_variance - v.dot(&v)).max(0.0);
    Ok((
        mean_std * model.target_std + model.target_mean,
        var_std * model.target_std * model.target_std,
    ))
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via erf.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Closed-form EI for minimization given a predictive (mean, variance) and the
/// incumbent. Degenerates to `max(incumbent - mean, 0)` when sigma vanishes.
pub fn ei_value(mean: f64, variance: f64, incumbent: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    if sigma <= 1e-12 {
        return (incumbent - mean).max(0.0);
    }
    let z = (incumbent - mean) / sigma;
    ((incumbent - mean) * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

/// Expected Improvement of `point` over the incumbent under `model`.
pub fn expected_improvement(model: &GpModel, point: &EncodedPoint, incumbent: f64) -> Result<f64> {
    let (mean, variance) = gp_predict(model, point)?;
    Ok(ei_value(mean, variance, incumbent))
}
