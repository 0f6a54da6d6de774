//! Binary Gaussian-process classification with a logistic likelihood and
//! Laplace approximation, plus the quantile binarization that turns a task
//! history into promising-region labels.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::gp::{coordinate_ascent, GpOptions};
use crate::kernel::{cholesky_with_jitter, gram_matrix, kernel_vector, log_det_half, KernelKind, KernelParams};
use crate::seed::rng_from_seed;
use crate::space::{EncodedPoint, TaskHistory};

const NEWTON_MAX_ITERS: usize = 100;
const NEWTON_GRAD_TOL: f64 = 1e-6;
const LOG_LS_BOUNDS: (f64, f64) = (-6.0, 6.0);
const LOG_SIGNAL_BOUNDS: (f64, f64) = (-5.0, 5.0);

/// Quantile-binarized labels over a task history.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabels {
    /// 1 marks an observation inside the promising region.
    pub labels: Vec<u8>,
    /// The y threshold that was applied (empirical alpha-quantile).
    pub threshold_y: f64,
    pub alpha_used: f64,
}

/// Empirical quantile with the linear-interpolation convention.
fn quantile_linear(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * alpha;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Labels history observations 1 iff `y < alpha-quantile(y)`. If the literal
/// rule yields a single class, the labels are clamped: the best observation
/// (lowest y, first index on ties) is forced to 1 and the worst (highest y,
/// last index on ties) to 0, so both classes are always present.
pub fn make_region_labels(history: &TaskHistory, alpha: f64) -> Result<RegionLabels> {
    let n = history.len();
    if n < 2 {
        return Err(Error::TooFewObservations { need: 2, got: n });
    }
    let ys = history.targets();
    let mut sorted = ys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite objectives"));
    let threshold = quantile_linear(&sorted, alpha);
    let mut labels: Vec<u8> = ys.iter().map(|&y| u8::from(y < threshold)).collect();

    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == n {
        let mut best = 0;
        let mut worst = 0;
        for (i, &y) in ys.iter().enumerate() {
            if y < ys[best] {
                best = i;
            }
            if y >= ys[worst] {
                worst = i;
            }
        }
        if ones == 0 {
            labels[best] = 1;
        } else {
            labels[worst] = 0;
        }
    }
    Ok(RegionLabels {
        labels,
        threshold_y: threshold,
        alpha_used: alpha,
    })
}

/// A fitted binary GP classifier. Immutable after fit; prediction is
/// read-only and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct GpcModel {
    kernel: KernelKind,
    train_points: Vec<EncodedPoint>,
    train_labels: Vec<u8>,
    params: KernelParams,
    /// Posterior mode of the latent function.
    latent_mode: DVector<f64>,
    /// Gradient of the log likelihood at the mode (t - pi); doubles as the
    /// prediction weights for the latent mean.
    grad_at_mode: DVector<f64>,
    sqrt_w: DVector<f64>,
    /// Lower Cholesky factor of B = I + W^1/2 K W^1/2.
    chol_b_lower: DMatrix<f64>,
    converged: bool,
    approx_lml: f64,
}

impl GpcModel {
    pub fn dim(&self) -> usize {
        self.train_points.first().map_or(0, |p| p.dim())
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn approx_log_marginal_likelihood(&self) -> f64 {
        self.approx_lml
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.params.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.params.signal_variance
    }

    pub fn train_labels(&self) -> &[u8] {
        &self.train_labels
    }

    pub fn latent_mode(&self) -> &[f64] {
        self.latent_mode.as_slice()
    }

    /// Laplace fit at fixed kernel hyperparameters.
    pub fn with_fixed_hyperparams(
        points: &[EncodedPoint],
        labels: &[u8],
        kernel: KernelKind,
        lengthscales: Vec<f64>,
        signal_variance: f64,
    ) -> Result<Self> {
        check_labels(points, labels)?;
        let params = KernelParams { lengthscales, signal_variance };
        laplace_fit(points, labels, kernel, &params, None)
    }

    /// Training accuracy of the hard labels.
    pub fn training_accuracy(&self) -> f64 {
        let hits = self
            .train_points
            .iter()
            .zip(&self.train_labels)
            .filter(|(p, &l)| gpc_predict_label(self, p).unwrap() == l)
            .count();
        hits as f64 / self.train_points.len() as f64
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_labels(points: &[EncodedPoint], labels: &[u8]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("training points"));
    }
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    let d = points[0].dim();
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Newton iterations on the latent posterior mode (the standard stable
/// formulation through B = I + W^1/2 K W^1/2). `warm_start` seeds the mode
/// search; the result is the same mode, found in fewer iterations when the
/// start is close.
///
/// The logistic likelihood carries balanced class weights n/(2 n_class):
/// the adaptive quantile routinely produces label fractions near 0.05, where
/// an unweighted marginal likelihood collapses to the majority class and the
/// extracted region degenerates.
fn laplace_fit(
    points: &[EncodedPoint],
    labels: &[u8],
    kernel: KernelKind,
    params: &KernelParams,
    warm_start: Option<&DVector<f64>>,
) -> Result<GpcModel> {
    let n = points.len();
    let k = gram_matrix(kernel, params, points);
    let t = DVector::from_iterator(n, labels.iter().map(|&l| f64::from(l)));
    let n_pos: f64 = t.sum();
    let w_pos = n as f64 / (2.0 * n_pos);
    let w_neg = n as f64 / (2.0 * (n as f64 - n_pos));
    let class_w = t.map(|ti| if ti == 1.0 { w_pos } else { w_neg });

    let mut f: DVector<f64> = warm_start.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut converged = false;
    let mut a: DVector<f64> = DVector::zeros(n);
    for _ in 0..NEWTON_MAX_ITERS {
        let pi = f.map(sigmoid);
        let w = class_w.component_mul(&pi.map(|p: f64| (p * (1.0 - p)).max(1e-12)));
        let sqrt_w = w.map(f64::sqrt);
        let mut b_mat = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                b_mat[(i, j)] += sqrt_w[i] * k[(i, j)] * sqrt_w[j];
            }
        }
        let (l, _) = cholesky_with_jitter(&b_mat, 0.0)?;
        let grad = class_w.component_mul(&(&t - &pi));
        let b = w.component_mul(&f) + &grad;
        let rhs = sqrt_w.component_mul(&(&k * &b));
        let sol = l
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::FitFailure("triangular solve failed".into()))?;
        let sol = l
            .transpose()
            .solve_upper_triangular(&sol)
            .ok_or_else(|| Error::FitFailure("triangular solve failed".into()))?;
        a = b - sqrt_w.component_mul(&sol);
        f = &k * &a;

        // gradient of the penalized objective at the new iterate
        let grad_norm = (class_w.component_mul(&(&t - f.map(sigmoid))) - &a).norm();
        if grad_norm <= NEWTON_GRAD_TOL {
            converged = true;
            break;
        }
    }
    let pi = f.map(sigmoid);

    // final factorization at the mode
    let w = class_w.component_mul(&pi.map(|p: f64| (p * (1.0 - p)).max(1e-12)));
    let sqrt_w = w.map(f64::sqrt);
    let mut b_mat = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            b_mat[(i, j)] += sqrt_w[i] * k[(i, j)] * sqrt_w[j];
        }
    }
    let (l, _) = cholesky_with_jitter(&b_mat, 0.0)?;

    let log_lik: f64 = f
        .iter()
        .zip(t.iter())
        .zip(class_w.iter())
        .map(|((&fi, &ti), &wi)| wi * (ti * fi - softplus(fi)))
        .sum();
    let approx_lml = -0.5 * a.dot(&f) + log_lik - log_det_half(&l);

    Ok(GpcModel {
        kernel,
        train_points: points.to_vec(),
        train_labels: labels.to_vec(),
        params: params.clone(),
        grad_at_mode: class_w.component_mul(&(&t - &pi)),
        latent_mode: f,
        sqrt_w,
        chol_b_lower: l,
        converged,
        approx_lml,
    })
}

/// Fits a GP classifier: kernel hyperparameters are selected by maximizing the
/// Laplace-approximate marginal likelihood with multi-start coordinate search.
/// `opts.noise_floor` is unused here (the logistic likelihood has no noise
/// term). Deterministic given `opts.seed`.
pub fn fit_gpc(points: &[EncodedPoint], labels: &[u8], opts: &GpOptions) -> Result<GpcModel> {
    check_labels(points, labels)?;
    let d = points[0].dim();

    let mut lo = vec![LOG_LS_BOUNDS.0; d];
    lo.push(LOG_SIGNAL_BOUNDS.0);
    let mut hi = vec![LOG_LS_BOUNDS.1; d];
    hi.push(LOG_SIGNAL_BOUNDS.1);

    // consecutive evaluations sit at nearby hyperparameters, so the previous
    // mode is a good Newton start; the final model below refits cold so the
    // returned model does not depend on the search path
    let last_mode: std::cell::RefCell<Option<DVector<f64>>> = std::cell::RefCell::new(None);
    let lml_at = |theta: &[f64]| -> f64 {
        let params = KernelParams {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
        };
        let warm = last_mode.borrow().clone();
        match laplace_fit(points, labels, opts.kernel, &params, warm.as_ref()) {
            Ok(model) => {
                *last_mode.borrow_mut() = Some(model.latent_mode);
                model.approx_lml
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut rng = rng_from_seed(opts.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut theta = if restart == 0 {
            vec![0.0; d + 1]
        } else {
            let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..=2.0)).collect();
            t.push(0.0);
            t
        };
        let fx = coordinate_ascent(lml_at, &mut theta, &lo, &hi, opts.max_opt_iters);
        if best.as_ref().is_none_or(|(b, _)| fx > *b) {
            best = Some((fx, theta));
        }
    }
    let (best_lml, theta) = best.expect("at least one restart");
    if best_lml == f64::NEG_INFINITY {
        return Err(Error::FitFailure("Laplace fit failed at every start".into()));
    }
    let params = KernelParams {
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        signal_variance: theta[d].exp(),
    };
    laplace_fit(points, labels, opts.kernel, &params, None)
}

/// Predictive latent mean and variance at `point`.
fn predict_latent(model: &GpcModel, point: &EncodedPoint) -> Result<(f64, f64)> {
    if point.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: point.dim(),
        });
    }
    let k_star = kernel_vector(model.kernel, &model.params, &model.train_points, &point.coords);
    let mean = k_star.dot(&model.grad_at_mode);
    let v = model
        .chol_b_lower
        .solve_lower_triangular(&model.sqrt_w.component_mul(&k_star))
        .expect("Cholesky factor has positive diagonal");
    let var = (model.params.signal_variance - v.dot(&v)).max(0.0);
    Ok((mean, var))
}

/// Approximate posterior probability of class 1, squashing the latent
/// Gaussian through the logistic link (probit-style approximation). Always
/// strictly inside (0, 1).
pub fn gpc_predict_proba(model: &GpcModel, point: &EncodedPoint) -> Result<f64> {
    let (mean, var) = predict_latent(model, point)?;
    let scale = (1.0 + std::f64::consts::PI * var / 8.0).sqrt();
    Ok(sigmoid(mean / scale).clamp(1e-12, 1.0 - 1e-12))
}

/// Hard label: 1 iff the predictive probability is >= 0.5 (inclusive).
/// Computed as the sign of the latent mean, which is exactly equivalent since
/// the link is monotone and the variance scaling is positive.
pub fn gpc_predict_label(model: &GpcModel, point: &EncodedPoint) -> Result<u8> {
    if point.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: point.dim(),
        });
    }
    let k_star = kernel_vector(model.kernel, &model.params, &model.train_points, &point.coords);
    Ok(u8::from(k_star.dot(&model.grad_at_mode) >= 0.0))
}
