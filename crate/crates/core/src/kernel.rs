//! Stationary ARD kernels over encoded points, Gram matrix assembly, and
//! Cholesky factorization with jitter escalation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::EncodedPoint;

pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Matern52Ard,
    SquaredExponentialArd,
}

/// Kernel hyperparameters: one lengthscale per encoded dimension plus a
/// signal variance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

impl KernelParams {
    pub fn unit(dim: usize) -> Self {
        KernelParams {
            lengthscales: vec![1.0; dim],
            signal_variance: 1.0,
        }
    }
}

/// Scaled distance r, with r^2 = sum_i ((x_i - z_i) / l_i)^2.
fn scaled_dist(params: &KernelParams, x: &[f64], z: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for ((a, b), l) in x.iter().zip(z).zip(&params.lengthscales) {
        let d = (a - b) / l;
        r2 += d * d;
    }
    r2.sqrt()
}

pub fn kernel_value(kind: KernelKind, params: &KernelParams, x: &[f64], z: &[f64]) -> f64 {
    let r = scaled_dist(params, x, z);
    match kind {
        KernelKind::Matern52Ard => {
            let s = 5f64.sqrt() * r;
            params.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
        }
        KernelKind::SquaredExponentialArd => params.signal_variance * (-0.5 * r * r).exp(),
    }
}

/// Kernel vector k(x, X) between one point and a training set.
pub fn kernel_vector(
    kind: KernelKind,
    params: &KernelParams,
    train: &[EncodedPoint],
    x: &[f64],
) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(
        train.len(),
        train.iter().map(|p| kernel_value(kind, params, &p.coords, x)),
    )
}

/// Symmetric Gram matrix K(X, X).
pub fn gram_matrix(kind: KernelKind, params: &KernelParams, points: &[EncodedPoint]) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_value(kind, params, &points[i].coords, &points[j].coords);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky of `K + diag_add * I`, escalating jitter from [`JITTER_START`] to
/// [`JITTER_MAX`] when the factorization fails on near-singular input.
/// Returns the lower factor and the jitter that was needed (0 when none).
pub fn cholesky_with_jitter(k: &DMatrix<f64>, diag_add: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let attempt = |jitter: f64| -> Option<DMatrix<f64>> {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += diag_add + jitter;
        }
        m.cholesky().map(|c| c.unpack())
    };
    if let Some(l) = attempt(0.0) {
        return Ok((l, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX {
        if let Some(l) = attempt(jitter) {
            return Ok((l, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::FitFailure(format!(
        "Gram matrix not positive definite even with jitter {JITTER_MAX}"
    )))
}

/// Sum of log-diagonal entries of a lower factor, i.e. 0.5 * log det.
pub fn log_det_half(l: &DMatrix<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum()
}
