//! Geometric baseline designers: bounding box and minimum-volume enclosing
//! ellipsoid over the source incumbents. Both revert to the full space when
//! the search space contains a categorical parameter.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::space::{encode, Configuration, EncodedPoint, SearchSpace};
use crate::transfer::SourceTask;

/// Half-width applied to degenerate box dimensions and radius of the
/// single-incumbent ellipsoid ball (encoded coordinates are per-unit).
const DEGENERATE_HALF_WIDTH: f64 = 0.005;
const SINGLE_POINT_RADIUS: f64 = 0.01;

/// Default Khachiyan tolerance used by the ellipsoid designer.
pub const ELLIPSOID_DESIGN_TOL: f64 = 1e-3;

const MVEE_MAX_ITERS: usize = 200_000;
const SHAPE_REGULARIZATION: f64 = 1e-6;

/// Membership predicate over encoded configurations.
#[derive(Debug, Clone)]
pub enum SpacePredicate {
    Full,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ellipsoid {
        center: DVector<f64>,
        shape: DMatrix<f64>,
        tol: f64,
    },
}

impl SpacePredicate {
    pub fn contains_encoded(&self, point: &EncodedPoint) -> bool {
        match self {
            SpacePredicate::Full => true,
            SpacePredicate::Box { lo, hi } => point
                .coords
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| x >= l && x <= h),
            SpacePredicate::Ellipsoid { center, shape, tol } => {
                let diff = DVector::from_column_slice(&point.coords) - center;
                (shape * &diff).dot(&diff) <= 1.0 + tol
            }
        }
    }

    pub fn contains(&self, space: &SearchSpace, config: &Configuration) -> Result<bool> {
        Ok(self.contains_encoded(&encode(space, config)?))
    }
}

fn encoded_incumbents(sources: &[Arc<SourceTask>], space: &SearchSpace) -> Result<Vec<EncodedPoint>> {
    sources
        .iter()
        .map(|s| {
            let incumbent = s.incumbent().ok_or_else(|| Error::SourceTask {
                source_id: s.id.clone(),
                source: Box::new(Error::EmptyInput("source history")),
            })?;
            encode(space, incumbent)
        })
        .collect()
}

/// Axis-aligned bounding box of the encoded source incumbents; degenerate
/// dimensions are widened to 0.01. Spaces with categorical parameters revert
/// to the full space (no ordering between one-hot corners to box over).
pub fn box_design(sources: &[Arc<SourceTask>], space: &SearchSpace) -> Result<SpacePredicate> {
    if sources.is_empty() {
        return Err(Error::EmptyInput("sources"));
    }
    if space.has_categorical() {
        return Ok(SpacePredicate::Full);
    }
    let points = encoded_incumbents(sources, space)?;
    let d = space.encoded_dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in &points {
        for (i, &x) in p.coords.iter().enumerate() {
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    for i in 0..d {
        if hi[i] - lo[i] < 1e-12 {
            lo[i] -= DEGENERATE_HALF_WIDTH;
            hi[i] += DEGENERATE_HALF_WIDTH;
        }
    }
    Ok(SpacePredicate::Box { lo, hi })
}

/// Khachiyan's algorithm for the minimum-volume enclosing ellipsoid.
///
/// Returns `(center c, shape A)` with every input satisfying
/// `(x - c)^T A (x - c) <= 1 + tolerance`: after the weight iteration
/// converges, A is rescaled so the farthest point sits exactly on the unit
/// Mahalanobis sphere. Rank-deficient point sets are regularized by adding
/// 1e-6 to the diagonal of the matrix being inverted.
pub fn mvee(points: &[Vec<f64>], tolerance: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if points.len() < 2 {
        return Err(Error::TooFewObservations { need: 2, got: points.len() });
    }
    if tolerance <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = points.len();
    let d = points[0].len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }

    // Q: (d+1) x n lifted points
    let mut q = DMatrix::zeros(d + 1, n);
    for (j, p) in points.iter().enumerate() {
        for i in 0..d {
            q[(i, j)] = p[i];
        }
        q[(d, j)] = 1.0;
    }

    let mut u = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..MVEE_MAX_ITERS {
        // X = Q diag(u) Q^T
        let qu = {
            let mut m = q.clone();
            for j in 0..n {
                for i in 0..=d {
                    m[(i, j)] *= u[j];
                }
            }
            m
        };
        let x = &qu * q.transpose();
        let x_inv = x
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::FitFailure(format!("mvee pseudo-inverse: {e}")))?;
        // M_j = q_j^T X^-1 q_j
        let mut max_m = f64::NEG_INFINITY;
        let mut max_j = 0;
        for j in 0..n {
            let qj = q.column(j);
            let m = (&x_inv * qj).dot(&qj);
            if m > max_m {
                max_m = m;
                max_j = j;
            }
        }
        let step = (max_m - d as f64 - 1.0) / ((d as f64 + 1.0) * (max_m - 1.0));
        let mut new_u = &u * (1.0 - step);
        new_u[max_j] += step;
        let err = (&new_u - &u).norm();
        u = new_u;
        if err <= tolerance {
            break;
        }
    }

    // center and shape from the converged weights
    let mut center = DVector::zeros(d);
    for (j, p) in points.iter().enumerate() {
        for i in 0..d {
            center[i] += u[j] * p[i];
        }
    }
    let mut second_moment = DMatrix::zeros(d, d);
    for (j, p) in points.iter().enumerate() {
        for a in 0..d {
            for b in 0..d {
                second_moment[(a, b)] += u[j] * p[a] * p[b];
            }
        }
    }
    let mut to_invert: DMatrix<f64> = second_moment - &center * center.transpose();
    let mut reg = 0.0;
    let inv = loop {
        if let Some(inv) = to_invert.clone().try_inverse() {
            break inv;
        }
        let add = if reg == 0.0 { SHAPE_REGULARIZATION } else { reg * 10.0 };
        for i in 0..d {
            to_invert[(i, i)] += add - reg;
        }
        reg = add;
        if reg > 1.0 {
            return Err(Error::FitFailure("mvee shape matrix not invertible".into()));
        }
    };
    let mut shape = inv / d as f64;

    // normalize so the farthest point is exactly on the unit sphere
    let max_radius2 = points
        .iter()
        .map(|p| {
            let diff = DVector::from_column_slice(p) - &center;
            (&shape * &diff).dot(&diff)
        })
        .fold(0.0f64, f64::max);
    if max_radius2 > 1e-18 {
        shape /= max_radius2;
    }
    Ok((center, shape))
}

/// MVEE of the encoded source incumbents; a single (or fully duplicated)
/// incumbent degenerates to a ball of radius 0.01 around it. Categorical
/// spaces revert to the full space.
pub fn ellipsoid_design(sources: &[Arc<SourceTask>], space: &SearchSpace) -> Result<SpacePredicate> {
    if sources.is_empty() {
        return Err(Error::EmptyInput("sources"));
    }
    if space.has_categorical() {
        return Ok(SpacePredicate::Full);
    }
    let points = encoded_incumbents(sources, space)?;
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for p in &points {
        if !unique.iter().any(|u| u == &p.coords) {
            unique.push(p.coords.clone());
        }
    }
    if unique.len() == 1 {
        let d = unique[0].len();
        let shape = DMatrix::identity(d, d) / (SINGLE_POINT_RADIUS * SINGLE_POINT_RADIUS);
        return Ok(SpacePredicate::Ellipsoid {
            center: DVector::from_column_slice(&unique[0]),
            shape,
            tol: ELLIPSOID_DESIGN_TOL,
        });
    }
    let (center, shape) = mvee(&unique, ELLIPSOID_DESIGN_TOL)?;
    Ok(SpacePredicate::Ellipsoid {
        center,
        shape,
        tol: ELLIPSOID_DESIGN_TOL,
    })
}
