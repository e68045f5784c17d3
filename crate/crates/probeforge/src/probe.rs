//! Linear-regression probe: embedding vector -> class fraction.
//!
//! The fit is the minimum-norm least-squares solution with an unpenalized
//! intercept. A Householder reflection of the sample axis splits off the
//! mean, leaving `n - 1` rows on which the weights are solved through a QR
//! factorization. A well-conditioned triangular factor is solved directly;
//! otherwise a Jacobi SVD of the factor gives the truncated pseudoinverse,
//! treating singular values below `rcond * sigma_max` as zero. With fewer
//! samples than dimensions the probe interpolates the training targets with
//! the smallest weight norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_RCOND: f64 = 1e-10;

/// Triangular factors whose smallest diagonal entry is below this fraction
/// of the largest take the SVD route.
const TRIANGULAR_RATIO: f64 = 1e-7;

const MAX_SWEEPS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolvePath {
    Triangular,
    Svd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitDiagnostics {
    /// Rank of the mean-removed design that the solution used.
    pub effective_rank: usize,
    pub path: SolvePath,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    weights: Vec<f64>,
    intercept: f64,
    diagnostics: FitDiagnostics,
}

impl Probe {
    pub fn from_parts(weights: Vec<f64>, intercept: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
            return Err(Error::NonFinite("probe parameters".into()));
        }
        Ok(Probe {
            diagnostics: FitDiagnostics {
                effective_rank: weights.len(),
                path: SolvePath::Triangular,
            },
            weights,
            intercept,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }
}

/// Fits with [`DEFAULT_RCOND`]. `x` is `n x d`, one sample per row.
pub fn fit(x: &DMatrix<f64>, y: &[f64]) -> Result<Probe> {
    fit_with_rcond(x, y, DEFAULT_RCOND)
}

pub fn fit_with_rcond(x: &DMatrix<f64>, y: &[f64], rcond: f64) -> Result<Probe> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::InvalidInput(format!("probe needs at least 2 samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("probe needs at least one feature".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe training data".into()));
    }

    let x_mean: DVector<f64> = x.row_mean().transpose();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let z = remove_mean_direction(x);
    let t = remove_mean_direction(&DMatrix::from_column_slice(n, 1, y)).column(0).into_owned();

    let (weights, diagnostics) = if n > d {
        solve_tall(z, t, rcond)
    } else {
        solve_wide(z, t, rcond)
    };
    let intercept = y_mean - x_mean.dot(&weights);
    if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
        return Err(Error::NonFinite("probe solution".into()));
    }
    Ok(Probe {
        weights: weights.as_slice().to_vec(),
        intercept,
        diagnostics,
    })
}

/// Rows 1.. of `H a`, where `H` is the Householder reflection taking the
/// normalized all-ones vector to `-e_0`. Least squares with a free
/// intercept on `a` reduces to plain least squares on these `n - 1` rows,
/// which unlike centered data carry no built-in rank deficiency.
fn remove_mean_direction(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let shift: Vec<f64> = a
        .column_iter()
        .map(|c| (c.mean() + c[0] * inv_sqrt_n) / (1.0 + inv_sqrt_n))
        .collect();
    DMatrix::from_fn(n - 1, a.ncols(), |i, j| a[(i + 1, j)] - shift[j])
}

// A = Q R with Q m x d orthonormal, so A+ = R+ Q^T.
fn solve_tall(a: DMatrix<f64>, b: DVector<f64>, rcond: f64) -> (DVector<f64>, FitDiagnostics) {
    let d = a.ncols();
    let qr = a.qr();
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let qtb = qtb.rows(0, d).into_owned();
    pinv_apply(qr.r(), &qtb, rcond, false)
}

// A^T = Q R with Q d x m orthonormal, so A = R^T Q^T and A+ = Q (R^T)+.
fn solve_wide(a: DMatrix<f64>, b: DVector<f64>, rcond: f64) -> (DVector<f64>, FitDiagnostics) {
    let qr = a.transpose().qr();
    let (z, diag) = pinv_apply(qr.r(), &b, rcond, true);
    (qr.q() * z, diag)
}

/// Applies the truncated pseudoinverse of the square upper-triangular `r`
/// (or of `r^T` when `transposed`) to `b`.
fn pinv_apply(r: DMatrix<f64>, b: &DVector<f64>, rcond: f64, transposed: bool) -> (DVector<f64>, FitDiagnostics) {
    let m = r.ncols();
    let diag_max = r.diagonal().amax();
    let diag_min = r.diagonal().amin();
    if diag_max > 0.0 && diag_min > TRIANGULAR_RATIO * diag_max {
        let solved = if transposed {
            r.tr_solve_upper_triangular(b)
        } else {
            r.solve_upper_triangular(b)
        };
        if let Some(x) = solved {
            return (
                x,
                FitDiagnostics {
                    effective_rank: m,
                    path: SolvePath::Triangular,
                },
            );
        }
    }

    // r V = W with orthogonal columns w_j = sigma_j u_j, so
    // r+ b = sum_j v_j (w_j . b) / sigma_j^2 and
    // (r^T)+ b = sum_j w_j (v_j . b) / sigma_j^2.
    let (w, v) = jacobi_svd(r);
    let norms2: Vec<f64> = w.column_iter().map(|c| c.norm_squared()).collect();
    let sigma_max = norms2.iter().fold(0.0f64, |a, &s| a.max(s)).sqrt();
    let cutoff = rcond * sigma_max;
    let mut out = DVector::zeros(m);
    let mut rank = 0;
    for (j, &s2) in norms2.iter().enumerate() {
        if s2.sqrt() <= cutoff || s2 == 0.0 {
            continue;
        }
        rank += 1;
        let (left, right) = if transposed { (w.column(j), v.column(j)) } else { (v.column(j), w.column(j)) };
        out.axpy(right.dot(b) / s2, &left, 1.0);
    }
    (
        out,
        FitDiagnostics {
            effective_rank: rank,
            path: SolvePath::Svd,
        },
    )
}

/// One-sided Jacobi SVD of a square matrix: returns `(W, V)` with `V`
/// orthogonal and `a V = W` having mutually orthogonal columns. Column norms
/// of `W` are the singular values, accurate even for rank-deficient input.
fn jacobi_svd(mut a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// `x . weights + intercept` for every row of `x`; not clipped.
pub fn predict(probe: &Probe, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            found: x.ncols(),
        });
    }
    let w = DVector::from_column_slice(&probe.weights);
    Ok((x * w).iter().map(|v| v + probe.intercept).collect())
}

/// Gathers embedding rows into an `n x d` matrix.
pub fn design_matrix<'a>(rows: impl ExactSizeIterator<Item = &'a [f32]>, d: usize) -> DMatrix<f64> {
    let n = rows.len();
    let mut m = DMatrix::zeros(n, d);
    for (i, row) in rows.enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v as f64;
        }
    }
    m
}
