//! Pairwise comparison matrices, consistency measurement and the two
//! weight-derivation methods (eigenvector and logarithmic least squares).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcmError {
    #[error("matrix size {0} is too small, need at least 2 alternatives")]
    TooSmall(usize),
    #[error("expected {expected} entries for the matrix, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("entry ({row}, {col}) = {value} is not strictly positive and finite")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("diagonal entry ({0}, {0}) = {1} is not 1")]
    Diagonal(usize, f64),
    #[error("entries ({row}, {col}) and ({col}, {row}) are not reciprocal: product {product}")]
    NotReciprocal {
        row: usize,
        col: usize,
        product: f64,
    },
    #[error("weight vector is empty or has a non-positive component")]
    InvalidWeights,
    #[error("power iteration did not converge after {iterations} iterations (last relative change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("random index must be positive, got {0}")]
    InvalidRandomIndex(f64),
    #[error("principal eigenvalue {lambda_max} is below the matrix size {n}")]
    EigenvalueBelowSize { lambda_max: f64, n: usize },
}

/// Positive reciprocal square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PcmRepr", into = "PcmRepr")]
pub struct Pcm {
    n: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PcmRepr {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<PcmRepr> for Pcm {
    type Error = PcmError;

    fn try_from(repr: PcmRepr) -> Result<Self, Self::Error> {
        let flat: Vec<f64> = repr.entries.into_iter().flatten().collect();
        Pcm::new(repr.n, flat)
    }
}

impl From<Pcm> for PcmRepr {
    fn from(pcm: Pcm) -> Self {
        let entries = pcm.entries.chunks(pcm.n).map(<[f64]>::to_vec).collect();
        PcmRepr { n: pcm.n, entries }
    }
}

impl Pcm {
    /// Validates a full row-major matrix.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, PcmError> {
        if n < 2 {
            return Err(PcmError::TooSmall(n));
        }
        if entries.len() != n * n {
            return Err(PcmError::Shape {
                expected: n * n,
                got: entries.len(),
            });
        }
        let tol = Tolerances::default().reciprocity;
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if !(v.is_finite() && v > 0.0) {
                    return Err(PcmError::NonPositive {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            if entries[i * n + i] != 1.0 {
                return Err(PcmError::Diagonal(i, entries[i * n + i]));
            }
            for j in (i + 1)..n {
                let product = entries[i * n + j] * entries[j * n + i];
                if (product - 1.0).abs() > tol {
                    return Err(PcmError::NotReciprocal {
                        row: i,
                        col: j,
                        product,
                    });
                }
            }
        }
        Ok(Pcm { n, entries })
    }

    /// Builds a matrix from its strict upper triangle (row by row), filling
    /// the diagonal with 1 and the lower triangle with reciprocals.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self, PcmError> {
        if n < 2 {
            return Err(PcmError::TooSmall(n));
        }
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(PcmError::Shape {
                expected,
                got: upper.len(),
            });
        }
        let mut entries = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = upper[k];
                if !(v.is_finite() && v > 0.0) {
                    return Err(PcmError::NonPositive {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                entries[i * n + j] = v;
                entries[j * n + i] = 1.0 / v;
                k += 1;
            }
        }
        Ok(Pcm { n, entries })
    }

    pub fn ones(n: usize) -> Result<Self, PcmError> {
        if n < 2 {
            return Err(PcmError::TooSmall(n));
        }
        Ok(Pcm {
            n,
            entries: vec![1.0; n * n],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PcmError> {
        let n = rows.len();
        Pcm::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn transpose(&self) -> Pcm {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j];
            }
        }
        Pcm { n, entries }
    }
}

/// Positive priorities normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Normalizes positive raw weights to sum 1.
    pub fn normalized(raw: Vec<f64>) -> Result<Self, PcmError> {
        if raw.is_empty() || raw.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(PcmError::InvalidWeights);
        }
        let total: f64 = raw.iter().sum();
        Ok(WeightVector(raw.into_iter().map(|v| v / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance between two weight vectors of the same length.
    pub fn euclidean_distance(&self, other: &WeightVector) -> f64 {
        assert_eq!(self.len(), other.len(), "weight vectors differ in length");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
}

/// Principal eigenpair by power iteration.
///
/// The iterate starts from the row geometric means and is renormalized to
/// sum 1 at every step. Iteration stops once the largest componentwise
/// relative change drops to `tol`. The eigenvalue is the mean of
/// `(A w)_i / w_i` at the final iterate; values within rounding noise of
/// `n` are reported as exactly `n`.
pub fn principal_eigen(
    pcm: &Pcm,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, WeightVector), PcmError> {
    let n = pcm.n;
    let mut w = geometric_means(pcm);
    normalize_in_place(&mut w);
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for _ in 0..max_iter {
        mat_vec(pcm, &w, &mut next);
        normalize_in_place(&mut next);
        residual = w
            .iter()
            .zip(&next)
            .map(|(old, new)| ((new - old) / new).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut w, &mut next);
        if residual <= tol {
            let lambda_max = rayleigh_mean(pcm, &w, &mut next);
            return Ok((snap_to_size(lambda_max, n)?, WeightVector(w)));
        }
    }
    Err(PcmError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Eigenvector method with the default tolerance and iteration cap.
pub fn eigenvector_weights(pcm: &Pcm) -> Result<(f64, WeightVector), PcmError> {
    let tol = Tolerances::default();
    principal_eigen(pcm, tol.eigen_relative_change, tol.eigen_max_iter)
}

/// Row geometric means normalized to sum 1, the closed-form minimizer of the
/// logarithmic least squares objective for complete matrices.
pub fn llsm_weights(pcm: &Pcm) -> WeightVector {
    let mut w = geometric_means(pcm);
    normalize_in_place(&mut w);
    WeightVector(w)
}

pub fn consistency_index(lambda_max: f64, n: usize) -> Result<f64, PcmError> {
    if n < 2 {
        return Err(PcmError::TooSmall(n));
    }
    let size = n as f64;
    if lambda_max < size {
        return Err(PcmError::EigenvalueBelowSize { lambda_max, n });
    }
    Ok((lambda_max - size) / (size - 1.0))
}

pub fn consistency_ratio(ci: f64, ri: f64) -> Result<f64, PcmError> {
    if !(ri.is_finite() && ri > 0.0) {
        return Err(PcmError::InvalidRandomIndex(ri));
    }
    Ok(ci / ri)
}

/// Eigenvalue, CI and CR of a matrix against the given Random Index.
/// For 2×2 matrices the CR is reported as 0 whatever the index.
pub fn consistency_report(pcm: &Pcm, ri: f64) -> Result<ConsistencyReport, PcmError> {
    let (lambda_max, _) = eigenvector_weights(pcm)?;
    let ci = consistency_index(lambda_max, pcm.n)?;
    let cr = if pcm.n == 2 {
        0.0
    } else {
        consistency_ratio(ci, ri)?
    };
    Ok(ConsistencyReport {
        lambda_max,
        ci,
        ri,
        cr,
    })
}

/// Checks `a_ik = a_ij a_jk` for every triad, relative to `a_ik`.
pub fn is_consistent(pcm: &Pcm, tol: f64) -> bool {
    let n = pcm.n;
    (0..n).all(|i| {
        (0..n).all(|j| {
            (0..n).all(|k| {
                let direct = pcm.get(i, k);
                (direct - pcm.get(i, j) * pcm.get(j, k)).abs() <= tol * direct
            })
        })
    })
}

/// Consistent matrix `a_ij = w_i / w_j`.
pub fn make_consistent_pcm(weights: &[f64]) -> Result<Pcm, PcmError> {
    let n = weights.len();
    if n < 2 {
        return Err(PcmError::TooSmall(n));
    }
    if weights.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(PcmError::InvalidWeights);
    }
    let mut entries = vec![1.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = weights[i] / weights[j];
            entries[i * n + j] = v;
            entries[j * n + i] = 1.0 / v;
        }
    }
    Ok(Pcm { n, entries })
}

fn geometric_means(pcm: &Pcm) -> Vec<f64> {
    let inv = 1.0 / pcm.n as f64;
    (0..pcm.n)
        .map(|i| {
            let log_sum: f64 = pcm.row(i).iter().map(|v| v.ln()).sum();
            (log_sum * inv).exp()
        })
        .collect()
}

fn normalize_in_place(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}

fn mat_vec(pcm: &Pcm, w: &[f64], out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = pcm.row(i).iter().zip(w).map(|(a, b)| a * b).sum();
    }
}

fn rayleigh_mean(pcm: &Pcm, w: &[f64], scratch: &mut [f64]) -> f64 {
    mat_vec(pcm, w, scratch);
    scratch.iter().zip(w).map(|(aw, wi)| aw / wi).sum::<f64>() / pcm.n as f64
}

fn snap_to_size(lambda_max: f64, n: usize) -> Result<f64, PcmError> {
    let size = n as f64;
    if (lambda_max - size).abs() <= Tolerances::default().eigenvalue_floor * size {
        Ok(size)
    } else if lambda_max > size {
        Ok(lambda_max)
    } else {
        Err(PcmError::EigenvalueBelowSize { lambda_max, n })
    }
}
