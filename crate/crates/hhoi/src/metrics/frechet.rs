//! Gaussian fits and the (squared) Fréchet distance between them.
//!
//! `FD²(a, b) = ‖μ_a − μ_b‖² + Tr(Σ_a + Σ_b − 2(Σ_a^{1/2} Σ_b Σ_a^{1/2})^{1/2})`.
//!
//! Matrix square roots go through a cyclic Jacobi eigendecomposition —
//! the fits are at most 10-dimensional, so a dense solver is plenty —
//! with small negative eigenvalues clamped to zero.

use crate::error::{Error, Result};
use crate::numerics::linalg::{gemm, Matrix};

/// Sample mean and covariance with a `1e-9·I` regularizer.
#[derive(Debug, Clone)]
pub struct GaussianFit {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

pub const COVARIANCE_REGULARIZER: f64 = 1e-9;

impl GaussianFit {
    /// Fit from samples (unbiased covariance, `n − 1` normalization).
    pub fn fit(samples: &[Vec<f64>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::validation(format!(
                "GaussianFit needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let dim = samples[0].len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            if s.len() != dim {
                return Err(Error::Shape {
                    context: "GaussianFit::fit",
                    expected: dim,
                    got: s.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mut cov = Matrix::zeros(dim, dim);
        for s in samples {
            for i in 0..dim {
                let di = s[i] - mean[i];
                for j in 0..dim {
                    let dj = s[j] - mean[j];
                    cov.set(i, j, cov.get(i, j) + di * dj / (n - 1.0));
                }
            }
        }
        for i in 0..dim {
            cov.set(i, i, cov.get(i, i) + COVARIANCE_REGULARIZER);
        }
        Ok(GaussianFit {
            mean,
            covariance: cov,
        })
    }

    pub fn from_moments(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        if covariance.rows() != mean.len() || covariance.cols() != mean.len() {
            return Err(Error::Shape {
                context: "GaussianFit::from_moments",
                expected: mean.len(),
                got: covariance.rows(),
            });
        }
        Ok(GaussianFit { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: returns
/// `(eigenvalues, eigenvectors-as-columns)`.
fn jacobi_eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| m.get(i, i)).collect();
    (eigenvalues, v)
}

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues
/// (numerical dust) clamp to zero.
fn sqrtm_psd(a: &Matrix) -> Matrix {
    let n = a.rows();
    // enforce symmetry before decomposing
    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym.set(i, j, 0.5 * (a.get(i, j) + a.get(j, i)));
        }
    }
    let (eigenvalues, v) = jacobi_eigh(&sym);
    let mut scaled = Matrix::zeros(n, n); // V·√Λ
    for i in 0..n {
        for j in 0..n {
            scaled.set(i, j, v.get(i, j) * eigenvalues[j].max(0.0).sqrt());
        }
    }
    let mut out = Matrix::zeros(n, n);
    gemm(&scaled, &v.transpose(), &mut out, 1);
    out
}

/// Squared Fréchet distance between two Gaussian fits.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape {
            context: "frechet_distance",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let n = a.dim();
    let mean_term: f64 = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let a_half = sqrtm_psd(&a.covariance);
    // inner = √Σa · Σb · √Σa
    let mut tmp = Matrix::zeros(n, n);
    gemm(&a_half, &b.covariance, &mut tmp, 1);
    let mut inner = Matrix::zeros(n, n);
    gemm(&tmp, &a_half, &mut inner, 1);
    let cross = sqrtm_psd(&inner);
    let mut trace = 0.0;
    for i in 0..n {
        trace += a.covariance.get(i, i) + b.covariance.get(i, i) - 2.0 * cross.get(i, i);
    }
    Ok(mean_term + trace)
}
