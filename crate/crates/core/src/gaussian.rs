//! Gaussian components, mixtures and cached log-densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_kit::{ensure_spd, log_det, spd_inverse, vec_sub, SymMatrix};
use crate::scalar::Scalar;

/// Mean vector and SPD covariance of one Gaussian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct GaussianComponent<T: Scalar> {
    pub mean: Vec<T>,
    pub cov: SymMatrix<T>,
}

impl<T: Scalar> GaussianComponent<T> {
    pub fn new(mean: Vec<T>, cov: SymMatrix<T>) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        ensure_spd(&cov)?;
        Ok(Self { mean, cov })
    }

    /// Isotropic Gaussian `N(mean, var·I)`.
    pub fn isotropic(mean: Vec<T>, var: T) -> Result<Self> {
        let n = mean.len();
        Self::new(mean, SymMatrix::scaled_identity(n, var))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn density(&self) -> Result<GaussianDensity<T>> {
        GaussianDensity::new(&self.mean, &self.cov)
    }

    pub fn log_pdf(&self, x: &[T]) -> Result<T> {
        Ok(self.density()?.log_pdf(x))
    }
}

/// Gaussian log-density with the precision and normalizer precomputed.
#[derive(Clone, Debug)]
pub struct GaussianDensity<T: Scalar> {
    mean: Vec<T>,
    precision: SymMatrix<T>,
    log_norm: T,
}

impl<T: Scalar> GaussianDensity<T> {
    pub fn new(mean: &[T], cov: &SymMatrix<T>) -> Result<Self> {
        let n = T::from_usize_lossy(cov.dim());
        let precision = spd_inverse(cov)?;
        let log_norm = -T::lit(0.5) * (n * (T::TAU()).ln() + log_det(cov)?);
        Ok(Self {
            mean: mean.to_vec(),
            precision,
            log_norm,
        })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    #[inline]
    pub fn log_pdf(&self, x: &[T]) -> T {
        self.log_pdf_centered(&vec_sub(x, &self.mean))
    }

    /// Log-density of `mean + r`.
    #[inline]
    pub fn log_pdf_centered(&self, r: &[T]) -> T {
        self.log_norm - T::lit(0.5) * self.precision.quad_form(r)
    }
}

/// Weighted Gaussian mixture with weights on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct Gmm<T: Scalar> {
    weights: Vec<T>,
    components: Vec<GaussianComponent<T>>,
}

impl<T: Scalar> Gmm<T> {
    pub fn new(weights: Vec<T>, components: Vec<GaussianComponent<T>>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::BadMarginals(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        check_simplex(&weights, "mixture weights")?;
        let n = components[0].dim();
        if components.iter().any(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch(
                "mixture components of different dimension".into(),
            ));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn single(component: GaussianComponent<T>) -> Self {
        Self {
            weights: vec![T::one()],
            components: vec![component],
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianComponent<T>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn log_pdf(&self, x: &[T]) -> Result<T> {
        let logs = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| Ok(w.ln() + c.log_pdf(x)?))
            .collect::<Result<Vec<T>>>()?;
        Ok(log_sum_exp(&logs))
    }

    pub fn pdf(&self, x: &[T]) -> Result<T> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// Overall mean `Σ w_i m_i`.
    pub fn mean(&self) -> Vec<T> {
        let n = self.dim();
        let mut m = vec![T::zero(); n];
        for (c, &w) in self.components.iter().zip(&self.weights) {
            for (acc, &v) in m.iter_mut().zip(&c.mean) {
                *acc += w * v;
            }
        }
        m
    }

    /// Overall covariance `Σ w_i (C_i + m_i m_iᵀ) − m mᵀ`.
    pub fn covariance(&self) -> SymMatrix<T> {
        let n = self.dim();
        let m = self.mean();
        let mut acc = crate::matrix_kit::Matrix::zeros(n, n);
        for (c, &w) in self.components.iter().zip(&self.weights) {
            let d = vec_sub(&c.mean, &m);
            for r in 0..n {
                for s in 0..n {
                    acc[(r, s)] += w * (c.cov[(r, s)] + d[r] * d[s]);
                }
            }
        }
        SymMatrix::new(acc)
    }
}

/// Checks that weights are positive and sum to one within `1e-12`.
pub fn check_simplex<T: Scalar>(weights: &[T], what: &str) -> Result<()> {
    if weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::BadMarginals(format!("{what}: entries must be positive")));
    }
    let sum: T = weights.iter().copied().sum();
    let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(weights.len()));
    if (sum - T::one()).abs() > tol {
        return Err(Error::BadMarginals(format!("{what}: sum is {sum}, expected 1")));
    }
    Ok(())
}

/// `ln Σ exp(v_i)` with max subtraction.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if max == T::neg_infinity() || !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}
