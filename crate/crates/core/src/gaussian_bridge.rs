//! Closed-form discrete-time Schrödinger bridge between two Gaussians.
//!
//! The reference chain is the random walk `x_{k+1} = x_k + sqrt(ε·Δt) w_k`.
//! The optimal chain has Gaussian marginals `N(μ_k, (P_k⁻¹ + Q_k⁻¹)⁻¹)` with
//! `P_k = P₀ + kεΔt·I`, `Q_k = Q₀ − kεΔt·I`, and Gaussian kernels with gain
//! `I − εΔt·Q_k⁻¹` and covariance `εΔt(I − εΔt·Q_k⁻¹)`.
//!
//! The schedule is stored through `Q₀⁻¹` rather than `Q₀`. `Q₀⁻¹` is finite
//! for every pair of SPD boundaries; `Q₀` itself is indefinite whenever the
//! bridge has to expand the covariance faster than the reference noise does,
//! and it is infinite when the bridge coincides with the reference walk.

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;
use crate::matrix_kit::{
    log_det, spd_inverse, sym_inverse, sym_sqrt, vec_add, vec_sub, Matrix, SymMatrix,
};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct BridgeSchedule<T: Scalar> {
    rho0: GaussianComponent<T>,
    rho_n: GaussianComponent<T>,
    steps: usize,
    eps: T,
    dt: T,
    q0_inv: SymMatrix<T>,
    p0_inv: SymMatrix<T>,
    /// `Q_k⁻¹` for `k = 0..=N`.
    q_inv: Vec<SymMatrix<T>>,
    /// `(P_k⁻¹ + Q_k⁻¹)⁻¹` for `k = 0..=N`.
    marginal_cov: Vec<SymMatrix<T>>,
    mu_path: Vec<Vec<T>>,
    gains: Vec<SymMatrix<T>>,
    kernel_cov: Vec<SymMatrix<T>>,
    cost: T,
}

/// Solves the Gaussian bridge from `rho0` to `rho_n` in `steps` steps of
/// size `dt` with noise intensity `eps` (reference step variance `eps·dt`).
pub fn solve_gaussian_sb<T: Scalar>(
    rho0: &GaussianComponent<T>,
    rho_n: &GaussianComponent<T>,
    steps: usize,
    eps: T,
    dt: T,
) -> Result<BridgeSchedule<T>> {
    BridgeSchedule::solve(rho0, rho_n, steps, eps, dt)
}

impl<T: Scalar> BridgeSchedule<T> {
    pub fn solve(
        rho0: &GaussianComponent<T>,
        rho_n: &GaussianComponent<T>,
        steps: usize,
        eps: T,
        dt: T,
    ) -> Result<Self> {
        let n = rho0.dim();
        if rho_n.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "bridge boundaries of dimension {n} and {}",
                rho_n.dim()
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("bridge needs at least one step".into()));
        }
        if !(eps > T::zero()) || !(dt > T::zero()) {
            return Err(Error::InvalidArgument(
                "noise intensity and step size must be positive".into(),
            ));
        }

        let h = eps * dt;
        let c = h * T::from_usize_lossy(steps);
        let q0_inv = q0_inverse(&rho0.cov, &rho_n.cov, c)?;
        let sigma0_inv = spd_inverse(&rho0.cov)?;
        let p0_inv = sigma0_inv.sym_sub(&q0_inv);
        let eye = Matrix::identity(n);

        let mut q_inv = Vec::with_capacity(steps + 1);
        let mut marginal_cov = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let kh = h * T::from_usize_lossy(k);
            // Q_k⁻¹ = W (I − kh·W)⁻¹ and P_k⁻¹ = V (I + kh·V)⁻¹ with W = Q₀⁻¹, V = P₀⁻¹.
            let qk_inv = shifted_inverse(&q0_inv, -kh).map_err(|_| Error::InfeasibleBridge {
                step: k,
                reason: "Q_k is singular".into(),
            })?;
            let pk_inv = shifted_inverse(&p0_inv, kh).map_err(|_| Error::InfeasibleBridge {
                step: k,
                reason: "P_k is singular".into(),
            })?;
            let cov = spd_inverse(&pk_inv.sym_add(&qk_inv)).map_err(|e| {
                Error::InfeasibleBridge {
                    step: k,
                    reason: format!("marginal covariance not SPD ({e})"),
                }
            })?;
            q_inv.push(qk_inv);
            marginal_cov.push(cov);
        }

        let mut gains = Vec::with_capacity(steps);
        let mut kernel_cov = Vec::with_capacity(steps);
        for (k, qk_inv) in q_inv.iter().take(steps).enumerate() {
            let g = SymMatrix::new(&eye - &qk_inv.scale(h));
            let s = g.sym_scale(h);
            crate::matrix_kit::ensure_spd(&s).map_err(|e| Error::InfeasibleBridge {
                step: k,
                reason: format!("kernel covariance not SPD ({e})"),
            })?;
            gains.push(g);
            kernel_cov.push(s);
        }

        let nn = T::from_usize_lossy(steps);
        let mu_path = (0..=steps)
            .map(|k| {
                let a = T::from_usize_lossy(k) / nn;
                rho0.mean
                    .iter()
                    .zip(&rho_n.mean)
                    .map(|(&m0, &m1)| (T::one() - a) * m0 + a * m1)
                    .collect()
            })
            .collect();

        let cost = gsb_cost(rho0, rho_n, &q0_inv, c)?;

        Ok(Self {
            rho0: rho0.clone(),
            rho_n: rho_n.clone(),
            steps,
            eps,
            dt,
            q0_inv,
            p0_inv,
            q_inv,
            marginal_cov,
            mu_path,
            gains,
            kernel_cov,
            cost,
        })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }

    #[inline]
    pub fn eps(&self) -> T {
        self.eps
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Step variance `ε·Δt` of the reference random walk.
    #[inline]
    pub fn reference_variance(&self) -> T {
        self.eps * self.dt
    }

    /// Horizon `T = N·Δt`.
    pub fn horizon_time(&self) -> T {
        self.dt * T::from_usize_lossy(self.steps)
    }

    pub fn initial(&self) -> &GaussianComponent<T> {
        &self.rho0
    }

    pub fn terminal(&self) -> &GaussianComponent<T> {
        &self.rho_n
    }

    pub fn q0_inverse(&self) -> &SymMatrix<T> {
        &self.q0_inv
    }

    /// `Q₀`; fails when `Q₀⁻¹` is singular (the bridge is the reference walk
    /// along some direction).
    pub fn q0(&self) -> Result<SymMatrix<T>> {
        sym_inverse(&self.q0_inv)
    }

    pub fn p0(&self) -> Result<SymMatrix<T>> {
        sym_inverse(&self.p0_inv)
    }

    /// `Q_k⁻¹` for `0 ≤ k ≤ N`.
    pub fn q_inverse(&self, k: usize) -> Result<&SymMatrix<T>> {
        self.check_index(k, self.steps)?;
        Ok(&self.q_inv[k])
    }

    pub fn mean_at(&self, k: usize) -> &[T] {
        &self.mu_path[k]
    }

    /// Gain `I − εΔt·Q_k⁻¹` for `0 ≤ k < N`.
    pub fn gain(&self, k: usize) -> &SymMatrix<T> {
        &self.gains[k]
    }

    /// Kernel covariance `εΔt(I − εΔt·Q_k⁻¹)` for `0 ≤ k < N`.
    pub fn kernel_cov(&self, k: usize) -> &SymMatrix<T> {
        &self.kernel_cov[k]
    }

    /// `(P_k⁻¹ + Q_k⁻¹)⁻¹` evaluated from the schedule, including `k = 0, N`.
    pub fn formula_marginal_cov(&self, k: usize) -> Result<&SymMatrix<T>> {
        self.check_index(k, self.steps)?;
        Ok(&self.marginal_cov[k])
    }

    /// Marginal at step `k`. The boundary steps return the inputs verbatim.
    pub fn marginal_at(&self, k: usize) -> Result<GaussianComponent<T>> {
        self.check_index(k, self.steps)?;
        Ok(if k == 0 {
            self.rho0.clone()
        } else if k == self.steps {
            self.rho_n.clone()
        } else {
            GaussianComponent {
                mean: self.mu_path[k].clone(),
                cov: self.marginal_cov[k].clone(),
            }
        })
    }

    /// Mean of the kernel at step `k` from state `x`.
    pub fn kernel_mean(&self, k: usize, x: &[T]) -> Vec<T> {
        let dx = vec_sub(x, &self.mu_path[k]);
        vec_add(&self.mu_path[k + 1], &self.gains[k].matvec(&dx))
    }

    /// Transition kernel `p(x_{k+1} | x_k = x)` for `0 ≤ k < N`.
    pub fn kernel_at(&self, k: usize, x: &[T]) -> Result<GaussianComponent<T>> {
        if self.steps == 0 || k >= self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps.saturating_sub(1),
            });
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {}-dimensional bridge",
                x.len(),
                self.dim()
            )));
        }
        Ok(GaussianComponent {
            mean: self.kernel_mean(k, x),
            cov: self.kernel_cov[k].clone(),
        })
    }

    pub fn sb_cost(&self) -> T {
        self.cost
    }

    /// `E_{x_k}[KL(p_{k+1|k}(·|x_k) ‖ N(x_k, εΔt·I))]` under the bridge marginal.
    pub fn expected_step_kl(&self, k: usize) -> Result<T> {
        if k >= self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps - 1,
            });
        }
        let n = self.dim();
        let h = self.reference_variance();
        let s = &self.kernel_cov[k];
        let g_minus_i = self.gains[k].add_scaled_identity(-T::one());
        let drift_cov = g_minus_i.congruence(&self.marginal_cov[k]);
        let dmu = vec_sub(&self.mu_path[k + 1], &self.mu_path[k]);
        let mean_sq: T = dmu.iter().map(|&v| v * v).sum();
        let half = T::lit(0.5);
        Ok(half
            * (s.trace() / h - T::from_usize_lossy(n) + (mean_sq + drift_cov.trace()) / h
                - log_det(&s.sym_scale(h.recip()))?))
    }

    /// Sum of [`Self::expected_step_kl`] over the horizon.
    pub fn stepwise_kl_sum(&self) -> Result<T> {
        (0..self.steps).map(|k| self.expected_step_kl(k)).sum()
    }

    fn check_index(&self, k: usize, max: usize) -> Result<()> {
        if k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        Ok(())
    }
}

/// Optimal cost `J^SB` of a solved schedule.
pub fn sb_cost<T: Scalar>(sched: &BridgeSchedule<T>) -> T {
    sched.sb_cost()
}

/// `Q₀⁻¹ = Σ₀^{-1/2} (Σ₀ + c/2·I − (Σ₀^{1/2} Σ_N Σ₀^{1/2} + c²/4·I)^{1/2}) Σ₀^{-1/2} / c`
/// with `c = ε·T`.
fn q0_inverse<T: Scalar>(sigma0: &SymMatrix<T>, sigma_n: &SymMatrix<T>, c: T) -> Result<SymMatrix<T>> {
    let root = sym_sqrt(sigma0)?;
    let root_inv = spd_inverse(&root)?;
    let inner_arg = root
        .congruence(sigma_n)
        .add_scaled_identity(c * c * T::lit(0.25));
    let inner = sym_sqrt(&inner_arg)?;
    let m = sigma0.add_scaled_identity(c * T::lit(0.5)).sym_sub(&inner);
    Ok(root_inv.congruence(&m).sym_scale(c.recip()))
}

/// `A (I + s·A)⁻¹` for symmetric `A`; the two factors commute.
fn shifted_inverse<T: Scalar>(a: &SymMatrix<T>, s: T) -> Result<SymMatrix<T>> {
    let n = a.dim();
    let shifted = &Matrix::identity(n) + &a.scale(s);
    let inv = shifted.inverse()?;
    Ok(SymMatrix::new(&**a * &inv))
}

fn gsb_cost<T: Scalar>(
    rho0: &GaussianComponent<T>,
    rho_n: &GaussianComponent<T>,
    q0_inv: &SymMatrix<T>,
    c: T,
) -> Result<T> {
    let n = rho0.dim();
    let nn = T::from_usize_lossy(n);
    let a = &Matrix::identity(n) - &q0_inv.scale(c);
    let v = rho_n.cov.sym_sub(&a.congruence(&rho0.cov));
    let log_det_v = log_det(&v).map_err(|e| {
        Error::DegenerateBridge(format!("V = Σ_N − AΣ₀Aᵀ is not SPD ({e})"))
    })?;
    let tr_sigma_w: T = rho0
        .cov
        .as_slice()
        .iter()
        .zip(q0_inv.as_slice())
        .map(|(&x, &y)| x * y)
        .sum();
    let dmu = vec_sub(&rho_n.mean, &rho0.mean);
    let mean_sq: T = dmu.iter().map(|&v| v * v).sum();
    let dtr = rho_n.cov.trace() - rho0.cov.trace();
    let two = T::lit(2.0);
    Ok(T::lit(0.5)
        * (two * tr_sigma_w - log_det_v + nn * c.ln() - nn + mean_sq / c + dtr / c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mean: f64, var: f64) -> GaussianComponent<f64> {
        GaussianComponent::isotropic(vec![mean], var).unwrap()
    }

    #[test]
    fn mean_path_is_linear_interpolation() {
        let a = GaussianComponent::isotropic(vec![0.0, 0.0], 0.3).unwrap();
        let b = GaussianComponent::isotropic(vec![5.0, 0.0], 0.3).unwrap();
        let s = solve_gaussian_sb(&a, &b, 10, 0.1, 1.0).unwrap();
        assert_eq!(s.marginal_at(5).unwrap().mean, vec![2.5, 0.0]);
    }

    #[test]
    fn q0_matches_scalar_closed_form() {
        // Q₀ = εN σ²/(σ² + εN/2 − sqrt(σ⁴ + ε²N²/4)), evaluated by hand.
        let (var, eps, n) = (0.1f64, 0.01f64, 10usize);
        let c = eps * n as f64;
        let expected = c * var / (var + c / 2.0 - (var * var + c * c / 4.0).sqrt());
        let s = solve_gaussian_sb(&scalar(0.0, var), &scalar(0.0, var), n, eps, 1.0).unwrap();
        let q0 = s.q0().unwrap()[(0, 0)];
        assert!((q0 - expected).abs() / expected < 1e-10, "{q0} vs {expected}");
        assert!((q0 - 0.2618033988749895).abs() < 1e-12);
    }

    #[test]
    fn kernel_maps_marginal_mean_to_next_mean() {
        let s = solve_gaussian_sb(&scalar(1.0, 1.0), &scalar(-2.0, 0.5), 4, 0.2, 1.0).unwrap();
        for k in 0..4 {
            let m = s.mean_at(k).to_vec();
            let kern = s.kernel_at(k, &m).unwrap();
            assert!((kern.mean[0] - s.mean_at(k + 1)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn index_errors() {
        let s = solve_gaussian_sb(&scalar(0.0, 1.0), &scalar(0.0, 1.0), 3, 0.1, 1.0).unwrap();
        assert!(matches!(s.kernel_at(3, &[0.0]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(s.marginal_at(4), Err(Error::IndexOutOfRange { .. })));
        assert!(s.marginal_at(3).is_ok());
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = scalar(0.0, 1.0);
        let b = GaussianComponent::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            solve_gaussian_sb(&a, &b, 3, 0.1, 1.0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            solve_gaussian_sb(&a, &a, 0, 0.1, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            solve_gaussian_sb(&a, &a, 3, 0.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn reference_walk_is_its_own_bridge() {
        // Σ_N = Σ₀ + εT·I: Q₀⁻¹ vanishes and the cost is zero.
        let s = solve_gaussian_sb(&scalar(0.0, 1.0), &scalar(0.0, 2.0), 10, 0.1, 1.0).unwrap();
        assert!(s.q0_inverse().max_abs() < 1e-14);
        assert!(s.q0().is_err());
        assert!(s.sb_cost().abs() < 1e-12);
        assert!((s.gain(3)[(0, 0)] - 1.0).abs() < 1e-14);
    }
}
