//! Minimum-effort steering of a linear stochastic system between Gaussians.
//!
//! Mean and covariance separate. The mean is steered by the minimum-norm
//! feedforward through the controllability Gramian. The covariance is
//! steered by linear feedback on the centered state: for a terminal
//! multiplier `Π_N` the optimal gains follow from a backward Riccati sweep
//!
//! ```text
//! R_k = I + B_kᵀ Π_{k+1} B_k
//! K_k = −R_k⁻¹ B_kᵀ Π_{k+1} A_k
//! Π_k = A_kᵀ Π_{k+1} (A_k + B_k K_k)
//! ```
//!
//! and `Π_N` is found by maximizing the concave dual
//! `g(Π_N) = tr(Π₀Σ₀) + Σ_k tr(Π_{k+1} D_k D_kᵀ) − tr(Π_N Σ_target)`,
//! whose gradient is the terminal covariance error.

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;
use crate::matrix_kit::{cholesky, ensure_spd, spd_inverse, vec_add, vec_sub, Matrix, SymMatrix};
use crate::scalar::Scalar;

/// `x_{k+1} = A_k x_k + B_k u_k + D_k w_k` over a horizon of `N` steps.
#[derive(Clone, Debug)]
pub struct LinearDynamics<T: Scalar> {
    a: Vec<Matrix<T>>,
    b: Vec<Matrix<T>>,
    d: Vec<Matrix<T>>,
}

impl<T: Scalar> LinearDynamics<T> {
    /// Per-step matrices; fails with `Uncontrollable` if the `N`-step
    /// Gramian is not SPD.
    pub fn new(a: Vec<Matrix<T>>, b: Vec<Matrix<T>>, d: Vec<Matrix<T>>) -> Result<Self> {
        let steps = a.len();
        if steps == 0 || b.len() != steps || d.len() != steps {
            return Err(Error::DimensionMismatch(format!(
                "dynamics lists of length {}, {}, {}",
                a.len(),
                b.len(),
                d.len()
            )));
        }
        let n = a[0].rows();
        let m = b[0].cols();
        let l = d[0].cols();
        for k in 0..steps {
            if a[k].rows() != n || a[k].cols() != n {
                return Err(Error::DimensionMismatch(format!("A_{k} must be {n}x{n}")));
            }
            if b[k].rows() != n || b[k].cols() != m {
                return Err(Error::DimensionMismatch(format!("B_{k} must be {n}x{m}")));
            }
            if d[k].rows() != n || d[k].cols() != l {
                return Err(Error::DimensionMismatch(format!("D_{k} must be {n}x{l}")));
            }
        }
        let dynamics = Self { a, b, d };
        ensure_spd(&dynamics.gramian()).map_err(|_| Error::Uncontrollable)?;
        Ok(dynamics)
    }

    pub fn time_invariant(a: Matrix<T>, b: Matrix<T>, d: Matrix<T>, steps: usize) -> Result<Self> {
        Self::new(vec![a; steps], vec![b; steps], vec![d; steps])
    }

    /// `A = B = I`, `D = noise_std·I`.
    pub fn random_walk(n: usize, steps: usize, noise_std: T) -> Result<Self> {
        Self::time_invariant(
            Matrix::identity(n),
            Matrix::identity(n),
            Matrix::scaled_identity(n, noise_std),
            steps,
        )
    }

    /// Zero-order-hold double integrator in `axes` dimensions, state ordered
    /// as positions then velocities, with `D = noise_std·I`.
    pub fn double_integrator(axes: usize, steps: usize, dt: T, noise_std: T) -> Result<Self> {
        let n = 2 * axes;
        let a = Matrix::from_fn(n, n, |r, c| {
            if r == c {
                T::one()
            } else if c == r + axes {
                dt
            } else {
                T::zero()
            }
        });
        let b = Matrix::from_fn(n, axes, |r, c| {
            if r == c {
                dt * dt * T::lit(0.5)
            } else if r == c + axes {
                dt
            } else {
                T::zero()
            }
        });
        Self::time_invariant(a, b, Matrix::scaled_identity(n, noise_std), steps)
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn state_dim(&self) -> usize {
        self.a[0].rows()
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.b[0].cols()
    }

    #[inline]
    pub fn noise_dim(&self) -> usize {
        self.d[0].cols()
    }

    pub fn a(&self, k: usize) -> &Matrix<T> {
        &self.a[k]
    }

    pub fn b(&self, k: usize) -> &Matrix<T> {
        &self.b[k]
    }

    pub fn d(&self, k: usize) -> &Matrix<T> {
        &self.d[k]
    }

    pub fn noise_cov(&self, k: usize) -> SymMatrix<T> {
        SymMatrix::new(&self.d[k] * &self.d[k].transpose())
    }

    /// True when every `A_k` is exactly the identity.
    pub fn has_identity_drift(&self) -> bool {
        let eye = Matrix::identity(self.state_dim());
        self.a.iter().all(|a| *a == eye)
    }

    /// `Φ_{N,k} = A_{N−1} ⋯ A_k` for `k = 0..=N`.
    fn transitions_to_end(&self) -> Vec<Matrix<T>> {
        let steps = self.steps();
        let mut out = vec![Matrix::identity(self.state_dim()); steps + 1];
        for k in (0..steps).rev() {
            out[k] = &out[k + 1] * &self.a[k];
        }
        out
    }

    /// `W = Σ_k Φ_{N,k+1} B_k B_kᵀ Φ_{N,k+1}ᵀ`.
    pub fn gramian(&self) -> SymMatrix<T> {
        let phi = self.transitions_to_end();
        let n = self.state_dim();
        let mut w = Matrix::zeros(n, n);
        for k in 0..self.steps() {
            let pb = &phi[k + 1] * &self.b[k];
            w = &w + &(&pb * &pb.transpose());
        }
        SymMatrix::new(w)
    }

    /// `A_k x + B_k u + D_k w`.
    pub fn step(&self, k: usize, x: &[T], u: &[T], w: &[T]) -> Vec<T> {
        let ax = self.a[k].matvec(x);
        let bu = self.b[k].matvec(u);
        let dw = self.d[k].matvec(w);
        vec_add(&vec_add(&ax, &bu), &dw)
    }
}

/// Feedforward sequence and the mean path it produces.
#[derive(Clone, Debug)]
pub struct MeanSteering<T: Scalar> {
    pub feedforward: Vec<Vec<T>>,
    pub means: Vec<Vec<T>>,
}

impl<T: Scalar> MeanSteering<T> {
    pub fn cost(&self) -> T {
        self.feedforward
            .iter()
            .flat_map(|v| v.iter())
            .map(|&x| x * x)
            .sum()
    }
}

/// Minimum-norm feedforward `v_k = B_kᵀ Φ_{N,k+1}ᵀ W⁻¹ (μ_N − Φ_{N,0} μ₀)`.
pub fn solve_mean_steering<T: Scalar>(
    dynamics: &LinearDynamics<T>,
    mu0: &[T],
    mu_n: &[T],
) -> Result<MeanSteering<T>> {
    let n = dynamics.state_dim();
    if mu0.len() != n || mu_n.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "boundary means must have length {n}"
        )));
    }
    let phi = dynamics.transitions_to_end();
    let w_inv = spd_inverse(&dynamics.gramian()).map_err(|_| Error::Uncontrollable)?;
    let gap = vec_sub(mu_n, &phi[0].matvec(mu0));
    let lam = w_inv.matvec(&gap);
    let steps = dynamics.steps();
    let mut feedforward = Vec::with_capacity(steps);
    let mut means = Vec::with_capacity(steps + 1);
    means.push(mu0.to_vec());
    for k in 0..steps {
        let v = (&phi[k + 1] * &dynamics.b[k]).transpose().matvec(&lam);
        let next = vec_add(&dynamics.a[k].matvec(&means[k]), &dynamics.b[k].matvec(&v));
        feedforward.push(v);
        means.push(next);
    }
    Ok(MeanSteering { feedforward, means })
}

/// Solver settings for [`solve_covariance_steering`].
#[derive(Clone, Copy, Debug)]
pub struct SteeringOptions<T> {
    /// Levenberg floor added (relative to the curvature scale) to the
    /// Newton system for the terminal multiplier.
    pub eps_reg: T,
    pub max_iterations: usize,
    /// Relative terminal residual at which iteration stops.
    pub tolerance: T,
    /// Relative terminal residual still accepted when iteration stalls.
    pub acceptance: T,
}

impl<T: Scalar> Default for SteeringOptions<T> {
    fn default() -> Self {
        Self {
            eps_reg: T::lit(1e-9),
            max_iterations: 500,
            tolerance: T::lit(1e-11).max(T::epsilon() * T::lit(100.0)),
            acceptance: T::lit(1e-6).max(T::epsilon().sqrt()),
        }
    }
}

/// Feedback gains steering `Σ₀` to the target and the resulting covariances.
#[derive(Clone, Debug)]
pub struct CovarianceSteering<T: Scalar> {
    pub gains: Vec<Matrix<T>>,
    pub covariances: Vec<SymMatrix<T>>,
    pub multiplier: SymMatrix<T>,
    pub iterations: usize,
    /// `‖Σ_N − Σ_target‖_F / ‖Σ_target‖_F`.
    pub terminal_residual: T,
    /// Largest relative gain-gradient of the Lagrangian over the horizon.
    pub stationarity: T,
}

impl<T: Scalar> CovarianceSteering<T> {
    pub fn cost(&self) -> T {
        self.gains
            .iter()
            .zip(&self.covariances)
            .map(|(k, s)| k.congruence(s).trace())
            .sum()
    }
}

struct DualPoint<T: Scalar> {
    value: T,
    gains: Vec<Matrix<T>>,
    covariances: Vec<SymMatrix<T>>,
    residual: SymMatrix<T>,
}

struct Riccati<T: Scalar> {
    gains: Vec<Matrix<T>>,
    /// `Π_k` for `k = 0..=N`.
    values: Vec<SymMatrix<T>>,
}

fn riccati_sweep<T: Scalar>(dynamics: &LinearDynamics<T>, pi_n: &SymMatrix<T>) -> Option<Riccati<T>> {
    let steps = dynamics.steps();
    let m = dynamics.input_dim();
    let mut values = vec![pi_n.clone(); steps + 1];
    let mut gains = vec![Matrix::zeros(m, dynamics.state_dim()); steps];
    for k in (0..steps).rev() {
        let a = &dynamics.a[k];
        let b = &dynamics.b[k];
        let pi = &values[k + 1];
        let bt_pi = &b.transpose() * &**pi;
        let r = SymMatrix::new(&Matrix::identity(m) + &(&bt_pi * b));
        // The stage problem is convex only while R_k is SPD.
        let r_inv = spd_inverse(&r).ok()?;
        let gain = -&(&*r_inv * &(&bt_pi * a));
        let closed = a + &(b * &gain);
        let next = SymMatrix::new(&(&a.transpose() * &**pi) * &closed);
        if !next.max_abs().is_finite() {
            return None;
        }
        gains[k] = gain;
        values[k] = next;
    }
    Some(Riccati { gains, values })
}

fn propagate_covariance<T: Scalar>(
    dynamics: &LinearDynamics<T>,
    gains: &[Matrix<T>],
    sigma0: &SymMatrix<T>,
) -> Vec<SymMatrix<T>> {
    let mut covs = Vec::with_capacity(gains.len() + 1);
    covs.push(sigma0.clone());
    for (k, gain) in gains.iter().enumerate() {
        let closed = &dynamics.a[k] + &(&dynamics.b[k] * gain);
        let next = closed
            .congruence(&covs[k])
            .sym_add(&dynamics.noise_cov(k));
        covs.push(next);
    }
    covs
}

fn evaluate_dual<T: Scalar>(
    dynamics: &LinearDynamics<T>,
    pi_n: &SymMatrix<T>,
    sigma0: &SymMatrix<T>,
    target: &SymMatrix<T>,
) -> Option<DualPoint<T>> {
    let ric = riccati_sweep(dynamics, pi_n)?;
    let covariances = propagate_covariance(dynamics, &ric.gains, sigma0);
    let mut value = frob_inner(&ric.values[0], sigma0) - frob_inner(pi_n, target);
    for k in 0..dynamics.steps() {
        value += frob_inner(&ric.values[k + 1], &dynamics.noise_cov(k));
    }
    let residual = covariances.last()?.sym_sub(target);
    if !value.is_finite() || !residual.max_abs().is_finite() {
        return None;
    }
    Some(DualPoint {
        value,
        gains: ric.gains,
        covariances,
        residual,
    })
}

fn frob_inner<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| x * y).sum()
}

/// Upper-triangle coordinates of a symmetric `n×n` matrix.
fn sym_coords(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|r| (r..n).map(move |c| (r, c))).collect()
}

/// Gradient of the dual in upper-triangle coordinates.
fn dual_gradient<T: Scalar>(residual: &SymMatrix<T>, coords: &[(usize, usize)]) -> Vec<T> {
    coords
        .iter()
        .map(|&(r, c)| {
            if r == c {
                residual[(r, c)]
            } else {
                residual[(r, c)] * T::lit(2.0)
            }
        })
        .collect()
}

fn perturb<T: Scalar>(pi: &SymMatrix<T>, coords: &[(usize, usize)], dir: &[T], step: T) -> SymMatrix<T> {
    let mut m = pi.as_matrix().clone();
    for (&(r, c), &d) in coords.iter().zip(dir) {
        m[(r, c)] += step * d;
        if r != c {
            m[(c, r)] += step * d;
        }
    }
    SymMatrix::new(m)
}

/// Steers `sigma0` to `sigma_n` with minimum expected feedback effort.
pub fn solve_covariance_steering<T: Scalar>(
    dynamics: &LinearDynamics<T>,
    sigma0: &SymMatrix<T>,
    sigma_n: &SymMatrix<T>,
    options: &SteeringOptions<T>,
) -> Result<CovarianceSteering<T>> {
    let n = dynamics.state_dim();
    if sigma0.dim() != n || sigma_n.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "boundary covariances must be {n}x{n}"
        )));
    }
    ensure_spd(sigma0)?;
    ensure_spd(sigma_n)?;

    let coords = sym_coords(n);
    let p = coords.len();
    let target_norm = sigma_n.frobenius_norm();
    let rel = |r: &SymMatrix<T>| r.frobenius_norm() / target_norm;

    let mut pi = SymMatrix::new(Matrix::zeros(n, n));
    let mut point = evaluate_dual(dynamics, &pi, sigma0, sigma_n)
        .ok_or(Error::Infeasible {
            iterations: 0,
            residual: f64::INFINITY,
        })?;
    let mut iterations = 0;

    while iterations < options.max_iterations && rel(&point.residual) > options.tolerance {
        iterations += 1;
        let grad = dual_gradient(&point.residual, &coords);

        // Curvature of the dual by central differences of its gradient.
        let fd = T::epsilon().cbrt() * T::one().max(pi.max_abs());
        let mut hess = Matrix::zeros(p, p);
        let mut curvature_ok = true;
        for e in 0..p {
            let mut dir = vec![T::zero(); p];
            dir[e] = T::one();
            let plus = evaluate_dual(dynamics, &perturb(&pi, &coords, &dir, fd), sigma0, sigma_n);
            let minus = evaluate_dual(dynamics, &perturb(&pi, &coords, &dir, -fd), sigma0, sigma_n);
            let column = match (plus, minus) {
                (Some(pp), Some(mm)) => {
                    let gp = dual_gradient(&pp.residual, &coords);
                    let gm = dual_gradient(&mm.residual, &coords);
                    gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (fd + fd)).collect()
                }
                (Some(pp), None) => {
                    let gp = dual_gradient(&pp.residual, &coords);
                    gp.iter().zip(&grad).map(|(&a, &b)| (a - b) / fd).collect()
                }
                (None, Some(mm)) => {
                    let gm = dual_gradient(&mm.residual, &coords);
                    grad.iter().zip(&gm).map(|(&a, &b)| (a - b) / fd).collect::<Vec<_>>()
                }
                (None, None) => {
                    curvature_ok = false;
                    break;
                }
            };
            for (r, v) in column.into_iter().enumerate() {
                hess[(r, e)] = v;
            }
        }

        // Ascent direction: Newton on the concave dual, steepest ascent otherwise.
        let neg_hess = SymMatrix::new(-&hess);
        let scale = neg_hess.max_abs().max(T::min_positive_value());
        let direction = if curvature_ok {
            let damped = neg_hess.add_scaled_identity(options.eps_reg * scale);
            match cholesky(&damped) {
                Ok(_) => damped
                    .solve(&Matrix::from_row_major(p, 1, grad.clone()))
                    .ok()
                    .map(|m| m.as_slice().to_vec()),
                Err(_) => None,
            }
        } else {
            None
        };
        let direction =
            direction.unwrap_or_else(|| grad.iter().map(|&g| g / scale).collect());
        let slope: T = grad.iter().zip(&direction).map(|(&g, &d)| g * d).sum();

        let current_rel = rel(&point.residual);
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial = perturb(&pi, &coords, &direction, alpha);
            if let Some(candidate) = evaluate_dual(dynamics, &trial, sigma0, sigma_n) {
                let armijo = candidate.value >= point.value + T::lit(1e-4) * alpha * slope;
                let contracts = rel(&candidate.residual) <= T::lit(0.5) * current_rel;
                if armijo || contracts {
                    accepted = Some((trial, candidate));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((trial, candidate)) => {
                pi = trial;
                point = candidate;
            }
            None => break,
        }
    }

    let residual = rel(&point.residual);
    if !(residual <= options.acceptance) {
        return Err(Error::Infeasible {
            iterations,
            residual: residual.to_f64_lossy(),
        });
    }
    let stationarity = stationarity(dynamics, &pi, &point.gains, &point.covariances);
    Ok(CovarianceSteering {
        gains: point.gains,
        covariances: point.covariances,
        multiplier: pi,
        iterations,
        terminal_residual: residual,
        stationarity,
    })
}

/// `max_k ‖(R_k K_k + B_kᵀΠ_{k+1}A_k) Σ_k‖ / (‖R_k K_k‖‖Σ_k‖ + ‖B_kᵀΠ_{k+1}A_k‖‖Σ_k‖)`.
fn stationarity<T: Scalar>(
    dynamics: &LinearDynamics<T>,
    pi_n: &SymMatrix<T>,
    gains: &[Matrix<T>],
    covs: &[SymMatrix<T>],
) -> T {
    let Some(ric) = riccati_sweep(dynamics, pi_n) else {
        return T::infinity();
    };
    let m = dynamics.input_dim();
    let mut worst = T::zero();
    for k in 0..dynamics.steps() {
        let b = &dynamics.b[k];
        let bt_pi = &b.transpose() * &*ric.values[k + 1];
        let r = &Matrix::identity(m) + &(&bt_pi * b);
        let rk = &r * &gains[k];
        let cross = &bt_pi * &dynamics.a[k];
        let grad = &(&rk + &cross) * &*covs[k];
        let denom = (rk.frobenius_norm() + cross.frobenius_norm()) * covs[k].frobenius_norm();
        if denom > T::zero() {
            worst = worst.max(grad.frobenius_norm() / denom);
        }
    }
    worst
}

/// Affine policy `u_k(x) = K_k (x − μ_k) + v_k` with its Gaussian marginals.
#[derive(Clone, Debug)]
pub struct AffinePolicy<T: Scalar> {
    gains: Vec<Matrix<T>>,
    feedforward: Vec<Vec<T>>,
    means: Vec<Vec<T>>,
    covs: Vec<SymMatrix<T>>,
    cost: T,
}

impl<T: Scalar> AffinePolicy<T> {
    /// Minimum-effort policy steering `rho0` to `rho_n` under `dynamics`.
    pub fn solve(
        dynamics: &LinearDynamics<T>,
        rho0: &GaussianComponent<T>,
        rho_n: &GaussianComponent<T>,
        options: &SteeringOptions<T>,
    ) -> Result<Self> {
        let mean = solve_mean_steering(dynamics, &rho0.mean, &rho_n.mean)?;
        let cov = solve_covariance_steering(dynamics, &rho0.cov, &rho_n.cov, options)?;
        Ok(Self::from_parts(dynamics, &rho0.mean, &rho0.cov, cov.gains, mean.feedforward))
    }

    /// Builds a policy from gains and feedforwards, propagating marginals
    /// from `(mu0, sigma0)` in closed loop.
    pub fn from_parts(
        dynamics: &LinearDynamics<T>,
        mu0: &[T],
        sigma0: &SymMatrix<T>,
        gains: Vec<Matrix<T>>,
        feedforward: Vec<Vec<T>>,
    ) -> Self {
        let steps = dynamics.steps();
        assert_eq!(gains.len(), steps, "one gain per step");
        assert_eq!(feedforward.len(), steps, "one feedforward per step");
        let covs = propagate_covariance(dynamics, &gains, sigma0);
        let mut means = Vec::with_capacity(steps + 1);
        means.push(mu0.to_vec());
        for k in 0..steps {
            let next = vec_add(
                &dynamics.a[k].matvec(&means[k]),
                &dynamics.b[k].matvec(&feedforward[k]),
            );
            means.push(next);
        }
        let cost = (0..steps)
            .map(|k| {
                let v2: T = feedforward[k].iter().map(|&x| x * x).sum();
                v2 + gains[k].congruence(&covs[k]).trace()
            })
            .sum();
        Self {
            gains,
            feedforward,
            means,
            covs,
            cost,
        }
    }

    pub fn zero(dynamics: &LinearDynamics<T>, rho0: &GaussianComponent<T>) -> Self {
        let steps = dynamics.steps();
        let (n, m) = (dynamics.state_dim(), dynamics.input_dim());
        Self::from_parts(
            dynamics,
            &rho0.mean,
            &rho0.cov,
            vec![Matrix::zeros(m, n); steps],
            vec![vec![T::zero(); m]; steps],
        )
    }

    pub fn steps(&self) -> usize {
        self.gains.len()
    }

    pub fn gain(&self, k: usize) -> &Matrix<T> {
        &self.gains[k]
    }

    pub fn feedforward(&self, k: usize) -> &[T] {
        &self.feedforward[k]
    }

    pub fn mean_at(&self, k: usize) -> &[T] {
        &self.means[k]
    }

    pub fn cov_at(&self, k: usize) -> &SymMatrix<T> {
        &self.covs[k]
    }

    /// `u_k(x) = K_k (x − μ_k) + v_k`.
    pub fn control(&self, k: usize, x: &[T]) -> Vec<T> {
        let dx = vec_sub(x, &self.means[k]);
        vec_add(&self.gains[k].matvec(&dx), &self.feedforward[k])
    }

    pub fn marginal_at(&self, k: usize) -> Result<GaussianComponent<T>> {
        if k > self.steps() {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps(),
            });
        }
        Ok(GaussianComponent {
            mean: self.means[k].clone(),
            cov: self.covs[k].clone(),
        })
    }

    /// `Σ_k ‖v_k‖² + tr(K_k Σ_k K_kᵀ)`.
    pub fn ds_cost(&self) -> T {
        self.cost
    }
}

pub fn ds_cost<T: Scalar>(policy: &AffinePolicy<T>) -> T {
    policy.ds_cost()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_dyn(a: f64, b: f64, d: f64, steps: usize) -> LinearDynamics<f64> {
        LinearDynamics::time_invariant(
            Matrix::from_diag(&[a]),
            Matrix::from_diag(&[b]),
            Matrix::from_diag(&[d]),
            steps,
        )
        .unwrap()
    }

    #[test]
    fn equal_means_need_no_feedforward() {
        let dynamics = LinearDynamics::<f64>::random_walk(2, 5, 0.1).unwrap();
        let s = solve_mean_steering(&dynamics, &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(s.feedforward.iter().flatten().all(|&v| v.abs() < 1e-15));
        assert_eq!(s.cost(), 0.0);
    }

    #[test]
    fn equal_covariances_without_noise_need_no_feedback() {
        let dynamics = LinearDynamics::<f64>::random_walk(2, 4, 0.0).unwrap();
        let sigma = SymMatrix::from_diag(&[0.3, 0.7]);
        let sol = solve_covariance_steering(&dynamics, &sigma, &sigma, &SteeringOptions::default())
            .unwrap();
        assert!(sol.gains.iter().all(|k| k.max_abs() == 0.0));
        assert_eq!(sol.cost(), 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn two_step_expansion_has_known_optimum() {
        // (1+K₀)(1+K₁) = 2 minimizing K₀² + K₁²(1+K₀)² gives K₀ = 1/2, K₁ = 1/3, cost 1/2.
        let dynamics = scalar_dyn(1.0, 1.0, 0.0, 2);
        let sol = solve_covariance_steering(
            &dynamics,
            &SymMatrix::from_diag(&[1.0]),
            &SymMatrix::from_diag(&[4.0]),
            &SteeringOptions::default(),
        )
        .unwrap();
        assert!((sol.gains[0][(0, 0)] - 0.5).abs() < 1e-9);
        assert!((sol.gains[1][(0, 0)] - 1.0 / 3.0).abs() < 1e-9);
        assert!((sol.cost() - 0.5).abs() < 1e-9);
        assert!((sol.multiplier[(0, 0)] + 0.25).abs() < 1e-9);
        assert!(sol.stationarity < 1e-12);
    }

    #[test]
    fn uncontrollable_dynamics_rejected() {
        let err = LinearDynamics::time_invariant(
            Matrix::<f64>::identity(2),
            Matrix::from_row_major(2, 1, vec![1.0, 0.0]),
            Matrix::zeros(2, 1),
            3,
        )
        .unwrap_err();
        assert_eq!(err, Error::Uncontrollable);
    }

    #[test]
    fn target_below_noise_floor_is_infeasible() {
        let dynamics = scalar_dyn(1.0, 1.0, 1.0, 2);
        let err = solve_covariance_steering(
            &dynamics,
            &SymMatrix::from_diag(&[1.0]),
            &SymMatrix::from_diag(&[0.5]),
            &SteeringOptions {
                max_iterations: 100,
                ..SteeringOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "{err:?}");
    }

    #[test]
    fn zero_policy_costs_nothing() {
        let dynamics = LinearDynamics::<f64>::random_walk(2, 3, 0.1).unwrap();
        let rho0 = GaussianComponent::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(AffinePolicy::zero(&dynamics, &rho0).ds_cost(), 0.0);
    }

    #[test]
    fn double_integrator_shape() {
        let d = LinearDynamics::<f64>::double_integrator(2, 20, 0.05, 0.0).unwrap();
        assert_eq!((d.state_dim(), d.input_dim()), (4, 2));
        assert_eq!(d.a(0)[(0, 2)], 0.05);
        assert_eq!(d.b(0)[(2, 0)], 0.05);
        assert!((d.b(0)[(0, 0)] - 0.00125).abs() < 1e-18);
        assert!(!d.has_identity_drift());
    }
}
