//! Continuous-time limit diagnostics for the mixture Schrödinger bridge.
//!
//! The discrete mixture drift `Σ γ_ij (E[x_{k+1} | x, ij] − x)/Δt` is compared
//! with the continuous mixture drift `Σ φ_ij (μ̇_ij − ε Q_t^{ij}⁻¹ (x − μ_t^{ij}))`,
//! where `Q_t = Q₀ − tεI` and `φ_ij` are the responsibilities of the
//! continuous marginals. The continuous side is evaluated here from its own
//! closed form, not from the discrete schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, Gmm};
use crate::matrix_kit::{
    norm, spd_inverse, sym_inverse, sym_sqrt, vec_add, vec_scale, vec_sub, Matrix, SymMatrix,
};
use crate::mixture_policy::{MixtureBridge, PairSolution};
use crate::scalar::Scalar;

/// Errors at one step size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow<T> {
    pub dt: T,
    pub steps: usize,
    /// Step at which the probe is evaluated.
    pub k: usize,
    /// `‖discrete drift − continuous drift‖` at the probe.
    pub drift_err: T,
    /// `max_ij ‖S_k^{ij}/Δt − εI‖` (spectral norm).
    pub diff_err: T,
    /// `max_ij |‖S_k^{ij}/Δt − εI‖ − ε²Δt‖Q_k^{ij}⁻¹‖|`.
    pub diff_identity_gap: T,
    /// Previous row's error divided by this row's; `None` on the first row.
    pub drift_ratio: Option<T>,
    pub diff_ratio: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTable<T> {
    pub eps: T,
    pub horizon: T,
    pub t_probe: T,
    pub x_probe: Vec<T>,
    pub rows: Vec<LimitRow<T>>,
}

/// Continuous-time Gaussian bridge of `dx = √ε dW` on `[0, T]`.
struct ContinuousPair<T: Scalar> {
    mu0: Vec<T>,
    mu_n: Vec<T>,
    /// `Q₀⁻¹`.
    w: SymMatrix<T>,
    /// `P₀⁻¹ = Σ₀⁻¹ − Q₀⁻¹`.
    v: SymMatrix<T>,
    eps: T,
    horizon: T,
}

impl<T: Scalar> ContinuousPair<T> {
    fn new(rho0: &GaussianComponent<T>, rho_n: &GaussianComponent<T>, eps: T, horizon: T) -> Result<Self> {
        let n = rho0.dim();
        let c = eps * horizon;
        let s_half = sym_sqrt(&rho0.cov)?;
        let inner = s_half.congruence(&rho_n.cov);
        let root = sym_sqrt(&inner.add_scaled_identity(c * c / T::lit(4.0)))?;
        // M = Σ₀ + (c/2)I − (Σ₀^{1/2} Σ_N Σ₀^{1/2} + (c²/4)I)^{1/2}
        let m = rho0.cov.add_scaled_identity(c / T::lit(2.0)).sym_sub(&root);
        let s_half_inv = spd_inverse(&s_half)?;
        let w = s_half_inv.congruence(&m).sym_scale(c.recip());
        let v = spd_inverse(&rho0.cov)?.sym_sub(&w);
        debug_assert_eq!(w.dim(), n);
        Ok(Self {
            mu0: rho0.mean.clone(),
            mu_n: rho_n.mean.clone(),
            w,
            v,
            eps,
            horizon,
        })
    }

    /// `A(I + sA)⁻¹`.
    fn shifted(a: &SymMatrix<T>, s: T) -> Result<SymMatrix<T>> {
        let n = a.dim();
        let shift = SymMatrix::new(&Matrix::identity(n) + &a.scale(s));
        let inv = sym_inverse(&shift).map_err(|_| Error::InfeasibleBridge {
            step: 0,
            reason: "continuous-time schedule is singular at the probe time".into(),
        })?;
        Ok(SymMatrix::new(a.as_matrix() * inv.as_matrix()))
    }

    fn q_inv(&self, t: T) -> Result<SymMatrix<T>> {
        Self::shifted(&self.w, -t * self.eps)
    }

    fn marginal(&self, t: T) -> Result<GaussianComponent<T>> {
        let p_inv = Self::shifted(&self.v, t * self.eps)?;
        let cov = spd_inverse(&p_inv.sym_add(&self.q_inv(t)?))?;
        let mean = vec_add(&self.mu0, &vec_scale(&vec_sub(&self.mu_n, &self.mu0), t / self.horizon));
        GaussianComponent::new(mean, cov)
    }

    fn drift(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        let marginal = self.marginal(t)?;
        let pull = self.q_inv(t)?.matvec(&vec_sub(x, &marginal.mean));
        let velocity = vec_scale(&vec_sub(&self.mu_n, &self.mu0), self.horizon.recip());
        Ok(vec_sub(&velocity, &vec_scale(&pull, self.eps)))
    }
}

fn spectral_norm<T: Scalar>(m: &SymMatrix<T>) -> T {
    m.eigenvalues()
        .into_iter()
        .fold(T::zero(), |acc, e| acc.max(e.abs()))
}

/// Normalized `λ_ij N(x; p_ij)` over the pairs with positive mass.
fn weights<T: Scalar>(lambda: &[T], logs: &[T]) -> Vec<T> {
    let max = logs
        .iter()
        .zip(lambda)
        .filter(|(_, &l)| l > T::zero())
        .map(|(&v, &l)| v + l.ln())
        .fold(T::neg_infinity(), T::max);
    let raw: Vec<T> = logs
        .iter()
        .zip(lambda)
        .map(|(&v, &l)| if l > T::zero() { (v + l.ln() - max).exp() } else { T::zero() })
        .collect();
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|r| r / total).collect()
}

fn check_grid<T: Scalar>(horizon: T, dt: T) -> Result<usize> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    let ratio = horizon / dt;
    let steps = ratio.round();
    if steps < T::one() || (ratio - steps).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) * steps {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not an integer multiple of dt = {dt}"
        )));
    }
    steps
        .to_usize()
        .ok_or_else(|| Error::InvalidArgument("step count overflows".into()))
}

/// Drift and diffusion defects of the discrete mixture bridge at each step
/// size in `dt_list` (strictly decreasing, each dividing `horizon`).
pub fn limit_check<T: Scalar>(
    rho0: &Gmm<T>,
    rho_n: &Gmm<T>,
    eps: T,
    horizon: T,
    dt_list: &[T],
    x_probe: &[T],
    t_probe: T,
) -> Result<LimitTable<T>> {
    if dt_list.is_empty() {
        return Err(Error::InvalidArgument("dt list is empty".into()));
    }
    if dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("dt list must be strictly decreasing".into()));
    }
    if !(t_probe >= T::zero() && t_probe < horizon) {
        return Err(Error::InvalidArgument("probe time must lie in [0, T)".into()));
    }
    if x_probe.len() != rho0.dim() {
        return Err(Error::DimensionMismatch("probe state dimension".into()));
    }
    let (n1, n2) = (rho0.len(), rho_n.len());
    let continuous = (0..n1 * n2)
        .map(|idx| {
            ContinuousPair::new(
                &rho0.components()[idx / n2],
                &rho_n.components()[idx % n2],
                eps,
                horizon,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cont_logs = continuous
        .iter()
        .map(|c| c.marginal(t_probe)?.log_pdf(x_probe))
        .collect::<Result<Vec<_>>>()?;
    let cont_drifts = continuous
        .iter()
        .map(|c| c.drift(t_probe, x_probe))
        .collect::<Result<Vec<_>>>()?;

    let n = rho0.dim();
    let mut rows: Vec<LimitRow<T>> = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let steps = check_grid(horizon, dt)?;
        let mb = MixtureBridge::schrodinger(rho0.clone(), rho_n.clone(), steps, eps, dt)?;
        let k = (t_probe / dt).round().to_usize().unwrap_or(0).min(steps - 1);
        let lambda = mb.plan().lambda.as_slice().to_vec();

        let phi = weights(&lambda, &cont_logs);
        let mut cont = vec![T::zero(); n];
        for (f, d) in phi.iter().zip(&cont_drifts) {
            cont = vec_add(&cont, &vec_scale(d, *f));
        }

        let gamma = mb.responsibilities(k, x_probe)?;
        let mut disc = vec![T::zero(); n];
        let mut diff_err = T::zero();
        let mut gap = T::zero();
        for (idx, pair) in mb.pairs().iter().enumerate() {
            let PairSolution::Bridge(b) = pair else {
                return Err(Error::ModeMismatch { expected: "sb" });
            };
            let g = gamma.gamma.as_slice()[idx];
            let step = vec_scale(&vec_sub(&b.kernel_mean(k, x_probe), x_probe), dt.recip());
            disc = vec_add(&disc, &vec_scale(&step, g));

            let defect = spectral_norm(&b.kernel_cov(k).sym_scale(dt.recip()).add_scaled_identity(-eps));
            let predicted = eps * eps * dt * spectral_norm(b.q_inverse(k)?);
            diff_err = diff_err.max(defect);
            gap = gap.max((defect - predicted).abs());
        }
        let drift_err = norm(&vec_sub(&disc, &cont));
        let (drift_ratio, diff_ratio) = match rows.last() {
            Some(prev) => (Some(prev.drift_err / drift_err), Some(prev.diff_err / diff_err)),
            None => (None, None),
        };
        rows.push(LimitRow {
            dt,
            steps,
            k,
            drift_err,
            diff_err,
            diff_identity_gap: gap,
            drift_ratio,
            diff_ratio,
        });
    }
    Ok(LimitTable {
        eps,
        horizon,
        t_probe,
        x_probe: x_probe.to_vec(),
        rows,
    })
}

/// Draws one state from the continuous mixture marginal at time `t`,
/// coupling the boundaries with the plan of `mb`.
pub fn continuous_probe<T: Scalar>(mb: &MixtureBridge<T>, t: T, seed: u64) -> Result<Vec<T>> {
    let PairSolution::Bridge(first) = &mb.pairs()[0] else {
        return Err(Error::ModeMismatch { expected: "sb" });
    };
    let (eps, horizon) = (first.eps(), first.horizon_time());
    let (_, n2) = mb.shape();
    let lambda = mb.plan().lambda.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    let mut idx = 0;
    for (i, &l) in lambda.iter().enumerate() {
        if l > T::zero() {
            idx = i;
            acc += l;
            if u < acc {
                break;
            }
        }
    }
    let pair = ContinuousPair::new(
        &mb.initial().components()[idx / n2],
        &mb.terminal().components()[idx % n2],
        eps,
        horizon,
    )?;
    let marginal = pair.marginal(t)?;
    let root = sym_sqrt(&marginal.cov)?;
    let z: Vec<T> = (0..marginal.dim())
        .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Ok(vec_add(&marginal.mean, &root.matvec(&z)))
}
