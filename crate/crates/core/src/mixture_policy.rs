//! Mixtures of component-to-component policies.
//!
//! Given per-pair solutions `p^{ij}` from component `i` of the initial GMM
//! to component `j` of the terminal GMM, and a coupling `λ` of the mixture
//! weights, the Markov policy picks a pair at every step with probability
//! `γ_ij(x, k) ∝ λ_ij p_k^{ij}(x)` and applies that pair's kernel or control.
//! The randomize-once baseline commits to one pair at `k = 0` instead.

use rayon::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance_steering::{AffinePolicy, LinearDynamics, SteeringOptions};
use crate::error::{Error, Result};
use crate::gaussian::{log_sum_exp, GaussianComponent, GaussianDensity, Gmm};
use crate::gaussian_bridge::BridgeSchedule;
use crate::matrix_kit::{sym_sqrt, vec_add, vec_sub, Matrix};
use crate::scalar::Scalar;
use crate::transport_plan::{solve_transport, verify_plan, TransportPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Schrödinger bridge: pairs are Gaussian bridges of a random walk.
    Sb,
    /// Density steering: pairs are affine policies of linear dynamics.
    Ds,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sb => "sb",
            Mode::Ds => "ds",
        }
    }
}

#[derive(Clone, Debug)]
pub enum PairSolution<T: Scalar> {
    Bridge(BridgeSchedule<T>),
    Steering(AffinePolicy<T>),
}

impl<T: Scalar> PairSolution<T> {
    pub fn mode(&self) -> Mode {
        match self {
            PairSolution::Bridge(_) => Mode::Sb,
            PairSolution::Steering(_) => Mode::Ds,
        }
    }

    pub fn cost(&self) -> T {
        match self {
            PairSolution::Bridge(b) => b.sb_cost(),
            PairSolution::Steering(p) => p.ds_cost(),
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            PairSolution::Bridge(b) => b.steps(),
            PairSolution::Steering(p) => p.steps(),
        }
    }

    pub fn marginal_at(&self, k: usize) -> Result<GaussianComponent<T>> {
        match self {
            PairSolution::Bridge(b) => b.marginal_at(k),
            PairSolution::Steering(p) => p.marginal_at(k),
        }
    }
}

/// Source of uniform and standard normal draws for the step functions.
pub trait NoiseSource<T> {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> T;
    fn normal(&mut self) -> T;
}

impl<T: Scalar, R: Rng> NoiseSource<T> for R {
    fn uniform(&mut self) -> T {
        T::lit(self.random::<f64>())
    }

    fn normal(&mut self) -> T {
        T::lit(self.sample::<f64, _>(StandardNormal))
    }
}

/// Posterior weights `γ_ij` of the component pairs at `(k, x)`.
#[derive(Clone, Debug)]
pub struct Responsibilities<T: Scalar> {
    pub k: usize,
    pub x: Vec<T>,
    /// `N₁ × N₂`, entries summing to one.
    pub gamma: Matrix<T>,
}

impl<T: Scalar> Responsibilities<T> {
    /// Row-major inverse-CDF draw of a pair index.
    pub fn sample_index(&self, u: T) -> usize {
        let weights = self.gamma.as_slice();
        let mut acc = T::zero();
        let mut last = 0;
        for (idx, &g) in weights.iter().enumerate() {
            if g > T::zero() {
                last = idx;
                acc += g;
                if u < acc {
                    return idx;
                }
            }
        }
        last
    }
}

/// Outcome of one transition.
#[derive(Clone, Debug)]
pub struct Step<T> {
    pub next: Vec<T>,
    pub pair: (usize, usize),
    /// Control applied (density steering only).
    pub control: Option<Vec<T>>,
}

struct PairCache<T: Scalar> {
    /// Marginal densities `p_k^{ij}` for `k = 0..=N`.
    marginals: Vec<GaussianDensity<T>>,
    /// Zero-mean kernel noise densities and square roots (bridges only).
    kernel_noise: Vec<GaussianDensity<T>>,
    kernel_sqrt: Vec<Matrix<T>>,
}

/// Boundary GMMs, a coupling and the per-pair solutions it mixes.
pub struct MixtureBridge<T: Scalar> {
    rho0: Gmm<T>,
    rho_n: Gmm<T>,
    plan: TransportPlan<T>,
    pairs: Vec<PairSolution<T>>,
    dynamics: Option<LinearDynamics<T>>,
    mode: Mode,
    steps: usize,
    log_lambda: Vec<T>,
    cache: Vec<PairCache<T>>,
    initial_sqrt: Vec<Matrix<T>>,
}

impl<T: Scalar> MixtureBridge<T> {
    /// Solves every component bridge and the coupling minimizing `Σ λ_ij J^SB_ij`.
    pub fn schrodinger(rho0: Gmm<T>, rho_n: Gmm<T>, steps: usize, eps: T, dt: T) -> Result<Self> {
        let (n1, n2) = (rho0.len(), rho_n.len());
        let pairs = (0..n1 * n2)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n2, idx % n2);
                BridgeSchedule::solve(&rho0.components()[i], &rho_n.components()[j], steps, eps, dt)
                    .map(PairSolution::Bridge)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_optimal_plan(rho0, rho_n, pairs, None)
    }

    /// Solves every component steering problem and the coupling minimizing
    /// `Σ λ_ij J^DS_ij`.
    pub fn density_steering(
        rho0: Gmm<T>,
        rho_n: Gmm<T>,
        dynamics: LinearDynamics<T>,
        options: &SteeringOptions<T>,
    ) -> Result<Self> {
        let (n1, n2) = (rho0.len(), rho_n.len());
        let pairs = (0..n1 * n2)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n2, idx % n2);
                AffinePolicy::solve(&dynamics, &rho0.components()[i], &rho_n.components()[j], options)
                    .map(PairSolution::Steering)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_optimal_plan(rho0, rho_n, pairs, Some(dynamics))
    }

    fn with_optimal_plan(
        rho0: Gmm<T>,
        rho_n: Gmm<T>,
        pairs: Vec<PairSolution<T>>,
        dynamics: Option<LinearDynamics<T>>,
    ) -> Result<Self> {
        let n2 = rho_n.len();
        let cost = Matrix::from_fn(rho0.len(), n2, |i, j| pairs[i * n2 + j].cost());
        let plan = solve_transport(&cost, rho0.weights(), rho_n.weights())?;
        Self::from_parts(rho0, rho_n, pairs, plan, dynamics)
    }

    /// Assembles a mixture from given pair solutions and any feasible plan.
    ///
    /// Pairs are indexed row-major, `i * N₂ + j`. Density steering pairs need
    /// the dynamics they were solved for.
    pub fn from_parts(
        rho0: Gmm<T>,
        rho_n: Gmm<T>,
        pairs: Vec<PairSolution<T>>,
        plan: TransportPlan<T>,
        dynamics: Option<LinearDynamics<T>>,
    ) -> Result<Self> {
        let (n1, n2) = (rho0.len(), rho_n.len());
        if pairs.len() != n1 * n2 {
            return Err(Error::DimensionMismatch(format!(
                "{} pair solutions for {n1}x{n2} components",
                pairs.len()
            )));
        }
        if plan.rows() != n1 || plan.cols() != n2 {
            return Err(Error::DimensionMismatch("plan shape".into()));
        }
        if rho0.dim() != rho_n.dim() {
            return Err(Error::DimensionMismatch("boundary mixtures of different dimension".into()));
        }
        if !verify_plan(&plan, rho0.weights(), rho_n.weights()) {
            return Err(Error::BadMarginals(
                "plan does not couple the mixture weights".into(),
            ));
        }
        let mode = pairs[0].mode();
        let steps = pairs[0].steps();
        if pairs.iter().any(|p| p.mode() != mode || p.steps() != steps) {
            return Err(Error::InvalidArgument(
                "pair solutions must share mode and horizon".into(),
            ));
        }
        match (mode, &dynamics) {
            (Mode::Ds, None) => return Err(Error::ModeMismatch { expected: "sb" }),
            (Mode::Ds, Some(d)) if d.steps() != steps => {
                return Err(Error::DimensionMismatch("dynamics horizon".into()))
            }
            _ => {}
        }

        let tol = T::lit(1e-6);
        for (idx, pair) in pairs.iter().enumerate() {
            let (i, j) = (idx / n2, idx % n2);
            let start = pair.marginal_at(0)?;
            let end = pair.marginal_at(steps)?;
            if !close(&start, &rho0.components()[i], tol) || !close(&end, &rho_n.components()[j], tol) {
                return Err(Error::InvalidArgument(format!(
                    "pair ({i}, {j}) does not connect its boundary components"
                )));
            }
        }

        let cache = pairs
            .par_iter()
            .map(|pair| build_cache(pair, steps))
            .collect::<Result<Vec<_>>>()?;
        let initial_sqrt = rho0
            .components()
            .iter()
            .map(|c| sym_sqrt(&c.cov).map(|s| s.into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        let log_lambda = plan.lambda.as_slice().iter().map(|&l| l.ln()).collect();

        Ok(Self {
            rho0,
            rho_n,
            plan,
            pairs,
            dynamics,
            mode,
            steps,
            log_lambda,
            cache,
            initial_sqrt,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }

    pub fn initial(&self) -> &Gmm<T> {
        &self.rho0
    }

    pub fn terminal(&self) -> &Gmm<T> {
        &self.rho_n
    }

    pub fn plan(&self) -> &TransportPlan<T> {
        &self.plan
    }

    pub fn dynamics(&self) -> Option<&LinearDynamics<T>> {
        self.dynamics.as_ref()
    }

    /// `(N₁, N₂)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.rho0.len(), self.rho_n.len())
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairSolution<T> {
        &self.pairs[i * self.rho_n.len() + j]
    }

    pub fn pairs(&self) -> &[PairSolution<T>] {
        &self.pairs
    }

    /// Per-pair costs `J_ij` as an `N₁ × N₂` matrix.
    pub fn pair_costs(&self) -> Matrix<T> {
        let (n1, n2) = self.shape();
        Matrix::from_fn(n1, n2, |i, j| self.pair(i, j).cost())
    }

    /// Step variance of the reference walk (Schrödinger bridge mode).
    pub fn reference_variance(&self) -> Result<T> {
        match &self.pairs[0] {
            PairSolution::Bridge(b) => Ok(b.reference_variance()),
            PairSolution::Steering(_) => Err(Error::ModeMismatch { expected: "sb" }),
        }
    }

    fn check_step(&self, k: usize, max: usize) -> Result<()> {
        if k > max {
            return Err(Error::IndexOutOfRange { index: k, max });
        }
        Ok(())
    }

    /// `ln λ_ij + ln p_k^{ij}(x)` for every pair, row-major.
    fn joint_logs(&self, k: usize, x: &[T]) -> Vec<T> {
        self.cache
            .iter()
            .zip(&self.log_lambda)
            .map(|(c, &ll)| {
                if ll == T::neg_infinity() {
                    ll
                } else {
                    ll + c.marginals[k].log_pdf(x)
                }
            })
            .collect()
    }

    /// `ln Σ_ij λ_ij p_k^{ij}(x)`.
    pub fn mixture_marginal_log_pdf(&self, k: usize, x: &[T]) -> Result<T> {
        self.check_step(k, self.steps)?;
        Ok(log_sum_exp(&self.joint_logs(k, x)))
    }

    pub fn mixture_marginal_pdf(&self, k: usize, x: &[T]) -> Result<T> {
        Ok(self.mixture_marginal_log_pdf(k, x)?.exp())
    }

    /// Analytic mixture marginal at step `k` as a GMM over the pairs with
    /// positive mass.
    pub fn mixture_marginal(&self, k: usize) -> Result<Gmm<T>> {
        self.check_step(k, self.steps)?;
        let mut weights = Vec::new();
        let mut comps = Vec::new();
        for (idx, pair) in self.pairs.iter().enumerate() {
            let w = self.plan.lambda.as_slice()[idx];
            if w > T::zero() {
                weights.push(w);
                comps.push(pair.marginal_at(k)?);
            }
        }
        let total: T = weights.iter().copied().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Gmm::new(weights, comps)
    }

    pub fn responsibilities(&self, k: usize, x: &[T]) -> Result<Responsibilities<T>> {
        self.check_step(k, self.steps)?;
        let gamma = normalized_weights(&self.joint_logs(k, x))?;
        let (n1, n2) = self.shape();
        Ok(Responsibilities {
            k,
            x: x.to_vec(),
            gamma: Matrix::from_row_major(n1, n2, gamma),
        })
    }

    /// One step of the per-step randomized Markov policy.
    pub fn step_markov(&self, k: usize, x: &[T], noise: &mut impl NoiseSource<T>) -> Result<Step<T>> {
        if self.steps == 0 || k >= self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps.saturating_sub(1),
            });
        }
        let u = noise.uniform();
        let resp = self.responsibilities(k, x)?;
        let idx = resp.sample_index(u);
        self.advance(idx, k, x, noise)
    }

    /// One step under a pair committed at the start of the horizon.
    ///
    /// Draws (and discards) the same uniform as [`Self::step_markov`] so
    /// both schemes consume a shared noise stream in lockstep.
    pub fn step_randomize_once(
        &self,
        pair: (usize, usize),
        k: usize,
        x: &[T],
        noise: &mut impl NoiseSource<T>,
    ) -> Result<Step<T>> {
        if self.steps == 0 || k >= self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps.saturating_sub(1),
            });
        }
        let (n1, n2) = self.shape();
        if pair.0 >= n1 || pair.1 >= n2 {
            return Err(Error::IndexOutOfRange {
                index: pair.0 * n2 + pair.1,
                max: n1 * n2 - 1,
            });
        }
        let _ = noise.uniform();
        self.advance(pair.0 * n2 + pair.1, k, x, noise)
    }

    fn advance(&self, idx: usize, k: usize, x: &[T], noise: &mut impl NoiseSource<T>) -> Result<Step<T>> {
        let n2 = self.rho_n.len();
        let pair = (idx / n2, idx % n2);
        match &self.pairs[idx] {
            PairSolution::Bridge(b) => {
                let z: Vec<T> = (0..b.dim()).map(|_| noise.normal()).collect();
                let mean = b.kernel_mean(k, x);
                let next = vec_add(&mean, &self.cache[idx].kernel_sqrt[k].matvec(&z));
                Ok(Step {
                    next,
                    pair,
                    control: None,
                })
            }
            PairSolution::Steering(p) => {
                let dynamics = self
                    .dynamics
                    .as_ref()
                    .ok_or(Error::ModeMismatch { expected: "sb" })?;
                let w: Vec<T> = (0..dynamics.noise_dim()).map(|_| noise.normal()).collect();
                let u = p.control(k, x);
                let next = dynamics.step(k, x, &u, &w);
                Ok(Step {
                    next,
                    pair,
                    control: Some(u),
                })
            }
        }
    }

    /// Draws `x₀ ~ ρ₀` through its component `i ~ α`, then commits
    /// `j` with probability `λ_ij / α_i`. Returns `(x₀, (i, j))`.
    pub fn sample_initial(&self, noise: &mut impl NoiseSource<T>) -> (Vec<T>, (usize, usize)) {
        let (n1, n2) = self.shape();
        let u = noise.uniform();
        let i = sample_categorical(self.rho0.weights(), u);
        let comp = &self.rho0.components()[i];
        let z: Vec<T> = (0..comp.dim()).map(|_| noise.normal()).collect();
        let x0 = vec_add(&comp.mean, &self.initial_sqrt[i].matvec(&z));
        let v = noise.uniform();
        let row: Vec<T> = (0..n2).map(|j| self.plan.lambda[(i, j)]).collect();
        let total: T = row.iter().copied().sum();
        let row: Vec<T> = row.into_iter().map(|w| w / total).collect();
        let j = sample_categorical(&row, v);
        debug_assert!(i < n1);
        (x0, (i, j))
    }

    /// `ln p^{ij}_{k+1|k}(x_next | x)` (Schrödinger bridge mode).
    pub fn kernel_log_pdf(&self, pair: (usize, usize), k: usize, x: &[T], x_next: &[T]) -> Result<T> {
        let idx = pair.0 * self.rho_n.len() + pair.1;
        match &self.pairs[idx] {
            PairSolution::Bridge(b) => {
                let mean = b.kernel_mean(k, x);
                Ok(self.cache[idx].kernel_noise[k].log_pdf_centered(&vec_sub(x_next, &mean)))
            }
            PairSolution::Steering(_) => Err(Error::ModeMismatch { expected: "sb" }),
        }
    }

    /// `ln Σ_ij γ_ij(x) p^{ij}_{k+1|k}(x_next | x)`: the Markov policy's kernel.
    pub fn mixture_kernel_log_pdf(&self, k: usize, x: &[T], x_next: &[T]) -> Result<T> {
        self.reference_variance()?;
        let resp = self.responsibilities(k, x)?;
        let (n1, n2) = self.shape();
        let mut logs = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let g = resp.gamma[(i, j)];
                if g > T::zero() {
                    logs.push(g.ln() + self.kernel_log_pdf((i, j), k, x, x_next)?);
                }
            }
        }
        Ok(log_sum_exp(&logs))
    }

    /// `ln Σ_ij λ_ij p^{ij}(path)`: the randomize-once path density.
    pub fn once_path_log_pdf(&self, path: &[Vec<T>]) -> Result<T> {
        self.reference_variance()?;
        if path.len() != self.steps + 1 {
            return Err(Error::DimensionMismatch("path length".into()));
        }
        let (n1, n2) = self.shape();
        let mut logs = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let idx = i * n2 + j;
                let ll = self.log_lambda[idx];
                if ll == T::neg_infinity() {
                    continue;
                }
                let mut acc = ll + self.cache[idx].marginals[0].log_pdf(&path[0]);
                for k in 0..self.steps {
                    acc += self.kernel_log_pdf((i, j), k, &path[k], &path[k + 1])?;
                }
                logs.push(acc);
            }
        }
        Ok(log_sum_exp(&logs))
    }

    /// `Σ λ_ij J^SB_ij`, the bound on `KL(p ‖ q)` of the Markov policy.
    pub fn sb_upper_bound(&self) -> Result<T> {
        if self.mode != Mode::Sb {
            return Err(Error::ModeMismatch { expected: "sb" });
        }
        Ok(self.weighted_cost())
    }

    /// `Σ λ_ij J^DS_ij`, the expected control effort of the Markov policy.
    pub fn ds_total_cost(&self) -> Result<T> {
        if self.mode != Mode::Ds {
            return Err(Error::ModeMismatch { expected: "ds" });
        }
        Ok(self.weighted_cost())
    }

    fn weighted_cost(&self) -> T {
        self.plan
            .lambda
            .as_slice()
            .iter()
            .zip(&self.pairs)
            .map(|(&l, p)| l * p.cost())
            .sum()
    }
}

fn close<T: Scalar>(a: &GaussianComponent<T>, b: &GaussianComponent<T>, tol: T) -> bool {
    let scale = T::one().max(b.cov.frobenius_norm());
    let dm = crate::matrix_kit::norm(&vec_sub(&a.mean, &b.mean));
    let dc = (&*a.cov - &*b.cov).frobenius_norm();
    dm <= tol * T::one().max(crate::matrix_kit::norm(&b.mean)) && dc <= tol * scale
}

fn build_cache<T: Scalar>(pair: &PairSolution<T>, steps: usize) -> Result<PairCache<T>> {
    let marginals = (0..=steps)
        .map(|k| pair.marginal_at(k)?.density())
        .collect::<Result<Vec<_>>>()?;
    let (kernel_noise, kernel_sqrt) = match pair {
        PairSolution::Bridge(b) => {
            let zero = vec![T::zero(); b.dim()];
            let dens = (0..steps)
                .map(|k| GaussianDensity::new(&zero, b.kernel_cov(k)))
                .collect::<Result<Vec<_>>>()?;
            let roots = (0..steps)
                .map(|k| sym_sqrt(b.kernel_cov(k)).map(|s| s.into_matrix()))
                .collect::<Result<Vec<_>>>()?;
            (dens, roots)
        }
        PairSolution::Steering(_) => (Vec::new(), Vec::new()),
    };
    Ok(PairCache {
        marginals,
        kernel_noise,
        kernel_sqrt,
    })
}

/// Normalizes log-weights with max subtraction.
fn normalized_weights<T: Scalar>(logs: &[T]) -> Result<Vec<T>> {
    let max = logs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let w: Vec<T> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: T = w.iter().copied().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

fn sample_categorical<T: Scalar>(weights: &[T], u: T) -> usize {
    let mut acc = T::zero();
    let mut last = 0;
    for (idx, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            last = idx;
            acc += w;
            if u < acc {
                return idx;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Replays fixed uniforms and normals.
    struct Scripted {
        uniforms: Vec<f64>,
        normals: Vec<f64>,
    }

    impl NoiseSource<f64> for Scripted {
        fn uniform(&mut self) -> f64 {
            self.uniforms.remove(0)
        }

        fn normal(&mut self) -> f64 {
            self.normals.remove(0)
        }
    }

    fn two_by_two() -> MixtureBridge<f64> {
        let c = |m: f64| GaussianComponent::isotropic(vec![m, 0.0], 0.2).unwrap();
        let rho0 = Gmm::new(vec![0.5, 0.5], vec![c(-2.0), c(2.0)]).unwrap();
        let rho_n = Gmm::new(vec![0.3, 0.7], vec![c(-3.0), c(3.0)]).unwrap();
        MixtureBridge::schrodinger(rho0, rho_n, 5, 0.1, 1.0).unwrap()
    }

    #[test]
    fn boundary_marginals_match_the_mixtures() {
        let mb = two_by_two();
        for x in [[0.0, 0.0], [-2.5, 0.3], [3.1, -0.2]] {
            let p0 = mb.mixture_marginal_pdf(0, &x).unwrap();
            let r0 = mb.initial().pdf(&x).unwrap();
            assert!((p0 - r0).abs() <= 1e-12 * r0.max(1e-300));
            let pn = mb.mixture_marginal_pdf(5, &x).unwrap();
            let rn = mb.terminal().pdf(&x).unwrap();
            assert!((pn - rn).abs() <= 1e-12 * rn.max(1e-300));
        }
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let mb = two_by_two();
        for k in 0..=5 {
            let r = mb.responsibilities(k, &[0.4, -0.1]).unwrap();
            let s: f64 = r.gamma.as_slice().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scripted_noise_forces_the_pair() {
        let mb = two_by_two();
        // At k = 0 and x on component 1, γ puts no mass on row 0.
        let x = [2.0, 0.0];
        let r = mb.responsibilities(0, &x).unwrap();
        let row1: f64 = r.gamma[(1, 0)] + r.gamma[(1, 1)];
        assert!(row1 > 1.0 - 1e-12);
        let mut noise = Scripted {
            uniforms: vec![0.999_999],
            normals: vec![0.0, 0.0],
        };
        let step = mb.step_markov(0, &x, &mut noise).unwrap();
        assert_eq!(step.pair, (1, 1));
        let PairSolution::Bridge(b) = mb.pair(1, 1) else {
            unreachable!()
        };
        assert_eq!(step.next, b.kernel_mean(0, &x));
    }

    #[test]
    fn mode_specific_costs() {
        let mb = two_by_two();
        assert!(mb.sb_upper_bound().is_ok());
        assert_eq!(mb.ds_total_cost().unwrap_err(), Error::ModeMismatch { expected: "ds" });
        assert!((mb.sb_upper_bound().unwrap() - mb.plan().objective).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_steps() {
        let mb = two_by_two();
        let mut rng = rand::rng();
        assert!(matches!(
            mb.step_markov(5, &[0.0, 0.0], &mut rng),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            mb.mixture_marginal_pdf(6, &[0.0, 0.0]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
