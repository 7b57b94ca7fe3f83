//! Monte-Carlo rollouts of mixture policies and the estimators built on them.
//!
//! Every path draws from its own ChaCha8 stream (`seed`, stream = path
//! index), so batches are reproducible regardless of thread scheduling. Both
//! schemes consume the stream in the same order — component uniform, initial
//! normals, commit uniform, then per step one uniform followed by the step
//! normals — which pairs Markov and randomize-once rollouts on common random
//! numbers.

mod limit;

pub use limit::{continuous_probe, limit_check, LimitRow, LimitTable};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianDensity, Gmm};
use crate::matrix_kit::{vec_sub, Matrix, SymMatrix};
use crate::mixture_policy::{MixtureBridge, Mode};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Pair re-drawn from the responsibilities at every step.
    PerStep,
    /// Pair drawn once at `k = 0` and kept for the whole horizon.
    Once,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::PerStep => "per-step",
            Scheme::Once => "once",
        }
    }
}

/// Sampled paths of one scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBatch<T> {
    pub scheme: Scheme,
    pub seed: u64,
    /// `M × (N+1) × n`.
    pub states: Vec<Vec<Vec<T>>>,
    /// `M × N × m`, density steering only.
    pub controls: Option<Vec<Vec<Vec<T>>>>,
    /// Pair used at each step (per-step), or the single committed pair (once).
    pub pairs: Vec<Vec<(usize, usize)>>,
}

impl<T: Scalar> TrajectoryBatch<T> {
    pub fn paths(&self) -> usize {
        self.states.len()
    }

    pub fn steps(&self) -> usize {
        self.states.first().map_or(0, |p| p.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.states
            .first()
            .and_then(|p| p.first())
            .map_or(0, |x| x.len())
    }
}

/// Sample mean of per-path terms with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub paths: usize,
}

impl<T: Scalar> KlEstimate<T> {
    /// Mean and `sample-std / √M`.
    pub fn from_samples(samples: &[T]) -> Self {
        let m = samples.len();
        let mf = T::from_usize_lossy(m);
        let value = samples.iter().copied().sum::<T>() / mf;
        let std_error = if m > 1 {
            let ss: T = samples.iter().map(|&s| (s - value) * (s - value)).sum();
            (ss / T::from_usize_lossy(m - 1)).sqrt() / mf.sqrt()
        } else {
            T::zero()
        };
        Self {
            value,
            std_error,
            paths: m,
        }
    }

    /// `√(se² + se_other²)`.
    pub fn combined_std_error(&self, other: &Self) -> T {
        self.std_error.hypot(other.std_error)
    }

    /// True iff `|value − target| ≤ k · std_error`.
    pub fn within(&self, target: T, k: T) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Rolls out `paths` independent trajectories under `scheme`.
pub fn rollout<T: Scalar>(
    mb: &MixtureBridge<T>,
    scheme: Scheme,
    paths: usize,
    seed: u64,
) -> Result<TrajectoryBatch<T>> {
    if paths == 0 {
        return Err(Error::InvalidArgument("path count must be at least 1".into()));
    }
    let steps = mb.steps();
    let ds = mb.mode() == Mode::Ds;
    let results = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let (x0, committed) = mb.sample_initial(&mut rng);
            let mut states = Vec::with_capacity(steps + 1);
            let mut controls = Vec::with_capacity(if ds { steps } else { 0 });
            let mut pairs = Vec::with_capacity(match scheme {
                Scheme::PerStep => steps,
                Scheme::Once => 1,
            });
            if scheme == Scheme::Once {
                pairs.push(committed);
            }
            states.push(x0);
            for k in 0..steps {
                let x = &states[k];
                let step = match scheme {
                    Scheme::PerStep => mb.step_markov(k, x, &mut rng)?,
                    Scheme::Once => mb.step_randomize_once(committed, k, x, &mut rng)?,
                };
                if scheme == Scheme::PerStep {
                    pairs.push(step.pair);
                }
                if let Some(u) = step.control {
                    controls.push(u);
                }
                states.push(step.next);
            }
            Ok((states, controls, pairs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut states = Vec::with_capacity(paths);
    let mut controls = Vec::with_capacity(if ds { paths } else { 0 });
    let mut pairs = Vec::with_capacity(paths);
    for (s, c, p) in results {
        states.push(s);
        if ds {
            controls.push(c);
        }
        pairs.push(p);
    }
    Ok(TrajectoryBatch {
        scheme,
        seed,
        states,
        controls: ds.then_some(controls),
        pairs,
    })
}

/// Estimates `KL(s ‖ q)` for the scheme `s` that generated `batch`, with `q`
/// the reference random walk started from `q₀ = p₀`.
pub fn estimate_path_kl<T: Scalar>(
    mb: &MixtureBridge<T>,
    batch: &TrajectoryBatch<T>,
    scheme: Scheme,
) -> Result<KlEstimate<T>> {
    if batch.scheme != scheme {
        return Err(Error::SchemeMismatch {
            expected: scheme.as_str(),
            actual: batch.scheme.as_str(),
        });
    }
    let h = mb.reference_variance()?;
    let n = mb.dim();
    let reference = GaussianDensity::new(&vec![T::zero(); n], &SymMatrix::scaled_identity(n, h))?;
    let terms = batch
        .states
        .par_iter()
        .map(|path| {
            if path.len() != mb.steps() + 1 {
                return Err(Error::DimensionMismatch("path length".into()));
            }
            let log_q: T = path
                .windows(2)
                .map(|w| reference.log_pdf_centered(&vec_sub(&w[1], &w[0])))
                .sum();
            let log_p = match scheme {
                Scheme::PerStep => {
                    let mut acc = T::zero();
                    for k in 0..mb.steps() {
                        acc += mb.mixture_kernel_log_pdf(k, &path[k], &path[k + 1])?;
                    }
                    acc
                }
                Scheme::Once => {
                    mb.once_path_log_pdf(path)? - mb.mixture_marginal_log_pdf(0, &path[0])?
                }
            };
            Ok(log_p - log_q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KlEstimate::from_samples(&terms))
}

/// Mean and standard error of `Σ_k ‖u_k‖²` over the paths of a steering batch.
pub fn estimate_control_cost<T: Scalar>(batch: &TrajectoryBatch<T>) -> Result<KlEstimate<T>> {
    let controls = batch.controls.as_ref().ok_or(Error::MissingControls)?;
    let terms: Vec<T> = controls
        .iter()
        .map(|path| path.iter().flatten().map(|&u| u * u).sum())
        .collect();
    Ok(KlEstimate::from_samples(&terms))
}

/// Sample statistics of the states at one step.
#[derive(Clone, Debug)]
pub struct EmpiricalMarginal<T: Scalar> {
    pub mean: Vec<T>,
    /// Standard error of each mean coordinate.
    pub mean_std_error: Vec<T>,
    /// Unbiased sample covariance.
    pub cov: SymMatrix<T>,
    /// Fraction of samples assigned to each analytic component.
    pub histogram: Vec<T>,
    /// Sample mean of the states assigned to each component (`None` if empty).
    pub component_means: Vec<Option<Vec<T>>>,
}

/// Moments of `batch` at step `k`; samples are assigned to the component of
/// `analytic` under which they are most likely.
pub fn empirical_marginal<T: Scalar>(
    batch: &TrajectoryBatch<T>,
    k: usize,
    analytic: &Gmm<T>,
) -> Result<EmpiricalMarginal<T>> {
    let steps = batch.steps();
    if k > steps {
        return Err(Error::IndexOutOfRange { index: k, max: steps });
    }
    let n = batch.dim();
    if analytic.dim() != n {
        return Err(Error::DimensionMismatch("analytic marginal dimension".into()));
    }
    let m = batch.paths();
    let mf = T::from_usize_lossy(m);
    let xs: Vec<&Vec<T>> = batch.states.iter().map(|p| &p[k]).collect();

    let mut mean = vec![T::zero(); n];
    for x in &xs {
        for (a, &v) in mean.iter_mut().zip(x.iter()) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= mf);
    let mut cov = Matrix::zeros(n, n);
    for x in &xs {
        let d = vec_sub(x, &mean);
        for r in 0..n {
            for s in 0..n {
                cov[(r, s)] += d[r] * d[s];
            }
        }
    }
    let denom = T::from_usize_lossy(m.max(2) - 1);
    let cov = SymMatrix::new(cov.scale(denom.recip()));
    let mean_std_error = (0..n).map(|r| (cov[(r, r)] / mf).sqrt()).collect();

    let densities = analytic
        .components()
        .iter()
        .map(|c| c.density())
        .collect::<Result<Vec<_>>>()?;
    let nc = densities.len();
    let mut counts = vec![0usize; nc];
    let mut sums = vec![vec![T::zero(); n]; nc];
    for x in &xs {
        let best = densities
            .iter()
            .enumerate()
            .map(|(c, d)| (c, d.log_pdf(x)))
            .fold((0, T::neg_infinity()), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
            .0;
        counts[best] += 1;
        for (a, &v) in sums[best].iter_mut().zip(x.iter()) {
            *a += v;
        }
    }
    let histogram = counts.iter().map(|&c| T::from_usize_lossy(c) / mf).collect();
    let component_means = counts
        .iter()
        .zip(sums)
        .map(|(&c, s)| {
            (c > 0).then(|| {
                let cf = T::from_usize_lossy(c);
                s.into_iter().map(|v| v / cf).collect()
            })
        })
        .collect();
    Ok(EmpiricalMarginal {
        mean,
        mean_std_error,
        cov,
        histogram,
        component_means,
    })
}
