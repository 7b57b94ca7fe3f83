//! Discrete-time Schrödinger bridges and density steering between Gaussian
//! mixture models.
//!
//! Each pair of boundary components is connected by a closed-form Gaussian
//! solution — a Gaussian bridge of a random walk or a covariance-steering
//! policy of linear dynamics — and the pairs are coupled by a transport plan
//! over the mixture weights. The resulting Markov policy re-draws its pair at
//! every step from the posterior responsibilities.
//!
//! All solvers are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod covariance_steering;
pub mod error;
pub mod gaussian;
pub mod gaussian_bridge;
pub mod matrix_kit;
pub mod mixture_policy;
pub mod scalar;
pub mod simulator;
pub mod transport_plan;

pub use covariance_steering::{
    ds_cost, solve_covariance_steering, solve_mean_steering, AffinePolicy, CovarianceSteering,
    LinearDynamics, MeanSteering, SteeringOptions,
};
pub use error::{Error, Result};
pub use gaussian::{GaussianComponent, Gmm};
pub use gaussian_bridge::{sb_cost, solve_gaussian_sb, BridgeSchedule};
pub use matrix_kit::{Matrix, SymMatrix};
pub use mixture_policy::{MixtureBridge, Mode, NoiseSource, PairSolution, Responsibilities, Step};
pub use scalar::Scalar;
pub use simulator::{
    empirical_marginal, estimate_control_cost, estimate_path_kl, limit_check, rollout,
    EmpiricalMarginal, KlEstimate, LimitTable, Scheme, TrajectoryBatch,
};
pub use transport_plan::{solve_transport, verify_plan, TransportPlan};

pub type Mat64 = Matrix<f64>;
pub type SymMat64 = SymMatrix<f64>;
pub type Gaussian64 = GaussianComponent<f64>;
pub type Gmm64 = Gmm<f64>;
pub type Bridge64 = BridgeSchedule<f64>;
pub type Dynamics64 = LinearDynamics<f64>;
pub type Policy64 = AffinePolicy<f64>;
pub type Plan64 = TransportPlan<f64>;
pub type Mixture64 = MixtureBridge<f64>;
pub type Batch64 = TrajectoryBatch<f64>;
