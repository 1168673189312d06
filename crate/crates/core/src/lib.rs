//! A numerical laboratory for planted mod-1 label distributions and
//! one-hidden-layer ReLU networks: seedable samplers, an exact triangle-wave
//! network construction, total-variation verifiers, baseline learners, a
//! loss-gap distinguisher, and a lattice-parameter calculator.
//!
//! The deterministic scalar core (`scalar`, `net`) is generic over the float
//! type through [`Scalar`]; the samplers, statistics, and experiment harness
//! run at the lab precision pinned by [`Real`].

pub mod dist;
pub mod error;
pub mod learners;
pub mod net;
pub mod params;
mod quad;
pub mod reduction;
pub mod rng;
pub mod scalar;
pub mod stats;

/// Working precision of the samplers, statistics, and experiment harness.
pub type Real = f64;

/// One-hidden-layer network at lab precision.
pub type RealNet = net::OneHiddenLayerNet<Real>;

/// Scalar-input network at lab precision.
pub type RealScalarNet = net::ScalarNet<Real>;

/// Mod-1 representative at lab precision.
pub type RealUnit = scalar::UnitReal<Real>;

/// Version string embedded in every output artifact.
pub const ARTIFACT_VERSION: &str = concat!("clwe-lab/", env!("CARGO_PKG_VERSION"));

pub use dist::{
    wrapped_gaussian_cdf, wrapped_gaussian_density, wrapped_tv_to_uniform, wrapped_tv_upper_bound,
    ClweParams, ClweSampler, LabeledSample, NetSampler, NullSampler, PeriodicNeuronSampler,
    SampleSet, Sampler,
};
pub use error::{Error, Result};
pub use learners::{
    edge_on, empirical_loss, evaluate_edge, squared_loss_grad, ConstantLearner, EpochStat,
    Hypothesis, Learner, NetGradient, OracleLearner, OracleTarget, SgdLearner, SgdSettings,
};
pub use net::{build_triangle_net, lift, OneHiddenLayerNet, ScalarNet};
pub use params::{derive_parameter_chain, gapsvp_factor_ln, small_noise_regime, ParamReport};
pub use reduction::{
    admissible_beta, distinguish, gaussianize, matching_interval_radius, required_test_samples,
    run_trials, verdict_rate, DistinguishDiagnostics, LearnerSpec, ReductionConfig, TrialOutcome,
    Verdict,
};
pub use rng::{random_unit_vector, standard_normals, RandomStream};
pub use scalar::{mod1, pairwise_mean, pairwise_sum, triangle_wave, Scalar, UnitReal};
pub use stats::{
    gaussianization_tv, gaussianization_tv_bound, loss_deviation_quantiles, population_loss,
    run_bound_checks, triangle_second_moment, truncated_net_tv, truncated_net_tv_bound,
    BoundCheck, BoundCheckConfig, DeviationQuantiles, LossEstimate, TvEstimate, TvMethod,
};
