//! The label-folding transform, the admissible-noise arithmetic, and the
//! seven-step loss-gap distinguisher that turns any weak learner into a test
//! between the planted and null distributions.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{ClweParams, ClweSampler, LabeledSample, NullSampler, SampleSet, Sampler};
use crate::error::{Error, Result};
use crate::learners::{ConstantLearner, Hypothesis, Learner, OracleLearner, OracleTarget, SgdLearner, SgdSettings};
use crate::rng::{random_unit_vector, RandomStream};
use crate::scalar::{pairwise_mean, triangle_raw};
use crate::Real;

/// Bernstein sample-size constant, calibrated once by the Monte-Carlo
/// deviation experiment in `stats::loss_deviation_quantiles` and frozen.
pub const BERNSTEIN_CONSTANT: Real = 200.0;

/// Default failure budget split across the four concentration events.
pub const DEFAULT_FAILURE_BUDGET: Real = 0.04;

/// Default weak-learner confidence level.
pub const DEFAULT_LEARNER_CONFIDENCE: Real = 1.0 / 3.0;

// Stream lanes consumed inside `distinguish`. Step 4's null samples always use
// lanes disjoint from the step-1 noise, so trials replay exactly.
const LANE_XI: u64 = 0xD1;
const LANE_LEARNER: u64 = 0xD2;
const LANE_NULL: u64 = 0xD3;
const LANE_NULL_XI: u64 = 0xD4;

/// The largest admissible pre-wave noise rate for a given injected noise
/// level, learner sample count, and edge:
/// `min(sigma^2 / (10^4 m1^2), epsilon^2 / 10^3)`.
pub fn admissible_beta(sigma: Real, m1: usize, epsilon: Real) -> Real {
    let m1 = m1 as Real;
    (sigma * sigma / (1e4 * m1 * m1)).min(epsilon * epsilon / 1e3)
}

/// Number of held-out samples per empirical loss:
/// `ceil(C ln(4 / failure_budget) / epsilon^2)` with C = 200, sized so each
/// empirical loss sits within epsilon/20 of its mean with probability at
/// least 1 - failure_budget/4 (losses are sub-exponential with absolute
/// constants since predictions and folded labels are bounded by 2 and the
/// injected noise has sigma < 1).
pub fn required_test_samples(epsilon: Real, failure_budget: Real) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    if !(failure_budget > 0.0 && failure_budget < 1.0) {
        return Err(Error::invalid("failure_budget", "must lie in (0, 1)"));
    }
    Ok((BERNSTEIN_CONSTANT * (4.0 / failure_budget).ln() / (epsilon * epsilon)).ceil() as usize)
}

/// Scalar parameters of one distinguisher run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub d: usize,
    pub gamma: Real,
    pub sigma: Real,
    pub epsilon: Real,
    pub m1: usize,
    pub m2: usize,
    pub beta: Real,
    /// Hypothesis output clamp; (-1, 1) for the periodic-neuron class and
    /// (-1/4, 1/4) for the network class.
    pub clamp: (Real, Real),
    /// Weak-learner confidence; informational, defaults to 1/3.
    pub delta: Real,
}

impl ReductionConfig {
    /// Builds a config with the admissible noise rate and the default
    /// held-out sample count for the given edge.
    pub fn new(d: usize, gamma: Real, sigma: Real, epsilon: Real, m1: usize) -> Result<Self> {
        let cfg = ReductionConfig {
            d,
            gamma,
            sigma,
            epsilon,
            m1,
            m2: required_test_samples(epsilon, DEFAULT_FAILURE_BUDGET)?,
            beta: admissible_beta(sigma, m1, epsilon),
            clamp: (-1.0, 1.0),
            delta: DEFAULT_LEARNER_CONFIDENCE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_clamp(mut self, lo: Real, hi: Real) -> Result<Self> {
        self.clamp = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::ConfigViolation("d must be at least 1".into()));
        }
        if self.m1 == 0 {
            return Err(Error::ConfigViolation("m1 must be at least 1".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::ConfigViolation("gamma must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::ConfigViolation("sigma must lie in (0, 1)".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::ConfigViolation("epsilon must lie in (0, 1)".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::ConfigViolation("delta must lie in (0, 1)".into()));
        }
        let beta_cap = admissible_beta(self.sigma, self.m1, self.epsilon);
        if !(self.beta >= 0.0 && self.beta <= beta_cap) {
            return Err(Error::ConfigViolation(format!(
                "beta {} exceeds the admissible cap {beta_cap:e}",
                self.beta
            )));
        }
        let m2_floor = (BERNSTEIN_CONSTANT / (self.epsilon * self.epsilon)).ceil() as usize;
        if self.m2 < m2_floor {
            return Err(Error::ConfigViolation(format!(
                "m2 = {} is below the concentration floor {m2_floor}",
                self.m2
            )));
        }
        if !(self.clamp.0.is_finite() && self.clamp.1.is_finite() && self.clamp.0 <= self.clamp.1) {
            return Err(Error::ConfigViolation("clamp must be a finite interval".into()));
        }
        Ok(())
    }
}

/// Distinguisher output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ClwePlanted,
    Null,
}

/// Folds a label through the triangle wave and injects noise:
/// `(x, y) -> (x, wave(y) + xi)`. The input vector is untouched.
pub fn gaussianize(sample: &LabeledSample, xi: Real) -> LabeledSample {
    LabeledSample {
        x: sample.x.clone(),
        y: triangle_raw(sample.y) + xi,
    }
}

/// Per-run diagnostics: both empirical losses and the decision margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishDiagnostics {
    pub verdict: Verdict,
    pub loss_d1: Real,
    pub loss_q1: Real,
    pub margin: Real,
    pub epsilon: Real,
    pub m1: usize,
    pub m2: usize,
    pub beta: Real,
    pub seed: u64,
}

/// Runs the distinguisher on `m1 + m2` samples with labels in [-1/2, 1/2):
///
/// 1. draw injection noise `xi_i ~ N(0, sigma^2)`;
/// 2. fold every label through the wave and add the noise;
/// 3. fit the learner on the first `m1` transformed samples, clamp its output;
/// 4. generate `m2` fresh null samples on disjoint stream lanes and transform
///    them with fresh noise;
/// 5. compute the empirical losses on the held-out `m2` transformed samples
///    and on the generated null samples;
/// 6. pass iff `loss_d1 <= loss_q1 - epsilon/5` (ties pass);
/// 7. verdict is planted iff the test passes.
///
/// The planted direction is never an input: the algorithm sees labels only.
pub fn distinguish(
    data: &SampleSet,
    learner: &dyn Learner,
    cfg: &ReductionConfig,
    stream: RandomStream,
) -> Result<DistinguishDiagnostics> {
    cfg.validate()?;
    if data.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: data.dim(),
        });
    }
    let m = cfg.m1 + cfg.m2;
    if data.len() != m {
        return Err(Error::ConfigViolation(format!(
            "expected m1 + m2 = {m} samples, got {}",
            data.len()
        )));
    }
    if data.labels().iter().any(|y| !(-0.5..0.5).contains(y)) {
        return Err(Error::ConfigViolation(
            "labels are not mod-1 representatives in [-1/2, 1/2)".into(),
        ));
    }

    // Steps 1-2.
    let mut xi_rng = stream.derive(LANE_XI).rng();
    let transformed: Vec<Real> = data
        .labels()
        .iter()
        .map(|&y| {
            triangle_raw(y)
                + cfg.sigma * <StandardNormal as Distribution<Real>>::sample(&StandardNormal, &mut xi_rng)
        })
        .collect();

    // Step 3.
    let mut train = SampleSet::with_capacity(cfg.d, cfg.m1)?;
    for i in 0..cfg.m1 {
        train.push(data.x(i), transformed[i])?;
    }
    let h = learner
        .fit(&train, stream.derive(LANE_LEARNER))?
        .with_clamp(cfg.clamp.0, cfg.clamp.1)?;

    // Step 4.
    let null = NullSampler::new(cfg.d)?.sample(cfg.m2, stream.derive(LANE_NULL))?;
    let mut null_rng = stream.derive(LANE_NULL_XI).rng();
    let null_labels: Vec<Real> = null
        .labels()
        .iter()
        .map(|&y| {
            triangle_raw(y)
                + cfg.sigma
                    * <StandardNormal as Distribution<Real>>::sample(&StandardNormal, &mut null_rng)
        })
        .collect();

    // Step 5. Parallel map collected in index order, then a fixed-shape
    // pairwise reduction: results do not depend on the thread count.
    let d1_losses: Vec<Real> = (cfg.m1..m)
        .into_par_iter()
        .map(|i| {
            let r = h.predict(data.x(i)) - transformed[i];
            r * r
        })
        .collect();
    let q1_losses: Vec<Real> = (0..cfg.m2)
        .into_par_iter()
        .map(|i| {
            let r = h.predict(null.x(i)) - null_labels[i];
            r * r
        })
        .collect();
    let loss_d1 = pairwise_mean(&d1_losses)?;
    let loss_q1 = pairwise_mean(&q1_losses)?;

    // Steps 6-7.
    let pass = loss_d1 <= loss_q1 - cfg.epsilon / 5.0;
    Ok(DistinguishDiagnostics {
        verdict: if pass { Verdict::ClwePlanted } else { Verdict::Null },
        loss_d1,
        loss_q1,
        margin: loss_q1 - loss_d1,
        epsilon: cfg.epsilon,
        m1: cfg.m1,
        m2: cfg.m2,
        beta: cfg.beta,
        seed: stream.seed(),
    })
}

/// Concrete radius witnessing the matching-interval growth condition
/// `r = gamma * sqrt(omega(log d) + 2 log(1/sigma))`; the omega(log d) term is
/// instantiated as `12 ln(d) ln(ln(d))`.
pub fn matching_interval_radius(gamma: Real, d: usize, sigma: Real) -> Result<u32> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid("sigma", "must lie in (0, 1)"));
    }
    let ln_d = (d.max(3) as Real).ln();
    let term = 12.0 * ln_d * ln_d.ln() + 2.0 * (1.0 / sigma).ln();
    let r = (gamma * term.sqrt()).ceil();
    if !(r >= 1.0 && r <= (1 << 20) as Real) {
        return Err(Error::invalid("r", format!("radius {r} out of range")));
    }
    Ok(r as u32)
}

/// Learner selection for batch trials.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerSpec {
    Constant,
    /// Oracle predicting the planted triangle-wave neuron.
    OracleWave,
    /// Oracle predicting the exact truncated-wave network at the witness
    /// radius; pairs with the (-1/4, 1/4) clamp.
    OracleNet,
    Sgd(SgdSettings),
}

impl LearnerSpec {
    pub fn default_clamp(&self) -> (Real, Real) {
        match self {
            LearnerSpec::OracleNet => (-0.25, 0.25),
            _ => (-1.0, 1.0),
        }
    }

    fn build(&self, w: &[Real], cfg: &ReductionConfig) -> Result<Box<dyn Learner>> {
        Ok(match self {
            LearnerSpec::Constant => Box::new(ConstantLearner),
            LearnerSpec::OracleWave => Box::new(OracleLearner::new(
                w.to_vec(),
                cfg.gamma,
                OracleTarget::TriangleWave,
            )?),
            LearnerSpec::OracleNet => {
                let r = matching_interval_radius(cfg.gamma, cfg.d, cfg.sigma)?;
                Box::new(OracleLearner::new(
                    w.to_vec(),
                    cfg.gamma,
                    OracleTarget::TruncatedNet { r },
                )?)
            }
            LearnerSpec::Sgd(settings) => Box::new(SgdLearner::new(*settings)?),
        })
    }
}

/// One seeded trial: planted or null data, a fresh direction, one verdict.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub planted: bool,
    pub diagnostics: DistinguishDiagnostics,
}

/// Runs `trials` independent seeded trials against freshly planted (or null)
/// data. Trial i uses stream id i; trials run in parallel and replay
/// identically at any thread count.
pub fn run_trials(
    cfg: &ReductionConfig,
    spec: &LearnerSpec,
    planted: bool,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let m = cfg.m1 + cfg.m2;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let base = RandomStream::with_stream(seed, trial);
            let w: Vec<Real> = random_unit_vector(cfg.d, base.derive(1))?;
            let data = if planted {
                let params = ClweParams::new(cfg.d, cfg.gamma, cfg.beta)?;
                ClweSampler::new(params, w.clone())?.sample(m, base.derive(2))?
            } else {
                NullSampler::new(cfg.d)?.sample(m, base.derive(2))?
            };
            let learner = spec.build(&w, cfg)?;
            let diagnostics = distinguish(&data, learner.as_ref(), cfg, base.derive(3))?;
            Ok(TrialOutcome {
                trial,
                planted,
                diagnostics,
            })
        })
        .collect()
}

/// Fraction of trials that returned the given verdict.
pub fn verdict_rate(outcomes: &[TrialOutcome], verdict: Verdict) -> Real {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes
        .iter()
        .filter(|o| o.diagnostics.verdict == verdict)
        .count() as Real
        / outcomes.len() as Real
}

/// Convenience: a clamped hypothesis is only built inside `distinguish`, but
/// callers sometimes want the same wrapping for standalone evaluation.
pub fn clamp_hypothesis(h: Hypothesis, cfg: &ReductionConfig) -> Result<Hypothesis> {
    h.with_clamp(cfg.clamp.0, cfg.clamp.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::triangle_wave;

    #[test]
    fn admissible_beta_examples() {
        assert_eq!(admissible_beta(1e-2, 1000, 1e-2), 1e-14);
        assert_eq!(admissible_beta(1.0, 1, 1.0), 1e-4);
        // scaling m1 by 10 divides the first branch by 100
        let a = admissible_beta(1e-2, 100, 1e-3);
        let b = admissible_beta(1e-2, 1000, 1e-3);
        assert!((a / b - 100.0).abs() < 1e-9);
    }

    #[test]
    fn required_test_samples_examples() {
        assert_eq!(required_test_samples(0.05, 0.04).unwrap(), 368_414);
        // halving epsilon quadruples m2 (up to rounding)
        let a = required_test_samples(0.1, 0.04).unwrap() as Real;
        let b = required_test_samples(0.05, 0.04).unwrap() as Real;
        assert!((b / a - 4.0).abs() < 1e-3);
        // smaller budget => m2 nondecreasing
        assert!(
            required_test_samples(0.05, 0.01).unwrap() >= required_test_samples(0.05, 0.04).unwrap()
        );
        assert!(required_test_samples(1.0, 0.04).is_err());
        assert!(required_test_samples(0.5, 1.5).is_err());
    }

    #[test]
    fn gaussianize_examples() {
        let s = LabeledSample {
            x: vec![1.0, 2.0],
            y: 0.25,
        };
        let out = gaussianize(&s, 0.0);
        assert_eq!(out.y, 0.25);
        assert_eq!(out.x, s.x);

        let s = LabeledSample { x: vec![0.0], y: 0.75 };
        let out = gaussianize(&s, 0.01);
        assert!((out.y - (-0.24)).abs() <= 1e-15);

        // periodicity: shifting the label by 1 changes nothing
        let a = gaussianize(&LabeledSample { x: vec![], y: 0.3 }, 0.5);
        let b = gaussianize(&LabeledSample { x: vec![], y: 1.3 }, 0.5);
        assert!((a.y - b.y).abs() <= 1e-12);
        let _ = triangle_wave(0.3f64);
    }

    #[test]
    fn config_validation_catches_violations() {
        let cfg = ReductionConfig::new(8, 4.0, 1e-2, 0.1, 100).unwrap();
        assert!(cfg.validate().is_ok());

        let mut bad = cfg;
        bad.beta = 1.0;
        assert!(matches!(bad.validate(), Err(Error::ConfigViolation(_))));

        let mut bad = cfg;
        bad.m2 = 10;
        assert!(bad.validate().is_err());

        let mut bad = cfg;
        bad.sigma = 1.5;
        assert!(bad.validate().is_err());

        assert!(ReductionConfig::new(8, 4.0, 1e-2, 1.2, 100).is_err());
    }

    fn small_cfg() -> ReductionConfig {
        // epsilon = 0.1: the pass threshold eps/5 = 0.02 sits well below the
        // ~0.042 margin the oracle can actually achieve (twice the wave's
        // variance), and m2 stays small enough for unit tests.
        ReductionConfig::new(8, 2.0 * (8.0f64).sqrt(), 1e-2, 0.1, 64).unwrap()
    }

    #[test]
    fn oracle_detects_planted_data() {
        let cfg = small_cfg();
        let outcomes = run_trials(&cfg, &LearnerSpec::OracleWave, true, 20, 101).unwrap();
        let rate = verdict_rate(&outcomes, Verdict::ClwePlanted);
        assert!(rate >= 0.9, "completeness {rate}");
    }

    #[test]
    fn null_data_yields_null_verdicts() {
        let cfg = small_cfg();
        for spec in [LearnerSpec::OracleWave, LearnerSpec::Constant] {
            let outcomes = run_trials(&cfg, &spec, false, 20, 202).unwrap();
            let rate = verdict_rate(&outcomes, Verdict::Null);
            assert!(rate >= 0.95, "soundness {rate} for {spec:?}");
        }
    }

    #[test]
    fn constant_learner_cannot_fake_a_margin_on_planted_data() {
        let cfg = small_cfg();
        let outcomes = run_trials(&cfg, &LearnerSpec::Constant, true, 20, 303).unwrap();
        let rate = verdict_rate(&outcomes, Verdict::Null);
        assert!(rate >= 0.95, "constant-learner null rate {rate}");
    }

    #[test]
    fn null_margins_stay_within_a_tenth_of_epsilon() {
        let cfg = small_cfg();
        let outcomes = run_trials(&cfg, &LearnerSpec::OracleWave, false, 40, 404).unwrap();
        let tight = outcomes
            .iter()
            .filter(|o| o.diagnostics.margin.abs() <= cfg.epsilon / 10.0)
            .count();
        assert!(
            tight as Real / outcomes.len() as Real >= 0.95,
            "{tight} of {} within eps/10",
            outcomes.len()
        );
    }

    #[test]
    fn distinguish_is_deterministic() {
        let cfg = small_cfg();
        let a = run_trials(&cfg, &LearnerSpec::OracleWave, true, 3, 77).unwrap();
        let b = run_trials(&cfg, &LearnerSpec::OracleWave, true, 3, 77).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.diagnostics, y.diagnostics);
        }
    }

    #[test]
    fn distinguish_rejects_malformed_inputs() {
        let cfg = small_cfg();
        let m = cfg.m1 + cfg.m2;
        let base = RandomStream::new(5);
        // wrong sample count
        let small = NullSampler::new(cfg.d).unwrap().sample(10, base).unwrap();
        assert!(distinguish(&small, &ConstantLearner, &cfg, base).is_err());
        // labels out of the mod-1 range
        let mut bad = SampleSet::new(cfg.d).unwrap();
        for i in 0..m {
            bad.push(&vec![0.0; cfg.d], 0.6 + (i as Real) * 0.0).unwrap();
        }
        assert!(distinguish(&bad, &ConstantLearner, &cfg, base).is_err());
    }

    #[test]
    fn matching_radius_grows_with_gamma_and_shrinks_with_sigma() {
        let r1 = matching_interval_radius(4.0, 32, 1e-2).unwrap();
        let r2 = matching_interval_radius(8.0, 32, 1e-2).unwrap();
        assert!(r2 > r1);
        let r3 = matching_interval_radius(4.0, 32, 1e-1).unwrap();
        assert!(r3 < r1);
        assert!(matching_interval_radius(-1.0, 32, 1e-2).is_err());
    }
}
