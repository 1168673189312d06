//! Weak-learner interface and the concrete learners the harness exercises:
//! the constant-mean baseline, a cheating oracle that knows the planted
//! direction, and minibatch SGD on a one-hidden-layer ReLU network.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dist::{SampleSet, Sampler};
use crate::error::{Error, Result};
use crate::net::{build_triangle_net, OneHiddenLayerNet};
use crate::rng::RandomStream;
use crate::scalar::{pairwise_mean, triangle_raw};
use crate::Real;

/// Default output clamp. Every label distribution in this lab lives inside
/// [-1, 1], and clamping a predictor into an interval containing the labels
/// never increases squared loss.
pub const DEFAULT_CLAMP: (Real, Real) = (-1.0, 1.0);

/// A black-box predictor with a declared output clamp range.
pub struct Hypothesis {
    predictor: Box<dyn Fn(&[Real]) -> Real + Send + Sync>,
    clamp: (Real, Real),
}

impl Hypothesis {
    pub fn new(
        predictor: impl Fn(&[Real]) -> Real + Send + Sync + 'static,
        clamp: (Real, Real),
    ) -> Result<Self> {
        if !(clamp.0.is_finite() && clamp.1.is_finite() && clamp.0 <= clamp.1) {
            return Err(Error::invalid("clamp", "need finite lo <= hi"));
        }
        Ok(Hypothesis {
            predictor: Box::new(predictor),
            clamp,
        })
    }

    pub fn constant(c: Real) -> Result<Self> {
        Hypothesis::new(move |_| c, DEFAULT_CLAMP)
    }

    pub fn with_clamp(mut self, lo: Real, hi: Real) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid("clamp", "need finite lo <= hi"));
        }
        self.clamp = (lo, hi);
        Ok(self)
    }

    pub fn clamp_range(&self) -> (Real, Real) {
        self.clamp
    }

    pub fn predict(&self, x: &[Real]) -> Real {
        (self.predictor)(x).clamp(self.clamp.0, self.clamp.1)
    }
}

/// A fitting procedure from samples to a hypothesis, possibly randomized
/// through the provided stream. Implementations use only the samples and the
/// stream; the one deliberate exception is [`OracleLearner`], which is handed
/// the planted direction to serve as a maximally strong test subject.
pub trait Learner: Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, samples: &SampleSet, stream: RandomStream) -> Result<Hypothesis>;
}

/// Predicts the empirical label mean, ignoring the inputs.
pub struct ConstantLearner;

impl Learner for ConstantLearner {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn fit(&self, samples: &SampleSet, _stream: RandomStream) -> Result<Hypothesis> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        Hypothesis::constant(pairwise_mean(samples.labels())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleTarget {
    /// Predicts `triangle_wave(gamma <w, x>)`.
    TriangleWave,
    /// Predicts the exact truncated-wave network of the given radius composed
    /// with the scalar projection.
    TruncatedNet { r: u32 },
}

/// Cheating learner that knows the planted direction and frequency; it ignores
/// the samples entirely.
pub struct OracleLearner {
    w: Vec<Real>,
    gamma: Real,
    target: OracleTarget,
}

impl OracleLearner {
    pub fn new(w: Vec<Real>, gamma: Real, target: OracleTarget) -> Result<Self> {
        let norm: Real = w.iter().map(|v| v * v).sum::<Real>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("w", "must be a unit vector"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be finite and positive"));
        }
        Ok(OracleLearner { w, gamma, target })
    }
}

impl Learner for OracleLearner {
    fn name(&self) -> &'static str {
        match self.target {
            OracleTarget::TriangleWave => "oracle",
            OracleTarget::TruncatedNet { .. } => "oracle-nn",
        }
    }

    fn fit(&self, _samples: &SampleSet, _stream: RandomStream) -> Result<Hypothesis> {
        let w = self.w.clone();
        let gamma = self.gamma;
        match self.target {
            OracleTarget::TriangleWave => Hypothesis::new(
                move |x: &[Real]| {
                    let t: Real = gamma * w.iter().zip(x).map(|(a, b)| a * b).sum::<Real>();
                    triangle_raw(t)
                },
                DEFAULT_CLAMP,
            ),
            OracleTarget::TruncatedNet { r } => {
                // Flatten the scalar net into contiguous (outer, weight, bias)
                // arrays; the width-(4r+2) sum dominates every prediction.
                let net = build_triangle_net::<Real>(r)?;
                let inner = net.inner();
                let a = inner.outer().to_vec();
                let s: Vec<Real> = inner.weights().iter().map(|row| row[0]).collect();
                let b = inner.biases().to_vec();
                Hypothesis::new(
                    move |x: &[Real]| {
                        let t: Real = gamma * w.iter().zip(x).map(|(u, v)| u * v).sum::<Real>();
                        flat_relu_sum(&a, &s, &b, t, 0, a.len())
                    },
                    (-0.25, 0.25),
                )
            }
        }
    }
}

/// Scalar ReLU sum over flat arrays with the same fixed pairwise accumulation
/// order as network evaluation.
fn flat_relu_sum(a: &[Real], s: &[Real], b: &[Real], t: Real, lo: usize, hi: usize) -> Real {
    if hi - lo <= 8 {
        let mut acc = 0.0;
        for j in lo..hi {
            acc += a[j] * (s[j] * t + b[j]).max(0.0);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        flat_relu_sum(a, s, b, t, lo, mid) + flat_relu_sum(a, s, b, t, mid, hi)
    }
}

/// Parameter gradient of the squared loss (f(x) - y)^2 of a one-hidden-layer
/// network, with the ReLU subgradient at 0 taken as 0.
#[derive(Clone, Debug)]
pub struct NetGradient {
    pub a: Vec<Real>,
    pub w: Vec<Vec<Real>>,
    pub b: Vec<Real>,
}

impl NetGradient {
    fn zeros(k: usize, d: usize) -> Self {
        NetGradient {
            a: vec![0.0; k],
            w: vec![vec![0.0; d]; k],
            b: vec![0.0; k],
        }
    }

    fn add_scaled(&mut self, other: &NetGradient, s: Real) {
        for j in 0..self.a.len() {
            self.a[j] += s * other.a[j];
            self.b[j] += s * other.b[j];
            for i in 0..self.w[j].len() {
                self.w[j][i] += s * other.w[j][i];
            }
        }
    }
}

/// Loss and analytic parameter gradient at one sample.
pub fn squared_loss_grad(
    net: &OneHiddenLayerNet<Real>,
    x: &[Real],
    y: Real,
) -> Result<(Real, NetGradient)> {
    let f = net.eval(x)?;
    let r = f - y;
    let loss = r * r;
    let k = net.width();
    let d = net.input_dim();
    let mut grad = NetGradient::zeros(k, d);
    for j in 0..k {
        let row = &net.weights()[j];
        let mut z = net.biases()[j];
        for i in 0..d {
            z += row[i] * x[i];
        }
        if z > 0.0 {
            grad.a[j] = 2.0 * r * z;
            let s = 2.0 * r * net.outer()[j];
            grad.b[j] = s;
            for i in 0..d {
                grad.w[j][i] = s * x[i];
            }
        }
        // z <= 0: relu output and the chosen subgradient are both 0.
    }
    Ok((loss, grad))
}

/// Architecture and optimization settings for [`SgdLearner`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdSettings {
    pub width: usize,
    pub init_scale: Real,
    pub learning_rate: Real,
    pub epochs: usize,
    pub batch_size: usize,
}

impl SgdSettings {
    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::invalid("width", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::invalid("init_scale", "must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch training diagnostics. The edge estimate is in-sample: label
/// variance of the training set minus the current empirical loss.
#[derive(Clone, Copy, Debug)]
pub struct EpochStat {
    pub epoch: usize,
    pub empirical_loss: Real,
    pub edge_estimate: Real,
}

/// Minibatch SGD on the squared loss over one-hidden-layer networks.
///
/// Initialization: hidden weights N(0, (init_scale/sqrt(d))^2), outer
/// coefficients N(0, (init_scale/sqrt(k))^2), biases uniform in [-1, 1].
/// A non-finite epoch loss is reported as [`Error::TrainingDiverged`].
pub struct SgdLearner {
    pub settings: SgdSettings,
}

impl SgdLearner {
    pub fn new(settings: SgdSettings) -> Result<Self> {
        settings.validate()?;
        Ok(SgdLearner { settings })
    }

    fn init_net(&self, d: usize, stream: RandomStream) -> Result<OneHiddenLayerNet<Real>> {
        let k = self.settings.width;
        let mut rng = stream.rng();
        let w_scale = self.settings.init_scale / (d as Real).sqrt();
        let a_scale = self.settings.init_scale / (k as Real).sqrt();
        let mut a = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        let mut b = Vec::with_capacity(k);
        for _ in 0..k {
            a.push(a_scale * <StandardNormal as Distribution<Real>>::sample(&StandardNormal, &mut rng));
            w.push(
                (0..d)
                    .map(|_| {
                        w_scale
                            * <StandardNormal as Distribution<Real>>::sample(
                                &StandardNormal,
                                &mut rng,
                            )
                    })
                    .collect::<Vec<Real>>(),
            );
            b.push(rng.random_range(-1.0..1.0));
        }
        OneHiddenLayerNet::new(a, w, b)
    }

    /// Trains and returns both the fitted net and the per-epoch curve.
    pub fn fit_with_diagnostics(
        &self,
        samples: &SampleSet,
        stream: RandomStream,
    ) -> Result<(OneHiddenLayerNet<Real>, Vec<EpochStat>)> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let d = samples.dim();
        let m = samples.len();
        let mut net = self.init_net(d, stream.derive(0))?;
        let mut rng = stream.derive(1).rng();

        let label_mean = pairwise_mean(samples.labels())?;
        let label_var: Real = samples
            .labels()
            .iter()
            .map(|y| (y - label_mean) * (y - label_mean))
            .sum::<Real>()
            / m as Real;

        let mut order: Vec<usize> = (0..m).collect();
        let mut curve = Vec::with_capacity(self.settings.epochs);
        for epoch in 0..self.settings.epochs {
            for i in (1..m).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            for batch in order.chunks(self.settings.batch_size) {
                let mut grad = NetGradient::zeros(net.width(), d);
                for &idx in batch {
                    let (_, g) = squared_loss_grad(&net, samples.x(idx), samples.y(idx))?;
                    grad.add_scaled(&g, 1.0 / batch.len() as Real);
                }
                let step = -self.settings.learning_rate;
                let (a, w, b) = net.params_mut();
                for j in 0..a.len() {
                    a[j] += step * grad.a[j];
                    b[j] += step * grad.b[j];
                    for i in 0..d {
                        w[j][i] += step * grad.w[j][i];
                    }
                }
            }
            let mut loss = 0.0;
            for i in 0..m {
                let r = net.eval_unchecked(samples.x(i)) - samples.y(i);
                loss += r * r;
            }
            loss /= m as Real;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            curve.push(EpochStat {
                epoch,
                empirical_loss: loss,
                edge_estimate: label_var - loss,
            });
        }
        Ok((net, curve))
    }
}

impl Learner for SgdLearner {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn fit(&self, samples: &SampleSet, stream: RandomStream) -> Result<Hypothesis> {
        let (net, _) = self.fit_with_diagnostics(samples, stream)?;
        Hypothesis::new(move |x: &[Real]| net.eval_unchecked(x), DEFAULT_CLAMP)
    }
}

/// Empirical squared loss of `h` over the samples in `set[start..end]`.
pub fn empirical_loss(h: &Hypothesis, set: &SampleSet, start: usize, end: usize) -> Result<Real> {
    if start >= end || end > set.len() {
        return Err(Error::invalid("range", format!("{start}..{end} out of bounds")));
    }
    let losses: Vec<Real> = (start..end)
        .map(|i| {
            let r = h.predict(set.x(i)) - set.y(i);
            r * r
        })
        .collect();
    pairwise_mean(&losses)
}

/// Edge of `h` on a sample set: loss of the best constant (the empirical label
/// mean) minus the loss of `h`. Positive means `h` beats the trivial predictor.
pub fn edge_on(h: &Hypothesis, set: &SampleSet) -> Result<Real> {
    if set.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mean = pairwise_mean(set.labels())?;
    let trivial: Vec<Real> = set.labels().iter().map(|y| (mean - y) * (mean - y)).collect();
    let trivial_loss = pairwise_mean(&trivial)?;
    Ok(trivial_loss - empirical_loss(h, set, 0, set.len())?)
}

/// Edge of `h` against a fresh evaluation set drawn from the sampler.
pub fn evaluate_edge(
    h: &Hypothesis,
    sampler: &dyn Sampler,
    m_eval: usize,
    stream: RandomStream,
) -> Result<Real> {
    edge_on(h, &sampler.sample(m_eval, stream)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{NullSampler, PeriodicNeuronSampler};
    use crate::rng::random_unit_vector;

    fn tiny_set(labels: &[Real]) -> SampleSet {
        let mut set = SampleSet::new(1).unwrap();
        for (i, &y) in labels.iter().enumerate() {
            set.push(&[i as Real], y).unwrap();
        }
        set
    }

    #[test]
    fn constant_learner_returns_label_mean() {
        let set = tiny_set(&[0.1, 0.3]);
        let h = ConstantLearner.fit(&set, RandomStream::new(0)).unwrap();
        assert!((h.predict(&[123.0]) - 0.2).abs() <= 1e-15);
        let empty = SampleSet::new(1).unwrap();
        assert!(ConstantLearner.fit(&empty, RandomStream::new(0)).is_err());
    }

    #[test]
    fn constant_on_periodic_neuron_is_near_zero() {
        let d = 4;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(1)).unwrap();
        let sampler = PeriodicNeuronSampler::new(d, 32.0, w, 0.0).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(2)).unwrap();
        let h = ConstantLearner.fit(&set, RandomStream::new(3)).unwrap();
        assert!(h.predict(&[0.0; 4]).abs() <= 0.005);
        // Constant hypothesis has edge ~ 0 by construction.
        assert!(edge_on(&h, &set).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn oracle_reaches_noise_floor_on_matching_distribution() {
        let d = 6;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(4)).unwrap();
        let sampler = PeriodicNeuronSampler::new(d, 8.0, w.clone(), 0.01).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(5)).unwrap();
        let h = OracleLearner::new(w, 8.0, OracleTarget::TriangleWave)
            .unwrap()
            .fit(&set, RandomStream::new(6))
            .unwrap();
        let loss = empirical_loss(&h, &set, 0, set.len()).unwrap();
        assert!((loss - 1e-4).abs() <= 1e-3, "loss {loss}");
        let edge = edge_on(&h, &set).unwrap();
        assert!((edge - 1.0 / 48.0).abs() <= 0.003, "edge {edge}");
    }

    #[test]
    fn oracle_gains_no_edge_on_null_data() {
        // Labels independent of x: no function of x can beat the constant, and
        // the oracle pays exactly its own variance (1/48 at this frequency).
        let d = 5;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(7)).unwrap();
        let sampler = NullSampler::new(d).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(8)).unwrap();
        let h = OracleLearner::new(w, 4.0, OracleTarget::TriangleWave)
            .unwrap()
            .fit(&set, RandomStream::new(9))
            .unwrap();
        let edge = edge_on(&h, &set).unwrap();
        assert!(edge <= 0.005, "positive edge {edge} on independent labels");
        assert!((edge + 1.0 / 48.0).abs() <= 0.005, "edge {edge}");
    }

    #[test]
    fn oracle_net_predictor_matches_network_evaluation() {
        let d = 6;
        let gamma = 3.0;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(40)).unwrap();
        let h = OracleLearner::new(w.clone(), gamma, OracleTarget::TruncatedNet { r: 7 })
            .unwrap()
            .fit(&tiny_set(&[0.0]), RandomStream::new(41))
            .unwrap();
        let net = build_triangle_net::<Real>(7).unwrap();
        for i in 0..200 {
            let x: Vec<Real> =
                crate::rng::standard_normals(RandomStream::with_stream(42, i), d).unwrap();
            let t: Real = gamma * w.iter().zip(&x).map(|(a, b)| a * b).sum::<Real>();
            let want = net.eval(t).clamp(-0.25, 0.25);
            assert_eq!(h.predict(&x), want);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        // 100 probes on random small nets; probes with any pre-activation
        // within 1e-6 of the kink are skipped.
        let d = 4;
        let k = 5;
        let mut checked = 0usize;
        let mut probe = 0u64;
        while checked < 100 {
            probe += 1;
            let stream = RandomStream::with_stream(1234, probe);
            let learner = SgdLearner::new(SgdSettings {
                width: k,
                init_scale: 1.0,
                learning_rate: 0.1,
                epochs: 0,
                batch_size: 1,
            })
            .unwrap();
            let net = learner.init_net(d, stream).unwrap();
            let draws: Vec<Real> =
                crate::rng::standard_normals(stream.derive(99), d + 1).unwrap();
            let x = &draws[..d];
            let y = draws[d];

            let near_kink = (0..k).any(|j| {
                let z: Real = net.biases()[j]
                    + net.weights()[j].iter().zip(x).map(|(a, b)| a * b).sum::<Real>();
                z.abs() < 1e-6
            });
            if near_kink {
                continue;
            }
            let (_, grad) = squared_loss_grad(&net, x, y).unwrap();

            let check = |setter: &dyn Fn(&mut OneHiddenLayerNet<Real>, Real), base: Real, analytic: Real| {
                let h = 1e-6 * (1.0 + base.abs());
                let mut plus = net.clone();
                setter(&mut plus, base + h);
                let mut minus = net.clone();
                setter(&mut minus, base - h);
                let lp = {
                    let r = plus.eval(x).unwrap() - y;
                    r * r
                };
                let lm = {
                    let r = minus.eval(x).unwrap() - y;
                    r * r
                };
                let fd = (lp - lm) / (2.0 * h);
                let rel = (fd - analytic).abs() / (analytic.abs() + fd.abs() + 1e-12);
                assert!(rel <= 1e-5, "fd {fd} vs analytic {analytic}");
            };

            for j in 0..k {
                let base_a = net.outer()[j];
                check(&|n, v| n.params_mut().0[j] = v, base_a, grad.a[j]);
                let base_b = net.biases()[j];
                check(&|n, v| n.params_mut().2[j] = v, base_b, grad.b[j]);
                for i in 0..d {
                    let base_w = net.weights()[j][i];
                    check(&|n, v| n.params_mut().1[j][i] = v, base_w, grad.w[j][i]);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn zero_epochs_returns_the_initialization() {
        let d = 3;
        let set = NullSampler::new(d)
            .unwrap()
            .sample(64, RandomStream::new(10))
            .unwrap();
        let learner = SgdLearner::new(SgdSettings {
            width: 4,
            init_scale: 1.0,
            learning_rate: 0.1,
            epochs: 0,
            batch_size: 8,
        })
        .unwrap();
        let stream = RandomStream::new(11);
        let h = learner.fit(&set, stream).unwrap();
        let init = learner.init_net(d, stream.derive(0)).unwrap();
        for i in 0..8 {
            let x = set.x(i);
            let want = init.eval(x).unwrap().clamp(-1.0, 1.0);
            assert_eq!(h.predict(x), want);
        }
    }

    #[test]
    fn divergence_is_an_explicit_error() {
        let d = 2;
        let set = NullSampler::new(d)
            .unwrap()
            .sample(256, RandomStream::new(12))
            .unwrap();
        let learner = SgdLearner::new(SgdSettings {
            width: 8,
            init_scale: 1.0,
            learning_rate: 1e12,
            epochs: 30,
            batch_size: 16,
        })
        .unwrap();
        match learner.fit(&set, RandomStream::new(13)) {
            Err(Error::TrainingDiverged { .. }) => {}
            Err(e) => panic!("expected divergence, got {e:?}"),
            Ok(_) => panic!("expected divergence, training converged"),
        }
    }

    #[test]
    fn clamping_never_hurts() {
        let d = 3;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(14)).unwrap();
        let sampler = PeriodicNeuronSampler::new(d, 2.0, w.clone(), 0.05).unwrap();
        let set = sampler.sample(20_000, RandomStream::new(15)).unwrap();
        // A deliberately over-shooting predictor.
        let raw = move |x: &[Real]| {
            3.0 * triangle_raw(2.0 * w.iter().zip(x).map(|(a, b)| a * b).sum::<Real>())
        };
        let wide = Hypothesis::new(raw.clone(), (-100.0, 100.0)).unwrap();
        let clamped = Hypothesis::new(raw, (-0.25, 0.25)).unwrap();
        let lw = empirical_loss(&wide, &set, 0, set.len()).unwrap();
        let lc = empirical_loss(&clamped, &set, 0, set.len()).unwrap();
        assert!(lc <= lw + 1e-12, "clamped {lc} vs wide {lw}");
    }

    #[test]
    fn edge_is_order_invariant() {
        let d = 2;
        let sampler = NullSampler::new(d).unwrap();
        let set = sampler.sample(999, RandomStream::new(16)).unwrap();
        let h = Hypothesis::constant(0.1).unwrap();
        let forward = edge_on(&h, &set).unwrap();
        let mut reversed = SampleSet::new(d).unwrap();
        for i in (0..set.len()).rev() {
            reversed.push(set.x(i), set.y(i)).unwrap();
        }
        let backward = edge_on(&h, &reversed).unwrap();
        assert!((forward - backward).abs() <= 1e-12);
    }
}
