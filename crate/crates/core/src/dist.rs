//! Samplers and exact densities for the planted and null label distributions:
//! CLWE labels `gamma <w, x> + noise mod 1`, the independent-uniform null, the
//! periodic-neuron distribution, its network counterpart, and the wrapped
//! Gaussian marginal of the scalar projection.
//!
//! All samplers are pure functions of a [`RandomStream`]; batch generation may
//! shard across threads by assigning disjoint stream ids.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::net::OneHiddenLayerNet;
use crate::quad::simpson;
use crate::rng::RandomStream;
use crate::scalar::{mod1_raw, triangle_raw, UnitReal, MOD1_DOMAIN_LIMIT};
use crate::Real;

const SQRT_2PI: Real = 2.506_628_274_631_000_5;

/// Frequency and noise rate of the planted label distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClweParams {
    pub d: usize,
    pub gamma: Real,
    pub beta: Real,
}

impl ClweParams {
    pub fn new(d: usize, gamma: Real, beta: Real) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1e15) {
            return Err(Error::invalid("gamma", "must be in (0, 1e15]"));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid("beta", "must be finite and nonnegative"));
        }
        Ok(ClweParams { d, gamma, beta })
    }
}

/// One labeled example (x, y) in R^d x R. Coordinates are finite by
/// construction everywhere this crate produces them.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<Real>,
    pub y: Real,
}

/// A batch of samples sharing one input dimension. Features are stored
/// per-sample contiguously and labels in their own contiguous vector, which is
/// what loss evaluation iterates over.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    d: usize,
    features: Vec<Real>,
    labels: Vec<Real>,
}

impl SampleSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        Ok(SampleSet {
            d,
            features: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn with_capacity(d: usize, m: usize) -> Result<Self> {
        let mut s = SampleSet::new(d)?;
        s.features.reserve(m * d);
        s.labels.reserve(m);
        Ok(s)
    }

    pub fn push(&mut self, x: &[Real], y: Real) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        if !(y.is_finite() && x.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                context: "SampleSet::push",
            });
        }
        self.features.extend_from_slice(x);
        self.labels.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x(&self, i: usize) -> &[Real] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> Real {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Real] {
        &self.labels
    }

    pub fn sample_at(&self, i: usize) -> LabeledSample {
        LabeledSample {
            x: self.x(i).to_vec(),
            y: self.y(i),
        }
    }

    /// Copies samples `range.start..range.end` into a new set.
    pub fn subset(&self, start: usize, end: usize) -> Result<SampleSet> {
        if start > end || end > self.len() {
            return Err(Error::invalid("range", format!("{start}..{end} out of bounds")));
        }
        Ok(SampleSet {
            d: self.d,
            features: self.features[start * self.d..end * self.d].to_vec(),
            labels: self.labels[start..end].to_vec(),
        })
    }

    /// Writes the set as CSV: optional `#` comment lines, a `x_1,...,x_d,y`
    /// header, then one row per sample at 17 significant digits (lossless for
    /// doubles).
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut header = String::new();
        for j in 1..=self.d {
            header.push_str(&format!("x_{j},"));
        }
        header.push('y');
        writeln!(out, "{header}")?;
        for i in 0..self.len() {
            let mut row = String::new();
            for v in self.x(i) {
                row.push_str(&format!("{v:.16e},"));
            }
            row.push_str(&format!("{:.16e}", self.y(i)));
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    /// Parses the CSV format produced by [`SampleSet::write_csv`]. Comment
    /// lines are skipped; every value must be finite.
    pub fn read_csv<R: BufRead>(input: R) -> Result<SampleSet> {
        let mut lines = input
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedData("missing header".into()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols[cols.len() - 1] != "y" {
            return Err(Error::MalformedData(format!("unexpected header: {header}")));
        }
        let d = cols.len() - 1;
        for (j, c) in cols[..d].iter().enumerate() {
            if *c != format!("x_{}", j + 1) {
                return Err(Error::MalformedData(format!("unexpected column: {c}")));
            }
        }
        let mut set = SampleSet::new(d)?;
        let mut x = vec![0.0; d];
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::MalformedData(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    d + 1,
                    fields.len()
                )));
            }
            for (slot, field) in x.iter_mut().zip(&fields[..d]) {
                *slot = field
                    .parse::<Real>()
                    .map_err(|e| Error::MalformedData(format!("row {}: {e}", lineno + 2)))?;
            }
            let y = fields[d]
                .parse::<Real>()
                .map_err(|e| Error::MalformedData(format!("row {}: {e}", lineno + 2)))?;
            set.push(&x, y)?;
        }
        Ok(set)
    }
}

/// A label distribution that can be sampled in batches.
pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, m: usize, stream: RandomStream) -> Result<SampleSet>;
}

fn check_unit_direction(w: &[Real], d: usize) -> Result<()> {
    if w.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: w.len(),
        });
    }
    let norm: Real = w.iter().map(|v| v * v).sum::<Real>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "w",
            format!("norm {norm} is not 1 within 1e-9"),
        ));
    }
    Ok(())
}

#[inline]
fn dot(a: &[Real], b: &[Real]) -> Real {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[inline]
fn checked_projection(gamma: Real, w: &[Real], x: &[Real]) -> Result<Real> {
    let t = gamma * dot(w, x);
    if !t.is_finite() || t.abs() > MOD1_DOMAIN_LIMIT {
        return Err(Error::NonFinite {
            context: "scalar projection gamma <w, x>",
        });
    }
    Ok(t)
}

/// Planted distribution: x ~ N(0, I_d), label `gamma <w, x> + xi mod 1` with
/// xi ~ N(0, beta); labels land in [-1/2, 1/2).
pub struct ClweSampler {
    params: ClweParams,
    w: Vec<Real>,
    noise_sd: Real,
}

impl ClweSampler {
    pub fn new(params: ClweParams, w: Vec<Real>) -> Result<Self> {
        check_unit_direction(&w, params.d)?;
        Ok(ClweSampler {
            noise_sd: params.beta.sqrt(),
            params,
            w,
        })
    }

    pub fn params(&self) -> ClweParams {
        self.params
    }
}

impl Sampler for ClweSampler {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn sample(&self, m: usize, stream: RandomStream) -> Result<SampleSet> {
        if m == 0 {
            return Err(Error::invalid("m", "need at least one sample"));
        }
        let mut rng = stream.rng();
        let mut set = SampleSet::with_capacity(self.params.d, m)?;
        let mut x = vec![0.0; self.params.d];
        for _ in 0..m {
            for v in &mut x {
                *v = StandardNormal.sample(&mut rng);
            }
            let noise: Real = StandardNormal.sample(&mut rng);
            let t = checked_projection(self.params.gamma, &self.w, &x)?;
            set.push(&x, mod1_raw(t + self.noise_sd * noise))?;
        }
        Ok(set)
    }
}

/// Null distribution: x ~ N(0, I_d) and an independent uniform label on
/// [-1/2, 1/2).
pub struct NullSampler {
    d: usize,
}

impl NullSampler {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension must be at least 1"));
        }
        Ok(NullSampler { d })
    }
}

impl Sampler for NullSampler {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, m: usize, stream: RandomStream) -> Result<SampleSet> {
        if m == 0 {
            return Err(Error::invalid("m", "need at least one sample"));
        }
        let mut rng = stream.rng();
        let mut set = SampleSet::with_capacity(self.d, m)?;
        let mut x = vec![0.0; self.d];
        for _ in 0..m {
            for v in &mut x {
                *v = StandardNormal.sample(&mut rng);
            }
            let y: Real = rng.random_range(-0.5..0.5);
            set.push(&x, y)?;
        }
        Ok(set)
    }
}

/// Periodic-neuron distribution: label `triangle_wave(gamma <w, x>) + xi`
/// with xi ~ N(0, sigma^2).
pub struct PeriodicNeuronSampler {
    d: usize,
    gamma: Real,
    w: Vec<Real>,
    sigma: Real,
}

impl PeriodicNeuronSampler {
    pub fn new(d: usize, gamma: Real, w: Vec<Real>, sigma: Real) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1e15) {
            return Err(Error::invalid("gamma", "must be in (0, 1e15]"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        check_unit_direction(&w, d)?;
        Ok(PeriodicNeuronSampler { d, gamma, w, sigma })
    }
}

impl Sampler for PeriodicNeuronSampler {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, m: usize, stream: RandomStream) -> Result<SampleSet> {
        if m == 0 {
            return Err(Error::invalid("m", "need at least one sample"));
        }
        let mut rng = stream.rng();
        let mut set = SampleSet::with_capacity(self.d, m)?;
        let mut x = vec![0.0; self.d];
        for _ in 0..m {
            for v in &mut x {
                *v = StandardNormal.sample(&mut rng);
            }
            let noise: Real = StandardNormal.sample(&mut rng);
            let t = checked_projection(self.gamma, &self.w, &x)?;
            set.push(&x, triangle_raw(t) + self.sigma * noise)?;
        }
        Ok(set)
    }
}

/// Network distribution: label `net(x) + xi` with xi ~ N(0, sigma^2).
pub struct NetSampler {
    net: OneHiddenLayerNet<Real>,
    sigma: Real,
}

impl NetSampler {
    pub fn new(net: OneHiddenLayerNet<Real>, sigma: Real) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        Ok(NetSampler { net, sigma })
    }

    pub fn net(&self) -> &OneHiddenLayerNet<Real> {
        &self.net
    }
}

impl Sampler for NetSampler {
    fn dim(&self) -> usize {
        self.net.input_dim()
    }

    fn sample(&self, m: usize, stream: RandomStream) -> Result<SampleSet> {
        if m == 0 {
            return Err(Error::invalid("m", "need at least one sample"));
        }
        let d = self.net.input_dim();
        let mut rng = stream.rng();
        let mut set = SampleSet::with_capacity(d, m)?;
        let mut x = vec![0.0; d];
        for _ in 0..m {
            for v in &mut x {
                *v = StandardNormal.sample(&mut rng);
            }
            let noise: Real = StandardNormal.sample(&mut rng);
            let y = self.net.eval(&x)? + self.sigma * noise;
            set.push(&x, y)?;
        }
        Ok(set)
    }
}

/// Density at `t` of `gamma * g mod 1` for g ~ N(0, 1), evaluated as the
/// shifted-Gaussian series `sum_k N(t + k; 0, gamma^2)`. Terms are added in
/// increasing |k| and the series is cut once beyond `ceil(8 gamma) + 2` with
/// both tail terms below 1e-18.
pub fn wrapped_gaussian_density(gamma: Real, t: UnitReal<Real>) -> Result<Real> {
    if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1e3) {
        return Err(Error::invalid("gamma", "must be in (0, 1e3]"));
    }
    let t = t.value();
    let norm = 1.0 / (gamma * SQRT_2PI);
    let two_var = 2.0 * gamma * gamma;
    let term = |u: Real| norm * (-(u * u) / two_var).exp();
    let k_top = (8.0 * gamma).ceil() as i64 + 2;
    let mut sum = term(t);
    let mut k = 1i64;
    loop {
        let plus = term(t + k as Real);
        let minus = term(t - k as Real);
        sum += plus + minus;
        if k >= k_top && plus < 1e-18 && minus < 1e-18 {
            break;
        }
        k += 1;
    }
    Ok(sum)
}

/// CDF of `gamma * g mod 1` at `t in [-1/2, 1/2)`, via sums of Gaussian CDF
/// differences. Independent of the density series (used as its cross-check).
pub fn wrapped_gaussian_cdf(gamma: Real, t: Real) -> Result<Real> {
    if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1e3) {
        return Err(Error::invalid("gamma", "must be in (0, 1e3]"));
    }
    if !((-0.5..=0.5).contains(&t)) {
        return Err(Error::invalid("t", "must lie in [-1/2, 1/2]"));
    }
    let phi = |z: Real| 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let k_top = (8.0 * gamma).ceil() as i64 + 3;
    let mut acc = 0.0;
    for k in -k_top..=k_top {
        let kf = k as Real;
        acc += phi((t + kf) / gamma) - phi((kf - 0.5) / gamma);
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// The bound `16 exp(-2 pi^2 gamma^2)` on the total variation between the
/// wrapped marginal and the uniform label distribution.
pub fn wrapped_tv_upper_bound(gamma: Real) -> Real {
    16.0 * (-2.0 * std::f64::consts::PI.powi(2) * gamma * gamma).exp()
}

/// Deviation of the wrapped density from 1, via the dual cosine expansion
/// `2 sum_m exp(-2 pi^2 gamma^2 m^2) cos(2 pi m t)`.
///
/// This equals `wrapped_gaussian_density(gamma, t) - 1` analytically but
/// avoids the catastrophic cancellation of the subtraction once gamma is
/// large, which is exactly the regime where the deviation is tiny.
fn wrapped_density_deviation(gamma: Real, t: Real) -> Real {
    let pi = std::f64::consts::PI;
    let decay = 2.0 * pi * pi * gamma * gamma;
    // exp(-decay m^2) < 1e-30 beyond this m; |cos| <= 1 so the tail is dust.
    let m_top = ((69.1 / decay).sqrt().ceil() as usize).max(1);
    let mut acc = 0.0;
    for m in 1..=m_top {
        let mf = m as Real;
        acc += (-decay * mf * mf).exp() * (2.0 * pi * mf * t).cos();
    }
    2.0 * acc
}

const WRAPPED_TV_NODES: usize = 1 << 14;
const WRAPPED_TV_TOLERANCE: Real = 1e-10;

/// Total variation distance between the wrapped marginal and the uniform
/// distribution on [-1/2, 1/2): `(1/2) integral |density - 1|`.
///
/// The integrand's sign changes are located by bisection first, and composite
/// Simpson (2^14 intervals, Richardson check at 2^15) runs on each smooth
/// piece; disagreement beyond 1e-10 escalates as an error.
pub fn wrapped_tv_to_uniform(gamma: Real) -> Result<Real> {
    if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1e3) {
        return Err(Error::invalid("gamma", "must be in (0, 1e3]"));
    }
    let coarse = wrapped_tv_quadrature(gamma, WRAPPED_TV_NODES);
    let fine = wrapped_tv_quadrature(gamma, 2 * WRAPPED_TV_NODES);
    let disagreement = (fine - coarse).abs();
    if disagreement > WRAPPED_TV_TOLERANCE {
        return Err(Error::ToleranceEscalation {
            context: "wrapped_tv_to_uniform",
            disagreement,
            cap: WRAPPED_TV_TOLERANCE,
        });
    }
    Ok(fine)
}

fn wrapped_tv_quadrature(gamma: Real, nodes: usize) -> Real {
    let dev = |t: Real| wrapped_density_deviation(gamma, t);
    // Scan for sign changes, then bisect each bracketing cell.
    let scan = 4096usize;
    let mut cuts = vec![-0.5];
    let mut prev_t = -0.5;
    let mut prev_v = dev(prev_t);
    for i in 1..=scan {
        let t = -0.5 + i as Real / scan as Real;
        let v = dev(t);
        if prev_v == 0.0 {
            // Zero exactly on a scan node; it is already a valid cut point.
            if *cuts.last().unwrap() < prev_t {
                cuts.push(prev_t);
            }
        } else if v != 0.0 && (prev_v < 0.0) != (v < 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev_v);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = dev(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (flo < 0.0) != (fm < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
    }
    cuts.push(0.5);

    // Each piece is one-signed and analytic, so Simpson superconverges.
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let n = (((b - a) * nodes as Real).round() as usize).max(8);
        total += simpson(dev, a, b, n).abs();
    }
    0.5 * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::random_unit_vector;
    use crate::scalar::{mod1, triangle_wave};
    use crate::{build_triangle_net, lift};
    use proptest::prelude::*;

    fn unit_e1(d: usize) -> Vec<Real> {
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        w
    }

    #[test]
    fn clwe_labels_follow_the_mod1_formula_when_noiseless() {
        let d = 4;
        let params = ClweParams::new(d, 2.0, 0.0).unwrap();
        let sampler = ClweSampler::new(params, unit_e1(d)).unwrap();
        let set = sampler.sample(500, RandomStream::new(1)).unwrap();
        for i in 0..set.len() {
            let want = mod1(2.0 * set.x(i)[0]).unwrap().value();
            assert_eq!(set.y(i), want);
            assert!((-0.5..0.5).contains(&set.y(i)));
        }
    }

    #[test]
    fn clwe_label_distribution_matches_wrapped_cdf() {
        // beta = 0, gamma = 1: empirical label CDF vs the wrapped Gaussian CDF.
        let d = 2;
        let params = ClweParams::new(d, 1.0, 0.0).unwrap();
        let sampler = ClweSampler::new(params, unit_e1(d)).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(7)).unwrap();
        let mut labels = set.labels().to_vec();
        labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = labels.len() as Real;
        let mut ks: Real = 0.0;
        for (i, &v) in labels.iter().enumerate() {
            let c = wrapped_gaussian_cdf(1.0, v).unwrap();
            let hi = (i as Real + 1.0) / n - c;
            let lo = c - i as Real / n;
            ks = ks.max(hi.max(lo));
        }
        assert!(ks <= 0.01, "KS distance {ks}");
    }

    #[test]
    fn null_label_moments() {
        let sampler = NullSampler::new(3).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(2)).unwrap();
        let n = set.len() as Real;
        let mean = set.labels().iter().sum::<Real>() / n;
        let var = set.labels().iter().map(|y| (y - mean) * (y - mean)).sum::<Real>() / n;
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() <= 0.002, "var {var}");

        // labels independent of x: empirical correlation with x_1.
        let mut cov = 0.0;
        let mut x_var = 0.0;
        for i in 0..set.len() {
            let x1 = set.x(i)[0];
            cov += x1 * (set.y(i) - mean);
            x_var += x1 * x1;
        }
        let corr = (cov / n) / ((x_var / n).sqrt() * var.sqrt());
        assert!(corr.abs() <= 0.01, "corr {corr}");
    }

    #[test]
    fn periodic_neuron_labels_respect_range_and_moments() {
        let d = 8;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(3)).unwrap();
        let clean = PeriodicNeuronSampler::new(d, 32.0, w.clone(), 0.0).unwrap();
        let set = clean.sample(100_000, RandomStream::new(4)).unwrap();
        let mut second = 0.0;
        for i in 0..set.len() {
            let y = set.y(i);
            assert!((-0.25..=0.25).contains(&y));
            second += y * y;
        }
        second /= set.len() as Real;
        assert!((second - 1.0 / 48.0).abs() <= 0.002, "second moment {second}");
    }

    #[test]
    fn periodic_neuron_noise_variance_is_sigma_squared() {
        let d = 6;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(5)).unwrap();
        let sampler = PeriodicNeuronSampler::new(d, 3.0, w.clone(), 0.1).unwrap();
        let set = sampler.sample(100_000, RandomStream::new(6)).unwrap();
        let mut acc = 0.0;
        for i in 0..set.len() {
            let t = 3.0 * dot(&w, set.x(i));
            let r = set.y(i) - triangle_wave(t).unwrap();
            acc += r * r;
        }
        let var = acc / set.len() as Real;
        assert!((var - 0.01).abs() <= 0.001, "residual var {var}");
    }

    #[test]
    fn clwe_and_periodic_neuron_agree_through_the_wave_when_noiseless() {
        // Same stream => same inputs; folding a noiseless planted label equals
        // the noiseless periodic-neuron label exactly.
        let d = 5;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(8)).unwrap();
        let clwe = ClweSampler::new(ClweParams::new(d, 3.5, 0.0).unwrap(), w.clone()).unwrap();
        let pn = PeriodicNeuronSampler::new(d, 3.5, w, 0.0).unwrap();
        let s = RandomStream::new(9);
        let a = clwe.sample(2_000, s).unwrap();
        let b = pn.sample(2_000, s).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.x(i), b.x(i));
            assert_eq!(triangle_wave(a.y(i)).unwrap(), b.y(i));
        }
    }

    #[test]
    fn net_sampler_matches_periodic_neuron_inside_the_window() {
        let d = 6;
        let gamma = 2.0;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(10)).unwrap();
        let net = lift(&build_triangle_net::<Real>(3).unwrap(), gamma, &w).unwrap();
        let ns = NetSampler::new(net, 0.0).unwrap();
        let pn = PeriodicNeuronSampler::new(d, gamma, w.clone(), 0.0).unwrap();
        let s = RandomStream::new(11);
        let a = ns.sample(5_000, s).unwrap();
        let b = pn.sample(5_000, s).unwrap();
        let mut inside = 0usize;
        for i in 0..a.len() {
            assert!(a.y(i).abs() <= 0.25 + 1e-12);
            let t = gamma * dot(&w, a.x(i));
            if t.abs() <= 3.0 {
                inside += 1;
                assert!((a.y(i) - b.y(i)).abs() <= 1e-9);
            }
        }
        assert!(inside > 4_000);
    }

    #[test]
    fn zero_net_labels_are_pure_noise() {
        let net = OneHiddenLayerNet::new(vec![0.0], vec![vec![1.0, 0.0, 0.0]], vec![0.0]).unwrap();
        let ns = NetSampler::new(net, 0.05).unwrap();
        let set = ns.sample(50_000, RandomStream::new(12)).unwrap();
        let n = set.len() as Real;
        let mean = set.labels().iter().sum::<Real>() / n;
        let var = set.labels().iter().map(|y| (y - mean) * (y - mean)).sum::<Real>() / n;
        assert!(mean.abs() <= 9.0 * 0.05 / n.sqrt());
        assert!((var - 0.0025).abs() <= 0.0002, "var {var}");
    }

    #[test]
    fn wrapped_density_is_flat_for_large_gamma() {
        for t in [-0.5, -0.21, 0.0, 0.33, 0.49] {
            let p = wrapped_gaussian_density(5.0, UnitReal::new(t).unwrap()).unwrap();
            assert!((p - 1.0).abs() <= 1e-10, "p({t}) = {p}");
        }
    }

    #[test]
    fn wrapped_density_normalizes() {
        for gamma in [0.25, 0.5, 1.0, 5.0] {
            let mass = simpson(
                |t| wrapped_gaussian_density(gamma, UnitReal::new(t.min(0.49999999999)).unwrap()).unwrap(),
                -0.5,
                0.5,
                1 << 14,
            );
            assert!((mass - 1.0).abs() <= 1e-12, "gamma={gamma}: mass {mass}");
        }
    }

    #[test]
    fn wrapped_density_matches_cdf_difference_oracle() {
        // Independent oracle: central difference of the erf-based CDF with one
        // Richardson extrapolation step.
        let gamma = 0.5;
        let h = 1e-4;
        let oracle = |t: Real, h: Real| {
            (wrapped_gaussian_cdf(gamma, t + h).unwrap() - wrapped_gaussian_cdf(gamma, t - h).unwrap())
                / (2.0 * h)
        };
        for t in [0.0, 0.2, -0.35] {
            let d_h = oracle(t, h);
            let d_h2 = oracle(t, h / 2.0);
            let extrapolated = (4.0 * d_h2 - d_h) / 3.0;
            let series = wrapped_gaussian_density(gamma, UnitReal::new(t).unwrap()).unwrap();
            assert!(
                (series - extrapolated).abs() <= 1e-9,
                "t={t}: {series} vs {extrapolated}"
            );
        }
    }

    #[test]
    fn density_deviation_matches_direct_subtraction_where_benign() {
        for gamma in [0.25, 0.5, 1.0] {
            for i in -10..=10 {
                let t = i as Real / 21.0;
                let direct =
                    wrapped_gaussian_density(gamma, UnitReal::new(t).unwrap()).unwrap() - 1.0;
                let dual = wrapped_density_deviation(gamma, t);
                assert!(
                    (direct - dual).abs() <= 1e-12,
                    "gamma={gamma} t={t}: {direct} vs {dual}"
                );
            }
        }
    }

    #[test]
    fn wrapped_tv_respects_the_exponential_bound() {
        for gamma in [0.5, 1.0] {
            let tv = wrapped_tv_to_uniform(gamma).unwrap();
            let bound = wrapped_tv_upper_bound(gamma);
            assert!(tv <= bound, "gamma={gamma}: {tv} > {bound}");
        }
        assert!(wrapped_tv_to_uniform(0.5).unwrap() <= 0.1153);
        assert!(wrapped_tv_to_uniform(1.0).unwrap() <= 4.3e-8);
    }

    #[test]
    fn wrapped_tv_is_monotone_and_vanishes() {
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let tvs: Vec<Real> = grid.iter().map(|&g| wrapped_tv_to_uniform(g).unwrap()).collect();
        for pair in tvs.windows(2) {
            assert!(pair[1] <= pair[0], "not monotone: {tvs:?}");
        }
        assert!(tvs[4] <= 1e-12, "gamma=4 tv {}", tvs[4]);
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let d = 3;
        let w: Vec<Real> = random_unit_vector(d, RandomStream::new(20)).unwrap();
        let sampler = PeriodicNeuronSampler::new(d, 1.7, w, 0.3).unwrap();
        let set = sampler.sample(50, RandomStream::new(21)).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf, &["config echo line".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config echo line\nx_1,x_2,x_3,y\n"));
        let back = SampleSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(SampleSet::read_csv("".as_bytes()).is_err());
        assert!(SampleSet::read_csv("x_1,z\n1,2\n".as_bytes()).is_err());
        assert!(SampleSet::read_csv("x_1,y\n1.0\n".as_bytes()).is_err());
        assert!(SampleSet::read_csv("x_1,y\n1.0,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn sampler_input_validation() {
        assert!(ClweParams::new(0, 1.0, 0.0).is_err());
        assert!(ClweParams::new(2, -1.0, 0.0).is_err());
        let params = ClweParams::new(2, 1.0, 1e-4).unwrap();
        assert!(ClweSampler::new(params, vec![0.5, 0.5]).is_err());
        assert!(ClweSampler::new(params, vec![1.0]).is_err());
        let ok = ClweSampler::new(params, vec![1.0, 0.0]).unwrap();
        assert!(ok.sample(0, RandomStream::new(0)).is_err());
    }

    proptest! {
        #[test]
        fn sampling_is_reproducible(seed in 0u64..50, stream_id in 0u64..50) {
            let s = RandomStream::with_stream(seed, stream_id);
            let sampler = NullSampler::new(4).unwrap();
            let a = sampler.sample(32, s).unwrap();
            let b = sampler.sample(32, s).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
