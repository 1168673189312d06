//! One-hidden-layer ReLU networks, including the explicit width-(4R+2)
//! construction that reproduces the triangle wave exactly on [-R, R] and
//! vanishes outside it. All biases in that construction are quarter-integers,
//! so its evaluation on the quarter grid is exact dyadic arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// f(x) = sum_j a_j * max(<w_j, x> + b_j, 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneHiddenLayerNet<F> {
    k: usize,
    d: usize,
    a: Vec<F>,
    b: Vec<F>,
    #[serde(rename = "W")]
    w: Vec<Vec<F>>,
}

impl<F: Scalar> OneHiddenLayerNet<F> {
    pub fn new(a: Vec<F>, w: Vec<Vec<F>>, b: Vec<F>) -> Result<Self> {
        let k = a.len();
        if w.len() != k || b.len() != k {
            return Err(Error::invalid(
                "net",
                format!("a/W/b lengths disagree: {} / {} / {}", k, w.len(), b.len()),
            ));
        }
        if k == 0 {
            return Err(Error::invalid("net", "width must be at least 1"));
        }
        let d = w[0].len();
        if d == 0 {
            return Err(Error::invalid("net", "input dimension must be at least 1"));
        }
        for row in &w {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        let finite = a.iter().chain(b.iter()).chain(w.iter().flatten());
        for v in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "OneHiddenLayerNet::new",
                });
            }
        }
        Ok(OneHiddenLayerNet { k, d, a, b, w })
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn outer(&self) -> &[F] {
        &self.a
    }

    pub fn biases(&self) -> &[F] {
        &self.b
    }

    pub fn weights(&self) -> &[Vec<F>] {
        &self.w
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [F], &mut [Vec<F>], &mut [F]) {
        (&mut self.a, &mut self.w, &mut self.b)
    }

    /// Evaluates the network. The ReLU terms are accumulated in index order
    /// with pairwise summation, so results are reproducible bit-for-bit.
    pub fn eval(&self, x: &[F]) -> Result<F> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[F]) -> F {
        self.pairwise_terms(x, 0, self.k)
    }

    fn pairwise_terms(&self, x: &[F], lo: usize, hi: usize) -> F {
        if hi - lo <= 8 {
            let mut acc = F::zero();
            for j in lo..hi {
                acc = acc + self.term(x, j);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            self.pairwise_terms(x, lo, mid) + self.pairwise_terms(x, mid, hi)
        }
    }

    #[inline]
    fn term(&self, x: &[F], j: usize) -> F {
        let row = &self.w[j];
        let mut dot = F::zero();
        for i in 0..self.d {
            dot = dot + row[i] * x[i];
        }
        self.a[j] * (dot + self.b[j]).max(F::zero())
    }
}

/// A one-hidden-layer network with scalar input (d = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarNet<F>(OneHiddenLayerNet<F>);

impl<F: Scalar> ScalarNet<F> {
    pub fn new(net: OneHiddenLayerNet<F>) -> Result<Self> {
        if net.input_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: net.input_dim(),
            });
        }
        Ok(ScalarNet(net))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn inner(&self) -> &OneHiddenLayerNet<F> {
        &self.0
    }

    pub fn eval(&self, t: F) -> F {
        self.0.eval_unchecked(&[t])
    }
}

/// Builds the explicit scalar network that equals
/// `triangle_wave(x) * 1{|x| <= r}` pointwise.
///
/// The construction uses exactly `4r + 2` ReLU units: a `(x + r)_+` ramp with
/// coefficient +1, a `-(x - r)_+` ramp with coefficient -1, and for
/// k = 1..=2r the pair `+2 (x + r + 1/4 - k)_+`, `-2 (x + r + 3/4 - k)_+`.
/// Every bias is a quarter-integer and hence exactly representable.
pub fn build_triangle_net<F: Scalar>(r: u32) -> Result<ScalarNet<F>> {
    if r == 0 {
        return Err(Error::invalid("r", "radius must be a positive integer"));
    }
    if r > 1 << 20 {
        return Err(Error::invalid("r", "radius above 2^20 is not supported"));
    }
    let rf = F::from(r).unwrap();
    let one = F::one();
    let two = F::from(2.0).unwrap();
    let quarter = F::from(0.25).unwrap();
    let three_quarters = F::from(0.75).unwrap();

    let width = 4 * r as usize + 2;
    let mut a = Vec::with_capacity(width);
    let mut b = Vec::with_capacity(width);

    a.push(one);
    b.push(rf);
    a.push(-one);
    b.push(-rf);
    for k in 1..=(2 * r) {
        let kf = F::from(k).unwrap();
        a.push(two);
        b.push(rf + quarter - kf);
        a.push(-two);
        b.push(rf + three_quarters - kf);
    }
    let w = vec![vec![one]; width];
    ScalarNet::new(OneHiddenLayerNet::new(a, w, b)?)
}

/// Lifts a scalar network to a d-dimensional one computing
/// `net1d(gamma * <w, x>)`: every weight row becomes `gamma * s_j * w` for the
/// scalar weight `s_j`, outer coefficients and biases carry over unchanged.
pub fn lift<F: Scalar>(
    net1d: &ScalarNet<F>,
    gamma: F,
    direction: &[F],
) -> Result<OneHiddenLayerNet<F>> {
    if direction.is_empty() {
        return Err(Error::invalid("direction", "dimension must be at least 1"));
    }
    if !(gamma.is_finite() && gamma > F::zero()) {
        return Err(Error::invalid("gamma", "must be finite and positive"));
    }
    let norm = direction
        .iter()
        .fold(F::zero(), |acc, &x| acc + x * x)
        .sqrt();
    let tol = F::from(1e-9).unwrap().max(F::epsilon() * F::from(16.0).unwrap());
    if (norm - F::one()).abs() > tol {
        return Err(Error::invalid(
            "direction",
            format!("norm {norm} is not 1 within tolerance"),
        ));
    }
    let inner = net1d.inner();
    let w = inner
        .weights()
        .iter()
        .map(|row| {
            let s = gamma * row[0];
            direction.iter().map(|&wi| s * wi).collect()
        })
        .collect();
    OneHiddenLayerNet::new(inner.outer().to_vec(), w, inner.biases().to_vec())
}
