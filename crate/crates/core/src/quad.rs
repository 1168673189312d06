//! Composite Simpson quadrature with deterministic accumulation order.

/// Integrates `f` over [a, b] with `n` intervals (rounded up to even).
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n < 2 {
        2
    } else if n % 2 == 1 {
        n + 1
    } else {
        n
    };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Simpson weight for node `i` of `n + 1` nodes (n intervals, n even).
pub(crate) fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // Simpson is exact through cubics.
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 16);
        // antiderivative: x^4/4 - x^2 + x
        let want = (16.0 / 4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn converges_on_smooth_functions() {
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 1 << 10);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
