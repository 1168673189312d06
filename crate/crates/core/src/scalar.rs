//! Deterministic scalar primitives: mod-1 reduction with representatives in
//! [-1/2, 1/2), the 1-periodic triangle wave, and fixed-order summation.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};

/// Floating-point scalar the core math is generic over (f32 or f64).
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

/// Inputs beyond this magnitude are rejected by [`mod1`]: past 2^50 the spacing
/// of representable doubles approaches the unit period and the reduction loses
/// all precision. Experiment magnitudes stay far below this.
pub const MOD1_DOMAIN_LIMIT: f64 = 1.125_899_906_842_624e15; // 2^50

/// A real number in [-1/2, 1/2), the canonical mod-1 representative.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct UnitReal<F>(F);

impl<F: Scalar> UnitReal<F> {
    pub fn new(value: F) -> Result<Self> {
        let half = F::from(0.5).unwrap();
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "UnitReal::new",
            });
        }
        if value < -half || value >= half {
            return Err(Error::invalid(
                "value",
                format!("{value} is outside [-1/2, 1/2)"),
            ));
        }
        Ok(UnitReal(value))
    }

    pub fn value(self) -> F {
        self.0
    }
}

/// Reduces `x` modulo 1 to the representative in [-1/2, 1/2).
///
/// Ties at exact half-integers map to -1/2, so `mod1(0.5) == mod1(1.5) == -1/2`.
/// Computed as `x - round(x)` with a tie fix-up; the subtraction is exact for
/// `|x| <= 2^50`, and inputs beyond that are rejected.
pub fn mod1<F: Scalar>(x: F) -> Result<UnitReal<F>> {
    if !x.is_finite() {
        return Err(Error::NonFinite { context: "mod1" });
    }
    if x.abs() > F::from(MOD1_DOMAIN_LIMIT).unwrap() {
        return Err(Error::Mod1DomainExceeded {
            magnitude: x.abs().to_f64().unwrap_or(f64::INFINITY),
        });
    }
    Ok(UnitReal(mod1_raw(x)))
}

/// Unchecked mod-1 core. Callers guarantee `x` finite and within the domain
/// limit; samplers rely on this after validating their own parameters.
#[inline]
pub(crate) fn mod1_raw<F: Scalar>(x: F) -> F {
    // Float::round ties away from zero, so the only out-of-range case is a
    // positive remainder of exactly +1/2 (negative ties already land on -1/2).
    let half = F::from(0.5).unwrap();
    let t = x - x.round();
    if t >= half {
        t - F::one()
    } else {
        t
    }
}

/// The 1-periodic, 1-Lipschitz triangle wave with range [-1/4, 1/4].
///
/// On each period it rises with slope +1 through the integers and falls with
/// slope -1 through the half-integers; `triangle_wave(0) == 0` and
/// `triangle_wave(0.75) == -0.25`.
pub fn triangle_wave<F: Scalar>(x: F) -> Result<F> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "triangle_wave",
        });
    }
    if x.abs() > F::from(MOD1_DOMAIN_LIMIT).unwrap() {
        return Err(Error::Mod1DomainExceeded {
            magnitude: x.abs().to_f64().unwrap_or(f64::INFINITY),
        });
    }
    Ok(triangle_raw(x))
}

/// Unchecked triangle-wave core; same contract as [`mod1_raw`].
///
/// Evaluated branch-wise on the reduced argument rather than through the
/// equivalent floor expression, so quarter-integer inputs stay exact.
#[inline]
pub(crate) fn triangle_raw<F: Scalar>(x: F) -> F {
    let t = mod1_raw(x);
    let quarter = F::from(0.25).unwrap();
    let half = F::from(0.5).unwrap();
    if t > quarter {
        half - t
    } else if t < -quarter {
        -half - t
    } else {
        t
    }
}

/// Sums a slice in a fixed pairwise order: deterministic across thread counts
/// and accurate enough to keep dyadic-rational sums exact at widths up to 10^5.
pub fn pairwise_sum<F: Scalar>(xs: &[F]) -> F {
    if xs.len() <= 8 {
        let mut acc = F::zero();
        for &v in xs {
            acc = acc + v;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean via [`pairwise_sum`]; errors on an empty slice.
pub fn pairwise_mean<F: Scalar>(xs: &[F]) -> Result<F> {
    if xs.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(pairwise_sum(xs) / F::from(xs.len()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Reference form of the triangle wave: |x - 3/4 - floor(x - 1/4)| - 1/4.
    fn triangle_by_floor(x: f64) -> f64 {
        (x - 0.75 - (x - 0.25).floor()).abs() - 0.25
    }

    #[test]
    fn mod1_examples() {
        assert_abs_diff_eq!(mod1(0.6f64).unwrap().value(), -0.4, epsilon = 1e-15);
        assert_eq!(mod1(0.25f64).unwrap().value(), 0.25);
        assert_eq!(mod1(3.75f64).unwrap().value(), -0.25);
    }

    #[test]
    fn mod1_ties_map_to_negative_half() {
        for x in [0.5f64, 1.5, 2.5, -0.5, -1.5, 7.5, -1024.5] {
            assert_eq!(mod1(x).unwrap().value(), -0.5, "tie at {x}");
        }
    }

    #[test]
    fn mod1_rejects_bad_inputs() {
        assert!(mod1(f64::NAN).is_err());
        assert!(mod1(f64::INFINITY).is_err());
        assert!(mod1(2.0f64.powi(51)).is_err());
        assert!(mod1(2.0f64.powi(49)).is_ok());
    }

    #[test]
    fn triangle_wave_examples() {
        assert_eq!(triangle_wave(0.0f64).unwrap(), 0.0);
        assert_eq!(triangle_wave(0.75f64).unwrap(), -0.25);
        assert_eq!(triangle_wave(1.0f64).unwrap(), 0.0);
        assert!(triangle_wave(f64::NAN).is_err());
    }

    #[test]
    fn triangle_wave_matches_floor_form_on_grid() {
        // 1/64 steps over [-8, 8]; both forms should agree to the ulp scale.
        for i in -512..=512 {
            let x = i as f64 / 64.0;
            let a = triangle_wave(x).unwrap();
            let b = triangle_by_floor(x);
            assert!((a - b).abs() <= 1e-15, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn triangle_wave_range() {
        for i in -1000..=1000 {
            let x = i as f64 * 0.0137;
            let v = triangle_wave(x).unwrap();
            assert!((-0.25..=0.25).contains(&v));
        }
    }

    #[test]
    fn generic_over_f32() {
        assert_eq!(mod1(0.75f32).unwrap().value(), -0.25f32);
        assert_eq!(triangle_wave(0.75f32).unwrap(), -0.25f32);
        assert_eq!(pairwise_sum(&[0.25f32; 8]), 2.0f32);
    }

    #[test]
    fn unit_real_rejects_out_of_range() {
        assert!(UnitReal::new(0.5f64).is_err());
        assert!(UnitReal::new(-0.5f64).is_ok());
        assert!(UnitReal::new(0.499999f64).is_ok());
        assert!(UnitReal::new(f64::NAN).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&xs), naive, epsilon = 1e-12);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn mod1_is_in_range(x in -1e12f64..1e12) {
            let t = mod1(x).unwrap().value();
            prop_assert!((-0.5..0.5).contains(&t));
        }

        #[test]
        fn mod1_round_trip(x in -1.0995e12f64..1.0995e12) {
            // mod1(x) + round(x - mod1(x)) == x within 1e-9 for |x| <= 2^40.
            let t = mod1(x).unwrap().value();
            let k = (x - t).round();
            prop_assert!((t + k - x).abs() <= 1e-9);
        }

        #[test]
        fn triangle_wave_is_periodic(x in -4096f64..4096.0, k in -1000i64..1000) {
            // |x| kept below 2^12 so x + k itself is exact to well under the
            // 1e-12 tolerance; the 1-Lipschitz wave passes argument rounding
            // straight through, so larger magnitudes test f64, not the wave.
            let a = triangle_wave(x).unwrap();
            let b = triangle_wave(x + k as f64).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn triangle_wave_is_lipschitz(x in -1e4f64..1e4, y in -1e4f64..1e4) {
            let a = triangle_wave(x).unwrap();
            let b = triangle_wave(y).unwrap();
            prop_assert!((a - b).abs() <= (x - y).abs() + 1e-12);
        }

        #[test]
        fn triangle_wave_factors_through_mod1(x in -1e6f64..1e6, k in -100i64..100) {
            let t = mod1(x).unwrap().value();
            let a = triangle_wave(t + k as f64).unwrap();
            let b = triangle_wave(x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
