//! Parameter plumbing across the lattice reduction chain: from a target label
//! noise level to the implied modulus, discrete-noise width, and approximation
//! factor, with every admissibility condition checked explicitly and all large
//! magnitudes carried as natural logs. Nothing here solves a lattice problem;
//! the calculator only transports parameters and reports which conditions hold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

const LN_2: Real = std::f64::consts::LN_2;

/// One admissibility condition with both sides evaluated, so a reader applying
/// a different asymptotic convention can re-judge it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub satisfied: bool,
    pub lhs: Real,
    pub rhs: Real,
}

/// Extra fields reported by [`small_noise_regime`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaInfo {
    pub eta: Real,
    /// delta = eta / (1 - eta): the approximation factor is 2^O(n^delta).
    pub delta_exponent: Real,
    /// Witness radius sqrt(d^(1+eta) ln d) * ln d for the network class.
    pub r_witness: Real,
    /// log2(gapsvp factor) / n^delta; bounded by a constant over a d-grid.
    pub exponent_ratio: Real,
}

/// The derived parameter chain. All derived fields are reproducible from
/// `(n, d, ln_sigma, poly_slack, c_const)` alone; magnitudes that can be
/// astronomically small or large (sigma, beta, q, alpha) are stored as
/// natural logs and stay finite for ln(1/sigma) up to 1e6 and beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub n: u64,
    pub d: u64,
    pub ln_sigma: Real,
    pub poly_slack: Real,
    /// The unspecified absolute constant of the continuous-to-discrete
    /// reduction; a configuration knob defaulting to 1.
    pub c_const: Real,
    pub ln_beta: Real,
    pub gamma: Real,
    pub ln_q: Real,
    pub ln_alpha: Real,
    pub sigma_prime: Real,
    /// ln(n sqrt(d) / beta).
    pub log_gapsvp_factor: Real,
    pub constraints: Vec<ConstraintCheck>,
    pub sigma_prime_note: String,
    pub eta: Option<EtaInfo>,
}

/// `ln(n sqrt(d) / beta) = ln n + (1/2) ln d - ln beta`.
pub fn gapsvp_factor_ln(n: u64, d: u64, ln_beta: Real) -> Real {
    (n as Real).ln() + 0.5 * (d as Real).ln() - ln_beta
}

/// Derives the full chain from `(n, d, sigma)`:
/// `beta = sigma / d^poly_slack`, `gamma = 2 sqrt(d ln d) ln d`, then
/// `alpha = c^-1 beta / sqrt(d)`, `q = 2 d / beta`, `sigma' = alpha q`, and the
/// implied approximation factor `n sqrt(d) / beta` in log domain.
///
/// The checked conditions replace asymptotic requirements with named concrete
/// surrogates: `poly(n)` becomes `n^3` and `omega(sqrt(log n))` becomes
/// `sqrt(ln n) ln(ln n + e)`. The report carries both sides of each.
pub fn derive_parameter_chain(
    n: u64,
    d: u64,
    ln_sigma: Real,
    poly_slack: Real,
    c_const: Real,
) -> Result<ParamReport> {
    if n < 2 {
        return Err(Error::invalid("n", "must be at least 2"));
    }
    if d < 2 {
        return Err(Error::invalid("d", "must be at least 2"));
    }
    if !(ln_sigma.is_finite() && ln_sigma < 0.0) {
        return Err(Error::invalid("ln_sigma", "need sigma in (0, 1), i.e. ln_sigma < 0"));
    }
    if !(poly_slack.is_finite() && poly_slack >= 1.0) {
        return Err(Error::invalid("poly_slack", "must be at least 1"));
    }
    if !(c_const.is_finite() && c_const > 0.0) {
        return Err(Error::invalid("c_const", "must be positive"));
    }

    let nf = n as Real;
    let df = d as Real;
    let ln_d = df.ln();
    let ln_n = nf.ln();

    let ln_beta = ln_sigma - poly_slack * ln_d;
    let gamma = 2.0 * (df * ln_d).sqrt() * ln_d;
    let ln_q = (2.0 * df).ln() - ln_beta;
    let ln_alpha = -c_const.ln() + ln_beta - 0.5 * ln_d;
    let sigma_prime = 2.0 * df.sqrt() / c_const;
    let log_gapsvp_factor = gapsvp_factor_ln(n, d, ln_beta);

    for (name, v) in [
        ("ln_beta", ln_beta),
        ("gamma", gamma),
        ("ln_q", ln_q),
        ("ln_alpha", ln_alpha),
        ("sigma_prime", sigma_prime),
        ("log_gapsvp_factor", log_gapsvp_factor),
    ] {
        if !v.is_finite() {
            return Err(Error::invalid("chain", format!("{name} is non-finite")));
        }
    }

    let n_cubed = nf * nf * nf;
    let constraints = vec![
        ConstraintCheck {
            name: "ln(1/beta) <= n^3".into(),
            satisfied: -ln_beta <= n_cubed,
            lhs: -ln_beta,
            rhs: n_cubed,
        },
        ConstraintCheck {
            name: "3n ln(d/beta) <= d".into(),
            satisfied: 3.0 * nf * (ln_d - ln_beta) <= df,
            lhs: 3.0 * nf * (ln_d - ln_beta),
            rhs: df,
        },
        ConstraintCheck {
            name: "d <= n^3".into(),
            satisfied: df <= n_cubed,
            lhs: df,
            rhs: n_cubed,
        },
        ConstraintCheck {
            name: "alpha q > 2 sqrt(n)".into(),
            satisfied: sigma_prime > 2.0 * nf.sqrt(),
            lhs: sigma_prime,
            rhs: 2.0 * nf.sqrt(),
        },
        ConstraintCheck {
            name: "sigma' >= sqrt(ln n) ln(ln n + e)".into(),
            satisfied: sigma_prime >= ln_n.sqrt() * (ln_n + std::f64::consts::E).ln(),
            lhs: sigma_prime,
            rhs: ln_n.sqrt() * (ln_n + std::f64::consts::E).ln(),
        },
    ];

    Ok(ParamReport {
        n,
        d,
        ln_sigma,
        poly_slack,
        c_const,
        ln_beta,
        gamma,
        ln_q,
        ln_alpha,
        sigma_prime,
        log_gapsvp_factor,
        constraints,
        sigma_prime_note: "sigma' = alpha q = (c^-1 beta / sqrt(d)) (2 d / beta) = 2 c^-1 sqrt(d); \
                           the leading 2 from q = 2 d / beta is carried, not dropped."
            .into(),
        eta: None,
    })
}

/// The super-polynomially-small-noise regime: `sigma = 2^(-d^eta)` for a
/// constant `eta in (0, 1/2)`, `n = round(d^(1-eta))`, slack 1, c = 1.
///
/// Reports the exponent ratio `log2(factor) / n^(eta/(1-eta))`, which stays
/// bounded as d grows: the factor is `2^O(n^delta)` for `delta = eta/(1-eta)`.
pub fn small_noise_regime(eta: Real, d: u64) -> Result<ParamReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::invalid("eta", "must lie in the open interval (0, 1/2)"));
    }
    if d < 4 {
        return Err(Error::invalid("d", "must be at least 4"));
    }
    let df = d as Real;
    let ln_sigma = -df.powf(eta) * LN_2;
    let n = df.powf(1.0 - eta).round() as u64;
    if n < 2 {
        return Err(Error::invalid("n", "derived dimension collapsed below 2"));
    }
    let mut report = derive_parameter_chain(n, d, ln_sigma, 1.0, 1.0)?;
    let delta_exponent = eta / (1.0 - eta);
    let r_witness = (df.powf(1.0 + eta) * df.ln()).sqrt() * df.ln();
    let exponent_ratio = (report.log_gapsvp_factor / LN_2) / (n as Real).powf(delta_exponent);
    report.eta = Some(EtaInfo {
        eta,
        delta_exponent,
        r_witness,
        exponent_ratio,
    });
    Ok(report)
}
