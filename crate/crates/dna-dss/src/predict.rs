//! Closed-form predictions for the recovery processes: leading-order
//! expectations, the regenerating upper bound, and the Gumbel parameters of the
//! normalized limits.
//!
//! Lower-order remainders are not modeled; a prediction is exactly its leading
//! term plus `linear * n`, and empirical tolerances absorb the rest.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::analysis::BadBlockReport;

/// Euler-Mascheroni constant, 16 significant digits.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionKind {
    Expectation,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GumbelParams {
    pub mu: f64,
    pub beta: f64,
}

/// A closed-form value in rounds, split into its n log n-scale leading term and
/// linear coefficient, plus the Gumbel limit of the normalized samples when one
/// is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub kind: PredictionKind,
    pub value: f64,
    pub leading: f64,
    #[serde(rename = "linear")]
    pub linear_coeff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gumbel: Option<GumbelParams>,
}

/// ln C(a, b) via log-gamma differences.
pub fn ln_binomial(a: u64, b: u64) -> f64 {
    assert!(b <= a, "binomial out of range");
    if b == 0 || b == a {
        return 0.0;
    }
    ln_gamma(a as f64 + 1.0) - ln_gamma(b as f64 + 1.0) - ln_gamma((a - b) as f64 + 1.0)
}

/// Expected rounds of the scalar process: n/(rho+1) (ln n + ln C(m+rho, m-1) +
/// gamma), with normalized samples tending to Gumbel(ln C(m+rho, m-1), 1).
pub fn predict_scalar(n: u64, m: u32, rho: u32) -> Prediction {
    assert!(n >= 2 && m >= 1, "need n >= 2 and m >= 1");
    let nf = n as f64;
    let r = f64::from(rho) + 1.0;
    let ln_c = ln_binomial(u64::from(m + rho), u64::from(m - 1));
    let leading = nf / r * nf.ln();
    let linear_coeff = (ln_c + EULER_GAMMA) / r;
    Prediction {
        kind: PredictionKind::Expectation,
        value: leading + linear_coeff * nf,
        leading,
        linear_coeff,
        gumbel: Some(GumbelParams { mu: ln_c, beta: 1.0 }),
    }
}

/// The storage-system reading of the scalar result: container recovery with an
/// MDS code of length M and redundancy r is the scalar process with m = M - r
/// survivors needed per row and rho = r - 1 spares.
pub fn predict_corollary(n: u64, containers: u32, redundancy: u32) -> Prediction {
    assert!(
        redundancy >= 1 && redundancy < containers,
        "need 1 <= r < M"
    );
    predict_scalar(n, containers - redundancy, redundancy - 1)
}

/// Expected maximum of m independent l-copy collectors:
/// n (ln(nm) + (l-1) ln ln n + gamma - ln((l-1)!)).
pub fn predict_ccp_max(n: u64, m: u32, ell: u32) -> Prediction {
    assert!(n >= 3 && m >= 1 && ell >= 1, "need n >= 3, m >= 1, l >= 1");
    let nf = n as f64;
    let ln_fact = ln_gamma(f64::from(ell)); // ln((l-1)!)
    let lnln = if ell > 1 { nf.ln().ln() } else { 0.0 };
    let leading = nf * (nf.ln() + f64::from(ell - 1) * lnln);
    let linear_coeff = f64::from(m).ln() + EULER_GAMMA - ln_fact;
    Prediction {
        kind: PredictionKind::Expectation,
        value: leading + linear_coeff * nf,
        leading,
        linear_coeff,
        gumbel: Some(GumbelParams {
            mu: f64::from(m).ln() - ln_fact,
            beta: 1.0,
        }),
    }
}

/// The regenerating upper bound (n/alpha*) ln n + (beta*/(b alpha*)) n from a
/// bad-blocks report. An upper bound, not an expectation; no limit law.
pub fn predict_regen_bound(n: u64, report: &BadBlockReport) -> Prediction {
    let nf = n as f64;
    let leading = report.bound.log_coeff * nf * nf.ln();
    let linear_coeff = report.bound.linear_coeff;
    Prediction {
        kind: PredictionKind::UpperBound,
        value: leading + linear_coeff * nf,
        leading,
        linear_coeff,
        gumbel: None,
    }
}

/// Gumbel CDF exp(-exp(-(x - mu)/beta)).
pub fn gumbel_cdf(x: f64, mu: f64, beta: f64) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    (-(-((x - mu) / beta)).exp()).exp()
}
