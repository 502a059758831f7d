//! Closed-form bounds and estimator statistics for the Poisson-count
//! family, plus the qubit CRB.  These are the analytic baselines the
//! numerical engine is checked against and the normalizers used by the
//! figure-data commands.

use crate::{Error, Result};

fn check_open_unit(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Ok(())
}

fn check_positive_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    Ok(())
}

/// θ^a computed as exp(a·lnθ); well-behaved for tiny θ and fractional a.
fn theta_pow(theta: f64, a: f64) -> f64 {
    (a * theta.ln()).exp()
}

/// Optimized two-point bound for the Poisson-count family:
/// θ²(θ^{−1/m} − 1).
pub fn poisson_barankin(theta: f64, m: u32) -> Result<f64> {
    check_open_unit(theta)?;
    check_positive_m(m)?;
    Ok(theta * theta * (theta_pow(theta, -1.0 / m as f64) - 1.0))
}

/// Exact variance of the estimator e^{−x̄} over m Poisson draws:
/// θ^{m(1−e^{−2/m})} − θ^{2m(1−e^{−1/m})}.
pub fn poisson_mle_variance(theta: f64, m: u32) -> Result<f64> {
    check_open_unit(theta)?;
    check_positive_m(m)?;
    let m = m as f64;
    let second = theta_pow(theta, m * (1.0 - (-2.0 / m).exp()));
    let mean_sq = theta_pow(theta, 2.0 * m * (1.0 - (-1.0 / m).exp()));
    Ok(second - mean_sq)
}

/// Exact mean of the estimator e^{−x̄}: θ^{m(1−e^{−1/m})}.
pub fn poisson_mle_mean(theta: f64, m: u32) -> Result<f64> {
    check_open_unit(theta)?;
    check_positive_m(m)?;
    let m = m as f64;
    Ok(theta_pow(theta, m * (1.0 - (-1.0 / m).exp())))
}

/// Reciprocal Fisher information of the Poisson-count family: −θ²lnθ/m.
pub fn poisson_crb(theta: f64, m: u32) -> Result<f64> {
    check_open_unit(theta)?;
    check_positive_m(m)?;
    Ok(-theta * theta * theta.ln() / m as f64)
}

/// Reciprocal Fisher information of the qubit family:
/// (1 − r²cos²θ)/(m r² sin²θ).  Non-finite at sinθ = 0, where the Fisher
/// information vanishes.
pub fn qubit_crb(theta: f64, m: u32, r: f64) -> Result<f64> {
    check_positive_m(m)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "r must lie in (0, 1], got {r}"
        )));
    }
    let (s, c) = theta.sin_cos();
    Ok((1.0 - r * r * c * c) / (m as f64 * r * r * s * s))
}

/// Maximum-likelihood estimate from m Poisson counts: e^{−x̄}.
///
/// The per-draw likelihood is p(x|θ) = (−lnθ)^x θ / x!, so the joint
/// log-likelihood is s·ln(−lnθ) + m·lnθ up to constants (s = Σxᵢ);
/// stationarity in μ = −lnθ gives μ = s/m, i.e. θ = e^{−x̄}.  The value
/// lands in (0, 1] automatically.
pub fn mle_poisson_estimator(counts: &[u64]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::InvalidParameter("no counts given".into()));
    }
    let s: u64 = counts.iter().sum();
    Ok((-(s as f64) / counts.len() as f64).exp())
}
