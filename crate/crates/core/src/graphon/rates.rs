//! Closed-form rate exponents for Hölder and power-law graphons: the
//! step-approximation error decays like κ^{α′} and the tail like ρ^{β′}.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLawVariant {
    Sum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub alpha_prime: f64,
    /// `∞` when the tail vanishes for small ρ.
    #[serde(serialize_with = "finite_or_inf")]
    pub beta_prime: f64,
    /// The tail bound carries an extra |log ρ|^{1/p} factor.
    pub log_factor: bool,
}

fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be a finite value >= 1, got {p}")));
    }
    Ok(())
}

/// Rates for an α-Hölder graphon over ℝ^d. In the non-compact case `beta`
/// is the moment exponent of the latent measure.
pub fn holder_rates(d: u32, alpha: f64, beta: f64, p: f64, compact: bool, uniform: bool) -> Result<Rates> {
    if d == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("Hölder exponent must lie in (0,1], got {alpha}")));
    }
    check_p(p)?;
    let d = d as f64;
    if compact {
        let alpha_prime = if uniform { alpha / d } else { alpha / (p * alpha + d) };
        return Ok(Rates {
            alpha_prime,
            beta_prime: f64::INFINITY,
            log_factor: false,
        });
    }
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("moment exponent must be positive, got {beta}")));
    }
    if p >= beta / alpha {
        return Err(Error::Integrability(format!(
            "non-compact Hölder bound needs p < β/α = {}",
            beta / alpha
        )));
    }
    let beta_prime = if beta.is_infinite() { f64::INFINITY } else { beta / (p * alpha) - 1.0 };
    let ratio = if beta_prime.is_infinite() { 1.0 } else { beta_prime / (1.0 + beta_prime) };
    Ok(Rates {
        alpha_prime: alpha / (p * alpha + d) * ratio,
        beta_prime,
        log_factor: false,
    })
}

pub fn power_law_rates(alpha: f64, p: f64, variant: PowerLawVariant) -> Result<Rates> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("power-law exponent must lie in (0,1), got {alpha}")));
    }
    check_p(p)?;
    if p * alpha >= 1.0 {
        return Err(Error::Integrability(format!(
            "power-law graphon is in L^p only for p < 1/α = {}",
            1.0 / alpha
        )));
    }
    Ok(Rates {
        alpha_prime: 1.0 / p - alpha,
        beta_prime: (1.0 - p * alpha) / (p * alpha),
        log_factor: variant == PowerLawVariant::Product,
    })
}
