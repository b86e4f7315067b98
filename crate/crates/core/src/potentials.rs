//! The logarithmic potential, the quench scalings, the smooth potential
//! parts, and the double-obstacle subdifferential test.

use crate::error::{Error, Result};

/// Active-set tolerance: how close a value must be to +-1 to count as
/// touching the obstacle.
pub const TOL_ACTIVE: f64 = 1e-9;

/// Multiplier tolerance for sign and vanishing checks.
pub const TOL_MULT: f64 = 1e-8;

/// Polynomial with ascending coefficients, evaluated by Horner's rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("polynomial coefficient not finite".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Smooth potential derivatives: bulk f2' with its derivative f2'', and the
/// surface pair g2', g2''. Defaults are f2'(r) = g2'(r) = -r, the classical
/// double-obstacle splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSet {
    pub f2p: Polynomial,
    pub f2pp: Polynomial,
    pub g2p: Polynomial,
    pub g2pp: Polynomial,
}

impl PotentialSet {
    pub fn new(f2p: Polynomial, g2p: Polynomial) -> Self {
        let f2pp = f2p.derivative();
        let g2pp = g2p.derivative();
        Self {
            f2p,
            f2pp,
            g2p,
            g2pp,
        }
    }

    pub fn zero() -> Self {
        Self::new(
            Polynomial::new(vec![]).unwrap(),
            Polynomial::new(vec![]).unwrap(),
        )
    }
}

impl Default for PotentialSet {
    fn default() -> Self {
        Self::new(
            Polynomial::new(vec![0.0, -1.0]).unwrap(),
            Polynomial::new(vec![0.0, -1.0]).unwrap(),
        )
    }
}

/// Quench scaling family phi(alpha) = alpha^p, psi(alpha) = alpha^q with
/// p >= q, so phi <= psi on (0,1] and the ratio constant can be 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchConfig {
    pub exponent_phi: f64,
    pub exponent_psi: f64,
    pub c_phipsi: f64,
}

impl QuenchConfig {
    pub fn new(exponent_phi: f64, exponent_psi: f64, c_phipsi: f64) -> Result<Self> {
        if !(exponent_phi > 0.0) || !(exponent_psi > 0.0) {
            return Err(Error::Domain(format!(
                "quench exponents must be positive, got p={exponent_phi}, q={exponent_psi}"
            )));
        }
        if exponent_phi < exponent_psi {
            return Err(Error::Domain(format!(
                "need p >= q, got p={exponent_phi} < q={exponent_psi}"
            )));
        }
        if !(c_phipsi >= 1.0) {
            return Err(Error::Domain(format!(
                "ratio constant must be >= 1, got {c_phipsi}"
            )));
        }
        Ok(Self {
            exponent_phi,
            exponent_psi,
            c_phipsi,
        })
    }
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            exponent_phi: 1.0,
            exponent_psi: 1.0,
            c_phipsi: 1.0,
        }
    }
}

/// The fixed obstacle interval [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleInterval {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ObstacleInterval {
    fn default() -> Self {
        Self {
            lower: -1.0,
            upper: 1.0,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// phi(alpha) = alpha^p.
pub fn quench_phi(alpha: f64, cfg: &QuenchConfig) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha.powf(cfg.exponent_phi))
}

/// psi(alpha) = alpha^q.
pub fn quench_psi(alpha: f64, cfg: &QuenchConfig) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha.powf(cfg.exponent_psi))
}

/// The convex logarithmic potential, with the convention 0 ln 0 = 0 so that
/// h(+-1) = 2 ln 2.
pub fn eval_h(r: f64) -> Result<f64> {
    if r.abs() > 1.0 {
        return Err(Error::Domain(format!("h is only defined on [-1, 1], got {r}")));
    }
    let term = |s: f64| if s == 0.0 { 0.0 } else { s * s.ln() };
    Ok(term(1.0 - r) + term(1.0 + r))
}

/// h'(r) = ln((1+r)/(1-r)), defined strictly inside (-1, 1).
pub fn eval_h_prime(r: f64) -> Result<f64> {
    if r.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "h' is only defined on the open interval (-1, 1), got {r}"
        )));
    }
    Ok(((1.0 + r) / (1.0 - r)).ln())
}

/// h''(r) = 2 / (1 - r^2), defined strictly inside (-1, 1).
pub fn eval_h_second(r: f64) -> Result<f64> {
    if r.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "h'' is only defined on the open interval (-1, 1), got {r}"
        )));
    }
    Ok(2.0 / (1.0 - r * r))
}

/// Membership test for the monotone graph of the obstacle subdifferential:
/// nonpositive at the lower obstacle, zero inside, nonnegative at the upper
/// obstacle, with `TOL_ACTIVE` deciding contact and `TOL_MULT` softening the
/// sign checks.
pub fn subdifferential_contains(v: f64, eta: f64) -> Result<bool> {
    if v.abs() > 1.0 + TOL_ACTIVE {
        return Err(Error::Domain(format!(
            "value {v} lies outside the obstacle interval beyond tolerance"
        )));
    }
    if v >= 1.0 - TOL_ACTIVE {
        return Ok(eta >= -TOL_MULT);
    }
    if v <= -1.0 + TOL_ACTIVE {
        return Ok(eta <= TOL_MULT);
    }
    Ok(eta.abs() <= TOL_MULT)
}
