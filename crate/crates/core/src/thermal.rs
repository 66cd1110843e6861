//! Fermi-Dirac weighted parity coefficients.
//!
//! With `q = p/T` and `T_m = T/m`, the weights of the parity blocks are
//!
//! ```text
//! M++ = (1/3ζ(3)) ∫ q² (1 + σ/√(1+T_m²q²)) / (e^q+1) dq
//! M−− = (1/3ζ(3)) ∫ q² (1 − σ/√(1+T_m²q²)) / (e^q+1) dq
//! M+− = (1/3ζ(3)) ∫ T_m q³ / (√(1+T_m²q²)(e^q+1)) dq
//! ```
//!
//! where `σ = (−1)^(s+1)`. The `1 − 1/√(1+x)` combination vanishes like `x/2`
//! as `T_m → 0`, so it is integrated as `T_m² q⁴ / (√(1+x)(1+√(1+x)))` with
//! the `T_m²` pulled outside. This keeps full relative accuracy down to
//! values near 1e-24.

use crate::error::{Error, Result};
use crate::numerics::{fermi_factor, fermi_moment, integrate_semi_infinite, DEFAULT_BUDGET, ZETA3, ZETA5};
use crate::Branch;

/// Default absolute tolerance on each coefficient.
pub const DEFAULT_COEFF_TOL: f64 = 1e-13;

/// Largest `T_m` for which the leading-order small-temperature forms are offered.
pub const ASYMPTOTIC_MAX_TM: f64 = 1e-3;

pub const ELECTRON_REST_ENERGY_EV: f64 = 5.11e5;
pub const BOLTZMANN_EV_PER_K: f64 = 8.617e-5;

/// Normalized radial density of `q = p/T` for a massless-limit Fermi-Dirac gas:
/// `(2/(3ζ(3))) q²/(e^q+1)`, integrating to one over `[0, ∞)`.
pub fn fermi_dirac_pdf(q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("q must be >= 0, got {q}")));
    }
    Ok(2.0 / (3.0 * ZETA3) * q * q * fermi_factor(q))
}

/// `1 − 1/√(1+x)` evaluated as `x / (√(1+x)(1+√(1+x)))`.
pub fn stable_defect(x: f64) -> f64 {
    let r = (1.0 + x).sqrt();
    x / (r * (1.0 + r))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ThermalCoefficients {
    pub m_pp: f64,
    pub m_mm: f64,
    pub m_pm: f64,
    #[serde(serialize_with = "serialize_branch")]
    pub s: Branch,
    pub t_m: f64,
}

fn serialize_branch<S: serde::Serializer>(b: &Branch, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(b.index())
}

impl ThermalCoefficients {
    /// `M++ − M−−`.
    pub fn parity_imbalance(&self) -> f64 {
        self.m_pp - self.m_mm
    }
}

fn validate_tm(t_m: f64) -> Result<()> {
    if t_m > 0.0 && t_m.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("T_m must be finite and > 0, got {t_m}")))
    }
}

/// Computes `(M++, M−−, M+−)` for branch `s` at reduced temperature `t_m`,
/// each to absolute accuracy `abs_tol`.
pub fn coefficients(s: Branch, t_m: f64, abs_tol: f64) -> Result<ThermalCoefficients> {
    validate_tm(t_m)?;
    if !(abs_tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {abs_tol}")));
    }
    let norm = 1.0 / (3.0 * ZETA3);
    let t2 = t_m * t_m;
    // tolerances on the raw integrals, before the prefactors are applied
    let tol = abs_tol / norm;
    let quad = |f: &dyn Fn(f64) -> f64, tol: f64| -> Result<f64> {
        Ok(integrate_semi_infinite(f, tol, DEFAULT_BUDGET)?
            .require_converged(tol)?
            .value)
    };

    let large = quad(
        &|q| {
            let r = (1.0 + t2 * q * q).sqrt();
            q * q * (1.0 + 1.0 / r) * fermi_factor(q)
        },
        tol,
    )?;
    let small_scaled = quad(
        &|q| {
            let r = (1.0 + t2 * q * q).sqrt();
            q.powi(4) / (r * (1.0 + r)) * fermi_factor(q)
        },
        tol / t2.max(1.0),
    )?;
    let cross_scaled = quad(
        &|q| {
            let r = (1.0 + t2 * q * q).sqrt();
            q.powi(3) / r * fermi_factor(q)
        },
        tol / t_m.max(1.0),
    )?;

    let big = norm * large;
    let small = norm * t2 * small_scaled;
    let (m_pp, m_mm) = match s {
        Branch::Positive => (big, small),
        Branch::Negative => (small, big),
    };
    Ok(ThermalCoefficients {
        m_pp,
        m_mm,
        m_pm: norm * t_m * cross_scaled,
        s,
        t_m,
    })
}

/// [`coefficients`] at the default tolerance.
pub fn coefficients_default(s: Branch, t_m: f64) -> Result<ThermalCoefficients> {
    coefficients(s, t_m, DEFAULT_COEFF_TOL)
}

/// Slope of `M−−¹ / T_m²` as `T_m → 0`: `15ζ(5)/(4ζ(3))`.
pub fn small_t_quadratic_constant() -> f64 {
    15.0 * ZETA5 / (4.0 * ZETA3)
}

/// Slope of `M+− / T_m` as `T_m → 0`: `7π⁴/(360ζ(3))`.
pub fn small_t_linear_constant() -> f64 {
    fermi_moment(3).expect("k = 3 is tabulated") / (3.0 * ZETA3)
}

/// Leading-order coefficients for `t_m ≤ 1e-3`.
pub fn coefficients_asymptotic(s: Branch, t_m: f64) -> Result<ThermalCoefficients> {
    validate_tm(t_m)?;
    if t_m > ASYMPTOTIC_MAX_TM {
        return Err(Error::Domain(format!(
            "small-temperature asymptote needs T_m <= {ASYMPTOTIC_MAX_TM:e}, got {t_m:e}"
        )));
    }
    let small = small_t_quadratic_constant() * t_m * t_m;
    let (m_pp, m_mm) = match s {
        Branch::Positive => (1.0 - small, small),
        Branch::Negative => (small, 1.0 - small),
    };
    Ok(ThermalCoefficients {
        m_pp,
        m_mm,
        m_pm: small_t_linear_constant() * t_m,
        s,
        t_m,
    })
}

/// Converts a reduced temperature to kelvin: `T = T_m · mc² / k`.
pub fn kelvin_from_tm(t_m: f64, rest_energy_ev: f64) -> Result<f64> {
    if !(t_m > 0.0) || !(rest_energy_ev > 0.0) {
        return Err(Error::Domain(format!(
            "T_m and rest energy must be positive, got {t_m} and {rest_energy_ev}"
        )));
    }
    Ok(t_m * rest_energy_ev / BOLTZMANN_EV_PER_K)
}
