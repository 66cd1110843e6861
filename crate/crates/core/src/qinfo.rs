//! The parity-helicity density matrix and what can be read off it.
//!
//! Averaging `|η_s⟩⟨η_s|` over directions and the thermal momentum
//! distribution gives, in the basis `(|+↑⟩, |+↓⟩, |−↑⟩, |−↓⟩)`,
//!
//! ```text
//!        ⎡ n+M++    0      ñ+M+−    0    ⎤
//! ρ12 =  ⎢  0     n−M++     0     ñ−M+−  ⎥
//!        ⎢ ñ−M+−    0     n−M−−     0    ⎥
//!        ⎣  0     ñ+M+−     0     n+M−−  ⎦
//! ```
//!
//! with `n± = 1/2 ± (π/8) sin 2χ cos μ` and
//! `ñ± = (1/2) cos 2χ ± i(π/8) sin 2χ sin μ`.
//!
//! The (+,−) block holds the direction average of `|h+⟩⟨h−|`, which is
//! `diag(ñ+, ñ−)` for the helicity states of [`crate::dirac`].
//! [`rho12_from_spinor_integral`] recomputes the matrix by brute-force
//! quadrature and pins this placement.

use std::f64::consts::{FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::dirac::{eta_state, sigma_y, sigma_z, identity2, AngularGrid, KinematicPoint};
use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMatrix, Subsystem};
use crate::numerics::{integrate_semi_infinite_vec, DEFAULT_BUDGET};
use crate::thermal::{fermi_dirac_pdf, ThermalCoefficients};
use crate::Branch;

/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as roundoff and set to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;
/// Entrywise tolerance for `PT(ρ) = ρ`.
pub const PT_EQUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    #[serde(serialize_with = "branch_as_index")]
    pub s: Branch,
    pub t_m: f64,
    pub chi: f64,
    pub mu: f64,
}

fn branch_as_index<S: serde::Serializer>(b: &Branch, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(b.index())
}

impl ModelParams {
    pub fn new(s: Branch, t_m: f64, chi: f64, mu: f64) -> Result<Self> {
        if !(t_m > 0.0 && t_m.is_finite()) {
            return Err(Error::Domain(format!("T_m must be finite and > 0, got {t_m}")));
        }
        if !(0.0..=PI).contains(&chi) {
            return Err(Error::Domain(format!("chi must lie in [0, pi], got {chi}")));
        }
        if !(0.0..2.0 * PI).contains(&mu) {
            return Err(Error::Domain(format!("mu must lie in [0, 2pi), got {mu}")));
        }
        Ok(Self { s, t_m, chi, mu })
    }
}

/// Direction averages of the helicity projectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularCoefficients {
    pub n_plus: f64,
    pub n_minus: f64,
    pub nt_plus: Complex64,
    pub nt_minus: Complex64,
}

pub fn angular_coefficients(chi: f64, mu: f64) -> AngularCoefficients {
    let s2 = (2.0 * chi).sin();
    let off = FRAC_PI_8 * s2 * mu.cos();
    let half_c2 = 0.5 * (2.0 * chi).cos();
    let im = FRAC_PI_8 * s2 * mu.sin();
    AngularCoefficients {
        n_plus: 0.5 + off,
        n_minus: 0.5 - off,
        nt_plus: c(half_c2, im),
        nt_minus: c(half_c2, -im),
    }
}

impl AngularCoefficients {
    /// `ñ+ ⇄ ñ−`.
    pub fn conjugated(&self) -> Self {
        Self {
            nt_plus: self.nt_minus,
            nt_minus: self.nt_plus,
            ..*self
        }
    }
}

/// Builds the 4×4 matrix from its angular and thermal ingredients.
pub fn rho12_matrix(ang: &AngularCoefficients, m_pp: f64, m_mm: f64, m_pm: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::from_real_diagonal(&[
        ang.n_plus * m_pp,
        ang.n_minus * m_pp,
        ang.n_minus * m_mm,
        ang.n_plus * m_mm,
    ]);
    m.set(0, 2, ang.nt_plus * m_pm);
    m.set(2, 0, ang.nt_minus * m_pm);
    m.set(1, 3, ang.nt_minus * m_pm);
    m.set(3, 1, ang.nt_plus * m_pm);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    pub matrix: ComplexMatrix,
    pub params: ModelParams,
}

fn check_coefficients(params: &ModelParams, k: &ThermalCoefficients) -> Result<()> {
    if k.s != params.s {
        return Err(Error::InvalidState(format!(
            "coefficients are for s={} but params have s={}",
            k.s, params.s
        )));
    }
    if ((k.t_m - params.t_m) / params.t_m).abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "coefficients are for T_m={} but params have T_m={}",
            k.t_m, params.t_m
        )));
    }
    let tr = k.m_pp + k.m_mm;
    if (tr - 1.0).abs() > 1e-8 || k.m_pp < 0.0 || k.m_mm < 0.0 || k.m_pm < 0.0 {
        return Err(Error::InvalidState(format!(
            "non-physical coefficients: M++ + M-- = {tr}, M+- = {}",
            k.m_pm
        )));
    }
    Ok(())
}

/// The closed-form density matrix for `params`.
pub fn assemble_rho12(params: &ModelParams, coeffs: &ThermalCoefficients) -> Result<TwoQubitDensity> {
    check_coefficients(params, coeffs)?;
    let ang = angular_coefficients(params.chi, params.mu);
    Ok(TwoQubitDensity {
        matrix: rho12_matrix(&ang, coeffs.m_pp, coeffs.m_mm, coeffs.m_pm),
        params: *params,
    })
}

/// Recomputes ρ12 as `∫dq pdf(q) ⟨|η_s(p = T_m q)⟩⟨η_s|⟩_Ω` (units with m = 1),
/// nesting the adaptive q-quadrature around a fixed product rule on the sphere.
///
/// Independent of [`assemble_rho12`]: it uses neither the closed-form angular
/// coefficients nor the thermal coefficient integrals.
pub fn rho12_from_spinor_integral(params: &ModelParams, tol: f64) -> Result<TwoQubitDensity> {
    let grid = AngularGrid::default().points();
    let (s, t_m, chi, mu) = (params.s, params.t_m, params.chi, params.mu);

    let r = integrate_semi_infinite_vec(
        |q, out: &mut [f64]| {
            let weight = fermi_dirac_pdf(q).unwrap_or(f64::NAN);
            if weight == 0.0 {
                return;
            }
            let mut acc = [Complex64::new(0.0, 0.0); 16];
            for &(theta, phi, w) in &grid {
                let kin = KinematicPoint {
                    p: t_m * q,
                    m: 1.0,
                    theta,
                    phi,
                };
                let eta = eta_state(s, &kin, chi, mu);
                let a = eta.amplitudes();
                for i in 0..4 {
                    let ai = a[i] * w;
                    for j in 0..4 {
                        acc[4 * i + j] += ai * a[j].conj();
                    }
                }
            }
            for (k, z) in acc.iter().enumerate() {
                out[2 * k] = weight * z.re;
                out[2 * k + 1] = weight * z.im;
            }
        },
        32,
        tol,
        DEFAULT_BUDGET,
    )?
    .require_converged(tol)?;

    let v = r.values;
    Ok(TwoQubitDensity {
        matrix: ComplexMatrix::from_fn(4, |i, j| c(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1])),
        params: *params,
    })
}

/// `Tr₂ ρ12`, the intrinsic-parity state.
pub fn reduce_parity(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    rho.partial_trace(Subsystem::Second)
}

/// `M++|+⟩⟨+| + M−−|−⟩⟨−| + M+− cos 2χ (|+⟩⟨−| + |−⟩⟨+|)`.
pub fn rho1_closed(coeffs: &ThermalCoefficients, chi: f64) -> ComplexMatrix {
    let off = c(coeffs.m_pm * (2.0 * chi).cos(), 0.0);
    ComplexMatrix::from_rows(&[&[c(coeffs.m_pp, 0.0), off], &[off, c(coeffs.m_mm, 0.0)]])
}

/// `Tr₁ ρ12`, the helicity state.
pub fn reduce_helicity(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    rho.partial_trace(Subsystem::First)
}

/// `(H++, H−−)` with `H++ = 1/2 + (π/8) sin 2χ cos μ (M++ − M−−)`.
pub fn helicity_weights(coeffs: &ThermalCoefficients, chi: f64, mu: f64) -> (f64, f64) {
    let d = FRAC_PI_8 * (2.0 * chi).sin() * mu.cos() * (coeffs.m_pp - coeffs.m_mm);
    (0.5 + d, 0.5 - d)
}

fn checked_sqrt(x: f64, what: &str) -> Result<f64> {
    if x < 0.0 {
        if x > -1e-15 {
            return Ok(0.0);
        }
        return Err(Error::Internal(format!("negative radicand {x:e} in {what}")));
    }
    Ok(x.sqrt())
}

/// Closed-form spectrum of ρ12, in the order `λ1 … λ4` (the two 2×2 blocks).
pub fn eigvals_closed_rho12(coeffs: &ThermalCoefficients, ang: &AngularCoefficients) -> Result<[f64; 4]> {
    let (pp, mm, pm) = (coeffs.m_pp, coeffs.m_mm, coeffs.m_pm);
    // ñ+ ñ− = |ñ+|²
    let cross = 4.0 * ang.nt_plus.norm_sqr() * pm * pm;

    let (a, b) = (ang.n_minus * pp, ang.n_plus * mm);
    let r12 = checked_sqrt((a - b) * (a - b) + cross, "lambda_1,2")?;
    let (a2, b2) = (ang.n_plus * pp, ang.n_minus * mm);
    let r34 = checked_sqrt((a2 - b2) * (a2 - b2) + cross, "lambda_3,4")?;
    Ok([
        0.5 * (a + b) + 0.5 * r12,
        0.5 * (a + b) - 0.5 * r12,
        0.5 * (a2 + b2) + 0.5 * r34,
        0.5 * (a2 + b2) - 0.5 * r34,
    ])
}

/// Closed-form spectrum `λ± = 1/2 ± (1/2)√((M++ − M−−)² + (2 M+− cos 2χ)²)` of ρ1.
pub fn eigvals_closed_rho1(coeffs: &ThermalCoefficients, chi: f64) -> Result<[f64; 2]> {
    let d = coeffs.m_pp - coeffs.m_mm;
    let o = 2.0 * coeffs.m_pm * (2.0 * chi).cos();
    let r = checked_sqrt(d * d + o * o, "lambda_pm")?;
    Ok([0.5 + 0.5 * r, 0.5 - 0.5 * r])
}

/// `−Σ λ ln λ` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(eigs: &[f64]) -> Result<f64> {
    let sum: f64 = eigs.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("eigenvalues sum to {sum}, expected 1")));
    }
    let mut h = 0.0;
    for &l in eigs {
        if l < -EIGEN_CLAMP {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            h -= l * l.ln();
        }
    }
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub entropy_nats: f64,
}

impl SpectralData {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let entropy_nats = von_neumann_entropy(&eigenvalues)?;
        Ok(Self {
            eigenvalues,
            entropy_nats,
        })
    }

    pub fn of_matrix(m: &ComplexMatrix) -> Result<Self> {
        Self::from_eigenvalues(m.hermitian_eigenvalues()?)
    }
}

/// `I₁₂ = H(ρ1) + H(ρ2) − H(ρ12)` from a density matrix.
pub fn mutual_information_of(rho: &ComplexMatrix) -> Result<f64> {
    let h12 = SpectralData::of_matrix(rho)?.entropy_nats;
    let h1 = SpectralData::of_matrix(&reduce_parity(rho)?)?.entropy_nats;
    let h2 = SpectralData::of_matrix(&reduce_helicity(rho)?)?.entropy_nats;
    clamp_mutual_information(h1 + h2 - h12)
}

fn clamp_mutual_information(i: f64) -> Result<f64> {
    if i < -1e-9 {
        return Err(Error::Internal(format!("mutual information {i:e} is negative")));
    }
    Ok(i.max(0.0))
}

/// Mutual information between parity and helicity for the model state.
pub fn mutual_information(params: &ModelParams, coeffs: &ThermalCoefficients) -> Result<f64> {
    mutual_information_of(&assemble_rho12(params, coeffs)?.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptReport {
    pub separable: bool,
    pub min_pt_eigenvalue: f64,
    pub pt_equals_rho: bool,
}

/// Peres-Horodecki test with the transpose taken on the helicity qubit.
/// For two qubits a non-negative partial transpose is equivalent to separability.
pub fn ppt_check(rho: &ComplexMatrix) -> Result<PptReport> {
    let pt = rho.partial_transpose(Subsystem::Second)?;
    let spec = pt.hermitian_eigenvalues()?;
    let min = spec.last().copied().unwrap_or(0.0);
    Ok(PptReport {
        separable: min >= -EIGEN_CLAMP,
        min_pt_eigenvalue: min,
        pt_equals_rho: pt.max_abs_diff(rho) <= PT_EQUAL_TOL,
    })
}

/// `σy ⊗ σy`, the unitary part of charge conjugation.
pub fn charge_conjugation_unitary() -> ComplexMatrix {
    sigma_y().kron(&sigma_y())
}

/// `Ĉ ρ Ĉ⁻¹` for `Ĉ = (σy ⊗ σy) K`, i.e. `(σy⊗σy) ρ* (σy⊗σy)`.
pub fn charge_conjugate(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!(
            "charge conjugation acts on 4x4 matrices, got {0}x{0}",
            rho.dim()
        )));
    }
    let u = charge_conjugation_unitary();
    Ok(&(&u * &rho.conj()) * &u.adjoint())
}

/// ρ12 rebuilt with `M++ ⇄ M−−` and `ñ+ ⇄ ñ−`.
pub fn charge_swapped_reconstruction(params: &ModelParams, coeffs: &ThermalCoefficients) -> ComplexMatrix {
    let ang = angular_coefficients(params.chi, params.mu).conjugated();
    rho12_matrix(&ang, coeffs.m_mm, coeffs.m_pp, coeffs.m_pm)
}

/// `σz ⊗ I`: flips the sign of `|−⟩`. `ĈρĈ⁻¹` equals the swapped
/// reconstruction conjugated by this matrix, because `σy` carries a phase
/// `±i` when it exchanges `|+⟩` and `|−⟩`.
pub fn parity_sign_flip() -> ComplexMatrix {
    sigma_z().kron(&identity2())
}

/// Everything derived from one model state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAnalysis {
    pub params: ModelParams,
    pub coeffs: ThermalCoefficients,
    pub angular: AngularCoefficients,
    pub rho12: ComplexMatrix,
    pub rho1: ComplexMatrix,
    pub rho2: ComplexMatrix,
    pub spectrum12: SpectralData,
    pub spectrum1: SpectralData,
    pub spectrum2: SpectralData,
    pub closed_eigs12: [f64; 4],
    pub closed_eigs1: [f64; 2],
    pub helicity_weights: (f64, f64),
    pub mutual_information: f64,
    pub ppt: PptReport,
    pub charge_conjugate: ComplexMatrix,
    pub charge_conjugate_spectrum: SpectralData,
}

pub fn analyze(params: &ModelParams, coeffs: &ThermalCoefficients) -> Result<StateAnalysis> {
    let rho12 = assemble_rho12(params, coeffs)?.matrix;
    let rho1 = reduce_parity(&rho12)?;
    let rho2 = reduce_helicity(&rho12)?;
    let spectrum12 = SpectralData::of_matrix(&rho12)?;
    let spectrum1 = SpectralData::of_matrix(&rho1)?;
    let spectrum2 = SpectralData::of_matrix(&rho2)?;
    let angular = angular_coefficients(params.chi, params.mu);
    let mi = clamp_mutual_information(
        spectrum1.entropy_nats + spectrum2.entropy_nats - spectrum12.entropy_nats,
    )?;
    let cc = charge_conjugate(&rho12)?;
    Ok(StateAnalysis {
        params: *params,
        coeffs: *coeffs,
        angular,
        closed_eigs12: eigvals_closed_rho12(coeffs, &angular)?,
        closed_eigs1: eigvals_closed_rho1(coeffs, params.chi)?,
        helicity_weights: helicity_weights(coeffs, params.chi, params.mu),
        mutual_information: mi,
        ppt: ppt_check(&rho12)?,
        charge_conjugate_spectrum: SpectralData::of_matrix(&cc)?,
        charge_conjugate: cc,
        rho12,
        rho1,
        rho2,
        spectrum12,
        spectrum1,
        spectrum2,
    })
}
