//! Pauli and Dirac matrix algebra, helicity states and the free spinor.
//!
//! In the two-qubit reading `α_k = σx ⊗ σ_k` and `β = σz ⊗ I`, so
//! `H_D = σx ⊗ (p·σ) + m σz ⊗ I`. The positive/negative energy solution at
//! momentum `p = |p| p̂` is
//!
//! ```text
//! |η_s⟩ = N_s ( |+⟩⊗|h+⟩ + g_s |−⟩⊗|h−⟩ ),   g_s = p / (E + (−1)^(s+1) m)
//! ```
//!
//! with `|h−⟩ = (p̂·σ)|h+⟩`. For `s = 0` this is the `−E` eigenvector of
//! `H_D(−p)`, the usual antiparticle labelling.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMatrix};
use crate::numerics::gauss_legendre;
use crate::thermal::stable_defect;
use crate::Branch;

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
}

pub fn pauli() -> [ComplexMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

/// The Dirac-representation matrices written as two-qubit operators.
#[derive(Debug, Clone)]
pub struct DiracMatrices {
    pub alpha: [ComplexMatrix; 3],
    pub beta: ComplexMatrix,
    /// γ⁰ … γ³
    pub gamma: [ComplexMatrix; 4],
    pub gamma5: ComplexMatrix,
}

pub fn dirac_matrices() -> DiracMatrices {
    let [sx, sy, sz] = pauli();
    let i2 = identity2();
    let alpha = pauli().map(|s| sx.kron(&s));
    let beta = sz.kron(&i2);
    let isy = sy.scale(c(0.0, 1.0));
    let gamma = [
        beta.clone(),
        isy.kron(&sx),
        isy.kron(&sy),
        isy.kron(&sz),
    ];
    let gamma5 = sx.kron(&i2);
    DiracMatrices {
        alpha,
        beta,
        gamma,
        gamma5,
    }
}

/// `H_D = α·p + m β`.
pub fn dirac_hamiltonian(momentum: [f64; 3], mass: f64) -> ComplexMatrix {
    let d = dirac_matrices();
    let mut h = d.beta.scale(c(mass, 0.0));
    for (a, pk) in d.alpha.iter().zip(momentum) {
        h = &h + &a.scale(c(pk, 0.0));
    }
    h
}

/// A normalized (or not yet normalized) state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    amplitudes: Vec<Complex64>,
}

impl SpinorState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.amplitudes.iter().map(|z| z * s).collect())
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                out.push(a * b);
            }
        }
        Self::new(out)
    }

    pub fn apply(&self, m: &ComplexMatrix) -> Self {
        Self::new(m.apply(&self.amplitudes))
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Momentum magnitude, mass and direction of a free particle (ħ = c = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicPoint {
    pub p: f64,
    pub m: f64,
    pub theta: f64,
    pub phi: f64,
}

impl KinematicPoint {
    pub fn new(p: f64, m: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("momentum must be finite and >= 0, got {p}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!("mass must be finite and > 0, got {m}")));
        }
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::Domain("angles must be finite".into()));
        }
        Ok(Self { p, m, theta, phi })
    }

    /// `E_p = √(p² + m²)`.
    pub fn energy(&self) -> f64 {
        self.p.hypot(self.m)
    }

    pub fn direction(&self) -> [f64; 3] {
        unit_vector(self.theta, self.phi)
    }

    pub fn momentum(&self) -> [f64; 3] {
        self.direction().map(|x| x * self.p)
    }
}

pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// The helicity operator `p̂·σ`.
pub fn helicity_operator(theta: f64, phi: f64) -> ComplexMatrix {
    let (st, ct) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    ComplexMatrix::from_rows(&[&[c(ct, 0.0), e.conj() * st], &[e * st, c(-ct, 0.0)]])
}

/// Eigenstates of `p̂·σ` with eigenvalues ±1; `Ω+` has a real, non-negative
/// upper component.
pub fn helicity_eigenstates(theta: f64, phi: f64) -> (SpinorState, SpinorState) {
    let (s, co) = (0.5 * theta).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    (
        SpinorState::new(vec![c(co, 0.0), e * s]),
        SpinorState::new(vec![c(s, 0.0), -e * co]),
    )
}

/// `|h±⟩ = cos χ |Ω+⟩ ± e^{iμ} sin χ |Ω−⟩`.
pub fn h_states(theta: f64, phi: f64, chi: f64, mu: f64) -> (SpinorState, SpinorState) {
    let (op, om) = helicity_eigenstates(theta, phi);
    let cc = chi.cos();
    let ms = Complex64::from_polar(chi.sin(), mu);
    let combine = |sign: f64| {
        SpinorState::new(
            op.amplitudes()
                .iter()
                .zip(om.amplitudes())
                .map(|(a, b)| a * cc + b * ms * sign)
                .collect(),
        )
    };
    (combine(1.0), combine(-1.0))
}

/// Weights `(N_s, N_s g_s)` of the `|+⟩|h+⟩` and `|−⟩|h−⟩` components.
///
/// Evaluated as `√((1 ± m/E)/2)`, with `1 − m/E` taken from [`stable_defect`],
/// so both branches are accurate down to `p = 0`.
pub fn spinor_weights(branch: Branch, p: f64, m: f64) -> (f64, f64) {
    let x = (p / m) * (p / m);
    let defect = stable_defect(x); // 1 - m/E
    let small = (0.5 * defect).sqrt();
    let large = (1.0 - 0.5 * defect).sqrt();
    match branch {
        Branch::Positive => (large, small),
        Branch::Negative => (small, large),
    }
}

/// `N_s(p)` with `N_s² = (1 + (−1)^(s+1) m/E)/2`.
pub fn normalization(branch: Branch, p: f64, m: f64) -> f64 {
    spinor_weights(branch, p, m).0
}

/// `g_s(p, m) = p / (E + (−1)^(s+1) m)`; the `s = 0` branch uses `(E + m)/p`.
/// Diverges for `s = 0` at `p = 0`.
pub fn g_factor(branch: Branch, p: f64, m: f64) -> f64 {
    let e = p.hypot(m);
    match branch {
        Branch::Positive => p / (e + m),
        Branch::Negative => (e + m) / p,
    }
}

/// The normalized spinor `|η_s(p)⟩` in the basis `(|+↑⟩, |+↓⟩, |−↑⟩, |−↓⟩)`.
pub fn eta_state(branch: Branch, kin: &KinematicPoint, chi: f64, mu: f64) -> SpinorState {
    let (a, b) = spinor_weights(branch, kin.p, kin.m);
    let (hp, hm) = h_states(kin.theta, kin.phi, chi, mu);
    let (hp, hm) = (hp.amplitudes(), hm.amplitudes());
    SpinorState::new(vec![hp[0] * a, hp[1] * a, hm[0] * b, hm[1] * b])
}

/// `|ψ⟩⟨ψ|` for a unit-norm state.
pub fn pure_density(state: &SpinorState) -> Result<ComplexMatrix> {
    let n2 = state.norm_sqr();
    if (n2 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("state norm² is {n2}, expected 1")));
    }
    Ok(ComplexMatrix::outer(state.amplitudes(), state.amplitudes()))
}

/// Which helicity projector `|h_a⟩⟨h_b|` to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelicityPair {
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
}

/// Product rule over the sphere: Gauss-Legendre in θ (with the sin θ
/// Jacobian) times the trapezoid rule in φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularGrid {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self {
            theta_nodes: 64,
            phi_nodes: 128,
        }
    }
}

impl AngularGrid {
    /// `(θ, φ, w)` with weights summing to one.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let (x, w) = gauss_legendre(self.theta_nodes);
        let dphi = 2.0 * PI / self.phi_nodes as f64;
        let mut pts = Vec::with_capacity(self.theta_nodes * self.phi_nodes);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = 0.5 * PI * (xi + 1.0);
            let wt = wi * 0.5 * PI * theta.sin() * dphi / (4.0 * PI);
            for j in 0..self.phi_nodes {
                pts.push((theta, j as f64 * dphi, wt));
            }
        }
        pts
    }
}

/// `(∫dΩ)⁻¹ ∫dΩ F(θ, φ)` for a matrix-valued `F` of fixed dimension.
pub fn solid_angle_average<F>(grid: &AngularGrid, dim: usize, mut f: F) -> ComplexMatrix
where
    F: FnMut(f64, f64) -> ComplexMatrix,
{
    let mut acc = ComplexMatrix::zeros(dim);
    for (theta, phi, w) in grid.points() {
        acc = &acc + &f(theta, phi).scale(c(w, 0.0));
    }
    acc
}

/// Direction average of `|h_a⟩⟨h_b|` by quadrature.
pub fn angular_average(kind: HelicityPair, chi: f64, mu: f64, grid: &AngularGrid) -> ComplexMatrix {
    solid_angle_average(grid, 2, |theta, phi| {
        let (hp, hm) = h_states(theta, phi, chi, mu);
        let (u, v) = match kind {
            HelicityPair::PlusPlus => (&hp, &hp),
            HelicityPair::MinusMinus => (&hm, &hm),
            HelicityPair::PlusMinus => (&hp, &hm),
            HelicityPair::MinusPlus => (&hm, &hp),
        };
        ComplexMatrix::outer(u.amplitudes(), v.amplitudes())
    })
}
