//! Two-qubit (intrinsic parity ⊗ helicity) description of a thermalized
//! relativistic Fermi gas.
//!
//! A Dirac spinor is read as a state of two qubits: qubit 1 carries the
//! intrinsic parity (eigenvalues of `β = σz ⊗ I`), qubit 2 the spin/helicity.
//! Averaging the pure spinor projector over a Fermi-Dirac momentum
//! distribution and over directions yields a 4×4 density matrix whose
//! parity populations depend only on the reduced temperature `T/m`.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: semi-infinite Gauss-Kronrod quadrature and Fermi-Dirac moments.
//! - [`matrix`]: small dense complex matrices (Kronecker products, partial
//!   trace/transpose, Hermitian spectra).
//! - [`dirac`]: Pauli/Dirac algebra, helicity states, the spinor solution and
//!   solid-angle averaging.
//! - [`thermal`]: the temperature-dependent weights `M++`, `M--`, `M+-`.
//! - [`qinfo`]: the parity-helicity density matrix and its information content.
//! - [`cli`]: the `fermi-parity` command line front end.
//!
//! Basis ordering everywhere is `(|+,↑⟩, |+,↓⟩, |−,↑⟩, |−,↓⟩)`: parity is the
//! slow index, spin the fast one.

pub mod cli;
pub mod dirac;
pub mod error;
pub mod matrix;
pub mod numerics;
pub mod qinfo;
pub mod thermal;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;

use std::fmt;

/// Energy branch of the Dirac solution: `s = 1` positive energy (fermion),
/// `s = 0` negative energy (antifermion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Branch {
    Negative,
    Positive,
}

impl Branch {
    /// `(-1)^(s+1)`.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Negative => -1.0,
            Branch::Positive => 1.0,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Branch::Negative => 0,
            Branch::Positive => 1,
        }
    }

    pub fn from_index(s: u8) -> Result<Self> {
        match s {
            0 => Ok(Branch::Negative),
            1 => Ok(Branch::Positive),
            _ => Err(Error::Domain(format!("branch index must be 0 or 1, got {s}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Branch::Negative => Branch::Positive,
            Branch::Positive => Branch::Negative,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}
