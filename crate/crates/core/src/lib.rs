//! Numerical laboratory for formally self-adjoint first-order m×m systems of
//! PDEs on flat tori T^n.
//!
//! The crate is organised around an exact coefficient calculus for
//! matrix-valued trigonometric polynomials ([`series`]), on top of which it
//! provides:
//!
//! * operators given by invariant data (principal + subprincipal symbol) and
//!   their gauge transformations ([`operator`]),
//! * eigenvalue branches of the principal symbol with perturbation-theory
//!   derivatives, Poisson brackets and the transported phase ([`symbol`]),
//! * the geometric objects a 2×2 principal symbol encodes: metric, Pauli
//!   frames, covariant subprincipal symbol, electromagnetic potential, spinor
//!   correspondence ([`geometry`]),
//! * Fourier–Galerkin and exact lattice spectra with counting / eta
//!   functionals ([`spectra`]),
//! * two-term Weyl coefficients by quadrature, by closed 3D integrals and by
//!   empirical fits ([`asymptotics`]),
//! * Hamiltonian ray transport of the leading propagator amplitude
//!   ([`propagator`]),
//! * the 4D covariant representation and Dirac-operator assembly ([`dirac4d`]).
//!
//! All core math is generic over the real scalar through [`scalar::Real`];
//! `f64` is the production scalar and the `*64` aliases below are the types
//! most callers want. The stated validation tolerances are calibrated for
//! `f64`.

pub mod asymptotics;
pub mod builtins;
pub mod dirac4d;
mod error;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod propagator;
pub mod quad;
pub mod scalar;
pub mod series;
pub mod spectra;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Complex matrix over `f64`.
pub type Matrix64 = linalg::CMatrix<f64>;
/// Matrix-valued trigonometric polynomial over `f64`.
pub type Series64 = series::FourierMatrixSeries<f64>;
/// Operator data over `f64`.
pub type Operator64 = operator::OperatorData<f64>;
/// Spectrum result over `f64`.
pub type Spectrum64 = spectra::SpectrumResult<f64>;

/// Complex matrix over `f32`.
pub type Matrix32 = linalg::CMatrix<f32>;
/// Matrix-valued trigonometric polynomial over `f32`.
pub type Series32 = series::FourierMatrixSeries<f32>;
/// Operator data over `f32`.
pub type Operator32 = operator::OperatorData<f32>;
