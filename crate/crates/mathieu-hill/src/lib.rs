//! Spectral toolkit for the non-self-adjoint Hill operator
//! H = −d²/dx² + a·e^{−2πix} + b·e^{2πix} on the line.

pub mod error;
pub mod asymptotics;
pub mod discriminant;
pub mod floquet;
pub mod linalg;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod spectrality;
pub mod expansion;
pub mod verify;

pub use error::{Error, Result};
pub use potential::{
    AsymptoticConstants, Family, LogComplex, MathieuPotential, Rational, Real, TriState,
};

pub type Potential = MathieuPotential<f64>;
pub type Potential32 = MathieuPotential<f32>;
pub type LogComplex64 = LogComplex<f64>;
pub type LogComplex32 = LogComplex<f32>;
pub type Constants = AsymptoticConstants<f64>;
