//! Variance of lattice point counts in randomly translated thin annuli of convex bodies.
//!
//! The numerical core is generic over [`Real`] (implemented for `f32` and `f64`); the
//! exact square-annulus oracle is generic over any ordered field, including
//! `BigRational`. The aliases below fix the usual double-precision and rational choices.

pub mod body;
pub mod cli;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod fourier;
pub mod lattice;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod special;
pub mod summation;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ConvexBody = body::ConvexBody<f64>;
pub type ConvexBody32 = body::ConvexBody<f32>;
pub type Vector = vector::Vect<f64>;
pub type Annulus = lattice::Annulus<f64>;
pub type Annulus32 = lattice::Annulus<f32>;
pub type SquareStatsExact = oracle::SquareAnnulusStats<num_rational::BigRational>;
pub type SquareStats = oracle::SquareAnnulusStats<f64>;
