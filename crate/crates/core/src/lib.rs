//! Analysis toolkit for discrete-time linear inclusion systems
//! `x_n ∈ {S_1 x_{n-1}, …, S_K x_{n-1}}`.
//!
//! The crate bounds the joint spectral radius and co-radius of the generator
//! family, certifies when fiber chaos is impossible, synthesizes fiber-chaotic
//! and zero-exponent switching laws with replayable certificates, estimates
//! Lyapunov exponents and classifies switching laws by their constant runs.

pub mod classify;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lyapunov;
pub mod spectral;
pub mod symbolic;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::{co_norm, co_spectral_radius, operator_norm, spectral_radius, word_product, Mat, ScaledMat, SystemSpec};
pub use symbolic::{LawProgram, Word};
