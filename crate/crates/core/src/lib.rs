//! Confining Hamiltonians on a one-dimensional box split into an inner
//! interval `Ω₁` and its complement `Ω₂`.
//!
//! The crate discretizes `-d²/dx² + V` on a uniform grid with the interface
//! nodes duplicated, evaluates the distributional action of the glued
//! operator together with singular boundary potentials, assembles separating
//! and transversal Hamiltonians, and provides eigensolvers, Crank–Nicolson
//! dynamics and deficiency-index counts on top of them.
//!
//! Everything is generic over the real scalar ([`scalar::Real`], implemented
//! for `f32` and `f64`); the aliases below fix the precision.

pub mod assembly;
pub mod banded;
pub mod bc;
pub mod cli;
pub mod distributional;
pub mod dynamics;
pub mod error;
pub mod extensions;
pub mod grid;
pub mod scalar;
pub mod spectral;
pub mod traces;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Decomposition64 = grid::Decomposition<f64>;
pub type WaveFunction64 = grid::WaveFunction<f64>;
pub type HamiltonianMatrix64 = assembly::HamiltonianMatrix<f64>;
pub type PotentialSpec64 = distributional::PotentialSpec<f64>;
pub type SeparatedBc64 = bc::SeparatedBc<f64>;
pub type CouplingSpec64 = bc::CouplingSpec<f64>;
pub type EigenResult64 = spectral::EigenResult<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;

pub type Decomposition32 = grid::Decomposition<f32>;
pub type WaveFunction32 = grid::WaveFunction<f32>;
pub type HamiltonianMatrix32 = assembly::HamiltonianMatrix<f32>;
pub type PotentialSpec32 = distributional::PotentialSpec<f32>;
pub type SeparatedBc32 = bc::SeparatedBc<f32>;
pub type CouplingSpec32 = bc::CouplingSpec<f32>;
pub type EigenResult32 = spectral::EigenResult<f32>;
pub type Trajectory32 = dynamics::Trajectory<f32>;
