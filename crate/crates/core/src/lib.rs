//! Spin-rotational dynamics of a kicked diatomic molecule whose nuclear spins
//! act as a finite bath.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the width for callers that do not care.

pub mod angmom;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod molecule;
pub mod observables;
pub mod pulse;
pub mod scalar;

pub use error::{CrmError, Result};
pub use scalar::Real;

pub type HamiltonianBlockF64 = hamiltonian::HamiltonianBlock<f64>;
pub type HamiltonianBlockF32 = hamiltonian::HamiltonianBlock<f32>;
pub type EigenSystemF64 = dynamics::EigenSystem<f64>;
pub type EigenSystemF32 = dynamics::EigenSystem<f32>;
pub type WavepacketF64 = dynamics::Wavepacket<f64>;
pub type WavepacketF32 = dynamics::Wavepacket<f32>;
pub type KickResultF64 = pulse::KickResult<f64>;
pub type KickResultF32 = pulse::KickResult<f32>;
pub type ReducedDensityMatrixF64 = observables::ReducedDensityMatrix<f64>;
