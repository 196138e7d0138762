//! Electron-on-helium cavity QED: the Stark-shifted 1D hydrogen problem,
//! experimental figures of merit, and Jaynes-Cummings dynamics on truncated
//! Fock spaces.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod feasibility;
pub mod hamiltonians;
pub mod hydrogen;
pub mod numerics;
pub mod operators;
pub mod states;

pub use dynamics::{EvolutionResult, Generator, RabiSpectrum};
pub use error::{Error, Result};
pub use feasibility::{FeasibilityReport, PhysicalParams, TransitionData};
pub use hamiltonians::{ModelFrequencies, TimeDependentHamiltonian};
pub use hydrogen::{GridSpec, HydrogenSolution};
pub use operators::{Operator, TensorSpace, C64, CMatrix, CVector};
pub use states::{QuantumState, QubitLevel};
