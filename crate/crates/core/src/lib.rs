//! Quantum Ziv-Zakai lower bounds on the total mean-square error of
//! multi-parameter (vector) phase estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`fockcore`]: sparse multimode Fock states, energy spectra, fidelities and
//!   generator statistics.
//! - [`zzb`]: numeric Ziv-Zakai integrals, valley filling and the closed-form
//!   Margolus-Levitin (ML) / Mandelstam-Tamm (MT) bounds.
//! - [`probes`]: the entangled optimal probe, NOON states and the cyclic
//!   multimode squeezed vacuum, together with the simultaneous-vs-individual
//!   estimation comparisons built on them.
//! - [`noisechan`]: effective-generator bounds under photon loss and phase
//!   diffusion, with grid-searched variational parameters.
//! - [`oracle`]: brute-force verifiers (dense exponentials, truncated Fock
//!   simulation, Helstrom error, Uhlmann fidelity, adaptive quadrature).

#![forbid(unsafe_code)]

pub mod error;
pub mod fockcore;
pub mod linalg;
pub mod noisechan;
pub mod oracle;
pub mod probes;
pub mod zzb;

pub use error::{Error, Result};
pub use fockcore::{
    EnergySpectrum, FockState, GeneratorStats, OccupationVector, SpeedLimitConstants,
    DEFAULT_LAMBDA,
};
pub use zzb::{BoundReport, PriorWindow, QuadratureConfig, QuadratureRule};
