//! Syndrome-subspace dynamics for stabilizer-encoded adiabatic evolution.
//!
//! The crate models a stabilizer-encoded register coupled to a thermal
//! environment as a classical Markov process over syndrome subspaces:
//!
//! - [`pauli`] / [`code`]: binary-symplectic Pauli algebra, stabilizer codes,
//!   syndrome extraction, elementary-error models;
//! - [`classify`]: minimal-weight decoding and correctability of accumulated
//!   error products;
//! - [`graph`]: the syndrome transition graph with per-edge energy factors;
//! - [`bath`]: Ohmic (Lorentz-Drude) spectral densities, thermal occupations,
//!   quantum correlation functions, and Markov/time-dependent transition
//!   rates;
//! - [`suppression`]: energy-penalty and decoupling modulation functions and
//!   the two-level codespace leakage dynamics they produce;
//! - [`correction`]: the classical master equation over correctable
//!   syndromes, with optional local-cooling reservoirs;
//! - [`stability`]: the lumped one-dimensional random walk over error weight,
//!   closed-form mean hitting times, bounds, a Monte Carlo oracle, and
//!   parameter scans.
//!
//! Units are fixed crate-wide: hbar = k_B = 1, energies and temperatures are
//! angular frequencies in MHz, and time is in microseconds.

pub mod bath;
pub mod classify;
pub mod code;
pub mod correction;
pub mod graph;
pub mod logspace;
pub mod pauli;
pub mod quad;
pub mod stability;
pub mod suppression;

mod expm;

pub use classify::{classify, CorrectabilityTable, TransitionClass};
pub use code::{
    bit_flip_code, five_qubit_code, registry, registry_code, steane_code, CodeSpec,
    ElementaryError, ErrorModel, StabilizerCode, Syndrome,
};
pub use graph::{build_graph, varpi, SyndromeGraph};
pub use pauli::{Pauli, PauliOperator};
