//! Parallel-in-time QUBO encoding of quantum dynamics.
//!
//! The pipeline discretises the evolution of a small quantum system on a time
//! grid, collects the whole trajectory into a history state that is the unique
//! minimiser of a convex quadratic form, binarises that form with a fixed-point
//! code and hands the resulting QUBO to classical heuristics. Decoded samples
//! give back time-ordered amplitudes and observables, and the `bench` module
//! turns solver runs into success probabilities and time-to-solution fits.
//!
//! Modules, bottom-up:
//!
//! * [`numerics`] dense complex linear algebra plus a sparse symmetric CG solve
//! * [`models`] the eight benchmark generators, time grids and the exact oracle
//! * [`clock`] clock operator, positive-definite system and real embedding
//! * [`qubo`] fixed-point binarisation, decoding, Ising form and file I/O
//! * [`solvers`] brute force, exact lattice search, simulated annealing and a
//!   ballistic momentum heuristic
//! * [`problem`] one system, grid, initial state and code, end to end
//! * [`observables`] decoded histories, `<sigma_z>` series and fidelities
//! * [`bench`] success probability, TTS and exponential scaling fits
//! * [`verify`] invariant suites shared by the CLI and the tests
//! * [`cli`] command-line front end

pub mod bench;
pub mod cli;
pub mod clock;
pub mod error;
pub mod models;
pub mod numerics;
pub mod observables;
pub mod problem;
pub mod qubo;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
