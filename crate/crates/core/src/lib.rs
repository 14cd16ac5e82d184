//! Transfer-matrix cocycles of block-code random Schrödinger operators
//! `[Hψ](n) = ψ(n+1) + ψ(n−1) + v_n ψ(n)` with `v_n = g(ξ_n, …, ξ_{n+k−1})`.
//!
//! The crate covers seeded potentials, renormalized transfer-matrix
//! products and Lyapunov sweeps, exact projective certificates for the
//! measure condition, an exceptional-energy scanner, finite-volume
//! localization and transport diagnostics, and an exact integer model with
//! an exceptional energy at `E = 0`.

pub mod error;
pub mod example6;
pub mod cli;
pub mod cocycle;
pub mod config;
pub mod dynamics;
pub mod expr;
pub mod io;
pub mod linalg;
pub mod model;
pub mod projective;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
pub use linalg::{CMat2, Mat2, TransferMatrix};
