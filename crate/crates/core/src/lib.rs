//! Constant-envelope (CE) precoding for the multi-user MISO downlink.
//!
//! The library solves the constructive-interference CE precoding problem with
//! a Riemannian conjugate gradient on the oblique manifold of unit-column
//! 2×N real matrices, and ships five baseline solvers (gradient descent and
//! RCG on the interference-reduction objective, cross-entropy optimization
//! for both objectives, and a relax-then-normalize surrogate for the convex
//! relaxation). A Monte-Carlo harness measures symbol error rates and solve
//! times; the `ceprecode` binary drives batch experiments from plain-text
//! config files.
//!
//! Module map:
//! - [`manifold`] — oblique and complex-circle geometry (projection,
//!   retraction, transport).
//! - [`objective`] — channel rotation, the per-user linear forms, the exact
//!   max objective, its log-sum-exp smoothing and closed-form gradient.
//! - [`solver`] — the Riemannian conjugate gradient with Polak-Ribière
//!   directions, Armijo backtracking and a per-iteration flop model.
//! - [`baselines`] — GD-IR, RCG-IR, CEO-IR, CEO-CI and the relaxed-CI
//!   surrogate.
//! - [`sim`] — channels, symbols, noise, detection and the SER/timing
//!   Monte-Carlo loops.
//! - [`config`] / [`experiment`] / [`plot`] — the experiment runner behind
//!   the CLI.

pub mod baselines;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifold;
pub mod objective;
pub mod plot;
pub mod sim;
pub mod solver;
pub mod streams;

pub use error::{Error, Result};

/// Library version, embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
