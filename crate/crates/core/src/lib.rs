//! Periodic steady-state analysis of one-port circuits built from series
//! and parallel interconnections of monotone elements.
//!
//! The crate provides:
//!
//! - a discrete periodic signal space with a circulant difference operator
//!   ([`signal`]),
//! - a library of one-port element laws with declared monotonicity data
//!   ([`elements`]),
//! - resolvents of those elements: cached dense factorizations for linear
//!   operators, guarded Newton for scalar laws ([`resolvent`]),
//! - fixed-point splitting solvers: forward/backward, Douglas-Rachford and
//!   a nested sweep for ladder circuits ([`splitting`]),
//! - the contraction-matrix convergence certificate and step-size tuning
//!   ([`convergence`]),
//! - a netlist grammar, series/parallel composition trees and ladder
//!   canonicalization ([`circuit`]),
//! - memristive state-space conductances ([`memristive`]) and empirical
//!   scaled-relative-graph sampling ([`srg`]).

pub mod circuit;
pub mod convergence;
pub mod elements;
pub mod error;
pub mod memristive;
pub mod resolvent;
pub mod signal;
pub mod splitting;
pub mod srg;

pub use elements::{Direction, ElementKind, ElementSpec, Modulation, MonotonicityDescriptor};
pub use error::{Error, Result};
pub use signal::{inner_product, DenseLinearMap, PeriodicSignal, WaveformSpec};
