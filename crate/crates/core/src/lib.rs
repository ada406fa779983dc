//! Hash-property coding over prime fields.
//!
//! This crate holds the algorithmic core: prime-field arithmetic, the sparse
//! matrix ensemble and its closed-form collision diagnostics, the
//! method-of-types toolkit, exhaustive coset coding (maximum-likelihood and
//! minimum-divergence), and the six code constructions built on top of them
//! (Slepian-Wolf, channel, Gel'fand-Pinsker, lossy, Wyner-Ziv and
//! one-helps-one).
//!
//! Everything here is `no_std` with `alloc`. File formats, configuration and
//! the experiment harness live in the `hashprop` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod coset;
pub mod diagnostics;
pub mod ensemble;
pub mod gf;
pub mod matrix;
pub mod rng;
pub mod sim;
pub mod schemes;
pub mod types;

mod math;

pub use coset::{CosetBudget, CosetDescription, CosetError};
pub use gf::{FieldElement, FieldError, FieldSpec, Symbol};
pub use matrix::{MatrixError, SparseMatrix};
pub use rng::Seed;
