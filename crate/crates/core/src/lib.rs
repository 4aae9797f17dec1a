//! Unsupervised knowledge graph alignment by least-fixed-point fuzzy inference.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature enables parallel
//! rule evaluation; results are identical with or without it.

#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod engine;
pub mod error;
pub mod eval;
pub mod explain;
pub mod fis;
pub mod functionality;
pub mod kg;
pub mod literal;
pub mod value;

pub use error::{Error, Result};

pub(crate) type FxMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
