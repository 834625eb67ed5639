//! Core algorithms for transliterated zero-shot domain adaptation of CTC
//! sequence recognizers: numerics, CTC, the shared-encoder model, the
//! synthetic corpus generator, the staged training pipeline and the
//! evaluation/analysis tools.
//!
//! The crate needs only `alloc`; file formats and the command line live in
//! the companion `zsda` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// index loops mirror the math in the numeric kernels
#![allow(clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod math;
pub mod numerics;

pub use error::{Error, Result};
pub mod ctc;
pub mod model;
pub mod kv;
pub mod synth;
pub mod pipeline;
pub mod eval;
