//! Decoding core for phone- and character-BPE speech recognition systems.
//!
//! The crate is `no_std` (with `alloc`) so it can be embedded wherever a
//! scorer can be attached. Everything here is pure computation over
//! in-memory text: loading files, the command line and output formats
//! live in the `jointbpe` crate.
//!
//! Pipeline overview:
//!
//! * [`subword`] learns BPE merges over phone or character sequences and
//!   decomposes words greedily into subword units.
//! * [`lexicon`] compiles a pronunciation dictionary into a prefix tree over
//!   those units.
//! * [`lm`] holds the language-model forwarding contract and a back-off
//!   n-gram implementation with ARPA I/O.
//! * [`multilevel`] fuses a subword LM and a word LM over the prefix tree.
//! * [`acoustic`] defines the acoustic scoring contract and synthetic scorers.
//! * [`decoder`] runs single-system and joint beam search.
//! * [`wer`] aligns word sequences for error-rate reporting.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod acoustic;
pub mod decoder;
mod error;
pub mod lexicon;
pub mod lm;
pub mod multilevel;
pub mod subword;
pub mod symbols;
pub mod wer;

pub use error::{Error, Result};
