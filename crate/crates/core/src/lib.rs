//! Semi-supervised cross-modal sequence generation with GAN-driven
//! pseudo-labeling on scarcely-paired data.
//!
//! The crate contains a small reverse-mode differentiation engine
//! ([`autodiff`]), the encoder/decoder/transformer/discriminator networks
//! ([`model`]), every training objective ([`losses`]), discriminator-driven
//! pseudo-label retrieval ([`pseudo`]), a seeded synthetic benchmark
//! ([`data`]), the alternating training loop ([`trainer`]) and decoding plus
//! metrics ([`eval`]).

pub mod autodiff;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod params;
pub mod pseudo;
pub mod tokens;
pub mod trainer;

pub use error::{Error, Result};
