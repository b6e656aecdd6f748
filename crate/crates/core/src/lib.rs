//! Federated sign-SGD training of autoencoder attack detectors for
//! simulated power-grid zones.

pub mod config;
pub mod data;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod fsio;
pub mod nn;
pub mod quantizer;
pub mod rng;
pub mod synthetic;
pub mod wire;

pub use error::{Error, Result};
