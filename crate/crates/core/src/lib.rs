//! Desk-scale laboratory for catastrophic forgetting in spiking networks.
//!
//! The pipeline: train a small convolutional classifier class-incrementally
//! on MNIST or Fashion-MNIST, convert it to a rate-coded spiking network
//! with leaky synaptic filters, simulate it over discrete time, and
//! quantify how much old-class information survives each increment.

pub mod ann;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod report;
pub mod snn;
pub mod tensor;

pub use error::{Error, Result};
