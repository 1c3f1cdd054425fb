//! Quantum scrambling diffusion for small grayscale images.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: exact statevector simulation (gates, amplitude embedding,
//!   ancilla projection, finite-shot sampling).
//! - [`circuits`]: the three denoiser templates and the fixed scrambler.
//! - [`autodiff`]: adjoint gradients of a loss through one denoiser block.
//! - [`schedule`]: noise schedules and scrambling strengths.
//! - [`forward`]: the four forward degradation processes.
//! - [`reverse`]: denoiser blocks, the model, and chain sampling.
//! - [`train`]: hybrid loss, Adam, step decay and reverse-order block training.
//! - [`data`]: IDX ingestion, box-filter resizing, latent conversion.
//! - [`metrics`]: entropy traces, shot studies and PNG grid export.
//! - [`config`] and [`checkpoint`]: the on-disk run configuration and model format.

pub mod autodiff;
pub mod checkpoint;
pub mod circuits;
pub mod config;
pub mod data;
pub mod error;
pub mod forward;
pub mod metrics;
pub mod qsim;
pub mod reverse;
pub mod rng;
pub mod schedule;
pub mod train;

pub use error::{Error, Result};
pub use forward::Latent;
pub use qsim::{Gate, GateKind, StateVector};
