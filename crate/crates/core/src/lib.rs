//! Classical LSTM and hybrid quantum-classical QLSTM forecasters.
//!
//! The crate bundles everything needed to compare the two recurrent cells on
//! a univariate-target time series:
//!
//! - [`statevector`]: exact statevector simulation of `{H, RX, RY, RZ, CNOT}`.
//! - [`vqc`]: variational circuits with parameter-shift gradients.
//! - [`lstm`] and [`qlstm`]: the two cells with full backpropagation through time.
//! - [`training`]: MSE loss, Adam and the epoch loop.
//! - [`dataset`]: CSV ingestion, interpolation, scaling and windowing.

pub mod dataset;
pub mod error;
pub mod linalg;
pub mod lstm;
pub mod model;
pub mod qlstm;
pub mod statevector;
pub mod training;
pub mod vqc;

pub use error::{ForecastError, Result};
pub use model::{Forecaster, Model, ModelKind, NamedArray, Parameterized};
