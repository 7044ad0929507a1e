//! Experiment configuration, matrix execution and plot generation.

pub mod config;
pub mod matrix;
pub mod plot;

pub use config::{ExperimentConfig, Matrix};
pub use matrix::{run_matrix, MatrixReport, SummaryRow};
pub use plot::emit_plots;
