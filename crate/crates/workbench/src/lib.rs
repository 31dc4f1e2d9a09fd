//! Experiment harness: configuration files, parameter sweeps, heatmaps and
//! device characterization.

pub mod characterize;
pub mod config;
pub mod heatmap;
pub mod sweep;
pub mod units;

pub use characterize::{characterize, Characterization, Direction};
pub use config::{ExperimentConfig, Scheme};
pub use heatmap::{emit_heatmap, Heatmap};
pub use sweep::{run_sweep, Cell, CellResult, SweepResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("config: {0}")]
    Config(String),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: Cell,
        #[source]
        source: memristor_eqprop::Error,
    },

    #[error(transparent)]
    Core(#[from] memristor_eqprop::Error),

    #[error("nothing to render: the selection has no cells")]
    EmptyResult,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}
