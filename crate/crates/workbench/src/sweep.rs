//! The model × R_OFF × hidden size × modulation grid.

use std::fmt;

use memristor_eqprop::data::{Dataset, DatasetKind};
use memristor_eqprop::device::{defaults, DeviceKind};
use memristor_eqprop::network::{build_network, CircuitTopology, Network, WeightInit};
use memristor_eqprop::trainer::train;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{cell_seed, hex, ExperimentConfig, Scheme};
use crate::WorkbenchError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: DatasetKind,
    pub model: DeviceKind,
    /// Ohms.
    pub r_off: f64,
    pub hidden: usize,
    pub modulation: Scheme,
}

impl Cell {
    /// File-name friendly identifier.
    pub fn slug(&self) -> String {
        format!("{}_{}_h{}_roff{}", self.modulation, self.model, self.hidden, self.r_off)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dataset={} model={} r_off={}ohm hidden={} modulation={}",
            self.dataset, self.model, self.r_off, self.hidden, self.modulation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub losses: Vec<f64>,
    pub min_loss: f64,
    /// SHA-256 of the drawn initial memristances.
    pub init_checksum: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dataset: DatasetKind,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn get(&self, model: DeviceKind, r_off: f64, hidden: usize, modulation: Scheme) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            let k = &c.cell;
            k.model == model && k.r_off == r_off && k.hidden == hidden && k.modulation == modulation
        })
    }

    /// `(cell, min loss)` for every cell in grid order.
    pub fn min_loss_table(&self) -> Vec<(Cell, f64)> {
        self.cells.iter().map(|c| (c.cell, c.min_loss)).collect()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.cell.hidden).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.dedup();
        v
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        let mut v: Vec<Scheme> = self.cells.iter().map(|c| c.cell.modulation).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Every cell of the config in grid order: modulation, hidden size, model,
/// R_OFF.
pub fn grid(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &modulation in &config.modulations {
        for &hidden in &config.hidden {
            for &model in &config.models {
                for r_off in &config.r_off {
                    cells.push(Cell { dataset: config.dataset, model, r_off: r_off.value(), hidden, modulation });
                }
            }
        }
    }
    cells
}

fn topology(config: &ExperimentConfig, cell: &Cell) -> CircuitTopology {
    let kind = config.dataset;
    CircuitTopology { nonlinearity: config.nonlinearity, ..CircuitTopology::new(kind.features(), cell.hidden, kind.classes()) }
}

/// Initial weight draw of a cell. It does not depend on the model, so all
/// models of a (dataset, hidden size, R_OFF) slot start from the same
/// memristances.
pub fn weight_init(config: &ExperimentConfig, cell: &Cell) -> WeightInit {
    let seed = cell_seed(config.seed, config.dataset, cell.hidden, cell.r_off);
    WeightInit { seed, r_on: config.r_on.value(), r_off: cell.r_off }
}

/// The untrained network of a cell.
pub fn initial_network(config: &ExperimentConfig, cell: &Cell) -> Result<Network, memristor_eqprop::Error> {
    let params = defaults::default_params(cell.model, config.r_on.value(), cell.r_off)?;
    build_network(topology(config, cell), params, weight_init(config, cell))
}

fn checksum(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize())
}

/// Trains one cell from its initial network.
pub fn run_cell(config: &ExperimentConfig, dataset: &Dataset, cell: &Cell) -> Result<(CellResult, Network), WorkbenchError> {
    let wrap = |source| WorkbenchError::Cell { cell: *cell, source };
    let mut network = initial_network(config, cell).map_err(wrap)?;
    let init_checksum = checksum(&weight_init(config, cell).draw(network.device_count()));
    let history = train(&mut network, dataset, &config.training_config(cell.model, cell.modulation)).map_err(wrap)?;
    let result = CellResult { cell: *cell, min_loss: history.min(), losses: history.losses, init_checksum };
    Ok((result, network))
}

/// Trains every cell. Cells run in parallel; the result is in grid order and
/// independent of scheduling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, WorkbenchError> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    let cells = grid(config);
    let work = || cells.par_iter().map(|cell| run_cell(config, &dataset, cell).map(|(r, _)| r)).collect::<Result<Vec<_>, _>>();
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work)?,
        None => work()?,
    };
    Ok(SweepResult { dataset: config.dataset, seed: config.seed, cells: results })
}
