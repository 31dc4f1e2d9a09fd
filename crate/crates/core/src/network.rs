//! Layered nonlinear resistive network.
//!
//! Signed weights are encoded as conductance pairs. The first crossbar uses
//! wordline duplication: every feature drives two wordlines at `+U_i` and
//! `-U_i`, and a bias wordline is held at a constant voltage. The second
//! crossbar uses bitline duplication: each class owns a `+` and a `-` output
//! bitline whose voltage difference is the prediction.
//!
//! Every hidden neuron has an input node with a piecewise-linear diode
//! nonlinearity to ground and a bidirectional amplifier. The amplifier's VCVS
//! drives the neuron's output node at `A` times the input node voltage; its
//! CCCS draws the VCVS output current, attenuated by `1/A`, from the input
//! node.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{DeviceParams, DeviceState, PulseCommand};
use crate::error::{Error, Result};

/// Diode on-slope default (S).
pub const DEFAULT_ON_SLOPE: f64 = 1.0;
/// Diode leakage slope default (S).
pub const DEFAULT_LEAK_SLOPE: f64 = 1e-6;
/// Constant voltage of the bias wordline (V).
pub const DEFAULT_BIAS_VOLTAGE: f64 = 0.5;
pub const DEFAULT_GAIN: f64 = 4.0;

/// One piecewise-linear diode branch to ground.
///
/// With `forward = true` the branch conducts (slope `on_slope`) when the node
/// voltage is above `breakpoint`; with `forward = false` it conducts below
/// it. On the blocking side it leaks with slope `leak_slope`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiodeBranch {
    pub breakpoint: f64,
    pub forward: bool,
    pub on_slope: f64,
    pub leak_slope: f64,
}

impl DiodeBranch {
    pub fn conducting(&self, v: f64) -> bool {
        if self.forward {
            v > self.breakpoint
        } else {
            v < self.breakpoint
        }
    }

    pub fn slope(&self, conducting: bool) -> f64 {
        if conducting {
            self.on_slope
        } else {
            self.leak_slope
        }
    }

    /// Current (A) flowing from the node into the branch.
    pub fn current(&self, v: f64) -> f64 {
        self.slope(self.conducting(v)) * (v - self.breakpoint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// Single diode conducting above `breakpoint`.
    ReluLike { breakpoint: f64, on_slope: f64, leak_slope: f64 },
    /// Two opposed diodes clamping the node between `lower` and `upper`.
    SigmoidLike { lower: f64, upper: f64, on_slope: f64, leak_slope: f64 },
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Nonlinearity::ReluLike { breakpoint: 0.0, on_slope: DEFAULT_ON_SLOPE, leak_slope: DEFAULT_LEAK_SLOPE }
    }
}

impl Nonlinearity {
    pub fn branches(&self) -> Vec<DiodeBranch> {
        match *self {
            Nonlinearity::ReluLike { breakpoint, on_slope, leak_slope } => {
                vec![DiodeBranch { breakpoint, forward: true, on_slope, leak_slope }]
            }
            Nonlinearity::SigmoidLike { lower, upper, on_slope, leak_slope } => vec![
                DiodeBranch { breakpoint: upper, forward: true, on_slope, leak_slope },
                DiodeBranch { breakpoint: lower, forward: false, on_slope, leak_slope },
            ],
        }
    }

    fn validate(&self) -> Result<()> {
        let (on, leak) = match *self {
            Nonlinearity::ReluLike { breakpoint, on_slope, leak_slope } => {
                if !breakpoint.is_finite() {
                    return Err(Error::InvalidTopology("diode breakpoint must be finite".into()));
                }
                (on_slope, leak_slope)
            }
            Nonlinearity::SigmoidLike { lower, upper, on_slope, leak_slope } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::InvalidTopology(format!(
                        "sigmoid breakpoints must satisfy lower < upper, got {lower} and {upper}"
                    )));
                }
                (on_slope, leak_slope)
            }
        };
        if !(on.is_finite() && on > 0.0 && leak.is_finite() && leak > 0.0 && leak < on) {
            return Err(Error::InvalidTopology(format!(
                "diode slopes must satisfy 0 < leak < on, got on {on} S and leak {leak} S"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitTopology {
    pub input_count: usize,
    /// Exactly one hidden layer is supported.
    pub hidden_sizes: Vec<usize>,
    pub output_count: usize,
    pub wordline_duplication: bool,
    pub bitline_duplication: bool,
    pub bias: bool,
    /// V
    pub bias_voltage: f64,
    pub gain: f64,
    pub nonlinearity: Nonlinearity,
}

impl CircuitTopology {
    /// Standard single-hidden-layer topology with default bias, gain and
    /// ReLU-like neurons.
    pub fn new(input_count: usize, hidden: usize, output_count: usize) -> Self {
        CircuitTopology {
            input_count,
            hidden_sizes: vec![hidden],
            output_count,
            wordline_duplication: true,
            bitline_duplication: true,
            bias: true,
            bias_voltage: DEFAULT_BIAS_VOLTAGE,
            gain: DEFAULT_GAIN,
            nonlinearity: Nonlinearity::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.len() != 1 {
            return Err(Error::InvalidTopology(format!(
                "exactly one hidden layer is supported, got {}",
                self.hidden_sizes.len()
            )));
        }
        if self.input_count == 0 || self.hidden_sizes[0] == 0 || self.output_count == 0 {
            return Err(Error::InvalidTopology(format!(
                "layer sizes must be nonzero, got {}-{}-{}",
                self.input_count, self.hidden_sizes[0], self.output_count
            )));
        }
        if !(self.wordline_duplication && self.bitline_duplication && self.bias) {
            return Err(Error::InvalidTopology(
                "only wordline duplication with a bias row and bitline duplication are supported".into(),
            ));
        }
        if !self.bias_voltage.is_finite() {
            return Err(Error::InvalidTopology("bias voltage must be finite".into()));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) || self.gain * self.gain.recip() != 1.0 {
            return Err(Error::InvalidTopology(format!(
                "gain must be positive with an exactly reciprocal attenuation, got {}",
                self.gain
            )));
        }
        self.nonlinearity.validate()
    }

    pub fn hidden(&self) -> usize {
        self.hidden_sizes[0]
    }

    /// Wordlines of the first crossbar: duplicated inputs plus the bias row.
    pub fn input_nodes(&self) -> usize {
        2 * self.input_count + 1
    }

    /// Bitlines of the second crossbar.
    pub fn output_nodes(&self) -> usize {
        2 * self.output_count
    }

    pub fn device_count(&self) -> usize {
        self.input_nodes() * self.hidden() + self.hidden() * self.output_nodes()
    }

    pub fn neuron(&self) -> Neuron {
        Neuron { nonlinearity: self.nonlinearity, gain: self.gain, attenuation: self.gain.recip() }
    }

    /// Wordline voltages for a feature vector: `+U_i, -U_i` for every feature
    /// followed by the bias.
    pub fn wordline_voltages(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.input_count {
            return Err(Error::LengthMismatch { left: inputs.len(), right: self.input_count });
        }
        let mut v = Vec::with_capacity(self.input_nodes());
        for &u in inputs {
            v.push(u);
            v.push(-u);
        }
        v.push(self.bias_voltage);
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neuron {
    pub nonlinearity: Nonlinearity,
    /// Forward VCVS gain.
    pub gain: f64,
    /// Backward CCCS factor.
    pub attenuation: f64,
}

/// Current (A) drawn by the neuron's diode branches at the given node voltage.
pub fn nonlinearity_current(neuron: &Neuron, branch_voltage: f64) -> f64 {
    neuron.nonlinearity.branches().iter().map(|b| b.current(branch_voltage)).sum()
}

/// Prediction of a duplicated output pair.
pub fn signed_output(plus: f64, minus: f64) -> f64 {
    plus - minus
}

/// A memristor crossbar. All cells share one parameter set; states are stored
/// row-major.
#[derive(Clone, Debug)]
pub struct Crossbar {
    params: DeviceParams,
    rows: usize,
    cols: usize,
    states: Vec<DeviceState>,
    g: DMatrix<f64>,
}

impl Crossbar {
    pub fn from_states(params: DeviceParams, rows: usize, cols: usize, states: Vec<DeviceState>) -> Result<Self> {
        if states.len() != rows * cols {
            return Err(Error::LengthMismatch { left: states.len(), right: rows * cols });
        }
        let mut xbar = Crossbar { params, rows, cols, states, g: DMatrix::zeros(rows, cols) };
        xbar.refresh();
        Ok(xbar)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn state(&self, row: usize, col: usize) -> DeviceState {
        self.states[row * self.cols + col]
    }

    pub fn states(&self) -> &[DeviceState] {
        &self.states
    }

    /// Conductance matrix (S).
    pub fn conductance(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn memristance(&self, row: usize, col: usize) -> f64 {
        self.params.memristance(self.state(row, col))
    }

    /// Recomputes the conductance matrix from the device states.
    pub fn refresh(&mut self) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                self.g[(r, c)] = self.params.conductance(self.states[r * self.cols + c]);
            }
        }
    }

    /// Applies one pulse per device (row-major) and refreshes the
    /// conductances.
    pub fn program(&mut self, pulses: &[PulseCommand]) -> Result<()> {
        if pulses.len() != self.states.len() {
            return Err(Error::LengthMismatch { left: pulses.len(), right: self.states.len() });
        }
        for (s, p) in self.states.iter_mut().zip(pulses) {
            *s = self.params.apply_pulse(*s, *p)?;
        }
        self.refresh();
        Ok(())
    }

    /// Writes `row,col,x,memristance_ohm` rows in row-major order.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "row,col,x,memristance_ohm")?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                writeln!(out, "{r},{c},{:e},{:e}", self.state(r, c).x(), self.memristance(r, c))?;
            }
        }
        Ok(())
    }
}

/// Random initial weights, uniform in memristance over `[r_on, r_off]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightInit {
    pub seed: u64,
    pub r_on: f64,
    pub r_off: f64,
}

impl WeightInit {
    /// Draws the initial memristances (Ω) of both crossbars, row-major, first
    /// crossbar first. Depends only on the seed, the range and the sizes.
    pub fn draw(&self, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count).map(|_| rng.gen_range(self.r_on..=self.r_off)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    pub topology: CircuitTopology,
    pub neuron: Neuron,
    /// `(2·in+1) × hidden`
    pub input_crossbar: Crossbar,
    /// `hidden × (2·out)`
    pub output_crossbar: Crossbar,
}

pub fn build_network(topology: CircuitTopology, params: DeviceParams, init: WeightInit) -> Result<Network> {
    topology.validate()?;
    if !(init.r_on > 0.0 && init.r_on < init.r_off && init.r_off.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "initialization range must satisfy 0 < r_on < r_off, got [{}, {}]",
            init.r_on, init.r_off
        )));
    }
    let (n_in, h, n_out) = (topology.input_nodes(), topology.hidden(), topology.output_nodes());
    let draws = init.draw(topology.device_count());
    let mut states = draws.iter().map(|&m| params.state_for_memristance(m));
    let first: Vec<_> = states.by_ref().take(n_in * h).collect();
    let second: Vec<_> = states.collect();
    Ok(Network {
        neuron: topology.neuron(),
        input_crossbar: Crossbar::from_states(params, n_in, h, first)?,
        output_crossbar: Crossbar::from_states(params, h, n_out, second)?,
        topology,
    })
}

impl Network {
    pub fn device_count(&self) -> usize {
        self.input_crossbar.states.len() + self.output_crossbar.states.len()
    }

    pub fn refresh(&mut self) {
        self.input_crossbar.refresh();
        self.output_crossbar.refresh();
    }

    /// Device states of both crossbars, row-major, first crossbar first.
    pub fn states(&self) -> Vec<DeviceState> {
        self.input_crossbar.states.iter().chain(&self.output_crossbar.states).copied().collect()
    }

    /// Memristances of both crossbars in [`states`](Self::states) order.
    pub fn memristances(&self) -> Vec<f64> {
        let a = self.input_crossbar.states.iter().map(|s| self.input_crossbar.params.memristance(*s));
        let b = self.output_crossbar.states.iter().map(|s| self.output_crossbar.params.memristance(*s));
        a.chain(b).collect()
    }

    /// Applies one pulse per device in [`states`](Self::states) order.
    pub fn program(&mut self, pulses: &[PulseCommand]) -> Result<()> {
        if pulses.len() != self.device_count() {
            return Err(Error::LengthMismatch { left: pulses.len(), right: self.device_count() });
        }
        let (a, b) = pulses.split_at(self.input_crossbar.states.len());
        self.input_crossbar.program(a)?;
        self.output_crossbar.program(b)
    }

    /// Writes both crossbar checkpoints, each preceded by a `# crossbar N`
    /// line.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# crossbar 1")?;
        self.input_crossbar.write_checkpoint(&mut out)?;
        writeln!(out, "# crossbar 2")?;
        self.output_crossbar.write_checkpoint(&mut out)
    }
}
