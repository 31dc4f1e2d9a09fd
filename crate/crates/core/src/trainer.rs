//! Equilibrium propagation training loop.
//!
//! Each epoch solves the free and the nudged equilibrium for every sample,
//! forms a per-device gradient from the change of the squared voltage drops,
//! averages it over the batch, scales it with Adam and writes it into the
//! devices as one programming pulse each.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::device::{DeviceKind, PulseCommand};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::solver::{EquilibriumState, SolverContext};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// One nudged phase at `+β`.
    #[default]
    Forward,
    /// Two nudged phases at `±β`.
    Centred,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batching {
    #[default]
    FullBatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Fixed amplitude (V), duration encodes the update.
    Pwm { const_voltage: f64 },
    /// Fixed duration `1/const_frequency` (Hz), amplitude encodes the update.
    Pam { const_frequency: f64 },
}

impl Modulation {
    pub fn pulse(&self, update: f64, kind: DeviceKind) -> PulseCommand {
        match *self {
            Modulation::Pwm { const_voltage } => pwm_modulate(update, const_voltage, kind),
            Modulation::Pam { const_frequency } => pam_modulate(update, const_frequency, kind),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Pwm { .. } => "pwm",
            Modulation::Pam { .. } => "pam",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.5, beta2: 0.5, epsilon: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub eta: f64,
    pub beta: f64,
    pub epochs: usize,
    pub batching: Batching,
    pub estimator: Estimator,
    pub modulation: Modulation,
    pub adam: AdamConfig,
    /// Signed output voltage encoding the active class (V).
    pub target_voltage: f64,
}

impl TrainingConfig {
    pub fn new(eta: f64, modulation: Modulation) -> Self {
        TrainingConfig {
            eta,
            beta: 1e-6,
            epochs: 50,
            batching: Batching::FullBatch,
            estimator: Estimator::Forward,
            modulation,
            adam: AdamConfig::default(),
            target_voltage: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta must be finite and > 0, got {}", self.eta));
        }
        if !self.beta.is_finite() || self.beta == 0.0 {
            return bad(format!("beta must be finite and nonzero, got {}", self.beta));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        match self.modulation {
            Modulation::Pwm { const_voltage: v } if !(v.is_finite() && v > 0.0) => {
                return bad(format!("PWM voltage must be > 0, got {v}"));
            }
            Modulation::Pam { const_frequency: f } if !(f.is_finite() && f > 0.0) => {
                return bad(format!("PAM frequency must be > 0, got {f}"));
            }
            _ => {}
        }
        let AdamConfig { beta1, beta2, epsilon } = self.adam;
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0) {
            return bad(format!("invalid Adam parameters {:?}", self.adam));
        }
        if !self.target_voltage.is_finite() {
            return bad("target voltage must be finite".into());
        }
        Ok(())
    }
}

/// `((ΔU^β)² - (ΔU⁰)²) / β`.
pub fn raw_gradient(du_free: f64, du_nudged: f64, beta: f64) -> f64 {
    (du_nudged - du_free) * (du_nudged + du_free) / beta
}

/// Per-device gradient from a free and a nudged state, in device order
/// (row-major, first crossbar first). Drop differences are taken node by node
/// to avoid cancelling the wordline voltages.
pub fn state_gradient(free: &EquilibriumState, nudged: &EquilibriumState, beta: f64) -> Vec<f64> {
    let (n_in, h, n_out) = (free.wordlines.len(), free.hidden.len(), free.outputs.len());
    let mut g = Vec::with_capacity(n_in * h + h * n_out);
    for i in 0..n_in {
        for j in 0..h {
            let diff = -(nudged.hidden[j] - free.hidden[j]);
            g.push(diff * (free.input_drop(i, j) + nudged.input_drop(i, j)) / beta);
        }
    }
    for j in 0..h {
        let dw = nudged.amplified[j] - free.amplified[j];
        for k in 0..n_out {
            let diff = dw - (nudged.outputs[k] - free.outputs[k]);
            g.push(diff * (free.output_drop(j, k) + nudged.output_drop(j, k)) / beta);
        }
    }
    g
}

/// Per-device Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(devices: usize) -> Self {
        OptimizerState { m: vec![0.0; devices], v: vec![0.0; devices], t: 0 }
    }

    /// Advances the moments with `grad` and returns `η·m̂/(√v̂ + ε)` per device.
    pub fn adam_step(&mut self, grad: &[f64], eta: f64, cfg: &AdamConfig) -> Vec<f64> {
        assert_eq!(grad.len(), self.m.len(), "gradient length");
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let c2 = 1.0 - cfg.beta2.powi(self.t as i32);
        grad.iter()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
            .map(|(g, (m, v))| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                eta * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon)
            })
            .collect()
    }
}

/// Fixed-amplitude pulse whose width encodes `|update|`. A positive update
/// lowers the conductance, so it is written with a negative voltage, except
/// on VTEAM whose switching polarity is reversed.
pub fn pwm_modulate(update: f64, const_voltage: f64, kind: DeviceKind) -> PulseCommand {
    let mut amplitude = if update >= 0.0 { -const_voltage } else { const_voltage };
    if kind.reversed_polarity() {
        amplitude = -amplitude;
    }
    PulseCommand::new(amplitude, update.abs() / const_voltage)
}

/// Fixed-width pulse whose amplitude encodes the update.
pub fn pam_modulate(update: f64, const_frequency: f64, kind: DeviceKind) -> PulseCommand {
    let duration = 1.0 / const_frequency;
    let mut amplitude = -update / duration;
    if kind.reversed_polarity() {
        amplitude = -amplitude;
    }
    PulseCommand::new(amplitude, duration)
}

/// Mean over classes of the squared error, then mean over the batch.
pub fn mse_loss(predictions: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: targets.len() });
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        if p.len() != t.len() || p.is_empty() {
            return Err(Error::LengthMismatch { left: p.len(), right: t.len() });
        }
        total += p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
    }
    Ok(total / predictions.len() as f64)
}

/// Loss per epoch, computed from the free-phase predictions before the
/// epoch's update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossHistory {
    pub losses: Vec<f64>,
}

impl LossHistory {
    pub fn min(&self) -> f64 {
        self.losses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `epoch,loss` rows, epochs counted from 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "epoch,loss")?;
        for (e, l) in self.losses.iter().enumerate() {
            writeln!(out, "{},{l:e}", e + 1)?;
        }
        Ok(())
    }
}

/// Result of one full-batch pass without programming.
#[derive(Clone, Debug)]
pub struct BatchGradient {
    pub loss: f64,
    /// Mean raw gradient per device.
    pub gradient: Vec<f64>,
    pub predictions: Vec<Vec<f64>>,
}

fn scaled_targets(dataset: &Dataset, config: &TrainingConfig) -> Vec<Vec<f64>> {
    dataset
        .targets
        .iter()
        .map(|t| t.iter().map(|v| v * config.target_voltage).collect())
        .collect()
}

/// Free and nudged solves for every sample and the batch-mean gradient.
/// `epoch` only labels errors.
pub fn batch_gradient(network: &Network, dataset: &Dataset, config: &TrainingConfig, epoch: usize) -> Result<BatchGradient> {
    let ctx = SolverContext::new(network);
    let targets = scaled_targets(dataset, config);
    let beta = config.beta;
    let per_sample: Vec<Result<(Vec<f64>, Vec<f64>)>> = dataset
        .features
        .par_iter()
        .zip(targets.par_iter())
        .enumerate()
        .map(|(sample, (x, y))| {
            let wrap = |e: Error| Error::Training { epoch, sample, source: Box::new(e) };
            let free = ctx.solve_free(x).map_err(wrap)?;
            let plus = ctx.solve_nudged(&free, y, beta).map_err(wrap)?;
            let grad = match config.estimator {
                Estimator::Forward => state_gradient(&free, &plus, beta),
                Estimator::Centred => {
                    let minus = ctx.solve_nudged(&free, y, -beta).map_err(wrap)?;
                    state_gradient(&minus, &plus, 2.0 * beta)
                }
            };
            Ok((free.predictions(), grad))
        })
        .collect();

    let mut gradient = vec![0.0; network.device_count()];
    let mut predictions = Vec::with_capacity(dataset.len());
    for r in per_sample {
        let (pred, g) = r?;
        for (acc, v) in gradient.iter_mut().zip(&g) {
            *acc += v;
        }
        predictions.push(pred);
    }
    let n = dataset.len() as f64;
    for v in &mut gradient {
        *v /= n;
    }
    let loss = mse_loss(&predictions, &targets)?;
    Ok(BatchGradient { loss, gradient, predictions })
}

/// Free-phase loss of the network on the dataset.
pub fn evaluate(network: &Network, dataset: &Dataset, config: &TrainingConfig) -> Result<f64> {
    let ctx = SolverContext::new(network);
    let predictions = dataset
        .features
        .par_iter()
        .enumerate()
        .map(|(sample, x)| {
            ctx.solve_free(x)
                .map(|s| s.predictions())
                .map_err(|e| Error::Training { epoch: 0, sample, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    mse_loss(&predictions, &scaled_targets(dataset, config))
}

pub fn train(network: &mut Network, dataset: &Dataset, config: &TrainingConfig) -> Result<LossHistory> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    let kind = network.input_crossbar.params().kind();
    let mut opt = OptimizerState::new(network.device_count());
    let mut history = LossHistory::default();
    for epoch in 1..=config.epochs {
        let batch = batch_gradient(network, dataset, config, epoch)?;
        history.losses.push(batch.loss);
        let updates = opt.adam_step(&batch.gradient, config.eta, &config.adam);
        let pulses: Vec<PulseCommand> = updates.iter().map(|u| config.modulation.pulse(*u, kind)).collect();
        network.program(&pulses)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_gradient_examples() {
        assert_eq!(raw_gradient(0.3, 0.3, 1e-6), 0.0);
        let g = raw_gradient(0.10, 0.11, 1e-6);
        assert!((g - 2100.0).abs() < 1e-6, "{g}");
        assert_eq!(raw_gradient(-0.10, -0.11, 1e-6), g);
    }

    #[test]
    fn adam_examples() {
        let cfg = AdamConfig::default();
        let mut opt = OptimizerState::new(1);
        assert_eq!(opt.adam_step(&[0.0], 0.1, &cfg), vec![0.0]);

        for g in [3.0, -1e-4, 250.0] {
            let mut opt = OptimizerState::new(1);
            let u = opt.adam_step(&[g], 0.1, &cfg)[0];
            assert_eq!(u.signum(), g.signum());
        }

        let mut opt = OptimizerState::new(2);
        let mut last = vec![];
        for _ in 0..100 {
            last = opt.adam_step(&[0.7, -42.0], 0.01, &cfg);
        }
        assert!((last[0] - 0.01).abs() < 1e-9);
        assert!((last[1] + 0.01).abs() < 1e-9);
        assert!(opt.v.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn pwm_examples() {
        assert_eq!(pwm_modulate(0.5, 1.0, DeviceKind::Joglekar), PulseCommand::new(-1.0, 0.5));
        assert_eq!(pwm_modulate(-0.2, 1.0, DeviceKind::Joglekar), PulseCommand::new(1.0, 0.2));
        assert_eq!(pwm_modulate(0.5, 1.0, DeviceKind::Vteam), PulseCommand::new(1.0, 0.5));
    }

    #[test]
    fn pam_examples() {
        let p = pam_modulate(0.0, 1e6, DeviceKind::Biolek);
        assert_eq!(p.amplitude, 0.0);
        assert_eq!(p.duration, 1e-6);
        let p = pam_modulate(2e-6, 1e6, DeviceKind::Biolek);
        assert!((p.amplitude + 2.0).abs() < 1e-12);
        assert_eq!(p.duration, 1e-6);
        let v = pam_modulate(2e-6, 1e6, DeviceKind::Vteam);
        assert_eq!(v.amplitude, -p.amplitude);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[vec![1.0, 0.0]], &[vec![1.0, 0.0]]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[vec![0.5]], &[vec![1.0]]).unwrap(), 0.25);
        assert!(matches!(mse_loss(&[vec![0.5]], &[vec![1.0, 0.0]]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(mse_loss(&[vec![0.5]], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn loss_csv() {
        let h = LossHistory { losses: vec![0.5, 0.25] };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,loss\n1,5e-1\n2,2.5e-1\n");
        assert_eq!(h.min(), 0.25);
    }

    #[test]
    fn config_validation() {
        let ok = TrainingConfig::new(1e-8, Modulation::Pwm { const_voltage: 1.0 });
        assert!(ok.validate().is_ok());
        assert!(TrainingConfig { beta: 0.0, ..ok }.validate().is_err());
        assert!(TrainingConfig { epochs: 0, ..ok }.validate().is_err());
        assert!(TrainingConfig { modulation: Modulation::Pwm { const_voltage: 0.0 }, ..ok }.validate().is_err());
        assert!(TrainingConfig { modulation: Modulation::Pam { const_frequency: -1.0 }, ..ok }.validate().is_err());
        assert!(TrainingConfig { beta: -1e-6, ..ok }.validate().is_ok());
    }
}
