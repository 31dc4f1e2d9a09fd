//! Sinusoidal hysteresis characterization of single devices.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use memristor_eqprop::device::defaults::{self, characterization_start, R_ON_OHM};
use memristor_eqprop::device::{simulate_waveform, DeviceKind, DeviceParams, WaveformTrace};
use serde::{Deserialize, Serialize};

use crate::WorkbenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Positive voltage lowers the memristance.
    Normal,
    /// Positive voltage raises the memristance.
    Reversed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopMetrics {
    pub frequency: f64,
    /// Shoelace area of the u-i loop (W).
    pub loop_area: f64,
    /// Largest |i| at a zero crossing of u over the peak |i|.
    pub pinch_ratio: f64,
    pub trace: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub model: DeviceKind,
    pub amplitude: f64,
    pub r_off: f64,
    pub low: LoopMetrics,
    pub high: LoopMetrics,
    pub direction: Direction,
}

/// Memristance change over the first positive half-wave.
fn direction(params: &DeviceParams, trace: &WaveformTrace) -> Direction {
    let lobe = trace
        .half_waves()
        .into_iter()
        .find(|lobe| lobe.iter().any(|s| s.u > 0.0))
        .expect("a sine drive has a positive half-wave");
    let start = params.memristance(params.state(lobe[0].x));
    let end = params.memristance(params.state(lobe[lobe.len() - 1].x));
    if end > start {
        Direction::Reversed
    } else {
        Direction::Normal
    }
}

/// Drives `model` with one period of a sine at each frequency, writes both
/// traces and `<model>_metrics.json` into `out_dir` and returns the metrics.
pub fn characterize(
    model: DeviceKind,
    amplitude: f64,
    (f_low, f_high): (f64, f64),
    r_off: f64,
    steps_per_period: usize,
    out_dir: impl AsRef<Path>,
) -> Result<Characterization, WorkbenchError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let params = defaults::default_params(model, R_ON_OHM, r_off)?;
    let start = characterization_start(&params);
    let run = |f: f64| -> Result<(LoopMetrics, WaveformTrace), WorkbenchError> {
        let trace = simulate_waveform(&params, start, amplitude, f, 1, 1.0 / (f * steps_per_period as f64))?;
        let path = out_dir.join(format!("{model}_{f}Hz.csv"));
        trace.write_csv(BufWriter::new(File::create(&path)?))?;
        let metrics = LoopMetrics { frequency: f, loop_area: trace.loop_area(), pinch_ratio: trace.pinch_ratio(), trace: path };
        Ok((metrics, trace))
    };
    let (low, low_trace) = run(f_low)?;
    let (high, _) = run(f_high)?;
    let result = Characterization { model, amplitude, r_off, direction: direction(&params, &low_trace), low, high };
    let file = File::create(out_dir.join(format!("{model}_metrics.json")))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &result)?;
    Ok(result)
}
