//! Memristor device models.
//!
//! Every model shares one internal state variable `x`, normalized so that the
//! upper bound maps to `R_ON` and the lower bound maps to `R_OFF`. Memristance
//! is monotonically decreasing in `x` for every kind. A positive voltage drives
//! `x` up (towards `R_ON`) for every kind except VTEAM, whose hysteresis runs
//! the other way.

pub mod defaults;
mod waveform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use waveform::{simulate_waveform, WaveformSample, WaveformTrace};

/// Pulses are integrated with at least this many RK4 substeps.
pub const MIN_PULSE_SUBSTEPS: usize = 64;

/// Largest state change (as a fraction of the state range) allowed in a single
/// pulse substep.
const MAX_STATE_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    LinearBaseline,
    LinearIonDrift,
    Joglekar,
    Biolek,
    Vteam,
    Yakopcic,
    Mms,
}

impl DeviceKind {
    /// All kinds in heatmap row order.
    pub const ALL: [DeviceKind; 7] = [
        DeviceKind::LinearBaseline,
        DeviceKind::LinearIonDrift,
        DeviceKind::Joglekar,
        DeviceKind::Biolek,
        DeviceKind::Vteam,
        DeviceKind::Yakopcic,
        DeviceKind::Mms,
    ];

    /// The six physical memristor models (everything but the baseline).
    pub const MEMRISTORS: [DeviceKind; 6] = [
        DeviceKind::LinearIonDrift,
        DeviceKind::Joglekar,
        DeviceKind::Biolek,
        DeviceKind::Vteam,
        DeviceKind::Yakopcic,
        DeviceKind::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::LinearBaseline => "linear_baseline",
            DeviceKind::LinearIonDrift => "linear_ion_drift",
            DeviceKind::Joglekar => "joglekar",
            DeviceKind::Biolek => "biolek",
            DeviceKind::Vteam => "vteam",
            DeviceKind::Yakopcic => "yakopcic",
            DeviceKind::Mms => "mms",
        }
    }

    /// VTEAM moves towards `R_OFF` under positive voltage.
    pub fn reversed_polarity(self) -> bool {
        matches!(self, DeviceKind::Vteam)
    }

    /// Kinds whose state after a pulse depends only on the voltage-time
    /// integral of the pulse.
    pub fn flux_driven(self) -> bool {
        matches!(
            self,
            DeviceKind::LinearBaseline
                | DeviceKind::LinearIonDrift
                | DeviceKind::Joglekar
                | DeviceKind::Biolek
        )
    }

    /// Kinds with a hard voltage deadband.
    pub fn hard_threshold(self) -> bool {
        matches!(self, DeviceKind::Vteam | DeviceKind::Yakopcic)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeviceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        DeviceKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "linear" | "baseline" | "linear_updates" => Some(DeviceKind::LinearBaseline),
                "hp" | "strukov" => Some(DeviceKind::LinearIonDrift),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParams(format!("unknown device kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VteamParams {
    /// Negative switching threshold (V).
    pub v_on: f64,
    /// Positive switching threshold (V).
    pub v_off: f64,
    /// Rate towards `R_ON` (1/s).
    pub k_on: f64,
    /// Rate towards `R_OFF` (1/s).
    pub k_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// Exponent of the destination-side window.
    pub window_p: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YakopcicParams {
    /// Unified current scaling factor (S).
    pub a: f64,
    /// Current nonlinearity (1/V).
    pub b: f64,
    /// State rate scaling (1/s).
    pub lambda: f64,
    /// Positive threshold (V).
    pub v_p: f64,
    /// Negative threshold magnitude (V).
    pub v_n: f64,
    pub alpha_p: f64,
    pub alpha_n: f64,
    pub x_p: f64,
    pub x_n: f64,
    /// Lower state bound, mapping to `R_OFF`.
    pub x_on: f64,
}

impl YakopcicParams {
    /// Memristance at `x = 1`, evaluated at the 1 V reference.
    pub fn r_on(&self) -> f64 {
        1.0 / (self.a * self.b.sinh())
    }

    /// Window for positive drive (state increasing).
    pub fn window_p(&self, x: f64) -> f64 {
        if x >= self.x_p {
            (-self.alpha_p * (x - self.x_p)).exp() * ((self.x_p - x) / (1.0 - self.x_p) + 1.0)
        } else {
            1.0
        }
    }

    /// Window for negative drive (state decreasing), vanishing at `x_on`.
    pub fn window_n(&self, x: f64) -> f64 {
        if x < self.x_on {
            0.0
        } else if x <= 1.0 - self.x_n {
            (self.alpha_n * (x + self.x_n - 1.0)).exp() * (x - self.x_on) / (self.x_n - self.x_on)
        } else {
            1.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsParams {
    /// Time constant (s).
    pub t_c: f64,
    /// Switching threshold (V).
    pub v_th: f64,
    /// Thermal voltage scale (V).
    pub v_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    /// Conductance moves linearly with the applied voltage-time integral.
    LinearBaseline { k: f64 },
    /// `k` in 1/C.
    LinearIonDrift { k: f64 },
    Joglekar { k: f64, p: u32 },
    Biolek { k: f64, p: u32 },
    Vteam(VteamParams),
    Yakopcic(YakopcicParams),
    Mms(MmsParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub r_on: f64,
    pub r_off: f64,
    pub model: ModelParams,
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DeviceState {
    x: f64,
}

impl DeviceState {
    pub fn x(self) -> f64 {
        self.x
    }
}

/// A rectangular programming pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseCommand {
    /// Signed amplitude (V).
    pub amplitude: f64,
    /// Duration (s).
    pub duration: f64,
}

impl PulseCommand {
    pub fn new(amplitude: f64, duration: f64) -> Self {
        PulseCommand { amplitude, duration }
    }

    /// Signed voltage-time integral (V·s).
    pub fn flux(&self) -> f64 {
        self.amplitude * self.duration
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl DeviceParams {
    pub fn new(r_on: f64, r_off: f64, model: ModelParams) -> Result<Self> {
        let params = DeviceParams { r_on, r_off, model };
        params.validate()?;
        Ok(params)
    }

    /// Yakopcic device whose `R_ON` follows from `a` and `b` and whose lower
    /// state bound follows from `R_OFF`.
    pub fn yakopcic(r_off: f64, mut model: YakopcicParams) -> Result<Self> {
        let r_on = model.r_on();
        model.x_on = r_on / r_off;
        Self::new(r_on, r_off, ModelParams::Yakopcic(model))
    }

    pub fn validate(&self) -> Result<()> {
        positive("r_on", self.r_on)?;
        positive("r_off", self.r_off)?;
        if self.r_off <= self.r_on {
            return Err(Error::InvalidParams(format!(
                "r_off ({}) must exceed r_on ({})",
                self.r_off, self.r_on
            )));
        }
        match self.model {
            ModelParams::LinearBaseline { k } | ModelParams::LinearIonDrift { k } => positive("k", k),
            ModelParams::Joglekar { k, p } | ModelParams::Biolek { k, p } => {
                positive("k", k)?;
                if p == 0 {
                    return Err(Error::InvalidParams("window exponent p must be >= 1".into()));
                }
                Ok(())
            }
            ModelParams::Vteam(v) => {
                positive("k_on", v.k_on)?;
                positive("k_off", v.k_off)?;
                positive("alpha_on", v.alpha_on)?;
                positive("alpha_off", v.alpha_off)?;
                positive("v_off", v.v_off)?;
                if !(v.v_on.is_finite() && v.v_on < 0.0) {
                    return Err(Error::InvalidParams("VTEAM v_on must be negative".into()));
                }
                if v.window_p == 0 {
                    return Err(Error::InvalidParams("window exponent must be >= 1".into()));
                }
                Ok(())
            }
            ModelParams::Yakopcic(y) => {
                positive("a", y.a)?;
                positive("b", y.b)?;
                positive("lambda", y.lambda)?;
                positive("v_p", y.v_p)?;
                positive("v_n", y.v_n)?;
                positive("alpha_p", y.alpha_p)?;
                positive("alpha_n", y.alpha_n)?;
                if !(0.0..1.0).contains(&y.x_p) {
                    return Err(Error::InvalidParams("x_p must lie in [0, 1)".into()));
                }
                if !(y.x_on >= 0.0 && y.x_on < 1.0 - y.x_n && y.x_on < y.x_n) {
                    return Err(Error::InvalidParams(format!(
                        "Yakopcic requires 0 <= x_on < min(x_n, 1 - x_n); x_on = {}, x_n = {}",
                        y.x_on, y.x_n
                    )));
                }
                let rel = |a: f64, b: f64| ((a - b) / b).abs();
                if rel(self.r_on, y.r_on()) > 1e-9 || rel(y.x_on * self.r_off, self.r_on) > 1e-9 {
                    return Err(Error::InvalidParams(
                        "Yakopcic r_on/x_on inconsistent with a, b and r_off".into(),
                    ));
                }
                Ok(())
            }
            ModelParams::Mms(m) => {
                positive("t_c", m.t_c)?;
                positive("v_th", m.v_th)?;
                positive("v_t", m.v_t)
            }
        }
    }

    pub fn kind(&self) -> DeviceKind {
        match self.model {
            ModelParams::LinearBaseline { .. } => DeviceKind::LinearBaseline,
            ModelParams::LinearIonDrift { .. } => DeviceKind::LinearIonDrift,
            ModelParams::Joglekar { .. } => DeviceKind::Joglekar,
            ModelParams::Biolek { .. } => DeviceKind::Biolek,
            ModelParams::Vteam(_) => DeviceKind::Vteam,
            ModelParams::Yakopcic(_) => DeviceKind::Yakopcic,
            ModelParams::Mms(_) => DeviceKind::Mms,
        }
    }

    /// `(x_min, x_max)`.
    pub fn state_bounds(&self) -> (f64, f64) {
        match self.model {
            ModelParams::Yakopcic(y) => (y.x_on, 1.0),
            _ => (0.0, 1.0),
        }
    }

    /// State clamped into bounds.
    pub fn state(&self, x: f64) -> DeviceState {
        let (lo, hi) = self.state_bounds();
        DeviceState { x: x.clamp(lo, hi) }
    }

    /// High-resistance bound.
    pub fn hrs(&self) -> DeviceState {
        self.state(self.state_bounds().0)
    }

    /// Low-resistance bound.
    pub fn lrs(&self) -> DeviceState {
        self.state(self.state_bounds().1)
    }

    /// Resistance (Ω) at the given state, always within `[r_on, r_off]`.
    pub fn memristance(&self, state: DeviceState) -> f64 {
        let x = state.x;
        let m = match self.model {
            ModelParams::LinearIonDrift { .. }
            | ModelParams::Joglekar { .. }
            | ModelParams::Biolek { .. }
            | ModelParams::Vteam(_) => self.r_on * x + self.r_off * (1.0 - x),
            ModelParams::LinearBaseline { .. } | ModelParams::Mms(_) => {
                1.0 / (x / self.r_on + (1.0 - x) / self.r_off)
            }
            ModelParams::Yakopcic(y) => 1.0 / (y.a * x * y.b.sinh()),
        };
        m.clamp(self.r_on, self.r_off)
    }

    pub fn conductance(&self, state: DeviceState) -> f64 {
        1.0 / self.memristance(state)
    }

    /// Inverse of [`memristance`](Self::memristance).
    pub fn state_for_memristance(&self, m: f64) -> DeviceState {
        let m = m.clamp(self.r_on, self.r_off);
        let x = match self.model {
            ModelParams::LinearIonDrift { .. }
            | ModelParams::Joglekar { .. }
            | ModelParams::Biolek { .. }
            | ModelParams::Vteam(_) => (self.r_off - m) / (self.r_off - self.r_on),
            ModelParams::LinearBaseline { .. } | ModelParams::Mms(_) => {
                (1.0 / m - 1.0 / self.r_off) / (1.0 / self.r_on - 1.0 / self.r_off)
            }
            ModelParams::Yakopcic(y) => 1.0 / (y.a * y.b.sinh() * m),
        };
        self.state(x)
    }

    /// Device current (A) for the applied voltage.
    pub fn current(&self, state: DeviceState, voltage: f64) -> f64 {
        voltage / self.memristance(state)
    }

    /// `dx/dt` (1/s) for the given terminal voltage and current.
    pub fn state_derivative(&self, state: DeviceState, voltage: f64, current: f64) -> f64 {
        let x = state.x;
        match self.model {
            ModelParams::LinearBaseline { k } => k * voltage,
            ModelParams::LinearIonDrift { k } => k * current,
            ModelParams::Joglekar { k, p } => {
                let f = 1.0 - (2.0 * x - 1.0).powi(2 * p as i32);
                k * current * f
            }
            ModelParams::Biolek { k, p } => {
                let step = if current > 0.0 {
                    0.0
                } else if current < 0.0 {
                    1.0
                } else {
                    0.5
                };
                let f = 1.0 - (x - step).powi(2 * p as i32);
                k * current * f
            }
            ModelParams::Vteam(v) => {
                let e = 2 * v.window_p as i32;
                if voltage > v.v_off {
                    let f_off = 1.0 - (1.0 - x).powi(e);
                    -v.k_off * (voltage / v.v_off - 1.0).powf(v.alpha_off) * f_off
                } else if voltage < v.v_on {
                    let f_on = 1.0 - x.powi(e);
                    v.k_on * (voltage / v.v_on - 1.0).powf(v.alpha_on) * f_on
                } else {
                    0.0
                }
            }
            ModelParams::Yakopcic(y) => {
                if voltage > y.v_p {
                    y.lambda * (voltage.exp() - y.v_p.exp()) * y.window_p(x)
                } else if voltage < -y.v_n {
                    -y.lambda * ((-voltage).exp() - y.v_n.exp()) * y.window_n(x)
                } else {
                    0.0
                }
            }
            ModelParams::Mms(m) => {
                let up = (1.0 - x) * logistic((voltage - m.v_th) / m.v_t);
                let down = x * logistic((-voltage - m.v_th) / m.v_t);
                (up - down) / m.t_c
            }
        }
    }

    /// `dx/dt` with the current taken from the device's own I-V relation.
    pub fn drift(&self, state: DeviceState, voltage: f64) -> f64 {
        self.state_derivative(state, voltage, self.current(state, voltage))
    }

    /// One RK4 step of length `h` under a voltage waveform `u(t)` starting at
    /// time `t`. Stage states are clamped into bounds before evaluation.
    pub(crate) fn rk4_step(&self, x: f64, t: f64, h: f64, u: impl Fn(f64) -> f64) -> f64 {
        let f = |x: f64, t: f64| self.drift(self.state(x), u(t));
        let k1 = f(x, t);
        let k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
        let k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
        let k4 = f(x + h * k3, t + h);
        let (lo, hi) = self.state_bounds();
        (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(lo, hi)
    }

    /// Integrates the state over a rectangular pulse.
    ///
    /// Substeps are RK4 with at least [`MIN_PULSE_SUBSTEPS`] per pulse and a
    /// cap on the state change per substep. The state is projected back into
    /// bounds after every substep. Flux-driven kinds are integrated over the
    /// voltage-time integral of the pulse, so pulses of equal flux give the
    /// same state whatever their shape.
    pub fn apply_pulse(&self, state: DeviceState, pulse: PulseCommand) -> Result<DeviceState> {
        let PulseCommand { amplitude, duration } = pulse;
        if !amplitude.is_finite() || !duration.is_finite() || duration < 0.0 {
            return Err(Error::InvalidPulse { amplitude, duration });
        }
        if duration == 0.0 || amplitude == 0.0 {
            return Ok(state);
        }
        if self.kind().flux_driven() {
            // Drift is linear in the voltage, so dx/dphi is the drift at a
            // unit voltage of the pulse's sign.
            let sign = amplitude.signum();
            let dx_dphi = |x: f64| self.drift(self.state(x), sign) * sign;
            Ok(self.state(self.integrate(state.x, pulse.flux(), dx_dphi)))
        } else {
            let x = self.integrate(state.x, duration, |x| self.drift(self.state(x), amplitude));
            if x.is_nan() {
                return Err(Error::InvalidPulse { amplitude, duration });
            }
            Ok(self.state(x))
        }
    }

    /// Integrates the autonomous flow `dx/ds = f(x)` over `s` in `[0, span]`
    /// (or `[span, 0]` for negative spans).
    fn integrate(&self, mut x: f64, span: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.state_bounds();
        let max_dx = MAX_STATE_STEP * (hi - lo);
        let dir = span.signum();
        let h_max = span.abs() / MIN_PULSE_SUBSTEPS as f64;
        let mut remaining = span.abs();
        while remaining > 0.0 {
            let rate = f(x) * dir;
            if rate == 0.0 {
                // A zero rate under constant drive is a fixed point.
                break;
            }
            if (x >= hi && rate > 0.0) || (x <= lo && rate < 0.0) {
                // Saturated against a bound; the projected flow stays there.
                break;
            }
            if rate.is_infinite() {
                // Overdriven beyond floating point range: switches instantly.
                return if rate > 0.0 { hi } else { lo };
            }
            let h = remaining.min(h_max).min(max_dx / rate.abs());
            let step = dir * h;
            let k1 = f(x);
            let k2 = f((x + 0.5 * step * k1).clamp(lo, hi));
            let k3 = f((x + 0.5 * step * k2).clamp(lo, hi));
            let k4 = f((x + step * k3).clamp(lo, hi));
            let next = (x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(lo, hi);
            if next == x {
                // The step size never grows, so no later step can move x.
                break;
            }
            x = next;
            remaining = if h == remaining { 0.0 } else { remaining - h };
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lid() -> DeviceParams {
        DeviceParams::new(100.0, 10_000.0, ModelParams::LinearIonDrift { k: 1e4 }).unwrap()
    }

    fn joglekar() -> DeviceParams {
        defaults::default_params(DeviceKind::Joglekar, 100.0, 10_000.0).unwrap()
    }

    #[test]
    fn linear_ion_drift_memristance() {
        let p = lid();
        assert_eq!(p.memristance(p.state(1.0)), 100.0);
        assert_eq!(p.memristance(p.state(0.5)), 5050.0);
        assert_eq!(p.memristance(p.state(0.0)), 10_000.0);
    }

    #[test]
    fn yakopcic_memristance_from_a_and_b() {
        let y = YakopcicParams {
            a: 0.2,
            b: 0.05,
            lambda: 1.0,
            v_p: 0.16,
            v_n: 0.15,
            alpha_p: 1.0,
            alpha_n: 5.0,
            x_p: 0.3,
            x_n: 0.5,
            x_on: 0.0,
        };
        let p = DeviceParams::yakopcic(10_000.0, y).unwrap();
        let expected = 1.0 / (0.2 * 0.05f64.sinh());
        let m = p.memristance(p.state(1.0));
        assert!((m - expected).abs() < 1e-12);
        assert!((m - 99.96).abs() < 5e-3);
        assert!((p.memristance(p.hrs()) - 10_000.0).abs() < 1e-6);
    }

    #[test]
    fn joglekar_window() {
        let p = DeviceParams::new(100.0, 1e4, ModelParams::Joglekar { k: 1.0, p: 2 }).unwrap();
        // f(0.5) = 1, so dx/dt = k * i
        assert_eq!(p.state_derivative(p.state(0.5), 1.0, 0.25), 0.25);
        assert_eq!(p.state_derivative(p.state(1.0), 1.0, 0.01), 0.0);
        assert_eq!(p.state_derivative(p.state(1.0), -1.0, -0.01), 0.0);
    }

    #[test]
    fn biolek_window_depends_on_current_direction() {
        let p = DeviceParams::new(100.0, 1e4, ModelParams::Biolek { k: 1.0, p: 2 }).unwrap();
        // positive current: window vanishes at the destination x = 1 only
        assert_eq!(p.state_derivative(p.state(1.0), 1.0, 1.0), 0.0);
        assert_eq!(p.state_derivative(p.state(0.0), 1.0, 1.0), 1.0);
        // negative current leaves x = 1 freely
        assert_eq!(p.state_derivative(p.state(1.0), -1.0, -1.0), -1.0);
        assert_eq!(p.state_derivative(p.state(0.0), -1.0, -1.0), 0.0);
    }

    #[test]
    fn vteam_deadband() {
        let p = defaults::default_params(DeviceKind::Vteam, 100.0, 1e4).unwrap();
        let ModelParams::Vteam(v) = p.model else { unreachable!() };
        assert_eq!(v.v_on, -0.7);
        assert_eq!(v.v_off, 0.7);
        assert_eq!(p.drift(p.state(0.5), 0.3), 0.0);
        assert_eq!(p.drift(p.state(0.5), -0.69), 0.0);
        assert!(p.drift(p.state(0.5), 1.0) < 0.0);
        assert!(p.drift(p.state(0.5), -1.0) > 0.0);
    }

    #[test]
    fn positive_voltage_direction() {
        for kind in DeviceKind::ALL {
            let p = defaults::default_params(kind, 100.0, 1e4).unwrap();
            let s = p.state_for_memristance(5000.0);
            let d = p.drift(s, 1.0);
            if kind.reversed_polarity() {
                assert!(d < 0.0, "{kind}");
            } else {
                assert!(d > 0.0, "{kind}");
            }
        }
    }

    #[test]
    fn zero_duration_pulse_is_identity() {
        let p = joglekar();
        let s = p.state(0.37);
        assert_eq!(p.apply_pulse(s, PulseCommand::new(1.0, 0.0)).unwrap(), s);
    }

    #[test]
    fn rejects_non_finite_pulses() {
        let p = joglekar();
        let s = p.state(0.37);
        assert!(p.apply_pulse(s, PulseCommand::new(f64::NAN, 1e-6)).is_err());
        assert!(p.apply_pulse(s, PulseCommand::new(1.0, f64::INFINITY)).is_err());
        assert!(p.apply_pulse(s, PulseCommand::new(1.0, -1e-6)).is_err());
    }

    #[test]
    fn saturates_at_bound() {
        let p = lid();
        let s = p.apply_pulse(p.state(0.999), PulseCommand::new(5.0, 1.0)).unwrap();
        assert_eq!(s.x(), 1.0);
    }

    #[test]
    fn overdriven_pulses_terminate_in_bounds() {
        for kind in [DeviceKind::Yakopcic, DeviceKind::Vteam, DeviceKind::Mms] {
            let p = defaults::default_params(kind, 100.0, 1e4).unwrap();
            let (lo, hi) = p.state_bounds();
            for amplitude in [4650.0, -4650.0, 1e6, -1e6] {
                let s = p.apply_pulse(p.state(0.5 * (lo + hi)), PulseCommand::new(amplitude, 1.0 / 300e3)).unwrap();
                assert!((lo..=hi).contains(&s.x()), "{kind} {amplitude}: {}", s.x());
            }
        }
    }

    #[test]
    fn joglekar_pulse_semigroup() {
        let p = joglekar();
        let s0 = p.state(0.3);
        let one = p.apply_pulse(s0, PulseCommand::new(1.0, 2e-6)).unwrap();
        let half = p.apply_pulse(s0, PulseCommand::new(1.0, 1e-6)).unwrap();
        let two = p.apply_pulse(half, PulseCommand::new(1.0, 1e-6)).unwrap();
        assert!(one.x() - s0.x() > 0.1, "pulse should move the state noticeably");
        assert!((one.x() - two.x()).abs() < 1e-9, "{} vs {}", one.x(), two.x());
    }

    #[test]
    fn state_for_memristance_roundtrip() {
        for kind in DeviceKind::ALL {
            for r_off in [500.0, 1e3, 1e4, 1e5] {
                let p = defaults::default_params(kind, 100.0, r_off).unwrap();
                for frac in [0.0, 0.1, 0.5, 0.9, 1.0] {
                    let m = 100.0 + frac * (r_off - 100.0);
                    let back = p.memristance(p.state_for_memristance(m));
                    assert!((back - m).abs() <= 1e-9 * m, "{kind} {r_off} {m} {back}");
                }
            }
        }
    }

    #[test]
    fn parses_kind_names() {
        for kind in DeviceKind::ALL {
            assert_eq!(kind.name().parse::<DeviceKind>().unwrap(), kind);
        }
        assert_eq!("Linear Ion Drift".parse::<DeviceKind>().unwrap(), DeviceKind::LinearIonDrift);
        assert!("nope".parse::<DeviceKind>().is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DeviceParams::new(100.0, 50.0, ModelParams::LinearIonDrift { k: 1.0 }).is_err());
        assert!(DeviceParams::new(100.0, 500.0, ModelParams::Joglekar { k: 1.0, p: 0 }).is_err());
        assert!(DeviceParams::new(100.0, 500.0, ModelParams::LinearBaseline { k: -1.0 }).is_err());
    }
}
