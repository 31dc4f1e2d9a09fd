//! Versioned default parameters.
//!
//! Rate constants are calibrated so that a 1 V sinusoid at the lower
//! characterization frequency of each kind carries the device across
//! [`CALIBRATION_TRANSITION`] of its state range within half a period, in
//! both switching directions. [`calibrate_rate_scale`] re-derives the factor
//! by which the tabulated constants would have to be scaled to hit that
//! target exactly; the frozen table is checked against it in the tests.

use std::f64::consts::PI;

use super::{DeviceKind, DeviceParams, DeviceState, MmsParams, ModelParams, VteamParams, YakopcicParams};
use crate::error::Result;

pub const DEFAULTS_VERSION: u32 = 1;

/// Low-resistance bound used throughout the experiments (Ω).
pub const R_ON_OHM: f64 = 100.0;

/// `R_OFF` at which the rate constants were calibrated (Ω).
pub const CALIBRATION_R_OFF: f64 = 10_000.0;

/// Fraction of the state range a half-period must traverse.
pub const CALIBRATION_TRANSITION: f64 = 0.98;

/// Characterization starts this fraction of the range away from the bound.
pub const START_OFFSET: f64 = 0.02;

/// Default window exponent for Joglekar and Biolek.
pub const WINDOW_P: u32 = 2;

/// Calibrated rate constants, version 1.
///
/// Current-controlled kinds store `kappa` (1/(V·s)); their drift constant is
/// `k = kappa * (r_on + r_off) / 2`, so the calibration holds for any
/// resistance range.
mod table {
    pub const LINEAR_BASELINE_K: f64 = 4.67470e5;
    pub const LINEAR_ION_DRIFT_KAPPA: f64 = 4.67470e5;
    pub const JOGLEKAR_KAPPA: f64 = 4.68411e5;
    pub const BIOLEK_KAPPA: f64 = 2.44044e6;
    pub const VTEAM_K: f64 = 1.13089e6;
    pub const YAKOPCIC_LAMBDA: f64 = 260.985;
    pub const MMS_T_C: f64 = 2.65211e-4;
}

/// Low and high drive frequencies (Hz) for the hysteresis characterization.
pub fn characterization_frequencies(kind: DeviceKind) -> (f64, f64) {
    match kind {
        // The baseline has no published pair; it shares linear ion drift's.
        DeviceKind::LinearBaseline | DeviceKind::LinearIonDrift => (155e3, 200e3),
        DeviceKind::Joglekar => (110e3, 190e3),
        DeviceKind::Biolek => (400e3, 900e3),
        DeviceKind::Vteam => (10e3, 40e3),
        DeviceKind::Yakopcic => (10.0, 150.0),
        DeviceKind::Mms => (400.0, 1e3),
    }
}

/// Default PAM operating frequency (Hz).
pub fn pam_frequency(kind: DeviceKind) -> f64 {
    match kind {
        DeviceKind::Vteam => 5e9,
        DeviceKind::Yakopcic => 300e3,
        other => characterization_frequencies(other).0,
    }
}

fn mean_resistance(r_on: f64, r_off: f64) -> f64 {
    0.5 * (r_on + r_off)
}

fn base_params(kind: DeviceKind, r_on: f64, r_off: f64) -> Result<DeviceParams> {
    use table::*;
    let r_mean = mean_resistance(r_on, r_off);
    let model = match kind {
        DeviceKind::LinearBaseline => ModelParams::LinearBaseline { k: LINEAR_BASELINE_K },
        DeviceKind::LinearIonDrift => ModelParams::LinearIonDrift { k: LINEAR_ION_DRIFT_KAPPA * r_mean },
        DeviceKind::Joglekar => ModelParams::Joglekar { k: JOGLEKAR_KAPPA * r_mean, p: WINDOW_P },
        DeviceKind::Biolek => ModelParams::Biolek { k: BIOLEK_KAPPA * r_mean, p: WINDOW_P },
        DeviceKind::Vteam => ModelParams::Vteam(VteamParams {
            v_on: -0.7,
            v_off: 0.7,
            k_on: VTEAM_K,
            k_off: VTEAM_K,
            alpha_on: 3.0,
            alpha_off: 3.0,
            window_p: 10,
        }),
        DeviceKind::Yakopcic => {
            let b = 0.05;
            return DeviceParams::yakopcic(
                r_off,
                YakopcicParams {
                    a: 1.0 / (r_on * f64::sinh(b)),
                    b,
                    lambda: YAKOPCIC_LAMBDA,
                    v_p: 0.16,
                    v_n: 0.15,
                    alpha_p: 1.0,
                    alpha_n: 5.0,
                    x_p: 0.3,
                    x_n: 0.5,
                    x_on: 0.0,
                },
            );
        }
        DeviceKind::Mms => ModelParams::Mms(MmsParams { t_c: MMS_T_C, v_th: 0.27, v_t: 0.026 }),
    };
    DeviceParams::new(r_on, r_off, model)
}

/// Default device of the given kind for the resistance range.
pub fn default_params(kind: DeviceKind, r_on: f64, r_off: f64) -> Result<DeviceParams> {
    base_params(kind, r_on, r_off)
}

impl ModelParams {
    /// Same model with every rate multiplied by `s` (time constants divided).
    pub fn scale_rate(self, s: f64) -> ModelParams {
        match self {
            ModelParams::LinearBaseline { k } => ModelParams::LinearBaseline { k: k * s },
            ModelParams::LinearIonDrift { k } => ModelParams::LinearIonDrift { k: k * s },
            ModelParams::Joglekar { k, p } => ModelParams::Joglekar { k: k * s, p },
            ModelParams::Biolek { k, p } => ModelParams::Biolek { k: k * s, p },
            ModelParams::Vteam(v) => ModelParams::Vteam(VteamParams { k_on: v.k_on * s, k_off: v.k_off * s, ..v }),
            ModelParams::Yakopcic(y) => ModelParams::Yakopcic(YakopcicParams { lambda: y.lambda * s, ..y }),
            ModelParams::Mms(m) => ModelParams::Mms(MmsParams { t_c: m.t_c / s, ..m }),
        }
    }
}

/// State a characterization run starts from: just inside the bound the
/// positive half-wave drives away from.
pub fn characterization_start(params: &DeviceParams) -> DeviceState {
    let (lo, hi) = params.state_bounds();
    let off = START_OFFSET * (hi - lo);
    if params.kind().reversed_polarity() {
        params.state(hi - off)
    } else {
        params.state(lo + off)
    }
}

/// Fraction of the state range covered by one half-wave of a 1 V sinusoid
/// at `frequency`, starting [`START_OFFSET`] inside the origin bound.
/// `rising` selects the direction towards `R_ON`.
pub fn half_wave_transition(params: &DeviceParams, frequency: f64, rising: bool) -> f64 {
    let (lo, hi) = params.state_bounds();
    let range = hi - lo;
    let x0 = if rising { lo + START_OFFSET * range } else { hi - START_OFFSET * range };
    // Drive polarity that moves the state in the requested direction.
    let sign = if rising ^ params.kind().reversed_polarity() { 1.0 } else { -1.0 };
    let omega = 2.0 * PI * frequency;
    let steps = 20_000;
    let h = 0.5 / frequency / steps as f64;
    let u = |t: f64| sign * (omega * t).sin();
    let mut x = x0;
    for n in 0..steps {
        x = params.rk4_step(x, n as f64 * h, h, u);
    }
    if rising {
        (x - lo) / range
    } else {
        (hi - x) / range
    }
}

/// Factor by which the default rate constants must be scaled so that the
/// slower switching direction just reaches [`CALIBRATION_TRANSITION`].
pub fn calibrate_rate_scale(kind: DeviceKind, r_on: f64, r_off: f64) -> Result<f64> {
    let base = base_params(kind, r_on, r_off)?;
    let f = characterization_frequencies(kind).0;
    let reach = |s: f64| {
        let p = DeviceParams { model: base.model.scale_rate(s), ..base };
        half_wave_transition(&p, f, true).min(half_wave_transition(&p, f, false))
    };
    let (mut lo, mut hi) = (-6.0f64, 6.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if reach(10f64.powf(mid)) >= CALIBRATION_TRANSITION {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(10f64.powf(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_table_matches_calibration() {
        for kind in DeviceKind::ALL {
            let s = calibrate_rate_scale(kind, R_ON_OHM, CALIBRATION_R_OFF).unwrap();
            assert!((0.999..=1.0).contains(&s), "{kind}: scale {s}");
        }
    }

    #[test]
    fn calibration_holds_across_resistance_ranges() {
        for kind in [DeviceKind::LinearIonDrift, DeviceKind::Joglekar, DeviceKind::Biolek] {
            for r_off in [1e3, 1e5] {
                let s = calibrate_rate_scale(kind, R_ON_OHM, r_off).unwrap();
                assert!((0.5..2.0).contains(&s), "{kind} at {r_off}: scale {s}");
            }
        }
    }

    #[test]
    fn pam_frequencies() {
        assert_eq!(pam_frequency(DeviceKind::Vteam), 5e9);
        assert_eq!(pam_frequency(DeviceKind::Yakopcic), 300e3);
        assert_eq!(pam_frequency(DeviceKind::Joglekar), 110e3);
    }

    #[test]
    #[ignore = "prints calibration factors"]
    fn print_calibration() {
        for kind in DeviceKind::ALL {
            let s = calibrate_rate_scale(kind, R_ON_OHM, CALIBRATION_R_OFF).unwrap();
            println!("{kind}: scale {s:.6}");
        }
    }
}
