use std::f64::consts::PI;
use std::io::{self, Write};

use super::{DeviceParams, DeviceState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveformSample {
    /// s
    pub t: f64,
    /// V
    pub u: f64,
    /// A
    pub i: f64,
    pub x: f64,
}

/// Sampled response of one device to a sinusoidal drive.
#[derive(Clone, Debug)]
pub struct WaveformTrace {
    pub samples: Vec<WaveformSample>,
    /// Accumulated charge (C), trapezoidal in `i`.
    pub charge: f64,
    /// Accumulated flux (V·s), trapezoidal in `u`.
    pub flux: f64,
}

fn trapezoid(samples: &[WaveformSample], f: impl Fn(&WaveformSample) -> f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t))
        .sum()
}

impl WaveformTrace {
    pub fn from_samples(samples: Vec<WaveformSample>) -> Self {
        let charge = trapezoid(&samples, |s| s.i);
        let flux = trapezoid(&samples, |s| s.u);
        WaveformTrace { samples, charge, flux }
    }

    /// Writes `t,V,I,x` rows at full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,V,I,x")?;
        for s in &self.samples {
            writeln!(out, "{:e},{:e},{:e},{:e}", s.t, s.u, s.i, s.x)?;
        }
        Ok(())
    }

    /// Splits the trace at sign changes of the drive voltage. Each returned
    /// slice starts and ends at a sample straddling a zero crossing.
    pub fn half_waves(&self) -> Vec<&[WaveformSample]> {
        let mut cuts = vec![0];
        for (k, w) in self.samples.windows(2).enumerate() {
            let (a, b) = (w[0].u, w[1].u);
            if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
                cuts.push(k + 1);
            }
        }
        let last = self.samples.len() - 1;
        if *cuts.last().unwrap() != last {
            cuts.push(last);
        }
        cuts.windows(2).map(|c| &self.samples[c[0]..=c[1]]).collect()
    }

    /// Loop area in the u-i plane (V·A): the sum of the absolute shoelace
    /// areas of every half-wave lobe. Opposite lobes of a pinched loop wind
    /// in opposite directions, so signed areas would cancel.
    pub fn loop_area(&self) -> f64 {
        self.half_waves().into_iter().map(|lobe| shoelace(lobe).abs()).sum()
    }

    /// Largest |i| at the zero crossings of the drive (linearly interpolated
    /// to the voltage root) divided by the peak |i| of the trace.
    pub fn pinch_ratio(&self) -> f64 {
        let peak = self.samples.iter().map(|s| s.i.abs()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.u == 0.0 {
                worst = worst.max(a.i.abs());
            } else if a.u.signum() != b.u.signum() && b.u != 0.0 {
                let s = a.u / (a.u - b.u);
                worst = worst.max((a.i + s * (b.i - a.i)).abs());
            }
        }
        worst / peak
    }
}

/// Signed polygon area of a closed u-i path.
pub(crate) fn shoelace(pts: &[WaveformSample]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..n {
        let (p, q) = (&pts[k], &pts[(k + 1) % n]);
        acc += p.u * q.i - q.u * p.i;
    }
    0.5 * acc
}

/// Drives a device with `u(t) = amplitude * sin(2 pi f t)` for a whole number
/// of periods using fixed-step RK4.
///
/// `dt` must be below `1 / (1000 f)`.
pub fn simulate_waveform(
    params: &DeviceParams,
    initial: DeviceState,
    amplitude: f64,
    frequency: f64,
    periods: u32,
    dt: f64,
) -> Result<WaveformTrace> {
    let floor = 1.0 / (1000.0 * frequency);
    if !(dt > 0.0 && dt < floor) {
        return Err(Error::ResolutionFloor { dt, floor });
    }
    let omega = 2.0 * PI * frequency;
    let u = |t: f64| amplitude * (omega * t).sin();
    let total = periods as f64 / frequency;
    let steps = (total / dt).round() as usize;
    let h = total / steps as f64;

    let mut samples = Vec::with_capacity(steps + 1);
    let mut x = initial.x();
    for n in 0..=steps {
        let t = n as f64 * h;
        let state = params.state(x);
        let v = u(t);
        samples.push(WaveformSample { t, u: v, i: params.current(state, v), x });
        if n < steps {
            x = params.rk4_step(x, t, h, u);
        }
    }
    Ok(WaveformTrace::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{defaults, DeviceKind};

    #[test]
    fn zero_amplitude_gives_zero_current() {
        let p = defaults::default_params(DeviceKind::Joglekar, 100.0, 1e4).unwrap();
        let tr = simulate_waveform(&p, p.state(0.4), 0.0, 1e5, 1, 1e-9).unwrap();
        assert!(tr.samples.iter().all(|s| s.i == 0.0 && s.x == 0.4));
        assert_eq!(tr.charge, 0.0);
    }

    #[test]
    fn rejects_coarse_step() {
        let p = defaults::default_params(DeviceKind::Mms, 100.0, 1e4).unwrap();
        let err = simulate_waveform(&p, p.state(0.4), 1.0, 1e3, 1, 1e-6).unwrap_err();
        assert!(matches!(err, Error::ResolutionFloor { .. }));
    }

    #[test]
    fn trapezoidal_integrals() {
        let p = defaults::default_params(DeviceKind::LinearIonDrift, 100.0, 1e4).unwrap();
        let tr = simulate_waveform(&p, p.state(0.02), 1.0, 155e3, 1, 1e-9).unwrap();
        // a whole sine period carries no net flux
        assert!(tr.flux.abs() < 1e-12);
        let direct: f64 = tr
            .samples
            .windows(2)
            .map(|w| (w[1].t - w[0].t) * (w[0].i + w[1].i) / 2.0)
            .sum();
        assert_eq!(tr.charge, direct);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn csv_header_and_rows() {
        let p = defaults::default_params(DeviceKind::Biolek, 100.0, 1e4).unwrap();
        let tr = simulate_waveform(&p, p.state(0.1), 1.0, 4e5, 1, 1e-9).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,V,I,x"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row.len(), 4);
        assert_eq!(text.lines().count(), tr.samples.len() + 1);
        // full precision roundtrip
        let last = text.lines().last().unwrap();
        let x: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(x, tr.samples.last().unwrap().x);
    }
}
