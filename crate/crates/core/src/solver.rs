//! DC equilibrium of the network.
//!
//! The amplifier output nodes are fixed by their VCVS (`w = A·u`) and the
//! output bitlines only connect to the second crossbar and the injected
//! feedback currents, so each output voltage is an explicit conductance
//! weighted average. Eliminating both leaves one nodal equation per hidden
//! input node:
//!
//! ```text
//! F_h(u) = Σ_i G1_ih (v_i - u_h) - I_d(u_h) - J_h / A = 0
//! J_h    = Σ_k G2_hk (A u_h - y_k)
//! y_k    = (Σ_h G2_hk A u_h + I_k) / Σ_h G2_hk
//! ```
//!
//! `F` is linear apart from the piecewise-linear diodes, so Newton's method
//! with the diode segments held fixed reduces to one dense linear solve per
//! iteration. Iteration stops once a step leaves every diode on the segment
//! it was linearized on, which makes the step an exact solution.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{signed_output, DiodeBranch, Network};

/// KCL tolerance (A).
pub const TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;
pub const MAX_ACTIVE_SET_UPDATES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phase {
    Free,
    Nudged(f64),
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Free => write!(f, "free"),
            Phase::Nudged(beta) => write!(f, "nudged({beta:e})"),
        }
    }
}

/// Node voltages of a solved network.
///
/// Output bitlines are interleaved per class: index `2k` carries `Ŷ⁺_k` and
/// `2k + 1` carries `Ŷ⁻_k`, matching the columns of the second crossbar.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumState {
    pub phase: Phase,
    /// Wordline sources of the first crossbar (V).
    pub wordlines: Vec<f64>,
    /// Hidden neuron input nodes (V).
    pub hidden: Vec<f64>,
    /// Amplifier output nodes, `A` times `hidden` (V).
    pub amplified: Vec<f64>,
    /// Output bitlines (V).
    pub outputs: Vec<f64>,
    /// Current injected into each output bitline (A).
    pub feedback: Vec<f64>,
    /// Max-norm KCL residual from [`kcl_residual`] (A).
    pub residual: f64,
    pub iterations: usize,
}

impl EquilibriumState {
    pub fn y_plus(&self, class: usize) -> f64 {
        self.outputs[2 * class]
    }

    pub fn y_minus(&self, class: usize) -> f64 {
        self.outputs[2 * class + 1]
    }

    /// Signed predictions `Ŷ⁺_k - Ŷ⁻_k`.
    pub fn predictions(&self) -> Vec<f64> {
        self.outputs.chunks(2).map(|p| signed_output(p[0], p[1])).collect()
    }

    /// Voltage across device `(i, h)` of the first crossbar.
    pub fn input_drop(&self, row: usize, col: usize) -> f64 {
        self.wordlines[row] - self.hidden[col]
    }

    /// Voltage across device `(h, k)` of the second crossbar.
    pub fn output_drop(&self, row: usize, col: usize) -> f64 {
        self.amplified[row] - self.outputs[col]
    }

    /// Every device voltage drop, row-major, first crossbar first.
    pub fn drops(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.wordlines.len() * self.hidden.len() + self.hidden.len() * self.outputs.len());
        for i in 0..self.wordlines.len() {
            for h in 0..self.hidden.len() {
                d.push(self.input_drop(i, h));
            }
        }
        for h in 0..self.hidden.len() {
            for k in 0..self.outputs.len() {
                d.push(self.output_drop(h, k));
            }
        }
        d
    }

    /// Named node voltages in a fixed order.
    pub fn node_voltages(&self) -> Vec<(String, f64)> {
        let n_in = (self.wordlines.len() - 1) / 2;
        let mut nodes = Vec::new();
        for i in 0..n_in {
            nodes.push((format!("in{i}+"), self.wordlines[2 * i]));
            nodes.push((format!("in{i}-"), self.wordlines[2 * i + 1]));
        }
        nodes.push(("bias".to_string(), self.wordlines[2 * n_in]));
        for (h, v) in self.hidden.iter().enumerate() {
            nodes.push((format!("hidden{h}"), *v));
        }
        for (h, v) in self.amplified.iter().enumerate() {
            nodes.push((format!("amp{h}"), *v));
        }
        for k in 0..self.outputs.len() / 2 {
            nodes.push((format!("out{k}+"), self.y_plus(k)));
            nodes.push((format!("out{k}-"), self.y_minus(k)));
        }
        nodes
    }

    /// Writes `node,voltage_V` rows and a `residual_A` footer.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node,voltage_V")?;
        for (name, v) in self.node_voltages() {
            writeln!(out, "{name},{v:e}")?;
        }
        writeln!(out, "residual_A,{:e}", self.residual)
    }
}

/// Feedback currents `(I⁺_k, I⁻_k)` for every class, from free-phase outputs.
pub fn feedback_currents(y_target: &[f64], y_plus: &[f64], y_minus: &[f64], beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if y_plus.len() != y_target.len() || y_minus.len() != y_target.len() {
        return Err(Error::LengthMismatch { left: y_plus.len().max(y_minus.len()), right: y_target.len() });
    }
    let plus: Vec<f64> = y_target
        .iter()
        .zip(y_plus.iter().zip(y_minus))
        .map(|(y, (p, m))| beta * (y - p + m))
        .collect();
    let minus = plus.iter().map(|i| -i).collect();
    Ok((plus, minus))
}

/// Max-norm KCL imbalance (A) over the hidden input nodes and the output
/// bitlines, evaluated branch by branch from the node voltages.
pub fn kcl_residual(network: &Network, state: &EquilibriumState) -> f64 {
    let g1 = network.input_crossbar.conductance();
    let g2 = network.output_crossbar.conductance();
    let branches = network.neuron.nonlinearity.branches();
    let att = network.neuron.attenuation;

    let mut into_hidden = vec![0.0; state.hidden.len()];
    let mut into_output = state.feedback.clone();
    for (i, vi) in state.wordlines.iter().enumerate() {
        for (h, uh) in state.hidden.iter().enumerate() {
            into_hidden[h] += g1[(i, h)] * (vi - uh);
        }
    }
    for (h, wh) in state.amplified.iter().enumerate() {
        let mut sourced = 0.0;
        for (k, yk) in state.outputs.iter().enumerate() {
            let i = g2[(h, k)] * (wh - yk);
            sourced += i;
            into_output[k] += i;
        }
        into_hidden[h] -= att * sourced;
        for b in &branches {
            into_hidden[h] -= b.current(state.hidden[h]);
        }
    }
    into_hidden.iter().chain(&into_output).fold(0.0, |m, i| m.max(i.abs()))
}

/// Per-network quantities shared by every solve.
#[derive(Clone, Debug)]
pub struct SolverContext<'a> {
    network: &'a Network,
    branches: Vec<DiodeBranch>,
    /// Linear part of the reduced nodal matrix.
    m: DMatrix<f64>,
    /// Column sums of the second crossbar.
    out_total: Vec<f64>,
}

impl<'a> SolverContext<'a> {
    pub fn new(network: &'a Network) -> Self {
        let g1 = network.input_crossbar.conductance();
        let g2 = network.output_crossbar.conductance();
        let h = g1.ncols();
        let out_total: Vec<f64> = (0..g2.ncols()).map(|k| g2.column(k).sum()).collect();
        let mut m = DMatrix::zeros(h, h);
        for j in 0..h {
            m[(j, j)] = g1.column(j).sum() + g2.row(j).sum();
        }
        for (k, s) in out_total.iter().enumerate() {
            let col = g2.column(k);
            for a in 0..h {
                for b in 0..h {
                    m[(a, b)] -= col[a] * col[b] / s;
                }
            }
        }
        SolverContext { network, branches: network.neuron.nonlinearity.branches(), m, out_total }
    }

    fn rhs(&self, wordlines: &[f64], feedback: &[f64]) -> DVector<f64> {
        let g1 = self.network.input_crossbar.conductance();
        let g2 = self.network.output_crossbar.conductance();
        let att = self.network.neuron.attenuation;
        DVector::from_fn(g1.ncols(), |h, _| {
            let drive: f64 = wordlines.iter().enumerate().map(|(i, v)| g1[(i, h)] * v).sum();
            let fb: f64 = feedback.iter().enumerate().map(|(k, c)| g2[(h, k)] * c / self.out_total[k]).sum();
            drive + att * fb
        })
    }

    fn segments(&self, u: &DVector<f64>) -> Vec<bool> {
        u.iter().flat_map(|&v| self.branches.iter().map(move |b| b.conducting(v))).collect()
    }

    fn diode(&self, v: f64) -> f64 {
        self.branches.iter().map(|b| b.current(v)).sum()
    }

    fn reduced_residual(&self, u: &DVector<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        let mut f = rhs - &self.m * u;
        for (fh, uh) in f.iter_mut().zip(u.iter()) {
            *fh -= self.diode(*uh);
        }
        f
    }

    fn newton_step(&self, segments: &[bool], rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let nb = self.branches.len();
        let mut a = self.m.clone();
        let mut b = rhs.clone();
        for h in 0..a.nrows() {
            for (j, br) in self.branches.iter().enumerate() {
                let g = br.slope(segments[h * nb + j]);
                a[(h, h)] += g;
                b[h] += g * br.breakpoint;
            }
        }
        a.lu()
            .solve(&b)
            .ok_or(Error::NonConvergence { iterations: 0, residual: f64::INFINITY })
    }

    fn newton(&self, mut u: DVector<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
        let mut updates = 0;
        let mut f_norm = self.reduced_residual(&u, rhs).amax();
        for iter in 1..=MAX_ITERATIONS {
            let seg = self.segments(&u);
            let target = self.newton_step(&seg, rhs).map_err(|_| Error::NonConvergence { iterations: iter, residual: f_norm })?;
            if self.segments(&target) == seg {
                let r = self.reduced_residual(&target, rhs).amax();
                u = target;
                if r <= TOLERANCE {
                    return Ok((u, iter));
                }
                f_norm = r;
                continue;
            }
            updates += 1;
            if updates > MAX_ACTIVE_SET_UPDATES {
                return Err(Error::NonConvergence { iterations: iter, residual: f_norm });
            }
            // Backtrack on the residual norm; fall back to the full step if no
            // shorter step improves it.
            let dir = &target - &u;
            let mut t = 1.0;
            let mut next = target.clone();
            let mut next_norm = self.reduced_residual(&next, rhs).amax();
            while next_norm >= f_norm && t > 1.0 / 1024.0 {
                t *= 0.5;
                let trial = &u + &dir * t;
                let n = self.reduced_residual(&trial, rhs).amax();
                if n < next_norm {
                    next = trial;
                    next_norm = n;
                }
            }
            u = next;
            f_norm = next_norm;
        }
        Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: f_norm })
    }

    fn assemble(&self, phase: Phase, wordlines: Vec<f64>, u: DVector<f64>, feedback: Vec<f64>, iterations: usize) -> Result<EquilibriumState> {
        let g2 = self.network.output_crossbar.conductance();
        let gain = self.network.neuron.gain;
        let hidden: Vec<f64> = u.iter().copied().collect();
        let amplified: Vec<f64> = hidden.iter().map(|v| gain * v).collect();
        let outputs = (0..g2.ncols())
            .map(|k| {
                let drive: f64 = amplified.iter().enumerate().map(|(h, w)| g2[(h, k)] * w).sum();
                (drive + feedback[k]) / self.out_total[k]
            })
            .collect();
        let mut state = EquilibriumState { phase, wordlines, hidden, amplified, outputs, feedback, residual: 0.0, iterations };
        state.residual = kcl_residual(self.network, &state);
        if state.residual > TOLERANCE {
            return Err(Error::NonConvergence { iterations, residual: state.residual });
        }
        Ok(state)
    }

    pub fn solve_free(&self, inputs: &[f64]) -> Result<EquilibriumState> {
        let wordlines = self.network.topology.wordline_voltages(inputs)?;
        let feedback = vec![0.0; self.out_total.len()];
        let rhs = self.rhs(&wordlines, &feedback);
        let (u, iterations) = self.newton(DVector::zeros(self.m.nrows()), &rhs)?;
        self.assemble(Phase::Free, wordlines, u, feedback, iterations)
    }

    /// Nudged equilibrium, warm-started from `free`. Feedback currents are
    /// computed from the free-phase outputs and held fixed.
    pub fn solve_nudged(&self, free: &EquilibriumState, y_target: &[f64], beta: f64) -> Result<EquilibriumState> {
        let classes = self.out_total.len() / 2;
        if y_target.len() != classes {
            return Err(Error::LengthMismatch { left: y_target.len(), right: classes });
        }
        if beta == 0.0 {
            return Ok(EquilibriumState { phase: Phase::Nudged(0.0), iterations: 0, ..free.clone() });
        }
        let y_plus: Vec<f64> = (0..classes).map(|k| free.y_plus(k)).collect();
        let y_minus: Vec<f64> = (0..classes).map(|k| free.y_minus(k)).collect();
        let (plus, minus) = feedback_currents(y_target, &y_plus, &y_minus, beta)?;
        let feedback: Vec<f64> = plus.iter().zip(&minus).flat_map(|(p, m)| [*p, *m]).collect();
        let rhs = self.rhs(&free.wordlines, &feedback);
        let (u, iterations) = self.newton(DVector::from_column_slice(&free.hidden), &rhs)?;
        self.assemble(Phase::Nudged(beta), free.wordlines.clone(), u, feedback, iterations)
    }
}

pub fn solve_free(network: &Network, inputs: &[f64]) -> Result<EquilibriumState> {
    SolverContext::new(network).solve_free(inputs)
}

pub fn solve_nudged(network: &Network, free: &EquilibriumState, y_target: &[f64], beta: f64) -> Result<EquilibriumState> {
    SolverContext::new(network).solve_nudged(free, y_target, beta)
}
