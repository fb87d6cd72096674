//! Gate set and the NOON generation/readout protocol on compressed states.
//!
//! The protocol per B-weight sector is Hadamard on A, global C-NOT from A
//! onto every B spin, free evolution, and a second global C-NOT that folds
//! the accumulated phase back onto A.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::state::{BranchPairState, SpinEnsemble, COMP, REF};
use crate::system::StarSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Field offset from resonance, T.
    pub b_off: f64,
    /// Free-evolution time, s.
    pub t_wait: f64,
    /// Keep the A–B scalar coupling on during the free evolution.
    pub include_j_during_wait: bool,
}

impl ExperimentConfig {
    pub fn new(b_off: f64, t_wait: f64) -> Result<Self> {
        let cfg = Self {
            b_off,
            t_wait,
            include_j_during_wait: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 3.13 µT offset observed for 400 µs.
    pub fn reference() -> Self {
        Self {
            b_off: 3.13e-6,
            t_wait: 400e-6,
            include_j_during_wait: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_wait >= 0.0 && self.t_wait.is_finite()) {
            return Err(invalid("t_wait", "must be non-negative"));
        }
        if !self.b_off.is_finite() {
            return Err(invalid("b_off", "must be finite"));
        }
        Ok(())
    }

    pub fn with_t_wait(&self, t_wait: f64) -> Self {
        Self { t_wait, ..*self }
    }
}

/// One step of a pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    HadamardA,
    GlobalCnot,
    FreeEvolve,
}

/// Ψ0 → Ψ4.
pub const NOON_SEQUENCE: [Step; 4] = [
    Step::HadamardA,
    Step::GlobalCnot,
    Step::FreeEvolve,
    Step::GlobalCnot,
];

pub fn apply_hadamard_a(state: &BranchPairState) -> BranchPairState {
    let c = state.coeffs();
    let mut out = *c;
    for b in 0..2 {
        out[0][b] = (c[0][b] + c[1][b]) * FRAC_1_SQRT_2;
        out[1][b] = (c[0][b] - c[1][b]) * FRAC_1_SQRT_2;
    }
    state.with_coeffs(out)
}

/// Flips every B spin when A is `|1⟩`, which swaps the reference and
/// complement columns of the A = 1 row.
pub fn apply_global_cnot(state: &BranchPairState) -> BranchPairState {
    let mut out = *state.coeffs();
    out[1].swap(REF, COMP);
    state.with_coeffs(out)
}

/// Phase (rad) of the branch with A in `a` and a B pattern of weight `w`.
pub fn branch_phase(a: usize, w: usize, cfg: &ExperimentConfig, system: &StarSystem) -> f64 {
    let zeeman = 2.0
        * PI
        * cfg.b_off
        * 1.0e6
        * (a as f64 * system.gamma_a + w as f64 * system.gamma_b)
        * cfg.t_wait;
    let coupling = if cfg.include_j_during_wait {
        2.0 * PI
            * system.j_coupling
            * cfg.t_wait
            * (a as f64 - 0.5)
            * (w as f64 - system.n_b as f64 / 2.0)
    } else {
        0.0
    };
    zeeman + coupling
}

pub fn free_evolve(
    state: &BranchPairState,
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> BranchPairState {
    let mut out = *state.coeffs();
    for (a, row) in out.iter_mut().enumerate() {
        for (column, c) in row.iter_mut().enumerate() {
            let phase = branch_phase(a, state.column_weight(column), cfg, system);
            *c *= Complex64::from_polar(1.0, phase);
        }
    }
    state.with_coeffs(out)
}

pub fn apply_step(
    step: Step,
    state: &BranchPairState,
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> BranchPairState {
    match step {
        Step::HadamardA => apply_hadamard_a(state),
        Step::GlobalCnot => apply_global_cnot(state),
        Step::FreeEvolve => free_evolve(state, cfg, system),
    }
}

pub fn run_sequence(
    steps: &[Step],
    state: &BranchPairState,
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> BranchPairState {
    steps
        .iter()
        .fold(*state, |s, &step| apply_step(step, &s, cfg, system))
}

/// A-spin readout of one spectral line after the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSignal {
    pub weight: usize,
    /// `ℓ_γ` of the state grown from this line (non-negative).
    pub lopsidedness: f64,
    /// `ℓ_γ` carrying the sign of the acquired phase.
    pub signed_lopsidedness: f64,
    /// Complex A-spin signal; argument is the phase, magnitude the surviving coherence.
    pub signal: Complex64,
    /// Acquired phase tracked continuously from `t_wait = 0`.
    pub unwrapped_phase: f64,
}

impl LineSignal {
    /// Phase reported in (−π, π].
    pub fn phase(&self) -> f64 {
        let p = self.signal.arg();
        if p <= -PI {
            p + 2.0 * PI
        } else {
            p
        }
    }

    /// The acquired phase left (−π, π].
    pub fn wrapped(&self) -> bool {
        self.unwrapped_phase.abs() > PI
    }
}

/// Upper bound (rad/s) on the relative phase rate between any two branches.
fn phase_rate_bound(cfg: &ExperimentConfig, system: &StarSystem) -> f64 {
    let zeeman = cfg.b_off.abs() * 1.0e6 * (system.gamma_a + system.n_b as f64 * system.gamma_b);
    let coupling = if cfg.include_j_during_wait {
        system.j_coupling * system.n_b as f64
    } else {
        0.0
    };
    2.0 * PI * (zeeman + coupling)
}

fn sector_signal(
    steps: &[Step],
    state: &BranchPairState,
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> Complex64 {
    run_sequence(steps, state, cfg, system).a_coherence()
}

/// Follows the phase from `t_wait = 0` in steps short enough that no
/// increment can exceed π/2.
fn continued_phase(
    steps: &[Step],
    state: &BranchPairState,
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> f64 {
    let total = phase_rate_bound(cfg, system) * cfg.t_wait;
    let n_steps = ((total / (PI / 2.0)).ceil() as usize).max(1);
    let mut prev = sector_signal(steps, state, &cfg.with_t_wait(0.0), system);
    let mut acc = prev.arg();
    for k in 1..=n_steps {
        let t = cfg.t_wait * k as f64 / n_steps as f64;
        let s = sector_signal(steps, state, &cfg.with_t_wait(t), system);
        if s.norm() > 0.0 && prev.norm() > 0.0 {
            acc += (s * prev.conj()).arg();
        }
        prev = s;
    }
    acc
}

fn line_signal(
    steps: &[Step],
    ensemble: &SpinEnsemble,
    index: usize,
    cfg: &ExperimentConfig,
) -> Result<LineSignal> {
    let system = &ensemble.system;
    let comp = &ensemble.components[index];
    let signal = sector_signal(steps, &comp.state, cfg, system) * comp.coherence_factor;
    Ok(LineSignal {
        weight: comp.weight,
        lopsidedness: system.line_lopsidedness(comp.weight)?,
        signed_lopsidedness: system.line_signed_lopsidedness(comp.weight)?,
        signal,
        unwrapped_phase: continued_phase(steps, &comp.state, cfg, system),
    })
}

/// Runs the NOON protocol on every weight sector of `ensemble`.
pub fn run_noon_protocol(
    ensemble: &SpinEnsemble,
    cfg: &ExperimentConfig,
) -> Result<Vec<LineSignal>> {
    run_protocol_with(&NOON_SEQUENCE, ensemble, cfg)
}

/// As [`run_noon_protocol`] with an arbitrary step sequence.
pub fn run_protocol_with(
    steps: &[Step],
    ensemble: &SpinEnsemble,
    cfg: &ExperimentConfig,
) -> Result<Vec<LineSignal>> {
    cfg.validate()?;
    (0..ensemble.components.len())
        .map(|i| line_signal(steps, ensemble, i, cfg))
        .collect()
}

/// Protocol output for each line over a uniform `t_wait` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TWaitSweep {
    pub times: Vec<f64>,
    pub b_off: f64,
    /// `lines[line][time]`.
    pub lines: Vec<Vec<LineSignal>>,
}

impl TWaitSweep {
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }
}

/// Uniform grid `t0, t0 + dt, …` with `n` points.
pub fn uniform_times(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + dt * k as f64).collect()
}

pub(crate) fn check_uniform(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonUniformGrid);
    }
    if times.len() < 2 {
        return Ok(());
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformGrid);
    }
    let tol = 1e-9 * dt;
    for (k, w) in times.windows(2).enumerate() {
        let expected = times[0] + dt * (k + 1) as f64;
        if !(w[1] > w[0]) || (w[1] - expected).abs() > tol.max(1e-12 * w[1].abs()) {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(())
}

pub fn sweep_t_wait(ensemble: &SpinEnsemble, b_off: f64, times: &[f64]) -> Result<TWaitSweep> {
    let template = ExperimentConfig {
        b_off,
        t_wait: 0.0,
        include_j_during_wait: true,
    };
    sweep_t_wait_with(ensemble, &template, times)
}

/// Sweep using `template` for everything except `t_wait`. The unwrapped
/// phase of the first point is followed from zero; later points are
/// unwrapped along the grid.
pub fn sweep_t_wait_with(
    ensemble: &SpinEnsemble,
    template: &ExperimentConfig,
    times: &[f64],
) -> Result<TWaitSweep> {
    check_uniform(times)?;
    let system = ensemble.system;
    let columns: Vec<Vec<LineSignal>> = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let cfg = template.with_t_wait(t);
            cfg.validate()?;
            if k == 0 {
                return run_noon_protocol(ensemble, &cfg);
            }
            ensemble
                .components
                .iter()
                .map(|comp| {
                    let signal = sector_signal(&NOON_SEQUENCE, &comp.state, &cfg, &system)
                        * comp.coherence_factor;
                    Ok(LineSignal {
                        weight: comp.weight,
                        lopsidedness: system.line_lopsidedness(comp.weight)?,
                        signed_lopsidedness: system.line_signed_lopsidedness(comp.weight)?,
                        signal,
                        unwrapped_phase: 0.0,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n_lines = ensemble.components.len();
    let mut lines: Vec<Vec<LineSignal>> = (0..n_lines)
        .map(|_| Vec::with_capacity(times.len()))
        .collect();
    for column in columns {
        for (line, mut sig) in lines.iter_mut().zip(column) {
            if let Some(prev) = line.last() {
                let step = if sig.signal.norm() > 0.0 && prev.signal.norm() > 0.0 {
                    (sig.signal * prev.signal.conj()).arg()
                } else {
                    0.0
                };
                sig.unwrapped_phase = prev.unwrapped_phase + step;
            }
            line.push(sig);
        }
    }
    // A grid too coarse for a line unwraps consistently but wrongly; compare
    // against the phase followed in fine steps up to the last point.
    if times.len() > 1 {
        let t_last = times[times.len() - 1];
        let span = t_last - times[0];
        let nyquist_hz = 0.5 * (times.len() - 1) as f64 / span;
        for (idx, row) in lines.iter().enumerate() {
            let comp = &ensemble.components[idx];
            let truth = continued_phase(
                &NOON_SEQUENCE,
                &comp.state,
                &template.with_t_wait(t_last),
                &system,
            );
            let last = row[row.len() - 1].unwrapped_phase;
            if (truth - last).abs() > PI {
                return Err(Error::Aliasing {
                    line: idx,
                    freq_hz: (truth - row[0].unwrapped_phase) / (2.0 * PI * span),
                    nyquist_hz,
                });
            }
        }
    }
    Ok(TWaitSweep {
        times: times.to_vec(),
        b_off: template.b_off,
        lines,
    })
}
