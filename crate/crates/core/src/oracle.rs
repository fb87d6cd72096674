//! Brute-force state-vector oracle over the full `2^(n_b+1)` Hilbert space.
//!
//! Gates here are explicit one- and two-qubit operations applied spin by
//! spin, so nothing in this module relies on the collective structure that
//! the compressed representation exploits.
//!
//! Basis ordering: the A bit is most significant, followed by B spins
//! `0..n_b` most-significant-first.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::ExperimentConfig;
use crate::state::{BranchPairState, Coeffs, COMP, NORM_TOL, REF};
use crate::system::StarSystem;

/// Largest `n_b` the oracle accepts (dimension 8192).
pub const MAX_ORACLE_NB: usize = 12;

pub type Gate2 = [[Complex64; 2]; 2];

pub fn hadamard() -> Gate2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n_b: usize,
    amplitudes: Vec<Complex64>,
}

impl FullState {
    pub fn zero(n_b: usize) -> Result<Self> {
        if n_b > MAX_ORACLE_NB {
            return Err(Error::DimensionCap {
                n_b,
                max: MAX_ORACLE_NB,
            });
        }
        Ok(Self {
            n_b,
            amplitudes: vec![Complex64::new(0.0, 0.0); 1 << (n_b + 1)],
        })
    }

    /// `|a⟩|pattern⟩`.
    pub fn basis(a: bool, pattern: &[bool]) -> Result<Self> {
        let mut s = Self::zero(pattern.len())?;
        let idx = s.index_of(a, pattern);
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn index_of(&self, a: bool, pattern: &[bool]) -> usize {
        debug_assert_eq!(pattern.len(), self.n_b);
        let mut idx = usize::from(a);
        for &bit in pattern {
            idx = (idx << 1) | usize::from(bit);
        }
        idx
    }

    pub fn amplitude(&self, a: bool, pattern: &[bool]) -> Complex64 {
        self.amplitudes[self.index_of(a, pattern)]
    }

    /// Bit position of qubit `q`; qubit 0 is A, qubit `1 + j` is B spin `j`.
    fn bit(&self, q: usize) -> usize {
        self.n_b - q
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn apply_single(&mut self, q: usize, gate: &Gate2) {
        let mask = 1usize << self.bit(q);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (x0, x1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = gate[0][0] * x0 + gate[0][1] * x1;
                self.amplitudes[j] = gate[1][0] * x0 + gate[1][1] * x1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << self.bit(control);
        let tmask = 1usize << self.bit(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    /// Multiplies each amplitude by `exp(i·phase(index))`.
    pub fn apply_diagonal(&mut self, phase: impl Fn(usize) -> f64) {
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, phase(i));
        }
    }

    /// Free evolution built from per-spin Zeeman phases and pairwise A–B
    /// ZZ couplings.
    pub fn free_evolve(&mut self, cfg: &ExperimentConfig, system: &StarSystem) {
        let n_b = self.n_b;
        let omega_a = 2.0 * PI * cfg.b_off * 1.0e6 * system.gamma_a;
        let omega_b = 2.0 * PI * cfg.b_off * 1.0e6 * system.gamma_b;
        let zz = if cfg.include_j_during_wait {
            2.0 * PI * system.j_coupling
        } else {
            0.0
        };
        let t = cfg.t_wait;
        self.apply_diagonal(|i| {
            let a = ((i >> n_b) & 1) as f64;
            let mut phase = omega_a * a * t;
            for j in 0..n_b {
                let b = ((i >> (n_b - 1 - j)) & 1) as f64;
                phase += omega_b * b * t + zz * t * (a - 0.5) * (b - 0.5);
            }
            phase
        });
    }

    /// `2·Σ_b conj(ψ(0,b))·ψ(1,b)`.
    pub fn a_coherence(&self) -> Complex64 {
        let half = self.amplitudes.len() / 2;
        self.amplitudes[..half]
            .iter()
            .zip(&self.amplitudes[half..])
            .map(|(x0, x1)| x0.conj() * x1)
            .sum::<Complex64>()
            * 2.0
    }
}

fn complement(pattern: &[bool]) -> Vec<bool> {
    pattern.iter().map(|b| !b).collect()
}

fn pattern_weight(pattern: &[bool]) -> usize {
    pattern.iter().filter(|&&b| b).count()
}

/// Representative pattern of weight `w`: the first `w` B spins set.
pub fn canonical_pattern(w: usize, n_b: usize) -> Vec<bool> {
    (0..n_b).map(|j| j < w).collect()
}

/// Embeds the four branch amplitudes of `state` at the basis indices of
/// `pattern` and its complement.
pub fn sector_to_full(
    state: &BranchPairState,
    pattern: &[bool],
    system: &StarSystem,
) -> Result<FullState> {
    if pattern.len() != system.n_b || state.n_b() != system.n_b {
        return Err(Error::Mismatch(format!(
            "pattern length {} / state n_b {} vs system n_b {}",
            pattern.len(),
            state.n_b(),
            system.n_b
        )));
    }
    let found = pattern_weight(pattern);
    if found != state.weight() {
        return Err(Error::PatternMismatch {
            expected: state.weight(),
            found,
        });
    }
    let mut full = FullState::zero(system.n_b)?;
    let comp = complement(pattern);
    for (a, row) in state.coeffs().iter().enumerate() {
        let a = a == 1;
        let i_ref = full.index_of(a, pattern);
        let i_comp = full.index_of(a, &comp);
        full.amplitudes[i_ref] += row[REF];
        full.amplitudes[i_comp] += row[COMP];
    }
    Ok(full)
}

/// Reads the four branch amplitudes of `pattern` back out of `full`.
pub fn project_to_sector(full: &FullState, pattern: &[bool]) -> Coeffs {
    let comp = complement(pattern);
    let mut coeffs = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in coeffs.iter_mut().enumerate() {
        row[REF] = full.amplitude(a == 1, pattern);
        row[COMP] = full.amplitude(a == 1, &comp);
    }
    coeffs
}

/// Runs the NOON protocol on `|0⟩|pattern⟩` in the full space and returns
/// the A-spin coherence.
pub fn oracle_run(
    pattern: &[bool],
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> Result<Complex64> {
    Ok(oracle_state(pattern, cfg, system)?.a_coherence())
}

/// Final state of [`oracle_run`].
pub fn oracle_state(
    pattern: &[bool],
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> Result<FullState> {
    if pattern.len() > MAX_ORACLE_NB {
        return Err(Error::DimensionCap {
            n_b: pattern.len(),
            max: MAX_ORACLE_NB,
        });
    }
    if pattern.len() != system.n_b {
        return Err(Error::Mismatch(format!(
            "pattern length {} vs system n_b {}",
            pattern.len(),
            system.n_b
        )));
    }
    cfg.validate()?;
    let mut s = FullState::basis(false, pattern)?;
    s.apply_single(0, &hadamard());
    for j in 0..system.n_b {
        s.apply_cnot(0, 1 + j);
    }
    s.free_evolve(cfg, system);
    for j in 0..system.n_b {
        s.apply_cnot(0, 1 + j);
    }
    debug_assert!((s.norm_sqr() - 1.0).abs() < NORM_TOL * 10.0);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{apply_global_cnot, apply_hadamard_a};

    #[test]
    fn ground_embeds_at_origin() {
        let system = StarSystem::with_n_b(3).unwrap();
        let s = BranchPairState::ground(0, 3).unwrap();
        let full = sector_to_full(&s, &[false; 3], &system).unwrap();
        assert_eq!(full.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!((full.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi2_is_ghz() {
        let system = StarSystem::with_n_b(2).unwrap();
        let psi2 = apply_global_cnot(&apply_hadamard_a(&BranchPairState::ground(0, 2).unwrap()));
        let full = sector_to_full(&psi2, &[false, false], &system).unwrap();
        let a = full.amplitudes();
        assert!((a[0b000].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[0b111].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let rest: f64 = a
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0 && *i != 7)
            .map(|(_, c)| c.norm())
            .sum();
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn pattern_weight_mismatch() {
        let system = StarSystem::with_n_b(3).unwrap();
        let s = BranchPairState::ground(1, 3).unwrap();
        assert_eq!(
            sector_to_full(&s, &[true, true, false], &system),
            Err(Error::PatternMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn dimension_cap() {
        let system = StarSystem::with_n_b(13).unwrap();
        let cfg = ExperimentConfig::reference();
        assert!(matches!(
            oracle_run(&canonical_pattern(0, 13), &cfg, &system),
            Err(Error::DimensionCap { n_b: 13, .. })
        ));
        assert!(FullState::zero(12).is_ok());
    }

    #[test]
    fn two_spin_homonuclear_analytic() {
        let system = StarSystem {
            n_b: 1,
            gamma_a: 42.577,
            gamma_b: 42.577,
            ..StarSystem::default()
        };
        let cfg = ExperimentConfig {
            b_off: 1.7e-6,
            t_wait: 2.3e-3,
            include_j_during_wait: true,
        };
        let got = oracle_run(&[false], &cfg, &system).unwrap();
        let expected = Complex64::from_polar(
            1.0,
            (system.gamma_a + system.gamma_b) * 2.0 * PI * 1e6 * cfg.b_off * cfg.t_wait,
        );
        assert!((got - expected).norm() < 1e-10);
    }
}
