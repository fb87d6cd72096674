//! Compressed two-pattern states and the thermal B-bath ensemble.
//!
//! Every gate in the protocol acts collectively on the B spins, so a state
//! grown from a single B pattern only ever populates that pattern and its
//! bitwise complement. Four complex amplitudes (A state × {pattern,
//! complement}) are enough to carry it exactly.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::system::{binomial, StarSystem};

/// Norm tolerance for every family state.
pub const NORM_TOL: f64 = 1e-12;

/// Reference-pattern column of the coefficient matrix.
pub const REF: usize = 0;
/// Complement-pattern column of the coefficient matrix.
pub const COMP: usize = 1;

/// `c[a][b]` with `a` the A-spin basis state and `b` ∈ {[`REF`], [`COMP`]}.
pub type Coeffs = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPairState {
    weight: usize,
    n_b: usize,
    coeffs: Coeffs,
}

impl BranchPairState {
    /// `|0⟩_A |pattern⟩` with a reference pattern of Hamming weight `weight`.
    pub fn ground(weight: usize, n_b: usize) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = [[zero; 2]; 2];
        coeffs[0][REF] = Complex64::new(1.0, 0.0);
        Self::from_coeffs(weight, n_b, coeffs)
    }

    pub fn from_coeffs(weight: usize, n_b: usize, coeffs: Coeffs) -> Result<Self> {
        if weight > n_b {
            return Err(crate::Error::InvalidWeight { weight, n_b });
        }
        let state = Self {
            weight,
            n_b,
            coeffs,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid("coeffs", format!("squared norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Skips the norm check. Used by the gates, which are unitary.
    pub(crate) fn with_coeffs(&self, coeffs: Coeffs) -> Self {
        Self { coeffs, ..*self }
    }

    /// Hamming weight of the reference pattern.
    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Hamming weight of the complement pattern.
    pub fn complement_weight(&self) -> usize {
        self.n_b - self.weight
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn coeff(&self, a: usize, column: usize) -> Complex64 {
        self.coeffs[a][column]
    }

    /// Hamming weight of the B pattern in `column`.
    pub fn column_weight(&self, column: usize) -> usize {
        if column == REF {
            self.weight
        } else {
            self.complement_weight()
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Transverse A-spin signal `2·Σ_b conj(c[0][b])·c[1][b]`, i.e. twice
    /// the `|1⟩⟨0|` element of the reduced A density matrix.
    pub fn a_coherence(&self) -> Complex64 {
        (0..2)
            .map(|b| self.coeffs[0][b].conj() * self.coeffs[1][b])
            .sum::<Complex64>()
            * 2.0
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.weight == other.weight
            && self.n_b == other.n_b
            && self
                .coeffs
                .iter()
                .flatten()
                .zip(other.coeffs.iter().flatten())
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Population model of the B bath before the protocol starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BathPolarization {
    /// Uniform over all `2^n_b` patterns.
    #[default]
    InfiniteTemperature,
    /// Boltzmann populations of each B spin at a static field and temperature.
    Boltzmann { field_t: f64, temperature_k: f64 },
}

const PLANCK: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;

impl BathPolarization {
    /// Probability that a single B spin sits in `|1⟩`.
    fn excited_probability(&self, gamma_b: f64) -> Result<f64> {
        match *self {
            BathPolarization::InfiniteTemperature => Ok(0.5),
            BathPolarization::Boltzmann {
                field_t,
                temperature_k,
            } => {
                if !(temperature_k > 0.0) {
                    return Err(invalid("temperature_k", "must be positive"));
                }
                if !field_t.is_finite() {
                    return Err(invalid("field_t", "must be finite"));
                }
                let x = PLANCK * gamma_b * 1.0e6 * field_t / (BOLTZMANN * temperature_k);
                Ok(1.0 / (1.0 + x.exp()))
            }
        }
    }
}

/// One Hamming-weight sector of the bath, i.e. one spectral line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleComponent {
    pub weight: usize,
    /// Number of patterns sharing this weight, `C(n_b, weight)`.
    pub multiplicity: u64,
    pub probability: f64,
    pub state: BranchPairState,
    /// Accumulated dephasing attenuation in [0, 1].
    pub coherence_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnsemble {
    pub system: StarSystem,
    pub components: Vec<EnsembleComponent>,
}

impl SpinEnsemble {
    /// Pseudo-pure A in `|0⟩` over a thermal B bath at infinite temperature.
    pub fn thermal(system: &StarSystem) -> Result<Self> {
        Self::with_polarization(system, BathPolarization::InfiniteTemperature)
    }

    pub fn with_polarization(system: &StarSystem, polarization: BathPolarization) -> Result<Self> {
        system.validate()?;
        let n_b = system.n_b;
        let p1 = polarization.excited_probability(system.gamma_b)?;
        let components = (0..=n_b)
            .map(|m| {
                let multiplicity = binomial(n_b, m);
                let probability =
                    multiplicity as f64 * p1.powi(m as i32) * (1.0 - p1).powi((n_b - m) as i32);
                Ok(EnsembleComponent {
                    weight: m,
                    multiplicity,
                    probability,
                    state: BranchPairState::ground(m, n_b)?,
                    coherence_factor: 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system: *system,
            components,
        })
    }

    pub fn total_probability(&self) -> f64 {
        self.components.iter().map(|c| c.probability).sum()
    }

    /// Multiplies every component's coherence factor by `attenuation`.
    pub fn attenuate(&mut self, attenuation: f64) {
        for c in &mut self.components {
            c.coherence_factor = (c.coherence_factor * attenuation).clamp(0.0, 1.0);
        }
    }

    /// Replaces each component state with `f(state)`.
    pub fn map_states(&self, mut f: impl FnMut(&BranchPairState) -> BranchPairState) -> Self {
        Self {
            system: self.system,
            components: self
                .components
                .iter()
                .map(|c| EnsembleComponent {
                    state: f(&c.state),
                    ..*c
                })
                .collect(),
        }
    }
}

/// Convenience alias matching the operation name used in the CLI.
pub fn build_thermal_ensemble(system: &StarSystem) -> Result<SpinEnsemble> {
    SpinEnsemble::thermal(system)
}
