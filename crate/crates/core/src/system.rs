//! Physical constants of the 1 + N star: one distinguishable central spin `A`
//! coupled to `n_b` equivalent peripheral spins `B`.
//!
//! Gyromagnetic ratios are kept in MHz/T and field offsets in Tesla, so the
//! heteronuclear weighting between `A` and `B` comes out of the same formula
//! that gives the homonuclear lopsidedness.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Gyromagnetic ratio of ¹H in MHz/T.
pub const GAMMA_1H: f64 = 42.577;
/// Gyromagnetic ratio of ³¹P in MHz/T.
pub const GAMMA_31P: f64 = 17.251;

/// Spin-star parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSystem {
    /// Number of peripheral B spins.
    pub n_b: usize,
    /// Gyromagnetic ratio of A, MHz/T.
    pub gamma_a: f64,
    /// Gyromagnetic ratio of B, MHz/T.
    pub gamma_b: f64,
    /// A–B scalar coupling, Hz.
    pub j_coupling: f64,
    /// Base coherence time, s. Sets the linewidth of an ℓ ≤ 1 line.
    pub t2_base: f64,
    /// Exponent of the linewidth growth with lopsidedness.
    pub kappa: f64,
}

impl Default for StarSystem {
    /// Trimethyl phosphite: one ³¹P and nine ¹H.
    fn default() -> Self {
        Self {
            n_b: 9,
            gamma_a: GAMMA_31P,
            gamma_b: GAMMA_1H,
            j_coupling: 10.67,
            t2_base: 0.1,
            kappa: 0.5,
        }
    }
}

impl StarSystem {
    pub fn new(
        n_b: usize,
        gamma_a: f64,
        gamma_b: f64,
        j_coupling: f64,
        t2_base: f64,
        kappa: f64,
    ) -> Result<Self> {
        let system = Self {
            n_b,
            gamma_a,
            gamma_b,
            j_coupling,
            t2_base,
            kappa,
        };
        system.validate()?;
        Ok(system)
    }

    /// Default star with a different number of B spins.
    pub fn with_n_b(n_b: usize) -> Result<Self> {
        let system = Self {
            n_b,
            ..Self::default()
        };
        system.validate()?;
        Ok(system)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_b < 1 {
            return Err(invalid("n_b", "need at least one B spin"));
        }
        if !(self.gamma_a > 0.0 && self.gamma_a.is_finite()) {
            return Err(invalid("gamma_a", "must be positive"));
        }
        if !(self.gamma_b > 0.0 && self.gamma_b.is_finite()) {
            return Err(invalid("gamma_b", "must be positive"));
        }
        if !(self.j_coupling >= 0.0 && self.j_coupling.is_finite()) {
            return Err(invalid("j_coupling", "must be non-negative"));
        }
        if !(self.t2_base > 0.0 && self.t2_base.is_finite()) {
            return Err(invalid("t2_base", "must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(invalid("kappa", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Total number of spins taking part in a NOON state (A plus every B).
    pub fn n_spins(&self) -> usize {
        self.n_b + 1
    }

    fn check_weight(&self, weight: usize) -> Result<()> {
        if weight > self.n_b {
            Err(Error::InvalidWeight {
                weight,
                n_b: self.n_b,
            })
        } else {
            Ok(())
        }
    }

    /// Heteronuclear lopsidedness `|γ_A + (m_up − s_up)·γ_B| / γ_B` of an
    /// MSSM pair labelled `(m_up, s_up)`, in units of one B spin.
    ///
    /// `m_up` counts the B spins that were flipped together with A, so the
    /// NOON line is `(n_b, 0)`.
    pub fn weighted_lopsidedness(&self, m_up: usize, s_up: usize) -> Result<f64> {
        Ok(self.signed_lopsidedness(m_up, s_up)?.abs())
    }

    /// Signed form of [`weighted_lopsidedness`](Self::weighted_lopsidedness):
    /// the sign is that of the relative phase picked up by the A = |1⟩ branch.
    pub fn signed_lopsidedness(&self, m_up: usize, s_up: usize) -> Result<f64> {
        self.check_weight(m_up)?;
        self.check_weight(s_up)?;
        let diff = m_up as f64 - s_up as f64;
        Ok((self.gamma_a + diff * self.gamma_b) / self.gamma_b)
    }

    /// Lopsidedness of the state grown from spectral line `m` (B-bath weight `m`).
    pub fn line_lopsidedness(&self, m: usize) -> Result<f64> {
        self.check_weight(m)?;
        self.weighted_lopsidedness(self.n_b - m, m)
    }

    pub fn line_signed_lopsidedness(&self, m: usize) -> Result<f64> {
        self.check_weight(m)?;
        self.signed_lopsidedness(self.n_b - m, m)
    }

    /// Phase-sensitivity gain of the full NOON state over a lone A spin.
    pub fn enhancement_over_a(&self) -> f64 {
        enhancement_factor(self.n_b, self.gamma_a, self.gamma_b)
    }

    /// Precession frequency offset (Hz) of one B spin in a field offset `b_off` (T).
    pub fn b_frequency(&self, b_off: f64) -> f64 {
        larmor_offset_hz(self.gamma_b, b_off)
    }

    /// Angular phase rate (rad/s) of one B spin in a field offset `b_off` (T).
    pub fn b_angular_rate(&self, b_off: f64) -> f64 {
        2.0 * PI * self.b_frequency(b_off)
    }
}

/// `(n_b·γ_B + γ_A) / γ_A`. Defined for `n_b = 0`, where it is 1.
pub fn enhancement_factor(n_b: usize, gamma_a: f64, gamma_b: f64) -> f64 {
    (n_b as f64 * gamma_b + gamma_a) / gamma_a
}

/// Frequency offset in Hz for a gyromagnetic ratio in MHz/T and a field in T.
pub fn larmor_offset_hz(gamma_mhz_per_t: f64, b_off: f64) -> f64 {
    gamma_mhz_per_t * 1.0e6 * b_off
}

/// Phase (rad) acquired by a single spin's `|0⟩ + |1⟩` superposition.
pub fn single_spin_phase(gamma_mhz_per_t: f64, b_off: f64, t: f64) -> f64 {
    2.0 * PI * larmor_offset_hz(gamma_mhz_per_t, b_off) * t
}

/// Binomial coefficient `C(n, k)` as `u64`; exact for every `n ≤ 62`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}
