//! Dephasing and loss channels.
//!
//! Local dephasing gives every spin an independent Gaussian phase; global
//! dephasing is one shared random field seen through the weighted
//! lopsidedness; photon loss removes a NOON state outright.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::oracle::canonical_pattern;
use crate::rng::substream;
use crate::state::{BranchPairState, SpinEnsemble};
use crate::system::StarSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Independent Gaussian phases per spin over one exposure, rad.
    LocalDephasing { sigma_a: f64, sigma_b: f64 },
    /// Shared Gaussian phase per unit weighted lopsidedness, rad.
    GlobalDephasing { sigma_global: f64 },
    /// Per-photon loss probability.
    PhotonLoss { epsilon: f64 },
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::LocalDephasing { .. } => "local_dephasing",
            NoiseModel::GlobalDephasing { .. } => "global_dephasing",
            NoiseModel::PhotonLoss { .. } => "photon_loss",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::LocalDephasing { sigma_a, sigma_b } => {
                if !(sigma_a >= 0.0 && sigma_a.is_finite()) {
                    return Err(invalid("sigma_a", "must be non-negative"));
                }
                if !(sigma_b >= 0.0 && sigma_b.is_finite()) {
                    return Err(invalid("sigma_b", "must be non-negative"));
                }
            }
            NoiseModel::GlobalDephasing { sigma_global } => {
                if !(sigma_global >= 0.0 && sigma_global.is_finite()) {
                    return Err(invalid("sigma_global", "must be non-negative"));
                }
            }
            NoiseModel::PhotonLoss { epsilon } => check_epsilon(epsilon)?,
        }
        Ok(())
    }
}

/// How a per-spin dephasing probability `ε` becomes a phase channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DephasingMap {
    /// Gaussian phase whose single-spin coherence decays to `1 − ε`.
    #[default]
    Gaussian,
    /// Phase fully randomized with probability `ε`, untouched otherwise.
    Erasure,
}

impl DephasingMap {
    pub fn name(&self) -> &'static str {
        match self {
            DephasingMap::Gaussian => "gaussian",
            DephasingMap::Erasure => "erasure",
        }
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid("epsilon", format!("{epsilon} outside [0, 1)")));
    }
    Ok(())
}

/// Gaussian phase deviation `σ = √(−2·ln(1 − ε))`.
pub fn epsilon_to_sigma(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok((-2.0 * (-epsilon).ln_1p()).sqrt())
}

/// Coherence left between the pattern and complement branches of a NOON
/// family state: A and every B spin differ between them.
pub fn local_dephasing_factor(
    state: &BranchPairState,
    sigma_a: f64,
    sigma_b: f64,
    system: &StarSystem,
) -> f64 {
    debug_assert_eq!(state.n_b(), system.n_b);
    let differing_b = state.n_b() as f64;
    (-(sigma_a * sigma_a + differing_b * sigma_b * sigma_b) / 2.0).exp()
}

pub fn global_dephasing_factor(lopsidedness: f64, sigma_global: f64) -> f64 {
    let x = lopsidedness * sigma_global;
    (-x * x / 2.0).exp()
}

/// Attenuates every sector of `ensemble` by the local-dephasing factor.
pub fn apply_local_dephasing(ensemble: &mut SpinEnsemble, sigma_a: f64, sigma_b: f64) {
    let system = ensemble.system;
    for c in &mut ensemble.components {
        c.coherence_factor *= local_dephasing_factor(&c.state, sigma_a, sigma_b, &system);
    }
}

/// Attenuates each sector by the global-dephasing factor of its line.
pub fn apply_global_dephasing(ensemble: &mut SpinEnsemble, sigma_global: f64) -> Result<()> {
    let system = ensemble.system;
    for c in &mut ensemble.components {
        let ell = system.line_lopsidedness(c.weight)?;
        c.coherence_factor *= global_dephasing_factor(ell, sigma_global);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingStats {
    pub trials: usize,
    /// Mean of `exp(iΔ)` over trials.
    pub mean_coherence: Complex64,
    /// Real part of the mean coherence.
    pub attenuation: f64,
    /// Standard error of `attenuation`.
    pub std_error: f64,
    /// RMS branch phase difference, rad.
    pub phase_spread: f64,
}

/// Samples the branch phase difference of a NOON family state under
/// independent Gaussian phases per spin.
pub fn monte_carlo_dephase(
    state: &BranchPairState,
    sigma_a: f64,
    sigma_b: f64,
    seed: u64,
    trials: usize,
) -> Result<DephasingStats> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    NoiseModel::LocalDephasing { sigma_a, sigma_b }.validate()?;
    let pattern = canonical_pattern(state.weight(), state.n_b());
    // complement bit minus reference bit for each B spin
    let signs: Vec<f64> = pattern
        .iter()
        .map(|&b| if b { -1.0 } else { 1.0 })
        .collect();

    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, trial as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut delta = sigma_a * z;
            for s in &signs {
                let z: f64 = StandardNormal.sample(&mut rng);
                delta += s * sigma_b * z;
            }
            delta
        })
        .collect();

    let n = trials as f64;
    let (mut sum_cos, mut sum_sin, mut sum_sq) = (0.0, 0.0, 0.0);
    for d in &samples {
        sum_cos += d.cos();
        sum_sin += d.sin();
        sum_sq += d * d;
    }
    let mean_cos = sum_cos / n;
    let var_cos = if trials > 1 {
        samples
            .iter()
            .map(|d| (d.cos() - mean_cos).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(DephasingStats {
        trials,
        mean_coherence: Complex64::new(mean_cos, sum_sin / n),
        attenuation: mean_cos,
        std_error: (var_cos / n).sqrt(),
        phase_spread: (sum_sq / n).sqrt(),
    })
}

/// Size of the canonical cat state that decoheres at the same rate.
pub fn effective_cat_size(
    m_up: usize,
    s_up: usize,
    system: &StarSystem,
    model: &NoiseModel,
) -> Result<f64> {
    for w in [m_up, s_up] {
        if w > system.n_b {
            return Err(Error::InvalidWeight {
                weight: w,
                n_b: system.n_b,
            });
        }
    }
    match model {
        NoiseModel::LocalDephasing { .. } => Ok(system.n_spins() as f64),
        NoiseModel::GlobalDephasing { .. } => Ok((m_up as f64 - s_up as f64).abs()),
        NoiseModel::PhotonLoss { .. } => Err(Error::NotApplicable("photon_loss")),
    }
}

/// Probability that none of `n` photons is lost.
pub fn photon_survival(n: usize, epsilon: f64) -> f64 {
    (1.0 - epsilon).powi(n as i32)
}
