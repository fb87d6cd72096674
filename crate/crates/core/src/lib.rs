//! Simulation and analysis of entanglement-enhanced magnetometry with a
//! star of one central spin `A` and `n_b` equivalent peripheral spins `B`.
//!
//! The NOON protocol (Hadamard on A, global C-NOT, free evolution, global
//! C-NOT) is run on a compressed two-pattern representation per B-bath
//! weight sector, and cross-checked against a brute-force state-vector
//! [`oracle`]. On top of that sit the spectrum and `t_wait`-sweep analysis
//! ([`spectrum`]), dephasing and loss channels ([`noise`]) and the
//! sensitivity calculus and optimizers ([`metrology`]).
//!
//! ```
//! use spinnoon::{build_thermal_ensemble, run_noon_protocol, ExperimentConfig, StarSystem};
//!
//! let system = StarSystem::default();
//! let ensemble = build_thermal_ensemble(&system).unwrap();
//! let lines = run_noon_protocol(&ensemble, &ExperimentConfig::reference()).unwrap();
//! // the NOON line picks up roughly π at 3.13 µT over 400 µs
//! assert!((lines[0].unwrapped_phase / std::f64::consts::PI - 1.0).abs() < 0.01);
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrology;
pub mod noise;
pub mod oracle;
pub mod pulse;
pub mod rng;
pub mod spectrum;
pub mod state;
pub mod system;

pub use error::{Error, Result};
pub use metrology::{
    field_variance, figure3_curves, monte_carlo_estimate, optical_phase_std, optimal_exposure,
    optimal_field_std, optimal_photonic_size, phase_rate_variance, Fig3Options, MetrologyConfig,
};
pub use noise::{
    effective_cat_size, epsilon_to_sigma, global_dephasing_factor, local_dephasing_factor,
    monte_carlo_dephase, photon_survival, NoiseModel,
};
pub use oracle::{oracle_run, sector_to_full, FullState};
pub use pulse::{
    apply_global_cnot, apply_hadamard_a, free_evolve, run_noon_protocol, sweep_t_wait,
    ExperimentConfig, LineSignal, TWaitSweep,
};
pub use spectrum::{
    estimate_detuning, fft_oscillation, line_table, linewidth_model, synthesize_spectrum,
    SpectralLine, SpectrumTrace,
};
pub use state::{build_thermal_ensemble, BranchPairState, SpinEnsemble};
pub use system::StarSystem;
