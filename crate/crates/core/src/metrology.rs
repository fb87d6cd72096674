//! Variance of repeated NOON field measurements, exposure and state-size
//! optimizers, and the spin-versus-photon sensitivity comparison.
//!
//! Field variances are expressed as variances of the per-particle phase
//! rate δ (rad²/s²). A NOON state of `n` particles picks up `n·δ·t` of
//! phase, read out with unit phase uncertainty per shot.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::noise::{check_epsilon, epsilon_to_sigma, DephasingMap, NoiseModel};
use crate::pulse::{run_sequence, ExperimentConfig, NOON_SEQUENCE};
use crate::rng::substream;
use crate::state::BranchPairState;
use crate::system::StarSystem;

/// Slack used when flooring `t_tot / (t_e + t_g)` to a shot count.
const SHOT_FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetrologyConfig {
    /// Particles in the NOON state.
    pub n: usize,
    /// Total sensing time, s.
    pub t_tot: f64,
    /// Exposure per shot, s.
    pub t_e: f64,
    /// Gating and readout overhead per shot, s.
    pub t_g: f64,
    /// Per-spin variance of the local phase rate, rad²/s².
    pub var_h: f64,
}

impl MetrologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "need at least one particle"));
        }
        if !(self.t_e > 0.0 && self.t_e.is_finite()) {
            return Err(invalid("t_e", "must be positive"));
        }
        if !(self.t_g >= 0.0 && self.t_g.is_finite()) {
            return Err(invalid("t_g", "must be non-negative"));
        }
        if !(self.var_h >= 0.0 && self.var_h.is_finite()) {
            return Err(invalid("var_h", "must be non-negative"));
        }
        if !(self.t_tot.is_finite() && self.t_tot * (1.0 + SHOT_FLOOR_SLACK) >= self.t_e + self.t_g)
        {
            return Err(invalid("t_tot", "budget shorter than one shot"));
        }
        Ok(())
    }

    /// Whole shots that fit in the budget.
    pub fn m_shots(&self) -> usize {
        (self.t_tot / (self.t_e + self.t_g) + SHOT_FLOOR_SLACK).floor() as usize
    }
}

/// `Δ²(∂φ/∂t) = 1 / (n²·t²)` for a single noise-free NOON measurement.
pub fn phase_rate_variance(n: usize, t: f64) -> Result<f64> {
    if n < 1 {
        return Err(invalid("n", "need at least one particle"));
    }
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let n = n as f64;
    Ok(1.0 / (n * n * t * t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVariance {
    /// Mean over the floored shot count with identical per-spin noise.
    pub exact: f64,
    /// Continuous-budget form.
    pub approximate: f64,
}

pub fn field_variance(cfg: &MetrologyConfig) -> Result<FieldVariance> {
    cfg.validate()?;
    let m = cfg.m_shots();
    if m < 1 {
        return Err(invalid("m_shots", "no complete shot fits in the budget"));
    }
    let n = cfg.n as f64;
    let exact = (1.0 / m as f64) * (1.0 / (n * n * cfg.t_e * cfg.t_e) + cfg.var_h / n);
    let approximate = (1.0 / cfg.t_tot) * (1.0 / (n * n * cfg.t_e) + cfg.t_e * cfg.var_h / n);
    Ok(FieldVariance { exact, approximate })
}

/// Stationary point `(n·Δ²h)^(−1/2)` of the continuous-budget variance.
pub fn optimal_exposure(n: usize, var_h: f64) -> Result<f64> {
    if n < 1 {
        return Err(invalid("n", "need at least one particle"));
    }
    if var_h == 0.0 {
        return Err(Error::Unbounded("noise-free exposure grows without limit"));
    }
    if !(var_h > 0.0 && var_h.is_finite()) {
        return Err(invalid("var_h", "must be positive"));
    }
    Ok((n as f64 * var_h).powf(-0.5))
}

/// Field-rate standard deviation at the optimal exposure,
/// `√(2·√Δ²h / (t_tot·n^(3/2)))`.
pub fn optimal_field_std(n: usize, var_h: f64, t_tot: f64) -> Result<f64> {
    optimal_exposure(n, var_h)?;
    if !(t_tot > 0.0) {
        return Err(invalid("t_tot", "must be positive"));
    }
    let var = 2.0 * var_h.sqrt() / (t_tot * (n as f64).powf(1.5));
    Ok(var.sqrt())
}

/// NOON coherence outlives the exposure: `t_e < t2_base / √n`.
pub fn within_noon_coherence(t_e: f64, n: usize, t2_base: f64) -> bool {
    t_e < t2_base / (n as f64).sqrt()
}

/// Heisenberg-limited phase std of lossy photonic NOON states: only shots in
/// which all `n` photons survive carry phase information.
pub fn optical_phase_std(n: usize, epsilon: f64, m_shots: usize) -> f64 {
    let n_f = n as f64;
    let useful = m_shots as f64 * (1.0 - epsilon).powi(n as i32);
    1.0 / (n_f * useful.sqrt())
}

/// Photon number maximizing `n²·(1 − ε)^n`.
pub fn optimal_photonic_size(epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if epsilon == 0.0 {
        return Err(Error::Unbounded(
            "lossless NOON states improve without limit",
        ));
    }
    let log_keep = (-epsilon).ln_1p();
    let x = -2.0 / log_keep;
    let score = |n: usize| 2.0 * (n as f64).ln() + n as f64 * log_keep;
    let lo = (x.floor() as usize).max(1);
    let hi = (x.ceil() as usize).max(1);
    Ok(if score(hi) > score(lo) { hi } else { lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Spin,
    SpinErasure,
    Optical,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Spin => "spin",
            Family::SpinErasure => "spin_erasure",
            Family::Optical => "optical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExposureMode {
    /// Per-n optimal exposure, capped at the reference window.
    #[default]
    Optimized,
    /// Exposure fixed at the reference window.
    Fixed,
}

impl ExposureMode {
    pub fn name(&self) -> &'static str {
        match self {
            ExposureMode::Optimized => "optimized",
            ExposureMode::Fixed => "fixed",
        }
    }
}

/// Tag recorded alongside every curve.
pub const NORMALIZATION: &str = "std_times_sqrt_n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    /// Phase std over one reference window, rad.
    pub raw_std: f64,
    /// `raw_std · √n`.
    pub normalized_std: f64,
    /// Exposure used, s (spin families only).
    pub exposure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub family: Family,
    pub epsilon: f64,
    pub points: Vec<CurvePoint>,
    pub normalization: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Options {
    pub epsilons: Vec<f64>,
    pub n_max: usize,
    /// Shots of one reference window that fit in the budget.
    pub m_shots: usize,
    /// Window over which ε is defined, s.
    pub t_ref: f64,
    pub exposure: ExposureMode,
    /// Mappings from ε to a spin dephasing channel; one spin curve per entry.
    pub dephasing_maps: Vec<DephasingMap>,
}

impl Default for Fig3Options {
    fn default() -> Self {
        Self {
            epsilons: vec![0.05, 0.1, 0.2],
            n_max: 1024,
            m_shots: 1000,
            t_ref: 1.0e-3,
            exposure: ExposureMode::Optimized,
            dephasing_maps: vec![DephasingMap::Gaussian, DephasingMap::Erasure],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3 {
    pub curves: Vec<SensitivityCurve>,
    /// `(n, raw, normalized)` of the standard quantum limit.
    pub sql: Vec<CurvePoint>,
    /// `(n, raw, normalized)` of the Heisenberg limit.
    pub heisenberg: Vec<CurvePoint>,
}

pub fn heisenberg_std(n: usize, m_shots: usize) -> f64 {
    1.0 / (n as f64 * (m_shots as f64).sqrt())
}

pub fn sql_std(n: usize, m_shots: usize) -> f64 {
    1.0 / ((n * m_shots) as f64).sqrt()
}

fn point(n: usize, raw_std: f64, exposure: Option<f64>) -> CurvePoint {
    CurvePoint {
        n,
        raw_std,
        normalized_std: raw_std * (n as f64).sqrt(),
        exposure,
    }
}

fn gaussian_spin_point(n: usize, epsilon: f64, opts: &Fig3Options) -> Result<CurvePoint> {
    let sigma = epsilon_to_sigma(epsilon)?;
    let var_h = (sigma / opts.t_ref).powi(2);
    let t_e = match opts.exposure {
        ExposureMode::Fixed => opts.t_ref,
        ExposureMode::Optimized => match optimal_exposure(n, var_h) {
            Ok(t) => t.min(opts.t_ref),
            Err(Error::Unbounded(_)) => opts.t_ref,
            Err(e) => return Err(e),
        },
    };
    let cfg = MetrologyConfig {
        n,
        t_tot: opts.m_shots as f64 * opts.t_ref,
        t_e,
        t_g: 0.0,
        var_h,
    };
    let var = field_variance(&cfg)?.exact;
    Ok(point(n, var.sqrt() * opts.t_ref, Some(t_e)))
}

/// Spin NOON under phase erasure: each spin keeps its phase over `t_e`
/// with probability `(1 − ε)^(t_e/t_ref)`, and a shot is informative only
/// if every spin does.
fn erasure_spin_point(n: usize, epsilon: f64, opts: &Fig3Options) -> Result<CurvePoint> {
    check_epsilon(epsilon)?;
    let rate = -(-epsilon).ln_1p() / opts.t_ref;
    let t_e = match opts.exposure {
        ExposureMode::Fixed => opts.t_ref,
        ExposureMode::Optimized if rate > 0.0 => (1.0 / (n as f64 * rate)).min(opts.t_ref),
        ExposureMode::Optimized => opts.t_ref,
    };
    let cfg = MetrologyConfig {
        n,
        t_tot: opts.m_shots as f64 * opts.t_ref,
        t_e,
        t_g: 0.0,
        var_h: 0.0,
    };
    cfg.validate()?;
    let survival = (-rate * n as f64 * t_e).exp();
    let n_f = n as f64;
    let var = 1.0 / (cfg.m_shots() as f64 * n_f * n_f * t_e * t_e * survival);
    Ok(point(n, var.sqrt() * opts.t_ref, Some(t_e)))
}

/// Spin and optical sensitivity curves with their reference limits,
/// normalized per particle.
pub fn figure3_curves(opts: &Fig3Options) -> Result<Fig3> {
    if opts.n_max < 2 {
        return Err(invalid("n_max", "need at least two points"));
    }
    if opts.m_shots < 1 {
        return Err(invalid("m_shots", "need at least one shot"));
    }
    if !(opts.t_ref > 0.0) {
        return Err(invalid("t_ref", "must be positive"));
    }
    for &eps in &opts.epsilons {
        check_epsilon(eps)?;
    }
    let ns: Vec<usize> = (1..=opts.n_max).collect();
    let mut curves = Vec::new();
    for &eps in &opts.epsilons {
        for map in &opts.dephasing_maps {
            let (family, points) = match map {
                DephasingMap::Gaussian => (
                    Family::Spin,
                    ns.par_iter()
                        .map(|&n| gaussian_spin_point(n, eps, opts))
                        .collect::<Result<Vec<_>>>()?,
                ),
                DephasingMap::Erasure => (
                    Family::SpinErasure,
                    ns.par_iter()
                        .map(|&n| erasure_spin_point(n, eps, opts))
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            curves.push(SensitivityCurve {
                family,
                epsilon: eps,
                points,
                normalization: NORMALIZATION,
            });
        }
        let optical = ns
            .iter()
            .map(|&n| point(n, optical_phase_std(n, eps, opts.m_shots), None))
            .collect();
        curves.push(SensitivityCurve {
            family: Family::Optical,
            epsilon: eps,
            points: optical,
            normalization: NORMALIZATION,
        });
    }
    Ok(Fig3 {
        curves,
        sql: ns
            .iter()
            .map(|&n| point(n, sql_std(n, opts.m_shots), None))
            .collect(),
        heisenberg: ns
            .iter()
            .map(|&n| point(n, heisenberg_std(n, opts.m_shots), None))
            .collect(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    /// Add unit-variance Gaussian readout noise to each shot's NOON phase.
    pub projection_noise: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            projection_noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub index: usize,
    /// Measured NOON phase, rad.
    pub phase: f64,
    /// Field estimate, T.
    pub b_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean_b: f64,
    /// Sample variance of the per-shot field estimates, T².
    pub shot_variance_b: f64,
    /// Variance of the mean field estimate, T².
    pub variance_of_mean_b: f64,
    /// Analytic variance of the mean, T².
    pub analytic_variance_of_mean_b: f64,
    /// T per unit of per-particle phase rate δ (rad/s).
    pub tesla_per_rate: f64,
    pub shots: Vec<ShotRecord>,
}

impl McEstimate {
    /// Variance of the mean expressed in per-particle phase-rate units.
    pub fn rate_variance_of_mean(&self) -> f64 {
        self.variance_of_mean_b / self.tesla_per_rate.powi(2)
    }
}

/// Simulates `cfg.m_shots()` NOON-line measurements of a true field offset
/// `b_true` with sampled dephasing, and averages the per-shot estimates.
pub fn monte_carlo_estimate(
    system: &StarSystem,
    noise: &NoiseModel,
    b_true: f64,
    cfg: &MetrologyConfig,
    seed: u64,
    opts: McOptions,
) -> Result<McEstimate> {
    system.validate()?;
    noise.validate()?;
    cfg.validate()?;
    if let NoiseModel::PhotonLoss { .. } = noise {
        return Err(Error::NotApplicable("photon_loss"));
    }
    if cfg.n != system.n_spins() {
        return Err(Error::Mismatch(format!(
            "metrology n = {} but the star has {} spins",
            cfg.n,
            system.n_spins()
        )));
    }
    let ell = system.line_lopsidedness(0)?;
    let phase_per_tesla = ell * 2.0 * PI * system.gamma_b * 1.0e6 * cfg.t_e;
    let expected_phase = phase_per_tesla * b_true;
    if !(expected_phase.abs() < PI / 2.0) {
        return Err(Error::PhaseWrap {
            phase: expected_phase,
        });
    }

    let exp = ExperimentConfig {
        b_off: b_true,
        t_wait: cfg.t_e,
        include_j_during_wait: true,
    };
    let ground = BranchPairState::ground(0, system.n_b)?;
    let clean_phase = run_sequence(&NOON_SEQUENCE, &ground, &exp, system)
        .a_coherence()
        .arg();

    let m = cfg.m_shots();
    let n_b = system.n_b;
    let shots: Vec<ShotRecord> = (0..m)
        .into_par_iter()
        .map(|index| {
            let mut rng = substream(seed, index as u64);
            let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
            let mut phase = clean_phase;
            match *noise {
                NoiseModel::LocalDephasing { sigma_a, sigma_b } => {
                    phase += sigma_a * normal();
                    for _ in 0..n_b {
                        phase += sigma_b * normal();
                    }
                }
                NoiseModel::GlobalDephasing { sigma_global } => {
                    phase += ell * sigma_global * normal();
                }
                NoiseModel::PhotonLoss { .. } => unreachable!(),
            }
            if opts.projection_noise {
                phase += normal();
            }
            ShotRecord {
                index,
                phase,
                b_estimate: phase / phase_per_tesla,
            }
        })
        .collect();

    let m_f = m as f64;
    let mean_b = shots.iter().map(|s| s.b_estimate).sum::<f64>() / m_f;
    let shot_variance_b = if m > 1 {
        shots
            .iter()
            .map(|s| (s.b_estimate - mean_b).powi(2))
            .sum::<f64>()
            / (m_f - 1.0)
    } else {
        0.0
    };
    let noise_phase_var = match *noise {
        NoiseModel::LocalDephasing { sigma_a, sigma_b } => {
            sigma_a * sigma_a + n_b as f64 * sigma_b * sigma_b
        }
        NoiseModel::GlobalDephasing { sigma_global } => (ell * sigma_global).powi(2),
        NoiseModel::PhotonLoss { .. } => unreachable!(),
    };
    let readout_var = if opts.projection_noise { 1.0 } else { 0.0 };
    let analytic = (readout_var + noise_phase_var) / phase_per_tesla.powi(2) / m_f;
    Ok(McEstimate {
        mean_b,
        shot_variance_b,
        variance_of_mean_b: shot_variance_b / m_f,
        analytic_variance_of_mean_b: analytic,
        tesla_per_rate: cfg.n as f64 * cfg.t_e / phase_per_tesla,
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, t_tot: f64, t_e: f64, t_g: f64, var_h: f64) -> MetrologyConfig {
        MetrologyConfig {
            n,
            t_tot,
            t_e,
            t_g,
            var_h,
        }
    }

    #[test]
    fn rate_variance() {
        assert_eq!(phase_rate_variance(1, 1.0).unwrap(), 1.0);
        assert!((phase_rate_variance(10, 1.0).unwrap() - 0.01).abs() < 1e-15);
        let a = phase_rate_variance(7, 0.3).unwrap();
        let b = phase_rate_variance(7, 0.6).unwrap();
        assert!((b - a / 4.0).abs() < 1e-15);
        assert!(phase_rate_variance(3, 0.0).is_err());
    }

    #[test]
    fn noise_free_reduction() {
        let c = cfg(5, 2.0, 0.01, 0.0, 0.0);
        let v = field_variance(&c).unwrap();
        assert!((v.approximate - 1.0 / (2.0 * 25.0 * 0.01)).abs() < 1e-9);
        assert!((v.exact - v.approximate).abs() / v.exact < 1e-9);
        assert_eq!(c.m_shots(), 200);
    }

    #[test]
    fn single_particle_baseline() {
        let c = cfg(1, 1.0, 0.1, 0.0, 0.0);
        let v = field_variance(&c).unwrap();
        assert!((v.exact - phase_rate_variance(1, 0.1).unwrap() / 10.0).abs() < 1e-9);
    }

    #[test]
    fn budget_rejected() {
        assert!(field_variance(&cfg(1, 0.05, 0.1, 0.0, 0.0)).is_err());
        assert!(field_variance(&cfg(0, 1.0, 0.1, 0.0, 0.0)).is_err());
    }

    #[test]
    fn exposure_optimum() {
        assert_eq!(optimal_exposure(1, 1.0).unwrap(), 1.0);
        assert_eq!(optimal_exposure(4, 1.0).unwrap(), 0.5);
        assert!(matches!(optimal_exposure(4, 0.0), Err(Error::Unbounded(_))));
    }

    #[test]
    fn optimal_std_matches_substitution() {
        for &(n, var_h, t_tot) in &[(1, 1.0, 1.0), (10, 3.7, 12.0), (256, 0.02, 5.0)] {
            let t_e = optimal_exposure(n, var_h).unwrap();
            let approx = field_variance(&cfg(n, t_tot, t_e, 0.0, var_h))
                .unwrap()
                .approximate;
            let std = optimal_field_std(n, var_h, t_tot).unwrap();
            assert!((std * std - approx).abs() / approx < 1e-12);
        }
        let r = optimal_field_std(40, 1.0, 1.0).unwrap() / optimal_field_std(10, 1.0, 1.0).unwrap();
        assert!((r - 4f64.powf(-0.75)).abs() < 1e-12);
        assert!((r - 0.3536).abs() < 1e-4);
    }

    #[test]
    fn optical_limits() {
        assert!((optical_phase_std(7, 0.0, 100) - 1.0 / 70.0).abs() < 1e-15);
        assert!((optical_phase_std(1, 0.2, 100) - 1.0 / (80f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn photonic_optimum_examples() {
        assert_eq!(optimal_photonic_size(0.1).unwrap(), 19);
        assert_eq!(optimal_photonic_size(0.5).unwrap(), 3);
        assert!(matches!(
            optimal_photonic_size(0.0),
            Err(Error::Unbounded(_))
        ));
        let mut prev = usize::MAX;
        for k in 1..100 {
            let n = optimal_photonic_size(k as f64 / 101.0).unwrap();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn coherence_constraint() {
        assert!(within_noon_coherence(0.01, 4, 0.1));
        assert!(!within_noon_coherence(0.06, 4, 0.1));
    }

    #[test]
    fn monte_carlo_noise_free_is_exact() {
        let system = StarSystem::default();
        let noise = NoiseModel::LocalDephasing {
            sigma_a: 0.0,
            sigma_b: 0.0,
        };
        let c = cfg(10, 0.1, 1e-4, 0.0, 0.0);
        let b = 2.1e-6;
        let est = monte_carlo_estimate(
            &system,
            &noise,
            b,
            &c,
            9,
            McOptions {
                projection_noise: false,
            },
        )
        .unwrap();
        assert!((est.mean_b - b).abs() < 1e-12 * b.abs().max(1e-6));
        assert_eq!(est.shots.len(), 1000);
    }

    #[test]
    fn monte_carlo_guards() {
        let system = StarSystem::default();
        let noise = NoiseModel::LocalDephasing {
            sigma_a: 0.1,
            sigma_b: 0.1,
        };
        // phase ≈ π at the reference point: outside the unambiguous range
        let c = cfg(10, 0.1, 400e-6, 0.0, 0.0);
        assert!(matches!(
            monte_carlo_estimate(&system, &noise, 3.13e-6, &c, 1, McOptions::default()),
            Err(Error::PhaseWrap { .. })
        ));
        let c = cfg(9, 0.1, 1e-4, 0.0, 0.0);
        assert!(matches!(
            monte_carlo_estimate(&system, &noise, 1e-7, &c, 1, McOptions::default()),
            Err(Error::Mismatch(_))
        ));
        let c = cfg(10, 0.1, 1e-4, 0.0, 0.0);
        assert!(monte_carlo_estimate(
            &system,
            &NoiseModel::PhotonLoss { epsilon: 0.1 },
            1e-7,
            &c,
            1,
            McOptions::default()
        )
        .is_err());
    }
}
