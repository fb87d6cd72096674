//! The four subcommands. Each reads a validated [`RunConfig`], writes its
//! artifacts under `out_dir` and returns a short report.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;

use spinnoon::metrology::{heisenberg_std, log_log_slope, Family, McOptions};
use spinnoon::oracle::{canonical_pattern, MAX_ORACLE_NB};
use spinnoon::pulse::{run_protocol_with, sweep_t_wait_with, LineSignal};
use spinnoon::rng::substream;
use spinnoon::{
    apply_global_cnot, apply_hadamard_a, estimate_detuning, fft_oscillation, field_variance,
    figure3_curves, line_table, local_dephasing_factor, monte_carlo_dephase, monte_carlo_estimate,
    optimal_exposure, optimal_photonic_size, oracle_run, run_noon_protocol, synthesize_spectrum,
    BranchPairState, Error, ExperimentConfig, MetrologyConfig, NoiseModel, StarSystem,
};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{num, opt, Emitter};
use crate::svg::{Plot, Series, Style};

/// Agreement required between compressed and full-state signals.
pub const ORACLE_TOL: f64 = 1e-10;
/// Monte Carlo checks pass within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;

pub const SPECTRUM_COLUMNS: [&str; 3] = ["freq_hz", "absorption", "dispersion"];
pub const LINES_COLUMNS: [&str; 9] = [
    "line_m",
    "ell_gamma",
    "freq_hz",
    "intensity",
    "linewidth_hz",
    "amplitude_re",
    "amplitude_im",
    "phase_rad",
    "unwrapped_phase_rad",
];
pub const SWEEP_COLUMNS: [&str; 6] = [
    "line_m",
    "ell_gamma",
    "freq_hz",
    "width_hz",
    "b_off_estimate_T",
    "b_off_sigma_T",
];
pub const FIG3_COLUMNS: [&str; 7] = [
    "family",
    "epsilon",
    "n",
    "raw_std",
    "normalized_std",
    "optimal_te_s",
    "reference",
];

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Vec<String>,
    pub failed: usize,
}

/// Full-state cross-check of protocol output, one canonical pattern per line.
fn oracle_mismatch(
    lines: &[LineSignal],
    cfg: &ExperimentConfig,
    system: &StarSystem,
) -> Result<f64> {
    if system.n_b > MAX_ORACLE_NB {
        return Err(Error::DimensionCap {
            n_b: system.n_b,
            max: MAX_ORACLE_NB,
        }
        .into());
    }
    let mut worst: f64 = 0.0;
    for line in lines {
        let oracle = oracle_run(&canonical_pattern(line.weight, system.n_b), cfg, system)?;
        worst = worst.max((oracle - line.signal).norm());
    }
    Ok(worst)
}

fn oracle_gate(
    cfg: &RunConfig,
    lines: &[LineSignal],
    exp: &ExperimentConfig,
    out: &mut Outcome,
) -> Result<()> {
    if !cfg.oracle {
        return Ok(());
    }
    let worst = oracle_mismatch(lines, exp, &cfg.system()?)?;
    let ok = worst < ORACLE_TOL;
    out.report.push(format!(
        "oracle cross-check: {} (max deviation {worst:.2e})",
        if ok { "ok" } else { "MISMATCH" }
    ));
    if !ok {
        out.failed += 1;
    }
    Ok(())
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let ensemble = cfg.ensemble()?;
    let exp = cfg.experiment()?;
    let grid = cfg.grid()?;
    let lines = line_table(&system)?;
    let signals = run_noon_protocol(&ensemble, &exp)?;

    // relative line weights from the ensemble, which differ from the
    // binomial intensities only for a polarized bath
    let red: Vec<Complex64> = lines
        .iter()
        .zip(&ensemble.components)
        .map(|(l, c)| Complex64::new(c.probability / l.intensity, 0.0))
        .collect();
    let blue: Vec<Complex64> = red
        .iter()
        .zip(&signals)
        .map(|(r, s)| r * s.signal)
        .collect();
    let red_trace = synthesize_spectrum(&lines, &red, &grid)?;
    let blue_trace = synthesize_spectrum(&lines, &blue, &grid)?;

    let mut out = Outcome::default();
    oracle_gate(cfg, &signals, &exp, &mut out)?;

    let mut emit = Emitter::new(cfg, "spectrum")?;
    for (name, trace) in [
        ("spectrum_red.csv", &red_trace),
        ("spectrum_blue.csv", &blue_trace),
    ] {
        let rows: Vec<Vec<String>> = trace
            .frequencies
            .iter()
            .zip(&trace.samples)
            .map(|(f, s)| vec![num(*f), num(s.re), num(s.im)])
            .collect();
        emit.csv(name, &SPECTRUM_COLUMNS, &rows)?;
    }
    let rows: Vec<Vec<String>> = lines
        .iter()
        .zip(&signals)
        .zip(&blue)
        .map(|((l, s), a)| {
            vec![
                l.weight.to_string(),
                num(l.lopsidedness),
                num(l.frequency),
                num(l.intensity),
                num(l.linewidth),
                num(a.re),
                num(a.im),
                num(s.phase()),
                num(s.unwrapped_phase),
            ]
        })
        .collect();
    emit.csv("spectrum_lines.csv", &LINES_COLUMNS, &rows)?;

    if cfg.svg {
        let trace_points = |t: &spinnoon::SpectrumTrace| -> Vec<(f64, f64)> {
            t.frequencies
                .iter()
                .zip(&t.samples)
                .map(|(f, s)| (*f, s.re))
                .collect()
        };
        let plot = Plot {
            title: "Central-spin spectrum before (red) and after (blue) the protocol".into(),
            x_label: "frequency offset (Hz)".into(),
            y_label: "absorption (arb.)".into(),
            series: vec![
                Series::new("initial", trace_points(&red_trace), Style::Line).color("#c0392b"),
                Series::new("after protocol", trace_points(&blue_trace), Style::Line)
                    .color("#2471a3"),
            ],
            ..Plot::default()
        };
        emit.svg("spectrum.svg", &plot.render())?;
    }

    for (l, s) in lines.iter().zip(&signals) {
        out.report.push(format!(
            "line m={:<2} at {:>8.3} Hz  l_gamma={:.3}  phase={:+.4} pi",
            l.weight,
            l.frequency,
            l.lopsidedness,
            s.unwrapped_phase / std::f64::consts::PI
        ));
    }
    out.files = emit.written;
    Ok(out)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let ensemble = cfg.ensemble()?;
    let exp = cfg.experiment()?;
    let times = cfg.sweep_times();
    let sweep = sweep_t_wait_with(&ensemble, &exp, &times)?;
    let peaks = fft_oscillation(&sweep, &system)?;

    let mut out = Outcome::default();
    if cfg.oracle {
        let n = times.len();
        for k in [0, n / 2, n - 1] {
            let column: Vec<LineSignal> = sweep.lines.iter().map(|row| row[k]).collect();
            oracle_gate(cfg, &column, &exp.with_t_wait(times[k]), &mut out)?;
        }
    }

    let mut rows = Vec::new();
    let mut scatter = Vec::new();
    for (peak, row) in peaks.iter().zip(&sweep.lines) {
        let first = &row[0];
        let est = estimate_detuning(peak.freq_hz, peak.width_hz, first.lopsidedness, &system)?;
        // the oscillation sense follows the sign of the lopsidedness
        let b_est = est.b_off * first.signed_lopsidedness.signum();
        rows.push(vec![
            peak.weight.to_string(),
            num(first.lopsidedness),
            num(peak.freq_hz),
            num(peak.width_hz),
            num(b_est),
            num(est.sigma),
        ]);
        scatter.push((first.lopsidedness, peak.freq_hz.abs()));
        out.report.push(format!(
            "line m={:<2} l_gamma={:.3}  f={:>10.4} Hz  width={:.3} Hz  b={:.4e} +- {:.2e} T",
            peak.weight, first.lopsidedness, peak.freq_hz, peak.width_hz, b_est, est.sigma
        ));
    }
    let slope = scatter.iter().map(|(l, f)| l * f).sum::<f64>()
        / scatter.iter().map(|(l, _)| l * l).sum::<f64>();
    out.report.push(format!(
        "fit |f| = k * l_gamma: k = {slope:.4} Hz (expected {:.4} Hz)",
        system.b_frequency(cfg.b_off).abs()
    ));

    let mut emit = Emitter::new(cfg, "sweep")?;
    emit.csv("sweep.csv", &SWEEP_COLUMNS, &rows)?;
    if cfg.svg {
        let ell_max = scatter.iter().map(|p| p.0).fold(0.0, f64::max);
        let plot = Plot {
            title: "Oscillation frequency against weighted lopsidedness".into(),
            x_label: "l_gamma".into(),
            y_label: "|peak frequency| (Hz)".into(),
            series: vec![
                Series::new("FFT peaks", scatter, Style::Markers),
                Series::new(
                    "fit through origin",
                    vec![(0.0, 0.0), (ell_max, slope * ell_max)],
                    Style::Dashed,
                ),
            ],
            ..Plot::default()
        };
        emit.svg("sweep.svg", &plot.render())?;
    }
    out.files = emit.written;
    Ok(out)
}

pub fn cmd_fig3(cfg: &RunConfig) -> Result<Outcome> {
    let opts = cfg.fig3_options();
    let fig = figure3_curves(&opts)?;
    let mut rows = Vec::new();
    let mut out = Outcome::default();

    let reference: Vec<f64> = fig.heisenberg.iter().map(|p| p.raw_std).collect();
    for curve in &fig.curves {
        for (p, r) in curve.points.iter().zip(&reference) {
            rows.push(vec![
                curve.family.name().to_string(),
                num(curve.epsilon),
                p.n.to_string(),
                num(p.raw_std),
                num(p.normalized_std),
                opt(p.exposure),
                num(*r),
            ]);
        }
        if curve.family == Family::Optical && curve.epsilon > 0.0 {
            let best = curve
                .points
                .iter()
                .min_by(|a, b| a.raw_std.total_cmp(&b.raw_std))
                .map(|p| p.n)
                .unwrap_or(0);
            out.report.push(format!(
                "optical eps={}: raw minimum at n={best} (optimal photonic size {})",
                curve.epsilon,
                optimal_photonic_size(curve.epsilon)?
            ));
        } else if curve.family != Family::Optical {
            let sel: Vec<_> = curve.points.iter().filter(|p| p.n >= 16).collect();
            let xs: Vec<f64> = sel.iter().map(|p| p.n as f64).collect();
            let ys: Vec<f64> = sel.iter().map(|p| p.normalized_std).collect();
            if xs.len() >= 2 {
                out.report.push(format!(
                    "{} eps={}: normalized slope over n>=16 = {:.4}",
                    curve.family.name(),
                    curve.epsilon,
                    log_log_slope(&xs, &ys)
                ));
            }
        }
    }
    for (name, pts) in [("sql", &fig.sql), ("heisenberg", &fig.heisenberg)] {
        for (p, r) in pts.iter().zip(&reference) {
            rows.push(vec![
                name.to_string(),
                String::new(),
                p.n.to_string(),
                num(p.raw_std),
                num(p.normalized_std),
                String::new(),
                num(*r),
            ]);
        }
    }

    let mut emit = Emitter::new(cfg, "fig3")?;
    emit.csv("fig3.csv", &FIG3_COLUMNS, &rows)?;
    if cfg.svg {
        let norm = |pts: &[spinnoon::metrology::CurvePoint]| -> Vec<(f64, f64)> {
            pts.iter().map(|p| (p.n as f64, p.normalized_std)).collect()
        };
        let mut series: Vec<Series> = fig
            .curves
            .iter()
            .map(|c| {
                Series::new(
                    format!("{} eps={}", c.family.name(), c.epsilon),
                    norm(&c.points),
                    Style::Line,
                )
            })
            .collect();
        series.push(Series::new("SQL", norm(&fig.sql), Style::Dashed).color("#000000"));
        series
            .push(Series::new("Heisenberg", norm(&fig.heisenberg), Style::Dashed).color("#7f8c8d"));
        let plot = Plot {
            title: "Phase uncertainty against particle number".into(),
            x_label: "n".into(),
            y_label: "std * sqrt(n)".into(),
            log_x: true,
            log_y: true,
            series,
        };
        emit.svg("fig3.svg", &plot.render())?;
    }
    out.files = emit.written;
    Ok(out)
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check_oracle(cfg: &RunConfig) -> Result<Check> {
    let system = cfg.system()?;
    if system.n_b > MAX_ORACLE_NB && !cfg.oracle {
        return Ok(Check {
            name: "oracle equivalence",
            passed: true,
            detail: format!(
                "skipped: n_b = {} exceeds the oracle cap of {MAX_ORACLE_NB}",
                system.n_b
            ),
        });
    }
    let ensemble = cfg.ensemble()?;
    let steps = cfg.fault_inject.sequence();
    let mut rng = substream(cfg.seed, 0);
    let mut configs = vec![cfg.experiment()?];
    for _ in 0..cfg.oracle_pairs {
        configs.push(ExperimentConfig {
            b_off: rng.random_range(-10e-6..10e-6),
            t_wait: rng.random_range(0.0..5e-3),
            include_j_during_wait: cfg.include_j,
        });
    }
    let mut worst: f64 = 0.0;
    for exp in &configs {
        let lines = run_protocol_with(&steps, &ensemble, exp)?;
        worst = worst.max(oracle_mismatch(&lines, exp, &system)?);
    }
    Ok(Check {
        name: "oracle equivalence",
        passed: worst < ORACLE_TOL,
        detail: format!(
            "{} configurations x {} sectors, max deviation {worst:.2e} (tolerance {ORACLE_TOL:e}, sequence fault: {})",
            configs.len(),
            system.n_b + 1,
            cfg.fault_inject.name()
        ),
    })
}

fn check_dephasing(cfg: &RunConfig) -> Result<Check> {
    let system = cfg.system()?;
    let noon = apply_global_cnot(&apply_hadamard_a(&BranchPairState::ground(0, system.n_b)?));
    let s = cfg.mc_sigma;
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for (k, (sa, sb)) in [(0.0, 0.0), (s, 0.0), (0.0, s), (s, s)]
        .into_iter()
        .enumerate()
    {
        let mc = monte_carlo_dephase(
            &noon,
            sa,
            sb,
            cfg.seed.wrapping_add(1 + k as u64),
            cfg.mc_trials,
        )?;
        let exact = local_dephasing_factor(&noon, sa, sb, &system);
        let diff = (mc.attenuation - exact).abs();
        if mc.std_error > 0.0 {
            worst = worst.max(diff / mc.std_error);
            passed &= diff <= MC_SIGMAS * mc.std_error;
        } else {
            passed &= diff < 1e-12;
        }
    }
    Ok(Check {
        name: "Monte Carlo dephasing vs analytic",
        passed,
        detail: format!(
            "{} trials per point, worst deviation {worst:.2} standard errors (limit {MC_SIGMAS})",
            cfg.mc_trials
        ),
    })
}

fn check_estimator(cfg: &RunConfig) -> Result<Check> {
    let system = cfg.system()?;
    let t_e = cfg.mc_t_e;
    let metro = MetrologyConfig {
        n: system.n_spins(),
        t_tot: cfg.mc_shots as f64 * t_e,
        t_e,
        t_g: 0.0,
        var_h: (cfg.mc_sigma / t_e).powi(2),
    };
    let noise = NoiseModel::LocalDephasing {
        sigma_a: cfg.mc_sigma,
        sigma_b: cfg.mc_sigma,
    };
    let est = monte_carlo_estimate(
        &system,
        &noise,
        cfg.b_off,
        &metro,
        cfg.seed.wrapping_add(100),
        McOptions::default(),
    )?;
    let analytic = field_variance(&metro)?.exact;
    let sampled = est.rate_variance_of_mean();
    let m = est.shots.len() as f64;
    let rel = (sampled - analytic).abs() / analytic;
    let limit = MC_SIGMAS * (2.0 / (m - 1.0)).sqrt();
    Ok(Check {
        name: "Monte Carlo estimator vs exact variance",
        passed: rel <= limit,
        detail: format!(
            "{} shots, variance {sampled:.4e} vs {analytic:.4e} (relative {rel:.4}, limit {limit:.4}), mean b {:.4e} T",
            est.shots.len(),
            est.mean_b
        ),
    })
}

fn check_optimizers(cfg: &RunConfig) -> Result<Check> {
    let var_h = (cfg.mc_sigma / cfg.mc_t_e).powi(2).max(1.0);
    let mut worst: f64 = 0.0;
    for n in [1usize, 10, 100, 1000] {
        let best = optimal_exposure(n, var_h)?;
        // log-spaced grid over four decades around the optimum
        let grid_best = (0..=4000)
            .map(|k| best * 10f64.powf(-2.0 + k as f64 / 1000.0))
            .min_by(|&a, &b| {
                let v = |t_e: f64| {
                    field_variance(&MetrologyConfig {
                        n,
                        t_tot: 1.0,
                        t_e,
                        t_g: 0.0,
                        var_h,
                    })
                    .map(|f| f.approximate)
                    .unwrap_or(f64::INFINITY)
                };
                v(a).total_cmp(&v(b))
            })
            .unwrap_or(f64::NAN);
        worst = worst.max((grid_best / best).ln().abs());
    }
    let exposure_ok = worst <= 10f64.ln() / 1000.0 + 1e-12;

    let mut sizes = Vec::new();
    let mut sizes_ok = true;
    for &eps in cfg.epsilons.iter().filter(|&&e| e > 0.0) {
        let got = optimal_photonic_size(eps)?;
        let limit = (20.0 / -(1.0 - eps).ln()).ceil() as usize + 10;
        let brute = (1..=limit)
            .max_by(|&a, &b| {
                let s = |n: usize| 2.0 * (n as f64).ln() + n as f64 * (1.0 - eps).ln();
                s(a).total_cmp(&s(b))
            })
            .unwrap_or(0);
        sizes_ok &= got == brute;
        sizes.push(format!("eps={eps}: {got}/{brute}"));
    }
    Ok(Check {
        name: "optimizers vs grid search",
        passed: exposure_ok && sizes_ok,
        detail: format!(
            "exposure optimum within {worst:.2e} (log) of the grid minimum; photonic size optimizer/brute force {}",
            if sizes.is_empty() { "n/a".to_string() } else { sizes.join(", ") }
        ),
    })
}

fn check_heisenberg(cfg: &RunConfig) -> Result<Check> {
    let opts = cfg.fig3_options();
    let fig = figure3_curves(&opts)?;
    let mut below = 0;
    for curve in &fig.curves {
        for p in &curve.points {
            if p.raw_std < heisenberg_std(p.n, opts.m_shots) * (1.0 - 1e-12) {
                below += 1;
            }
        }
    }
    Ok(Check {
        name: "sensitivity curves respect the Heisenberg limit",
        passed: below == 0,
        detail: format!(
            "{} curves, {below} points below the limit",
            fig.curves.len()
        ),
    })
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome> {
    let checks = [
        check_oracle(cfg)?,
        check_dephasing(cfg)?,
        check_estimator(cfg)?,
        check_optimizers(cfg)?,
        check_heisenberg(cfg)?,
    ];
    let mut out = Outcome::default();
    for c in &checks {
        out.report.push(format!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
        if !c.passed {
            out.failed += 1;
        }
    }
    let mut body = out.report.join("\n");
    body.push('\n');
    let mut emit = Emitter::new(cfg, "validate")?;
    emit.text("validate.txt", &body)?;
    out.files = emit.written;
    Ok(out)
}
