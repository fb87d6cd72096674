//! J-resolved A-spin spectrum and the Fourier analysis of `t_wait` sweeps.
//!
//! Frequency offsets are positive to the left of the spectrum, so the
//! all-`|0⟩` bath line sits at `+n_b·J/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::pulse::{check_uniform, TWaitSweep};
use crate::system::{binomial, StarSystem};

/// Samples required across the narrowest linewidth.
pub const MIN_SAMPLES_PER_LINEWIDTH: f64 = 4.0;
/// Zero-padding factor applied before the sweep FFT.
pub const FFT_PADDING: usize = 4;
/// Peaks beyond this fraction of the Nyquist frequency are treated as aliased.
pub const NYQUIST_GUARD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub weight: usize,
    pub lopsidedness: f64,
    /// Offset from the A resonance, Hz.
    pub frequency: f64,
    pub intensity: f64,
    /// Half-width of the line, Hz.
    pub linewidth: f64,
}

/// Linewidth (Hz) of a state with lopsidedness `ell`: grows as `ℓ^κ` above
/// `ℓ = 1` and sits at `1/(π·t2_base)` below it.
pub fn linewidth_model(ell: f64, system: &StarSystem) -> f64 {
    (1.0 / (PI * system.t2_base)) * ell.max(1.0).powf(system.kappa)
}

/// One line per bath weight `m = 0..=n_b`.
pub fn line_table(system: &StarSystem) -> Result<Vec<SpectralLine>> {
    system.validate()?;
    let n_b = system.n_b;
    let norm = 2f64.powi(n_b as i32);
    (0..=n_b)
        .map(|m| {
            let ell = system.line_lopsidedness(m)?;
            Ok(SpectralLine {
                weight: m,
                lopsidedness: ell,
                frequency: (n_b as f64 / 2.0 - m as f64) * system.j_coupling,
                intensity: binomial(n_b, m) as f64 / norm,
                linewidth: linewidth_model(ell, system),
            })
        })
        .collect()
}

/// Uniform frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(invalid("frequency grid", "need start < stop and step > 0"));
        }
        let len = ((stop - start) / step).floor() as usize + 1;
        Ok(Self { start, step, len })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len)
            .map(|k| self.start + self.step * k as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub frequencies: Vec<f64>,
    pub samples: Vec<Complex64>,
}

/// Sum of complex Lorentzians `I·a·Γ/(Γ − i(f − f0))`; the real part is an
/// absorption line of height `I·Re(a)`.
pub fn synthesize_spectrum(
    lines: &[SpectralLine],
    amplitudes: &[Complex64],
    grid: &FrequencyGrid,
) -> Result<SpectrumTrace> {
    if lines.len() != amplitudes.len() {
        return Err(Error::Mismatch(format!(
            "{} lines but {} amplitudes",
            lines.len(),
            amplitudes.len()
        )));
    }
    let narrowest = lines
        .iter()
        .map(|l| l.linewidth)
        .fold(f64::INFINITY, f64::min);
    if narrowest.is_finite() && grid.step > narrowest / MIN_SAMPLES_PER_LINEWIDTH {
        return Err(Error::GridTooCoarse {
            spacing: grid.step,
            linewidth: narrowest,
        });
    }
    let frequencies = grid.points();
    let samples = frequencies
        .iter()
        .map(|&f| {
            lines
                .iter()
                .zip(amplitudes)
                .map(|(l, a)| {
                    let g = l.linewidth;
                    a * l.intensity * g / Complex64::new(g, -(f - l.frequency))
                })
                .sum()
        })
        .collect();
    Ok(SpectrumTrace {
        frequencies,
        samples,
    })
}

/// Oscillation peak found in one line of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftPeak {
    pub weight: usize,
    /// Signed oscillation frequency, Hz.
    pub freq_hz: f64,
    /// Full width at half maximum of the power spectrum, Hz.
    pub width_hz: f64,
    /// Peak magnitude of the apodized transform.
    pub height: f64,
    /// Width of one (padded) frequency bin, Hz.
    pub bin_hz: f64,
}

/// Locates the dominant oscillation frequency of a complex time series
/// sampled every `dt`, after an exponential apodization `exp(−π·Γ·t)`.
pub fn dominant_frequency(
    samples: &[Complex64],
    dt: f64,
    apodization_hz: f64,
) -> Result<(f64, f64, f64, f64)> {
    if samples.len() < 4 || !(dt > 0.0) {
        return Err(invalid(
            "samples",
            "need at least 4 uniformly spaced samples",
        ));
    }
    let n = (samples.len() * FFT_PADDING).next_power_of_two();
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(k, s)| s * (-PI * apodization_hz * dt * k as f64).exp())
        .collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();

    let (k_max, &p_max) = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let bin = 1.0 / (n as f64 * dt);
    let mag = |k: isize| power[k.rem_euclid(n as isize) as usize].sqrt();
    let (y0, y1, y2) = (
        mag(k_max as isize - 1),
        mag(k_max as isize),
        mag(k_max as isize + 1),
    );
    let denom = y0 - 2.0 * y1 + y2;
    let delta = if denom.abs() > 0.0 {
        0.5 * (y0 - y2) / denom
    } else {
        0.0
    };
    let k_signed = if k_max < n / 2 {
        k_max as f64
    } else {
        k_max as f64 - n as f64
    };
    let freq = (k_signed + delta) * bin;

    // walk outward to the half-power crossings
    let half = 0.5 * p_max;
    let crossing = |dir: isize| -> f64 {
        let mut prev = p_max;
        for step in 1..(n as isize / 2) {
            let p = power[(k_max as isize + dir * step).rem_euclid(n as isize) as usize];
            if p <= half {
                let frac = (prev - half) / (prev - p);
                return (step as f64 - 1.0 + frac) * bin;
            }
            prev = p;
        }
        n as f64 * bin / 2.0
    };
    let width = crossing(1) + crossing(-1);
    Ok((freq, width, p_max.sqrt(), bin))
}

/// Per-line peak frequency and width of a `t_wait` sweep. Each line is
/// apodized with the decay implied by [`linewidth_model`].
pub fn fft_oscillation(sweep: &TWaitSweep, system: &StarSystem) -> Result<Vec<FftPeak>> {
    check_uniform(&sweep.times)?;
    let dt = sweep.dt();
    let nyquist = 0.5 / dt;
    sweep
        .lines
        .par_iter()
        .enumerate()
        .map(|(line, row)| {
            let first = row.first().ok_or_else(|| invalid("sweep", "empty line"))?;
            let samples: Vec<Complex64> = row.iter().map(|s| s.signal).collect();
            let gamma = linewidth_model(first.lopsidedness, system);
            let (freq_hz, width_hz, height, bin_hz) = dominant_frequency(&samples, dt, gamma)?;
            if freq_hz.abs() > NYQUIST_GUARD * nyquist {
                return Err(Error::Aliasing {
                    line,
                    freq_hz,
                    nyquist_hz: nyquist,
                });
            }
            Ok(FftPeak {
                weight: first.weight,
                freq_hz,
                width_hz,
                height,
                bin_hz,
            })
        })
        .collect()
}

/// Field offset inferred from one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningEstimate {
    /// T.
    pub b_off: f64,
    /// Standard uncertainty, T.
    pub sigma: f64,
}

/// `b = f / (ℓ_γ·γ_B)` with uncertainty `Γ / (ℓ_γ·γ_B)` at unit SNR.
pub fn estimate_detuning(
    peak_freq: f64,
    peak_width: f64,
    lopsidedness: f64,
    system: &StarSystem,
) -> Result<DetuningEstimate> {
    estimate_detuning_with_snr(peak_freq, peak_width, lopsidedness, system, 1.0)
}

/// As [`estimate_detuning`], with the uncertainty divided by `snr`.
pub fn estimate_detuning_with_snr(
    peak_freq: f64,
    peak_width: f64,
    lopsidedness: f64,
    system: &StarSystem,
    snr: f64,
) -> Result<DetuningEstimate> {
    if lopsidedness == 0.0 {
        return Err(Error::ZeroLopsidedness);
    }
    if !(lopsidedness > 0.0) {
        return Err(invalid("lopsidedness", "must be positive"));
    }
    if !(snr > 0.0) {
        return Err(invalid("snr", "must be positive"));
    }
    let scale = lopsidedness * system.gamma_b * 1.0e6;
    Ok(DetuningEstimate {
        b_off: peak_freq / scale,
        sigma: peak_width.abs() / scale / snr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{sweep_t_wait, uniform_times};
    use crate::state::build_thermal_ensemble;

    #[test]
    fn line_positions_and_intensities() {
        let lines = line_table(&StarSystem::default()).unwrap();
        assert_eq!(lines.len(), 10);
        assert!((lines[0].frequency - 48.0).abs() < 0.5);
        assert!((lines[1].frequency - 37.3).abs() < 0.5);
        let expected = [1, 9, 36, 84, 126, 126, 84, 36, 9, 1];
        for (l, e) in lines.iter().zip(expected) {
            assert_eq!(l.intensity, e as f64 / 512.0);
        }
        let total: f64 = lines.iter().map(|l| l.intensity).sum();
        assert!((total - 1.0).abs() < 1e-15);
        for (a, b) in lines.iter().zip(lines.iter().rev()) {
            assert_eq!(a.frequency, -b.frequency);
            assert_eq!(a.intensity, b.intensity);
        }
    }

    #[test]
    fn linewidth_examples() {
        let s = StarSystem::default();
        assert_eq!(linewidth_model(1.0, &s), 1.0 / (PI * s.t2_base));
        assert_eq!(linewidth_model(0.3, &s), 1.0 / (PI * s.t2_base));
        let r = linewidth_model(9.405, &s) / linewidth_model(1.0, &s);
        assert!((r - 3.067).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let ell = 0.1 * k as f64;
            let ratio = linewidth_model(ell, &s) / ell;
            assert!(ratio < prev);
            prev = ratio;
        }
    }

    #[test]
    fn synthesized_peaks_follow_intensity() {
        // narrow lines so neighbours barely overlap
        let system = StarSystem {
            t2_base: 20.0,
            ..StarSystem::default()
        };
        let lines = line_table(&system).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); lines.len()];
        let grid = FrequencyGrid::new(-60.0, 60.0, 0.001).unwrap();
        let trace = synthesize_spectrum(&lines, &ones, &grid).unwrap();
        for l in &lines {
            let k = ((l.frequency - grid.start) / grid.step).round() as usize;
            let height = trace.samples[k].re;
            assert!(
                (height - l.intensity).abs() < 1e-3 * l.intensity.max(0.01),
                "m = {}",
                l.weight
            );
        }
        let zeros = vec![Complex64::new(0.0, 0.0); lines.len()];
        let flat = synthesize_spectrum(&lines, &zeros, &grid).unwrap();
        assert!(flat.samples.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let lines = line_table(&StarSystem::default()).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); lines.len()];
        let grid = FrequencyGrid::new(-80.0, 80.0, 2.0).unwrap();
        assert!(matches!(
            synthesize_spectrum(&lines, &ones, &grid),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(synthesize_spectrum(&lines, &ones[..3], &grid).is_err());
    }

    #[test]
    fn single_tone_recovered() {
        let dt = 1e-4;
        for &f in &[-2100.0, -17.3, 0.0, 333.3, 1253.4, 4000.0] {
            let samples: Vec<Complex64> = (0..2048)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * dt * k as f64))
                .collect();
            let (got, _, _, bin) = dominant_frequency(&samples, dt, 5.0).unwrap();
            assert!((got - f).abs() < bin, "f = {f}: got {got}, bin {bin}");
        }
    }

    #[test]
    fn zero_field_peaks_at_dc() {
        let system = StarSystem::default();
        let ensemble = build_thermal_ensemble(&system).unwrap();
        let sweep = sweep_t_wait(&ensemble, 0.0, &uniform_times(0.0, 1e-4, 256)).unwrap();
        for p in fft_oscillation(&sweep, &system).unwrap() {
            assert!(p.freq_hz.abs() < 1e-9);
        }
    }

    #[test]
    fn aliasing_reported() {
        let system = StarSystem::default();
        let ensemble = build_thermal_ensemble(&system).unwrap();
        // NOON line at ~1253 Hz sampled at 2.6 kHz: inside the guard band
        let sweep =
            sweep_t_wait(&ensemble, 3.13e-6, &uniform_times(0.0, 1.0 / 2600.0, 512)).unwrap();
        match fft_oscillation(&sweep, &system) {
            Err(Error::Aliasing { line, .. }) => assert!(line == 0 || line == 9),
            other => panic!("expected aliasing, got {other:?}"),
        }
    }

    #[test]
    fn detuning_inversion() {
        let s = StarSystem::default();
        let est = estimate_detuning(1253.4, 10.0, 9.405, &s).unwrap();
        assert!((est.b_off - 3.13e-6).abs() < 1e-9);
        assert_eq!(estimate_detuning(0.0, 1.0, 2.0, &s).unwrap().b_off, 0.0);
        assert_eq!(
            estimate_detuning(1.0, 1.0, 0.0, &s),
            Err(Error::ZeroLopsidedness)
        );
        let hi = estimate_detuning(0.0, linewidth_model(9.405, &s), 9.405, &s).unwrap();
        let lo = estimate_detuning(0.0, linewidth_model(1.405, &s), 1.405, &s).unwrap();
        let expected = (linewidth_model(9.405, &s) / 9.405) / (linewidth_model(1.405, &s) / 1.405);
        assert!((hi.sigma / lo.sigma - expected).abs() < 1e-12);
        assert!(hi.sigma < lo.sigma);
    }
}
