use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinnoon_cli::commands::{FIG3_COLUMNS, LINES_COLUMNS, SPECTRUM_COLUMNS, SWEEP_COLUMNS};
use spinnoon_cli::output::{metadata, read_csv, read_metadata};
use spinnoon_cli::{run, Command as Cmd, RunConfig};

const QUICK: &str = "\
# small grids so the suite stays fast
sweep_points = 512
n_max = 64
mc_trials = 4000
mc_shots = 1000
oracle_pairs = 4
";

fn quick(dir: &Path, extra: &str) -> RunConfig {
    let mut cfg = RunConfig::parse(&format!("{QUICK}{extra}")).unwrap();
    cfg.out_dir = dir.to_path_buf();
    cfg
}

fn spinnoon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinnoon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn column(rows: &[csv::StringRecord], header: &[String], name: &str) -> Vec<f64> {
    let idx = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

/// Every emitted file starts with the metadata block; every CSV has the
/// documented columns and parseable numeric fields.
#[test]
fn schema_of_every_emitted_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(dir.path(), "");
    cfg.svg = true;
    let mut files = Vec::new();
    for command in [Cmd::Spectrum, Cmd::Sweep, Cmd::Fig3, Cmd::Validate] {
        files.extend(run(command, &cfg).map_err(|(e, _)| e).unwrap().files);
    }
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expected in [
        "spectrum_red.csv",
        "spectrum_blue.csv",
        "spectrum_lines.csv",
        "spectrum.svg",
        "sweep.csv",
        "sweep.svg",
        "fig3.csv",
        "fig3.svg",
        "validate.txt",
    ] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }

    let wanted_keys: Vec<&str> = metadata(&cfg, "x").iter().map(|(k, _)| *k).collect();
    for path in &files {
        let text = std::fs::read_to_string(path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy();
        let meta = if name.ends_with(".svg") {
            assert!(text.trim_end().ends_with("</svg>"), "{name}");
            let comments: String = text
                .lines()
                .skip(1)
                .map_while(|l| l.strip_prefix("<!-- ").and_then(|l| l.strip_suffix(" -->")))
                .map(|l| format!("# {l}\n"))
                .collect();
            read_metadata(&comments)
        } else {
            read_metadata(&text)
        };
        let keys: Vec<&str> = meta.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, wanted_keys, "{name}");
        assert!(
            meta.contains(&("config_sha256".into(), cfg.hash())),
            "{name}"
        );
        assert!(
            meta.contains(&("seed".into(), cfg.seed.to_string())),
            "{name}"
        );

        if !name.ends_with(".csv") {
            continue;
        }
        let (header, rows) = read_csv(path).unwrap();
        let expected: &[&str] = match name.as_ref() {
            "spectrum_red.csv" | "spectrum_blue.csv" => &SPECTRUM_COLUMNS,
            "spectrum_lines.csv" => &LINES_COLUMNS,
            "sweep.csv" => &SWEEP_COLUMNS,
            "fig3.csv" => &FIG3_COLUMNS,
            other => panic!("unexpected csv {other}"),
        };
        assert_eq!(header, expected, "{name}");
        assert!(!rows.is_empty(), "{name}");
        for row in &rows {
            assert_eq!(row.len(), expected.len(), "{name}");
            for (field, col) in row.iter().zip(expected) {
                match *col {
                    "family" => assert!(
                        ["spin", "spin_erasure", "optical", "sql", "heisenberg"].contains(&field),
                        "{field}"
                    ),
                    "line_m" | "n" => {
                        field.parse::<usize>().unwrap();
                    }
                    // blank where not applicable
                    "epsilon" | "optimal_te_s" if field.is_empty() => {}
                    _ => assert!(
                        field.parse::<f64>().unwrap().is_finite(),
                        "{name}: {col} = {field}"
                    ),
                }
            }
        }
    }
}

#[test]
fn identical_config_and_seed_reproduce_bytes() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(work.path(), QUICK);
    let mut outputs = Vec::new();
    for run_dir in ["a", "b"] {
        let out = work.path().join(run_dir);
        for command in ["spectrum", "sweep", "fig3", "validate"] {
            let res = spinnoon(&[
                command,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "17",
                "--svg",
            ]);
            assert!(
                res.status.success(),
                "{command}: {}",
                String::from_utf8_lossy(&res.stderr)
            );
        }
        outputs.push(out);
    }
    let mut names: Vec<_> = std::fs::read_dir(&outputs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for name in &names {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert!(a == b, "{name:?} differs between runs");
    }

    // a different seed changes the Monte Carlo report but not the seed-free tables
    let other = work.path().join("c");
    let res = spinnoon(&[
        "validate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
        "--seed",
        "18",
    ]);
    assert!(res.status.success());
    assert_ne!(
        std::fs::read(other.join("validate.txt")).unwrap(),
        std::fs::read(outputs[0].join("validate.txt")).unwrap()
    );
}

#[test]
fn sweep_does_not_depend_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = quick(&dir.path().join("a"), "seed = 1");
    let b = quick(&dir.path().join("b"), "seed = 2");
    run(Cmd::Sweep, &a).map_err(|(e, _)| e).unwrap();
    run(Cmd::Sweep, &b).map_err(|(e, _)| e).unwrap();
    let rows = |d: &Path| read_csv(&d.join("sweep.csv")).unwrap().1;
    assert_eq!(rows(&dir.path().join("a")), rows(&dir.path().join("b")));
}

#[test]
fn zero_field_leaves_spectrum_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path(), "b_off = 0");
    run(Cmd::Spectrum, &cfg).map_err(|(e, _)| e).unwrap();
    let (h, red) = read_csv(&dir.path().join("spectrum_red.csv")).unwrap();
    let (_, blue) = read_csv(&dir.path().join("spectrum_blue.csv")).unwrap();
    assert_eq!(red.len(), blue.len());
    for col in ["freq_hz", "absorption", "dispersion"] {
        for (r, b) in column(&red, &h, col).iter().zip(column(&blue, &h, col)) {
            assert!((r - b).abs() <= 1e-12, "{col}: {r} vs {b}");
        }
    }
}

#[test]
fn default_spectrum_inverts_the_outer_line() {
    let dir = tempfile::tempdir().unwrap();
    run(Cmd::Spectrum, &quick(dir.path(), ""))
        .map_err(|(e, _)| e)
        .unwrap();
    let (h, rows) = read_csv(&dir.path().join("spectrum_lines.csv")).unwrap();
    assert_eq!(rows.len(), 10);
    let freq = column(&rows, &h, "freq_hz");
    let re = column(&rows, &h, "amplitude_re");
    let phase = column(&rows, &h, "unwrapped_phase_rad");
    assert!((freq[0] - 48.0).abs() < 0.5);
    assert!((phase[0] / std::f64::consts::PI - 1.0).abs() < 0.01);
    assert!(re[0] < -0.99);
    // lines near the centre keep their sign
    assert!(re[4] > 0.5 && re[5] > 0.5);
}

#[test]
fn single_partner_gives_a_doublet() {
    let dir = tempfile::tempdir().unwrap();
    run(Cmd::Spectrum, &quick(dir.path(), "n_b = 1"))
        .map_err(|(e, _)| e)
        .unwrap();
    let (h, rows) = read_csv(&dir.path().join("spectrum_lines.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    let freq = column(&rows, &h, "freq_hz");
    assert!((freq[0] + freq[1]).abs() < 1e-12);
    assert!((freq[0] - freq[1] - 10.67).abs() < 1e-12);
    assert_eq!(column(&rows, &h, "intensity"), vec![0.5, 0.5]);
}

#[test]
fn sweep_frequencies_follow_lopsidedness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        sweep_points: 2048,
        ..quick(dir.path(), "")
    };
    run(Cmd::Sweep, &cfg).map_err(|(e, _)| e).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv")).unwrap();
    let ell = column(&rows, &h, "ell_gamma");
    let freq = column(&rows, &h, "freq_hz");
    let b = column(&rows, &h, "b_off_estimate_T");
    let rate = 42.577 * 3.13;
    for ((l, f), b) in ell.iter().zip(&freq).zip(&b) {
        assert!((f.abs() - l * rate).abs() < 0.5, "{l} {f}");
        assert!((b - 3.13e-6).abs() < 1e-9);
    }
}

#[test]
fn mirrored_lines_differ_by_the_central_spin_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        sweep_points: 2048,
        ..quick(dir.path(), "")
    };
    run(Cmd::Sweep, &cfg).map_err(|(e, _)| e).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv")).unwrap();
    let freq = column(&rows, &h, "freq_hz");
    let n = freq.len();
    // |l(m)| - |l(n_b - m)| = 2 gamma_a / gamma_b while both branches keep their sign
    let offset = 2.0 * cfg.gamma_a * 1e6 * cfg.b_off;
    for m in 0..n / 2 {
        let gap = freq[m].abs() - freq[n - 1 - m].abs();
        assert!((gap - offset).abs() < 0.05, "m = {m}: {gap} vs {offset}");
    }
}

#[test]
fn lossless_curves_sit_on_heisenberg() {
    let dir = tempfile::tempdir().unwrap();
    run(Cmd::Fig3, &quick(dir.path(), "epsilons = 0"))
        .map_err(|(e, _)| e)
        .unwrap();
    let (h, rows) = read_csv(&dir.path().join("fig3.csv")).unwrap();
    let fam = h.iter().position(|c| c == "family").unwrap();
    let lossless: Vec<_> = rows
        .iter()
        .filter(|r| !["sql", "heisenberg"].contains(&&r[fam]))
        .cloned()
        .collect();
    assert!(!lossless.is_empty());
    let raw = column(&lossless, &h, "raw_std");
    let reference = column(&lossless, &h, "reference");
    for (r, h) in raw.iter().zip(reference) {
        assert!((r - h).abs() <= 1e-12 * h, "{r} vs {h}");
    }
}

#[test]
fn optical_minima_at_optimal_size() {
    let dir = tempfile::tempdir().unwrap();
    run(Cmd::Fig3, &quick(dir.path(), ""))
        .map_err(|(e, _)| e)
        .unwrap();
    let (h, rows) = read_csv(&dir.path().join("fig3.csv")).unwrap();
    let fam = h.iter().position(|c| c == "family").unwrap();
    let eps_col = h.iter().position(|c| c == "epsilon").unwrap();
    for (eps, expected) in [(0.05, 39), (0.1, 19), (0.2, 9)] {
        let curve: Vec<_> = rows
            .iter()
            .filter(|r| &r[fam] == "optical" && r[eps_col].parse::<f64>().unwrap() == eps)
            .cloned()
            .collect();
        let raw = column(&curve, &h, "raw_std");
        let n = column(&curve, &h, "n");
        let best = (0..raw.len())
            .min_by(|&a, &b| raw[a].total_cmp(&raw[b]))
            .unwrap();
        assert_eq!(n[best] as usize, expected, "eps = {eps}");
    }
}

#[test]
fn validate_passes_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(Cmd::Validate, &quick(dir.path(), ""))
        .map_err(|(e, _)| e)
        .unwrap();
    assert_eq!(out.failed, 0);
    assert!(
        out.report.iter().all(|l| l.starts_with("PASS")),
        "{:#?}",
        out.report
    );
}

#[test]
fn corrupted_sequence_fails_validation() {
    let work = tempfile::tempdir().unwrap();
    for fault in ["drop_final_cnot", "drop_hadamard", "double_evolve"] {
        let config = write_config(work.path(), &format!("{QUICK}fault_inject = {fault}\n"));
        let out = work.path().join(fault);
        let res = spinnoon(&[
            "validate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(1), "{fault}");
        let stdout = String::from_utf8_lossy(&res.stdout);
        assert!(stdout.contains("FAIL oracle equivalence"), "{stdout}");
        // the report is still written
        assert!(out.join("validate.txt").exists());
    }
}

#[test]
fn oracle_refuses_oversized_star() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(work.path(), &format!("{QUICK}n_b = 13\n"));
    let out = work.path().join("o");
    let args = [
        "validate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let res = spinnoon(&[&args[..], &["--oracle"]].concat());
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("12"));

    // without the cross-check the oracle test is skipped
    let res = spinnoon(&args);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stdout).contains("skipped"));
}

#[test]
fn exit_codes() {
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("o");
    let out = out.to_str().unwrap();

    let bad = write_config(work.path(), "colour = blue\n");
    assert_eq!(
        spinnoon(&["spectrum", "--config", bad.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(2)
    );

    let missing = work.path().join("nope.cfg");
    assert_eq!(
        spinnoon(&[
            "spectrum",
            "--config",
            missing.to_str().unwrap(),
            "--out",
            out
        ])
        .status
        .code(),
        Some(3)
    );

    // an existing file where the output directory should go
    let blocker = work.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(
        spinnoon(&["fig3", "--out", blocker.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    let aliased = write_config(work.path(), "sweep_dt = 1e-3\nsweep_points = 256\n");
    let res = spinnoon(&["sweep", "--config", aliased.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&res.stderr).contains("line 0"),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    assert_eq!(spinnoon(&["fig3", "--out", out]).status.code(), Some(0));
}

#[test]
fn commands_leave_config_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(dir.path(), "");
    let before = cfg.clone();
    for command in [Cmd::Spectrum, Cmd::Sweep, Cmd::Fig3] {
        run(command, &cfg).map_err(|(e, _)| e).unwrap();
    }
    assert_eq!(cfg, before);
}
