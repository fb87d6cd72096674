//! Metadata header and file emission shared by every command.

use std::path::{Path, PathBuf};

use spinnoon::metrology::NORMALIZATION;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// How `ε` becomes a phase channel; recorded in every header.
pub const EPSILON_MAPPING: &str = "gaussian:sigma^2=-2ln(1-eps);erasure:p=eps";
pub const EPSILON_SCOPE: &str = "per_spin_per_exposure_window";
pub const SNR_CONVENTION: &str = "unit";

/// `(key, value)` pairs written at the top of every file.
pub fn metadata(cfg: &RunConfig, command: &str) -> Vec<(&'static str, String)> {
    vec![
        ("tool", format!("spinnoon {}", env!("CARGO_PKG_VERSION"))),
        ("command", command.to_string()),
        ("config_sha256", cfg.hash()),
        ("seed", cfg.seed.to_string()),
        ("normalization", NORMALIZATION.to_string()),
        ("epsilon_mapping", EPSILON_MAPPING.to_string()),
        ("epsilon_scope", EPSILON_SCOPE.to_string()),
        ("snr_convention", SNR_CONVENTION.to_string()),
        ("kappa", cfg.kappa.to_string()),
        ("exposure_mode", cfg.exposure.name().to_string()),
    ]
}

fn header_block(cfg: &RunConfig, command: &str, prefix: &str, suffix: &str) -> String {
    metadata(cfg, command)
        .into_iter()
        .map(|(k, v)| format!("{prefix}{k}: {v}{suffix}\n"))
        .collect()
}

/// Parses the `# key: value` lines at the top of an emitted CSV or report.
pub fn read_metadata(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Collects the files a command writes so they can be listed afterwards.
pub struct Emitter<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl<'a> Emitter<'a> {
    pub fn new(cfg: &'a RunConfig, command: &'a str) -> Result<Self> {
        let dir = cfg.out_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            cfg,
            command,
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut buf = header_block(self.cfg, self.command, "# ", "").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()
                .map_err(|e| CliError::io(self.dir.join(name), e))?;
        }
        self.write(name, &buf)
    }

    pub fn svg(&mut self, name: &str, body: &str) -> Result<()> {
        let mut text = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        text.push_str(&header_block(self.cfg, self.command, "<!-- ", " -->"));
        text.push_str(body);
        self.write(name, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut text = header_block(self.cfg, self.command, "# ", "");
        text.push_str(body);
        self.write(name, text.as_bytes())
    }
}

/// Reads an emitted CSV, skipping the metadata block.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader.records().collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Shortest round-trip form, in exponent notation outside `[1e-3, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.0,
            -0.0,
            1.0,
            3.13e-6,
            -1253.390359,
            2.5e9,
            1e-3,
            999_999.5,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x, "{}", num(x));
        }
        assert_eq!(num(3.13e-6), "3.13e-6");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn metadata_parses_back() {
        let cfg = RunConfig::default();
        let block = header_block(&cfg, "fig3", "# ", "");
        let meta = read_metadata(&format!("{block}a,b\n1,2\n"));
        assert_eq!(meta.len(), metadata(&cfg, "fig3").len());
        assert!(meta.contains(&("config_sha256".to_string(), cfg.hash())));
    }
}
