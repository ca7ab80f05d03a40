//! CSV files with a `#` manifest header, and the JSON-lines run summary.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use workreal_core::oscillator::{LEAK_BUDGET, THERMAL_TAIL_BUDGET};

use crate::config::Config;

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    /// Manifest lines (library version, config echo, truncation budgets,
    /// then `extra`) followed by the column header.
    pub fn new(config: &Config, extra: &[(&str, String)], columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# workreal {}", workreal_core::VERSION);
        for (k, v) in config.echo() {
            let _ = writeln!(text, "# {k} = {v}");
        }
        let _ = writeln!(text, "# thermal_tail_budget = {THERMAL_TAIL_BUDGET:e}");
        let _ = writeln!(text, "# leak_budget = {LEAK_BUDGET:e}");
        for (k, v) in extra {
            let _ = writeln!(text, "# {k} = {v}");
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, &self.text)?;
        Ok(path)
    }
}

pub fn append_summary(dir: &Path, record: &serde_json::Value) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("summary.jsonl");
    let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
    writeln!(f, "{record}")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -0.125, 1.0 / 3.0, std::f64::consts::TAU, 1e-300, -2.5e17, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.125), "-1.2500000000000000e-1");
    }
}
