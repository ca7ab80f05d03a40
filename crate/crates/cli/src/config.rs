//! `key = value` run configuration. A config file gives the canonical
//! settings; command-line flags override individual keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use workreal_core::entropy::LogBase;
use workreal_core::two_level::TlsSpectra;
use workreal_core::WorkView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    TlsTheta,
    SqueezeGrid,
    SqueezeBeta,
    JarzynskiCheck,
    McCrosscheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::TlsTheta => "tls-theta",
            Experiment::SqueezeGrid => "squeeze-grid",
            Experiment::SqueezeBeta => "squeeze-beta",
            Experiment::JarzynskiCheck => "jarzynski-check",
            Experiment::McCrosscheck => "mc-crosscheck",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Experiment::TlsTheta,
            Experiment::SqueezeGrid,
            Experiment::SqueezeBeta,
            Experiment::JarzynskiCheck,
            Experiment::McCrosscheck,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Some(Origin::File { path, line }) => write!(f, "{}:{line}: ", path.display())?,
            Some(Origin::Flag) => write!(f, "--{}: ", self.field.replace('_', "-"))?,
            None => {}
        }
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(origin: Option<&Origin>, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin: origin.cloned(),
        field: field.to_string(),
        message: message.into(),
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "out",
    "beta",
    "n_max",
    "seed",
    "grid_spec",
    "entropy_base",
    "degeneracy",
    "threads",
    "theta",
    "samples",
    "draws",
    "spectra",
];

/// Raw settings in key order, each remembering its origin.
#[derive(Debug, Clone, Default)]
pub struct RawSettings {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawSettings {
    pub fn parse_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: None,
            field: "config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse_str(&text, path)
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut out = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: i + 1,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(Some(&origin), line, "expected `key = value`"));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(err(
                    Some(&origin),
                    &key,
                    format!("unknown key (known: {})", KEYS.join(", ")),
                ));
            }
            if let Some((_, Origin::File { line, .. })) = out.entries.get(&key) {
                return Err(err(Some(&origin), &key, format!("already set on line {line}")));
            }
            out.entries.insert(key, (value.trim().to_string(), origin));
        }
        Ok(out)
    }

    /// Flag values replace file values.
    pub fn set_flag(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.entries.insert(key.to_string(), (v, Origin::Flag));
        }
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, origin)) => parse(v).map(Some).map_err(|m| err(Some(origin), key, m)),
        }
    }

    fn origin(&self, key: &str) -> Option<&Origin> {
        self.entries.get(key).map(|(_, o)| o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `lo:hi:n`, `n` evenly spaced points with both endpoints.
    Linspace {
        lo: f64,
        hi: f64,
        n: usize,
    },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let number = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{}` is not a finite number", t.trim()))
        };
        let spec = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [lo, hi, n] = parts[..] else {
                return Err("expected `lo:hi:n` or a comma-separated list".into());
            };
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a point count", n.trim()))?;
            let (lo, hi) = (number(lo)?, number(hi)?);
            if n == 0 || (n == 1 && lo != hi) || hi < lo {
                return Err("need hi >= lo and n >= 2 (or n = 1 with lo = hi)".into());
            }
            GridSpec::Linspace { lo, hi, n }
        } else {
            let values = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err("grid is empty".into());
            }
            GridSpec::List(values)
        };
        Ok(spec)
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::Linspace { lo, n: 1, .. } => vec![*lo],
            GridSpec::Linspace { lo, hi, n } => (0..*n).map(|i| lo + (hi - lo) * i as f64 / (*n - 1) as f64).collect(),
            GridSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Linspace { lo, hi, n } => write!(f, "{lo}:{hi}:{n}"),
            GridSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub out: PathBuf,
    pub beta: Option<f64>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<GridSpec>,
    pub entropy_base: LogBase,
    pub degeneracy: WorkView,
    pub threads: Option<usize>,
    pub theta: Option<f64>,
    pub samples: Option<u64>,
    pub draws: Option<usize>,
    pub spectra: TlsSpectra,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("expected a finite positive number, got `{s}`")),
    }
}

fn finite_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn positive_int<T: std::str::FromStr + PartialOrd + Default>(s: &str) -> Result<T, String> {
    match s.parse::<T>() {
        Ok(x) if x > T::default() => Ok(x),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

fn parse_base(s: &str) -> Result<LogBase, String> {
    match s {
        "e" => Ok(LogBase::E),
        "2" => Ok(LogBase::Two),
        _ => Err(format!("expected `e` or `2`, got `{s}`")),
    }
}

fn parse_view(s: &str) -> Result<WorkView, String> {
    match s {
        "fine" => Ok(WorkView::FineGrained),
        "grouped" => Ok(WorkView::Grouped),
        _ => Err(format!("expected `fine` or `grouped`, got `{s}`")),
    }
}

fn parse_spectra(s: &str) -> Result<TlsSpectra, String> {
    match s {
        "equal" => Ok(TlsSpectra::Equal),
        "incommensurate" => Ok(TlsSpectra::Incommensurate),
        _ => Err(format!("expected `equal` or `incommensurate`, got `{s}`")),
    }
}

impl Config {
    pub fn resolve(experiment: Experiment, raw: &RawSettings) -> Result<Self, ConfigError> {
        if let Some(named) = raw.get("experiment", |s| {
            Experiment::parse(s).ok_or(format!("unknown experiment `{s}`"))
        })? {
            if named != experiment {
                return Err(err(
                    raw.origin("experiment"),
                    "experiment",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        named.name(),
                        experiment.name()
                    ),
                ));
            }
        }
        let config = Config {
            experiment,
            out: raw
                .get("out", |s| Ok(PathBuf::from(s)))?
                .unwrap_or_else(|| PathBuf::from("out")),
            beta: raw.get("beta", positive_f64)?,
            n_max: raw.get("n_max", positive_int::<usize>)?,
            seed: raw.get("seed", |s| {
                s.parse::<u64>()
                    .map_err(|_| format!("expected an unsigned integer, got `{s}`"))
            })?,
            grid: raw.get("grid_spec", GridSpec::parse)?,
            entropy_base: raw.get("entropy_base", parse_base)?.unwrap_or_default(),
            degeneracy: raw.get("degeneracy", parse_view)?.unwrap_or(WorkView::FineGrained),
            threads: raw.get("threads", positive_int::<usize>)?,
            theta: raw.get("theta", finite_f64)?,
            samples: raw.get("samples", positive_int::<u64>)?,
            draws: raw.get("draws", positive_int::<usize>)?,
            spectra: raw.get("spectra", parse_spectra)?.unwrap_or_default(),
        };
        config.validate(raw)?;
        Ok(config)
    }

    fn validate(&self, raw: &RawSettings) -> Result<(), ConfigError> {
        let sampling = matches!(self.experiment, Experiment::McCrosscheck | Experiment::JarzynskiCheck);
        if sampling && self.seed.is_none() {
            return Err(err(
                None,
                "seed",
                format!("`{}` draws random numbers and needs a seed", self.experiment.name()),
            ));
        }
        if let Some(grid) = &self.grid {
            let points = grid.points();
            let squeeze = matches!(self.experiment, Experiment::SqueezeGrid | Experiment::JarzynskiCheck);
            if squeeze && points.iter().any(|&r| r < 0.0) {
                return Err(err(raw.origin("grid_spec"), "grid_spec", "squeeze values must be >= 0"));
            }
            if self.experiment == Experiment::SqueezeBeta && points.iter().any(|&b| b <= 0.0) {
                return Err(err(
                    raw.origin("grid_spec"),
                    "grid_spec",
                    "inverse temperatures must be > 0",
                ));
            }
        }
        Ok(())
    }

    /// Settings that determine the output, in a fixed order. Thread count
    /// and output directory are left out because they do not change results.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let base = match self.entropy_base {
            LogBase::E => "e",
            LogBase::Two => "2",
        };
        let view = match self.degeneracy {
            WorkView::FineGrained => "fine",
            WorkView::Grouped => "grouped",
        };
        let spectra = match self.spectra {
            TlsSpectra::Equal => "equal",
            TlsSpectra::Incommensurate => "incommensurate",
        };
        let opt = |v: Option<String>| v.unwrap_or_else(|| "default".to_string());
        vec![
            ("experiment", self.experiment.name().to_string()),
            ("beta", opt(self.beta.map(|b| b.to_string()))),
            ("n_max", opt(self.n_max.map(|n| n.to_string()))),
            ("seed", opt(self.seed.map(|s| s.to_string()))),
            ("grid_spec", opt(self.grid.as_ref().map(|g| g.to_string()))),
            ("entropy_base", base.to_string()),
            ("degeneracy", view.to_string()),
            ("theta", opt(self.theta.map(|t| t.to_string()))),
            ("samples", opt(self.samples.map(|s| s.to_string()))),
            ("draws", opt(self.draws.map(|d| d.to_string()))),
            ("spectra", spectra.to_string()),
        ]
    }
}
