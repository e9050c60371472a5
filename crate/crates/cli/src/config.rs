//! Run configuration: a `key = value` file merged under command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::CliError;

/// Keys accepted in the `--config` file. Every key is optional; flags given
/// on the command line take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub alpha: Option<f64>,
    pub sketcher: Option<String>,
    pub walks: Option<usize>,
    pub exact: Option<bool>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub order: Option<String>,
    pub seed: Option<u64>,
    pub checkpoint_every: Option<f64>,
    pub workers: Option<usize>,
    pub max_nodes: Option<usize>,
    pub exponent: Option<f64>,
    pub directed: Option<bool>,
    pub train_frac: Option<f64>,
    pub op: Option<String>,
    pub c: Option<f64>,
    pub repeats: Option<usize>,
    pub k: Option<usize>,
    pub dims: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}

/// Flag value if given, else the file value, else the default.
pub(crate) fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`pick`] for string-valued file keys that need parsing.
pub(crate) fn pick_parsed<T: FromStr>(flag: Option<T>, file: Option<&str>, key: &str, default: T) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(s) => s.parse().map_err(|e| CliError::usage(format!("config key {key}: {e}"))),
        None => Ok(default),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NodeOrder {
    #[default]
    Random,
    Natural,
}

impl FromStr for NodeOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(NodeOrder::Random),
            "natural" => Ok(NodeOrder::Natural),
            other => Err(format!("unknown order {other:?} (expected random or natural)")),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
