//! Run configuration: a JSON file, command-line flags on top, then defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Bernoulli,
    Fixed,
}

/// A number in JSON may be written either bare or as a string such as `"1/3"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Literal {
    Number(serde_json::Number),
    Text(String),
}

impl From<Literal> for String {
    fn from(l: Literal) -> Self {
        match l {
            Literal::Number(n) => n.to_string(),
            Literal::Text(s) => s,
        }
    }
}

fn literal<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(Option::<Literal>::deserialize(d)?.map(String::from))
}

/// Every parameter any command accepts. Flags and file share this type;
/// unset fields stay `None` until [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with any of these settings; flags take precedence
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Maximum speed m
    #[arg(long = "m", alias = "max-speed")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,

    /// Lattice size L
    #[arg(long = "L", alias = "lattice-size")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub lattice_size: Option<usize>,

    /// Density, as a decimal or a fraction such as 1/3
    #[arg(long)]
    #[serde(
        default,
        deserialize_with = "literal",
        skip_serializing_if = "Option::is_none"
    )]
    pub rho: Option<String>,

    /// Number of cars for fixed-count initialisation
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cars: Option<usize>,

    /// Number of update steps; the word-step count n for `preimages`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,

    /// Density grid, `a:b:step` or a comma list
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,

    /// Comma-separated times for grid tabulation; `inf` is the steady state
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<String>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Init>,

    /// Also run the brute-force preimage oracle
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,

    /// Reduced verification budget
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quick: Option<bool>,

    /// Output file; standard output when absent
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// File values first, then flags, then defaults for the fields every
    /// command echoes.
    pub fn resolve(flags: &RunConfig) -> Result<Self, String> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        overlay!(
            cfg,
            flags,
            m,
            lattice_size,
            rho,
            cars,
            steps,
            seed,
            replicas,
            grid,
            times,
            mode,
            init,
            oracle,
            quick,
            out
        );
        cfg.m.get_or_insert(2);
        cfg.steps.get_or_insert(100);
        cfg.seed.get_or_insert(1);
        cfg.mode.get_or_insert(Mode::Float);
        cfg.init.get_or_insert(Init::Bernoulli);
        cfg.oracle.get_or_insert(false);
        cfg.quick.get_or_insert(false);
        cfg.replicas.get_or_insert(1);
        Ok(cfg)
    }

    /// One-line JSON echo used in output headers.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}
