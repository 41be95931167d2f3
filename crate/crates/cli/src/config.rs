//! Optional TOML configuration; command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub precision: Option<usize>,
    pub samples: Option<usize>,
    pub falsify_samples: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// Parameter values per corpus entry, e.g. `binomial = "1..64"` or `agp = [2, 3]`.
    #[serde(default)]
    pub sweep: BTreeMap<String, SweepSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SweepSpec {
    Range(String),
    List(Vec<i64>),
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<i64>> {
        match self {
            SweepSpec::List(v) => Ok(v.clone()),
            SweepSpec::Range(s) => parse_values(s),
        }
    }
}

/// `K`, `A..B` (inclusive) or a comma-separated mix of both.
pub fn parse_values(s: &str) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        match part.split_once("..") {
            Some((a, b)) => {
                let a: i64 = a.trim().parse().with_context(|| format!("bad range start in `{part}`"))?;
                let b: i64 = b.trim().parse().with_context(|| format!("bad range end in `{part}`"))?;
                if a > b {
                    bail!("empty range `{part}`");
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().with_context(|| format!("`{part}` is not an integer"))?),
        }
    }
    Ok(out)
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))
    }
}
