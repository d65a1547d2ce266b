use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

/// Environment variable that overrides the output directory of a config file.
pub const OUT_ENV: &str = "WIDTHLAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Widths,
    Comparison,
    Brendle,
    Varifold,
    Stability,
    Isoperimetric,
    #[serde(rename = "sweepout-1d")]
    Sweepout1d,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Widths,
        Suite::Comparison,
        Suite::Brendle,
        Suite::Varifold,
        Suite::Stability,
        Suite::Isoperimetric,
        Suite::Sweepout1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Widths => "widths",
            Suite::Comparison => "comparison",
            Suite::Brendle => "brendle",
            Suite::Varifold => "varifold",
            Suite::Stability => "stability",
            Suite::Isoperimetric => "isoperimetric",
            Suite::Sweepout1d => "sweepout-1d",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite `{s}`")))
    }
}

/// Parses `all` or a comma-separated list of suite names.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>, CliError> {
    if s.trim() == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    let mut out: Vec<Suite> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    /// Overrides each suite's primary resolution.
    pub resolution: Option<usize>,
    /// Weight in the boundary monotonicity ratio.
    pub gamma: f64,
    /// Multiplies every tolerance.
    pub tolerance_scale: f64,
    /// Random samples per `(n, k)` in the brendle suite.
    pub samples: usize,
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            seed: 42,
            out: PathBuf::from("reports"),
            resolution: None,
            gamma: 1.0,
            tolerance_scale: 1.0,
            samples: 100_000,
            parallel: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`")))
}

impl RunConfig {
    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_kv(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "suite" | "suites" => self.suites = parse_suites(value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "resolution" => self.resolution = Some(parse_value(key, value)?),
            "gamma" => self.gamma = parse_value(key, value)?,
            "tolerance_scale" => self.tolerance_scale = parse_value(key, value)?,
            "samples" => self.samples = parse_value(key, value)?,
            "parallel" => self.parallel = parse_value(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.suites.is_empty() {
            return Err(CliError::Config("no suite selected".into()));
        }
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return Err(CliError::Config(format!("tolerance_scale must be positive, got {}", self.tolerance_scale)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(CliError::Config(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.resolution == Some(0) {
            return Err(CliError::Config("resolution must be positive".into()));
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be positive".into()));
        }
        Ok(())
    }

    pub fn resolution_or(&self, default: usize) -> usize {
        self.resolution.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_config() {
        let cfg = RunConfig::from_kv("# run\nsuite = widths, brendle\nseed=7\ngamma = 0.5 # weight\n").unwrap();
        assert_eq!(cfg.suites, vec![Suite::Widths, Suite::Brendle]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.gamma, 0.5);
        assert_eq!(cfg.tolerance_scale, 1.0);
    }

    #[test]
    fn bad_configs() {
        for text in ["suite = nope", "seed = x", "tolerance_scale = 0", "colour = red", "just words", "resolution = 0"] {
            assert!(matches!(RunConfig::from_kv(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(parse_suites("all").unwrap().len(), 7);
    }
}
