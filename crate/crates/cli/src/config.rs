//! Settings from flags, a JSON config file, the environment and defaults, in that order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shiftlab_core::gibbs::WeightModel;
use shiftlab_core::metric::MetricParams;
use shiftlab_core::product::DEFAULT_CELL_BUDGET;
use shiftlab_core::verify::DEFAULT_SEED;

use crate::args::MetricArgs;
use crate::error::CliError;

pub const SEED_ENV: &str = "SHIFTLAB_SEED";

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub metric: Option<String>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub model: Option<String>,
    pub delta: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub eps: Option<f64>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("bad config {}: {e}", path.display())))
    }
}

/// The settings a command actually ran with; echoed into its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Effective {
    pub command: String,
    pub metric: String,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub seed: u64,
    pub budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

pub struct Resolver {
    pub file: FileConfig,
    pub seed_flag: Option<u64>,
}

impl Resolver {
    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.seed_flag.or(self.file.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::validation(format!("{SEED_ENV}='{v}' is not a u64"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    pub fn params(&self, m: &MetricArgs) -> Result<(MetricParams, String), CliError> {
        let metric = m
            .metric
            .clone()
            .or_else(|| self.file.metric.clone())
            .unwrap_or_else(|| "d1".into());
        let theta = m.theta.or(self.file.theta).unwrap_or(0.5);
        let params = match metric.as_str() {
            "d1" => MetricParams::d1(theta)?,
            "d2" => MetricParams::d2(theta, m.alpha.or(self.file.alpha).unwrap_or(1.0))?,
            other => {
                return Err(CliError::validation(format!("unknown metric '{other}', expected d1 or d2")))
            }
        };
        Ok((params, metric))
    }

    pub fn model(&self, flag: &Option<String>) -> Result<(WeightModel, String), CliError> {
        let name = flag
            .clone()
            .or_else(|| self.file.model.clone())
            .unwrap_or_else(|| "geometric".into());
        Ok((name.parse()?, name))
    }

    pub fn delta(&self, flag: Option<f64>) -> Result<f64, CliError> {
        flag.or(self.file.delta)
            .ok_or_else(|| CliError::validation("--delta is required"))
    }

    pub fn budget(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.budget).unwrap_or(DEFAULT_CELL_BUDGET)
    }

    pub fn trials(&self, flag: Option<u64>, default: u64) -> u64 {
        flag.or(self.file.trials).unwrap_or(default)
    }

    pub fn grid(&self, flag: &Option<String>) -> Result<Vec<f64>, CliError> {
        match flag {
            Some(s) => parse_list(s),
            None => Ok(self.file.grid.clone().unwrap_or_default()),
        }
    }

    pub fn effective(&self, command: &str, params: &MetricParams, metric: &str) -> Result<Effective, CliError> {
        Ok(Effective {
            command: command.to_string(),
            metric: metric.to_string(),
            theta: params.theta(),
            alpha: params.alpha(),
            model: None,
            delta: None,
            grid: None,
            trials: None,
            seed: self.seed()?,
            budget: DEFAULT_CELL_BUDGET,
            eps: None,
        })
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::validation(format!("cannot parse '{t}' in list '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list::<u64>("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<u64>("1,x").is_err());
        assert!(parse_list::<f64>("").unwrap().is_empty());
    }

    #[test]
    fn flags_beat_file() {
        let r = Resolver {
            file: FileConfig {
                seed: Some(3),
                theta: Some(0.3),
                ..Default::default()
            },
            seed_flag: Some(9),
        };
        assert_eq!(r.seed().unwrap(), 9);
        let (p, _) = r.params(&MetricArgs::default()).unwrap();
        assert_eq!(p.theta(), 0.3);
        let (p, _) = r
            .params(&MetricArgs {
                theta: Some(0.6),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(p.theta(), 0.6);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"thetta": 0.5}"#).is_err());
    }
}
