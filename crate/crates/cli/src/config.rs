//! Config files are TOML. Every table rejects unknown keys, and fields left
//! out of a file can be supplied by flags.

use std::path::Path;

use cpa_auction::hjb::{GridSpec, HjbConfig};
use cpa_auction::{PriceToBeat, ValueDistribution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(path.display().to_string(), format!("cannot read config: {e}")))?;
    toml::from_str(&text).map_err(|e| {
        let key = unknown_or_bad_key(e.message()).unwrap_or_else(|| path.display().to_string());
        CliError::config(key, e.message().trim().to_string())
    })
}

fn unknown_or_bad_key(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    path.map_or_else(|| Ok(T::default()), load)
}

/// Counts such as `1000000`, `1e7` or `2.5e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

pub fn require<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::config(key, "missing; set it in the config file or by flag"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    Power,
    Exponential,
    LogNormal,
}

/// Distribution given by flags.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct DistArgs {
    /// Value distribution family.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Power-law exponent, `F(v) = v^a`.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl DistArgs {
    pub fn build(&self) -> CliResult<Option<ValueDistribution>> {
        let Some(family) = self.family else {
            return Ok(None);
        };
        let d = match family {
            Family::Uniform => ValueDistribution::uniform(self.lo.unwrap_or(0.0), self.hi.unwrap_or(1.0))?,
            Family::Power => ValueDistribution::power(require(self.a, "a")?)?,
            Family::Exponential => ValueDistribution::exponential(self.rate.unwrap_or(1.0))?,
            Family::LogNormal => ValueDistribution::log_normal(self.mu.unwrap_or(0.0), require(self.sigma, "sigma")?)?,
        };
        Ok(Some(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaFile {
    pub values: Option<ValueDistribution>,
    pub n: Option<Vec<usize>>,
    pub method: Option<GammaMethod>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaConfig {
    pub values: ValueDistribution,
    pub n: Vec<usize>,
    pub method: GammaMethod,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestReplyFile {
    pub values: Option<ValueDistribution>,
    pub price_to_beat: Option<PriceToBeat>,
    pub target_cpa: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BestReplyConfig {
    pub values: ValueDistribution,
    pub price_to_beat: PriceToBeat,
    pub target_cpa: f64,
}

/// Shared by `equilibrium` and `revenue`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub values: Option<ValueDistribution>,
    pub n: Option<usize>,
    pub target_cpa: Option<f64>,
    pub kappa: Option<f64>,
    pub auctions: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumConfig {
    pub values: ValueDistribution,
    pub n: usize,
    pub target_cpa: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RevenueConfig {
    pub values: ValueDistribution,
    pub n: usize,
    pub target_cpa: f64,
    pub kappa: f64,
    /// Zero skips the simulation.
    pub auctions: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReserveSweepFile {
    pub values: Option<ValueDistribution>,
    pub n: Option<usize>,
    pub target_cpa: Option<f64>,
    pub kappa: Option<f64>,
    pub reserves: Option<Vec<f64>>,
    pub multipliers: Option<GridSpec>,
    pub auctions: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReserveSweepConfig {
    pub values: ValueDistribution,
    pub n: usize,
    pub target_cpa: f64,
    pub kappa: f64,
    pub reserves: Vec<f64>,
    pub multipliers: GridSpec,
    pub auctions: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjbFile {
    pub target_cpa: Option<f64>,
    pub price_exponent: Option<f64>,
    pub horizon: Option<f64>,
    pub x_grid: Option<GridSpec>,
    /// Left out: the coarsest stable time grid.
    pub t_steps: Option<usize>,
    pub alpha_grid: Option<GridSpec>,
    pub penalty_slope: Option<f64>,
    pub noise_on: Option<bool>,
    pub noise_scale: Option<f64>,
}

impl HjbFile {
    pub fn resolve(self) -> HjbConfig {
        let d = HjbConfig::default();
        let mut cfg = HjbConfig {
            target_cpa: self.target_cpa.unwrap_or(d.target_cpa),
            price_exponent: self.price_exponent.unwrap_or(d.price_exponent),
            horizon: self.horizon.unwrap_or(d.horizon),
            x_grid: self.x_grid.unwrap_or(d.x_grid),
            t_steps: 1,
            alpha_grid: self.alpha_grid.unwrap_or(d.alpha_grid),
            penalty_slope: self.penalty_slope.unwrap_or(d.penalty_slope),
            noise_on: self.noise_on.unwrap_or(d.noise_on),
            noise_scale: self.noise_scale.unwrap_or(d.noise_scale),
        };
        cfg.t_steps = match self.t_steps {
            Some(t) => t,
            None if cfg.validate().is_ok() => cfg.min_stable_t_steps(),
            None => d.t_steps,
        };
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("2.5e2"), Ok(250));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("many").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = toml::from_str::<GammaFile>("samplez = 3").unwrap_err();
        assert_eq!(unknown_or_bad_key(err.message()).as_deref(), Some("samplez"));
    }

    #[test]
    fn hjb_defaults_pick_a_stable_time_grid() {
        let cfg = HjbFile {
            x_grid: Some(GridSpec::new(-1.0, 1.0, 400)),
            ..HjbFile::default()
        }
        .resolve();
        assert!(cfg.check_cfl().is_ok());
        assert_eq!(cfg.t_steps, cfg.min_stable_t_steps());
    }
}
