//! Run configuration files.
//!
//! A config is a flat TOML table. Every key is optional:
//!
//! ```toml
//! n = 64                 # initial inserts
//! k = 8                  # rounds
//! mode = "ledger"        # or "exact"
//! algorithm = "two-pass" # or "multipass"
//! d = 1                  # w = 2d + 1
//! window = 1             # W
//! a = 10                 # T = 2^a * w (or 2^a * d with threshold_base = "d")
//! threshold_base = "w"
//! # threshold = 24       # explicit T, replaces a
//! rho = 8
//! # q = 3
//! m = 1.0
//! exact_cap = 100000
//! # many_roots_limit = 12.0
//! # small_children_limit = 8.0
//! audit = false
//! seed = 0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryConfig, Mode};
use crate::algorithms::AlgorithmKind;
use crate::rank::{ParamError, RankParams, ThresholdBase};
use crate::vm::DEFAULT_RHO;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid rank parameters: {0}")]
    Params(#[from] ParamError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
    pub algorithm: AlgorithmKind,
    pub d: u32,
    pub window: u32,
    pub a: u32,
    pub threshold_base: ThresholdBase,
    pub threshold: Option<u32>,
    pub rho: usize,
    pub q: Option<usize>,
    pub m: f64,
    pub exact_cap: usize,
    pub many_roots_limit: Option<f64>,
    pub small_children_limit: Option<f64>,
    pub audit: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adv = AdversaryConfig::default();
        RunConfig {
            n: adv.n,
            k: adv.k,
            mode: adv.mode,
            algorithm: adv.algorithm,
            d: 1,
            window: 1,
            a: 10,
            threshold_base: ThresholdBase::W,
            threshold: None,
            rho: DEFAULT_RHO,
            q: None,
            m: adv.m,
            exact_cap: adv.exact_cap,
            many_roots_limit: None,
            small_children_limit: None,
            audit: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }

    pub fn params(&self) -> Result<RankParams, ConfigError> {
        Ok(match self.threshold {
            Some(t) => RankParams::explicit(self.d, self.window, t)?,
            None => RankParams::from_exponent(self.d, self.window, self.a, self.threshold_base)?,
        })
    }

    /// Checks the whole configuration, rejecting `T < w`.
    pub fn validate(&self) -> Result<RankParams, ConfigError> {
        let params = self.params()?;
        if params.threshold < params.w {
            return Err(ConfigError::Invalid(format!(
                "threshold T = {} is below w = 2d+1 = {}; raise `a` or `threshold`, or lower `d`",
                params.threshold, params.w
            )));
        }
        if self.mode == Mode::Exact && self.n > 16 {
            return Err(ConfigError::Invalid(format!(
                "exact mode materializes every sequence; n = {} is too large (use n <= 16 or mode = \"ledger\")",
                self.n
            )));
        }
        self.adversary_unchecked(params)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(params)
    }

    pub fn to_adversary(&self) -> Result<AdversaryConfig, ConfigError> {
        let params = self.validate()?;
        Ok(self.adversary_unchecked(params))
    }

    fn adversary_unchecked(&self, params: RankParams) -> AdversaryConfig {
        AdversaryConfig {
            n: self.n,
            k: self.k,
            algorithm: self.algorithm,
            mode: self.mode,
            params,
            rho: self.rho,
            q: self.q,
            m: self.m,
            exact_cap: self.exact_cap,
            many_roots_limit: self.many_roots_limit,
            small_children_limit: self.small_children_limit,
            audit: self.audit,
            check_lemmas: true,
        }
    }
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(toml::from_str(s)?)
    }
}
