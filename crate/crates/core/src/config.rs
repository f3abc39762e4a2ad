//! Scenario files (TOML).
//!
//! ```toml
//! seed = 42
//! lambda_hat = -1.0
//! ladder = [100, 400, 1600]
//! horizon = 10.0
//!
//! [rates]
//! kind = "pools"
//! pools = [{ a = 0.2, b = 1.0 }, { a = 0.8, b = 2.0 }]
//!
//! [arrival]
//! family = "exponential"
//! ```
//!
//! Everything except `[rates]` has a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ClassPartition, ConcentrationConfig};
use crate::error::{Error, Result};
use crate::sampling::check_beta_r;
use crate::scenario::{ArrivalLaw, DiscreteRateLaw, PoolSpec};
use crate::sim::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateSource {
    /// Deterministic pools of servers.
    Pools(PoolSpec),
    /// Rates drawn i.i.d. from a discrete law (random environment).
    Iid(DiscreteRateLaw),
}

impl RateSource {
    pub fn mu_star(&self) -> f64 {
        match self {
            RateSource::Pools(p) => p.mu_star(),
            RateSource::Iid(l) => l.mu_star(),
        }
    }

    /// Spread of the base rates carried with positive mass.
    pub fn spread(&self) -> f64 {
        let rates: Vec<f64> = match self {
            RateSource::Pools(p) => p.pools.iter().filter(|q| q.a > 0.0).map(|q| q.b).collect(),
            RateSource::Iid(l) => l.support.iter().filter(|s| s.1 > 0.0).map(|s| s.0).collect(),
        };
        let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
        if rates.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSettings {
    #[serde(default = "SdeSettings::default_dt")]
    pub dt: f64,
    #[serde(default = "SdeSettings::default_samples")]
    pub samples: usize,
}

impl SdeSettings {
    fn default_dt() -> f64 {
        1e-3
    }

    fn default_samples() -> usize {
        20_000
    }
}

impl Default for SdeSettings {
    fn default() -> Self {
        Self {
            dt: Self::default_dt(),
            samples: Self::default_samples(),
        }
    }
}

/// Error text without the variant prefix, for violation lists.
fn bare(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Argument(m) => m,
        other => other.to_string(),
    }
}

fn default_seed() -> u64 {
    1
}
fn default_ladder() -> Vec<usize> {
    vec![100, 400, 1600]
}
fn default_beta_r() -> f64 {
    0.6
}
fn default_horizon() -> f64 {
    10.0
}
fn default_reps() -> usize {
    200
}
fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub rates: RateSource,
    #[serde(default = "ArrivalLaw::default")]
    pub arrival: ArrivalLaw,
    #[serde(default)]
    pub lambda_hat: f64,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    /// Sampling exponent: `r = floor(n^beta_r)` servers are sampled.
    #[serde(default = "default_beta_r")]
    pub beta_r: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Time of the convergence marginal; defaults to the horizon.
    #[serde(default)]
    pub t_probe: Option<f64>,
    /// Upper limit of the idle-metric supremum; defaults to the horizon.
    #[serde(default)]
    pub t_bar: Option<f64>,
    /// Scaled initial condition: `X(0) = n + round(sqrt(n) xi0)`.
    #[serde(default)]
    pub xi0: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Size at which the second-order rate term is measured; defaults to
    /// the largest ladder entry.
    #[serde(default)]
    pub n_ref: Option<usize>,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub partition: Option<ClassPartition>,
    #[serde(default)]
    pub concentration: Option<ConcentrationConfig>,
    #[serde(default)]
    pub sde: SdeSettings,
    /// Grid step for thinned path exports.
    #[serde(default)]
    pub thin_grid: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str(&src)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn t_probe(&self) -> f64 {
        self.t_probe.unwrap_or(self.horizon)
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar.unwrap_or(self.horizon)
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
            .or_else(|| self.ladder.iter().copied().max())
            .unwrap_or(1)
    }

    pub fn mu_star(&self) -> f64 {
        self.rates.mu_star()
    }

    /// The configured partition or the default for this rate source.
    pub fn partition(&self) -> ClassPartition {
        self.partition
            .unwrap_or_else(|| ClassPartition::default_for(self.mu_star(), self.rates.spread()))
    }

    /// Every problem with the configuration, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        match &self.rates {
            RateSource::Pools(p) => v.extend(p.violations()),
            RateSource::Iid(l) => {
                if let Err(e) = l.validate() {
                    v.push(bare(e));
                }
            }
        }
        if let Err(e) = self.arrival.validate() {
            v.push(bare(e));
        }
        if let Err(e) = check_beta_r(self.beta_r) {
            v.push(bare(e));
        }
        if !self.lambda_hat.is_finite() {
            v.push(format!("lambda_hat must be finite, got {}", self.lambda_hat));
        }
        if !self.xi0.is_finite() {
            v.push(format!("xi0 must be finite, got {}", self.xi0));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if let Some(t) = self.t_probe {
            if !(0.0..=self.horizon).contains(&t) {
                v.push(format!("t_probe = {t} must lie in [0, horizon = {}]", self.horizon));
            }
        }
        if let Some(t) = self.t_bar {
            if !(t >= 0.0) {
                v.push(format!("t_bar must be >= 0, got {t}"));
            }
        }
        if self.ladder.is_empty() {
            v.push("ladder must list at least one n".into());
        }
        if self.ladder.contains(&0) {
            v.push("ladder entries must be positive".into());
        }
        if self.reps == 0 {
            v.push("reps must be >= 1".into());
        }
        if self.n_ref == Some(0) {
            v.push("n_ref must be positive".into());
        }
        if self.policies.is_empty() {
            v.push("policies must list at least one policy".into());
        }
        if let Some(p) = &self.partition {
            if let Err(e) = p.validate(self.mu_star()) {
                v.push(bare(e));
            }
        }
        if let Some(l) = &self.concentration {
            v.extend(l.violations());
        }
        if !(self.sde.dt > 0.0 && self.sde.dt <= self.horizon) {
            v.push(format!("sde.dt must lie in (0, horizon], got {}", self.sde.dt));
        }
        if self.sde.samples == 0 {
            v.push("sde.samples must be >= 1".into());
        }
        if let Some(g) = self.thin_grid {
            if !(g > 0.0) {
                v.push(format!("thin_grid must be positive, got {g}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }
}
