//! Versioned JSON run configuration. Unknown keys are errors, not warnings:
//! a config that parses is a config whose every field took effect.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gradflow::error::{Error, Result};
use gradflow::euclidean::CatalogFunctional;
use gradflow::wasserstein1d::EnergySpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    Euclidean,
    Wasserstein1d,
}

impl std::fmt::Display for Carrier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Carrier::Euclidean => write!(f, "euclidean"),
            Carrier::Wasserstein1d => write!(f, "wasserstein1d"),
        }
    }
}

/// Functional selection: a named catalog entry (Euclidean carrier) or an
/// energy specification (quantile carrier).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    Catalog {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diag: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
    },
    Energy {
        spec: EnergySpec,
    },
}

impl FunctionalConfig {
    pub fn build_catalog(&self) -> Result<CatalogFunctional> {
        match self {
            FunctionalConfig::Catalog {
                name,
                diag,
                drift,
                eps,
            } => CatalogFunctional::by_name(name, diag.as_deref(), drift.as_deref(), *eps),
            FunctionalConfig::Energy { .. } => Err(Error::InvalidInput(
                "euclidean carrier needs a catalog functional".into(),
            )),
        }
    }

    pub fn energy_spec(&self) -> Result<EnergySpec> {
        match self {
            FunctionalConfig::Energy { spec } => {
                spec.validate()?;
                Ok(*spec)
            }
            FunctionalConfig::Catalog { .. } => Err(Error::InvalidInput(
                "wasserstein1d carrier needs an energy functional".into(),
            )),
        }
    }
}

/// Initial datum: a coordinate vector (Euclidean) or a named measure
/// (quantile carrier).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Vector { coords: Vec<f64> },
    Gaussian { mean: f64, var: f64 },
    Uniform { a: f64, b: f64 },
    Barenblatt { t0: f64 },
    Quantiles { values: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub carrier: Carrier,
    pub functional: FunctionalConfig,
    pub u0: InitialDatum,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub eta: f64,
    /// Quantile grid size (required for the wasserstein1d carrier).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Flow times at which density snapshots are written (quantile carrier).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_cells: Option<usize>,
    /// Support `[x_min, x_max]` for density snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_support: Option<(f64, f64)>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(format!(
                "T must be >= 0, got {}",
                self.t_final
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        match self.carrier {
            Carrier::Euclidean => {
                let f = self.functional.build_catalog()?;
                if !matches!(self.u0, InitialDatum::Vector { .. }) {
                    return Err(Error::InvalidInput(
                        "euclidean carrier needs u0 of kind 'vector'".into(),
                    ));
                }
                self.check_feasible(gradflow::euclidean::EuclideanFunctional::lambda(&f))?;
            }
            Carrier::Wasserstein1d => {
                let spec = self.functional.energy_spec()?;
                if self.m.map_or(true, |m| m < 2) {
                    return Err(Error::InvalidInput(
                        "wasserstein1d carrier needs a grid size m >= 2".into(),
                    ));
                }
                if matches!(self.u0, InitialDatum::Vector { .. }) {
                    return Err(Error::InvalidInput(
                        "wasserstein1d carrier needs a measure-valued u0".into(),
                    ));
                }
                self.check_feasible(spec.lambda())?;
            }
        }
        Ok(())
    }

    /// Scheme feasibility: `1 + tau*lambda > 0` (exact) or
    /// `eta - lambda < 1/(2 tau)` (relaxed).
    fn check_feasible(&self, lambda: f64) -> Result<()> {
        let params = gradflow::mms::RelaxedSchemeParams {
            eta: self.eta,
            ..Default::default()
        };
        params.check_feasible(self.tau, lambda)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.tau).round().max(0.0) as usize
    }
}
