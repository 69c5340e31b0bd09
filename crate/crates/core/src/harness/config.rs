//! Experiment description, read from a versioned JSON document.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NetworkConfig;
use crate::simenv::{FadingParams, Layout, TopologyParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ssca,
    Sbf,
    Icbf,
    Zf,
    Mf,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ssca => "ssca",
            Algorithm::Sbf => "sbf",
            Algorithm::Icbf => "icbf",
            Algorithm::Zf => "zf",
            Algorithm::Mf => "mf",
        }
    }

    pub fn is_coordinated(self) -> bool {
        matches!(self, Algorithm::Ssca | Algorithm::Sbf | Algorithm::Icbf)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Network counts and algorithm tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    #[serde(default = "one")]
    pub power_budget: f64,
    #[serde(default)]
    pub user_weights: Option<Vec<f64>>,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_max_outer_iters")]
    pub max_outer_iters: usize,
    #[serde(default = "default_bisection_tol")]
    pub bisection_tol: f64,
    #[serde(default = "default_icbf_inner_iters")]
    pub icbf_inner_iters: usize,
    #[serde(default)]
    pub sbf_inner_sweeps: usize,
}

fn one() -> f64 {
    1.0
}
fn default_stop_tol() -> f64 {
    1e-2
}
fn default_max_outer_iters() -> usize {
    500
}
fn default_bisection_tol() -> f64 {
    1e-8
}
fn default_icbf_inner_iters() -> usize {
    3
}

impl NetworkSpec {
    pub fn new(num_bs: usize, users_per_cell: usize, antennas: usize) -> Self {
        Self {
            num_bs,
            users_per_cell,
            antennas,
            power_budget: 1.0,
            user_weights: None,
            stop_tol: default_stop_tol(),
            max_outer_iters: default_max_outer_iters(),
            bisection_tol: default_bisection_tol(),
            icbf_inner_iters: default_icbf_inner_iters(),
            sbf_inner_sweeps: 0,
        }
    }

    pub fn to_config(&self) -> NetworkConfig {
        let mut cfg = NetworkConfig::new(self.num_bs, self.users_per_cell, self.antennas);
        cfg.power_budget = vec![self.power_budget; self.num_bs];
        if let Some(w) = &self.user_weights {
            cfg.user_weights = w.clone();
        }
        cfg.stop_tol = self.stop_tol;
        cfg.max_outer_iters = self.max_outer_iters;
        cfg.bisection_tol = self.bisection_tol;
        cfg.icbf_inner_iters = self.icbf_inner_iters;
        cfg.sbf_inner_sweeps = self.sbf_inner_sweeps;
        cfg
    }
}

/// Where users are dropped and which grid surrounds the cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSpec {
    #[serde(default = "default_d_min")]
    pub d_min: f64,
    #[serde(default = "default_d_max")]
    pub d_max: f64,
    #[serde(default = "default_isd")]
    pub inter_site_distance: f64,
    #[serde(default)]
    pub layout: Layout,
}

fn default_d_min() -> f64 {
    200.0
}
fn default_d_max() -> f64 {
    1000.0
}
fn default_isd() -> f64 {
    2000.0
}

impl Default for PlacementSpec {
    fn default() -> Self {
        Self {
            d_min: default_d_min(),
            d_max: default_d_max(),
            inter_site_distance: default_isd(),
            layout: Layout::Hex,
        }
    }
}

/// Fading parameters without the SNR, which comes from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    #[serde(default = "default_ref_distance")]
    pub pathloss_ref_distance: f64,
    #[serde(default = "default_exponent")]
    pub pathloss_exponent: f64,
    #[serde(default = "default_shadowing")]
    pub shadowing_std_db: f64,
    #[serde(default = "one")]
    pub reference_power: f64,
    #[serde(default = "one")]
    pub interferer_power: f64,
}

fn default_ref_distance() -> f64 {
    200.0
}
fn default_exponent() -> f64 {
    3.5
}
fn default_shadowing() -> f64 {
    8.0
}

impl Default for FadingSpec {
    fn default() -> Self {
        let f = FadingParams::default();
        Self {
            pathloss_ref_distance: f.pathloss_ref_distance,
            pathloss_exponent: f.pathloss_exponent,
            shadowing_std_db: f.shadowing_std_db,
            reference_power: f.reference_power,
            interferer_power: f.interferer_power,
        }
    }
}

impl FadingSpec {
    pub fn at_snr(&self, snr_db: f64) -> FadingParams {
        FadingParams {
            pathloss_ref_distance: self.pathloss_ref_distance,
            pathloss_exponent: self.pathloss_exponent,
            shadowing_std_db: self.shadowing_std_db,
            snr_db,
            reference_power: self.reference_power,
            interferer_power: self.interferer_power,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub scenario: String,
    pub algorithms: Vec<Algorithm>,
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub network: NetworkSpec,
    #[serde(default)]
    pub fading: FadingSpec,
    #[serde(default)]
    pub placement: PlacementSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_trials() -> usize {
    50
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        location: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentSpec {
    pub fn new(
        scenario: &str,
        algorithms: Vec<Algorithm>,
        snr_grid_db: Vec<f64>,
        network: NetworkSpec,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            algorithms,
            snr_grid_db,
            trials: default_trials(),
            seed: 0,
            network,
            fading: FadingSpec::default(),
            placement: PlacementSpec::default(),
            output: None,
            format: OutputFormat::Csv,
        }
    }

    /// Parse and validate. Syntax and type errors report line, column and
    /// the offending field path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config {
                location: format!(
                    "line {}, column {}, field `{}`",
                    inner.line(),
                    inner.column(),
                    path
                ),
                message: inner.to_string(),
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn network_config(&self) -> NetworkConfig {
        self.network.to_config()
    }

    pub fn topology_params(&self) -> TopologyParams {
        TopologyParams {
            num_bs: self.network.num_bs,
            users_per_cell: self.network.users_per_cell,
            inter_site_distance: self.placement.inter_site_distance,
            d_min: self.placement.d_min,
            d_max: self.placement.d_max,
            layout: self.placement.layout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(
                "schema_version",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(config_error(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(config_error(
                    &format!("algorithms[{i}]"),
                    format!("`{a}` listed twice"),
                ));
            }
        }
        if self.snr_grid_db.is_empty() {
            return Err(config_error("snr_grid_db", "SNR grid must not be empty"));
        }
        if let Some(i) = self.snr_grid_db.iter().position(|s| !s.is_finite()) {
            return Err(config_error(
                &format!("snr_grid_db[{i}]"),
                "SNR must be finite",
            ));
        }
        if self.trials == 0 {
            return Err(config_error("trials", "trials must be >= 1"));
        }
        let cfg = self.network_config();
        cfg.validate()
            .map_err(|e| config_error("network", e.to_string()))?;
        if self.algorithms.contains(&Algorithm::Ssca) && cfg.users_per_cell != 1 {
            return Err(config_error(
                "network.users_per_cell",
                "ssca needs exactly one user per cell",
            ));
        }
        if self.algorithms.contains(&Algorithm::Zf) && cfg.users_per_cell > cfg.antennas {
            return Err(config_error(
                "network.users_per_cell",
                "zf needs users_per_cell <= antennas",
            ));
        }
        if cfg.max_outer_iters == 0 {
            return Err(config_error("network.max_outer_iters", "must be >= 1"));
        }
        self.topology_params()
            .validate()
            .map_err(|e| config_error("placement", e.to_string()))?;
        self.fading
            .at_snr(0.0)
            .validate()
            .map_err(|e| config_error("fading", e.to_string()))?;
        Ok(())
    }
}
