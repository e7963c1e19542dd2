use std::path::{Path, PathBuf};

use ouexec_core::montecarlo::{DEFAULT_PATHS, DEFAULT_STEPS};
use ouexec_core::strategy::DEFAULT_GRID_CELLS;
use ouexec_core::{MarketState, ModelParams, ParameterSet};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_LIST: [usize; 4] = [1, 10, 100, 1000];
pub const DEFAULT_Z_RANGE: [f64; 2] = [0.0, 10.0];
pub const DEFAULT_DELTA_LIST: [f64; 3] = [0.1, 0.01, 0.001];

/// Flat JSON run configuration: the eight model keys plus optional
/// command settings. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    #[serde(rename = "F")]
    pub fundamental_log: f64,
    pub t: f64,
    pub w: f64,
    pub phi: f64,
    pub s: f64,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub z_range: Option<[f64; 2]>,
    #[serde(default)]
    pub delta_list: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parameter_set(&self) -> ParameterSet {
        ParameterSet {
            alpha: self.alpha,
            beta: self.beta,
            sigma: self.sigma,
            fundamental_log: self.fundamental_log,
            horizon: self.t,
            w: self.w,
            phi: self.phi,
            s: self.s,
        }
    }
}

/// Command-line overrides, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub parameters: ParameterSet,
    pub params: ModelParams,
    pub state: MarketState,
    pub out: PathBuf,
    pub grid_points: usize,
    pub tol: f64,
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub n_list: Vec<usize>,
    pub z_range: [f64; 2],
    pub delta_list: Vec<f64>,
}

impl Settings {
    pub fn resolve(config: RunConfig, cli: Overrides) -> Result<Self, CliError> {
        let parameters = config.parameter_set();
        let (params, state) = parameters.split()?;
        let settings = Self {
            parameters,
            params,
            state,
            out: cli.out.or(config.out).unwrap_or_else(|| PathBuf::from("out")),
            grid_points: config.grid_points.unwrap_or(DEFAULT_GRID_CELLS),
            tol: cli.tol.or(config.tol).unwrap_or(DEFAULT_TOL),
            paths: cli.paths.or(config.paths).unwrap_or(DEFAULT_PATHS),
            steps: cli.steps.or(config.steps).unwrap_or(DEFAULT_STEPS),
            seed: cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            n_list: config.n_list.unwrap_or_else(|| DEFAULT_N_LIST.to_vec()),
            z_range: config.z_range.unwrap_or(DEFAULT_Z_RANGE),
            delta_list: config.delta_list.unwrap_or_else(|| DEFAULT_DELTA_LIST.to_vec()),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return bad(format!("tol must be > 0 (got {})", self.tol));
        }
        if self.grid_points == 0 || self.paths == 0 || self.steps == 0 {
            return bad("grid_points, paths and steps must be >= 1".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be a nonempty list of positive integers".into());
        }
        let [lo, hi] = self.z_range;
        if !(hi > lo) || !(hi > 0.0) {
            return bad(format!("z_range must satisfy max > min and max > 0 (got [{lo}, {hi}])"));
        }
        if self.delta_list.iter().any(|d| !(*d > 0.0)) {
            return bad("delta_list entries must be > 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"alpha":1,"beta":1,"sigma":0,"F":0,"t":1,"w":0,"phi":3,"s":2.718281828459045}"#;

    #[test]
    fn parses_flat_object() {
        let cfg: RunConfig = serde_json::from_str(BASE).unwrap();
        assert_eq!(cfg.phi, 3.0);
        let s = Settings::resolve(cfg, Overrides::default()).unwrap();
        assert_eq!(s.out, PathBuf::from("out"));
        assert_eq!(s.grid_points, 1000);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("\"w\":0", "\"w\":0,\"gamma\":2");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn flags_take_precedence() {
        let text = BASE.replace("\"w\":0", "\"w\":0,\"seed\":5,\"tol\":1e-9");
        let cfg: RunConfig = serde_json::from_str(&text).unwrap();
        let s = Settings::resolve(cfg, Overrides { seed: Some(9), ..Overrides::default() }).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.tol, 1e-9);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let cfg: RunConfig = serde_json::from_str(BASE).unwrap();
        assert!(Settings::resolve(cfg, Overrides { tol: Some(0.0), ..Overrides::default() }).is_err());
    }
}
