//! Flat key=value run configuration: model constants, grid geometry, and
//! solver switches in one file, with `#` comments and blank lines allowed.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{ModelParams, ValueTransform};
use crate::solver::{DirichletData, SolverConfig, YClosure};
use crate::stencil::Scheme;
use std::collections::BTreeMap;

/// Parsed configuration before grid construction.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub r1: f64,
    pub l2: f64,
    pub r2: f64,
    pub h: f64,
    pub parabolic_ratio: f64,
    pub scheme: Scheme,
    pub smoothing: Option<bool>,
    pub dirichlet: DirichletData,
    pub y_closure: YClosure,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            r1: 4.0,
            l2: 2.0,
            r2: 5.2,
            h: 0.1,
            parabolic_ratio: 0.4,
            scheme: Scheme::Hoc,
            smoothing: None,
            dirichlet: DirichletData::Literal,
            y_closure: YClosure::Extrap5,
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let num = |key: &str, val: &str| -> Result<f64> {
            val.parse::<f64>()
                .map_err(|_| Error::Config(format!("key {key}: `{val}` is not a number")))
        };
        for (key, value) in &map {
            match key.as_str() {
                "r" => cfg.params.r = num(key, value)?,
                "kappa" => cfg.params.kappa = num(key, value)?,
                "theta" => cfg.params.theta = num(key, value)?,
                "vol_of_vol" => cfg.params.vol_of_vol = num(key, value)?,
                "rho" => cfg.params.rho = num(key, value)?,
                "lambda" => cfg.params.lambda = num(key, value)?,
                "jump_mean" => cfg.params.jump_mean = num(key, value)?,
                "jump_std" => cfg.params.jump_std = num(key, value)?,
                "strike" => cfg.params.strike = num(key, value)?,
                "maturity" => cfg.params.maturity = num(key, value)?,
                "R1" => cfg.r1 = num(key, value)?,
                "L2" => cfg.l2 = num(key, value)?,
                "R2" => cfg.r2 = num(key, value)?,
                "h" => cfg.h = num(key, value)?,
                "parabolic_ratio" => cfg.parabolic_ratio = num(key, value)?,
                "scheme" => cfg.scheme = parse_scheme(value)?,
                "smoothing" => {
                    cfg.smoothing = Some(match value.as_str() {
                        "on" | "true" => true,
                        "off" | "false" => false,
                        other => {
                            return Err(Error::Config(format!(
                                "key smoothing: expected on|off, got `{other}`"
                            )))
                        }
                    })
                }
                "dirichlet" => {
                    cfg.dirichlet = match value.as_str() {
                        "paper" | "literal" => DirichletData::Literal,
                        "consistent" => DirichletData::Consistent,
                        other => {
                            return Err(Error::Config(format!(
                                "key dirichlet: expected paper|consistent, got `{other}`"
                            )))
                        }
                    }
                }
                "transform" => cfg.params.transform = parse_transform(value)?,
                "y_closure" => {
                    cfg.y_closure = match value.as_str() {
                        "extrap4" => YClosure::Extrap4,
                        "extrap5" => YClosure::Extrap5,
                        other => {
                            return Err(Error::Config(format!(
                                "key y_closure: expected extrap4|extrap5, got `{other}`"
                            )))
                        }
                    }
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    /// Reads and parses a config file.
    pub fn from_file(path: &std::path::Path) -> Result<RunConfig> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds the grid for mesh width `h` (falling back to the configured one).
    pub fn build_grid(&self, h: Option<f64>, ratio: Option<f64>) -> Result<Grid2D> {
        Grid2D::build(
            self.r1,
            self.l2,
            self.r2,
            h.unwrap_or(self.h),
            ratio.unwrap_or(self.parabolic_ratio),
            self.params.maturity,
        )
    }

    /// Assembles the full solver configuration.
    pub fn solver_config(&self, h: Option<f64>, ratio: Option<f64>) -> Result<SolverConfig> {
        let grid = self.build_grid(h, ratio)?;
        let mut sc = SolverConfig::new(grid, self.params, self.scheme);
        if let Some(s) = self.smoothing {
            sc.smoothing = s;
        }
        sc.dirichlet = self.dirichlet;
        sc.y_closure = self.y_closure;
        Ok(sc)
    }
}

/// Parses the scheme token used by the config file and the CLI.
pub fn parse_scheme(value: &str) -> Result<Scheme> {
    match value {
        "hoc" => Ok(Scheme::Hoc),
        "fd2" => Ok(Scheme::SecondOrder),
        other => Err(Error::Config(format!("expected scheme hoc|fd2, got `{other}`"))),
    }
}

/// Parses the value-transform token used by the config file and the CLI.
pub fn parse_transform(value: &str) -> Result<ValueTransform> {
    match value {
        "consistent" => Ok(ValueTransform::Consistent),
        "paper-literal" => Ok(ValueTransform::Literal),
        other => Err(Error::Config(format!(
            "expected transform consistent|paper-literal, got `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = "\
# model
r = 0.03
kappa=1.5
theta = 0.02
vol_of_vol = 0.25
rho = -0.7
lambda = 0.1
jump_mean = -0.4
jump_std = 0.3
strike = 90
maturity = 1.0

# grid
R1 = 4
L2 = 0.1
R2 = 3.3
h = 0.2
parabolic_ratio = 0.5
scheme = fd2
smoothing = off
dirichlet = consistent
transform = paper-literal
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.params.r, 0.03);
        assert_eq!(cfg.params.strike, 90.0);
        assert_eq!(cfg.scheme, Scheme::SecondOrder);
        assert_eq!(cfg.smoothing, Some(false));
        assert_eq!(cfg.dirichlet, DirichletData::Consistent);
        assert_eq!(cfg.params.transform, crate::model::ValueTransform::Literal);
        let grid = cfg.build_grid(None, None).unwrap();
        assert_eq!(grid.n, 20);
        assert!(cfg.params.validate().is_ok());
    }

    #[test]
    fn defaults_used_for_missing_keys() {
        let cfg = RunConfig::parse("h = 0.4\n").unwrap();
        assert_eq!(cfg.params.strike, 100.0);
        assert_eq!(cfg.h, 0.4);
        assert_eq!(cfg.scheme, Scheme::Hoc);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("unknown_key = 1\n").is_err());
        assert!(RunConfig::parse("r : 0.05\n").is_err());
        assert!(RunConfig::parse("r = five\n").is_err());
        assert!(RunConfig::parse("scheme = spectral\n").is_err());
        assert!(RunConfig::parse("smoothing = maybe\n").is_err());
    }

    #[test]
    fn cli_overrides_take_precedence() {
        let cfg = RunConfig::parse("h = 0.4\nparabolic_ratio = 0.8\n").unwrap();
        let grid = cfg.build_grid(Some(0.1), Some(0.4)).unwrap();
        assert_eq!(grid.n, 40);
        assert!(grid.parabolic_ratio <= 0.4 + 1e-12);
    }

    #[test]
    fn solver_config_scheme_defaults() {
        let cfg = RunConfig::parse("scheme = fd2\n").unwrap();
        let sc = cfg.solver_config(Some(0.4), None).unwrap();
        assert!(!sc.smoothing, "baseline does not mollify by default");
        let cfg = RunConfig::parse("scheme = fd2\nsmoothing = on\n").unwrap();
        assert!(cfg.solver_config(Some(0.4), None).unwrap().smoothing);
    }
}
