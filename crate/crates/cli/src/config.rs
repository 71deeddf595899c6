//! Run configuration: a flat `key = value` file overlaid with command-line flags.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored, as is anything after a `#` on a value line. Keys:
//!
//! | key                | type                        | default                 |
//! |--------------------|-----------------------------|-------------------------|
//! | `input`            | path                        | required                |
//! | `output_dir`       | path                        | `out`                   |
//! | `p`                | integer ≥ 0                 | 2                       |
//! | `steps`            | integer ≥ 1                 | required                |
//! | `tau0`             | float > 0                   | 1e-4                    |
//! | `scale_s`          | float ≥ 1                   | 1.0                     |
//! | `tau_max`          | float ≥ tau0                | `tau0`                  |
//! | `fix_area`         | bool                        | false                   |
//! | `fix_volume`       | bool                        | false                   |
//! | `reg_mode`         | `off`/`linear`/`nonlinear`  | nonlinear               |
//! | `epsilon`          | float > 0                   | 1e-5                    |
//! | `recompute_angles` | bool                        | false                   |
//! | `quadrature_degree`| integer 1..=10              | 7                       |
//! | `newton_iters`     | integer ≥ 1                 | 2                       |
//! | `snapshot_every`   | integer (0 = final only)    | 0                       |
//! | `log_path`         | path                        | `<output_dir>/log.csv`  |
//!
//! Booleans accept `true/false`, `yes/no`, `on/off` and `1/0`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pwillmore_core::{FlowConfig, RegularizeConfig, RegularizeMode};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub p: u32,
    pub steps: usize,
    pub tau0: f64,
    pub scale_s: f64,
    pub tau_max: f64,
    pub fix_area: bool,
    pub fix_volume: bool,
    pub reg_mode: RegularizeMode,
    pub epsilon: f64,
    pub recompute_angles: bool,
    pub quadrature_degree: usize,
    pub newton_iters: usize,
    pub snapshot_every: usize,
    pub log_path: PathBuf,
}

impl RunConfig {
    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            p: self.p,
            fix_area: self.fix_area,
            fix_volume: self.fix_volume,
            tau0: self.tau0,
            scale_s: self.scale_s,
            tau_max: self.tau_max,
            newton_iters: self.newton_iters,
            quadrature_degree: self.quadrature_degree,
            ..FlowConfig::default()
        }
    }

    pub fn regularize(&self) -> RegularizeConfig {
        RegularizeConfig {
            epsilon: self.epsilon,
            mode: self.reg_mode,
            recompute_angles: self.recompute_angles,
            ..RegularizeConfig::default()
        }
    }
}

/// Partially specified configuration; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub p: Option<u32>,
    pub steps: Option<usize>,
    pub tau0: Option<f64>,
    pub scale_s: Option<f64>,
    pub tau_max: Option<f64>,
    pub fix_area: Option<bool>,
    pub fix_volume: Option<bool>,
    pub reg_mode: Option<RegularizeMode>,
    pub epsilon: Option<f64>,
    pub recompute_angles: Option<bool>,
    pub quadrature_degree: Option<usize>,
    pub newton_iters: Option<usize>,
    pub snapshot_every: Option<usize>,
    pub log_path: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        ConfigLayer { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigLayer {
    /// `self` with every field set in `top` replaced.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        let base = self;
        overlay!(
            base, top, input, output_dir, p, steps, tau0, scale_s, tau_max, fix_area, fix_volume, reg_mode,
            epsilon, recompute_angles, quadrature_degree, newton_iters, snapshot_every, log_path
        )
    }

    pub fn from_file(path: &Path) -> Result<ConfigLayer> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_config(&text)
    }

    /// Fills defaults and checks the result.
    pub fn resolve(self) -> Result<RunConfig> {
        let input = self.input.ok_or_else(|| CliError::Config("missing required key 'input'".into()))?;
        let steps = self.steps.ok_or_else(|| CliError::Config("missing required key 'steps'".into()))?;
        if steps == 0 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        let tau0 = self.tau0.unwrap_or(1e-4);
        let output_dir = self.output_dir.unwrap_or_else(|| PathBuf::from("out"));
        let cfg = RunConfig {
            log_path: self.log_path.unwrap_or_else(|| output_dir.join("log.csv")),
            input,
            output_dir,
            p: self.p.unwrap_or(2),
            steps,
            tau0,
            scale_s: self.scale_s.unwrap_or(1.0),
            tau_max: self.tau_max.unwrap_or(tau0),
            fix_area: self.fix_area.unwrap_or(false),
            fix_volume: self.fix_volume.unwrap_or(false),
            reg_mode: self.reg_mode.unwrap_or_default(),
            epsilon: self.epsilon.unwrap_or(1e-5),
            recompute_angles: self.recompute_angles.unwrap_or(false),
            quadrature_degree: self.quadrature_degree.unwrap_or(7),
            newton_iters: self.newton_iters.unwrap_or(2),
            snapshot_every: self.snapshot_every.unwrap_or(0),
        };
        cfg.flow().validate()?;
        cfg.regularize().validate()?;
        Ok(cfg)
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| CliError::ConfigLine { line, message: format!("invalid value '{raw}' for '{key}'") })
}

fn boolean(line: usize, key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::ConfigLine { line, message: format!("invalid boolean '{raw}' for '{key}'") }),
    }
}

pub fn parse_config(text: &str) -> Result<ConfigLayer> {
    let mut c = ConfigLayer::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content
            .split_once('=')
            .ok_or_else(|| CliError::ConfigLine { line, message: format!("expected 'key = value', got '{content}'") })?;
        let (key, val) = (key.trim(), val.trim());
        if val.is_empty() {
            return Err(CliError::ConfigLine { line, message: format!("empty value for '{key}'") });
        }
        match key {
            "input" => c.input = Some(val.into()),
            "output_dir" => c.output_dir = Some(val.into()),
            "p" => c.p = Some(value(line, key, val)?),
            "steps" => c.steps = Some(value(line, key, val)?),
            "tau0" => c.tau0 = Some(value(line, key, val)?),
            "scale_s" => c.scale_s = Some(value(line, key, val)?),
            "tau_max" => c.tau_max = Some(value(line, key, val)?),
            "fix_area" => c.fix_area = Some(boolean(line, key, val)?),
            "fix_volume" => c.fix_volume = Some(boolean(line, key, val)?),
            "reg_mode" => c.reg_mode = Some(value(line, key, val)?),
            "epsilon" => c.epsilon = Some(value(line, key, val)?),
            "recompute_angles" => c.recompute_angles = Some(boolean(line, key, val)?),
            "quadrature_degree" => c.quadrature_degree = Some(value(line, key, val)?),
            "newton_iters" => c.newton_iters = Some(value(line, key, val)?),
            "snapshot_every" => c.snapshot_every = Some(value(line, key, val)?),
            "log_path" => c.log_path = Some(val.into()),
            _ => return Err(CliError::ConfigLine { line, message: format!("unknown key '{key}'") }),
        }
    }
    Ok(c)
}
