//! TOML run configuration.

use std::path::{Path, PathBuf};

use kou_exit::{KillRate, KouModel, SimConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    kill: RawKill,
    #[serde(default)]
    interval: Option<RawInterval>,
    #[serde(default)]
    simulation: Option<RawSimulation>,
    #[serde(default)]
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    a: f64,
    sigma2: Option<f64>,
    sigma: Option<f64>,
    lambda: f64,
    p: f64,
    q: Option<f64>,
    c: f64,
    b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKill {
    s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    x: Option<f64>,
    #[serde(rename = "T")]
    width: Option<f64>,
    widths: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    seed: Option<u64>,
    n_paths: Option<usize>,
    substep: Option<f64>,
    bridge_correction: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: KouModel,
    pub s: KillRate,
    /// Start position `x` (distance to the upper edge).
    pub x: f64,
    /// Interval width `T`.
    pub width: f64,
    /// Widths swept by `exit`; defaults to `[T]`.
    pub widths: Vec<f64>,
    pub simulation: SimConfig,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let m = raw.model;
        let sigma2 = match (m.sigma2, m.sigma) {
            (Some(v), None) => v,
            (None, Some(sigma)) => {
                log::warn!("config key `sigma` = {sigma} squared to sigma2 = {}", sigma * sigma);
                sigma * sigma
            }
            (Some(_), Some(_)) => return Err(CliError::Config("give either `sigma2` or `sigma`, not both".into())),
            (None, None) => return Err(CliError::Config("missing `sigma2` (or `sigma`) in [model]".into())),
        };
        let q = m.q.unwrap_or(1.0 - m.p);
        let model =
            KouModel::new(m.a, sigma2, m.lambda, m.p, q, m.c, m.b).map_err(|e| CliError::Config(e.to_string()))?;
        let s = KillRate::new(raw.kill.s).map_err(|e| CliError::Config(e.to_string()))?;

        let iv = raw.interval.unwrap_or(RawInterval {
            x: None,
            width: None,
            widths: None,
        });
        let width = iv.width.unwrap_or(2.0);
        let x = iv.x.unwrap_or(width / 2.0);
        if !(width.is_finite() && width > 0.0) {
            return Err(CliError::Config("`T` must be positive".into()));
        }
        if !(0.0..=width).contains(&x) {
            return Err(CliError::Config("`x` must lie in [0, T]".into()));
        }
        let widths = iv.widths.unwrap_or_else(|| vec![width]);
        if widths.is_empty() || widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(CliError::Config(
                "`widths` must be a nonempty list of positive numbers".into(),
            ));
        }

        let mut simulation = SimConfig::default();
        if let Some(sim) = raw.simulation {
            simulation.seed = sim.seed.unwrap_or(simulation.seed);
            simulation.n_paths = sim.n_paths.unwrap_or(simulation.n_paths);
            simulation.substep = sim.substep.unwrap_or(simulation.substep);
            simulation.bridge_correction = sim.bridge_correction.unwrap_or(simulation.bridge_correction);
        }
        simulation.validate().map_err(|e| CliError::Config(e.to_string()))?;

        Ok(Self {
            model,
            s,
            x,
            width,
            widths,
            simulation,
            output: raw.output.and_then(|o| o.path),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[model]\na = 1.0\nlambda = 6.0\np = 0.2\nc = 2.0\nb = 8.0\n";

    #[test]
    fn sigma_is_squared() {
        let cfg = RunConfig::parse(&format!("{BASE}sigma = 1.5\n[kill]\ns = 1.0\n")).unwrap();
        assert_eq!(cfg.model.sigma2, 2.25);
        assert_eq!(cfg.model.q, 0.8);
        assert_eq!(cfg.width, 2.0);
        assert_eq!(cfg.x, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            format!("{BASE}[kill]\ns = 1.0\n"),
            format!("{BASE}sigma2 = 2.0\nsigma = 1.0\n[kill]\ns = 1.0\n"),
            format!("{BASE}sigma2 = 2.0\nq = 0.7\n[kill]\ns = 1.0\n"),
            format!("{BASE}sigma2 = 2.0\n[kill]\ns = -1.0\n"),
            format!("{BASE}sigma2 = 2.0\n[kill]\ns = 1.0\n[interval]\nx = 3.0\nT = 2.0\n"),
            format!("{BASE}sigma2 = 2.0\nextra = 1\n[kill]\ns = 1.0\n"),
            format!("{BASE}sigma2 = 2.0\n[kill]\ns = 1.0\n[simulation]\nn_paths = 0\n"),
        ] {
            assert!(matches!(RunConfig::parse(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }
}
