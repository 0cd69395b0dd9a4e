//! Run configuration file: the physical `[bath]` and `[emitter]` sections plus `[run]`.

use std::path::Path;

use openbath::model::{validate, BathSpec, Channel, ConfigSpec, EmitterSpec};
use openbath::numerics::fit::{linspace, logspace};
use openbath::scaling::SweepVariable;
use openbath::Config;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Whole configuration file. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub bath: BathSpec,
    #[serde(default)]
    pub emitter: EmitterSpec,
    #[serde(default)]
    pub run: RunSpec,
}

/// Options of the individual subcommands.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// End of the time (or delay) grid; defaults to 50.
    pub t_max: Option<f64>,
    /// Number of points of the time grid, including `t = 0`; defaults to 501.
    pub n_times: Option<usize>,
    /// Channel for `poles` and `dynamics`; defaults to `single`.
    pub channel: Option<Channel>,
    /// Number of dissipation rates sampled by `ddos`; defaults to 201.
    pub points: Option<usize>,
    /// Ring sizes for `oracle-compare`; by default the sizes giving `α ∈ {0.1, 0.9, 5.7}`.
    pub nb: Option<Vec<usize>>,
    pub sweep: Option<SweepSpec>,
}

/// Grid spacing of a sweep given by its end points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Parameter sweep: either explicit `values` or `start`/`stop`/`points`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Record field fitted against the swept value; defaults to `decay`.
    pub fit: Option<String>,
    /// Fit window; defaults to the top 1.5 decades of the grid.
    pub window: Option<[f64; 2]>,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        match (self.start, self.stop, self.points) {
            (Some(a), Some(b), Some(n)) => Ok(match self.spacing {
                Spacing::Log => {
                    if !(a > 0.0 && b > 0.0) {
                        return Err(CliError::Config(
                            "log-spaced sweeps need positive start and stop".into(),
                        ));
                    }
                    logspace(a, b, n)
                }
                Spacing::Linear => linspace(a, b, n),
            }),
            _ => Err(CliError::Config(
                "sweep needs `values` or all of `start`, `stop`, `points`".into(),
            )),
        }
    }
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Validated physical configuration.
    pub fn config(&self) -> Result<Config, CliError> {
        let spec = ConfigSpec {
            bath: self.bath.clone(),
            emitter: self.emitter.clone(),
        };
        validate(&spec).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let t_max = self.run.t_max.unwrap_or(50.0);
        let n = self.run.n_times.unwrap_or(501);
        if !(t_max > 0.0) || n < 2 {
            return Err(CliError::Config(
                "need t_max > 0 and n_times >= 2".into(),
            ));
        }
        Ok(linspace(0.0, t_max, n))
    }

    pub fn sweep(&self) -> Result<&SweepSpec, CliError> {
        self.run
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [run.sweep] section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let f = RunFile::parse(
            r#"
            [bath]
            gamma = 1000.0
            j = 1.0
            [emitter]
            omega = 1.0
            [run]
            t_max = 10.0
            n_times = 11
            [run.sweep]
            variable = "gamma"
            start = 100.0
            stop = 1e5
            points = 13
            "#,
        )
        .unwrap();
        assert_eq!(f.config().unwrap().bath.gamma, 1000.0);
        assert_eq!(f.times().unwrap().len(), 11);
        let g = f.sweep().unwrap().grid().unwrap();
        assert_eq!(g.len(), 13);
        assert!((g[12] - 1e5).abs() < 1e-6);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for text in [
            "[bath]\ngamma = 1.0\ngama = 2.0\n",
            "[emitter]\nomegaa = 1.0\n",
            "[run]\ntmax = 1.0\n",
            "[extra]\n",
        ] {
            assert!(matches!(RunFile::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn invalid_physics_is_a_config_error() {
        let f = RunFile::parse("[bath]\ngamma = 0.0\n").unwrap();
        assert!(matches!(f.config(), Err(CliError::Config(_))));
    }
}
