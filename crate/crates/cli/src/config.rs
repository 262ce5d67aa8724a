//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torusdecay_core::model::{ProblemSpec, RawProblemSpec};
use torusdecay_core::rational::{from_f64, Rat, RatStr};
use torusdecay_core::solver::io::parse_values;
use torusdecay_core::solver::{InitialData, SchemeConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub spec: RawProblemSpec,
    /// Mean value at which the condition is checked; defaults to the mean of the initial data.
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub i: Option<RatStr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    /// Cells per axis of the simulation grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default)]
    pub scheme: SchemeConfig,
    /// Second initial state evolved in lockstep for the contraction audit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleConfig>,
    /// Decay threshold on `||u - I||_1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<RatStr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Frames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig { directory: None, formats: vec![Format::Csv, Format::Frames] }
    }
}

impl OutputsConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// A parsed configuration with its validated problem.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ProblemConfig,
    pub spec: ProblemSpec,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn from_str(text: &str, origin: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut config: ProblemConfig = serde_json::from_str(text)
            .map_err(|e| {
                let msg = e.to_string();
                let bare = msg.strip_suffix(&format!(" at line {} column {}", e.line(), e.column())).unwrap_or(&msg);
                CliError::Input(format!("{origin}:{}:{}: {bare}", e.line(), e.column()))
            })?;
        let spec = ProblemSpec::from_raw(config.spec.clone()).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        for data in config.initial.iter_mut().chain(config.paired_initial.iter_mut()) {
            resolve_array(data, base_dir)?;
        }
        Ok(Loaded { config, spec, base_dir: base_dir.to_path_buf() })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &path.display().to_string(), &base)
    }

    /// The configured `I`, else the exact mean of sine or constant initial data.
    pub fn mean(&self) -> Result<Rat, CliError> {
        if let Some(i) = &self.config.i {
            return Ok(i.0.clone());
        }
        let exact = |x: f64| from_f64(x).ok_or_else(|| CliError::Input(format!("mean {x} is not finite")));
        match &self.config.initial {
            Some(InitialData::Sine { mean, .. }) => exact(*mean),
            Some(InitialData::Constant { value }) => exact(*value),
            _ => Err(CliError::Input("the config needs \"I\" (the mean value) for this initial data".into())),
        }
    }

    pub fn threshold(&self, flag: Option<f64>) -> f64 {
        flag.or(self.config.threshold).unwrap_or(DEFAULT_THRESHOLD)
    }
}

fn resolve_array(data: &mut InitialData, base: &Path) -> Result<(), CliError> {
    if let InitialData::Array { values, path } = data {
        match (values.as_ref(), path.as_ref()) {
            (Some(_), Some(_)) => {
                return Err(CliError::Input("array initial data takes either \"values\" or \"path\"".into()))
            }
            (None, Some(p)) => {
                let full = base.join(p);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", full.display())))?;
                *values = Some(parse_values(&text).map_err(|e| CliError::Input(format!("{}: {e}", full.display())))?);
            }
            (None, None) => return Err(CliError::Input("array initial data needs \"values\" or \"path\"".into())),
            (Some(_), None) => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_position_of_bad_json() {
        let err = Loaded::from_str("{\n  \"spec\": [1,\n", "cfg.json", Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("cfg.json:"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_flux_is_input_error() {
        let err = Loaded::from_str(r#"{"spec": {"n": 1, "M": "1", "diffusion": [[["0"]]]}}"#, "c", Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("flux"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn mean_defaults_to_initial_data() {
        let text = r#"{"spec": {"n": 1, "M": "1", "flux": [["0"]], "diffusion": [[["0"]]]},
                       "initial": {"kind": "sine", "amplitude": 0.5, "mean": 0.25}}"#;
        let l = Loaded::from_str(text, "c", Path::new(".")).unwrap();
        assert_eq!(l.mean().unwrap(), torusdecay_core::rational::ratio(1, 4));
        assert_eq!(l.threshold(None), DEFAULT_THRESHOLD);
        assert_eq!(l.threshold(Some(0.5)), 0.5);
    }
}
