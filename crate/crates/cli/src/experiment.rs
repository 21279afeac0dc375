use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Description of a sampling or sweep experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dimension: usize,
    pub sample_count: u64,
    pub seed: u64,
    #[serde(default)]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub m_grid: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let spec: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// `d ≥ 1`, `N ≥ 1`, every ε in `[0, 1)` and every m ≥ 1.
    pub fn validate(&self) -> CliResult<()> {
        if self.dimension == 0 {
            return Err(CliError::Input("dimension must be at least 1".into()));
        }
        if self.sample_count == 0 {
            return Err(CliError::Input("sample_count must be at least 1".into()));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(CliError::Input(format!("epsilon {e} outside [0, 1)")));
        }
        if self.m_grid.contains(&0) {
            return Err(CliError::Input("m values must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ExperimentSpec {
        ExperimentSpec { dimension: 4, sample_count: 10, seed: 1, epsilon_grid: vec![0.0, 0.5], m_grid: vec![2], output: None }
    }

    #[test]
    fn validation() {
        assert!(spec().validate().is_ok());
        assert!(ExperimentSpec { dimension: 0, ..spec() }.validate().is_err());
        assert!(ExperimentSpec { sample_count: 0, ..spec() }.validate().is_err());
        assert!(ExperimentSpec { epsilon_grid: vec![1.0], ..spec() }.validate().is_err());
        assert!(ExperimentSpec { m_grid: vec![0], ..spec() }.validate().is_err());
    }

    #[test]
    fn parses_minimal_json() {
        let s: ExperimentSpec = serde_json::from_str(r#"{"dimension":4,"sample_count":5,"seed":9}"#).unwrap();
        assert_eq!(s.epsilon_grid, Vec::<f64>::new());
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"dimension":4}"#).is_err());
    }
}
