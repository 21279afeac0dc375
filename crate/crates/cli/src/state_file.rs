//! JSON state files: `{"kind": "pure", "dim": d, "data": [[re, im], …]}` or
//! `{"kind": "mixed", "dim": d, "data": [[[re, im], …], …]}` (row-major).

use std::fs;
use std::path::Path;

use coherence_core::{DensityMatrix, HermitianMatrix, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest `|A − A†|` entry accepted in a mixed-state file.
pub const HERMITICITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateData {
    Pure(Vec<[f64; 2]>),
    Mixed(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub kind: StateKind,
    pub dim: usize,
    pub data: StateData,
}

/// A validated state from a file.
#[derive(Clone, Debug)]
pub enum LoadedState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl LoadedState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            Self::Pure(psi) => psi.projector(),
            Self::Mixed(rho) => rho.clone(),
        }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            Self::Pure(_) => StateKind::Pure,
            Self::Mixed(_) => StateKind::Mixed,
        }
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

impl StateFile {
    pub fn from_pure(psi: &StateVector) -> Self {
        Self {
            kind: StateKind::Pure,
            dim: psi.dim(),
            data: StateData::Pure(psi.amplitudes().iter().copied().map(pair).collect()),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        Self {
            kind: StateKind::Mixed,
            dim: d,
            data: StateData::Mixed((0..d).map(|i| (0..d).map(|j| pair(rho.get(i, j))).collect()).collect()),
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("malformed state file: {e}")))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks shape, finiteness, normalization, Hermiticity and positivity.
    pub fn load(&self) -> CliResult<LoadedState> {
        let d = self.dim;
        if d == 0 {
            return Err(invalid("dim must be at least 1"));
        }
        let complex = |p: &[f64; 2]| -> CliResult<Complex64> {
            if p.iter().all(|v| v.is_finite()) {
                Ok(Complex64::new(p[0], p[1]))
            } else {
                Err(invalid("non-finite entry"))
            }
        };
        match (self.kind, &self.data) {
            (StateKind::Pure, StateData::Pure(amps)) => {
                if amps.len() != d {
                    return Err(invalid(format!("expected {d} amplitudes, found {}", amps.len())));
                }
                let amps = amps.iter().map(complex).collect::<CliResult<Vec<_>>>()?;
                Ok(LoadedState::Pure(StateVector::new(amps).map_err(|e| invalid(e.to_string()))?))
            }
            (StateKind::Mixed, StateData::Mixed(rows)) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(invalid(format!("expected a {d}x{d} matrix")));
                }
                let mut m = DMatrix::<Complex64>::zeros(d, d);
                for (i, row) in rows.iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        m[(i, j)] = complex(p)?;
                    }
                }
                let asym = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if asym > HERMITICITY_TOL {
                    return Err(invalid(format!("matrix is not Hermitian (|A − A†| up to {asym:e})")));
                }
                let h = HermitianMatrix::new(m).map_err(|e| invalid(e.to_string()))?;
                Ok(LoadedState::Mixed(DensityMatrix::new(h).map_err(|e| invalid(e.to_string()))?))
            }
            (StateKind::Pure, _) => Err(invalid("pure state data must be a list of [re, im] pairs")),
            (StateKind::Mixed, _) => Err(invalid("mixed state data must be a matrix of [re, im] pairs")),
        }
    }
}

pub fn load_state(path: &Path) -> CliResult<LoadedState> {
    StateFile::read(path)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;
    use coherence_core::linalg::{haar_random_pure, random_density};
    use coherence_core::sampling::substream;

    #[test]
    fn pure_round_trip_is_exact() {
        let psi = haar_random_pure(5, &mut substream(3, 0));
        let text = serde_json::to_string(&StateFile::from_pure(&psi)).unwrap();
        let LoadedState::Pure(back) = StateFile::parse(&text).unwrap().load().unwrap() else { panic!("kind") };
        assert_eq!(back, psi);
    }

    #[test]
    fn mixed_round_trip_is_exact() {
        let rho = random_density(4, 2, &mut substream(3, 1));
        let file = StateFile::from_density(&rho);
        let text = serde_json::to_string(&file).unwrap();
        let parsed = StateFile::parse(&text).unwrap();
        assert_eq!(parsed, file);
        let LoadedState::Mixed(back) = parsed.load().unwrap() else { panic!("kind") };
        assert_eq!(back.as_hermitian(), rho.as_hermitian());
    }

    #[test]
    fn rejects_bad_files() {
        let cases = [
            r#"{"kind":"pure","dim":2,"data":[[1,0],[1,0]]}"#,
            r#"{"kind":"pure","dim":3,"data":[[1,0],[0,0]]}"#,
            r#"{"kind":"mixed","dim":2,"data":[[1,0],[0,0]]}"#,
            r#"{"kind":"mixed","dim":2,"data":[[[0.5,0],[0.5,0]],[[0,0],[0.5,0]]]}"#,
            r#"{"kind":"mixed","dim":2,"data":[[[1.5,0],[0,0]],[[0,0],[-0.5,0]]]}"#,
            r#"{"kind":"pure","dim":0,"data":[]}"#,
            r#"{"kind":"pure","dim":1,"data":[[1,0]],"extra":1}"#,
            r#"{"kind":"qutrit","dim":1,"data":[[1,0]]}"#,
        ];
        for c in cases {
            let r = StateFile::parse(c).and_then(|f| f.load());
            assert!(matches!(r, Err(CliError::Input(_))), "{c}");
        }
    }

    #[test]
    fn accepts_complex_pure_state() {
        let f = StateFile::parse(r#"{"kind":"pure","dim":2,"data":[[0.6,0],[0,0.8]]}"#).unwrap();
        assert_eq!(f.load().unwrap().kind(), StateKind::Pure);
    }
}
