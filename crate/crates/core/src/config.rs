//! JSON problem files.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "mu0": [0.0],
//!   "sigma0": [[1.0]],
//!   "channels": [{ "lambda": 1.0, "sigma_n": [[1.0]] }],
//!   "epsilon": 0.1
//! }
//! ```
//!
//! Matrices are arrays of rows. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::Problem;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub lambda: f64,
    pub sigma_n: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub mu0: Vec<f64>,
    pub sigma0: Vec<Vec<f64>>,
    pub channels: Vec<ChannelConfig>,
    pub epsilon: f64,
}

fn matrix(rows: &[Vec<f64>], what: &str, dimension: usize) -> Result<Matrix<f64>> {
    let m = Matrix::from_rows(rows).ok_or_else(|| Error::Config(format!("{what}: ragged rows")))?;
    if m.rows() != dimension || m.cols() != dimension {
        return Err(Error::DimensionMismatch {
            what: what.into(),
            expected: dimension,
            found: if m.rows() != dimension { m.rows() } else { m.cols() },
        });
    }
    Ok(m)
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Builds and validates the problem.
    pub fn to_problem(&self) -> Result<Problem<f64>> {
        let k = self.dimension;
        if k == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.mu0.len() != k {
            return Err(Error::DimensionMismatch {
                what: "mu0".into(),
                expected: k,
                found: self.mu0.len(),
            });
        }
        let sigma0 = matrix(&self.sigma0, "sigma0", k)?;
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(j, c)| Ok((matrix(&c.sigma_n, &format!("channel {j}"), k)?, c.lambda)))
            .collect::<Result<Vec<_>>>()?;
        Problem::from_parts(channels, self.mu0.clone(), sigma0, self.epsilon)
    }

    pub fn from_problem(problem: &Problem<f64>) -> Self {
        let reference = problem.reference();
        Self {
            dimension: problem.dimension(),
            mu0: reference.mean().to_vec(),
            sigma0: reference.covariance().to_rows(),
            channels: problem
                .ensemble()
                .channels()
                .iter()
                .map(|c| ChannelConfig {
                    lambda: c.weight,
                    sigma_n: c.noise_covariance.to_rows(),
                })
                .collect(),
            epsilon: problem.epsilon(),
        }
    }
}
