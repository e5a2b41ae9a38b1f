//! Deterministic test functions sampled on the equidistant grid of `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::exact_exponential::equidistant_points;
use crate::likelihood::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `η(x) = x − 1/2`
    Linear,
    /// `η(x) = sin(2πx)`
    Sin,
}

impl Model {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Model::Linear => x - 0.5,
            Model::Sin => (2.0 * std::f64::consts::PI * x).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Linear => "linear",
            Model::Sin => "sin",
        }
    }

    /// `n` equidistant observations of the model.
    pub fn dataset(self, n: usize) -> Result<Dataset> {
        if n < 2 {
            return Err(GpError::InvalidParameter(format!("builtin models need n >= 2, got {n}")));
        }
        let x = equidistant_points(n);
        let y = x.iter().map(|&v| self.eval(v)).collect();
        Dataset::new(x, y)
    }
}

impl std::str::FromStr for Model {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Model::Linear),
            "sin" => Ok(Model::Sin),
            other => Err(GpError::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}
