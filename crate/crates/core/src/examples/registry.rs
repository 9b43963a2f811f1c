//! Selection of examples by name with JSON parameters.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::catalog::{example_4_8_boxed, example_5_2, example_5_4_with, scalar_contraction_bundle};
use super::ExampleBundle;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const REGISTRY: [&str; 4] = [
    "example-4.8",
    "example-5.2",
    "example-5.4",
    "scalar-contraction",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example48Params {
    pub r: f64,
    pub u_max: f64,
}

impl Default for Example48Params {
    fn default() -> Self {
        Self { r: 1.0, u_max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example52Params {
    pub r: f64,
    pub epsilon: f64,
    /// Feedback gain; the smallest admissible value plus one when absent.
    #[serde(rename = "L")]
    pub gain: Option<f64>,
}

impl Default for Example52Params {
    fn default() -> Self {
        Self {
            r: 0.5,
            epsilon: 1.0,
            gain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example54Params {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub u_max: f64,
}

impl Default for Example54Params {
    fn default() -> Self {
        Self {
            big_r: 1.0,
            r: 1.0,
            u_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionParams {
    pub r: f64,
    /// Claimed decay rate of `x(0)`.
    pub rate: f64,
}

impl Default for ContractionParams {
    fn default() -> Self {
        Self { r: 1.0, rate: 1.0 }
    }
}

fn parse<P: DeserializeOwned + Default>(name: &str, params: &serde_json::Value) -> Result<P> {
    if params.is_null() {
        return Ok(P::default());
    }
    serde_json::from_value(params.clone())
        .map_err(|e| Error::Config(format!("parameters of `{name}`: {e}")))
}

/// Builds the registered example `name`; `params` is a JSON object of
/// overrides (or null).
pub fn build_example<T: Real>(name: &str, params: &serde_json::Value) -> Result<ExampleBundle<T>> {
    match name {
        "example-4.8" => {
            let p: Example48Params = parse(name, params)?;
            example_4_8_boxed(p.r, p.u_max)
        }
        "example-5.2" => {
            let p: Example52Params = parse(name, params)?;
            example_5_2(p.r, p.epsilon, p.gain)
        }
        "example-5.4" => {
            let p: Example54Params = parse(name, params)?;
            example_5_4_with(p.big_r, p.r, p.u_max)
        }
        "scalar-contraction" => {
            let p: ContractionParams = parse(name, params)?;
            scalar_contraction_bundle(p.r, p.rate)
        }
        other => Err(Error::UnknownName(other.to_string())),
    }
}
