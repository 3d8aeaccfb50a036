//! JSON model files: a state plus per-party, per-setting measurements.
//!
//! ```json
//! {
//!   "state": "ghz",
//!   "measurements": [
//!     [{"bloch": [1, 0, 0]}, {"angles": [1.5707963267948966, 1.5707963267948966]}],
//!     [{"bloch": [1, 0, 0]}, {"bloch": [0, 1, 0]}],
//!     [{"bloch": [1, 0, 0]}, {"bloch": [0, 1, 0]}]
//!   ]
//! }
//! ```
//!
//! `state` is either `"ghz"` (one qubit per party) or
//! `{"amplitudes": [[re, im], ...]}` over the computational basis, party 0
//! most significant. Angles are `[theta, phi]` in radians.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ghz_state, BlochVector, MeasurementModel, PureState, QuantumState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Amplitudes { amplitudes: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementSpec {
    Bloch { bloch: [f64; 3] },
    Angles { angles: [f64; 2] },
}

impl MeasurementSpec {
    pub fn to_vector(self) -> Result<BlochVector> {
        match self {
            MeasurementSpec::Bloch { bloch: [x, y, z] } => BlochVector::new(x, y, z),
            MeasurementSpec::Angles {
                angles: [theta, phi],
            } => Ok(BlochVector::from_angles(theta, phi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub state: StateSpec,
    pub measurements: Vec<Vec<MeasurementSpec>>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn measurement_model(&self) -> Result<MeasurementModel> {
        let vectors = self
            .measurements
            .iter()
            .map(|party| party.iter().map(|m| m.to_vector()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        MeasurementModel::new(vectors)
    }

    pub fn state(&self) -> Result<QuantumState> {
        let parties = self.measurements.len();
        let state = match &self.state {
            StateSpec::Named(name) if name == "ghz" => ghz_state(parties)?,
            StateSpec::Named(name) => {
                return Err(Error::Model(format!(
                    "unknown state `{name}` (expected \"ghz\" or an amplitude list)"
                )))
            }
            StateSpec::Amplitudes { amplitudes } => PureState::new(
                amplitudes
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            )?,
        };
        if state.parties() != parties {
            return Err(Error::Model(format!(
                "state has {} qubits but {} parties have measurements",
                state.parties(),
                parties
            )));
        }
        Ok(state.into())
    }

    pub fn load(&self) -> Result<(QuantumState, MeasurementModel)> {
        Ok((self.state()?, self.measurement_model()?))
    }
}
