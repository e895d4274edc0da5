//! JSON configuration for equation specs.
//!
//! ```json
//! {
//!   "period": 3.0,
//!   "damping": 0.5,
//!   "terms": [
//!     { "coefficient": 1.0, "delay": { "kind": "saturating_ramp", "tau": 0.5 } },
//!     { "coefficient": { "act_and_wait": { "wait": 1.0, "gain": 2.0 } },
//!       "delay": { "kind": "constant", "tau": 0.0 } },
//!     { "coefficient": { "segments": [ { "start": 0.0, "end": 3.0, "poly": [1.0, 0.1] } ] },
//!       "delay": { "kind": "piecewise_linear", "knots": [[0.0, 0.0], [3.0, 0.2]] } }
//!   ]
//! }
//! ```
//!
//! `period` may be omitted when the config is used as a sweep template; the
//! period is then supplied per sample. Constant and act-and-wait coefficients
//! and constant/ramp delays adapt to any period; explicit segments and knots
//! are tied to the period they were written for.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoefficientProfile, DelayKind, DelayProfile, DelayTerm, EquationSpec, Segment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActAndWait {
    pub wait: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Constant(f64),
    ActAndWait { act_and_wait: ActAndWait },
    Segments { segments: Vec<Segment> },
}

impl CoefficientConfig {
    fn instantiate(&self, period: f64) -> CoefficientProfile {
        match self {
            CoefficientConfig::Constant(v) => CoefficientProfile::constant(*v, period),
            CoefficientConfig::ActAndWait { act_and_wait } => {
                CoefficientProfile::act_and_wait(act_and_wait.wait, act_and_wait.gain, period)
            }
            CoefficientConfig::Segments { segments } => CoefficientProfile::new(segments.clone(), period),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermConfig {
    pub coefficient: CoefficientConfig,
    pub delay: DelayKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default = "zero_damping")]
    pub damping: CoefficientConfig,
    pub terms: Vec<TermConfig>,
}

fn zero_damping() -> CoefficientConfig {
    CoefficientConfig::Constant(0.0)
}

impl EquationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Builds the spec at `period`, or at the configured period when `None`.
    pub fn instantiate(&self, period: Option<f64>) -> Result<EquationSpec> {
        let period = period
            .or(self.period)
            .ok_or_else(|| Error::Config("no period given".into()))?;
        Ok(EquationSpec {
            period,
            damping: self.damping.instantiate(period),
            terms: self
                .terms
                .iter()
                .map(|t| DelayTerm {
                    coefficient: t.coefficient.instantiate(period),
                    delay: DelayProfile::new(t.delay.clone(), period),
                })
                .collect(),
        })
    }
}
