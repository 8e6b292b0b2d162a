//! User-declared diagonal exponential systems loaded from a config file.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cocycle::{DiagonalExpCocycle, ExpTerm};
use crate::error::{Error, Result};
use crate::linalg::NormKind;
use crate::semiflow::{Semiflow, StatePoint};
use crate::system::{Classification, ProbeHints, System};

fn default_norm() -> NormKind {
    NormKind::L1
}

/// `Phi(t, s, x) = diag(exp(sum of terms))` over one of the built-in
/// semiflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CustomSystem {
    #[serde(default)]
    pub name: Option<String>,
    pub semiflow: Semiflow,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    pub entries: Vec<Vec<ExpTerm>>,
    pub states: Vec<StatePoint>,
    #[serde(default)]
    pub ground_truth: Option<Classification>,
    #[serde(default)]
    pub hints: Option<ProbeHints>,
}

impl CustomSystem {
    pub fn build(&self) -> Result<System> {
        if self.states.is_empty() {
            return Err(Error::InvalidParams("custom system needs at least one state".into()));
        }
        let cocycle = DiagonalExpCocycle::new(self.entries.clone())?;
        let mut sys = System::new(
            self.name.clone().unwrap_or_else(|| "custom".into()),
            self.semiflow,
            Arc::new(cocycle),
            self.norm,
            self.states.clone(),
        )?;
        sys.ground_truth = self.ground_truth;
        if let Some(h) = self.hints {
            sys.hints = h;
        }
        Ok(sys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_from_json() {
        let json = r#"{
            "semiflow": "translation",
            "entries": [[{"kind": "linear", "rate": -1.5}]],
            "states": [{"kind": "real", "value": 0.0}],
            "ground-truth": "UES"
        }"#;
        let c: CustomSystem = serde_json::from_str(json).unwrap();
        let sys = c.build().unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.ground_truth, Some(Classification::Ues));
        let v = sys
            .apply_cocycle(2.0, 0.0, &StatePoint::Real(0.0), &[1.0])
            .unwrap();
        assert!((v[0] - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn state_kind_must_match() {
        let c = CustomSystem {
            name: None,
            semiflow: Semiflow::Shift,
            norm: NormKind::L2,
            entries: vec![vec![ExpTerm::Linear { rate: -1.0 }]],
            states: vec![StatePoint::Real(0.0)],
            ground_truth: None,
            hints: None,
        };
        assert!(matches!(c.build(), Err(Error::InvalidState(_))));
    }
}
