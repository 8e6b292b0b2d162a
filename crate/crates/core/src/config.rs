//! Settings shared by the criterion panels, and the run configuration file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::quadrature::DEFAULT_EVAL_CAP;
use crate::report::{ConfigEcho, CriterionId, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    pub gauge: Gauge,
    /// Lag horizon override; systems otherwise pick their own safe horizon.
    pub grid_h: Option<f64>,
    pub grid_step: f64,
    pub anchor_step: f64,
    pub tmax: f64,
    pub delta_max: f64,
    pub tol: f64,
    pub eval_cap: usize,
    pub ncap: f64,
    pub ncap_nonuniform: f64,
    /// Largest growth constant `M` accepted as a uniform envelope.
    pub growth_cap: f64,
    pub seed: u64,
    pub random_probes: usize,
    pub omega_const: bool,
    pub alpha: Option<f64>,
    pub criteria: Vec<CriterionId>,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            gauge: Gauge::Identity,
            grid_h: None,
            grid_step: 0.1,
            anchor_step: 0.5,
            tmax: 100.0,
            delta_max: 10.0,
            tol: 1e-6,
            eval_cap: DEFAULT_EVAL_CAP,
            ncap: 1e3,
            ncap_nonuniform: 1e6,
            growth_cap: 1e3,
            seed: 0,
            random_probes: 64,
            omega_const: false,
            alpha: None,
            criteria: CriterionId::all(),
        }
    }
}

impl PanelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("grid-step", self.grid_step)?;
        positive("anchor step", self.anchor_step)?;
        positive("tmax", self.tmax)?;
        positive("tol", self.tol)?;
        positive("ncap", self.ncap)?;
        if let Some(h) = self.grid_h {
            positive("grid-h", h)?;
        }
        if let Some(a) = self.alpha {
            positive("alpha", a)?;
        }
        if self.delta_max < 2.0 {
            return Err(Error::Config(format!(
                "delta-max must be at least 2, got {}",
                self.delta_max
            )));
        }
        let ratio = self.anchor_step / self.grid_step;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::Config(
                "anchor step must be a multiple of grid-step".into(),
            ));
        }
        if self.eval_cap == 0 {
            return Err(Error::Config("eval-cap must be positive".into()));
        }
        Ok(())
    }

    pub fn wants(&self, id: CriterionId) -> bool {
        self.criteria.contains(&id)
    }

    pub fn echo(&self, anchor_max: f64, grid_h: f64, alpha: Option<f64>) -> ConfigEcho {
        ConfigEcho {
            gauge: self.gauge.descriptor(),
            anchor_max: Real(anchor_max),
            grid_h: Real(grid_h),
            grid_step: Real(self.grid_step),
            tmax: Real(self.tmax),
            delta_max: Real(self.delta_max),
            tol: Real(self.tol),
            ncap: Real(self.ncap),
            seed: self.seed,
            alpha: alpha.map(Real),
        }
    }
}

/// Explicit composition-law probe supplied in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub t: f64,
    pub s: f64,
    pub t0: f64,
    #[serde(default)]
    pub state: Option<crate::semiflow::StatePoint>,
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
}

/// Everything a CLI run can be configured with. Every field is optional so
/// a file can set a subset and flags can override the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub system: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub custom: Option<crate::custom::CustomSystem>,
    pub criteria: Option<String>,
    pub gauge: Option<String>,
    pub grid_h: Option<f64>,
    pub grid_step: Option<f64>,
    pub tmax: Option<f64>,
    pub delta_max: Option<f64>,
    pub tol: Option<f64>,
    pub eval_cap: Option<usize>,
    pub ncap: Option<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub omega_const: Option<bool>,
    pub out: Option<String>,
    pub format: Option<String>,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
    #[serde(default)]
    pub ranges: BTreeMap<String, Vec<f64>>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            system, custom, criteria, gauge, grid_h, grid_step, tmax, delta_max, tol, eval_cap,
            ncap, seed, alpha, omega_const, out, format
        );
        self.params.extend(other.params);
        if !other.probes.is_empty() {
            self.probes = other.probes;
        }
        self.ranges.extend(other.ranges);
        self
    }

    /// Axiom tolerance: `--tol` when given, else `1e-9`.
    pub fn axiom_tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    pub fn panel_config(&self) -> Result<PanelConfig> {
        let mut c = PanelConfig::default();
        if let Some(g) = &self.gauge {
            c.gauge = Gauge::parse(g)?;
        }
        if let Some(list) = &self.criteria {
            c.criteria = CriterionId::parse_list(list)?;
        }
        c.grid_h = self.grid_h;
        if let Some(v) = self.grid_step {
            c.grid_step = v;
            if c.anchor_step < v || ((c.anchor_step / v) - (c.anchor_step / v).round()).abs() > 1e-9 {
                c.anchor_step = v * (c.anchor_step / v).round().max(1.0);
            }
        }
        if let Some(v) = self.tmax {
            c.tmax = v;
        }
        if let Some(v) = self.delta_max {
            c.delta_max = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.eval_cap {
            c.eval_cap = v;
        }
        if let Some(v) = self.ncap {
            c.ncap = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.alpha = self.alpha;
        c.omega_const = self.omega_const.unwrap_or(false);
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PanelConfig::default().validate().unwrap();
    }

    #[test]
    fn overlay_prefers_later_values() {
        let file = RunConfig {
            system: Some("diag3".into()),
            seed: Some(3),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(7),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.system.as_deref(), Some("diag3"));
        assert_eq!(merged.seed, Some(7));
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunConfig, _> = serde_json::from_str(r#"{"sytem":"x"}"#);
        assert!(r.is_err());
    }

    #[test]
    fn short_delta_rejected() {
        let rc = RunConfig {
            delta_max: Some(1.5),
            ..Default::default()
        };
        assert!(matches!(rc.panel_config(), Err(Error::Config(_))));
    }
}
