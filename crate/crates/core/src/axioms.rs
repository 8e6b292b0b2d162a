//! Composition-law checks for a system, on seeded random probes plus any
//! probes given explicitly.

use serde::Serialize;

use crate::classify::{timestamp, SystemSummary, SCHEMA_VERSION};
use crate::config::ProbeSpec;
use crate::error::{Error, Result};
use crate::report::Real;
use crate::system::{CocycleLawReport, LawProbe, SemiflowLawReport, System};

pub const DEFAULT_PROBES: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub schema_version: &'static str,
    pub generated_at: String,
    pub system: SystemSummary,
    pub seed: u64,
    pub tol: Real,
    pub random_probes: usize,
    pub explicit_probes: usize,
    pub semiflow: SemiflowLawReport,
    pub cocycle: CocycleLawReport,
    pub passed: bool,
}

fn explicit(sys: &System, spec: &ProbeSpec) -> Result<LawProbe> {
    let x = spec.state.unwrap_or(sys.state_samples[0]);
    let v = spec.vector.clone().unwrap_or_else(|| sys.vector_samples[0].clone());
    if v.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: v.len(),
        });
    }
    Ok(LawProbe {
        t: spec.t,
        s: spec.s,
        t0: spec.t0,
        x,
        v,
    })
}

pub fn check_axioms(
    sys: &System,
    count: usize,
    seed: u64,
    tol: f64,
    extra: &[ProbeSpec],
) -> Result<AxiomReport> {
    let mut probes = sys.random_law_probes(count, seed);
    for spec in extra {
        probes.push(explicit(sys, spec)?);
    }
    let semiflow = sys.check_semiflow_law(&probes)?;
    let cocycle = sys.check_cocycle_law(&probes)?;
    let passed = [
        semiflow.max_composition_deviation,
        semiflow.max_identity_deviation,
        cocycle.max_relative_deviation,
        cocycle.max_identity_deviation,
    ]
    .iter()
    .all(|&d| d <= tol);
    Ok(AxiomReport {
        schema_version: SCHEMA_VERSION,
        generated_at: timestamp(),
        system: SystemSummary::of(sys),
        seed,
        tol: Real(tol),
        random_probes: count,
        explicit_probes: extra.len(),
        semiflow,
        cocycle,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn backwards_probe_is_rejected() {
        let sys = gallery::build("scalar_decay", &Default::default()).unwrap();
        let bad = ProbeSpec {
            t: 1.0,
            s: 2.0,
            t0: 0.0,
            state: None,
            vector: None,
        };
        assert!(matches!(
            check_axioms(&sys, 10, 0, DEFAULT_TOL, &[bad]),
            Err(Error::TimeOrderViolation { .. })
        ));
    }

    #[test]
    fn literal_constant_breaks_identity() {
        let mut p = std::collections::BTreeMap::new();
        p.insert("literal_l".to_string(), 1.0);
        let sys = gallery::build("diag3", &p).unwrap();
        let r = check_axioms(&sys, 50, 0, DEFAULT_TOL, &[]).unwrap();
        assert!(!r.passed);
        assert!(r.cocycle.max_identity_deviation > 1.0);
    }
}
