//! Combines the two panels into one verdict and checks it against the
//! system's ground-truth tag.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::Result;
use crate::growth::{estimate_growth, verify_growth, GrowthEnvelope, Setting};
use crate::linalg::NormKind;
use crate::nonuniform::{run_nonuniform_panel, NonuniformOutcome, NonuniformPanel};
use crate::probe::{ProbeGrid, ProbeSet};
use crate::report::{ConfigEcho, CriterionId, Real, Witness};
use crate::semiflow::Semiflow;
use crate::system::{Classification, System};
use crate::uniform::{run_uniform_panel, UniformOutcome, UniformPanel};

pub const SCHEMA_VERSION: &str = "1.0.0";

pub const EXIT_DEFINITE: i32 = 0;
pub const EXIT_INCONCLUSIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONTRADICTION: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub name: String,
    pub params: BTreeMap<String, Real>,
    pub dimension: usize,
    pub norm: NormKind,
    pub semiflow: Semiflow,
    pub shift: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Classification>,
}

impl SystemSummary {
    pub fn of(sys: &System) -> Self {
        SystemSummary {
            name: sys.name.clone(),
            params: sys.params.iter().map(|(k, v)| (k.clone(), Real(*v))).collect(),
            dimension: sys.dim(),
            norm: sys.norm,
            semiflow: sys.semiflow,
            shift: Real(sys.shift),
            ground_truth: sys.ground_truth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthCheck {
    pub tag: Option<Classification>,
    pub consistent: bool,
    pub violations: Vec<String>,
}

/// Verdict from the two panel outcomes; also returns any cross-panel
/// disagreement.
pub fn combine(
    uniform: UniformOutcome,
    nonuniform: NonuniformOutcome,
    stable: bool,
) -> (Classification, Option<String>) {
    use Classification as C;
    use NonuniformOutcome as N;
    use UniformOutcome as U;
    let unstable_or_stable = if stable { C::StableOnly } else { C::Unstable };
    match (uniform, nonuniform) {
        (U::Ues, N::NotEs) => (
            C::Inconclusive,
            Some("uniform panel finds UES but the nonuniform panel refutes ES".into()),
        ),
        (U::Ues, _) => (C::Ues, None),
        (U::Inconclusive, _) => (C::Inconclusive, None),
        (U::UsNotUes | U::NotUs, N::Es) => (C::EsNotUes, None),
        (U::UsNotUes, _) => (C::UsNotUes, None),
        (U::NotUs, N::NotEs) => (unstable_or_stable, None),
        (U::NotUs, _) => (C::Inconclusive, None),
        (U::NotRun, N::Es) => (C::Es, None),
        (U::NotRun, N::NotEs) => (unstable_or_stable, None),
        (U::NotRun, _) => (C::Inconclusive, None),
    }
}

/// Checks the verdict and the criterion outcomes against the tag. Under a
/// UES tag no uniform characterization may fail; a tag denying uniform
/// exponential stability requires the continuous Datko test to fail.
/// Inconclusive results contradict nothing.
pub fn check_ground_truth(
    tag: Option<Classification>,
    verdict: Classification,
    uniform: &UniformPanel,
) -> GroundTruthCheck {
    let mut violations = Vec::new();
    if let Some(tag) = tag {
        if verdict != Classification::Inconclusive && !tag.admits(verdict) {
            violations.push(format!("verdict {verdict} contradicts tag {tag}"));
        }
        match tag {
            Classification::Ues => {
                for r in &uniform.reports {
                    if r.failed() {
                        violations.push(format!(
                            "{} returned {:?} on a UES-tagged system",
                            r.criterion_id,
                            r.verdict
                        ));
                    }
                }
            }
            Classification::UsNotUes | Classification::EsNotUes => {
                if let Some(r) = uniform.report(CriterionId::DatkoV) {
                    if r.passed() {
                        violations.push(format!(
                            "datko-v returned {:?} on a system tagged {tag}",
                            r.verdict
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    GroundTruthCheck {
        tag,
        consistent: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub schema_version: &'static str,
    pub generated_at: String,
    pub system: SystemSummary,
    pub verdict: Classification,
    pub uniform: UniformPanel,
    pub nonuniform: NonuniformPanel,
    pub discrepancies: Vec<String>,
    pub ground_truth_check: GroundTruthCheck,
    pub config: ConfigEcho,
}

impl ClassifyReport {
    pub fn exit_code(&self) -> i32 {
        if !self.ground_truth_check.consistent {
            EXIT_CONTRADICTION
        } else if self.verdict == Classification::Inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_DEFINITE
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// RFC 3339 UTC time, or `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> String {
    use chrono::{SecondsFormat, TimeZone, Utc};
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
        .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn classify(sys: &System, cfg: &PanelConfig) -> Result<ClassifyReport> {
    let (uniform, nonuniform) =
        rayon::join(|| run_uniform_panel(sys, cfg), || run_nonuniform_panel(sys, cfg));
    let (uniform, nonuniform) = (uniform?, nonuniform?);
    let (verdict, cross) = combine(uniform.outcome, nonuniform.outcome, nonuniform.stable);
    let mut discrepancies: Vec<String> = uniform
        .discrepancies
        .iter()
        .map(|d| format!("uniform: {d}"))
        .chain(nonuniform.discrepancies.iter().map(|d| format!("nonuniform: {d}")))
        .collect();
    discrepancies.extend(cross);
    let ground_truth_check = check_ground_truth(sys.ground_truth, verdict, &uniform);
    let grid = ProbeGrid::uniform(sys, cfg);
    Ok(ClassifyReport {
        schema_version: SCHEMA_VERSION,
        generated_at: timestamp(),
        system: SystemSummary::of(sys),
        verdict,
        uniform,
        nonuniform,
        discrepancies,
        ground_truth_check,
        config: cfg.echo(grid.anchor_max, grid.lag_max, cfg.alpha),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSection {
    pub envelope: GrowthEnvelope,
    /// `(omega, M)` per ladder rate; uniform setting only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<[Real; 2]>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub schema_version: &'static str,
    pub generated_at: String,
    pub system: SystemSummary,
    pub uniform: GrowthSection,
    pub nonuniform: GrowthSection,
    pub config: ConfigEcho,
}

pub fn growth_report(sys: &System, cfg: &PanelConfig) -> Result<GrowthReport> {
    let section = |setting: Setting| -> Result<GrowthSection> {
        let fit = estimate_growth(sys, setting, cfg)?;
        let grid = match setting {
            Setting::Uniform => ProbeGrid::uniform(sys, cfg),
            Setting::Nonuniform => ProbeGrid::nonuniform(sys, cfg),
        };
        let probes = ProbeSet::collect(sys, grid)?;
        let check = verify_growth(sys, &fit.envelope, &probes);
        Ok(GrowthSection {
            envelope: fit.envelope,
            ladder: fit.ladder.iter().map(|&(w, m)| [Real(w), Real(m)]).collect(),
            verified: check.is_ok(),
            witness: check.err(),
        })
    };
    let grid = ProbeGrid::uniform(sys, cfg);
    Ok(GrowthReport {
        schema_version: SCHEMA_VERSION,
        generated_at: timestamp(),
        system: SystemSummary::of(sys),
        uniform: section(Setting::Uniform)?,
        nonuniform: section(Setting::Nonuniform)?,
        config: cfg.echo(grid.anchor_max, grid.lag_max, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Classification as C;

    #[test]
    fn verdict_table() {
        let cases = [
            (UniformOutcome::Ues, NonuniformOutcome::Es, true, C::Ues),
            (UniformOutcome::Ues, NonuniformOutcome::NotEs, true, C::Inconclusive),
            (UniformOutcome::UsNotUes, NonuniformOutcome::NotEs, true, C::UsNotUes),
            (UniformOutcome::NotUs, NonuniformOutcome::Es, true, C::EsNotUes),
            (UniformOutcome::NotUs, NonuniformOutcome::NotEs, true, C::StableOnly),
            (UniformOutcome::NotUs, NonuniformOutcome::NotEs, false, C::Unstable),
            (UniformOutcome::Inconclusive, NonuniformOutcome::Es, true, C::Inconclusive),
            (UniformOutcome::NotRun, NonuniformOutcome::Es, true, C::Es),
        ];
        for (u, n, stable, want) in cases {
            assert_eq!(combine(u, n, stable).0, want, "{u:?} {n:?}");
        }
    }

    #[test]
    fn timestamp_honours_source_date_epoch() {
        std::env::set_var("SOURCE_DATE_EPOCH", "0");
        assert_eq!(timestamp(), "1970-01-01T00:00:00Z");
        std::env::remove_var("SOURCE_DATE_EPOCH");
    }
}
