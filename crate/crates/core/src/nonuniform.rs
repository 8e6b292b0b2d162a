//! Nonuniform-setting criteria, where constants may depend on the initial
//! time: per-bin decay fits, the decaying majorant, and the
//! `e^{alpha (t-s)}`-weighted Datko and Barbashin tests.

use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::Result;
use crate::growth::{fit_nonuniform, GrowthEnvelope};
use crate::integrals::{
    barbashin_all, datko_tails, integer_anchors, DiscreteStart, DiscreteSum, Form, Time,
};
use crate::probe::{
    best_rung, scan_ladder, weighted_plateaus, LadderRung, ProbeGrid, ProbeSet, MIN_FIT_HORIZON,
};
use crate::report::{ConfigEcho, CriterionId, CriterionReport, Real};
use crate::system::System;
use crate::uniform::{datko_verdict, MIN_WINDOW};

/// The majorant must fall to this fraction of its value at lag zero.
pub const MAJORANT_DROP: f64 = 1e-3;
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonuniformDecayFit {
    pub nu: f64,
    /// `(s, N(s))` per anchor bin.
    #[serde(rename = "N_of_s")]
    pub n_of_s: Vec<(Real, Real)>,
    pub residual: f64,
}

/// Largest ladder rate for which every s-bin keeps `N(s) <= cap` on a
/// sustained plateau.
pub fn fit_nonuniform_decay(
    probes: &ProbeSet,
    cap: f64,
) -> (Option<NonuniformDecayFit>, Vec<LadderRung>) {
    let ladder = scan_ladder(&probes.samples, probes.grid.lag_max, cap, true);
    let fit = best_rung(&ladder).map(|r| {
        let n_of_s: Vec<(Real, Real)> = r
            .plateaus
            .iter()
            .map(|(&b, p)| (Real(probes.grid.s_of_bin(b)), Real(p.max().max(1.0))))
            .collect();
        let residual = probes
            .samples
            .iter()
            .map(|s| {
                let n = r.plateaus.get(&s.s_bin).map_or(1.0, |p| p.max().max(1.0));
                (s.ratio - n * (-r.nu * s.lag()).exp()).max(0.0)
            })
            .fold(0.0, f64::max);
        NonuniformDecayFit {
            nu: r.nu,
            n_of_s,
            residual,
        }
    });
    (fit, ladder)
}

fn echo(cfg: &PanelConfig, probes: &ProbeSet, alpha: Option<f64>) -> ConfigEcho {
    cfg.echo(probes.grid.anchor_max, probes.grid.lag_max, alpha)
}

pub fn test_fit_exp_nu(
    probes: &ProbeSet,
    cfg: &PanelConfig,
) -> (CriterionReport, Option<NonuniformDecayFit>) {
    let mut r = CriterionReport::new(CriterionId::FitExpNu, echo(cfg, probes, None));
    if probes.grid.lag_max < MIN_FIT_HORIZON {
        return (r.inconclusive("thin grid: lag horizon too short"), None);
    }
    let (fit, ladder) = fit_nonuniform_decay(probes, cfg.ncap_nonuniform);
    r.table("nu_vs_max_N", ladder.iter().map(|l| (l.nu, l.worst())));
    r.evidence("N_cap", cfg.ncap_nonuniform);
    match fit {
        Some(f) => {
            r.evidence("nu", f.nu).evidence("residual", f.residual).evidence(
                "max_N",
                f.n_of_s.iter().map(|p| p.1 .0).fold(1.0, f64::max),
            );
            r.table("N_of_s", f.n_of_s.iter().map(|p| (p.0 .0, p.1 .0)));
            (r.pass(), Some(f))
        }
        None => (
            r.inconclusive("no ladder rate keeps every N(s) within the cap on a sustained plateau"),
            None,
        ),
    }
}

/// Normalized majorant `g(h) = max_s ghat_s(h) / M(s)` with
/// `M(s) = max_h ghat_s(h)`, made nonincreasing by a running maximum from the
/// right.
pub fn test_decaying_majorant(sys: &System, probes: &ProbeSet, cfg: &PanelConfig) -> CriterionReport {
    let mut r = CriterionReport::new(CriterionId::Majorant, echo(cfg, probes, None));
    let bins = probes.grid.lag_bins() + 1;
    let s_bins = probes.samples.iter().map(|s| s.s_bin + 1).max().unwrap_or(0);
    let mut ghat = vec![vec![(0.0f64, usize::MAX); bins]; s_bins];
    for (i, s) in probes.samples.iter().enumerate() {
        let cell = &mut ghat[s.s_bin][s.lag_bin];
        if cell.1 == usize::MAX || s.ratio > cell.0 {
            *cell = (s.ratio, i);
        }
    }
    let mut gstar = vec![(0.0f64, usize::MAX); bins];
    for row in &ghat {
        let m = row.iter().map(|c| c.0).fold(0.0, f64::max);
        if m == 0.0 {
            continue;
        }
        for (h, c) in row.iter().enumerate() {
            if c.1 == usize::MAX {
                continue;
            }
            let g = c.0 / m;
            if gstar[h].1 == usize::MAX || g > gstar[h].0 {
                gstar[h] = (g, c.1);
            }
        }
    }
    let filled: Vec<usize> = (0..bins).filter(|&h| gstar[h].1 != usize::MAX).collect();
    let Some(&last) = filled.last() else {
        return r.inconclusive("no probes");
    };
    r.table("g_star", filled.iter().map(|&h| (probes.grid.lag_of_bin(h), gstar[h].0)));
    let mut cleaned = gstar.clone();
    for h in (0..bins.saturating_sub(1)).rev() {
        if cleaned[h + 1].0 > cleaned[h].0 {
            cleaned[h] = cleaned[h + 1];
        }
    }
    let h_m = probes.grid.lag_of_bin(last);
    let g1 = cleaned[filled[0]].0;
    let gm = cleaned[last];
    r.evidence("h_m", h_m)
        .evidence("g_h1", g1)
        .evidence("g_hm", gm.0)
        .evidence("threshold", MAJORANT_DROP * g1);
    if h_m < MIN_WINDOW - 1e-9 {
        return r.inconclusive(format!("window {h_m} shorter than {MIN_WINDOW}"));
    }
    if gm.0 <= MAJORANT_DROP * g1 {
        r.pass()
    } else {
        let s = &probes.samples[gm.1];
        r.fail(s.witness(sys, "normalized majorant does not decay by the required factor", gm.0))
    }
}

/// `alpha` for the weighted tests: the configured value, else half the
/// fitted rate, else [`DEFAULT_ALPHA`].
pub fn choose_alpha(cfg: &PanelConfig, fit: Option<&NonuniformDecayFit>) -> f64 {
    cfg.alpha
        .unwrap_or_else(|| fit.map_or(DEFAULT_ALPHA, |f| f.nu / 2.0))
}

pub fn test_datko_nonuniform(
    sys: &System,
    form: Form,
    time: Time,
    alpha: f64,
    cfg: &PanelConfig,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let id = match (form, time) {
        (Form::Vector, Time::Continuous) => CriterionId::DatkoVNu,
        (Form::Operator, _) => CriterionId::DatkoOpNu,
        (Form::Vector, Time::Discrete) => CriterionId::DatkoDNu,
    };
    let mut r = CriterionReport::new(id, echo(cfg, probes, Some(alpha)));
    r.evidence("alpha", alpha);
    let weighted = sys.shift_cocycle(-alpha);
    let mut anchors = integer_anchors(probes.grid.anchor_max, cfg.tmax);
    if form == Form::Operator {
        // The threshold R(t0) vanishes at t0 = 0.
        anchors.retain(|&t| t >= 1.0);
        r.note("threshold R(t0) evaluated literally at each anchor");
        let tails = datko_tails(
            &weighted,
            cfg,
            form,
            time,
            DiscreteStart::At,
            &anchors,
            10.0 * cfg.ncap_nonuniform,
        )?;
        r.table("tail_by_t0", tails.iter().map(|t| (t.t0, t.value)));
        let bad = tails
            .iter()
            .find(|t| !t.converged || t.value > cfg.gauge.eval(t.t0));
        return Ok(match bad {
            None if !tails.is_empty() => r.pass(),
            None => r.inconclusive("no anchors"),
            Some(t) => {
                let threshold = cfg.gauge.eval(t.t0);
                r.evidence("threshold", threshold);
                r.fail(t.witness(sys, "weighted operator tail exceeds R(t0)"))
            }
        });
    }
    let tails = datko_tails(
        &weighted,
        cfg,
        form,
        time,
        DiscreteStart::At,
        &anchors,
        10.0 * cfg.ncap_nonuniform,
    )?;
    Ok(datko_verdict(r, sys, &tails, cfg.ncap_nonuniform))
}

pub fn test_barbashin_nonuniform(
    sys: &System,
    time: Time,
    alpha: f64,
    cfg: &PanelConfig,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let id = match time {
        Time::Continuous => CriterionId::BarbashinNu,
        Time::Discrete => CriterionId::BarbashinDNu,
    };
    let mut r = CriterionReport::new(id, echo(cfg, probes, Some(alpha)));
    r.evidence("alpha", alpha).evidence("threshold", cfg.ncap_nonuniform);
    let weighted = sys.shift_cocycle(-alpha);
    let anchors = integer_anchors(probes.grid.anchor_max, cfg.tmax);
    let series = barbashin_all(
        &weighted,
        cfg,
        Form::Vector,
        time,
        DiscreteSum::DualAlongOrbit,
        &anchors,
        10.0 * cfg.ncap_nonuniform,
    )?;
    let mut by_t0: Vec<(f64, f64)> = Vec::new();
    let mut worst = None;
    for b in series.iter().flatten() {
        match by_t0.last_mut() {
            Some((t0, m)) if *t0 == b.t0 => *m = m.max(b.value),
            _ => by_t0.push((b.t0, b.value)),
        }
        if worst.map_or(true, |w: &crate::integrals::BarbashinValue| b.value > w.value) {
            worst = Some(b);
        }
    }
    r.table("N_by_t0", by_t0);
    let Some(w) = worst else {
        return Ok(r.inconclusive("no probes"));
    };
    r.evidence("sup", w.value);
    Ok(if w.value <= cfg.ncap_nonuniform {
        r.pass()
    } else {
        r.fail(w.witness(sys, "weighted Barbashin integral exceeds the nonuniform cap"))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonuniformOutcome {
    Es,
    NotEs,
    Inconclusive,
    NotRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonuniformPanel {
    pub outcome: NonuniformOutcome,
    /// Every s-bin keeps a bounded, non-growing ratio (`nu = 0` plateau).
    pub stable: bool,
    pub alpha: f64,
    pub growth: GrowthEnvelope,
    pub reports: Vec<CriterionReport>,
    pub discrepancies: Vec<String>,
}

impl NonuniformPanel {
    pub fn report(&self, id: CriterionId) -> Option<&CriterionReport> {
        self.reports.iter().find(|r| r.criterion_id == id)
    }
}

pub fn run_nonuniform_panel(sys: &System, cfg: &PanelConfig) -> Result<NonuniformPanel> {
    let probes = ProbeSet::collect(sys, ProbeGrid::nonuniform(sys, cfg))?;
    let growth = fit_nonuniform(&probes, cfg.ncap_nonuniform, cfg.omega_const);
    let (fit_report, fit) = test_fit_exp_nu(&probes, cfg);
    let alpha = choose_alpha(cfg, fit.as_ref());
    let stable = {
        let plateaus = weighted_plateaus(&probes.samples, 0.0, probes.grid.lag_max / 2.0, true);
        !plateaus.is_empty()
            && plateaus
                .values()
                .all(|p| p.max() <= cfg.ncap_nonuniform && p.sustained())
    };
    let mut reports = Vec::new();
    for id in CriterionId::NONUNIFORM {
        if !cfg.wants(id) {
            continue;
        }
        let r = match id {
            CriterionId::FitExpNu => Ok(fit_report.clone()),
            CriterionId::Majorant => Ok(test_decaying_majorant(sys, &probes, cfg)),
            CriterionId::DatkoVNu => {
                test_datko_nonuniform(sys, Form::Vector, Time::Continuous, alpha, cfg, &probes)
            }
            CriterionId::DatkoOpNu => {
                test_datko_nonuniform(sys, Form::Operator, Time::Continuous, alpha, cfg, &probes)
            }
            CriterionId::DatkoDNu => {
                test_datko_nonuniform(sys, Form::Vector, Time::Discrete, alpha, cfg, &probes)
            }
            CriterionId::BarbashinNu => {
                test_barbashin_nonuniform(sys, Time::Continuous, alpha, cfg, &probes)
            }
            CriterionId::BarbashinDNu => {
                test_barbashin_nonuniform(sys, Time::Discrete, alpha, cfg, &probes)
            }
            _ => unreachable!("nonuniform ids only"),
        };
        reports.push(r.unwrap_or_else(|e| {
            CriterionReport::new(id, echo(cfg, &probes, Some(alpha)))
                .inconclusive(format!("error: {e}"))
        }));
    }
    let (outcome, discrepancies) = nonuniform_outcome(&reports);
    Ok(NonuniformPanel {
        outcome,
        stable,
        alpha,
        growth: growth.envelope,
        reports,
        discrepancies,
    })
}

/// Advisory criteria are reported but never enter the outcome.
pub fn nonuniform_outcome(reports: &[CriterionReport]) -> (NonuniformOutcome, Vec<String>) {
    let deciding: Vec<&CriterionReport> = reports.iter().filter(|r| !r.advisory).collect();
    if deciding.is_empty() {
        return (NonuniformOutcome::NotRun, Vec::new());
    }
    let passes: Vec<&str> = deciding.iter().filter(|r| r.passed()).map(|r| r.criterion_id.as_str()).collect();
    let fails: Vec<&str> = deciding.iter().filter(|r| r.failed()).map(|r| r.criterion_id.as_str()).collect();
    match (passes.is_empty(), fails.is_empty()) {
        (false, false) => (
            NonuniformOutcome::Inconclusive,
            vec![format!(
                "criteria disagree: pass [{}] vs fail [{}]",
                passes.join(", "),
                fails.join(", ")
            )],
        ),
        (false, true) => (NonuniformOutcome::Es, Vec::new()),
        (true, false) => (NonuniformOutcome::NotEs, Vec::new()),
        (true, true) => (NonuniformOutcome::Inconclusive, Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn tsint_is_exponentially_stable() {
        let sys = gallery::build("tsint", &Default::default()).unwrap();
        let p = run_nonuniform_panel(&sys, &PanelConfig::default()).unwrap();
        assert_eq!(p.outcome, NonuniformOutcome::Es, "{:#?}", p.reports);
        assert!(p.report(CriterionId::FitExpNu).unwrap().get("nu").unwrap() >= 1.0);
    }

    #[test]
    fn bounded_ratio_is_stable_but_not_es() {
        let sys = gallery::build("bounded_ratio", &Default::default()).unwrap();
        let p = run_nonuniform_panel(&sys, &PanelConfig::default()).unwrap();
        assert_eq!(p.outcome, NonuniformOutcome::NotEs);
        assert!(p.stable);
    }
}
