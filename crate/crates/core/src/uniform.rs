//! Uniform-setting criteria: decay fits, the divergent minorant, half-decay,
//! Datko and Barbashin tests, and the panel that reconciles them.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::{Error, Result};
use crate::growth::{fit_uniform, GrowthEnvelope, GrowthFit};
use crate::integrals::{
    barbashin_all, datko_tails, integer_anchors, BarbashinValue, DiscreteStart, DiscreteSum, Form,
    Tail, Time,
};
use crate::probe::{best_rung, scan_ladder, LadderRung, ProbeGrid, ProbeSet, MIN_FIT_HORIZON};
use crate::report::{CriterionId, CriterionReport, Verdict, Witness};
use crate::system::System;

/// `f(h_m)` must exceed `f(h_1)` by this factor.
pub const DIVERGENCE_FACTOR: f64 = 1e3;
pub const MIN_WINDOW: f64 = 10.0;
pub const HALF: f64 = 0.5;
const DELTA_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    #[serde(rename = "N")]
    pub n: f64,
    pub nu: f64,
    pub residual: f64,
}

/// Ladder fit of `|Phi(t)v| <= N e^{-nu (t-s)} |Phi(s)v|`; `None` when no
/// rate keeps `N` within `cap` on a sustained plateau.
pub fn fit_exponential_decay(probes: &ProbeSet, cap: f64) -> (Option<DecayFit>, Vec<LadderRung>) {
    let ladder = scan_ladder(&probes.samples, probes.grid.lag_max, cap, false);
    let fit = best_rung(&ladder).map(|r| {
        let n = r.worst().max(1.0);
        let residual = probes
            .samples
            .iter()
            .map(|s| (s.ratio - n * (-r.nu * s.lag()).exp()).max(0.0))
            .fold(0.0, f64::max);
        DecayFit {
            n,
            nu: r.nu,
            residual,
        }
    });
    (fit, ladder)
}

fn ladder_tables(report: &mut CriterionReport, ladder: &[LadderRung]) {
    report.table("nu_vs_N", ladder.iter().map(|r| (r.nu, r.worst())));
    report.table(
        "nu_vs_late_over_early",
        ladder.iter().map(|r| {
            let worst = r
                .plateaus
                .values()
                .map(|p| p.late / p.early)
                .fold(0.0, f64::max);
            (r.nu, worst)
        }),
    );
}

fn fit_report(
    id: CriterionId,
    probes: &ProbeSet,
    cfg: &PanelConfig,
) -> (CriterionReport, Option<DecayFit>) {
    let mut r = CriterionReport::new(id, echo(cfg, probes));
    if probes.degenerate > 0 {
        r.evidence("degenerate_probes", probes.degenerate as f64);
    }
    if probes.grid.lag_max < MIN_FIT_HORIZON {
        return (
            r.inconclusive(format!(
                "thin grid: lag horizon {} below {MIN_FIT_HORIZON}",
                probes.grid.lag_max
            )),
            None,
        );
    }
    let (fit, ladder) = fit_exponential_decay(probes, cfg.ncap);
    ladder_tables(&mut r, &ladder);
    r.evidence("N_cap", cfg.ncap);
    match fit {
        Some(f) => {
            r.evidence("N", f.n).evidence("nu", f.nu).evidence("residual", f.residual);
            (r.pass(), Some(f))
        }
        None => (
            r.inconclusive("no ladder rate keeps N within the cap on a sustained plateau"),
            None,
        ),
    }
}

fn echo(cfg: &PanelConfig, probes: &ProbeSet) -> crate::report::ConfigEcho {
    cfg.echo(probes.grid.anchor_max, probes.grid.lag_max, None)
}

pub fn test_fit_exp(probes: &ProbeSet, cfg: &PanelConfig) -> CriterionReport {
    fit_report(CriterionId::FitExp, probes, cfg).0
}

pub fn test_uniform_stability(sys: &System, probes: &ProbeSet, cfg: &PanelConfig) -> CriterionReport {
    let mut r = CriterionReport::new(CriterionId::UnifStab, echo(cfg, probes));
    let top = probes.max_ratio();
    let n = top.map_or(1.0, |s| s.ratio).max(1.0);
    r.evidence("N", n).evidence("N_cap", cfg.ncap);
    if n <= cfg.ncap {
        r.pass()
    } else {
        let s = top.expect("N > 1 needs a probe");
        r.fail(s.witness(sys, "ratio |Phi(t,t0,x)v| / |Phi(s,t0,x)v| exceeds N_cap", s.ratio))
    }
}

/// `f(h) = min |Phi(s)v| / |Phi(t)v|` per lag bin, made nondecreasing by a
/// running minimum from the right; passes when it grows by
/// [`DIVERGENCE_FACTOR`] over a window of at least [`MIN_WINDOW`].
pub fn test_divergent_minorant(sys: &System, probes: &ProbeSet, cfg: &PanelConfig) -> CriterionReport {
    let mut r = CriterionReport::new(CriterionId::Minorant, echo(cfg, probes));
    let bins = probes.grid.lag_bins() + 1;
    let mut fhat = vec![(f64::INFINITY, usize::MAX); bins];
    for (i, s) in probes.samples.iter().enumerate() {
        let inv = if s.ratio == 0.0 { f64::INFINITY } else { 1.0 / s.ratio };
        if inv < fhat[s.lag_bin].0 {
            fhat[s.lag_bin] = (inv, i);
        }
    }
    let filled: Vec<usize> = (0..bins).filter(|&b| fhat[b].1 != usize::MAX).collect();
    let Some(&last) = filled.last() else {
        return r.inconclusive("no probes");
    };
    let mut cleaned = fhat.clone();
    for b in (0..bins.saturating_sub(1)).rev() {
        if cleaned[b + 1].0 < cleaned[b].0 {
            cleaned[b] = cleaned[b + 1];
        }
    }
    r.table(
        "f_hat",
        filled.iter().map(|&b| (probes.grid.lag_of_bin(b), fhat[b].0)),
    );
    let h_m = probes.grid.lag_of_bin(last);
    let f1 = cleaned[filled[0]];
    let fm = cleaned[last];
    r.evidence("h_m", h_m)
        .evidence("f_h1", f1.0)
        .evidence("f_hm", fm.0)
        .evidence("threshold", DIVERGENCE_FACTOR * f1.0)
        .evidence("floor", 1.0 / cfg.ncap);
    if h_m < MIN_WINDOW - 1e-9 {
        return r.inconclusive(format!("window {h_m} shorter than {MIN_WINDOW}"));
    }
    let sample = |i: usize| &probes.samples[i];
    if f1.0 < 1.0 / cfg.ncap {
        let s = sample(f1.1);
        return r.fail(s.witness(sys, "minorant falls below 1/N_cap", f1.0));
    }
    if fm.0 >= DIVERGENCE_FACTOR * f1.0 {
        r.pass()
    } else {
        let s = sample(fm.1);
        r.fail(s.witness(sys, "minorant does not diverge over the window", fm.0))
    }
}

/// The probe that sets `M` in a refuted growth envelope.
fn growth_witness(sys: &System, growth: &GrowthFit, probes: &ProbeSet) -> Witness {
    let (m, omega) = match &growth.envelope {
        GrowthEnvelope::Uniform { m, omega, .. } => (m.0, omega.0),
        GrowthEnvelope::Nonuniform { .. } => (f64::INFINITY, 0.0),
    };
    match growth.witness_index.and_then(|i| probes.samples.get(i)) {
        Some(s) => s.witness(
            sys,
            format!("uniform exponential growth not established: M = {m:.6e} at omega = {omega}"),
            m,
        ),
        None => Witness::new("uniform exponential growth not established", m),
    }
}

/// A criterion whose hypothesis includes uniform exponential growth fails
/// when the probes refute it, since uniform exponential stability implies
/// uniform growth.
fn gate(
    mut report: CriterionReport,
    sys: &System,
    growth: &GrowthFit,
    probes: &ProbeSet,
) -> CriterionReport {
    if let GrowthEnvelope::Uniform { m, omega, dubious } = &growth.envelope {
        report.evidence("growth_M", m.0).evidence("growth_omega", omega.0);
        if *dubious {
            report.note("uniform exponential growth not established on the probes");
            if !report.failed() {
                let prior = format!("{:?}", report.verdict).to_lowercase();
                report.note(format!("verdict before growth gate: {prior}"));
                return report.fail(growth_witness(sys, growth, probes));
            }
        }
    }
    report
}

fn require_uniform(env: Option<&GrowthFit>) -> Result<&GrowthFit> {
    match env {
        Some(g) if matches!(g.envelope, GrowthEnvelope::Uniform { .. }) => Ok(g),
        _ => Err(Error::MissingGrowthEnvelope),
    }
}

/// Searches a uniform lag `Delta` with `|Phi(s+Delta, s, x)v| <= 1/2` for all
/// probed `s`, `x` and unit `v`.
pub fn test_half_decay(
    sys: &System,
    time: Time,
    cfg: &PanelConfig,
    growth: Option<&GrowthFit>,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let growth = require_uniform(growth)?;
    let id = match time {
        Time::Continuous => CriterionId::HalfDecay,
        Time::Discrete => CriterionId::HalfDecayD,
    };
    let mut r = CriterionReport::new(id, echo(cfg, probes));
    let (deltas, anchors): (Vec<f64>, Vec<f64>) = match time {
        Time::Continuous => {
            let count = ((cfg.delta_max - 1.0) / DELTA_STEP + 1e-9).floor() as usize;
            (
                (1..=count).map(|i| 1.0 + i as f64 * DELTA_STEP).collect(),
                probes.grid.anchors(),
            )
        }
        Time::Discrete => (
            (1..=cfg.delta_max.floor() as i64).map(|n| n as f64).collect(),
            integer_anchors(probes.grid.anchor_max, f64::INFINITY),
        ),
    };
    // (max norm, s, state, vector) per delta.
    let worst: Vec<(f64, f64, usize, Option<usize>)> = deltas
        .par_iter()
        .map(|&d| {
            let mut best = (0.0, 0.0, 0, None);
            for &s in &anchors {
                for (xi, x) in sys.state_samples.iter().enumerate() {
                    match time {
                        Time::Continuous => {
                            for (vi, v) in sys.vector_samples.iter().enumerate() {
                                let n = sys.vector_norm(&sys.apply_cocycle(s + d, s, x, v)?)
                                    / sys.vector_norm(v);
                                if n > best.0 {
                                    best = (n, s, xi, Some(vi));
                                }
                            }
                        }
                        Time::Discrete => {
                            let n = sys.operator_norm(s + d, s, x)?;
                            if n > best.0 {
                                best = (n, s, xi, None);
                            }
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    r.table("max_norm_by_delta", deltas.iter().zip(&worst).map(|(&d, w)| (d, w.0)));
    r.evidence("threshold", HALF);
    let r = match deltas.iter().zip(&worst).find(|(_, w)| w.0 <= HALF) {
        Some((&d, w)) => {
            r.evidence("delta", d).evidence("max_norm", w.0);
            r.pass()
        }
        None => {
            let (Some(&d), Some(w)) = (deltas.last(), worst.last()) else {
                return Ok(r.inconclusive("no admissible delta"));
            };
            r.evidence("max_norm", w.0);
            let mut wit = Witness::new(
                format!("|Phi(s+Delta,s,x)v| stays above 1/2 up to Delta = {d}"),
                w.0,
            )
            .at(None, Some(w.1), Some(w.1 + d))
            .state(sys.state_samples[w.2]);
            if let Some(v) = w.3 {
                wit = wit.vector(&sys.vector_samples[v]);
            }
            r.fail(wit)
        }
    };
    Ok(gate(r, sys, growth, probes))
}

/// Verdict over Datko tails: any unconverged tail fails; otherwise the
/// supremum of `tail / scale` is banded against `cap`.
pub(crate) fn datko_verdict(
    mut r: CriterionReport,
    sys: &System,
    tails: &[Tail],
    cap: f64,
) -> CriterionReport {
    r.evidence("threshold", cap).evidence("probes", tails.len() as f64);
    let mut by_t0: Vec<(f64, f64)> = Vec::new();
    for t in tails {
        match by_t0.last_mut() {
            Some((t0, m)) if *t0 == t.t0 => *m = m.max(t.ratio()),
            _ => by_t0.push((t.t0, t.ratio())),
        }
    }
    r.table("sup_ratio_by_t0", by_t0);
    r.evidence(
        "evaluations",
        tails.iter().map(|t| t.evaluations as f64).sum(),
    );
    let Some(worst) = tails.iter().max_by(|a, b| a.ratio().total_cmp(&b.ratio())) else {
        return r.inconclusive("no probes");
    };
    r.evidence("sup_ratio", worst.ratio());
    let divergent: Vec<&Tail> = tails.iter().filter(|t| !t.converged).collect();
    r.evidence("divergent", divergent.len() as f64);
    if let Some(d) = divergent
        .iter()
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
    {
        r.evidence("partial_at_horizon", d.value).evidence("horizon", d.horizon);
        return r.fail(d.witness(sys, "tail does not converge; value is partial / R(|v|)"));
    }
    let ratio = worst.ratio();
    if ratio <= cap {
        r.pass()
    } else if ratio <= 10.0 * cap {
        r.inconclusive("tail ratio inside the inconclusive band (N_cap, 10 N_cap]")
    } else {
        r.fail(worst.witness(sys, "tail / R(|v|) exceeds 10 N_cap"))
    }
}

pub fn test_datko(
    sys: &System,
    form: Form,
    time: Time,
    cfg: &PanelConfig,
    growth: Option<&GrowthFit>,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let growth = require_uniform(growth)?;
    let id = match (form, time) {
        (Form::Vector, Time::Continuous) => CriterionId::DatkoV,
        (Form::Operator, _) => CriterionId::DatkoOp,
        (Form::Vector, Time::Discrete) => CriterionId::DatkoD,
    };
    let r = CriterionReport::new(id, echo(cfg, probes));
    let anchors = integer_anchors(probes.grid.anchor_max, cfg.tmax);
    let tails = datko_tails(
        sys,
        cfg,
        form,
        time,
        DiscreteStart::After,
        &anchors,
        10.0 * cfg.ncap,
    )?;
    Ok(gate(datko_verdict(r, sys, &tails, cfg.ncap), sys, growth, probes))
}

/// Which Barbashin hypothesis was established first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    UniformStability,
    UniformGrowth,
    None,
}

fn barbashin_verdict(
    mut r: CriterionReport,
    sys: &System,
    series: &[Vec<BarbashinValue>],
    bound: f64,
    tmax: f64,
    tol: f64,
) -> CriterionReport {
    let mut sup: Option<&BarbashinValue> = None;
    let mut creep: Option<(f64, &BarbashinValue)> = None;
    for s in series {
        let Some(t0) = s.first().map(|b| b.t0) else {
            continue;
        };
        let split = t0 + (tmax - t0) / 2.0;
        let early = s.iter().filter(|b| b.t <= split).map(|b| b.value).fold(0.0, f64::max);
        for b in s {
            if sup.map_or(true, |m| b.value > m.value) {
                sup = Some(b);
            }
            if b.t > split && b.value > early * (1.0 + crate::probe::PLATEAU_SLACK) + tol {
                let excess = b.value / early.max(f64::MIN_POSITIVE);
                if creep.map_or(true, |(e, _)| excess > e) {
                    creep = Some((excess, b));
                }
            }
        }
    }
    r.evidence("bound", bound);
    let Some(sup) = sup else {
        return r.inconclusive("no probes with t > t0 below the horizon");
    };
    r.evidence("sup", sup.value);
    if sup.value > bound {
        return r.fail(sup.witness(sys, "Barbashin integral exceeds the bound"));
    }
    if let Some((excess, b)) = creep {
        r.evidence("late_over_early", excess);
        return r.fail(b.witness(sys, "Barbashin integral still growing over the second half"));
    }
    r.pass()
}

#[allow(clippy::too_many_arguments)]
pub fn test_barbashin(
    sys: &System,
    form: Form,
    time: Time,
    cfg: &PanelConfig,
    hypothesis: Hypothesis,
    growth: Option<&GrowthFit>,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let id = match (form, time) {
        (Form::Vector, Time::Continuous) => CriterionId::BarbashinV,
        (Form::Operator, Time::Continuous) => CriterionId::BarbashinOp,
        (_, Time::Discrete) => CriterionId::BarbashinD,
    };
    let mut r = CriterionReport::new(id, echo(cfg, probes));
    let anchors = integer_anchors(probes.grid.anchor_max, cfg.tmax);
    let (series, bound) = match time {
        Time::Continuous => {
            let bound = cfg.gauge.eval(cfg.ncap);
            let s = barbashin_all(
                sys,
                cfg,
                form,
                time,
                DiscreteSum::OperatorFixedState,
                &anchors,
                10.0 * bound,
            )?;
            (s, bound)
        }
        Time::Discrete => {
            let s = barbashin_all(
                sys,
                cfg,
                Form::Operator,
                time,
                DiscreteSum::OperatorFixedState,
                &anchors,
                10.0 * cfg.ncap,
            )?;
            (s, cfg.ncap)
        }
    };
    r.note(format!(
        "hypothesis: {}",
        match hypothesis {
            Hypothesis::UniformStability => "uniform stability",
            Hypothesis::UniformGrowth => "uniform exponential growth",
            Hypothesis::None => "none established",
        }
    ));
    let r = barbashin_verdict(r, sys, &series, bound, cfg.tmax, cfg.tol);
    Ok(match (hypothesis, time) {
        (Hypothesis::UniformStability, Time::Continuous) => r,
        _ => gate(r, sys, require_uniform(growth)?, probes),
    })
}

/// Decay fit restricted to integer times.
pub fn test_discrete_decay(
    sys: &System,
    cfg: &PanelConfig,
    growth: Option<&GrowthFit>,
    probes: &ProbeSet,
) -> Result<CriterionReport> {
    let growth = require_uniform(growth)?;
    let integer = ProbeSet::collect(sys, probes.grid.integer())?;
    let (mut r, _) = fit_report(CriterionId::DecayD, &integer, cfg);
    r.criterion_id = CriterionId::DecayD;
    Ok(gate(r, sys, growth, probes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformOutcome {
    Ues,
    UsNotUes,
    NotUs,
    Inconclusive,
    NotRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformPanel {
    pub outcome: UniformOutcome,
    pub growth: GrowthEnvelope,
    pub reports: Vec<CriterionReport>,
    pub discrepancies: Vec<String>,
}

impl UniformPanel {
    pub fn report(&self, id: CriterionId) -> Option<&CriterionReport> {
        self.reports.iter().find(|r| r.criterion_id == id)
    }
}

fn absorb(id: CriterionId, cfg: &PanelConfig, probes: &ProbeSet, r: Result<CriterionReport>) -> CriterionReport {
    r.unwrap_or_else(|e| {
        CriterionReport::new(id, cfg.echo(probes.grid.anchor_max, probes.grid.lag_max, None))
            .inconclusive(format!("error: {e}"))
    })
}

/// Collects the uniform probes, fits growth, and runs the requested uniform
/// criteria in fixed order.
pub fn run_uniform_panel(sys: &System, cfg: &PanelConfig) -> Result<UniformPanel> {
    let probes = ProbeSet::collect(sys, ProbeGrid::uniform(sys, cfg))?;
    let growth = fit_uniform(&probes, cfg.growth_cap);
    let stab = test_uniform_stability(sys, &probes, cfg);
    let hypothesis = if stab.passed() {
        Hypothesis::UniformStability
    } else if !growth.envelope.is_dubious() {
        Hypothesis::UniformGrowth
    } else {
        Hypothesis::None
    };
    let g = Some(&growth);
    let mut reports = Vec::new();
    for id in CriterionId::UNIFORM {
        if !cfg.wants(id) {
            continue;
        }
        let r = match id {
            CriterionId::FitExp => Ok(test_fit_exp(&probes, cfg)),
            CriterionId::UnifStab => Ok(stab.clone()),
            CriterionId::Minorant => Ok(test_divergent_minorant(sys, &probes, cfg)),
            CriterionId::HalfDecay => test_half_decay(sys, Time::Continuous, cfg, g, &probes),
            CriterionId::HalfDecayD => test_half_decay(sys, Time::Discrete, cfg, g, &probes),
            CriterionId::DatkoV => test_datko(sys, Form::Vector, Time::Continuous, cfg, g, &probes),
            CriterionId::DatkoOp => {
                test_datko(sys, Form::Operator, Time::Continuous, cfg, g, &probes)
            }
            CriterionId::DatkoD => test_datko(sys, Form::Vector, Time::Discrete, cfg, g, &probes),
            CriterionId::BarbashinV => {
                test_barbashin(sys, Form::Vector, Time::Continuous, cfg, hypothesis, g, &probes)
            }
            CriterionId::BarbashinOp => {
                test_barbashin(sys, Form::Operator, Time::Continuous, cfg, hypothesis, g, &probes)
            }
            CriterionId::BarbashinD => {
                test_barbashin(sys, Form::Operator, Time::Discrete, cfg, hypothesis, g, &probes)
            }
            CriterionId::DecayD => test_discrete_decay(sys, cfg, g, &probes),
            _ => unreachable!("uniform ids only"),
        };
        reports.push(absorb(id, cfg, &probes, r));
    }
    let (outcome, discrepancies) = uniform_outcome(&reports, &stab);
    Ok(UniformPanel {
        outcome,
        growth: growth.envelope,
        reports,
        discrepancies,
    })
}

/// Reconciles the uniform reports. Every criterion other than `unif-stab`
/// characterizes uniform exponential stability, so passes and fails must not
/// coexist.
pub fn uniform_outcome(
    reports: &[CriterionReport],
    stab: &CriterionReport,
) -> (UniformOutcome, Vec<String>) {
    let ues: Vec<&CriterionReport> = reports
        .iter()
        .filter(|r| r.criterion_id != CriterionId::UnifStab)
        .collect();
    if reports.is_empty() {
        return (UniformOutcome::NotRun, Vec::new());
    }
    let passes: Vec<&str> = ues.iter().filter(|r| r.passed()).map(|r| r.criterion_id.as_str()).collect();
    let fails: Vec<&str> = ues.iter().filter(|r| r.failed()).map(|r| r.criterion_id.as_str()).collect();
    if !passes.is_empty() && !fails.is_empty() {
        return (
            UniformOutcome::Inconclusive,
            vec![format!(
                "criteria disagree: pass [{}] vs fail [{}]",
                passes.join(", "),
                fails.join(", ")
            )],
        );
    }
    let outcome = if !passes.is_empty() {
        UniformOutcome::Ues
    } else if !fails.is_empty() || ues.is_empty() {
        match stab.verdict {
            Verdict::Pass => UniformOutcome::UsNotUes,
            Verdict::Fail => UniformOutcome::NotUs,
            Verdict::Inconclusive => UniformOutcome::Inconclusive,
        }
    } else {
        UniformOutcome::Inconclusive
    };
    (outcome, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    fn panel(name: &str) -> UniformPanel {
        run_uniform_panel(&gallery::build(name, &Default::default()).unwrap(), &PanelConfig::default())
            .unwrap()
    }

    #[test]
    fn exponential_is_ues_everywhere() {
        let p = panel("shift-metric-demo");
        for r in &p.reports {
            assert!(r.passed(), "{} {:?} {:?}", r.criterion_id, r.verdict, r.notes);
        }
        assert_eq!(p.outcome, UniformOutcome::Ues);
    }

    #[test]
    fn bounded_ratio_is_us_not_ues() {
        let p = panel("bounded_ratio");
        assert_eq!(p.outcome, UniformOutcome::UsNotUes, "{:#?}", p.discrepancies);
        assert!(p.report(CriterionId::DatkoV).unwrap().failed());
    }
}
