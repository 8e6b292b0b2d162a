//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::collections::BTreeMap;
use std::process::Command;

use skewstab::axioms::check_axioms;
use skewstab::classify::classify;
use skewstab::config::PanelConfig;
use skewstab::gallery;
use skewstab::growth::{estimate_growth, Setting};
use skewstab::integrals::{Form, Time};
use skewstab::nonuniform::fit_nonuniform_decay;
use skewstab::probe::{ProbeGrid, ProbeSet};
use skewstab::quadrature::{integrate_finite, integrate_tail, sum_tail};
use skewstab::report::CriterionId;
use skewstab::semiflow::StatePoint;
use skewstab::system::{Classification, System};
use skewstab::uniform::{
    fit_exponential_decay, run_uniform_panel, test_datko, test_fit_exp, test_uniform_stability,
    UniformOutcome,
};

const AXIOM_TOL: f64 = 1e-9;
const AXIOM_PROBES: usize = 200;
const BOUND_TOL: f64 = 1e-9;
const GRID_PROBES: usize = 500;
const NODE_REL_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-6;
const DIVERGENCE_MULTIPLE: f64 = 50.0;
const TMAX: f64 = 100.0;
const SHIFT_LAW_TOL: f64 = 1e-12;

type Check = Result<String, String>;

fn build(name: &str, params: &[(&str, f64)]) -> System {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    gallery::build(name, &p).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn grid_pairs() -> Vec<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = (0..25)
        .flat_map(|i| (0..20).map(move |j| (0.24 * i as f64, 0.24 * i as f64 + 0.5 * j as f64)))
        .collect();
    assert_eq!(pairs.len(), GRID_PROBES);
    pairs
}

fn axiom_suite() -> Check {
    let mut worst: f64 = 0.0;
    for name in gallery::NAMES {
        let r = check_axioms(&build(name, &[]), AXIOM_PROBES, 0, AXIOM_TOL, &[]).map_err(|e| e.to_string())?;
        ensure(r.passed, format!("{name} deviates"))?;
        worst = worst
            .max(r.semiflow.max_composition_deviation)
            .max(r.cocycle.max_relative_deviation)
            .max(r.cocycle.max_identity_deviation);
    }
    Ok(format!("6 systems x {AXIOM_PROBES} probes, max deviation {worst:.1e}"))
}

fn scalar_decay_bound() -> Check {
    let sys = build("scalar_decay", &[("mu", 2.0), ("theta", 0.0)]);
    let x = StatePoint::Shift(0.0);
    for (s, t) in grid_pairs() {
        let n = sys.operator_norm(t, s, &x).map_err(|e| e.to_string())?;
        ensure(n <= (-(t - s)).exp() + BOUND_TOL, format!("bound broken at s={s} t={t}"))?;
    }
    let cfg = PanelConfig::default();
    let probes = ProbeSet::collect(&sys, ProbeGrid::uniform(&sys, &cfg)).map_err(|e| e.to_string())?;
    let fit = fit_exponential_decay(&probes, cfg.ncap).0.ok_or("no decay fit")?;
    ensure(fit.nu >= 1.0 && fit.n <= 1.0 + BOUND_TOL, format!("fit N={} nu={}", fit.n, fit.nu))?;
    Ok(format!("bound holds at {GRID_PROBES} probes; fit N={:.6} nu={}", fit.n, fit.nu))
}

fn bounded_ratio_separation() -> Check {
    let sys = build("bounded_ratio", &[]);
    let cfg = PanelConfig {
        tmax: TMAX,
        ..Default::default()
    };
    let probes = ProbeSet::collect(&sys, ProbeGrid::uniform(&sys, &cfg)).map_err(|e| e.to_string())?;
    let us = test_uniform_stability(&sys, &probes, &cfg);
    let n = us.get("N").unwrap();
    ensure(us.passed() && n <= 1.0 + BOUND_TOL, format!("unif-stab {:?} N={n}", us.verdict))?;
    let growth = estimate_growth(&sys, Setting::Uniform, &cfg).map_err(|e| e.to_string())?;
    let datko = test_datko(&sys, Form::Vector, Time::Continuous, &cfg, Some(&growth), &probes)
        .map_err(|e| e.to_string())?;
    ensure(datko.failed(), format!("datko-v {:?}", datko.verdict))?;
    let w = datko.witness.as_ref().ok_or("no witness")?;
    ensure(
        w.value.0 >= DIVERGENCE_MULTIPLE && datko.get("horizon") == Some(TMAX),
        format!("partial/R(|v|) = {} at {:?}", w.value.0, datko.get("horizon")),
    )?;
    ensure(fit_exponential_decay(&probes, cfg.ncap).0.is_none(), "decay fit should be absent")?;
    ensure(!test_fit_exp(&probes, &cfg).passed(), "fit-exp should not pass")?;
    Ok(format!("N={n}, Datko partial {:.1} x R(|v|) at T={TMAX}, fit inconclusive", w.value.0))
}

fn nonuniform_bounds() -> Check {
    let tsint = build("tsint", &[]);
    let x = tsint.state_samples[0];
    for (s, t) in grid_pairs() {
        let v = tsint.apply_cocycle(t, s, &x, &[1.0]).map_err(|e| e.to_string())?[0].abs();
        let bound = (2.0 * s).exp() * (-(t - s)).exp();
        ensure(v <= bound * (1.0 + BOUND_TOL), format!("tsint bound broken at s={s} t={t}"))?;
    }
    let spike = build("spike", &[]);
    let x = spike.state_samples[0];
    for n in 1..=3 {
        let n = n as f64;
        let gap = (-n * n).exp();
        let want = (2.0 * n - gap).exp();
        let got = spike.apply_cocycle(n + gap, n, &x, &[1.0]).map_err(|e| e.to_string())?[0];
        ensure(((got - want) / want).abs() <= NODE_REL_TOL, format!("node {n}: {got} vs {want}"))?;
    }
    let cfg = PanelConfig::default();
    let panel = run_uniform_panel(&spike, &cfg).map_err(|e| e.to_string())?;
    ensure(panel.outcome != UniformOutcome::Ues, "spike uniform panel returned UES")?;
    let probes =
        ProbeSet::collect(&spike, ProbeGrid::nonuniform(&spike, &cfg)).map_err(|e| e.to_string())?;
    let fit = fit_nonuniform_decay(&probes, cfg.ncap_nonuniform).0.ok_or("no nonuniform fit")?;
    ensure(fit.nu >= 1.0, format!("nonuniform nu = {}", fit.nu))?;
    Ok(format!(
        "tsint bound at {GRID_PROBES} probes; spike nodes exact; uniform panel {:?}; nu = {}",
        panel.outcome, fit.nu
    ))
}

fn quadrature_oracles() -> Check {
    let tail = integrate_tail(|s: f64| Ok((-s).exp()), 0.0, 1e-9, TMAX).map_err(|e| e.to_string())?;
    let series = sum_tail(|k| Ok((-(k as f64)).exp()), 0, 1e-10, 10_000).map_err(|e| e.to_string())?;
    let barbashin =
        integrate_finite(|s| Ok((-(10.0 - s)).exp()), 0.0, 10.0, 1e-9).map_err(|e| e.to_string())?;
    let errs = [
        (tail.value - 1.0).abs(),
        (series.value - 1.0 / (1.0 - (-1.0f64).exp())).abs(),
        (barbashin.value - (1.0 - (-10.0f64).exp())).abs(),
    ];
    ensure(errs.iter().all(|&e| e <= QUAD_TOL), format!("errors {errs:?}"))?;
    Ok(format!("errors {:.1e} {:.1e} {:.1e}", errs[0], errs[1], errs[2]))
}

fn criteria_equivalence() -> Check {
    let cfg = PanelConfig::default();
    let mut verdicts = Vec::new();
    for name in gallery::NAMES {
        let sys = build(name, &[]);
        let report = classify(&sys, &cfg).map_err(|e| e.to_string())?;
        ensure(
            report.exit_code() != 3,
            format!("{name}: {:?}", report.ground_truth_check.violations),
        )?;
        match sys.ground_truth {
            Some(Classification::Ues) => {
                for r in &report.uniform.reports {
                    ensure(r.passed(), format!("{name}: {} {:?}", r.criterion_id, r.verdict))?;
                }
            }
            Some(Classification::UsNotUes | Classification::EsNotUes) => {
                let d = report.uniform.report(CriterionId::DatkoV).ok_or("no datko-v")?;
                ensure(d.failed() && d.witness.is_some(), format!("{name}: datko-v {:?}", d.verdict))?;
            }
            _ => {}
        }
        verdicts.push(format!("{name}={}", report.verdict));
    }
    Ok(verdicts.join(" "))
}

fn discrete_continuous_agreement() -> Check {
    let cfg = PanelConfig::default();
    let mut cells = Vec::new();
    for name in gallery::NAMES {
        let panel = run_uniform_panel(&build(name, &[]), &cfg).map_err(|e| e.to_string())?;
        let cont = panel.report(CriterionId::FitExp).ok_or("no fit-exp")?.passed();
        let disc = panel.report(CriterionId::DecayD).ok_or("no decay-d")?.passed();
        ensure(cont == disc, format!("{name}: continuous {cont}, discrete {disc}"))?;
        cells.push(format!("{name}={}", if cont { "UES" } else { "not" }));
    }
    Ok(cells.join(" "))
}

fn shift_consistency() -> Check {
    let cfg = PanelConfig::default();
    let sys = build("shift-metric-demo", &[]);
    let mut fitted = Vec::new();
    for alpha in [0.5, 1.0] {
        let shifted = sys.shift_cocycle(alpha);
        let probes =
            ProbeSet::collect(&shifted, ProbeGrid::uniform(&shifted, &cfg)).map_err(|e| e.to_string())?;
        let nu = fit_exponential_decay(&probes, cfg.ncap).0.ok_or("no fit")?.nu;
        ensure((1.0 + alpha - 0.5..=8.0).contains(&nu), format!("alpha {alpha}: nu {nu}"))?;
        let law = shifted
            .check_cocycle_law(&shifted.random_law_probes(AXIOM_PROBES, 0))
            .map_err(|e| e.to_string())?;
        ensure(
            law.max_relative_deviation <= SHIFT_LAW_TOL && law.max_identity_deviation <= SHIFT_LAW_TOL,
            format!("alpha {alpha}: law deviation {}", law.max_relative_deviation),
        )?;
        let twice = sys.shift_cocycle(alpha / 2.0).shift_cocycle(alpha / 2.0);
        for p in shifted.random_law_probes(50, 1) {
            let a = shifted.apply_cocycle(p.t, p.s, &p.x, &p.v).map_err(|e| e.to_string())?;
            let b = twice.apply_cocycle(p.t, p.s, &p.x, &p.v).map_err(|e| e.to_string())?;
            for (a, b) in a.iter().zip(&b) {
                ensure((a - b).abs() <= SHIFT_LAW_TOL * a.abs().max(1.0), "shift composition")?;
            }
        }
        fitted.push(format!("alpha={alpha}: nu={nu}"));
    }
    Ok(fitted.join(", "))
}

fn determinism() -> Check {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_skewstab"))
            .args(["classify", "--system", "spike", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let strip = |bytes: &[u8]| -> Result<serde_json::Value, String> {
        let mut v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        v.as_object_mut().ok_or("not an object")?.remove("generated_at");
        Ok(v)
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.code() == Some(0), format!("exit {:?}", a.status.code()))?;
    let (x, y) = (strip(&a.stdout)?, strip(&b.stdout)?);
    let (x, y) = (serde_json::to_vec(&x).unwrap(), serde_json::to_vec(&y).unwrap());
    ensure(x == y, "outputs differ")?;
    Ok(format!("{} identical bytes", x.len()))
}

fn main() {
    let checks: [(&str, fn() -> Check); 9] = [
        ("axiom suite", axiom_suite),
        ("scalar decay bound and fit", scalar_decay_bound),
        ("bounded ratio separation", bounded_ratio_separation),
        ("nonuniform bounds", nonuniform_bounds),
        ("quadrature oracles", quadrature_oracles),
        ("criteria equivalence", criteria_equivalence),
        ("discrete/continuous agreement", discrete_continuous_agreement),
        ("shift consistency", shift_consistency),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
