use proptest::prelude::*;

use skewstab::config::PanelConfig;
use skewstab::gallery::{self, function_space_distance, lorentzian};
use skewstab::gauge::Gauge;
use skewstab::growth::{fit_uniform, verify_growth, GrowthEnvelope};
use skewstab::linalg::{pairing, NormKind};
use skewstab::probe::{ProbeGrid, ProbeSet};
use skewstab::quadrature::integrate_tail;
use skewstab::report::Real;
use skewstab::semiflow::StatePoint;
use skewstab::system::System;

fn system(i: usize) -> System {
    gallery::build(gallery::NAMES[i % gallery::NAMES.len()], &Default::default()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

prop_compose! {
    fn times()(t0 in 0.0f64..5.0, ds in 0.0f64..3.0, dt in 0.0f64..3.0) -> (f64, f64, f64) {
        (t0 + ds + dt, t0 + ds, t0)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cocycle_composes_along_orbits(which in 0usize..6, (t, s, t0) in times(), xi in 0usize..4) {
        let sys = system(which);
        let x0 = sys.state_samples[xi % sys.state_samples.len()];
        let xs = sys.evolve(s, t0, &x0).unwrap();
        let v = sys.vector_samples[0].clone();
        let direct = sys.apply_cocycle(t, t0, &x0, &v).unwrap();
        let inner = sys.apply_cocycle(s, t0, &x0, &v).unwrap();
        let split = sys.apply_cocycle(t, s, &xs, &inner).unwrap();
        for (a, b) in direct.iter().zip(&split) {
            prop_assert!(close(*a, *b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn adjoint_pairing(which in 0usize..6, (t, s, _t0) in times(), xi in 0usize..4,
                       v in prop::collection::vec(-2.0f64..2.0, 3),
                       w in prop::collection::vec(-2.0f64..2.0, 3)) {
        let sys = system(which);
        let d = sys.dim();
        let x = sys.state_samples[xi % sys.state_samples.len()];
        let (v, w) = (&v[..d], &w[..d]);
        let lhs = pairing(&sys.apply_adjoint(t, s, &x, w).unwrap(), v);
        let rhs = pairing(w, &sys.apply_cocycle(t, s, &x, v).unwrap());
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn operator_norm_bounds_samples(which in 0usize..6, (t, s, _t0) in times(), xi in 0usize..4) {
        let sys = system(which);
        let x = sys.state_samples[xi % sys.state_samples.len()];
        let op = sys.operator_norm(t, s, &x).unwrap();
        for v in &sys.vector_samples {
            let image = sys.vector_norm(&sys.apply_cocycle(t, s, &x, v).unwrap());
            prop_assert!(image <= op * sys.vector_norm(v) * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn diagonal_norm_equals_adjoint_dual_norm(which in 0usize..6, (t, s, _t0) in times(), xi in 0usize..4) {
        let sys = system(which);
        prop_assume!(sys.norm == NormKind::L1);
        let x = sys.state_samples[xi % sys.state_samples.len()];
        let m = sys.matrix(t, s, &x).unwrap();
        prop_assume!(m.is_diagonal());
        let op = sys.operator_norm(t, s, &x).unwrap();
        let adjoint = m.transpose().operator_norm(NormKind::Linf).unwrap();
        prop_assert!(close(op, adjoint, 1e-12));
    }

    #[test]
    fn shifts_compose(which in 0usize..6, a in -1.0f64..1.0, b in -1.0f64..1.0, (t, s, _t0) in times()) {
        let sys = system(which);
        let x = sys.state_samples[0];
        let twice = sys.shift_cocycle(a).shift_cocycle(b);
        let once = sys.shift_cocycle(a + b);
        let v = &sys.vector_samples[0];
        let p = twice.apply_cocycle(t, s, &x, v).unwrap();
        let q = once.apply_cocycle(t, s, &x, v).unwrap();
        for (p, q) in p.iter().zip(&q) {
            prop_assert!(close(*p, *q, 1e-12));
        }
    }

    #[test]
    fn gauges_are_monotone(a in 0.0f64..1e3, b in 0.0f64..1e3, p in 0.1f64..4.0, c in 0.1f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for g in [Gauge::Identity, Gauge::Power(p), Gauge::Saturating(c)] {
            prop_assert!(g.eval(lo) <= g.eval(hi));
            prop_assert_eq!(g.eval(0.0), 0.0);
        }
        prop_assert_eq!(Gauge::Power(1.0).eval(a), Gauge::Identity.eval(a));
    }

    #[test]
    fn partial_tails_grow_with_horizon(nu in -0.2f64..2.0, h1 in 1.0f64..30.0, extra in 0.0f64..30.0) {
        let f = |s: f64| Ok((-nu * s).exp() * (1.0 + s.sin().abs()));
        let a = integrate_tail(f, 0.0, 1e-8, h1).unwrap();
        let b = integrate_tail(f, 0.0, 1e-8, h1 + extra).unwrap();
        prop_assert!(b.value >= a.value - 1e-9 * a.value.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distance_is_a_metric(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let base = lorentzian(2.0, 1.0);
        let (x, y, z) = (StatePoint::Shift(x), StatePoint::Shift(y), StatePoint::Shift(z));
        let d = |a: &StatePoint, b: &StatePoint| function_space_distance(&base, a, b, 8);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-12);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
    }
}

#[test]
fn growth_ladder_is_monotone_and_self_verifying() {
    let cfg = PanelConfig::default();
    for name in gallery::NAMES {
        let sys = gallery::build(name, &Default::default()).unwrap();
        let probes = ProbeSet::collect(&sys, ProbeGrid::uniform(&sys, &cfg)).unwrap();
        let fit = fit_uniform(&probes, cfg.growth_cap);
        for pair in fit.ladder.windows(2) {
            assert!(pair[0].0 < pair[1].0);
            assert!(pair[1].1 <= pair[0].1, "{name}: {:?}", fit.ladder);
        }
        assert!(verify_growth(&sys, &fit.envelope, &probes).is_ok(), "{name}");
    }
}

#[test]
fn shifting_never_raises_the_growth_rate() {
    let cfg = PanelConfig::default();
    let omega = |env: &GrowthEnvelope| match env {
        GrowthEnvelope::Uniform { omega: Real(w), .. } => *w,
        _ => unreachable!(),
    };
    for name in gallery::NAMES {
        let sys = gallery::build(name, &Default::default()).unwrap();
        let grid = ProbeGrid::uniform(&sys, &cfg);
        let plain = fit_uniform(&ProbeSet::collect(&sys, grid.clone()).unwrap(), cfg.growth_cap);
        for alpha in [0.5, 1.0] {
            let shifted = sys.shift_cocycle(alpha);
            let fit = fit_uniform(&ProbeSet::collect(&shifted, grid.clone()).unwrap(), cfg.growth_cap);
            assert!(omega(&fit.envelope) <= omega(&plain.envelope), "{name} alpha {alpha}");
        }
    }
}
