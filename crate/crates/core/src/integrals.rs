//! Datko tails and Barbashin integrals evaluated over probe families.
//!
//! Both panels share these engines; the nonuniform panel runs them on the
//! `e^{alpha (t-s)}`-weighted system.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_finite_with, integrate_tail_with, sum_tail, QuadConfig};
use crate::report::Witness;
use crate::system::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Vector,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Time {
    Continuous,
    Discrete,
}

/// Integer anchors `0, 1, ...` up to `anchor_max`, strictly below `tmax`.
pub fn integer_anchors(anchor_max: f64, tmax: f64) -> Vec<f64> {
    (0..=anchor_max.floor() as i64)
        .map(|k| k as f64)
        .filter(|&t| t < tmax)
        .collect()
}

/// One Datko tail: `int_{t0}^inf R(|Phi(s,t0,x)v|) ds` or its discrete or
/// operator-norm variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub t0: f64,
    pub state: usize,
    pub vector: Option<usize>,
    pub value: f64,
    pub converged: bool,
    pub horizon: f64,
    pub evaluations: usize,
    /// `R(|v|)` for the vector form, `R(1)` for the operator form.
    pub scale: f64,
}

impl Tail {
    pub fn ratio(&self) -> f64 {
        self.value / self.scale
    }

    pub fn witness(&self, sys: &System, description: impl Into<String>) -> Witness {
        let mut w = Witness::new(description, self.ratio())
            .at(Some(self.t0), Some(self.t0), Some(self.horizon))
            .state(sys.state_samples[self.state]);
        if let Some(v) = self.vector {
            w = w.vector(&sys.vector_samples[v]);
        }
        w
    }
}

/// Where a discrete tail starts relative to the integer anchor `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscreteStart {
    /// `k >= n + 1`
    After,
    /// `k >= n`
    At,
}

fn jobs(sys: &System, form: Form, anchors: &[f64]) -> Vec<(f64, usize, Option<usize>)> {
    let mut out = Vec::new();
    for &t0 in anchors {
        for x in 0..sys.state_samples.len() {
            match form {
                Form::Vector => {
                    out.extend((0..sys.vector_samples.len()).map(|v| (t0, x, Some(v))));
                }
                Form::Operator => out.push((t0, x, None)),
            }
        }
    }
    out
}

/// Runs the tails in parallel, in anchor/state/vector order. A tail whose
/// running value passes `abort_ratio * scale` stops unconverged; so does one
/// whose integrand overflows.
pub fn datko_tails(
    sys: &System,
    cfg: &PanelConfig,
    form: Form,
    time: Time,
    start: DiscreteStart,
    anchors: &[f64],
    abort_ratio: f64,
) -> Result<Vec<Tail>> {
    let gauge = &cfg.gauge;
    jobs(sys, form, anchors)
        .par_iter()
        .map(|&(t0, xi, vi)| {
            let x = &sys.state_samples[xi];
            let v = vi.map(|i| sys.vector_samples[i].as_slice());
            let scale = match v {
                Some(v) => gauge.eval(sys.vector_norm(v)),
                None => gauge.eval(1.0),
            };
            let size = |t: f64| -> Result<f64> {
                let n = match v {
                    Some(v) => sys.vector_norm(&sys.apply_cocycle(t, t0, x, v)?),
                    None => sys.operator_norm(t, t0, x)?,
                };
                Ok(gauge.eval(n))
            };
            let outcome = match time {
                Time::Continuous => {
                    let qc = QuadConfig {
                        tol: cfg.tol,
                        eval_cap: cfg.eval_cap,
                        abort_above: Some(abort_ratio * scale),
                    };
                    integrate_tail_with(size, t0, cfg.tmax, &sys.time_kinks(t0, cfg.tmax), &qc)
                }
                Time::Discrete => {
                    let n0 = t0.floor() as i64
                        + match start {
                            DiscreteStart::After => 1,
                            DiscreteStart::At => 0,
                        };
                    sum_tail(|k| size(k as f64), n0, cfg.tol, cfg.tmax.floor() as i64 + 1)
                }
            };
            let tail = |value, converged, horizon, evaluations| Tail {
                t0,
                state: xi,
                vector: vi,
                value,
                converged,
                horizon,
                evaluations,
                scale,
            };
            match outcome {
                Ok(r) => Ok(tail(r.value, r.converged, r.truncation_horizon, r.evaluations)),
                Err(Error::NonFinite { .. }) => Ok(tail(f64::INFINITY, false, cfg.tmax, 0)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Barbashin probe value at one final time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarbashinValue {
    pub t0: f64,
    pub t: f64,
    pub state: usize,
    /// Index into the dual samples; `None` for the operator form.
    pub dual: Option<usize>,
    pub value: f64,
}

impl BarbashinValue {
    pub fn witness(&self, sys: &System, description: impl Into<String>) -> Witness {
        let mut w = Witness::new(description, self.value)
            .at(Some(self.t0), None, Some(self.t))
            .state(sys.state_samples[self.state]);
        if let Some(d) = self.dual {
            w = w.vector(&sys.dual_samples[d]);
        }
        w
    }
}

/// Lags `t - t0` at which Barbashin integrals are evaluated.
pub const BARBASHIN_LAGS: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

pub fn barbashin_lags(t0: f64, tmax: f64, time: Time) -> Vec<f64> {
    let room = tmax - t0;
    let mut lags: Vec<f64> = BARBASHIN_LAGS
        .iter()
        .copied()
        .filter(|&l| l < room && (time == Time::Continuous || l.fract() == 0.0))
        .collect();
    let last = match time {
        Time::Continuous => room,
        Time::Discrete => room.floor(),
    };
    if last > 0.0 && lags.last().map_or(true, |&l| l < last) {
        lags.push(last);
    }
    lags
}

/// How the discrete Barbashin sum is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscreteSum {
    /// `sum_{k=n0}^{n} R(|Phi(n,k,x)|)` with `x` fixed.
    OperatorFixedState,
    /// `sum_{k=n}^{m} R(|Phi(m,k,phi(k,n,x))^* v*|)`.
    DualAlongOrbit,
}

/// One probe's Barbashin values at increasing lags. Evaluation stops once a
/// value exceeds `stop_above`.
pub fn barbashin_series(
    sys: &System,
    cfg: &PanelConfig,
    form: Form,
    time: Time,
    sum: DiscreteSum,
    t0: f64,
    state: usize,
    dual: Option<usize>,
    stop_above: f64,
) -> Result<Vec<BarbashinValue>> {
    let gauge = &cfg.gauge;
    let x0 = &sys.state_samples[state];
    let vstar = dual.map(|d| sys.dual_samples[d].as_slice());
    let integrand = |t: f64, s: f64| -> Result<f64> {
        let xs = sys.evolve(s, t0, x0)?;
        let n = match (form, vstar) {
            (Form::Vector, Some(w)) => sys.dual_norm(&sys.apply_adjoint(t, s, &xs, w)?),
            _ => sys.operator_norm(t, s, &xs)?,
        };
        Ok(gauge.eval(n))
    };
    let mut out = Vec::new();
    for lag in barbashin_lags(t0, cfg.tmax, time) {
        let t = t0 + lag;
        let value = match time {
            Time::Continuous => {
                let qc = QuadConfig {
                    tol: cfg.tol,
                    eval_cap: cfg.eval_cap,
                    abort_above: None,
                };
                integrate_finite_with(|s| integrand(t, s), t0, t, &sys.time_kinks(t0, t), &qc)
                    .map(|r| r.value)
            }
            Time::Discrete => (t0 as i64..=t as i64).try_fold(0.0, |acc, k| {
                let term = match sum {
                    DiscreteSum::OperatorFixedState => {
                        gauge.eval(sys.operator_norm(t, k as f64, x0)?)
                    }
                    DiscreteSum::DualAlongOrbit => integrand(t, k as f64)?,
                };
                Ok::<f64, Error>(acc + term)
            }),
        };
        let value = match value {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(Error::NonFinite { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        out.push(BarbashinValue {
            t0,
            t,
            state,
            dual,
            value,
        });
        if value > stop_above {
            break;
        }
    }
    Ok(out)
}

/// Barbashin series for every (anchor, state, dual vector) in parallel.
pub fn barbashin_all(
    sys: &System,
    cfg: &PanelConfig,
    form: Form,
    time: Time,
    sum: DiscreteSum,
    anchors: &[f64],
    stop_above: f64,
) -> Result<Vec<Vec<BarbashinValue>>> {
    let mut probes = Vec::new();
    for &t0 in anchors {
        for x in 0..sys.state_samples.len() {
            match (form, time, sum) {
                (Form::Vector, _, _) | (_, Time::Discrete, DiscreteSum::DualAlongOrbit) => {
                    probes.extend((0..sys.dual_samples.len()).map(|d| (t0, x, Some(d))));
                }
                _ => probes.push((t0, x, None)),
            }
        }
    }
    probes
        .par_iter()
        .map(|&(t0, x, d)| barbashin_series(sys, cfg, form, time, sum, t0, x, d, stop_above))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn decaying_exponential_tail_is_one() {
        let sys = gallery::build("shift-metric-demo", &Default::default()).unwrap();
        let cfg = PanelConfig::default();
        let tails = datko_tails(
            &sys,
            &cfg,
            Form::Vector,
            Time::Continuous,
            DiscreteStart::After,
            &[0.0],
            1e4,
        )
        .unwrap();
        for t in tails {
            assert!(t.converged);
            assert!((t.ratio() - 1.0).abs() < 1e-6, "{}", t.ratio());
        }
    }

    #[test]
    fn barbashin_scalar_closed_form() {
        let sys = gallery::build("shift-metric-demo", &Default::default()).unwrap();
        let cfg = PanelConfig::default();
        let series = barbashin_series(
            &sys,
            &cfg,
            Form::Vector,
            Time::Continuous,
            DiscreteSum::OperatorFixedState,
            0.0,
            0,
            Some(0),
            f64::INFINITY,
        )
        .unwrap();
        let at10 = series.iter().find(|b| b.t == 16.0).unwrap();
        assert!((at10.value - (1.0 - (-16.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn lags_end_at_horizon() {
        assert_eq!(barbashin_lags(95.0, 100.0, Time::Continuous), vec![0.5, 1.0, 2.0, 4.0, 5.0]);
        assert_eq!(barbashin_lags(0.0, 100.0, Time::Discrete).last(), Some(&100.0));
        assert_eq!(barbashin_lags(99.5, 100.0, Time::Discrete), Vec::<f64>::new());
    }
}
