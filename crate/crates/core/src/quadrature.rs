//! Adaptive Simpson integration over finite intervals, blockwise tail
//! integration for improper integrals, and tail summation of series.
//!
//! All routines are sequential and deterministic: the same inputs give
//! bit-identical results.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_EVAL_CAP: usize = 1_000_000;
const TAIL_BLOCK: f64 = 1.0;
const MAX_DEPTH: u32 = 48;
const MIN_DEPTH: u32 = 2;
const SUM_QUIET_TERMS: usize = 3;
/// Relative accuracy floor for a subinterval, so integrands of very large
/// magnitude do not chase an unreachable absolute tolerance.
const REL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub truncation_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub tol: f64,
    pub eval_cap: usize,
    /// Tail integration gives up (unconverged) once the running value
    /// exceeds this.
    pub abort_above: Option<f64>,
}

impl QuadConfig {
    pub fn new(tol: f64) -> Self {
        QuadConfig {
            tol,
            eval_cap: DEFAULT_EVAL_CAP,
            abort_above: None,
        }
    }
}

struct Simpson<'a, F> {
    f: &'a F,
    evaluations: usize,
    cap: usize,
    error: f64,
    hit_depth_limit: bool,
}

impl<'a, F: Fn(f64) -> Result<f64>> Simpson<'a, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        if self.evaluations >= self.cap {
            return Err(Error::BudgetExceeded { cap: self.cap });
        }
        self.evaluations += 1;
        let y = (self.f)(x)?;
        if !y.is_finite() {
            return Err(Error::non_finite(format!("integrand at {x}")));
        }
        Ok(y)
    }

    fn interval(&mut self, a: f64, b: f64, tol: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let fa = self.eval(a)?;
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        let fb = self.eval(b)?;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.refine(a, b, fa, fm, fb, whole, tol, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let target = tol.max(REL_FLOOR * (left + right).abs());
        let settled = depth >= MIN_DEPTH && delta.abs() <= 15.0 * target;
        if settled || depth >= MAX_DEPTH || m <= a || b <= m {
            if !settled {
                self.hit_depth_limit = true;
            }
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        let l = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

/// Cut points of `[a, b]`: unit steps from `a` merged with interior breaks.
fn pieces(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut k = 1.0;
    while a + k < b {
        pts.push(a + k);
        k += 1.0;
    }
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    pts
}

/// `int_a^b f` to absolute tolerance `tol`.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_finite_with(f, a, b, &[], &QuadConfig::new(tol))
}

/// As [`integrate_finite`], also splitting at the given kink locations.
pub fn integrate_finite_with<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(Error::InvalidParams(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    let mut s = Simpson {
        f: &f,
        evaluations: 0,
        cap: cfg.eval_cap,
        error: 0.0,
        hit_depth_limit: false,
    };
    let span = b - a;
    let mut value = 0.0;
    if span > 0.0 {
        for w in pieces(a, b, breaks).windows(2) {
            let share = cfg.tol * (w[1] - w[0]) / span;
            value += s.interval(w[0], w[1], share)?;
        }
    }
    Ok(IntegralResult {
        value,
        abs_error_estimate: s.error,
        converged: s.error <= cfg.tol && !s.hit_depth_limit,
        evaluations: s.evaluations,
        truncation_horizon: b,
    })
}

/// `int_a^inf f` by unit blocks, stopping once a block contributes less than
/// `tol / 10`, or at `horizon_cap` with `converged = false`.
pub fn integrate_tail<F>(f: F, a: f64, tol: f64, horizon_cap: f64) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_tail_with(f, a, horizon_cap, &[], &QuadConfig::new(tol))
}

pub fn integrate_tail_with<F>(
    f: F,
    a: f64,
    horizon_cap: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(horizon_cap > a) {
        return Err(Error::InvalidParams(format!(
            "tail horizon {horizon_cap} must exceed start {a}"
        )));
    }
    let mut s = Simpson {
        f: &f,
        evaluations: 0,
        cap: cfg.eval_cap,
        error: 0.0,
        hit_depth_limit: false,
    };
    // Per-unit-length share so the summed block errors stay within tol.
    let density = cfg.tol / (horizon_cap - a);
    let mut value = 0.0;
    let mut lo = a;
    while lo < horizon_cap {
        let hi = (lo + TAIL_BLOCK).min(horizon_cap);
        let mut block = 0.0;
        for w in pieces(lo, hi, breaks).windows(2) {
            block += s.interval(w[0], w[1], density * (w[1] - w[0]))?;
        }
        value += block;
        if cfg.abort_above.is_some_and(|cap| value > cap) {
            return Ok(IntegralResult {
                value,
                abs_error_estimate: s.error,
                converged: false,
                evaluations: s.evaluations,
                truncation_horizon: hi,
            });
        }
        if block.abs() < cfg.tol / 10.0 {
            return Ok(IntegralResult {
                value,
                abs_error_estimate: s.error,
                converged: s.error <= cfg.tol,
                evaluations: s.evaluations,
                truncation_horizon: hi,
            });
        }
        lo = hi;
    }
    Ok(IntegralResult {
        value,
        abs_error_estimate: s.error,
        converged: false,
        evaluations: s.evaluations,
        truncation_horizon: horizon_cap,
    })
}

/// `sum_{k >= n0} f(k)` over `n0 <= k < cap`, converged once three
/// consecutive terms fall below `tol / 10` in magnitude.
pub fn sum_tail<F>(f: F, n0: i64, tol: f64, cap: i64) -> Result<IntegralResult>
where
    F: Fn(i64) -> Result<f64>,
{
    if cap <= n0 {
        return Err(Error::InvalidParams(format!(
            "series cap {cap} must exceed start index {n0}"
        )));
    }
    let mut value = 0.0;
    let mut quiet = 0;
    let mut evaluations = 0;
    for k in n0..cap {
        let term = f(k)?;
        evaluations += 1;
        if !term.is_finite() {
            return Err(Error::non_finite(format!("series term {k}")));
        }
        value += term;
        if term.abs() < tol / 10.0 {
            quiet += 1;
            if quiet == SUM_QUIET_TERMS {
                return Ok(IntegralResult {
                    value,
                    abs_error_estimate: 0.0,
                    converged: true,
                    evaluations,
                    truncation_horizon: (k + 1) as f64,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Ok(IntegralResult {
        value,
        abs_error_estimate: f64::INFINITY,
        converged: false,
        evaluations,
        truncation_horizon: cap as f64,
    })
}

/// Plain finite sum `sum_{k=lo}^{hi} f(k)`.
pub fn sum_range<F>(f: F, lo: i64, hi: i64) -> Result<f64>
where
    F: Fn(i64) -> Result<f64>,
{
    let mut acc = 0.0;
    for k in lo..=hi {
        let term = f(k)?;
        if !term.is_finite() {
            return Err(Error::non_finite(format!("series term {k}")));
        }
        acc += term;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = integrate_finite(ok(|_| 1.0), 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn truncated_exponential() {
        let r = integrate_finite(ok(|t: f64| (-t).exp()), 0.0, 20.0, 1e-8).unwrap();
        assert!((r.value - (1.0 - (-20.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn sine_half_period() {
        let r = integrate_finite(ok(f64::sin), 0.0, std::f64::consts::PI, 1e-8).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn tail_of_exponential() {
        let r = integrate_tail(ok(|s: f64| (-s).exp()), 0.0, 1e-6, 100.0).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn zero_tail_converges_immediately() {
        let r = integrate_tail(ok(|_| 0.0), 0.0, 1e-6, 100.0).unwrap();
        assert!(r.converged);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.truncation_horizon, 1.0);
    }

    #[test]
    fn constant_tail_diverges() {
        let r = integrate_tail(ok(|_| 0.6), 0.0, 1e-6, 100.0).unwrap();
        assert!(!r.converged);
        assert!((r.value - 60.0).abs() < 1e-9);
    }

    #[test]
    fn geometric_and_harmonic_series() {
        let g = sum_tail(|k| Ok((-(k as f64)).exp()), 0, 1e-6, 10_000).unwrap();
        assert!(g.converged);
        assert!((g.value - 1.0 / (1.0 - (-1.0f64).exp())).abs() <= 1e-6);
        let h = sum_tail(|k| Ok(1.0 / (k as f64 + 1.0)), 0, 1e-6, 10_000).unwrap();
        assert!(!h.converged);
        assert!((h.value - 9.787606036).abs() < 1e-6);
        let z = sum_tail(|_| Ok(0.0), 0, 1e-6, 100).unwrap();
        assert!(z.converged && z.value == 0.0);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = integrate_finite(ok(|t: f64| 1.0 / t), 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = QuadConfig {
            tol: 1e-14,
            eval_cap: 100,
            abort_above: None,
        };
        let r = integrate_finite_with(ok(|t: f64| (50.0 * t).sin()), 0.0, 10.0, &[], &cfg);
        assert!(matches!(r, Err(Error::BudgetExceeded { cap: 100 })));
    }

    #[test]
    fn abort_stops_divergent_tail() {
        let cfg = QuadConfig {
            abort_above: Some(10.0),
            ..QuadConfig::new(1e-6)
        };
        let r = integrate_tail_with(ok(|s: f64| s.exp()), 0.0, 100.0, &[], &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.value > 10.0 && r.truncation_horizon < 5.0);
    }

    #[test]
    fn large_magnitudes_use_relative_floor() {
        let r = integrate_finite(ok(|s: f64| (100.0 * s).exp()), 0.0, 3.0, 1e-6).unwrap();
        let exact = ((300.0f64).exp() - 1.0) / 100.0;
        assert!(((r.value - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn breakpoints_capture_narrow_dip() {
        // A 1e-6 wide notch that plain bisection would step over.
        let notch = |t: f64| {
            if (t - 0.3).abs() < 1e-6 {
                1.0 - (1.0 - (t - 0.3).abs() / 1e-6)
            } else {
                1.0
            }
        };
        let cfg = QuadConfig::new(1e-12);
        let r = integrate_finite_with(ok(notch), 0.0, 1.0, &[0.3 - 1e-6, 0.3, 0.3 + 1e-6], &cfg)
            .unwrap();
        assert!((r.value - (1.0 - 1e-6)).abs() < 1e-11);
    }
}
