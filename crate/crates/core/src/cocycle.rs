//! Evolution cocycles: matrix-valued maps `Phi(t, s, x)` over a semiflow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basefn::BaseFn;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::integrate_finite;
use crate::semiflow::StatePoint;

/// Tolerance for exponent integrals that lack a closed form.
pub const EXPONENT_QUAD_TOL: f64 = 1e-10;

pub trait Cocycle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `Phi(t, s, x)`; callers guarantee `t >= s >= 0`.
    fn matrix(&self, t: f64, s: f64, x: &StatePoint) -> Result<Matrix>;

    /// Absolute times in `(a, b)` where `t -> Phi(t, s, x)` or
    /// `s -> Phi(t, s, x)` has a kink.
    fn time_kinks(&self, _a: f64, _b: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// One additive piece of a diagonal entry's exponent, with `h = t - s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExpTerm {
    /// `rate * h`.
    Linear { rate: f64 },
    /// `coef * (t sin t - s sin s)`.
    SinProduct { coef: f64 },
    /// `coef * int_0^h f(theta + u) du` where `theta` is the state.
    ShiftIntegral {
        coef: f64,
        base: BaseFn,
        #[serde(default)]
        quadrature: bool,
    },
    /// `coef * (ln f(x + h) - ln f(x))`.
    StateLogRatio { coef: f64, base: BaseFn },
    /// `coef * (ln f(t) - ln f(s))`.
    TimeLogRatio { coef: f64, base: BaseFn },
    /// A fixed offset. Nonzero values break `Phi(t, t, x) = I`.
    Constant { value: f64 },
}

impl ExpTerm {
    pub fn validate(&self) -> Result<()> {
        match self {
            ExpTerm::ShiftIntegral { base, .. }
            | ExpTerm::StateLogRatio { base, .. }
            | ExpTerm::TimeLogRatio { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64, s: f64, x: &StatePoint) -> Result<f64> {
        let h = t - s;
        match *self {
            ExpTerm::Linear { rate } => Ok(rate * h),
            ExpTerm::SinProduct { coef } => Ok(coef * (t * t.sin() - s * s.sin())),
            ExpTerm::ShiftIntegral {
                coef,
                base,
                quadrature,
            } => {
                if h == 0.0 {
                    return Ok(0.0);
                }
                let theta = x.value();
                if theta == f64::INFINITY {
                    let l = base.limit().ok_or_else(|| {
                        Error::InvalidState("base function has no limit at +inf".into())
                    })?;
                    return Ok(coef * l * h);
                }
                let closed = if quadrature {
                    None
                } else {
                    base.antiderivative(theta + h)
                        .zip(base.antiderivative(theta))
                        .map(|(b, a)| b - a)
                };
                let integral = match closed {
                    Some(v) => v,
                    None => {
                        integrate_finite(|u| Ok(base.value(theta + u)), 0.0, h, EXPONENT_QUAD_TOL)?
                            .value
                    }
                };
                Ok(coef * integral)
            }
            ExpTerm::StateLogRatio { coef, base } => {
                if h == 0.0 {
                    return Ok(0.0);
                }
                let xv = x.value();
                if xv == f64::INFINITY {
                    return match base.limit() {
                        Some(l) if l > 0.0 => Ok(0.0),
                        _ => Err(Error::InvalidState(
                            "base function has no positive limit at +inf".into(),
                        )),
                    };
                }
                Ok(coef * (base.ln_value(xv + h) - base.ln_value(xv)))
            }
            ExpTerm::TimeLogRatio { coef, base } => {
                if h == 0.0 {
                    return Ok(0.0);
                }
                Ok(coef * (base.ln_value(t) - base.ln_value(s)))
            }
            ExpTerm::Constant { value } => Ok(value),
        }
    }

    fn time_kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            ExpTerm::TimeLogRatio { base, .. } => base.kinks(a, b),
            _ => Vec::new(),
        }
    }
}

/// `Phi(t, s, x) = diag(exp(sum of terms))`, one term list per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalExpCocycle {
    pub entries: Vec<Vec<ExpTerm>>,
}

impl DiagonalExpCocycle {
    pub fn new(entries: Vec<Vec<ExpTerm>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParams("cocycle needs at least one entry".into()));
        }
        for term in entries.iter().flatten() {
            term.validate()?;
        }
        Ok(DiagonalExpCocycle { entries })
    }

    pub fn scalar(terms: Vec<ExpTerm>) -> Result<Self> {
        Self::new(vec![terms])
    }

    pub fn exponents(&self, t: f64, s: f64, x: &StatePoint) -> Result<Vec<f64>> {
        self.entries
            .iter()
            .map(|terms| {
                let mut acc = 0.0;
                for term in terms {
                    acc += term.eval(t, s, x)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

impl Cocycle for DiagonalExpCocycle {
    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn matrix(&self, t: f64, s: f64, x: &StatePoint) -> Result<Matrix> {
        let exps = self.exponents(t, s, x)?;
        let mut diag = Vec::with_capacity(exps.len());
        for e in exps {
            let d = e.exp();
            if !d.is_finite() {
                return Err(Error::non_finite(format!(
                    "cocycle exponent {e} at (t, s) = ({t}, {s})"
                )));
            }
            diag.push(d);
        }
        Ok(Matrix::diagonal(&diag))
    }

    fn time_kinks(&self, a: f64, b: f64) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .entries
            .iter()
            .flatten()
            .flat_map(|term| term.time_kinks(a, b))
            .collect();
        k.sort_by(|x, y| x.total_cmp(y));
        k.dedup();
        k
    }
}
