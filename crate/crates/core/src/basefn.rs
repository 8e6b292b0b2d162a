//! Scalar base functions that cocycle exponents are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest valley index whose position `n + e^{-n^2}` is distinct from `n`
/// in double precision.
pub const SPIKE_MAX_NODES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseFn {
    /// `level + height / (1 + t^2)`: rises on `(-inf, 0)`, falls on
    /// `(0, inf)`, tends to `level` at both ends.
    Lorentzian { level: f64, height: f64 },
    /// `1 / (1 + u)`, strictly decreasing on `[0, inf)`.
    Reciprocal,
    /// `cap - e^{-u}`, nondecreasing and bounded by `cap`.
    SaturatingExp { cap: f64 },
    /// Continuous `f >= 1` with `f(n) = e^{2n}` and `f(n + e^{-n^2}) = 1`,
    /// log-linear in between; `ln f(t) = 2t` past the last valley.
    Spike { node_count: u32 },
}

impl BaseFn {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BaseFn::Lorentzian { level, height } => {
                level > 0.0 && height > 0.0 && level.is_finite() && height.is_finite()
            }
            BaseFn::Reciprocal => true,
            BaseFn::SaturatingExp { cap } => cap > 1.0 && cap.is_finite(),
            BaseFn::Spike { node_count } => (1..=SPIKE_MAX_NODES).contains(&node_count),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("base function out of range: {self:?}")))
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match *self {
            BaseFn::Lorentzian { level, height } => level + height / (1.0 + u * u),
            BaseFn::Reciprocal => 1.0 / (1.0 + u),
            BaseFn::SaturatingExp { cap } => cap - (-u).exp(),
            BaseFn::Spike { .. } => self.ln_value(u).exp(),
        }
    }

    pub fn ln_value(&self, u: f64) -> f64 {
        match *self {
            BaseFn::Spike { node_count } => spike_ln(node_count, u),
            _ => self.value(u).ln(),
        }
    }

    /// Value at `+inf` when the function converges there.
    pub fn limit(&self) -> Option<f64> {
        match *self {
            BaseFn::Lorentzian { level, .. } => Some(level),
            BaseFn::Reciprocal => Some(0.0),
            BaseFn::SaturatingExp { cap } => Some(cap),
            BaseFn::Spike { .. } => None,
        }
    }

    /// A closed-form antiderivative, when one is available.
    pub fn antiderivative(&self, u: f64) -> Option<f64> {
        match *self {
            BaseFn::Lorentzian { level, height } => Some(level * u + height * u.atan()),
            BaseFn::Reciprocal => Some(u.ln_1p()),
            BaseFn::SaturatingExp { cap } => Some(cap * u + (-u).exp()),
            BaseFn::Spike { .. } => None,
        }
    }

    /// Points in `(a, b)` where the function is not smooth.
    pub fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match *self {
            BaseFn::Spike { node_count } => spike_kinks(node_count)
                .into_iter()
                .filter(|&k| k > a && k < b)
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub fn spike_valley(n: u32) -> f64 {
    let n = n as f64;
    n + (-(n * n)).exp()
}

fn spike_kinks(node_count: u32) -> Vec<f64> {
    let mut k = Vec::new();
    for n in 1..=node_count {
        k.push(n as f64);
        k.push(spike_valley(n));
    }
    k.push(node_count as f64 + 1.0);
    k
}

fn spike_ln(node_count: u32, u: f64) -> f64 {
    if u <= 1.0 {
        return 2.0 * u;
    }
    let last = node_count as f64 + 1.0;
    if u >= last {
        return 2.0 * u;
    }
    let n = u.floor();
    let valley = spike_valley(n as u32);
    if u < valley {
        // Falling from 2n at n to 0 at the valley.
        2.0 * n * (valley - u) / (valley - n)
    } else {
        // Rising from 0 at the valley to 2(n+1) at n+1.
        2.0 * (n + 1.0) * (u - valley) / (n + 1.0 - valley)
    }
}
