//! Time pairs, states and evolution semiflows on the state space.

use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair `(t, s)` with `t >= s >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePair {
    pub t: f64,
    pub s: f64,
}

impl TimePair {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        check_times(t, s)?;
        Ok(TimePair { t, s })
    }

    pub fn lag(&self) -> f64 {
        self.t - self.s
    }

    pub fn is_integer(&self) -> bool {
        self.t.fract() == 0.0 && self.s.fract() == 0.0
    }
}

pub fn check_times(t: f64, s: f64) -> Result<()> {
    if !t.is_finite() || !s.is_finite() {
        return Err(Error::non_finite(format!("time pair ({t}, {s})")));
    }
    if s < 0.0 {
        return Err(Error::NegativeTime(s));
    }
    if t < s {
        return Err(Error::TimeOrderViolation { t, s });
    }
    Ok(())
}

/// A point of the state space.
///
/// `Shift(theta)` stands for the translate `f_theta` of a base function;
/// `theta = +inf` is the constant limit function in the closure.
/// `Real(x)` is a point of `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatePoint {
    Shift(f64),
    Real(f64),
}

impl StatePoint {
    pub fn value(&self) -> f64 {
        match *self {
            StatePoint::Shift(v) | StatePoint::Real(v) => v,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StatePoint::Shift(_) => "shift",
            StatePoint::Real(_) => "real",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StatePoint::Shift(v) if v.is_nan() || v == f64::NEG_INFINITY => Err(
                Error::InvalidState(format!("shift parameter must be real or +inf, got {v}")),
            ),
            StatePoint::Real(v) if !(v >= 0.0 && v.is_finite()) => Err(Error::InvalidState(
                format!("real state must be finite and nonnegative, got {v}"),
            )),
            _ => Ok(()),
        }
    }

    /// Moves the state forward by `h >= 0`.
    pub fn advance(&self, h: f64) -> StatePoint {
        match *self {
            StatePoint::Shift(v) => StatePoint::Shift(v + h),
            StatePoint::Real(v) => StatePoint::Real(v + h),
        }
    }

    /// Distance between two states of the same kind; infinite parameters
    /// coincide only with each other.
    pub fn distance(&self, other: &StatePoint) -> f64 {
        let (a, b) = (self.value(), other.value());
        if self.kind() != other.kind() {
            return f64::INFINITY;
        }
        if a == b {
            0.0
        } else {
            (a - b).abs()
        }
    }
}

fn encode(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::json!(v)
    }
}

impl Serialize for StatePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("StatePoint", 2)?;
        st.serialize_field("kind", self.kind())?;
        st.serialize_field("value", &encode(self.value()))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for StatePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            kind: String,
            value: serde_json::Value,
        }
        let raw = Raw::deserialize(deserializer)?;
        let value = match &raw.value {
            serde_json::Value::String(s) if s == "inf" => f64::INFINITY,
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| de::Error::custom("state value out of range"))?,
            other => return Err(de::Error::custom(format!("bad state value {other}"))),
        };
        match raw.kind.as_str() {
            "shift" => Ok(StatePoint::Shift(value)),
            "real" => Ok(StatePoint::Real(value)),
            k => Err(de::Error::custom(format!("unknown state kind '{k}'"))),
        }
    }
}

/// Evolution semiflows used by the gallery; both move a state forward by the
/// elapsed time `t - s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semiflow {
    /// `phi(t, s, f_theta) = f_{theta + t - s}` on a space of translates.
    Shift,
    /// `phi(t, s, x) = t - s + x` on `[0, inf)`.
    Translation,
}

impl Semiflow {
    pub fn evolve(&self, t: f64, s: f64, x: &StatePoint) -> Result<StatePoint> {
        check_times(t, s)?;
        self.accepts(x)?;
        Ok(x.advance(t - s))
    }

    pub fn accepts(&self, x: &StatePoint) -> Result<()> {
        x.validate()?;
        match (self, x) {
            (Semiflow::Shift, StatePoint::Shift(_)) | (Semiflow::Translation, StatePoint::Real(_)) => {
                Ok(())
            }
            _ => Err(Error::InvalidState(format!(
                "{} state does not belong to the {:?} semiflow",
                x.kind(),
                self
            ))),
        }
    }
}
