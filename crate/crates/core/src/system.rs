//! A skew-evolution semiflow on `X x R^d` bundled with its probe sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::Cocycle;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, NormKind, MAX_DIMENSION};
use crate::semiflow::{check_times, Semiflow, StatePoint, TimePair};

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "UES")]
    Ues,
    #[serde(rename = "US-not-UES")]
    UsNotUes,
    #[serde(rename = "ES")]
    Es,
    #[serde(rename = "ES-not-UES")]
    EsNotUes,
    #[serde(rename = "stable-only")]
    StableOnly,
    #[serde(rename = "unstable")]
    Unstable,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Ues => "UES",
            Classification::UsNotUes => "US-not-UES",
            Classification::Es => "ES",
            Classification::EsNotUes => "ES-not-UES",
            Classification::StableOnly => "stable-only",
            Classification::Unstable => "unstable",
            Classification::Inconclusive => "inconclusive",
        }
    }

    /// Whether a computed verdict is compatible with this ground-truth tag.
    /// `ES` only asserts exponential stability, so either uniform answer fits.
    pub fn admits(self, verdict: Classification) -> bool {
        match self {
            Classification::Es => {
                matches!(verdict, Classification::Ues | Classification::EsNotUes)
            }
            tag => tag == verdict,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "UES" => Classification::Ues,
            "US-not-UES" => Classification::UsNotUes,
            "ES" => Classification::Es,
            "ES-not-UES" => Classification::EsNotUes,
            "stable-only" => Classification::StableOnly,
            "unstable" => Classification::Unstable,
            "inconclusive" => Classification::Inconclusive,
            _ => return Err(Error::Config(format!("unknown classification '{s}'"))),
        })
    }
}

/// Probe ranges a system considers safe to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeHints {
    /// Largest anchor time `t0` (and `s`) for the uniform panel.
    pub anchor_max: f64,
    /// Largest lag `t - s` for the uniform panel.
    pub lag_max: f64,
    pub nonuniform_anchor_max: f64,
    pub nonuniform_lag_max: f64,
}

impl Default for ProbeHints {
    fn default() -> Self {
        ProbeHints {
            anchor_max: 10.0,
            lag_max: 10.0,
            nonuniform_anchor_max: 10.0,
            nonuniform_lag_max: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub semiflow: Semiflow,
    pub cocycle: Arc<dyn Cocycle>,
    pub norm: NormKind,
    pub ground_truth: Option<Classification>,
    pub state_samples: Vec<StatePoint>,
    pub vector_samples: Vec<Vec<f64>>,
    pub dual_samples: Vec<Vec<f64>>,
    /// Exponential weight `alpha` in `e^{-alpha (t - s)} Phi(t, s, x)`.
    pub shift: f64,
    /// Additional `(t, s)` pairs to probe beyond the regular grids.
    pub extra_pairs: Vec<TimePair>,
    pub hints: ProbeHints,
}

/// Probe for the composition laws: `t >= s >= t0`, state `x`, vector `v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawProbe {
    pub t: f64,
    pub s: f64,
    pub t0: f64,
    pub x: StatePoint,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiflowLawReport {
    pub probes: usize,
    pub max_composition_deviation: f64,
    pub max_identity_deviation: f64,
    pub worst: Option<LawProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocycleLawReport {
    pub probes: usize,
    pub max_relative_deviation: f64,
    pub max_identity_deviation: f64,
    pub worst: Option<LawProbe>,
}

/// Unit basis vectors plus two mixed directions, normalized in `norm`.
pub fn default_unit_vectors(dim: usize, norm: NormKind) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    if dim > 1 {
        out.push(vec![1.0; dim]);
        out.push((0..dim).map(|i| (-0.5f64).powi(i as i32)).collect());
    }
    for v in &mut out {
        let n = norm.norm(v);
        v.iter_mut().for_each(|c| *c /= n);
    }
    out
}

impl System {
    pub fn new(
        name: impl Into<String>,
        semiflow: Semiflow,
        cocycle: Arc<dyn Cocycle>,
        norm: NormKind,
        state_samples: Vec<StatePoint>,
    ) -> Result<Self> {
        let dim = cocycle.dim();
        let sys = System {
            name: name.into(),
            params: BTreeMap::new(),
            semiflow,
            norm,
            ground_truth: None,
            state_samples,
            vector_samples: default_unit_vectors(dim, norm),
            dual_samples: default_unit_vectors(dim, norm.dual()),
            shift: 0.0,
            extra_pairs: Vec::new(),
            hints: ProbeHints::default(),
            cocycle,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::InvalidParams(format!(
                "dimension {dim} outside 1..={MAX_DIMENSION}"
            )));
        }
        if self.state_samples.is_empty() || self.vector_samples.is_empty() {
            return Err(Error::InvalidParams("probe sets must be nonempty".into()));
        }
        for x in &self.state_samples {
            self.semiflow.accepts(x)?;
        }
        for (samples, norm) in [
            (&self.vector_samples, self.norm),
            (&self.dual_samples, self.norm.dual()),
        ] {
            for v in samples {
                self.check_len(v)?;
                if (norm.norm(v) - 1.0).abs() > UNIT_TOLERANCE {
                    return Err(Error::InvalidParams(format!(
                        "probe vector {v:?} is not a unit vector"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cocycle.dim()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn evolve(&self, t: f64, s: f64, x: &StatePoint) -> Result<StatePoint> {
        self.semiflow.evolve(t, s, x)
    }

    /// `Phi(t, s, x)` including any exponential shift.
    pub fn matrix(&self, t: f64, s: f64, x: &StatePoint) -> Result<Matrix> {
        check_times(t, s)?;
        self.semiflow.accepts(x)?;
        let mut m = self.cocycle.matrix(t, s, x)?;
        if self.shift != 0.0 {
            m = m.scale((-self.shift * (t - s)).exp());
        }
        if !m.is_finite() {
            return Err(Error::non_finite(format!("cocycle at (t, s) = ({t}, {s})")));
        }
        Ok(m)
    }

    pub fn apply_cocycle(&self, t: f64, s: f64, x: &StatePoint, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let out = self.matrix(t, s, x)?.apply(v);
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::non_finite("cocycle image"));
        }
        Ok(out)
    }

    pub fn apply_adjoint(
        &self,
        t: f64,
        s: f64,
        x: &StatePoint,
        vstar: &[f64],
    ) -> Result<Vec<f64>> {
        self.check_len(vstar)?;
        Ok(self.matrix(t, s, x)?.apply_transpose(vstar))
    }

    pub fn operator_norm(&self, t: f64, s: f64, x: &StatePoint) -> Result<f64> {
        self.matrix(t, s, x)?.operator_norm(self.norm)
    }

    pub fn vector_norm(&self, v: &[f64]) -> f64 {
        self.norm.norm(v)
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        self.norm.dual().norm(v)
    }

    /// The system with cocycle `e^{-alpha (t - s)} Phi(t, s, x)`. The ground
    /// truth is dropped since the shift changes the classification.
    pub fn shift_cocycle(&self, alpha: f64) -> System {
        let mut out = self.clone();
        out.shift += alpha;
        out.ground_truth = None;
        out
    }

    /// Same system with every vector probe multiplied by `factor`.
    pub fn with_scaled_vectors(&self, factor: f64) -> System {
        let mut out = self.clone();
        for v in out.vector_samples.iter_mut().chain(out.dual_samples.iter_mut()) {
            v.iter_mut().for_each(|c| *c *= factor);
        }
        out
    }

    pub fn time_kinks(&self, a: f64, b: f64) -> Vec<f64> {
        self.cocycle.time_kinks(a, b)
    }

    /// Seeded random probes `t >= s >= t0` inside the system's safe range.
    pub fn random_law_probes(&self, count: usize, seed: u64) -> Vec<LawProbe> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchor = self.hints.anchor_max.min(self.hints.nonuniform_anchor_max);
        let lag = self.hints.lag_max.min(self.hints.nonuniform_lag_max) / 2.0;
        (0..count)
            .map(|_| {
                let t0 = rng.gen_range(0.0..=anchor);
                let s = t0 + rng.gen_range(0.0..=lag);
                let t = s + rng.gen_range(0.0..=lag);
                let x = self.state_samples[rng.gen_range(0..self.state_samples.len())];
                let v = self.vector_samples[rng.gen_range(0..self.vector_samples.len())].clone();
                LawProbe { t, s, t0, x, v }
            })
            .collect()
    }

    pub fn check_semiflow_law(&self, probes: &[LawProbe]) -> Result<SemiflowLawReport> {
        let devs: Vec<(f64, f64)> = probes
            .par_iter()
            .map(|p| {
                check_times(p.t, p.s)?;
                check_times(p.s, p.t0)?;
                let mid = self.evolve(p.s, p.t0, &p.x)?;
                let composed = self.evolve(p.t, p.s, &mid)?;
                let direct = self.evolve(p.t, p.t0, &p.x)?;
                let same = self.evolve(p.t, p.t, &p.x)?;
                Ok((composed.distance(&direct), same.distance(&p.x)))
            })
            .collect::<Result<_>>()?;
        let mut report = SemiflowLawReport {
            probes: probes.len(),
            max_composition_deviation: 0.0,
            max_identity_deviation: 0.0,
            worst: None,
        };
        for (p, (comp, id)) in probes.iter().zip(devs) {
            if comp > report.max_composition_deviation {
                report.max_composition_deviation = comp;
                report.worst = Some(p.clone());
            }
            report.max_identity_deviation = report.max_identity_deviation.max(id);
        }
        Ok(report)
    }

    pub fn check_cocycle_law(&self, probes: &[LawProbe]) -> Result<CocycleLawReport> {
        let devs: Vec<(f64, f64)> = probes
            .par_iter()
            .map(|p| {
                check_times(p.t, p.s)?;
                check_times(p.s, p.t0)?;
                let mid = self.evolve(p.s, p.t0, &p.x)?;
                let first = self.apply_cocycle(p.s, p.t0, &p.x, &p.v)?;
                let composed = self.apply_cocycle(p.t, p.s, &mid, &first)?;
                let direct = self.apply_cocycle(p.t, p.t0, &p.x, &p.v)?;
                let diff: Vec<f64> = composed.iter().zip(&direct).map(|(a, b)| a - b).collect();
                let rel = self.vector_norm(&diff) / self.vector_norm(&direct).max(1.0);
                let same = self.apply_cocycle(p.t, p.t, &p.x, &p.v)?;
                let id_diff: Vec<f64> = same.iter().zip(&p.v).map(|(a, b)| a - b).collect();
                Ok((rel, self.vector_norm(&id_diff)))
            })
            .collect::<Result<_>>()?;
        let mut report = CocycleLawReport {
            probes: probes.len(),
            max_relative_deviation: 0.0,
            max_identity_deviation: 0.0,
            worst: None,
        };
        for (p, (rel, id)) in probes.iter().zip(devs) {
            if rel > report.max_relative_deviation {
                report.max_relative_deviation = rel;
                report.worst = Some(p.clone());
            }
            report.max_identity_deviation = report.max_identity_deviation.max(id);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{DiagonalExpCocycle, ExpTerm};

    fn decay(rate: f64) -> System {
        let c = DiagonalExpCocycle::scalar(vec![ExpTerm::Linear { rate: -rate }]).unwrap();
        System::new(
            "decay",
            Semiflow::Translation,
            Arc::new(c),
            NormKind::L1,
            vec![StatePoint::Real(0.0)],
        )
        .unwrap()
    }

    #[test]
    fn shift_adds_rates() {
        let s = decay(1.0).shift_cocycle(1.0);
        let x = StatePoint::Real(0.0);
        let got = s.apply_cocycle(1.0, 0.0, &x, &[1.0]).unwrap()[0];
        assert!((got - (-2.0f64).exp()).abs() < 1e-15);
        let twice = decay(1.0).shift_cocycle(0.25).shift_cocycle(0.5);
        let once = decay(1.0).shift_cocycle(0.75);
        assert_eq!(
            twice.apply_cocycle(3.0, 1.0, &x, &[1.0]).unwrap(),
            once.apply_cocycle(3.0, 1.0, &x, &[1.0]).unwrap()
        );
    }

    #[test]
    fn dimension_checked() {
        let s = decay(1.0);
        assert!(matches!(
            s.apply_cocycle(1.0, 0.0, &StatePoint::Real(0.0), &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn default_vectors_are_unit() {
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            for v in default_unit_vectors(3, norm) {
                assert!((norm.norm(&v) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equal_times_give_identity() {
        let s = decay(3.0);
        let r = s
            .check_cocycle_law(&[LawProbe {
                t: 2.0,
                s: 2.0,
                t0: 1.0,
                x: StatePoint::Real(1.0),
                v: vec![1.0],
            }])
            .unwrap();
        assert_eq!(r.max_identity_deviation, 0.0);
        assert!(r.max_relative_deviation < 1e-15);
    }

    #[test]
    fn classification_strings_roundtrip() {
        for c in [
            Classification::Ues,
            Classification::UsNotUes,
            Classification::Es,
            Classification::EsNotUes,
            Classification::StableOnly,
            Classification::Unstable,
            Classification::Inconclusive,
        ] {
            assert_eq!(c.as_str().parse::<Classification>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
    }
}
