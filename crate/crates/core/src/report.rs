//! Criterion identifiers, verdicts and the evidence records they produce.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::semiflow::StatePoint;

/// A real number that serializes non-finite values as strings.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            serializer.serialize_f64(v)
        } else if v.is_nan() {
            serializer.serialize_str("nan")
        } else if v > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionId {
    FitExp,
    UnifStab,
    Minorant,
    HalfDecay,
    HalfDecayD,
    DatkoV,
    DatkoOp,
    DatkoD,
    BarbashinV,
    BarbashinOp,
    BarbashinD,
    DecayD,
    FitExpNu,
    Majorant,
    DatkoVNu,
    DatkoOpNu,
    DatkoDNu,
    BarbashinNu,
    BarbashinDNu,
}

impl CriterionId {
    pub const UNIFORM: [CriterionId; 12] = [
        CriterionId::FitExp,
        CriterionId::UnifStab,
        CriterionId::Minorant,
        CriterionId::HalfDecay,
        CriterionId::HalfDecayD,
        CriterionId::DatkoV,
        CriterionId::DatkoOp,
        CriterionId::DatkoD,
        CriterionId::BarbashinV,
        CriterionId::BarbashinOp,
        CriterionId::BarbashinD,
        CriterionId::DecayD,
    ];

    pub const NONUNIFORM: [CriterionId; 7] = [
        CriterionId::FitExpNu,
        CriterionId::Majorant,
        CriterionId::DatkoVNu,
        CriterionId::DatkoOpNu,
        CriterionId::DatkoDNu,
        CriterionId::BarbashinNu,
        CriterionId::BarbashinDNu,
    ];

    pub fn all() -> Vec<CriterionId> {
        Self::UNIFORM.iter().chain(Self::NONUNIFORM.iter()).copied().collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::FitExp => "fit-exp",
            CriterionId::UnifStab => "unif-stab",
            CriterionId::Minorant => "minorant",
            CriterionId::HalfDecay => "half-decay",
            CriterionId::HalfDecayD => "half-decay-d",
            CriterionId::DatkoV => "datko-v",
            CriterionId::DatkoOp => "datko-op",
            CriterionId::DatkoD => "datko-d",
            CriterionId::BarbashinV => "barbashin-v",
            CriterionId::BarbashinOp => "barbashin-op",
            CriterionId::BarbashinD => "barbashin-d",
            CriterionId::DecayD => "decay-d",
            CriterionId::FitExpNu => "fit-exp-nu",
            CriterionId::Majorant => "majorant",
            CriterionId::DatkoVNu => "datko-v-nu",
            CriterionId::DatkoOpNu => "datko-op-nu",
            CriterionId::DatkoDNu => "datko-d-nu",
            CriterionId::BarbashinNu => "barbashin-nu",
            CriterionId::BarbashinDNu => "barbashin-d-nu",
        }
    }

    pub fn is_uniform(self) -> bool {
        Self::UNIFORM.contains(&self)
    }

    /// Criteria reported for information only; they do not enter verdicts.
    pub fn is_advisory(self) -> bool {
        matches!(
            self,
            CriterionId::DatkoOpNu | CriterionId::BarbashinNu | CriterionId::BarbashinDNu
        )
    }

    /// Parses `all` or a comma-separated id list.
    pub fn parse_list(list: &str) -> Result<Vec<CriterionId>> {
        if list.trim() == "all" {
            return Ok(Self::all());
        }
        let mut out = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let id: CriterionId = item.parse()?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty criteria list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown criterion '{s}'")))
    }
}

impl Serialize for CriterionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// The probe at which a criterion failed.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Witness {
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StatePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Real>>,
    pub value: Real,
}

impl Witness {
    pub fn new(description: impl Into<String>, value: f64) -> Self {
        Witness {
            description: description.into(),
            value: Real(value),
            ..Default::default()
        }
    }

    pub fn at(mut self, t0: Option<f64>, s: Option<f64>, t: Option<f64>) -> Self {
        self.t0 = t0.map(Real);
        self.s = s.map(Real);
        self.t = t.map(Real);
        self
    }

    pub fn state(mut self, x: StatePoint) -> Self {
        self.state = Some(x);
        self
    }

    pub fn vector(mut self, v: &[f64]) -> Self {
        self.vector = Some(v.iter().copied().map(Real).collect());
        self
    }
}

/// Horizons and tolerances a criterion ran with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub gauge: String,
    pub anchor_max: Real,
    pub grid_h: Real,
    pub grid_step: Real,
    pub tmax: Real,
    pub delta_max: Real,
    pub tol: Real,
    pub ncap: Real,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion_id: CriterionId,
    pub verdict: Verdict,
    pub advisory: bool,
    pub evidence: BTreeMap<String, Real>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tables: BTreeMap<String, Vec<[Real; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub config_echo: ConfigEcho,
}

impl CriterionReport {
    pub fn new(id: CriterionId, echo: ConfigEcho) -> Self {
        CriterionReport {
            criterion_id: id,
            verdict: Verdict::Inconclusive,
            advisory: id.is_advisory(),
            evidence: BTreeMap::new(),
            tables: BTreeMap::new(),
            witness: None,
            notes: Vec::new(),
            config_echo: echo,
        }
    }

    pub fn evidence(&mut self, key: &str, value: f64) -> &mut Self {
        self.evidence.insert(key.to_string(), Real(value));
        self
    }

    pub fn table(&mut self, key: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> &mut Self {
        self.tables.insert(
            key.to_string(),
            rows.into_iter().map(|(a, b)| [Real(a), Real(b)]).collect(),
        );
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn pass(mut self) -> Self {
        self.verdict = Verdict::Pass;
        self.witness = None;
        self
    }

    pub fn fail(mut self, witness: Witness) -> Self {
        self.verdict = Verdict::Fail;
        self.witness = Some(witness);
        self
    }

    pub fn inconclusive(mut self, why: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.notes.push(why.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.evidence.get(key).map(|r| r.0)
    }
}
