//! Gauge functions `R: [0, inf) -> [0, inf)` that are nondecreasing, vanish at
//! zero and are positive elsewhere. Every integral and series criterion wraps
//! its integrand in one of these.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

const VALIDATION_POINTS: usize = 1000;
const VALIDATION_SPAN: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub enum Gauge {
    Identity,
    Power(f64),
    /// `R(t) = t / (c + t)`.
    Saturating(f64),
    /// Piecewise-linear through the nodes, constant past the last node.
    Table {
        nodes: Vec<(f64, f64)>,
        source: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeClause {
    ZeroAtZero,
    Positivity,
    Monotonicity,
    Parameter,
}

impl fmt::Display for GaugeClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeClause::ZeroAtZero => "R(0) = 0",
            GaugeClause::Positivity => "R(t) > 0 for t > 0",
            GaugeClause::Monotonicity => "R nondecreasing",
            GaugeClause::Parameter => "parameter out of range",
        })
    }
}

/// The first point (or consecutive pair) where a gauge leaves the class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeViolation {
    pub clause: GaugeClause,
    pub at: (f64, f64),
    pub next: Option<(f64, f64)>,
}

impl fmt::Display for GaugeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at ({}, {})", self.clause, self.at.0, self.at.1)?;
        if let Some((t, r)) = self.next {
            write!(f, " -> ({t}, {r})")?;
        }
        Ok(())
    }
}

impl Gauge {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Gauge::Identity => t,
            Gauge::Power(p) => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(*p)
                }
            }
            Gauge::Saturating(c) => t / (c + t),
            Gauge::Table { nodes, .. } => interpolate(nodes, t),
        }
    }

    /// Builds a gauge and checks it against the class on the standard grid.
    pub fn new(candidate: Gauge) -> Result<Gauge> {
        let param_violation = |p: f64| {
            Error::InvalidGauge(GaugeViolation {
                clause: GaugeClause::Parameter,
                at: (p, f64::NAN),
                next: None,
            })
        };
        match &candidate {
            Gauge::Power(p) if !(*p > 0.0 && p.is_finite()) => return Err(param_violation(*p)),
            Gauge::Saturating(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(param_violation(*c))
            }
            Gauge::Table { nodes, .. } => check_nodes(nodes)?,
            _ => {}
        }
        validate_gauge(&candidate, &standard_grid()).map_err(Error::InvalidGauge)?;
        Ok(candidate)
    }

    pub fn table(nodes: Vec<(f64, f64)>) -> Result<Gauge> {
        Gauge::new(Gauge::Table {
            nodes,
            source: None,
        })
    }

    /// Parses `identity`, `pow:p`, `sat:c` or `table:@file.csv`.
    pub fn parse(descriptor: &str) -> Result<Gauge> {
        let descriptor = descriptor.trim();
        let (kind, arg) = match descriptor.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (descriptor, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("bad gauge descriptor '{descriptor}'")))
        };
        match kind {
            "identity" | "id" if arg.is_none() => Gauge::new(Gauge::Identity),
            "pow" => Gauge::new(Gauge::Power(number(arg)?)),
            "sat" => Gauge::new(Gauge::Saturating(number(arg)?)),
            "table" => {
                let path = arg
                    .and_then(|a| a.strip_prefix('@'))
                    .ok_or_else(|| Error::Config("table gauge needs table:@file.csv".into()))?;
                let nodes = read_table(Path::new(path))?;
                Gauge::new(Gauge::Table {
                    nodes,
                    source: Some(path.to_string()),
                })
            }
            _ => Err(Error::Config(format!("unknown gauge '{descriptor}'"))),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Gauge::Identity => "identity".into(),
            Gauge::Power(p) => format!("pow:{p}"),
            Gauge::Saturating(c) => format!("sat:{c}"),
            Gauge::Table {
                source: Some(path), ..
            } => format!("table:@{path}"),
            Gauge::Table { nodes, .. } => format!("table:<{} nodes>", nodes.len()),
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

fn interpolate(nodes: &[(f64, f64)], t: f64) -> f64 {
    let Some(&(t_last, r_last)) = nodes.last() else {
        return 0.0;
    };
    if t >= t_last {
        return r_last;
    }
    let idx = nodes.partition_point(|&(tn, _)| tn <= t);
    if idx == 0 {
        return nodes[0].1;
    }
    let (t0, r0) = nodes[idx - 1];
    let (t1, r1) = nodes[idx];
    if t1 == t0 {
        return r1;
    }
    r0 + (r1 - r0) * (t - t0) / (t1 - t0)
}

fn check_nodes(nodes: &[(f64, f64)]) -> Result<()> {
    let fail = |clause, at, next| Err(Error::InvalidGauge(GaugeViolation { clause, at, next }));
    match nodes.first() {
        None => return fail(GaugeClause::ZeroAtZero, (0.0, f64::NAN), None),
        Some(&(t, r)) if t != 0.0 || r != 0.0 => return fail(GaugeClause::ZeroAtZero, (t, r), None),
        _ => {}
    }
    if let Some(&(t, r)) = nodes.iter().find(|&&(t, r)| t > 0.0 && !(r > 0.0)) {
        return fail(GaugeClause::Positivity, (t, r), None);
    }
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b.0 >= a.0) {
            return Err(Error::Config(format!(
                "table gauge nodes must be sorted by t: {} after {}",
                b.0, a.0
            )));
        }
        if b.1 < a.1 {
            return fail(GaugeClause::Monotonicity, a, Some(b));
        }
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read gauge table {}: {e}", path.display())))?;
    let mut nodes = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("gauge table: {e}")))?;
        let parsed = (
            record.get(0).and_then(|s| s.parse::<f64>().ok()),
            record.get(1).and_then(|s| s.parse::<f64>().ok()),
        );
        match parsed {
            (Some(t), Some(r)) => nodes.push((t, r)),
            // A non-numeric first row is a header.
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Config(format!(
                    "gauge table row {} is not a (t, R) pair",
                    row + 1
                )))
            }
        }
    }
    Ok(nodes)
}

/// `VALIDATION_POINTS` equispaced points over `[0, 1e3]`.
pub fn standard_grid() -> Vec<f64> {
    (0..VALIDATION_POINTS)
        .map(|i| VALIDATION_SPAN * i as f64 / (VALIDATION_POINTS - 1) as f64)
        .collect()
}

/// Scans a sorted grid starting at 0 and reports the first violation.
pub fn validate_gauge(g: &Gauge, grid: &[f64]) -> std::result::Result<(), GaugeViolation> {
    let mut prev: Option<(f64, f64)> = None;
    for &t in grid {
        let r = g.eval(t);
        if t == 0.0 && r != 0.0 {
            return Err(GaugeViolation {
                clause: GaugeClause::ZeroAtZero,
                at: (t, r),
                next: None,
            });
        }
        if t > 0.0 && !(r > 0.0) {
            return Err(GaugeViolation {
                clause: GaugeClause::Positivity,
                at: (t, r),
                next: None,
            });
        }
        if let Some(p) = prev {
            if r < p.1 {
                return Err(GaugeViolation {
                    clause: GaugeClause::Monotonicity,
                    at: p,
                    next: Some((t, r)),
                });
            }
        }
        prev = Some((t, r));
    }
    Ok(())
}
