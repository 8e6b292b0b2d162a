//! Parameter sweeps over a gallery system: one classification per grid cell.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{classify, ClassifyReport};
use crate::config::PanelConfig;
use crate::error::{Error, Result};
use crate::gallery;
use crate::report::{CriterionId, CriterionReport, Verdict};
use crate::system::Classification;

pub const MAX_COMBINATIONS: usize = 1000;

/// Parses `name=v1,v2,...`. An empty value list is allowed.
pub fn parse_range(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("range '{spec}' is not name=v1,v2,...")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(Error::Config(format!("range '{spec}' has no parameter name")));
    }
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("range value '{v}' for {name} is not a finite number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name.to_string(), values))
}

/// Every combination of the ranges, lexicographic in (parameter name,
/// value). Values are sorted and deduplicated first.
pub fn expand(ranges: &BTreeMap<String, Vec<f64>>) -> Result<Vec<BTreeMap<String, f64>>> {
    let mut axes: Vec<(&String, Vec<f64>)> = Vec::new();
    let mut count: usize = 1;
    for (name, values) in ranges {
        let mut v = values.clone();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("range for {name} has a non-finite value")));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        count = count.saturating_mul(v.len());
        axes.push((name, v));
    }
    if count > MAX_COMBINATIONS {
        return Err(Error::Config(format!(
            "sweep has {count} combinations; the limit is {MAX_COMBINATIONS}"
        )));
    }
    let mut cells = vec![BTreeMap::new()];
    for (name, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |&v| {
                    let mut c = cell.clone();
                    c.insert(name.clone(), v);
                    c
                })
            })
            .collect();
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, f64>,
    pub verdict: Classification,
    /// Uniform fit; absent unless the fit succeeded.
    pub n: Option<f64>,
    pub nu: Option<f64>,
    /// Nonuniform fit rate and the largest fitted `N(s)`.
    pub nu_nonuniform: Option<f64>,
    pub max_n_s: Option<f64>,
    pub uniform_pass: usize,
    pub uniform_fail: usize,
    pub nonuniform_pass: usize,
    pub nonuniform_fail: usize,
    pub consistent: bool,
}

fn evidence(reports: &[CriterionReport], id: CriterionId, key: &str) -> Option<f64> {
    reports
        .iter()
        .find(|r| r.criterion_id == id && r.passed())
        .and_then(|r| r.get(key))
}

fn count(reports: &[CriterionReport], v: Verdict) -> usize {
    reports.iter().filter(|r| !r.advisory && r.verdict == v).count()
}

impl SweepRow {
    pub fn from_report(params: BTreeMap<String, f64>, r: &ClassifyReport) -> Self {
        let u = &r.uniform.reports;
        let n = &r.nonuniform.reports;
        SweepRow {
            params,
            verdict: r.verdict,
            n: evidence(u, CriterionId::FitExp, "N"),
            nu: evidence(u, CriterionId::FitExp, "nu"),
            nu_nonuniform: evidence(n, CriterionId::FitExpNu, "nu"),
            max_n_s: evidence(n, CriterionId::FitExpNu, "max_N"),
            uniform_pass: count(u, Verdict::Pass),
            uniform_fail: count(u, Verdict::Fail),
            nonuniform_pass: count(n, Verdict::Pass),
            nonuniform_fail: count(n, Verdict::Fail),
            consistent: r.ground_truth_check.consistent,
        }
    }
}

/// Classifies `system` at each cell, with `base` params underneath the
/// swept ones. Rows come back in cell order.
pub fn sweep(
    system: &str,
    base: &BTreeMap<String, f64>,
    ranges: &BTreeMap<String, Vec<f64>>,
    cfg: &PanelConfig,
) -> Result<Vec<SweepRow>> {
    let cells = expand(ranges)?;
    let mut full = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut p = base.clone();
        p.extend(cell.iter().map(|(k, v)| (k.clone(), *v)));
        gallery::resolve_params(system, &p)?;
        full.push((cell, p));
    }
    full.par_iter()
        .map(|(cell, p)| {
            let sys = gallery::build(system, p)?;
            let report = classify(&sys, cfg)?;
            Ok(SweepRow::from_report(cell.clone(), &report))
        })
        .collect()
}

pub const FIXED_COLUMNS: [&str; 10] = [
    "verdict",
    "N",
    "nu",
    "nu_nonuniform",
    "max_N_s",
    "uniform_pass",
    "uniform_fail",
    "nonuniform_pass",
    "nonuniform_fail",
    "consistent",
];

/// CSV with one column per swept parameter followed by the fixed columns.
/// An empty sweep yields the header alone.
pub fn to_csv(names: &[String], rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let header: Vec<&str> = names.iter().map(String::as_str).chain(FIXED_COLUMNS).collect();
    w.write_record(&header).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let mut rec: Vec<String> = names
            .iter()
            .map(|n| r.params.get(n).map(|v| v.to_string()).unwrap_or_default())
            .collect();
        rec.extend([
            r.verdict.to_string(),
            opt(r.n),
            opt(r.nu),
            opt(r.nu_nonuniform),
            opt(r.max_n_s),
            r.uniform_pass.to_string(),
            r.uniform_fail.to_string(),
            r.nonuniform_pass.to_string(),
            r.nonuniform_fail.to_string(),
            r.consistent.to_string(),
        ]);
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("a1=-1,1").unwrap(), ("a1".into(), vec![-1.0, 1.0]));
        assert_eq!(parse_range("mu=").unwrap().1, Vec::<f64>::new());
        assert!(parse_range("mu").is_err());
        assert!(parse_range("mu=1,x").is_err());
        assert!(parse_range("mu=inf").is_err());
    }

    #[test]
    fn expansion_is_lexicographic() {
        let mut r = BTreeMap::new();
        r.insert("b".to_string(), vec![2.0, 1.0]);
        r.insert("a".to_string(), vec![1.0, -1.0, 1.0]);
        let cells = expand(&r).unwrap();
        let flat: Vec<(f64, f64)> = cells.iter().map(|c| (c["a"], c["b"])).collect();
        assert_eq!(flat, vec![(-1.0, 1.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 2.0)]);
    }

    #[test]
    fn empty_axis_gives_no_cells() {
        let mut r = BTreeMap::new();
        r.insert("a".to_string(), vec![]);
        r.insert("b".to_string(), vec![1.0]);
        assert!(expand(&r).unwrap().is_empty());
        assert_eq!(to_csv(&["a".into(), "b".into()], &[]).unwrap().lines().count(), 1);
    }

    #[test]
    fn combination_limit() {
        let mut r = BTreeMap::new();
        r.insert("a".to_string(), (0..40).map(f64::from).collect());
        r.insert("b".to_string(), (0..30).map(f64::from).collect());
        assert!(matches!(expand(&r), Err(Error::Config(_))));
    }
}
