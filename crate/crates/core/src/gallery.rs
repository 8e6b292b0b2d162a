//! Ready-built systems with known stability behaviour, and the metric on the
//! space of translates of a base function.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::basefn::{spike_valley, BaseFn, SPIKE_MAX_NODES};
use crate::cocycle::{DiagonalExpCocycle, ExpTerm};
use crate::error::{Error, Result};
use crate::linalg::NormKind;
use crate::semiflow::{Semiflow, StatePoint, TimePair};
use crate::system::{Classification, ProbeHints, System};

pub const NAMES: [&str; 6] = [
    "shift-metric-demo",
    "diag3",
    "scalar_decay",
    "bounded_ratio",
    "tsint",
    "spike",
];

#[derive(Debug, Clone, Serialize)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: BTreeMap<String, f64>,
    pub ground_truth: Classification,
}

fn defaults(name: &str) -> Option<Vec<(&'static str, f64)>> {
    Some(match name {
        "shift-metric-demo" => vec![("nu", 1.0)],
        "diag3" => vec![
            ("a1", -1.0),
            ("a2", 1.0),
            ("a3", -3.0),
            ("l", 2.0),
            ("height", 1.0),
            ("literal_l", 0.0),
            ("quad", 0.0),
        ],
        "scalar_decay" => vec![("mu", 2.0), ("theta", 0.0), ("quad", 0.0)],
        "bounded_ratio" => vec![("cap", 2.0)],
        "tsint" => vec![],
        "spike" => vec![("nodes", SPIKE_MAX_NODES as f64)],
        _ => return None,
    })
}

fn summary(name: &str) -> &'static str {
    match name {
        "shift-metric-demo" => "scalar e^{-nu(t-s)} over the shift semiflow on translates of 2+1/(1+t^2)",
        "diag3" => "diagonal R^3 cocycle exp(a_i * int x(tau-s) dtau) over translates of 2+1/(1+t^2), L1 norm",
        "scalar_decay" => "exp(-mu(t-s) + int x(tau-s) dtau) over translates of 1/(1+u)",
        "bounded_ratio" => "f(x)/f(t-s+x) on [0,inf) with f(u) = cap - e^{-u}",
        "tsint" => "exp(t sin t - s sin s - 2(t-s))",
        "spike" => "f(s)/f(t) e^{-(t-s)} with f(n) = e^{2n}, f(n + e^{-n^2}) = 1",
        _ => "",
    }
}

/// Resolved parameters: defaults overridden by `overrides`.
pub fn resolve_params(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let defs = defaults(name).ok_or_else(|| unknown(name))?;
    let mut params: BTreeMap<String, f64> =
        defs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(Error::InvalidParams(format!(
                "system '{name}' has no parameter '{k}'"
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("parameter {k} = {v} is not finite")));
        }
        params.insert(k.clone(), *v);
    }
    Ok(params)
}

fn unknown(name: &str) -> Error {
    Error::Config(format!(
        "unknown system '{name}'; available: {}",
        NAMES.join(", ")
    ))
}

pub fn entries() -> Vec<GalleryEntry> {
    NAMES
        .iter()
        .map(|&name| {
            let sys = build(name, &BTreeMap::new()).expect("gallery defaults are valid");
            GalleryEntry {
                name,
                summary: summary(name),
                defaults: sys.params.clone(),
                ground_truth: sys.ground_truth.expect("gallery systems carry a tag"),
            }
        })
        .collect()
}

pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<System> {
    let p = resolve_params(name, overrides)?;
    let flag = |k: &str| p[k] != 0.0;
    let mut sys = match name {
        "shift-metric-demo" => shift_metric_demo(p["nu"])?,
        "diag3" => diag3(
            [p["a1"], p["a2"], p["a3"]],
            p["l"],
            p["height"],
            flag("literal_l"),
            flag("quad"),
        )?,
        "scalar_decay" => scalar_decay(p["mu"], p["theta"], flag("quad"))?,
        "bounded_ratio" => bounded_ratio(p["cap"])?,
        "tsint" => tsint()?,
        "spike" => spike(p["nodes"])?,
        _ => return Err(unknown(name)),
    };
    sys.params = p;
    Ok(sys)
}

/// The Lorentzian base used for the function-space examples.
pub fn lorentzian(level: f64, height: f64) -> BaseFn {
    BaseFn::Lorentzian { level, height }
}

fn shift_states() -> Vec<StatePoint> {
    vec![
        StatePoint::Shift(-2.0),
        StatePoint::Shift(0.0),
        StatePoint::Shift(1.5),
        StatePoint::Shift(f64::INFINITY),
    ]
}

fn shift_metric_demo(nu: f64) -> Result<System> {
    let c = DiagonalExpCocycle::scalar(vec![ExpTerm::Linear { rate: -nu }])?;
    let mut sys = System::new(
        "shift-metric-demo",
        Semiflow::Shift,
        Arc::new(c),
        NormKind::L1,
        shift_states(),
    )?;
    sys.ground_truth = Some(if nu > 0.0 {
        Classification::Ues
    } else if nu == 0.0 {
        Classification::UsNotUes
    } else {
        Classification::Unstable
    });
    Ok(sys)
}

fn diag3(
    alpha: [f64; 3],
    level: f64,
    height: f64,
    literal_l: bool,
    quadrature: bool,
) -> Result<System> {
    let base = lorentzian(level, height);
    base.validate()?;
    let integral = |coef| ExpTerm::ShiftIntegral {
        coef,
        base,
        quadrature,
    };
    let mut third = vec![integral(alpha[2])];
    if literal_l {
        third.push(ExpTerm::Constant { value: level });
    }
    let c = DiagonalExpCocycle::new(vec![
        vec![integral(alpha[0])],
        vec![integral(-alpha[1])],
        third,
    ])?;
    let mut sys = System::new("diag3", Semiflow::Shift, Arc::new(c), NormKind::L1, shift_states())?;
    // The integral of any state over a window of length h lies in
    // [level h, (level + height) h], so the sign of each coefficient decides.
    let coefs = [alpha[0], -alpha[1], alpha[2]];
    sys.ground_truth = Some(if coefs.iter().all(|&a| a < 0.0) {
        Classification::Ues
    } else if coefs.iter().any(|&a| a > 0.0) {
        Classification::Unstable
    } else {
        Classification::UsNotUes
    });
    Ok(sys)
}

fn scalar_decay(mu: f64, theta: f64, quadrature: bool) -> Result<System> {
    let base = BaseFn::Reciprocal;
    if !(theta >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "theta = {theta} must be nonnegative"
        )));
    }
    let x0 = base.value(theta);
    if !(mu > x0) {
        return Err(Error::InvalidParams(format!(
            "mu = {mu} must exceed x(0) = f(theta) = {x0}"
        )));
    }
    let c = DiagonalExpCocycle::scalar(vec![
        ExpTerm::Linear { rate: -mu },
        ExpTerm::ShiftIntegral {
            coef: 1.0,
            base,
            quadrature,
        },
    ])?;
    let states = vec![
        StatePoint::Shift(theta),
        StatePoint::Shift(theta + 0.5),
        StatePoint::Shift(theta + 2.0),
        StatePoint::Shift(f64::INFINITY),
    ];
    let mut sys = System::new("scalar_decay", Semiflow::Shift, Arc::new(c), NormKind::L1, states)?;
    sys.ground_truth = Some(Classification::Ues);
    Ok(sys)
}

fn bounded_ratio(cap: f64) -> Result<System> {
    let base = BaseFn::SaturatingExp { cap };
    let c = DiagonalExpCocycle::scalar(vec![ExpTerm::StateLogRatio { coef: -1.0, base }])?;
    let states = [0.0, 1.0, 5.0, 10.0].map(StatePoint::Real).to_vec();
    let mut sys = System::new(
        "bounded_ratio",
        Semiflow::Translation,
        Arc::new(c),
        NormKind::L1,
        states,
    )?;
    sys.ground_truth = Some(Classification::UsNotUes);
    Ok(sys)
}

fn tsint() -> Result<System> {
    let c = DiagonalExpCocycle::scalar(vec![
        ExpTerm::SinProduct { coef: 1.0 },
        ExpTerm::Linear { rate: -2.0 },
    ])?;
    let mut sys = System::new(
        "tsint",
        Semiflow::Translation,
        Arc::new(c),
        NormKind::L1,
        vec![StatePoint::Real(0.0), StatePoint::Real(2.0)],
    )?;
    sys.ground_truth = Some(Classification::Es);
    sys.hints = ProbeHints {
        anchor_max: 12.0,
        lag_max: 10.0,
        nonuniform_anchor_max: 6.0,
        nonuniform_lag_max: 12.0,
    };
    Ok(sys)
}

fn spike(nodes: f64) -> Result<System> {
    if nodes.fract() != 0.0 || !(1.0..=SPIKE_MAX_NODES as f64).contains(&nodes) {
        return Err(Error::InvalidParams(format!(
            "nodes = {nodes} must be an integer in 1..={SPIKE_MAX_NODES}"
        )));
    }
    let node_count = nodes as u32;
    let base = BaseFn::Spike { node_count };
    let c = DiagonalExpCocycle::scalar(vec![
        ExpTerm::TimeLogRatio { coef: -1.0, base },
        ExpTerm::Linear { rate: -1.0 },
    ])?;
    let mut sys = System::new(
        "spike",
        Semiflow::Translation,
        Arc::new(c),
        NormKind::L1,
        vec![StatePoint::Real(0.0)],
    )?;
    sys.ground_truth = Some(Classification::EsNotUes);
    sys.hints = ProbeHints {
        anchor_max: 6.0,
        lag_max: 12.0,
        nonuniform_anchor_max: 6.0,
        nonuniform_lag_max: 12.0,
    };
    sys.extra_pairs = (1..=node_count)
        .map(|n| TimePair {
            t: spike_valley(n),
            s: n as f64,
        })
        .collect();
    Ok(sys)
}

fn translate(base: &BaseFn, x: &StatePoint, tau: f64) -> f64 {
    let theta = x.value();
    if theta == f64::INFINITY {
        base.limit().unwrap_or(f64::NAN)
    } else {
        base.value(theta + tau)
    }
}

/// `sum_{n=1}^{n_terms} 2^{-n} d_n / (1 + d_n)` with `d_n` the sup of
/// `|x(tau) - y(tau)|` over `[-n, n]`, from a 0.01 grid refined around its
/// local maxima.
pub fn function_space_distance(base: &BaseFn, x: &StatePoint, y: &StatePoint, n_terms: u32) -> f64 {
    function_space_distance_with_step(base, x, y, n_terms, 0.01)
}

pub fn function_space_distance_with_step(
    base: &BaseFn,
    x: &StatePoint,
    y: &StatePoint,
    n_terms: u32,
    step: f64,
) -> f64 {
    if x == y {
        return 0.0;
    }
    let gap = |tau: f64| (translate(base, x, tau) - translate(base, y, tau)).abs();
    let mut total = 0.0;
    for n in 1..=n_terms {
        let half = n as f64;
        let cells = (2.0 * half / step).round() as usize;
        let grid: Vec<f64> = (0..=cells)
            .map(|i| -half + 2.0 * half * i as f64 / cells as f64)
            .collect();
        let vals: Vec<f64> = grid.iter().map(|&t| gap(t)).collect();
        let mut dn = vals.iter().cloned().fold(0.0, f64::max);
        for i in 1..cells {
            if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
                dn = dn.max(golden_max(&gap, grid[i - 1], grid[i + 1]));
            }
        }
        total += 0.5f64.powi(n as i32) * dn / (1.0 + dn);
    }
    total
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if b - a < 1e-13 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}
