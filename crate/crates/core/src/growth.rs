//! Exponential growth envelopes `|Phi(t,t0,x)v| <= M e^{omega (t-s)} |Phi(s,t0,x)v|`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::Result;
use crate::probe::{ProbeGrid, ProbeSet, RatioSample, PLATEAU_SLACK};
use crate::report::{Real, Witness};
use crate::system::System;

pub const OMEGA_LADDER: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const VERIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Uniform,
    Nonuniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBin {
    pub s: Real,
    pub m: Real,
    pub omega: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthEnvelope {
    Uniform {
        m: Real,
        omega: Real,
        /// No ladder rate kept `M` within the cap and level across anchors;
        /// the envelope still holds on the probes but uniform growth is not
        /// established.
        dubious: bool,
    },
    Nonuniform {
        bins: Vec<GrowthBin>,
        dubious: bool,
    },
}

impl GrowthEnvelope {
    pub fn is_dubious(&self) -> bool {
        match self {
            GrowthEnvelope::Uniform { dubious, .. } | GrowthEnvelope::Nonuniform { dubious, .. } => {
                *dubious
            }
        }
    }

    /// `(M, omega)` applying to a probe.
    fn bound_for(&self, sample: &RatioSample) -> (f64, f64) {
        match self {
            GrowthEnvelope::Uniform { m, omega, .. } => (m.0, omega.0),
            GrowthEnvelope::Nonuniform { bins, .. } => bins
                .get(sample.s_bin)
                .map(|b| (b.m.0, b.omega.0))
                .unwrap_or((f64::INFINITY, 0.0)),
        }
    }
}

/// `max(1, max e^{-omega h} ratio)` over the samples, with its argmax.
pub fn growth_constant<'a, I>(samples: I, omega: f64) -> (f64, Option<usize>)
where
    I: IntoIterator<Item = (usize, &'a RatioSample)>,
{
    let mut m = 1.0;
    let mut arg = None;
    for (i, s) in samples {
        let w = (-omega * s.lag()).exp() * s.ratio;
        if w > m {
            m = w;
            arg = Some(i);
        }
    }
    (m, arg)
}

/// Result of a growth estimate together with the probe that sets `M`.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    pub envelope: GrowthEnvelope,
    /// `(omega, M)` rows of the uniform ladder.
    pub ladder: Vec<(f64, f64)>,
    pub witness_index: Option<usize>,
}

/// Least ladder rate whose `M` stays within `cap` and does not grow between
/// the early and late halves of the anchor range; growth that keeps
/// increasing with `s` is not uniform.
pub fn fit_uniform(probes: &ProbeSet, cap: f64) -> GrowthFit {
    let split = probes.grid.anchor_max / 2.0;
    let ladder: Vec<(f64, f64, Option<usize>, bool)> = OMEGA_LADDER
        .iter()
        .map(|&w| {
            let (m, arg) = growth_constant(probes.samples.iter().enumerate(), w);
            let half = |late: bool| {
                growth_constant(
                    probes
                        .samples
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| (s.s > split) == late),
                    w,
                )
                .0
            };
            let level = half(true) <= half(false) * (1.0 + PLATEAU_SLACK);
            (w, m, arg, level)
        })
        .collect();
    let chosen = ladder
        .iter()
        .find(|(_, m, _, level)| *m <= cap && *level)
        .copied();
    let (omega, m, arg, _) = chosen.unwrap_or(*ladder.last().expect("ladder is nonempty"));
    GrowthFit {
        envelope: GrowthEnvelope::Uniform {
            m: Real(m),
            omega: Real(omega),
            dubious: chosen.is_none(),
        },
        ladder: ladder.iter().map(|(w, m, _, _)| (*w, *m)).collect(),
        witness_index: arg,
    }
}

pub fn fit_nonuniform(probes: &ProbeSet, cap: f64, omega_const: bool) -> GrowthFit {
    let mut by_bin: BTreeMap<usize, Vec<(usize, &RatioSample)>> = BTreeMap::new();
    for (i, s) in probes.samples.iter().enumerate() {
        by_bin.entry(s.s_bin).or_default().push((i, s));
    }
    let bins_needed = by_bin.keys().next_back().map_or(0, |k| k + 1);
    let per_bin = |omega_for: &dyn Fn(&[(usize, &RatioSample)]) -> f64| {
        let mut bins = Vec::with_capacity(bins_needed);
        let mut dubious = false;
        let mut worst: Option<(f64, usize)> = None;
        for b in 0..bins_needed {
            let members = by_bin.get(&b).map(Vec::as_slice).unwrap_or(&[]);
            let omega = omega_for(members);
            let (m, arg) = growth_constant(members.iter().copied(), omega);
            dubious |= m > cap;
            if let Some(i) = arg {
                if worst.map_or(true, |(wm, _)| m > wm) {
                    worst = Some((m, i));
                }
            }
            bins.push(GrowthBin {
                s: Real(probes.grid.s_of_bin(b)),
                m: Real(m),
                omega: Real(omega),
            });
        }
        (bins, dubious, worst.map(|(_, i)| i))
    };
    let least = |members: &[(usize, &RatioSample)]| {
        OMEGA_LADDER
            .iter()
            .copied()
            .find(|&w| growth_constant(members.iter().copied(), w).0 <= cap)
            .unwrap_or(OMEGA_LADDER[OMEGA_LADDER.len() - 1])
    };
    let (mut bins, mut dubious, mut witness) = per_bin(&least);
    if omega_const {
        let top = bins.iter().map(|b| b.omega.0).fold(OMEGA_LADDER[0], f64::max);
        (bins, dubious, witness) = per_bin(&|_| top);
    }
    GrowthFit {
        envelope: GrowthEnvelope::Nonuniform { bins, dubious },
        ladder: Vec::new(),
        witness_index: witness,
    }
}

pub fn estimate_growth(sys: &System, setting: Setting, cfg: &PanelConfig) -> Result<GrowthFit> {
    Ok(match setting {
        Setting::Uniform => fit_uniform(
            &ProbeSet::collect(sys, ProbeGrid::uniform(sys, cfg))?,
            cfg.growth_cap,
        ),
        Setting::Nonuniform => fit_nonuniform(
            &ProbeSet::collect(sys, ProbeGrid::nonuniform(sys, cfg))?,
            cfg.ncap_nonuniform,
            cfg.omega_const,
        ),
    })
}

/// Checks the envelope inequality with relative slack `1e-9` and returns the
/// first violating probe.
pub fn verify_growth(
    sys: &System,
    env: &GrowthEnvelope,
    probes: &ProbeSet,
) -> std::result::Result<(), Witness> {
    for s in &probes.samples {
        let (m, omega) = env.bound_for(s);
        let bound = m * (omega * s.lag()).exp();
        if s.ratio > bound * (1.0 + VERIFY_SLACK) {
            return Err(s.witness(sys, "growth envelope violated: ratio exceeds M e^{omega h}", s.ratio));
        }
    }
    Ok(())
}
