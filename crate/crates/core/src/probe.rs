//! Finite probe sets standing in for "for all (t, s, t0, x, v)".
//!
//! A probe records the growth ratio `|Phi(t,t0,x)v| / |Phi(s,t0,x)v|` for
//! `t >= s >= t0`. Regular probes come from trajectories sampled on a time
//! grid; seeded random probes and system-declared pairs are added on top.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PanelConfig;
use crate::error::Result;
use crate::report::Witness;
use crate::system::System;

pub const NU_LADDER: [f64; 8] = [0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Allowed growth of the late-lag constant over the early-lag constant
/// before a fitted rate counts as not sustained.
pub const PLATEAU_SLACK: f64 = 0.05;

/// Shortest lag horizon on which a decay fit is attempted.
pub const MIN_FIT_HORIZON: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub anchor_max: f64,
    pub anchor_step: f64,
    pub lag_max: f64,
    pub lag_step: f64,
    pub random: usize,
    pub seed: u64,
    pub include_extra: bool,
}

impl ProbeGrid {
    pub fn uniform(sys: &System, cfg: &PanelConfig) -> Self {
        ProbeGrid {
            anchor_max: sys.hints.anchor_max,
            anchor_step: cfg.anchor_step,
            lag_max: cfg.grid_h.unwrap_or(sys.hints.lag_max),
            lag_step: cfg.grid_step,
            random: cfg.random_probes,
            seed: cfg.seed,
            include_extra: true,
        }
    }

    pub fn nonuniform(sys: &System, cfg: &PanelConfig) -> Self {
        ProbeGrid {
            anchor_max: sys.hints.nonuniform_anchor_max,
            lag_max: cfg.grid_h.unwrap_or(sys.hints.nonuniform_lag_max),
            ..Self::uniform(sys, cfg)
        }
    }

    /// Integer times only: unit steps, no random or declared probes.
    pub fn integer(&self) -> Self {
        ProbeGrid {
            anchor_max: self.anchor_max.floor(),
            anchor_step: 1.0,
            lag_max: self.lag_max.floor(),
            lag_step: 1.0,
            random: 0,
            seed: self.seed,
            include_extra: false,
        }
    }

    pub fn lag_bins(&self) -> usize {
        (self.lag_max / self.lag_step + 1e-9).floor() as usize
    }

    fn anchor_count(&self) -> usize {
        (self.anchor_max / self.anchor_step + 1e-9).floor() as usize + 1
    }

    fn steps_per_anchor(&self) -> usize {
        (self.anchor_step / self.lag_step).round() as usize
    }

    pub fn anchors(&self) -> Vec<f64> {
        (0..self.anchor_count())
            .map(|i| i as f64 * self.anchor_step)
            .collect()
    }

    pub fn lag_of_bin(&self, bin: usize) -> f64 {
        bin as f64 * self.lag_step
    }

    pub fn s_of_bin(&self, bin: usize) -> f64 {
        bin as f64 * self.anchor_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub t0: f64,
    pub s: f64,
    pub t: f64,
    pub state: usize,
    pub vector: usize,
    pub lag_bin: usize,
    pub s_bin: usize,
    pub ratio: f64,
}

impl RatioSample {
    pub fn lag(&self) -> f64 {
        self.t - self.s
    }

    pub fn witness(&self, sys: &System, description: impl Into<String>, value: f64) -> Witness {
        Witness::new(description, value)
            .at(Some(self.t0), Some(self.s), Some(self.t))
            .state(sys.state_samples[self.state])
            .vector(&sys.vector_samples[self.vector])
    }
}

#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub grid: ProbeGrid,
    pub samples: Vec<RatioSample>,
    /// Probes skipped because `|Phi(s,t0,x)v| = 0`.
    pub degenerate: usize,
}

impl ProbeSet {
    pub fn collect(sys: &System, grid: ProbeGrid) -> Result<ProbeSet> {
        let r = grid.steps_per_anchor();
        let last_anchor = grid.anchor_count() - 1;
        let k_max = grid.lag_bins();
        let jobs: Vec<(usize, usize, usize)> = (0..=last_anchor)
            .flat_map(|a| {
                (0..sys.state_samples.len()).flat_map(move |x| {
                    (0..sys.vector_samples.len()).map(move |v| (a, x, v))
                })
            })
            .collect();

        let per_job: Vec<(Vec<RatioSample>, usize)> = jobs
            .par_iter()
            .map(|&(a, xi, vi)| {
                let x = &sys.state_samples[xi];
                let v = &sys.vector_samples[vi];
                let start = a * r;
                let end = last_anchor * r + k_max;
                let t0 = start as f64 * grid.lag_step;
                let mut norms = Vec::with_capacity(end - start + 1);
                for m in start..=end {
                    let tm = m as f64 * grid.lag_step;
                    norms.push(sys.vector_norm(&sys.apply_cocycle(tm, t0, x, v)?));
                }
                let mut out = Vec::new();
                let mut degenerate = 0;
                for ai in a..=last_anchor {
                    let ms = ai * r - start;
                    let den = norms[ms];
                    for k in 0..=k_max {
                        if den == 0.0 {
                            degenerate += 1;
                            continue;
                        }
                        out.push(RatioSample {
                            t0,
                            s: (ai * r) as f64 * grid.lag_step,
                            t: (ai * r + k) as f64 * grid.lag_step,
                            state: xi,
                            vector: vi,
                            lag_bin: k,
                            s_bin: ai,
                            ratio: norms[ms + k] / den,
                        });
                    }
                }
                Ok((out, degenerate))
            })
            .collect::<Result<_>>()?;

        let mut samples = Vec::new();
        let mut degenerate = 0;
        for (s, d) in per_job {
            samples.extend(s);
            degenerate += d;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
        let bin_lag = |h: f64| ((h / grid.lag_step).floor() as usize).min(k_max);
        let bin_s = |s: f64| ((s / grid.anchor_step + 1e-9).floor() as usize).min(last_anchor);
        for _ in 0..grid.random {
            let t0 = rng.gen_range(0.0..=grid.anchor_max);
            let s = rng.gen_range(t0..=grid.anchor_max);
            let t = s + rng.gen_range(0.0..=grid.lag_max);
            let xi = rng.gen_range(0..sys.state_samples.len());
            let vi = rng.gen_range(0..sys.vector_samples.len());
            let x = &sys.state_samples[xi];
            let v = &sys.vector_samples[vi];
            let den = sys.vector_norm(&sys.apply_cocycle(s, t0, x, v)?);
            if den == 0.0 {
                degenerate += 1;
                continue;
            }
            let num = sys.vector_norm(&sys.apply_cocycle(t, t0, x, v)?);
            samples.push(RatioSample {
                t0,
                s,
                t,
                state: xi,
                vector: vi,
                lag_bin: bin_lag(t - s),
                s_bin: bin_s(s),
                ratio: num / den,
            });
        }

        if grid.include_extra {
            for pair in &sys.extra_pairs {
                if pair.s > grid.anchor_max || pair.lag() > grid.lag_max {
                    continue;
                }
                for (xi, x) in sys.state_samples.iter().enumerate() {
                    for (vi, v) in sys.vector_samples.iter().enumerate() {
                        let den = sys.vector_norm(v);
                        let num = sys.vector_norm(&sys.apply_cocycle(pair.t, pair.s, x, v)?);
                        samples.push(RatioSample {
                            t0: pair.s,
                            s: pair.s,
                            t: pair.t,
                            state: xi,
                            vector: vi,
                            lag_bin: bin_lag(pair.lag()),
                            s_bin: bin_s(pair.s),
                            ratio: num / den,
                        });
                    }
                }
            }
        }

        Ok(ProbeSet {
            grid,
            samples,
            degenerate,
        })
    }

    pub fn max_ratio(&self) -> Option<&RatioSample> {
        self.samples
            .iter()
            .fold(None, |best: Option<&RatioSample>, s| match best {
                Some(b) if b.ratio >= s.ratio => Some(b),
                _ => Some(s),
            })
    }
}

/// Early/late maxima of `e^{nu h} ratio` split at `split`, keyed by s-bin
/// (or a single key when `by_bin` is false).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub early: f64,
    pub late: f64,
    pub early_arg: usize,
    pub late_arg: usize,
}

impl Plateau {
    pub fn max(&self) -> f64 {
        self.early.max(self.late)
    }

    pub fn sustained(&self) -> bool {
        self.late <= self.early * (1.0 + PLATEAU_SLACK)
    }

    pub fn arg_max(&self) -> usize {
        if self.late > self.early {
            self.late_arg
        } else {
            self.early_arg
        }
    }
}

pub fn weighted_plateaus(
    samples: &[RatioSample],
    nu: f64,
    split: f64,
    by_bin: bool,
) -> BTreeMap<usize, Plateau> {
    let mut out: BTreeMap<usize, Plateau> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = if by_bin { s.s_bin } else { 0 };
        let w = (nu * s.lag()).exp() * s.ratio;
        let p = out.entry(key).or_insert(Plateau {
            early: 0.0,
            late: 0.0,
            early_arg: i,
            late_arg: i,
        });
        if s.lag() <= split {
            if w > p.early {
                p.early = w;
                p.early_arg = i;
            }
        } else if w > p.late {
            p.late = w;
            p.late_arg = i;
        }
    }
    out
}

/// One rung of a decay-rate ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung {
    pub nu: f64,
    pub plateaus: BTreeMap<usize, Plateau>,
    pub accepted: bool,
}

impl LadderRung {
    pub fn worst(&self) -> f64 {
        self.plateaus.values().map(Plateau::max).fold(0.0, f64::max)
    }
}

/// Scans the rate ladder; a rate is accepted when every constant stays
/// within `cap` and does not keep growing over the second half of the lags.
pub fn scan_ladder(samples: &[RatioSample], lag_max: f64, cap: f64, by_bin: bool) -> Vec<LadderRung> {
    NU_LADDER
        .iter()
        .map(|&nu| {
            let plateaus = weighted_plateaus(samples, nu, lag_max / 2.0, by_bin);
            let accepted = !plateaus.is_empty()
                && plateaus.values().all(|p| p.max() <= cap && p.sustained());
            LadderRung {
                nu,
                plateaus,
                accepted,
            }
        })
        .collect()
}

pub fn best_rung(ladder: &[LadderRung]) -> Option<&LadderRung> {
    ladder.iter().rev().find(|r| r.accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn regular_grid_layout() {
        let sys = gallery::build("tsint", &Default::default()).unwrap();
        let grid = ProbeGrid {
            anchor_max: 1.0,
            anchor_step: 0.5,
            lag_max: 1.0,
            lag_step: 0.1,
            random: 0,
            seed: 0,
            include_extra: false,
        };
        let set = ProbeSet::collect(&sys, grid).unwrap();
        // Anchors {0, 0.5, 1}; s ranges over anchors >= t0; 11 lags each.
        let per_traj = (3 + 2 + 1) * 11;
        assert_eq!(set.samples.len(), per_traj * sys.state_samples.len());
        assert!(set.samples.iter().all(|s| s.t >= s.s && s.s >= s.t0));
        assert!(set
            .samples
            .iter()
            .filter(|s| s.lag_bin == 0)
            .all(|s| s.ratio == 1.0));
    }

    #[test]
    fn exact_exponential_fits_its_rate() {
        let sys = gallery::build("shift-metric-demo", &Default::default()).unwrap();
        let set = ProbeSet::collect(&sys, ProbeGrid::uniform(&sys, &PanelConfig::default())).unwrap();
        let ladder = scan_ladder(&set.samples, 10.0, 1e3, false);
        let best = best_rung(&ladder).unwrap();
        assert_eq!(best.nu, 1.0);
        assert!((best.worst() - 1.0).abs() < 1e-12);
    }
}
