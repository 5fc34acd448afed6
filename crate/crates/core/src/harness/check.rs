use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleStats, Polarization, Thresholds};
use crate::error::{Error, Result};
use crate::regime::{ExpectationName, RegimeKind, RegimeVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: ExpectationName,
    pub outcome: Outcome,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub kind: RegimeKind,
    pub thresholds: Thresholds,
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    /// No expectation failed.
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.outcome != Outcome::Fail)
    }
}

fn below(name: ExpectationName, stat: f64, threshold: f64, note: &str) -> CheckResult {
    CheckResult {
        name,
        outcome: if stat < threshold { Outcome::Pass } else { Outcome::Fail },
        statistic: Some(stat),
        threshold: Some(threshold),
        note: note.to_owned(),
    }
}

fn above(name: ExpectationName, stat: f64, threshold: f64, note: &str) -> CheckResult {
    CheckResult {
        name,
        outcome: if stat > threshold { Outcome::Pass } else { Outcome::Fail },
        statistic: Some(stat),
        threshold: Some(threshold),
        note: note.to_owned(),
    }
}

fn at_least(name: ExpectationName, stat: f64, threshold: f64, note: &str) -> CheckResult {
    CheckResult {
        name,
        outcome: if stat >= threshold { Outcome::Pass } else { Outcome::Fail },
        statistic: Some(stat),
        threshold: Some(threshold),
        note: note.to_owned(),
    }
}

fn skipped(name: ExpectationName, outcome: Outcome, note: &str) -> CheckResult {
    CheckResult { name, outcome, statistic: None, threshold: None, note: note.to_owned() }
}

fn missing(what: &str) -> Error {
    Error::MissingDiagnostic(what.to_owned())
}

/// Evaluates every expectation of `verdict` against `stats`.
pub fn check_verdict(
    stats: &EnsembleStats,
    verdict: &RegimeVerdict,
    th: &Thresholds,
) -> Result<CheckReport> {
    use ExpectationName::*;
    let clock_window = stats.late_window.is_clock();
    let no_clock_note = "late window is not clock-based (too few clock times)";
    let mut results = Vec::new();
    for e in &verdict.expectations {
        let name = e.name;
        let result = match name {
            StaysAtStart => {
                let moved = stats.max_of(|r| {
                    Some(r.terminal.z.iter().zip(&r.z0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                });
                let stat = moved.unwrap_or(0.0);
                CheckResult {
                    name,
                    outcome: if stat == 0.0 { Outcome::Pass } else { Outcome::Fail },
                    statistic: Some(stat),
                    threshold: Some(0.0),
                    note: "max terminal displacement from Z_0".into(),
                }
            }
            ConvergesToZero => {
                let stat = stats.median_of(|r| Some(r.terminal.max_z)).ok_or_else(|| missing("max_z"))?;
                below(name, stat, th.eps_barrier, "median terminal max_l Z_l")
            }
            Converges => {
                let stat = stats.max_of(|r| Some(r.late.z_variation)).ok_or_else(|| missing("z"))?;
                below(name, stat, th.eps_conv, "max over replicates of late range of Z_l")
            }
            PositivePairwiseGap => {
                let frac = stats.fraction(|r| r.terminal.spread_global > th.eps_gap);
                let mut r = at_least(
                    name,
                    frac,
                    th.gap_floor,
                    "fraction of replicates with terminal global spread above eps_gap",
                );
                if stats.trivial_start {
                    r.outcome = Outcome::Fail;
                    r.note = "precondition violated: trivial start is absorbed, no gap possible".into();
                }
                r
            }
            GlobalSync => {
                let stat = stats
                    .median_of(|r| r.late.spread_global)
                    .ok_or_else(|| missing("spread_global"))?;
                below(name, stat, th.eps_sync, "median late global spread")
            }
            WithinClassSync => {
                let stat = stats
                    .median_of(|r| r.late.spread_within_class)
                    .ok_or_else(|| missing("spread_within_class"))?;
                below(name, stat, th.eps_sync, "median late within-class spread")
            }
            Z2Vanishes => {
                let stat = stats.median_of(|r| r.late.z2_norm).ok_or_else(|| missing("z2_norm"))?;
                below(name, stat, th.eps_sync, "median late ||Z2||")
            }
            Z3Vanishes => {
                let stat = stats.median_of(|r| r.late.z3_norm).ok_or_else(|| missing("z3_norm"))?;
                below(name, stat, th.eps_sync, "median late ||Z3||")
            }
            LimitSetBarriers => {
                let stat = stats
                    .median_of(|r| r.late.barrier_distance)
                    .ok_or_else(|| missing("barrier_distance"))?;
                below(name, stat, th.eps_barrier, "median late max_h Zc_h (1 - Zc_h)")
            }
            NormOfClassProcessConverges => {
                let stat = stats
                    .max_of(|r| r.late.norm_zc_variation)
                    .ok_or_else(|| missing("norm_zc"))?;
                below(name, stat, th.eps_rot, "max over replicates of late range of ||Zc||")
            }
            ClockwiseRotation if !clock_window => skipped(name, Outcome::NotApplicable, no_clock_note),
            ClockwiseRotation => {
                let stat = stats
                    .median_of(|r| r.late.rotation_error)
                    .ok_or_else(|| missing("rotation_error"))?;
                below(name, stat, th.eps_rot, "median late clock rotation error")
            }
            InterClockStationarity if !clock_window => {
                skipped(name, Outcome::NotApplicable, no_clock_note)
            }
            InterClockStationarity => {
                let stat = stats
                    .median_of(|r| r.late.inter_clock_sup)
                    .ok_or_else(|| missing("inter_clock_sup"))?;
                below(name, stat, th.eps_rot, "median late inter-clock sup-norm")
            }
            ClockActionAgreement => match stats.fraction_defined(|r| r.action_agreement) {
                None => skipped(name, Outcome::NotApplicable, "too few clock times recorded"),
                Some(frac) => at_least(
                    name,
                    frac,
                    th.agreement_floor,
                    "fraction of replicates whose actions agree within classes at the last clock times",
                ),
            },
            MixedPolarization => match stats.n_per {
                Some(k) if k >= 2 => {
                    let stat = stats.fraction(|r| r.polarization == Some(Polarization::Mixed));
                    above(name, stat, th.mixed_floor, "fraction of replicates with mixed polarization")
                }
                _ => skipped(name, Outcome::NotApplicable, "requires period at least 2"),
            },
            TransientConvexCombination => {
                skipped(name, Outcome::Informational, "informational, not checked")
            }
        };
        results.push(result);
    }
    Ok(CheckReport { kind: verdict.kind, thresholds: th.clone(), results })
}
