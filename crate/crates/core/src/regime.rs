//! First-order asymptotic regimes.
//!
//! The regime depends only on the summability of `r_n` and `r_n (1 - r_n)`,
//! the period of `W^T`, the normalisation mode, and whether the start is a
//! barrier point. Each verdict lists the checkable predictions the harness
//! evaluates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, Mode};
use crate::schedule::{Flags, ReinforcementSchedule, Summability};
use crate::spectral::period;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    TrivialAbsorbed,
    ForcedToZero,
    ConvergeNoSync,
    CompleteSync,
    PeriodicPartialSync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpectationName {
    StaysAtStart,
    ConvergesToZero,
    Converges,
    PositivePairwiseGap,
    GlobalSync,
    WithinClassSync,
    Z2Vanishes,
    Z3Vanishes,
    LimitSetBarriers,
    NormOfClassProcessConverges,
    ClockwiseRotation,
    InterClockStationarity,
    ClockActionAgreement,
    MixedPolarization,
    /// Transient vertices of a reducible matrix approach convex combinations
    /// of the recurrent limits. Never checked.
    TransientConvexCombination,
}

impl ExpectationName {
    pub fn reference(self) -> &'static str {
        use ExpectationName::*;
        match self {
            StaysAtStart => "a start in {0,1} is absorbing",
            ConvergesToZero => "forcing input drives every inclination to 0 when sum r_n diverges",
            Converges => "Z_n converges almost surely",
            PositivePairwiseGap => "sum r_n finite: limits differ with positive probability",
            GlobalSync => "sum r_n(1-r_n) infinite, or period 1: complete synchronization",
            WithinClassSync => "differences inside each cyclic class vanish",
            Z2Vanishes => "the periodic component vanishes under complete synchronization",
            Z3Vanishes => "the residual component vanishes when sum r_n diverges",
            LimitSetBarriers => "class averages approach the barrier set {0,1}",
            NormOfClassProcessConverges => "the norm of the class process converges",
            ClockwiseRotation => "class values shift by one class at every clock time",
            InterClockStationarity => "inclinations are nearly frozen between clock times",
            ClockActionAgreement => "actions agree inside each class at late clock times",
            MixedPolarization => "with positive probability some classes end near 1 and others near 0",
            TransientConvexCombination => {
                "transient vertices approach convex combinations of recurrent limits"
            }
        }
    }

    pub fn is_informational(self) -> bool {
        self == ExpectationName::TransientConvexCombination
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub name: ExpectationName,
    pub reference: String,
}

impl From<ExpectationName> for Expectation {
    fn from(name: ExpectationName) -> Self {
        Self { name, reference: name.reference().to_owned() }
    }
}

/// A cell of the summary table of first-order behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstOrder {
    pub almost_sure_convergence: bool,
    pub complete_sync: bool,
    pub within_class_sync: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub kind: RegimeKind,
    pub first_order: FirstOrder,
    pub expectations: Vec<Expectation>,
}

impl RegimeVerdict {
    pub fn expects(&self, name: ExpectationName) -> bool {
        self.expectations.iter().any(|e| e.name == name)
    }
}

impl RegimeKind {
    pub fn first_order(self) -> FirstOrder {
        let (a, c, w) = match self {
            RegimeKind::TrivialAbsorbed | RegimeKind::ForcedToZero | RegimeKind::CompleteSync => {
                (true, true, true)
            }
            RegimeKind::ConvergeNoSync => (true, false, false),
            RegimeKind::PeriodicPartialSync => (false, false, true),
        };
        FirstOrder { almost_sure_convergence: a, complete_sync: c, within_class_sync: w }
    }

    pub fn expectations(self) -> Vec<ExpectationName> {
        use ExpectationName::*;
        match self {
            RegimeKind::TrivialAbsorbed => vec![StaysAtStart],
            RegimeKind::ForcedToZero => vec![ConvergesToZero],
            RegimeKind::ConvergeNoSync => vec![Converges, PositivePairwiseGap],
            // convergence of the common value is slow, so only the
            // synchronisation itself is checked
            RegimeKind::CompleteSync => vec![GlobalSync, WithinClassSync, Z2Vanishes, Z3Vanishes],
            RegimeKind::PeriodicPartialSync => vec![
                WithinClassSync,
                Z3Vanishes,
                LimitSetBarriers,
                NormOfClassProcessConverges,
                ClockwiseRotation,
                InterClockStationarity,
                ClockActionAgreement,
                MixedPolarization,
            ],
        }
    }

    pub fn verdict(self) -> RegimeVerdict {
        RegimeVerdict {
            kind: self,
            first_order: self.first_order(),
            expectations: self.expectations().into_iter().map(Expectation::from).collect(),
        }
    }
}

/// Predicted regime. `trivial_start` means `Z_0` is `0` or `1` with
/// certainty.
pub fn classify(
    sum_r: Summability,
    sum_r_one_minus_r: Summability,
    n_per: usize,
    trivial_start: bool,
    mode: Mode,
) -> Result<RegimeVerdict> {
    use Summability::*;
    if sum_r == Finite && sum_r_one_minus_r == Infinite {
        return Err(Error::InconsistentFlags);
    }
    if n_per == 0 {
        return Err(Error::InvalidParam("period must be at least 1".into()));
    }
    // With a forcing input only 0 is absorbing, so the forcing check comes
    // first.
    let kind = if mode == Mode::Generalized && sum_r == Infinite {
        RegimeKind::ForcedToZero
    } else if trivial_start {
        RegimeKind::TrivialAbsorbed
    } else if sum_r == Finite {
        RegimeKind::ConvergeNoSync
    } else if sum_r_one_minus_r == Infinite || n_per == 1 {
        RegimeKind::CompleteSync
    } else {
        RegimeKind::PeriodicPartialSync
    };
    Ok(kind.verdict())
}

/// Whether `z0` is a barrier point of the dynamics under `mode`.
pub fn is_trivial_start(z0: &[f64], mode: Mode) -> bool {
    z0.iter().all(|&z| z == 0.0) || (mode == Mode::Stochastic && z0.iter().all(|&z| z == 1.0))
}

/// [`classify`] for a concrete irreducible setup.
pub fn classify_setup(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
) -> Result<RegimeVerdict> {
    let Flags { sum_r, sum_r_one_minus_r } = schedule.flags;
    classify(sum_r, sum_r_one_minus_r, period(m)?, is_trivial_start(z0, m.mode()), m.mode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Summability::*;

    #[test]
    fn table_examples() {
        let v = classify(Finite, Finite, 2, false, Mode::Stochastic).unwrap();
        assert_eq!(v.kind, RegimeKind::ConvergeNoSync);
        assert!(v.expects(ExpectationName::PositivePairwiseGap));
        let v = classify(Infinite, Infinite, 2, false, Mode::Stochastic).unwrap();
        assert_eq!(v.kind, RegimeKind::CompleteSync);
        let v = classify(Infinite, Finite, 6, false, Mode::Stochastic).unwrap();
        assert_eq!(v.kind, RegimeKind::PeriodicPartialSync);
        assert!(!v.first_order.almost_sure_convergence);
        let v = classify(Infinite, Finite, 1, false, Mode::Stochastic).unwrap();
        assert_eq!(v.kind, RegimeKind::CompleteSync);
    }

    #[test]
    fn inconsistent_flags() {
        assert_eq!(
            classify(Finite, Infinite, 1, false, Mode::Stochastic),
            Err(Error::InconsistentFlags)
        );
    }

    #[test]
    fn trivial_and_forced() {
        let v = classify(Infinite, Finite, 3, true, Mode::Stochastic).unwrap();
        assert_eq!(v.kind, RegimeKind::TrivialAbsorbed);
        let v = classify(Infinite, Infinite, 1, false, Mode::Generalized).unwrap();
        assert_eq!(v.kind, RegimeKind::ForcedToZero);
        let v = classify(Finite, Finite, 1, false, Mode::Generalized).unwrap();
        assert_eq!(v.kind, RegimeKind::ConvergeNoSync);
    }

    #[test]
    fn complete_implies_within_class() {
        assert!(RegimeKind::CompleteSync.expectations().contains(&ExpectationName::WithinClassSync));
    }

    #[test]
    fn trivial_start_detection() {
        assert!(is_trivial_start(&[0.0, 0.0], Mode::Stochastic));
        assert!(is_trivial_start(&[1.0, 1.0], Mode::Stochastic));
        assert!(!is_trivial_start(&[1.0, 1.0], Mode::Generalized));
        assert!(!is_trivial_start(&[0.0, 1.0], Mode::Stochastic));
    }

    #[test]
    fn verdict_json_shape() {
        let v = classify(Infinite, Finite, 2, false, Mode::Stochastic).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["kind"], "PeriodicPartialSync");
        assert_eq!(json["expectations"][0]["name"], "WithinClassSync");
        assert!(json["expectations"][0]["reference"].is_string());
    }
}
