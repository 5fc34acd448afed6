//! Reinforcement sequences `(r_n)_{n >= 0}` and clock times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CLAMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summability {
    Finite,
    Infinite,
}

/// Increments `alpha_k` of a time-dependent Pólya urn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UrnIncrements {
    Constant(f64),
    /// `alpha_1, alpha_2, ...`; flags must then be declared on the family.
    Sequence(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScheduleFamily {
    /// `r_n = c n^{-gamma}`.
    Power { c: f64, gamma: f64 },
    /// `r_n = alpha_{n+1} / (s0 + sum_{k <= n+1} alpha_k)`.
    UrnDerived {
        s0: f64,
        alpha: UrnIncrements,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<Flags>,
    },
    /// `r_n = 1 - c n^{-gamma}` when `k | n`, `c n^{-gamma}` otherwise.
    Spike { k: usize, c: f64, gamma: f64 },
    Constant { r: f64 },
    /// Explicit values `r_0, r_1, ...` with declared summability.
    Custom {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<Flags>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub sum_r: Summability,
    pub sum_r_one_minus_r: Summability,
}

impl Flags {
    pub const fn new(sum_r: Summability, sum_r_one_minus_r: Summability) -> Self {
        Self { sum_r, sum_r_one_minus_r }
    }
}

/// A validated reinforcement sequence. Built from a [`ScheduleFamily`]; only
/// the family (plus clamp) is needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReinforcementSchedule {
    pub family: ScheduleFamily,
    pub clamp_eps: f64,
    pub flags: Flags,
    #[serde(skip)]
    urn_totals: Vec<f64>,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{name} must be positive and finite, got {x}")))
    }
}

impl ReinforcementSchedule {
    pub fn new(family: ScheduleFamily) -> Result<Self> {
        Self::with_clamp(family, DEFAULT_CLAMP_EPS)
    }

    pub fn with_clamp(family: ScheduleFamily, clamp_eps: f64) -> Result<Self> {
        use Summability::*;
        if !(clamp_eps > 0.0 && clamp_eps < 0.5) {
            return Err(Error::InvalidParam(format!("clamp_eps must lie in (0, 1/2), got {clamp_eps}")));
        }
        let mut urn_totals = Vec::new();
        let flags = match &family {
            ScheduleFamily::Power { c, gamma } => {
                positive("c", *c)?;
                positive("gamma", *gamma)?;
                // r_n -> 0, so both series behave alike
                let s = if *gamma <= 1.0 { Infinite } else { Finite };
                Flags::new(s, s)
            }
            ScheduleFamily::UrnDerived { s0, alpha, flags } => {
                positive("s0", *s0)?;
                match alpha {
                    UrnIncrements::Constant(a) => {
                        positive("alpha", *a)?;
                        Flags::new(Infinite, Infinite)
                    }
                    UrnIncrements::Sequence(values) => {
                        let mut total = *s0;
                        for (k, a) in values.iter().enumerate() {
                            positive(&format!("alpha_{}", k + 1), *a)?;
                            total += a;
                            urn_totals.push(total);
                        }
                        flags.ok_or(Error::MissingFlags)?
                    }
                }
            }
            ScheduleFamily::Spike { k, c, gamma } => {
                if *k < 2 {
                    return Err(Error::InvalidParam(format!("spike spacing k must be >= 2, got {k}")));
                }
                positive("c", *c)?;
                positive("gamma", *gamma)?;
                Flags::new(Infinite, if *gamma > 1.0 { Finite } else { Infinite })
            }
            ScheduleFamily::Constant { r } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::InvalidParam(format!("constant r must lie in (0, 1), got {r}")));
                }
                Flags::new(Infinite, Infinite)
            }
            ScheduleFamily::Custom { values, flags } => {
                if let Some((i, r)) = values.iter().enumerate().find(|(_, r)| !r.is_finite()) {
                    return Err(Error::InvalidParam(format!("r_{i} = {r} is not finite")));
                }
                flags.ok_or(Error::MissingFlags)?
            }
        };
        if flags.sum_r == Finite && flags.sum_r_one_minus_r == Infinite {
            return Err(Error::InconsistentFlags);
        }
        Ok(Self { family, clamp_eps, flags, urn_totals })
    }

    /// Convenience constructors.
    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        Self::new(ScheduleFamily::Power { c, gamma })
    }

    pub fn spike(k: usize, c: f64, gamma: f64) -> Result<Self> {
        Self::new(ScheduleFamily::Spike { k, c, gamma })
    }

    pub fn constant(r: f64) -> Result<Self> {
        Self::new(ScheduleFamily::Constant { r })
    }

    pub fn urn(s0: f64, alpha: f64) -> Result<Self> {
        Self::new(ScheduleFamily::UrnDerived { s0, alpha: UrnIncrements::Constant(alpha), flags: None })
    }

    pub fn custom(values: Vec<f64>, flags: Flags) -> Result<Self> {
        Self::new(ScheduleFamily::Custom { values, flags: Some(flags) })
    }

    /// Spikes `r_n = 1 - c n^{-gamma}` at the sparse indices
    /// `floor(a^{-k})`, `k >= 1`, and `r_n = c n^{-gamma}` elsewhere, tabulated
    /// for `n < len`. The gaps between spikes grow geometrically.
    pub fn geometric_spikes(a: f64, c: f64, gamma: f64, len: usize) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::InvalidParam(format!("a must lie in (0, 1/2), got {a}")));
        }
        positive("c", c)?;
        positive("gamma", gamma)?;
        let mut spikes = std::collections::BTreeSet::new();
        let mut k = 1;
        loop {
            let idx = a.powi(-k).floor();
            if idx >= len as f64 {
                break;
            }
            spikes.insert(idx as usize);
            k += 1;
        }
        let values = (0..len)
            .map(|n| {
                // n = 0 diverges; cap it and let the clamp handle it
                let u = (c * (n as f64).powf(-gamma)).min(1.0);
                if spikes.contains(&n) { 1.0 - u } else { u }
            })
            .collect();
        let flags = Flags::new(
            Summability::Infinite,
            if gamma > 1.0 { Summability::Finite } else { Summability::Infinite },
        );
        Self::custom(values, flags)
    }

    /// Number of terms available, `None` for unbounded families.
    pub fn available(&self) -> Option<usize> {
        match &self.family {
            ScheduleFamily::Custom { values, .. } => Some(values.len()),
            ScheduleFamily::UrnDerived { alpha: UrnIncrements::Sequence(_), .. } => {
                Some(self.urn_totals.len())
            }
            _ => None,
        }
    }

    /// Checks that `r_0, ..., r_{horizon-1}` are defined.
    pub fn ensure_covers(&self, horizon: usize) -> Result<()> {
        match self.available() {
            Some(available) if available < horizon => {
                Err(Error::ScheduleTooShort { available, required: horizon })
            }
            _ => Ok(()),
        }
    }

    fn raw(&self, n: usize) -> f64 {
        let nf = n as f64;
        match &self.family {
            ScheduleFamily::Power { c, gamma } => c * nf.powf(-gamma),
            ScheduleFamily::UrnDerived { s0, alpha, .. } => match alpha {
                UrnIncrements::Constant(a) => a / (s0 + (nf + 1.0) * a),
                UrnIncrements::Sequence(values) => values[n] / self.urn_totals[n],
            },
            ScheduleFamily::Spike { k, c, gamma } => {
                let u = c * nf.powf(-gamma);
                if n.is_multiple_of(*k) { 1.0 - u } else { u }
            }
            ScheduleFamily::Constant { r } => *r,
            ScheduleFamily::Custom { values, .. } => values[n],
        }
    }

    /// `r_n`, clamped into `[eps, 1 - eps]`.
    ///
    /// Panics if `n` is past the end of a tabulated schedule; see
    /// [`ensure_covers`](Self::ensure_covers).
    pub fn r(&self, n: usize) -> f64 {
        self.raw(n).clamp(self.clamp_eps, 1.0 - self.clamp_eps)
    }

    pub fn take(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.r(n)).collect()
    }
}

/// Clock times of a schedule up to a horizon.
///
/// `delta_n = 1{r_n > 1/2}` for `n >= 1`, `tau_k` is the index of the `k`-th
/// such `n`, and `sigma_k = tau_k + 1` is the first step whose inclination
/// reflects the large reinforcement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockTimes {
    pub tau: Vec<usize>,
    pub sigma: Vec<usize>,
}

impl ClockTimes {
    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }
}

/// All clock times `sigma_k <= horizon`.
pub fn clock_times(schedule: &ReinforcementSchedule, horizon: usize) -> ClockTimes {
    let tau: Vec<usize> = (1..horizon).filter(|&n| schedule.r(n) > 0.5).collect();
    let sigma = tau.iter().map(|t| t + 1).collect();
    ClockTimes { tau, sigma }
}
