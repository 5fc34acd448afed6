use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median, quantile_sorted};
use crate::dynamics::{replicate_rng, validate_z0, CheckpointPlan, Simulation, Trajectory};
use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, MatrixFile};
use crate::regime::is_trivial_start;
use crate::schedule::{ReinforcementSchedule, ScheduleFamily, DEFAULT_CLAMP_EPS};
use crate::spectral::SpectralStructure;

/// Initial inclinations of every replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Constant { value: f64 },
    Values { values: Vec<f64> },
    /// Independent uniform draws in `(0, 1)`, one vector per replicate.
    UniformInterior { seed: u64 },
}

impl InitialState {
    /// `Z_0` of replicate `index`.
    pub fn resolve(&self, n: usize, index: usize) -> Result<Vec<f64>> {
        let z0 = match self {
            InitialState::Constant { value } => vec![*value; n],
            InitialState::Values { values } => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: values.len() });
                }
                values.clone()
            }
            InitialState::UniformInterior { seed } => {
                let mut rng = replicate_rng(*seed, index as u64);
                (0..n)
                    .map(|_| loop {
                        let u: f64 = rng.gen();
                        if u > 0.0 {
                            break u;
                        }
                    })
                    .collect()
            }
        };
        validate_z0(&z0)?;
        Ok(z0)
    }

    /// Whether every replicate starts at a barrier point.
    pub fn is_trivial(&self, n: usize, mode: crate::Mode) -> Result<bool> {
        Ok(match self {
            InitialState::UniformInterior { .. } => false,
            _ => is_trivial_start(&self.resolve(n, 0)?, mode),
        })
    }
}

/// Calibration thresholds of the verdict checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub eps_sync: f64,
    pub eps_barrier: f64,
    pub eps_rot: f64,
    pub eps_gap: f64,
    pub eps_conv: f64,
    pub late_fraction: f64,
    pub late_clock_count: usize,
    pub mixed_floor: f64,
    pub gap_floor: f64,
    pub agreement_floor: f64,
    pub agreement_clock_count: usize,
    pub polarization_eps: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_sync: 0.05,
            eps_barrier: 0.01,
            eps_rot: 0.05,
            eps_gap: 0.1,
            eps_conv: 0.02,
            late_fraction: 0.2,
            late_clock_count: 10,
            mixed_floor: 0.05,
            gap_floor: 0.2,
            agreement_floor: 0.95,
            agreement_clock_count: 5,
            polarization_eps: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let eps = [
            ("eps_sync", self.eps_sync),
            ("eps_barrier", self.eps_barrier),
            ("eps_rot", self.eps_rot),
            ("eps_gap", self.eps_gap),
            ("eps_conv", self.eps_conv),
            ("polarization_eps", self.polarization_eps),
        ];
        for (name, x) in eps {
            if !(x > 0.0 && x < 0.5) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1/2), got {x}")));
            }
        }
        for (name, x) in [
            ("late_fraction", self.late_fraction),
            ("mixed_floor", self.mixed_floor),
            ("gap_floor", self.gap_floor),
            ("agreement_floor", self.agreement_floor),
        ] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1], got {x}")));
            }
        }
        if self.late_clock_count == 0 || self.agreement_clock_count == 0 {
            return Err(Error::InvalidConfig("clock counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub matrix: InteractionMatrix,
    pub schedule: ReinforcementSchedule,
    pub z0: InitialState,
    pub replicates: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub plan: CheckpointPlan,
    pub thresholds: Thresholds,
}

/// Matrix given inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Path(String),
    Inline(MatrixFile),
}

/// JSON form of an [`EnsembleConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub matrix: MatrixSource,
    pub schedule: ScheduleFamily,
    #[serde(default = "default_clamp")]
    pub clamp_eps: f64,
    pub z0: InitialState,
    #[serde(default = "one")]
    pub replicates: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plan: CheckpointPlan,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_clamp() -> f64 {
    DEFAULT_CLAMP_EPS
}

fn one() -> usize {
    1
}

impl ConfigFile {
    /// Loads the matrix and builds the schedule. Relative matrix paths are
    /// resolved against `base_dir`. The result is not validated as an
    /// ensemble, since single runs also accept `horizon = 0`.
    pub fn resolve(&self, base_dir: &Path) -> Result<EnsembleConfig> {
        let matrix = match &self.matrix {
            MatrixSource::Inline(file) => InteractionMatrix::from_file(file)?,
            MatrixSource::Path(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::InvalidConfig(format!("cannot read matrix {}: {e}", path.display()))
                })?;
                let file: MatrixFile = serde_json::from_str(&text).map_err(|e| {
                    Error::InvalidConfig(format!("bad matrix file {}: {e}", path.display()))
                })?;
                InteractionMatrix::from_file(&file)?
            }
        };
        Ok(EnsembleConfig {
            matrix,
            schedule: ReinforcementSchedule::with_clamp(self.schedule.clone(), self.clamp_eps)?,
            z0: self.z0.clone(),
            replicates: self.replicates,
            horizon: self.horizon,
            master_seed: self.seed,
            plan: self.plan.clone(),
            thresholds: self.thresholds.clone(),
        })
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        self.thresholds.validate()?;
        self.schedule.ensure_covers(self.horizon)?;
        self.z0.resolve(self.matrix.n(), 0)?;
        Ok(())
    }

    /// Self-contained JSON form with the matrix inlined.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            matrix: MatrixSource::Inline(self.matrix.to_file()),
            schedule: self.schedule.family.clone(),
            clamp_eps: self.schedule.clamp_eps,
            z0: self.z0.clone(),
            replicates: self.replicates,
            horizon: self.horizon,
            seed: self.master_seed,
            plan: self.plan.clone(),
            thresholds: self.thresholds.clone(),
        }
    }

    pub fn simulation(&self) -> Result<Simulation<'_>> {
        Simulation::new(&self.matrix, &self.schedule, self.horizon, self.plan.clone())
    }

    /// Full trajectory of replicate `index`.
    pub fn replicate(&self, index: usize) -> Result<Trajectory> {
        let z0 = self.z0.resolve(self.matrix.n(), index)?;
        self.simulation()?.run(&z0, self.master_seed, index as u64)
    }
}

/// Per-checkpoint scalar statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SpreadGlobal,
    SpreadWithinClass,
    Z2Norm,
    Z3Norm,
    VStat,
    NormZc,
    BarrierDistance,
    PolarizationCount,
    LowCount,
    ZTilde,
    MaxZ,
    /// `max_h |Zc_{sigma_k, h-1} - Zc_{sigma_{k-1}, h}|`.
    RotationError,
    InterClockSup,
    /// `max_l |N_{n,l} - [W^T Z_n]_l|`.
    MeanGap,
}

impl Metric {
    pub const ALL: [Metric; 14] = [
        Metric::SpreadGlobal,
        Metric::SpreadWithinClass,
        Metric::Z2Norm,
        Metric::Z3Norm,
        Metric::VStat,
        Metric::NormZc,
        Metric::BarrierDistance,
        Metric::PolarizationCount,
        Metric::LowCount,
        Metric::ZTilde,
        Metric::MaxZ,
        Metric::RotationError,
        Metric::InterClockSup,
        Metric::MeanGap,
    ];
}

const METRICS: usize = Metric::ALL.len();
type Row = [f64; METRICS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    fn of(mut values: Vec<f64>) -> Option<Self> {
        values.retain(|x| !x.is_nan());
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        Some(Self {
            count: values.len(),
            min: values[0],
            q25: quantile_sorted(&values, 0.25),
            median: quantile_sorted(&values, 0.5),
            q75: quantile_sorted(&values, 0.75),
            max: values[values.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub n: usize,
    pub is_clock: bool,
    /// Quantiles across replicates of each recorded metric.
    pub metrics: Vec<(Metric, Quantiles)>,
}

impl CheckpointStats {
    pub fn get(&self, metric: Metric) -> Option<&Quantiles> {
        self.metrics.iter().find(|(m, _)| *m == metric).map(|(_, q)| q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LateWindow {
    /// The last `count` clock checkpoints.
    Clock { count: usize },
    /// The last `count` checkpoints, `fraction` of all recorded.
    Fraction { fraction: f64, count: usize },
}

impl LateWindow {
    pub fn is_clock(&self) -> bool {
        matches!(self, LateWindow::Clock { .. })
    }
}

/// Window averages (or ranges) of one replicate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LateStats {
    pub spread_global: Option<f64>,
    pub spread_within_class: Option<f64>,
    pub z2_norm: Option<f64>,
    pub z3_norm: Option<f64>,
    pub barrier_distance: Option<f64>,
    pub rotation_error: Option<f64>,
    pub inter_clock_sup: Option<f64>,
    /// Range of `||Zc||` over the window.
    pub norm_zc_variation: Option<f64>,
    /// `max_l` of the range of `Z_l` over the window.
    pub z_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub z: Vec<f64>,
    pub z_tilde: Option<f64>,
    pub spread_global: f64,
    pub spread_within_class: Option<f64>,
    pub z2_norm: Option<f64>,
    pub z3_norm: Option<f64>,
    pub barrier_distance: Option<f64>,
    pub max_z: f64,
    pub mean_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    AllZero,
    AllOne,
    Mixed,
    /// Some class is not yet within `polarization_eps` of a barrier.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub index: usize,
    pub z0: Vec<f64>,
    pub terminal: TerminalStats,
    pub late: LateStats,
    pub polarization: Option<Polarization>,
    /// Number of classes near 1 at the final clock time.
    pub n_infinity: Option<usize>,
    /// Actions agree inside every class at the last clock times.
    pub action_agreement: Option<bool>,
    /// `max_l |N_{sigma_last} - N_{sigma_prev}|` over the last two clock times.
    pub clock_mean_jump: Option<f64>,
    #[serde(skip)]
    rows: Vec<Row>,
    #[serde(skip)]
    positions: Vec<(usize, bool)>,
    #[serde(skip)]
    window: Option<LateWindow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PolarizationFractions {
    pub all_zero: f64,
    pub all_one: f64,
    pub mixed: f64,
    pub unresolved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub replicates: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub rng: String,
    pub n_per: Option<usize>,
    pub trivial_start: bool,
    pub thresholds: Thresholds,
    pub late_window: LateWindow,
    pub clock_count: usize,
    pub checkpoints: Vec<CheckpointStats>,
    pub polarization: Option<PolarizationFractions>,
    pub n_infinity: Option<Moments>,
    pub per_replicate: Vec<ReplicateSummary>,
}

impl EnsembleStats {
    /// Median across replicates, ignoring replicates without a value.
    pub fn median_of(&self, f: impl Fn(&ReplicateSummary) -> Option<f64>) -> Option<f64> {
        median(self.per_replicate.iter().filter_map(f))
    }

    pub fn max_of(&self, f: impl Fn(&ReplicateSummary) -> Option<f64>) -> Option<f64> {
        self.per_replicate.iter().filter_map(f).reduce(f64::max)
    }

    /// Fraction of replicates for which `f` holds.
    pub fn fraction(&self, f: impl Fn(&ReplicateSummary) -> bool) -> f64 {
        self.per_replicate.iter().filter(|r| f(r)).count() as f64 / self.replicates as f64
    }

    /// Fraction among replicates where `f` is defined; `None` if it never is.
    pub fn fraction_defined(&self, f: impl Fn(&ReplicateSummary) -> Option<bool>) -> Option<f64> {
        let values: Vec<bool> = self.per_replicate.iter().filter_map(f).collect();
        (!values.is_empty())
            .then(|| values.iter().filter(|&&b| b).count() as f64 / values.len() as f64)
    }
}

fn late_window(traj: &Trajectory, th: &Thresholds) -> (LateWindow, Vec<usize>) {
    let clock: Vec<usize> =
        traj.checkpoints.iter().enumerate().filter(|(_, c)| c.is_clock).map(|(i, _)| i).collect();
    if clock.len() >= 2 * th.late_clock_count {
        let idx = clock[clock.len() - th.late_clock_count..].to_vec();
        return (LateWindow::Clock { count: idx.len() }, idx);
    }
    let total = traj.checkpoints.len();
    let count = ((th.late_fraction * total as f64).ceil() as usize).max(2).min(total);
    (LateWindow::Fraction { fraction: th.late_fraction, count }, (total - count..total).collect())
}

fn nan_or(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn rows_of(traj: &Trajectory, m: &InteractionMatrix, th: &Thresholds) -> Vec<Row> {
    let mut prev_clock_zc: Option<&[f64]> = None;
    traj.checkpoints
        .iter()
        .map(|c| {
            let d = &c.diagnostics;
            let p = d.periodic.as_ref();
            let mut row = [f64::NAN; METRICS];
            let mut set = |metric: Metric, x: f64| row[metric as usize] = x;
            set(Metric::SpreadGlobal, d.spread_global);
            set(Metric::VStat, d.v_stat);
            set(Metric::ZTilde, nan_or(d.z_tilde));
            set(Metric::MaxZ, d.max_z);
            set(Metric::InterClockSup, nan_or(c.inter_clock_sup));
            if let Some(p) = p {
                set(Metric::SpreadWithinClass, p.spread_within_class);
                set(Metric::Z2Norm, p.z2_norm);
                set(Metric::Z3Norm, p.z3_norm);
                set(Metric::NormZc, p.norm_zc);
                set(Metric::BarrierDistance, p.barrier_distance);
                set(Metric::PolarizationCount, p.count_high(th.polarization_eps) as f64);
                set(Metric::LowCount, p.count_low(th.polarization_eps) as f64);
                if c.is_clock {
                    if let Some(prev) = prev_clock_zc {
                        let k = prev.len();
                        let err = (0..k)
                            .map(|h| (p.z_class[(h + k - 1) % k] - prev[h]).abs())
                            .fold(0.0, f64::max);
                        set(Metric::RotationError, err);
                    }
                    prev_clock_zc = Some(&p.z_class);
                }
            }
            if let Some(mean) = &c.empirical_mean {
                let wz = m.apply(&c.z);
                let gap = mean.iter().zip(&wz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                set(Metric::MeanGap, gap);
            }
            row
        })
        .collect()
}

fn window_mean(rows: &[Row], idx: &[usize], metric: Metric) -> Option<f64> {
    let values: Vec<f64> =
        idx.iter().map(|&i| rows[i][metric as usize]).filter(|x| !x.is_nan()).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn range(values: impl Iterator<Item = f64>) -> Option<f64> {
    values
        .filter(|x| !x.is_nan())
        .fold(None, |acc: Option<(f64, f64)>, x| {
            Some(acc.map_or((x, x), |(lo, hi)| (lo.min(x), hi.max(x))))
        })
        .map(|(lo, hi)| hi - lo)
}

fn summarize(
    index: usize,
    z0: Vec<f64>,
    traj: &Trajectory,
    m: &InteractionMatrix,
    structure: Option<&SpectralStructure>,
    th: &Thresholds,
) -> ReplicateSummary {
    let rows = rows_of(traj, m, th);
    let (window, idx) = late_window(traj, th);
    let mean = |metric| window_mean(&rows, &idx, metric);
    let clock_only = |metric| if window.is_clock() { mean(metric) } else { None };
    let n = m.n();
    let late = LateStats {
        spread_global: mean(Metric::SpreadGlobal),
        spread_within_class: mean(Metric::SpreadWithinClass),
        z2_norm: mean(Metric::Z2Norm),
        z3_norm: mean(Metric::Z3Norm),
        barrier_distance: mean(Metric::BarrierDistance),
        rotation_error: clock_only(Metric::RotationError),
        inter_clock_sup: clock_only(Metric::InterClockSup),
        norm_zc_variation: range(idx.iter().map(|&i| rows[i][Metric::NormZc as usize])),
        z_variation: (0..n)
            .filter_map(|l| range(idx.iter().map(|&i| traj.checkpoints[i].z[l])))
            .fold(0.0, f64::max),
    };

    let last = traj.last();
    let last_row = rows.last().expect("n = 0 is always recorded");
    let get = |metric: Metric| Some(last_row[metric as usize]).filter(|x| !x.is_nan());
    let terminal = TerminalStats {
        z: last.z.clone(),
        z_tilde: last.diagnostics.z_tilde,
        spread_global: last.diagnostics.spread_global,
        spread_within_class: get(Metric::SpreadWithinClass),
        z2_norm: get(Metric::Z2Norm),
        z3_norm: get(Metric::Z3Norm),
        barrier_distance: get(Metric::BarrierDistance),
        max_z: last.diagnostics.max_z,
        mean_gap: get(Metric::MeanGap),
    };

    let clocks: Vec<_> = traj.clock_checkpoints().collect();
    let reference = if window.is_clock() { clocks.last().copied() } else { Some(last) };
    let (polarization, n_infinity) = match reference.and_then(|c| c.diagnostics.periodic.as_ref()) {
        Some(p) => {
            let (high, low, k) =
                (p.count_high(th.polarization_eps), p.count_low(th.polarization_eps), p.z_class.len());
            let kind = if low == k {
                Polarization::AllZero
            } else if high == k {
                Polarization::AllOne
            } else if high + low == k {
                Polarization::Mixed
            } else {
                Polarization::Unresolved
            };
            (Some(kind), Some(high))
        }
        None => (None, None),
    };

    let action_agreement = match structure {
        Some(s) if clocks.len() >= th.agreement_clock_count => Some(
            clocks[clocks.len() - th.agreement_clock_count..].iter().all(|c| {
                let x = c.x.as_ref().expect("clock checkpoints follow a step");
                s.class_members.iter().all(|members| members.iter().all(|&l| x[l] == x[members[0]]))
            }),
        ),
        _ => None,
    };

    let clock_mean_jump = match clocks.as_slice() {
        [.., a, b] => match (&a.empirical_mean, &b.empirical_mean) {
            (Some(na), Some(nb)) => {
                Some(na.iter().zip(nb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            }
            _ => None,
        },
        _ => None,
    };

    ReplicateSummary {
        index,
        z0,
        terminal,
        late,
        polarization,
        n_infinity,
        action_agreement,
        clock_mean_jump,
        rows,
        positions: traj.checkpoints.iter().map(|c| (c.n, c.is_clock)).collect(),
        window: Some(window),
    }
}

/// Runs all replicates in parallel on the current rayon pool. Replicate `i`
/// uses stream `i` of the master seed, so the result does not depend on
/// scheduling.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    let sim = cfg.simulation()?;
    let n = cfg.matrix.n();
    let structure = sim.structure();
    let per_replicate: Vec<ReplicateSummary> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let z0 = cfg.z0.resolve(n, i)?;
            let traj = sim.run(&z0, cfg.master_seed, i as u64)?;
            Ok(summarize(i, z0, &traj, &cfg.matrix, structure, &cfg.thresholds))
        })
        .collect::<Result<_>>()?;

    // checkpoint positions depend only on the schedule and plan
    let first = &per_replicate[0];
    let late_window = first.window.expect("set by summarize");
    let checkpoints = first
        .positions
        .iter()
        .enumerate()
        .map(|(i, &(n, is_clock))| CheckpointStats {
            n,
            is_clock,
            metrics: Metric::ALL
                .iter()
                .filter_map(|&metric| {
                    let values = per_replicate.iter().map(|r| r.rows[i][metric as usize]).collect();
                    Quantiles::of(values).map(|q| (metric, q))
                })
                .collect(),
        })
        .collect();

    let r = cfg.replicates as f64;
    let polarization = if per_replicate.iter().any(|s| s.polarization.is_some()) {
        let frac = |kind| {
            per_replicate.iter().filter(|s| s.polarization == Some(kind)).count() as f64 / r
        };
        Some(PolarizationFractions {
            all_zero: frac(Polarization::AllZero),
            all_one: frac(Polarization::AllOne),
            mixed: frac(Polarization::Mixed),
            unresolved: frac(Polarization::Unresolved),
        })
    } else {
        None
    };
    let n_inf: Vec<f64> = per_replicate.iter().filter_map(|s| s.n_infinity.map(|k| k as f64)).collect();
    let n_infinity = (!n_inf.is_empty()).then(|| {
        let mean = n_inf.iter().sum::<f64>() / n_inf.len() as f64;
        let variance = if n_inf.len() > 1 {
            n_inf.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_inf.len() - 1) as f64
        } else {
            0.0
        };
        Moments { mean, variance }
    });

    Ok(EnsembleStats {
        replicates: cfg.replicates,
        horizon: cfg.horizon,
        master_seed: cfg.master_seed,
        rng: crate::RNG_ALGORITHM.to_owned(),
        n_per: structure.map(|s| s.n_per),
        trivial_start: cfg.z0.is_trivial(n, cfg.matrix.mode())?,
        thresholds: cfg.thresholds.clone(),
        late_window,
        clock_count: sim.clock().len(),
        checkpoints,
        polarization,
        n_infinity,
        per_replicate,
    })
}
