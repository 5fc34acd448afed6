//! The stochastic recurrence and trajectory recording.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{Decomposition, Diagnostics};
use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, Mode};
use crate::schedule::{clock_times, ClockTimes, ReinforcementSchedule, Summability};
use crate::spectral::{is_irreducible, SpectralStructure};

/// Slack allowed above 1 for `[W^T z]_l` before it is reported.
const PROBABILITY_SLACK: f64 = 1e-9;

/// Smallest normalising product accepted by [`scaled_martingale`].
pub const MIN_PRODUCT: f64 = 1e-300;

/// Generator of the replicate with index `stream` under `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct SystemState {
    pub n: usize,
    pub z: Vec<f64>,
    rng: ChaCha8Rng,
    p: Vec<f64>,
}

impl SystemState {
    /// State at `n = 0` driven by stream 0 of `seed`.
    pub fn new(z0: Vec<f64>, seed: u64) -> Result<Self> {
        Self::with_stream(z0, seed, 0)
    }

    pub fn with_stream(z0: Vec<f64>, seed: u64, stream: u64) -> Result<Self> {
        validate_z0(&z0)?;
        let p = vec![0.0; z0.len()];
        Ok(Self { n: 0, z: z0, rng: replicate_rng(seed, stream), p })
    }
}

pub fn validate_z0(z0: &[f64]) -> Result<()> {
    match z0.iter().position(|z| !(0.0..=1.0).contains(z)) {
        Some(vertex) => Err(Error::InvalidInitialState { vertex, value: z0[vertex] }),
        None => Ok(()),
    }
}

/// Advances `state` by one step and returns the actions `X_{n+1}`.
pub fn step(
    state: &mut SystemState,
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
) -> Result<Vec<u8>> {
    let mut x = vec![0u8; m.n()];
    step_into(state, m, schedule, &mut x)?;
    Ok(x)
}

fn step_into(
    state: &mut SystemState,
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    x: &mut [u8],
) -> Result<()> {
    if state.z.len() != m.n() {
        return Err(Error::DimensionMismatch { expected: m.n(), actual: state.z.len() });
    }
    m.apply_into(&state.z, &mut state.p);
    let r = schedule.r(state.n);
    for (vertex, (&p, (z, xl))) in state.p.iter().zip(state.z.iter_mut().zip(x.iter_mut())).enumerate()
    {
        if !(0.0..=1.0 + PROBABILITY_SLACK).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { step: state.n, vertex, value: p });
        }
        let u: f64 = state.rng.gen();
        *xl = u8::from(u < p);
        *z = (*z + r * (f64::from(*xl) - *z)).clamp(0.0, 1.0);
    }
    state.n += 1;
    Ok(())
}

/// Weights `a_k` of the empirical means `N_n = sum_k a_k X_k / sum_k a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanWeights {
    /// `a_k = 1`.
    #[default]
    Uniform,
    /// `a_k = k^beta`.
    Power { beta: f64 },
}

impl MeanWeights {
    pub fn weight(&self, k: usize) -> f64 {
        match self {
            MeanWeights::Uniform => 1.0,
            MeanWeights::Power { beta } => (k as f64).powf(*beta),
        }
    }
}

/// Streaming weighted empirical means of the actions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeans {
    weights: MeanWeights,
    total: f64,
    k: usize,
    means: Vec<f64>,
}

impl EmpiricalMeans {
    pub fn new(n: usize, weights: MeanWeights) -> Self {
        Self { weights, total: 0.0, k: 0, means: vec![0.0; n] }
    }

    /// Folds in `X_k` for the next `k`.
    pub fn push(&mut self, x: &[u8]) {
        self.k += 1;
        let a = self.weights.weight(self.k);
        self.total += a;
        let q = a / self.total;
        for (mean, &xl) in self.means.iter_mut().zip(x) {
            *mean += q * (f64::from(xl) - *mean);
        }
    }

    /// `N_k`, or `None` before any action.
    pub fn current(&self) -> Option<&[f64]> {
        (self.k > 0).then_some(&self.means[..])
    }
}

/// Empirical means of a full action history; `out[k-1] = N_k`.
pub fn empirical_means(x_history: &[Vec<u8>], weights: MeanWeights) -> Vec<Vec<f64>> {
    let n = x_history.first().map_or(0, Vec::len);
    let mut acc = EmpiricalMeans::new(n, weights);
    x_history
        .iter()
        .map(|x| {
            acc.push(x);
            acc.means.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    EveryStep,
    /// `n_{i+1} = max(n_i + 1, ceil(ratio n_i))`.
    Geometric { ratio: f64 },
    /// Only the endpoints, clock times and tail.
    Sparse,
}

/// Which steps of a trajectory are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckpointPlan {
    pub spacing: Spacing,
    pub clock_times: bool,
    /// Also record the last `tail_steps` steps.
    pub tail_steps: usize,
    pub decomposition: bool,
    pub empirical_means: Option<MeanWeights>,
}

impl Default for CheckpointPlan {
    fn default() -> Self {
        Self {
            spacing: Spacing::Geometric { ratio: 1.2 },
            clock_times: true,
            tail_steps: 0,
            decomposition: true,
            empirical_means: None,
        }
    }
}

impl CheckpointPlan {
    pub fn every_step() -> Self {
        Self { spacing: Spacing::EveryStep, ..Self::default() }
    }

    /// Spacing-driven checkpoints in `0..=horizon`, always including both ends.
    fn spaced(&self, horizon: usize) -> Vec<usize> {
        let mut out = vec![0];
        match self.spacing {
            Spacing::EveryStep => out.extend(1..=horizon),
            Spacing::Geometric { ratio } => {
                let mut n = 0usize;
                while n < horizon {
                    n = (n + 1).max((n as f64 * ratio).ceil() as usize).min(horizon);
                    out.push(n);
                }
            }
            Spacing::Sparse => {
                if horizon > 0 {
                    out.push(horizon);
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if let Spacing::Geometric { ratio } = self.spacing {
            if !(ratio.is_finite() && ratio > 1.0) {
                return Err(Error::InvalidParam(format!("checkpoint ratio must exceed 1, got {ratio}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub z: Vec<f64>,
    /// Actions `X_n`; absent at `n = 0`.
    pub x: Option<Vec<u8>>,
    /// Whether `n` is a clock time `sigma_k`.
    pub is_clock: bool,
    pub diagnostics: Diagnostics,
    pub decomposition: Option<Decomposition>,
    /// At a clock time `sigma_k`, `max_l` of the range of `Z_l` over
    /// `sigma_{k-1} <= n < sigma_k`.
    pub inter_clock_sup: Option<f64>,
    pub empirical_mean: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon: usize,
    pub seed: u64,
    pub stream: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub clock_times: ClockTimes,
}

impl Trajectory {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("trajectory always records n = 0")
    }

    pub fn clock_checkpoints(&self) -> impl Iterator<Item = &Checkpoint> {
        self.checkpoints.iter().filter(|c| c.is_clock)
    }
}

/// Simulation setup shared by any number of runs.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    m: &'a InteractionMatrix,
    schedule: &'a ReinforcementSchedule,
    structure: Option<SpectralStructure>,
    horizon: usize,
    plan: CheckpointPlan,
    clock: ClockTimes,
    spaced: Vec<usize>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        m: &'a InteractionMatrix,
        schedule: &'a ReinforcementSchedule,
        horizon: usize,
        plan: CheckpointPlan,
    ) -> Result<Self> {
        schedule.ensure_covers(horizon)?;
        plan.validate()?;
        let structure =
            if is_irreducible(m) { Some(SpectralStructure::analyze(m)?) } else { None };
        let clock = clock_times(schedule, horizon);
        let spaced = plan.spaced(horizon);
        Ok(Self { m, schedule, structure, horizon, plan, clock, spaced })
    }

    pub fn structure(&self) -> Option<&SpectralStructure> {
        self.structure.as_ref()
    }

    pub fn clock(&self) -> &ClockTimes {
        &self.clock
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn checkpoint(
        &self,
        n: usize,
        z: &[f64],
        x: Option<&[u8]>,
        is_clock: bool,
        inter_clock_sup: Option<f64>,
        means: Option<&EmpiricalMeans>,
    ) -> Checkpoint {
        let (diagnostics, decomposition) = Diagnostics::compute(z, self.m, self.structure.as_ref());
        Checkpoint {
            n,
            z: z.to_vec(),
            x: x.map(<[u8]>::to_vec),
            is_clock,
            diagnostics,
            decomposition: decomposition.filter(|_| self.plan.decomposition),
            inter_clock_sup,
            empirical_mean: means.and_then(|e| e.current().map(<[f64]>::to_vec)),
        }
    }

    /// Runs replicate `stream` of `seed` from `z0`.
    pub fn run(&self, z0: &[f64], seed: u64, stream: u64) -> Result<Trajectory> {
        if z0.len() != self.m.n() {
            return Err(Error::DimensionMismatch { expected: self.m.n(), actual: z0.len() });
        }
        let mut state = SystemState::with_stream(z0.to_vec(), seed, stream)?;
        let n_vertices = self.m.n();
        let mut x = vec![0u8; n_vertices];
        let mut means = self.plan.empirical_means.map(|w| EmpiricalMeans::new(n_vertices, w));
        let tail_start = self.horizon.saturating_sub(self.plan.tail_steps);
        let sigma = &self.clock.sigma;
        let (mut next_spaced, mut next_clock) = (1usize, 0usize);
        // running per-vertex (min, max) since the last clock time
        let mut window: Option<(Vec<f64>, Vec<f64>)> = None;

        let mut checkpoints = vec![self.checkpoint(0, &state.z, None, false, None, None)];
        while state.n < self.horizon {
            step_into(&mut state, self.m, self.schedule, &mut x)?;
            let n = state.n;
            if let Some(e) = means.as_mut() {
                e.push(&x);
            }
            let is_clock = next_clock < sigma.len() && sigma[next_clock] == n;
            let mut inter_clock_sup = None;
            if is_clock {
                next_clock += 1;
                inter_clock_sup = window.as_ref().map(|(lo, hi)| {
                    lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max)
                });
                window = Some((state.z.clone(), state.z.clone()));
            } else if let Some((lo, hi)) = window.as_mut() {
                for ((a, b), &z) in lo.iter_mut().zip(hi.iter_mut()).zip(&state.z) {
                    *a = a.min(z);
                    *b = b.max(z);
                }
            }
            let spaced = next_spaced < self.spaced.len() && self.spaced[next_spaced] == n;
            if spaced {
                next_spaced += 1;
            }
            if spaced || n >= tail_start || (is_clock && self.plan.clock_times) {
                checkpoints.push(self.checkpoint(
                    n,
                    &state.z,
                    Some(&x),
                    is_clock,
                    inter_clock_sup,
                    means.as_ref(),
                ));
            }
        }
        Ok(Trajectory { horizon: self.horizon, seed, stream, checkpoints, clock_times: self.clock.clone() })
    }
}

/// Deterministic trajectory of length `horizon` from stream 0 of `seed`.
pub fn simulate(
    z0: &[f64],
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    horizon: usize,
    seed: u64,
    plan: CheckpointPlan,
) -> Result<Trajectory> {
    Simulation::new(m, schedule, horizon, plan)?.run(z0, seed, 0)
}

/// Normalising products `prod_{k<n} (1 - r_k (1 - lambda*))` for `n = 0..=len`.
pub fn scaling_products(
    s: &SpectralStructure,
    schedule: &ReinforcementSchedule,
    len: usize,
) -> Result<Vec<f64>> {
    if s.mode != Mode::Generalized {
        return Err(Error::RequiresGeneralized);
    }
    if schedule.flags.sum_r != Summability::Infinite {
        return Err(Error::RequiresDivergentSchedule);
    }
    let mut out = Vec::with_capacity(len + 1);
    let mut prod = 1.0;
    out.push(prod);
    for k in 0..len {
        prod *= 1.0 - schedule.r(k) * (1.0 - s.lambda_star);
        if prod < MIN_PRODUCT {
            return Err(Error::DegenerateProduct { index: k + 1 });
        }
        out.push(prod);
    }
    Ok(out)
}

/// `(n, v^T Z_n / prod_{k<n} (1 - r_k (1 - lambda*)))` at every checkpoint.
pub fn scaled_martingale(
    traj: &Trajectory,
    s: &SpectralStructure,
    schedule: &ReinforcementSchedule,
) -> Result<Vec<(usize, f64)>> {
    let products = scaling_products(s, schedule, traj.horizon)?;
    Ok(traj
        .checkpoints
        .iter()
        .map(|c| (c.n, s.leading_coefficient(&c.z) / products[c.n]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Flags;

    fn example1() -> InteractionMatrix {
        let rows = vec![vec![0.0, 2.0 / 3.0, 1.0 / 3.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap()
    }

    fn forcing() -> InteractionMatrix {
        let rows = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
        InteractionMatrix::from_transpose_rows(&rows, Mode::Generalized).unwrap()
    }

    #[test]
    fn barriers_absorb() {
        let m = example1();
        let sched = ReinforcementSchedule::power(1.0, 0.75).unwrap();
        for b in [0.0, 1.0] {
            let mut s = SystemState::new(vec![b; 3], 5).unwrap();
            for _ in 0..50 {
                let x = step(&mut s, &m, &sched).unwrap();
                assert!(x.iter().all(|&xl| f64::from(xl) == b));
                assert!(s.z.iter().all(|&z| z == b));
            }
        }
    }

    #[test]
    fn state_stays_in_unit_cube() {
        let m = example1();
        let sched = ReinforcementSchedule::constant(0.7).unwrap();
        let mut s = SystemState::new(vec![0.2, 0.5, 0.9], 1).unwrap();
        for _ in 0..1000 {
            step(&mut s, &m, &sched).unwrap();
            assert!(s.z.iter().all(|z| (0.0..=1.0).contains(z)));
        }
        assert_eq!(s.n, 1000);
    }

    #[test]
    fn horizon_zero_keeps_only_start() {
        let m = example1();
        let sched = ReinforcementSchedule::power(1.0, 1.0).unwrap();
        let t = simulate(&[0.1, 0.2, 0.3], &m, &sched, 0, 9, CheckpointPlan::default()).unwrap();
        assert_eq!(t.checkpoints.len(), 1);
        assert_eq!(t.checkpoints[0].z, vec![0.1, 0.2, 0.3]);
        assert!(t.checkpoints[0].x.is_none());
    }

    #[test]
    fn deterministic_and_composes_with_step() {
        let m = example1();
        let sched = ReinforcementSchedule::power(1.0, 0.75).unwrap();
        let z0 = [0.2, 0.5, 0.8];
        let a = simulate(&z0, &m, &sched, 200, 42, CheckpointPlan::default()).unwrap();
        let b = simulate(&z0, &m, &sched, 200, 42, CheckpointPlan::default()).unwrap();
        assert_eq!(a, b);
        let t = simulate(&z0, &m, &sched, 2, 42, CheckpointPlan::every_step()).unwrap();
        let mut s = SystemState::new(z0.to_vec(), 42).unwrap();
        let x1 = step(&mut s, &m, &sched).unwrap();
        assert_eq!(t.checkpoints[1].z, s.z);
        assert_eq!(t.checkpoints[1].x.as_deref(), Some(&x1[..]));
        let x2 = step(&mut s, &m, &sched).unwrap();
        assert_eq!(t.checkpoints[2].z, s.z);
        assert_eq!(t.checkpoints[2].x.as_deref(), Some(&x2[..]));
    }

    #[test]
    fn decomposition_sums_exactly() {
        let m = example1();
        let sched = ReinforcementSchedule::power(1.0, 0.75).unwrap();
        let t = simulate(&[0.2, 0.5, 0.8], &m, &sched, 500, 3, CheckpointPlan::default()).unwrap();
        for c in &t.checkpoints {
            let d = c.decomposition.as_ref().unwrap();
            for l in 0..3 {
                let sum = d.z1[l] + d.z2[l] + d.z3[l];
                assert!((sum - c.z[l]).abs() <= f64::EPSILON, "{sum} vs {}", c.z[l]);
            }
        }
    }

    #[test]
    fn geometric_plan_includes_ends() {
        let plan = CheckpointPlan::default();
        let pts = plan.spaced(1000);
        assert_eq!(pts[0], 0);
        assert_eq!(*pts.last().unwrap(), 1000);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(pts.len() < 60);
        assert_eq!(CheckpointPlan::every_step().spaced(5), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn clock_checkpoints_and_inter_clock_sup() {
        let m = example1();
        let sched = ReinforcementSchedule::constant(0.9).unwrap();
        let plan = CheckpointPlan { spacing: Spacing::Sparse, ..CheckpointPlan::default() };
        let t = simulate(&[0.2, 0.5, 0.8], &m, &sched, 20, 1, plan).unwrap();
        let clocks: Vec<_> = t.clock_checkpoints().collect();
        assert_eq!(clocks.len(), 19);
        // consecutive clock times leave a one-point window
        assert_eq!(clocks[0].inter_clock_sup, None);
        assert!(clocks[1..].iter().all(|c| c.inter_clock_sup == Some(0.0)));
    }

    #[test]
    fn empirical_means_streaming() {
        let hist = vec![vec![1u8, 0], vec![0, 0], vec![1, 1], vec![1, 0]];
        let means = empirical_means(&hist, MeanWeights::Uniform);
        assert_eq!(means[3], vec![0.75, 0.25]);
        assert_eq!(means[0], vec![1.0, 0.0]);
        let all_one = empirical_means(&vec![vec![1u8; 3]; 10], MeanWeights::Power { beta: 0.7 });
        for n in all_one {
            assert!(n.iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
        let w = MeanWeights::Power { beta: 1.0 };
        let means = empirical_means(&hist, w);
        // weights 1,2,3,4 over total 10
        assert!((means[3][0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_start() {
        assert!(matches!(
            SystemState::new(vec![0.5, 1.5], 0),
            Err(Error::InvalidInitialState { vertex: 1, .. })
        ));
        assert!(SystemState::new(vec![f64::NAN, 0.5], 0).is_err());
    }

    #[test]
    fn scaled_martingale_zero_start_and_errors() {
        let m = forcing();
        let s = SpectralStructure::analyze(&m).unwrap();
        let sched = ReinforcementSchedule::power(1.0, 0.6).unwrap();
        let t = simulate(&[0.0, 0.0], &m, &sched, 50, 1, CheckpointPlan::default()).unwrap();
        let sm = scaled_martingale(&t, &s, &sched).unwrap();
        assert!(sm.iter().all(|(_, v)| *v == 0.0));
        let finite = ReinforcementSchedule::power(1.0, 2.0).unwrap();
        assert_eq!(scaled_martingale(&t, &s, &finite), Err(Error::RequiresDivergentSchedule));
        let stoch = SpectralStructure::analyze(&example1()).unwrap();
        assert_eq!(scaling_products(&stoch, &sched, 3), Err(Error::RequiresGeneralized));
        let big = ReinforcementSchedule::custom(
            vec![0.999_999; 2000],
            Flags::new(Summability::Infinite, Summability::Infinite),
        )
        .unwrap();
        assert!(matches!(scaling_products(&s, &big, 2000), Err(Error::DegenerateProduct { .. })));
    }

    #[test]
    fn forcing_input_drives_to_zero() {
        let m = forcing();
        let sched = ReinforcementSchedule::power(1.0, 0.6).unwrap();
        let t = simulate(&[0.9, 0.9], &m, &sched, 20000, 4, CheckpointPlan::default()).unwrap();
        assert!(t.last().diagnostics.max_z < 0.05);
    }

    #[test]
    fn replicate_streams_differ() {
        use rand::RngCore;
        let mut a = replicate_rng(1, 0);
        let mut b = replicate_rng(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
        let mut c = replicate_rng(1, 0);
        let mut d = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(c.next_u64(), d.next_u64());
    }
}
