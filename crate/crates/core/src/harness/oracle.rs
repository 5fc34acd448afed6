//! Exact law of `(Z_n)_{n <= H}` by enumerating every action path.
//!
//! Paths are encoded as integers: bit `k N + l` holds `X_{k+1, l}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{validate_z0, SystemState};
use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, Mode};
use crate::schedule::ReinforcementSchedule;
use crate::spectral::{is_irreducible, perron_vector};

/// Largest `N H` the enumeration accepts.
pub const MAX_CELLS: usize = 24;
/// Largest `N H` for which individual paths are kept.
pub const MAX_STORED_CELLS: usize = 16;

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMoments {
    pub n: usize,
    pub total_probability: f64,
    pub mean_z: Vec<f64>,
    /// `E[v^T Z_n]`.
    pub mean_z_tilde: Option<f64>,
    pub second_moment_z_tilde: Option<f64>,
    /// `E[v^T Z_n / prod_{k<n}(1 - r_k (1 - lambda*))]`; generalized mode.
    pub mean_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub code: u64,
    pub probability: f64,
    pub terminal_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactLaw {
    pub n: usize,
    pub horizon: usize,
    pub z0: Vec<f64>,
    pub levels: Vec<LevelMoments>,
    /// Every positive-probability path, when `N H <= MAX_STORED_CELLS`.
    pub paths: Option<Vec<PathRecord>>,
}

impl ExactLaw {
    /// `max_n |E[v^T Z_n] - v^T Z_0|`.
    pub fn martingale_error(&self) -> Option<f64> {
        let z0 = self.levels[0].mean_z_tilde?;
        self.levels.iter().map(|l| l.mean_z_tilde.map(|m| (m - z0).abs())).try_fold(0.0, |a, e| {
            e.map(|e| f64::max(a, e))
        })
    }

    /// `max_n |E[scaled_n] - scaled_0|` in generalized mode.
    pub fn scaled_martingale_error(&self) -> Option<f64> {
        let z0 = self.levels[0].mean_scaled?;
        self.levels.iter().map(|l| l.mean_scaled.map(|m| (m - z0).abs())).try_fold(0.0, |a, e| {
            e.map(|e| f64::max(a, e))
        })
    }
}

fn check_size(m: &InteractionMatrix, horizon: usize, limit: usize) -> Result<()> {
    let cells = m.n() * horizon;
    if cells > limit {
        return Err(Error::TooLarge { actual: cells, limit });
    }
    Ok(())
}

/// Enumerates every action path, calling `visit(code, probability, z_path)`
/// at each leaf where `z_path[k]` is `Z_k`. Subtrees of probability zero are
/// skipped.
fn enumerate<F: FnMut(u64, f64, &[Vec<f64>])>(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
    horizon: usize,
    visit: &mut F,
) -> Result<()> {
    let n = m.n();
    let mut zs = vec![z0.to_vec()];
    zs.resize(horizon + 1, vec![0.0; n]);
    let r: Vec<f64> = schedule.take(horizon);
    let mut p = vec![0.0; n];
    #[allow(clippy::too_many_arguments)]
    #[allow(clippy::needless_range_loop)]
    fn rec<F: FnMut(u64, f64, &[Vec<f64>])>(
        k: usize,
        code: u64,
        prob: f64,
        m: &InteractionMatrix,
        r: &[f64],
        zs: &mut Vec<Vec<f64>>,
        p: &mut Vec<f64>,
        visit: &mut F,
    ) -> Result<()> {
        if k == r.len() {
            visit(code, prob, zs);
            return Ok(());
        }
        let n = m.n();
        m.apply_into(&zs[k], p);
        for (vertex, &pl) in p.iter().enumerate() {
            if pl.is_nan() || !(0.0..=1.0 + 1e-9).contains(&pl) {
                return Err(Error::ProbabilityOutOfRange { step: k, vertex, value: pl });
            }
        }
        let probs = p.clone();
        for x in 0u64..(1 << n) {
            let mut q = prob;
            for (l, &pl) in probs.iter().enumerate() {
                let pl = pl.min(1.0);
                q *= if x >> l & 1 == 1 { pl } else { 1.0 - pl };
            }
            if q == 0.0 {
                continue;
            }
            for l in 0..n {
                let xl = (x >> l & 1) as f64;
                let z = zs[k][l];
                zs[k + 1][l] = (z + r[k] * (xl - z)).clamp(0.0, 1.0);
            }
            rec(k + 1, code | x << (k * n), q, m, r, zs, p, visit)?;
        }
        Ok(())
    }
    rec(0, 0, 1.0, m, &r, &mut zs, &mut p, visit)
}

/// Exact moments of every level `n <= horizon`.
pub fn brute_force_law(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
    horizon: usize,
) -> Result<ExactLaw> {
    check_size(m, horizon, MAX_CELLS)?;
    schedule.ensure_covers(horizon)?;
    if z0.len() != m.n() {
        return Err(Error::DimensionMismatch { expected: m.n(), actual: z0.len() });
    }
    validate_z0(z0)?;
    let n = m.n();
    let perron = if is_irreducible(m) { Some(perron_vector(m)?) } else { None };
    let scaling: Option<Vec<f64>> = perron.as_ref().filter(|_| m.mode() == Mode::Generalized).map(|p| {
        let mut out = vec![1.0];
        for k in 0..horizon {
            out.push(out[k] * (1.0 - schedule.r(k) * (1.0 - p.lambda_star)));
        }
        out
    });

    let levels_n = horizon + 1;
    let mut total = vec![Kahan::default(); levels_n];
    let mut mean_z = vec![vec![Kahan::default(); n]; levels_n];
    let mut tilde = vec![Kahan::default(); levels_n];
    let mut tilde2 = vec![Kahan::default(); levels_n];
    let mut scaled = vec![Kahan::default(); levels_n];
    let store = n * horizon <= MAX_STORED_CELLS;
    let mut paths = Vec::new();

    // every leaf carries the whole path, so level-k moments are accumulated
    // once per leaf with the leaf probability
    enumerate(m, schedule, z0, horizon, &mut |code, prob, zs| {
        for (k, z) in zs.iter().enumerate() {
            total[k].add(prob);
            for (acc, &zl) in mean_z[k].iter_mut().zip(z) {
                acc.add(prob * zl);
            }
            if let Some(p) = &perron {
                let t: f64 = p.v.iter().zip(z).map(|(a, b)| a * b).sum();
                tilde[k].add(prob * t);
                tilde2[k].add(prob * t * t);
                if let Some(s) = &scaling {
                    scaled[k].add(prob * t / s[k]);
                }
            }
        }
        if store {
            paths.push(PathRecord { code, probability: prob, terminal_z: zs[horizon].clone() });
        }
    })?;

    let levels = (0..levels_n)
        .map(|k| LevelMoments {
            n: k,
            total_probability: total[k].sum,
            mean_z: mean_z[k].iter().map(|a| a.sum).collect(),
            mean_z_tilde: perron.as_ref().map(|_| tilde[k].sum),
            second_moment_z_tilde: perron.as_ref().map(|_| tilde2[k].sum),
            mean_scaled: scaling.as_ref().map(|_| scaled[k].sum),
        })
        .collect();
    Ok(ExactLaw { n, horizon, z0: z0.to_vec(), levels, paths: store.then_some(paths) })
}

/// Exact probability of the paths `X_1, ..., X_H` satisfying `event`.
pub fn event_probability(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
    horizon: usize,
    event: impl Fn(&[Vec<u8>]) -> bool,
) -> Result<f64> {
    check_size(m, horizon, MAX_CELLS)?;
    schedule.ensure_covers(horizon)?;
    validate_z0(z0)?;
    let n = m.n();
    let mut acc = Kahan::default();
    enumerate(m, schedule, z0, horizon, &mut |code, prob, _| {
        if event(&decode(code, n, horizon)) {
            acc.add(prob);
        }
    })?;
    Ok(acc.sum)
}

/// Action vectors `X_1, ..., X_H` of a path code.
pub fn decode(code: u64, n: usize, horizon: usize) -> Vec<Vec<u8>> {
    (0..horizon).map(|k| (0..n).map(|l| (code >> (k * n + l) & 1) as u8).collect()).collect()
}

/// Exact probability of every path code, indexed by code.
pub fn path_probabilities(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    check_size(m, horizon, 20)?;
    schedule.ensure_covers(horizon)?;
    validate_z0(z0)?;
    let mut out = vec![0.0; 1 << (m.n() * horizon)];
    enumerate(m, schedule, z0, horizon, &mut |code, prob, _| out[code as usize] = prob)?;
    Ok(out)
}

/// Counts of simulated path codes over `replicates` runs, replicate `i`
/// using stream `i` of `seed`.
pub fn simulated_path_counts(
    m: &InteractionMatrix,
    schedule: &ReinforcementSchedule,
    z0: &[f64],
    horizon: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<u64>> {
    check_size(m, horizon, 20)?;
    schedule.ensure_covers(horizon)?;
    let n = m.n();
    let size = 1usize << (n * horizon);
    (0..replicates)
        .into_par_iter()
        .try_fold(
            || vec![0u64; size],
            |mut counts, i| {
                let mut state = SystemState::with_stream(z0.to_vec(), seed, i as u64)?;
                let mut code = 0u64;
                for k in 0..horizon {
                    let x = crate::dynamics::step(&mut state, m, schedule)?;
                    for (l, &xl) in x.iter().enumerate() {
                        code |= u64::from(xl) << (k * n + l);
                    }
                }
                counts[code as usize] += 1;
                Ok(counts)
            },
        )
        .try_reduce(
            || vec![0u64; size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> InteractionMatrix {
        let rows = vec![vec![0.0, 2.0 / 3.0, 1.0 / 3.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one_and_martingale() {
        let m = example1();
        let s = ReinforcementSchedule::power(1.0, 0.75).unwrap();
        let law = brute_force_law(&m, &s, &[0.2, 0.5, 0.8], 4).unwrap();
        for l in &law.levels {
            assert!((l.total_probability - 1.0).abs() < 1e-12);
        }
        assert!(law.martingale_error().unwrap() < 1e-12);
        let paths = law.paths.unwrap();
        let sum: f64 = paths.iter().map(|p| p.probability).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_mean_one_step() {
        // E[Z_1] = (1 - r_0) Z_0 + r_0 W^T Z_0
        let m = example1();
        let s = ReinforcementSchedule::constant(0.3).unwrap();
        let z0 = [0.2, 0.5, 0.8];
        let law = brute_force_law(&m, &s, &z0, 1).unwrap();
        let wz = m.apply(&z0);
        for l in 0..3 {
            let expect = 0.7 * z0[l] + 0.3 * wz[l];
            assert!((law.levels[1].mean_z[l] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn too_large() {
        let m = example1();
        let s = ReinforcementSchedule::constant(0.3).unwrap();
        assert_eq!(
            brute_force_law(&m, &s, &[0.5; 3], 9).unwrap_err(),
            Error::TooLarge { actual: 27, limit: 24 }
        );
    }

    #[test]
    fn absorbed_start_has_single_path() {
        let m = example1();
        let s = ReinforcementSchedule::constant(0.3).unwrap();
        let law = brute_force_law(&m, &s, &[0.0; 3], 3).unwrap();
        let paths = law.paths.unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].code, 0);
        assert_eq!(paths[0].probability, 1.0);
    }

    #[test]
    fn decode_round_trip() {
        let x = decode(0b10_01, 2, 2);
        assert_eq!(x, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn event_probability_partitions() {
        let m = InteractionMatrix::mean_field(2).unwrap();
        let s = ReinforcementSchedule::urn(2.0, 1.0).unwrap();
        let p = event_probability(&m, &s, &[0.3, 0.6], 3, |x| x[0][0] == 1).unwrap();
        let q = event_probability(&m, &s, &[0.3, 0.6], 3, |x| x[0][0] == 0).unwrap();
        assert!((p - 0.45).abs() < 1e-15);
        assert!((p + q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simulated_counts_total() {
        let m = InteractionMatrix::mean_field(2).unwrap();
        let s = ReinforcementSchedule::urn(2.0, 1.0).unwrap();
        let counts = simulated_path_counts(&m, &s, &[0.3, 0.6], 2, 1, 1000).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 1000);
        let exact = path_probabilities(&m, &s, &[0.3, 0.6], 2).unwrap();
        for (c, p) in counts.iter().zip(&exact) {
            if *p == 0.0 {
                assert_eq!(*c, 0);
            }
        }
    }
}
