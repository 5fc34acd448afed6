use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleConfig, InitialState, Thresholds};
use crate::dynamics::{CheckpointPlan, Spacing};
use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, Mode};
use crate::schedule::ReinforcementSchedule;
use crate::spectral::{is_irreducible, period};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 120 vertices, period 6, spikes every 4 steps.
    Figure1Full,
    /// 12 vertices, period 3, spikes every 4 steps.
    Figure1Desk,
    /// The fixed 3-vertex period-2 matrix.
    Example1,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "figure1full" => Ok(Preset::Figure1Full),
            "figure1desk" => Ok(Preset::Figure1Desk),
            "example1" => Ok(Preset::Example1),
            _ => Err(Error::InvalidConfig(format!("unknown preset {s}"))),
        }
    }
}

/// `W^T` of the 3-vertex example: vertex 0 listens to 1 and 2, both of
/// which listen to 0.
pub fn example1_matrix() -> InteractionMatrix {
    let rows = vec![vec![0.0, 2.0 / 3.0, 1.0 / 3.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
    InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).expect("valid by construction")
}

/// Class of vertex `l` when `n` vertices are split into `n_per` contiguous
/// blocks.
pub fn block_class(l: usize, n: usize, n_per: usize) -> usize {
    l * n_per / n
}

/// Random irreducible stochastic matrix of period exactly `n_per`.
///
/// Vertices are split into contiguous class blocks and every positive entry
/// of `W^T` goes from class `h` to class `h + 1 (mod n_per)`, each candidate
/// edge present with probability `density`. Draws repeat until the matrix
/// is irreducible with the requested period.
pub fn random_periodic_matrix(
    n: usize,
    n_per: usize,
    density: f64,
    seed: u64,
) -> Result<InteractionMatrix> {
    if n_per == 0 || n < n_per || n < 2 {
        return Err(Error::InvalidParam(format!("cannot build period {n_per} on {n} vertices")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParam(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class: Vec<usize> = (0..n).map(|l| block_class(l, n, n_per)).collect();
    for _ in 0..10_000 {
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|l1| {
                let target = (class[l1] + 1) % n_per;
                let members: Vec<usize> = (0..n).filter(|&l2| class[l2] == target).collect();
                let mut row = vec![0.0; n];
                for &l2 in &members {
                    if rng.gen_bool(density) {
                        row[l2] = rng.gen_range(0.1..1.0);
                    }
                }
                if row.iter().all(|w| *w == 0.0) {
                    row[members[rng.gen_range(0..members.len())]] = rng.gen_range(0.1..1.0);
                }
                row
            })
            .collect();
        // every vertex also needs an incoming edge
        for l2 in 0..n {
            if rows.iter().all(|row| row[l2] == 0.0) {
                let source = (class[l2] + n_per - 1) % n_per;
                let members: Vec<usize> = (0..n).filter(|&l1| class[l1] == source).collect();
                rows[members[rng.gen_range(0..members.len())]][l2] = rng.gen_range(0.1..1.0);
            }
        }
        for row in &mut rows {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= s);
        }
        let m = InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic)?;
        if is_irreducible(&m) && period(&m)? == n_per {
            return Ok(m);
        }
    }
    Err(Error::InvalidParam(format!("no irreducible period-{n_per} matrix found on {n} vertices")))
}

/// Ensemble settings of a preset. `seed` drives both the random matrix and
/// the simulations.
pub fn figure_scenario(preset: Preset, seed: u64) -> Result<EnsembleConfig> {
    let spike = ReinforcementSchedule::spike(4, 1.0, 3.7)?;
    let (matrix, schedule, replicates, horizon) = match preset {
        Preset::Figure1Full => (random_periodic_matrix(120, 6, 0.2, seed)?, spike, 20, 20_000),
        Preset::Figure1Desk => (random_periodic_matrix(12, 3, 0.5, seed)?, spike, 200, 20_000),
        Preset::Example1 => (example1_matrix(), spike, 100, 10_000),
    };
    Ok(EnsembleConfig {
        matrix,
        schedule,
        z0: InitialState::UniformInterior { seed },
        replicates,
        horizon,
        master_seed: seed,
        plan: CheckpointPlan {
            spacing: Spacing::Geometric { ratio: 1.2 },
            decomposition: false,
            ..CheckpointPlan::default()
        },
        thresholds: Thresholds::default(),
    })
}
