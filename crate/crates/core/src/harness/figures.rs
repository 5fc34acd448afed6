//! Panel data for snapshots of inclinations and actions.
//!
//! Inclination panels show consecutive late steps; action panels show the
//! last clock times. Vertices are listed grouped by cyclic class.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleConfig;
use crate::dynamics::{Checkpoint, CheckpointPlan, Simulation, Spacing};
use crate::error::Result;
use crate::export::fmt_f64;
use crate::spectral::SpectralStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub vertex: usize,
    pub class: usize,
    pub z: f64,
    pub x: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub n: usize,
    pub rows: Vec<PanelRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    /// Consecutive steps at the end of the run.
    pub inclinations: Vec<Panel>,
    /// The last clock times of the run.
    pub actions: Vec<Panel>,
}

fn panels<'a>(s: &SpectralStructure, picked: impl Iterator<Item = &'a Checkpoint>) -> Vec<Panel> {
    let order: Vec<usize> = s.class_members.iter().flatten().copied().collect();
    picked
        .map(|c| Panel {
            n: c.n,
            rows: order
                .iter()
                .map(|&l| PanelRow {
                    vertex: l,
                    class: s.classes[l],
                    z: c.z[l],
                    x: c.x.as_ref().map_or(0, |x| x[l]),
                })
                .collect(),
        })
        .collect()
}

/// Runs replicate 0 of `cfg` and extracts `n_panels` panels of each kind.
pub fn figure_data(cfg: &EnsembleConfig, n_panels: usize) -> Result<FigureData> {
    let plan = CheckpointPlan {
        spacing: Spacing::Sparse,
        clock_times: true,
        tail_steps: n_panels,
        decomposition: false,
        empirical_means: None,
    };
    let z0 = cfg.z0.resolve(cfg.matrix.n(), 0)?;
    let sim = Simulation::new(&cfg.matrix, &cfg.schedule, cfg.horizon, plan)?;
    let traj = sim.run(&z0, cfg.master_seed, 0)?;
    let s = SpectralStructure::analyze(&cfg.matrix)?;
    let tail_start = cfg.horizon.saturating_sub(n_panels) + 1;
    let inclinations = panels(&s, traj.checkpoints.iter().filter(|c| c.n >= tail_start && c.n > 0));
    let clocks: Vec<_> = traj.clock_checkpoints().collect();
    let from = clocks.len().saturating_sub(n_panels);
    let actions = panels(&s, clocks[from..].iter().copied());
    Ok(FigureData { inclinations, actions })
}

/// Writes panels as `panel_n,vertex,class,z,x` rows.
pub fn write_panels_csv<W: Write>(
    mut w: W,
    panels: &[Panel],
    manifest_hash: Option<&str>,
) -> io::Result<()> {
    if let Some(h) = manifest_hash {
        writeln!(w, "# manifest_hash={h}")?;
    }
    writeln!(w, "panel_n,vertex,class,z,x")?;
    for p in panels {
        for r in &p.rows {
            writeln!(w, "{},{},{},{},{}", p.n, r.vertex, r.class, fmt_f64(r.z), r.x)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{figure_scenario, Preset};

    #[test]
    fn desk_panels() {
        let mut cfg = figure_scenario(Preset::Figure1Desk, 2).unwrap();
        cfg.horizon = 400;
        let f = figure_data(&cfg, 6).unwrap();
        assert_eq!(f.inclinations.len(), 6);
        assert_eq!(f.actions.len(), 6);
        let ns: Vec<usize> = f.inclinations.iter().map(|p| p.n).collect();
        assert_eq!(ns, (395..=400).collect::<Vec<_>>());
        for p in f.inclinations.iter().chain(&f.actions) {
            assert_eq!(p.rows.len(), 12);
            assert!(p.rows.iter().all(|r| (0.0..=1.0).contains(&r.z) && r.x <= 1));
            assert!(p.rows.windows(2).all(|w| w[0].class <= w[1].class));
        }
        // clock times of Spike(4, ...) are 1 mod 4
        assert!(f.actions.iter().all(|p| p.n % 4 == 1));
    }

    #[test]
    fn example1_panels_have_two_classes() {
        let mut cfg = figure_scenario(Preset::Example1, 0).unwrap();
        cfg.horizon = 100;
        let f = figure_data(&cfg, 3).unwrap();
        let classes: std::collections::BTreeSet<usize> =
            f.actions[0].rows.iter().map(|r| r.class).collect();
        assert_eq!(classes.len(), 2);
        let mut buf = Vec::new();
        write_panels_csv(&mut buf, &f.actions, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "panel_n,vertex,class,z,x");
        assert_eq!(text.lines().count(), 1 + 3 * 3);
    }
}
