//! Trajectory export: long-format CSV and per-checkpoint diagnostics.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Checkpoint, Trajectory};

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `n,l,z,x` rows for every checkpoint and vertex. `x` is empty at
/// `n = 0`. An optional `# manifest_hash=...` line precedes the header.
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    traj: &Trajectory,
    manifest_hash: Option<&str>,
) -> io::Result<()> {
    if let Some(h) = manifest_hash {
        writeln!(w, "# manifest_hash={h}")?;
    }
    writeln!(w, "n,l,z,x")?;
    for c in &traj.checkpoints {
        for (l, &z) in c.z.iter().enumerate() {
            match &c.x {
                Some(x) => writeln!(w, "{},{},{},{}", c.n, l, fmt_f64(z), x[l])?,
                None => writeln!(w, "{},{},{},", c.n, l, fmt_f64(z))?,
            }
        }
    }
    Ok(())
}

/// Flat diagnostics of one checkpoint. Fields that need the periodic
/// structure are `None` when it is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub n: usize,
    pub z_tilde: Option<f64>,
    pub v_stat: f64,
    pub norm_zc: Option<f64>,
    pub spread_global: f64,
    pub spread_within_class: Option<f64>,
    pub z2_norm: Option<f64>,
    pub z3_norm: Option<f64>,
    pub z_class: Option<Vec<f64>>,
    pub is_clock: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_mean: Option<Vec<f64>>,
}

impl From<&Checkpoint> for DiagnosticsRecord {
    fn from(c: &Checkpoint) -> Self {
        let d = &c.diagnostics;
        let p = d.periodic.as_ref();
        Self {
            n: c.n,
            z_tilde: d.z_tilde,
            v_stat: d.v_stat,
            norm_zc: p.map(|p| p.norm_zc),
            spread_global: d.spread_global,
            spread_within_class: p.map(|p| p.spread_within_class),
            z2_norm: p.map(|p| p.z2_norm),
            z3_norm: p.map(|p| p.z3_norm),
            z_class: p.map(|p| p.z_class.clone()),
            is_clock: c.is_clock,
            empirical_mean: c.empirical_mean.clone(),
        }
    }
}

pub fn diagnostics_records(traj: &Trajectory) -> Vec<DiagnosticsRecord> {
    traj.checkpoints.iter().map(DiagnosticsRecord::from).collect()
}
