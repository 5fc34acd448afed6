//! Three-component decomposition of an inclination vector and the
//! per-state diagnostics built on it.

use serde::{Deserialize, Serialize};

use crate::matrix::InteractionMatrix;
use crate::spectral::SpectralStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `(v^T z) 1`.
    pub z1: Vec<f64>,
    /// `C z - z1`, constant on each cyclic class.
    pub z2: Vec<f64>,
    /// `z - C z`, the residual.
    pub z3: Vec<f64>,
}

/// `v`-weighted average of `z` over each cyclic class.
pub fn class_process(z: &[f64], s: &SpectralStructure) -> Vec<f64> {
    let mut acc = vec![0.0; s.n_per];
    for ((&h, &vl), &zl) in s.classes.iter().zip(&s.v).zip(z) {
        acc[h] += vl * zl;
    }
    acc.iter().zip(&s.class_mass).map(|(a, m)| a / m).collect()
}

/// Splits `z` into leading, periodic and residual parts. `z3` is computed as
/// a remainder so that `z1 + z2 + z3` reproduces `z`.
pub fn decompose(z: &[f64], s: &SpectralStructure) -> Decomposition {
    let zc = class_process(z, s);
    decompose_with_class(z, &zc, s)
}

fn decompose_with_class(z: &[f64], zc: &[f64], s: &SpectralStructure) -> Decomposition {
    let tilde = s.leading_coefficient(z);
    let z1 = vec![tilde; z.len()];
    let cz: Vec<f64> = s.classes.iter().map(|&h| zc[h]).collect();
    let z2 = cz.iter().map(|c| c - tilde).collect();
    let z3 = z.iter().zip(&z1).zip(&z2).map(|((&zl, a), b)| remainder(zl, a + b)).collect();
    Decomposition { z1, z2, z3 }
}

/// `d` with `s + d == z` in floating point when one exists. The rounded
/// difference can be off by an ulp, so neighbouring values are tried. When
/// no `d` works (rounding ties, or `|d|` coarser than `z`) the sum is within
/// one ulp of `d`.
fn remainder(z: f64, s: f64) -> f64 {
    let d = z - s;
    if s + d == z {
        return d;
    }
    let (mut up, mut down) = (d, d);
    for _ in 0..8 {
        up = up.next_up();
        down = down.next_down();
        if s + up == z {
            return up;
        }
        if s + down == z {
            return down;
        }
    }
    d
}

/// `V = sum_l p_l (1 - p_l)` with `p = W^T z`.
pub fn v_statistic(z: &[f64], m: &InteractionMatrix) -> f64 {
    m.apply(z).iter().map(|p| p * (1.0 - p)).sum()
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    if hi >= lo { hi - lo } else { 0.0 }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Scalar diagnostics of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `v^T z` when a Perron vector is available.
    pub z_tilde: Option<f64>,
    pub v_stat: f64,
    /// `max_{l1,l2} |z_l1 - z_l2|`.
    pub spread_global: f64,
    pub max_z: f64,
    pub periodic: Option<PeriodicDiagnostics>,
}

/// Diagnostics that need the projector structure (irreducible, stochastic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDiagnostics {
    pub z_class: Vec<f64>,
    pub norm_zc: f64,
    /// Largest spread inside a cyclic class.
    pub spread_within_class: f64,
    pub z2_norm: f64,
    pub z3_norm: f64,
    /// `max_h zc_h (1 - zc_h)`.
    pub barrier_distance: f64,
}

impl PeriodicDiagnostics {
    pub fn count_high(&self, eps: f64) -> usize {
        self.z_class.iter().filter(|&&c| c >= 1.0 - eps).count()
    }

    pub fn count_low(&self, eps: f64) -> usize {
        self.z_class.iter().filter(|&&c| c <= eps).count()
    }
}

impl Diagnostics {
    /// Diagnostics of `z`, plus its decomposition when `s` describes a
    /// stochastic matrix.
    pub fn compute(
        z: &[f64],
        m: &InteractionMatrix,
        s: Option<&SpectralStructure>,
    ) -> (Self, Option<Decomposition>) {
        let z_tilde = s.map(|s| s.leading_coefficient(z));
        let mut decomposition = None;
        let periodic = s.filter(|s| s.mode == crate::Mode::Stochastic).map(|s| {
            let zc = class_process(z, s);
            let d = decompose_with_class(z, &zc, s);
            let spread_within_class = s
                .class_members
                .iter()
                .map(|members| spread(members.iter().map(|&l| z[l])))
                .fold(0.0, f64::max);
            let pd = PeriodicDiagnostics {
                norm_zc: norm(&zc),
                spread_within_class,
                z2_norm: norm(&d.z2),
                z3_norm: norm(&d.z3),
                barrier_distance: zc.iter().map(|c| c * (1.0 - c)).fold(0.0, f64::max),
                z_class: zc,
            };
            decomposition = Some(d);
            pd
        });
        let diag = Self {
            z_tilde,
            v_stat: v_statistic(z, m),
            spread_global: spread(z.iter().copied()),
            max_z: z.iter().copied().fold(0.0, f64::max),
            periodic,
        };
        (diag, decomposition)
    }
}
