//! Period, cyclic classes, Perron vector and the projectors of `W^T`.
//!
//! Every projector here is assembled from the Perron vector `v` and the
//! cyclic-class labelling alone:
//!
//! * `P1 = 1 v^T` projects on the leading eigenspace,
//! * `C` replaces each entry by the `v`-weighted average over its cyclic class,
//! * `P2 = C - P1` is the periodic part (eigenvalues on the unit circle other
//!   than 1),
//! * `P3 = I - C` is the residual part (eigenvalues of modulus below 1).
//!
//! No Jordan structure is ever computed; the residual component is whatever
//! the first two leave behind.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{InteractionMatrix, Mode};

/// Tolerance on spectral residuals and structural invariants.
pub const SPECTRAL_TOL: f64 = 1e-10;

fn reaches_all(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(a) = queue.pop_front() {
        for b in next(a) {
            if !seen[b] {
                seen[b] = true;
                count += 1;
                queue.push_back(b);
            }
        }
    }
    count == n
}

/// True iff the influence digraph is strongly connected.
pub fn is_irreducible(m: &InteractionMatrix) -> bool {
    let n = m.n();
    let mut preds = vec![Vec::new(); n];
    for a in 0..n {
        for b in m.successors(a) {
            preds[b].push(a);
        }
    }
    reaches_all(n, 0, |a| m.successors(a).collect())
        && reaches_all(n, 0, |a| preds[a].clone())
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn bfs_levels(m: &InteractionMatrix) -> Vec<Option<usize>> {
    let mut level = vec![None; m.n()];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        let la = level[a].unwrap_or(0);
        for b in m.successors(a) {
            if level[b].is_none() {
                level[b] = Some(la + 1);
                queue.push_back(b);
            }
        }
    }
    level
}

/// Period of an irreducible matrix: the gcd of `level(a) + 1 - level(b)`
/// over all `W^T` edges `a -> b`, with BFS levels from vertex 0.
pub fn period(m: &InteractionMatrix) -> Result<usize> {
    if !is_irreducible(m) {
        return Err(Error::Reducible);
    }
    let level = bfs_levels(m);
    let mut g = 0;
    for a in 0..m.n() {
        let la = level[a].expect("irreducible") as i64;
        for b in m.successors(a) {
            let lb = level[b].expect("irreducible") as i64;
            g = gcd(g, (la + 1 - lb).unsigned_abs() as usize);
        }
    }
    // a strongly connected digraph on >= 2 vertices always has a cycle
    Ok(g.max(1))
}

/// Cyclic class of every vertex: BFS distance from vertex 0 modulo the
/// period, so vertex 0 is in class 0 and classes increase by one along every
/// `W^T` edge.
pub fn cyclic_classes(m: &InteractionMatrix, n_per: usize) -> Result<Vec<usize>> {
    if !is_irreducible(m) {
        return Err(Error::Reducible);
    }
    if n_per == 0 {
        return Err(Error::InconsistentPeriod { from: 0, to: 0, period: 0 });
    }
    let cls: Vec<usize> =
        bfs_levels(m).into_iter().map(|l| l.expect("irreducible") % n_per).collect();
    for a in 0..m.n() {
        for b in m.successors(a) {
            if cls[b] != (cls[a] + 1) % n_per {
                return Err(Error::InconsistentPeriod { from: a, to: b, period: n_per });
            }
        }
    }
    Ok(cls)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perron {
    /// Leading eigenvalue of `W^T` (1 in stochastic mode).
    pub lambda_star: f64,
    /// Left eigenvector: `v^T W^T = lambda* v^T`, `v > 0`, `sum v = 1`.
    pub v: Vec<f64>,
    /// Right eigenvector in generalized mode: `W^T u = lambda* u`, `u^T v = 1`.
    pub u: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct PerronOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest `N` for which the direct linear solve is attempted when the
    /// iteration stalls.
    pub direct_limit: usize,
}

impl Default for PerronOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 1_000_000, direct_limit: 64 }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// Power iteration on the lazy matrix (I + W^T)/2, which has the same Perron
// eigenvector as W^T and no other eigenvalue on its spectral circle. `step`
// applies W^T on the appropriate side.
fn lazy_power_iteration(
    n: usize,
    step: impl Fn(&[f64]) -> Vec<f64>,
    opts: PerronOptions,
) -> std::result::Result<(f64, Vec<f64>), (usize, f64)> {
    let mut x = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    // once within tolerance, keep iterating while the residual still drops
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut polish = 0;
    for _ in 0..opts.max_iter {
        let wx = step(&x);
        let lambda: f64 = wx.iter().sum::<f64>() / x.iter().sum::<f64>();
        residual = wx.iter().zip(&x).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        if let Some((r, l, v)) = &best {
            if residual >= *r || polish >= POLISH_STEPS {
                return Ok((*l, v.clone()));
            }
            polish += 1;
        }
        if residual <= opts.tol {
            best = Some((residual, lambda, x.clone()));
        }
        let mut next: Vec<f64> = x.iter().zip(&wx).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|e| *e /= s);
        if max_abs_diff(&next, &x) == 0.0 {
            if let Some((_, l, v)) = best {
                return Ok((l, v));
            }
            // stationary at machine precision: accept if within spectral tolerance
            if residual <= SPECTRAL_TOL {
                return Ok((lambda, x));
            }
        }
        x = next;
    }
    match best {
        Some((_, l, v)) => Ok((l, v)),
        None => Err((opts.max_iter, residual)),
    }
}

const POLISH_STEPS: usize = 200;

// Solve (W - I) v = 0 with sum(v) = 1 replacing the last equation.
fn direct_stochastic_perron(m: &InteractionMatrix) -> Option<Vec<f64>> {
    let n = m.n();
    let mut a: DMatrix<f64> = m.wt().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let v = a.lu().solve(&b)?;
    Some(v.iter().copied().collect())
}

/// Perron eigenvalue and eigenvector(s) of an irreducible matrix.
pub fn perron_vector(m: &InteractionMatrix) -> Result<Perron> {
    perron_vector_with(m, PerronOptions::default())
}

pub fn perron_vector_with(m: &InteractionMatrix, opts: PerronOptions) -> Result<Perron> {
    if !is_irreducible(m) {
        return Err(Error::Reducible);
    }
    let n = m.n();
    let (lambda_star, v) = match lazy_power_iteration(n, |x| m.apply_left(x), opts) {
        Ok(found) => found,
        Err((iterations, residual)) => {
            if m.mode() == Mode::Stochastic && n <= opts.direct_limit {
                let v = direct_stochastic_perron(m)
                    .ok_or(Error::NoConvergence { iterations, residual })?;
                (1.0, v)
            } else {
                return Err(Error::NoConvergence { iterations, residual });
            }
        }
    };
    let u = match m.mode() {
        Mode::Stochastic => None,
        Mode::Generalized => {
            let (_, mut u) = lazy_power_iteration(n, |x| m.apply(x), opts)
                .map_err(|(iterations, residual)| Error::NoConvergence { iterations, residual })?;
            let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            u.iter_mut().for_each(|e| *e /= uv);
            Some(u)
        }
    };
    let lambda_star = if m.mode() == Mode::Stochastic { 1.0 } else { lambda_star };
    Ok(Perron { lambda_star, v, u })
}

/// Everything the decomposition and diagnostics need about an irreducible
/// interaction matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStructure {
    pub mode: Mode,
    pub n: usize,
    pub n_per: usize,
    /// Cyclic class of each vertex.
    pub classes: Vec<usize>,
    /// Vertices of each cyclic class, in increasing order.
    pub class_members: Vec<Vec<usize>>,
    /// `sum_{l in class h} v_l` for each class.
    pub class_mass: Vec<f64>,
    pub lambda_star: f64,
    pub v: Vec<f64>,
    pub u: Option<Vec<f64>>,
}

impl SpectralStructure {
    pub fn analyze(m: &InteractionMatrix) -> Result<Self> {
        let n_per = period(m)?;
        let classes = cyclic_classes(m, n_per)?;
        let Perron { lambda_star, v, u } = perron_vector(m)?;
        let mut class_members = vec![Vec::new(); n_per];
        let mut class_mass = vec![0.0; n_per];
        for (l, &h) in classes.iter().enumerate() {
            class_members[h].push(l);
            class_mass[h] += v[l];
        }
        Ok(Self { mode: m.mode(), n: m.n(), n_per, classes, class_members, class_mass, lambda_star, v, u })
    }

    fn check_len(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: z.len() });
        }
        Ok(())
    }

    /// `v^T z`.
    pub fn leading_coefficient(&self, z: &[f64]) -> f64 {
        self.v.iter().zip(z).map(|(a, b)| a * b).sum()
    }

    /// The projectors `P1`, `C`, `P2`, `P3` as dense matrices.
    pub fn projectors(&self) -> Result<Projectors> {
        if self.mode != Mode::Stochastic {
            return Err(Error::RequiresStochastic);
        }
        let n = self.n;
        let p1 = DMatrix::from_fn(n, n, |_, j| self.v[j]);
        let c = DMatrix::from_fn(n, n, |i, j| {
            let h = self.classes[i];
            if self.classes[j] == h {
                self.v[j] / self.class_mass[h]
            } else {
                0.0
            }
        });
        let p2 = &c - &p1;
        let p3 = DMatrix::identity(n, n) - &c;
        Ok(Projectors { p1, c, p2, p3 })
    }

    /// Coefficients `eta_j = sum_l v_l exp(-2 pi i j cls(l) / n_per) z_l` of
    /// `z` on the left eigenvectors of the unit-modulus eigenvalues.
    pub fn periodic_coefficients(&self, z: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(z)?;
        let k = self.n_per as f64;
        Ok((0..self.n_per)
            .map(|j| {
                self.classes
                    .iter()
                    .zip(&self.v)
                    .zip(z)
                    .map(|((&h, &vl), &zl)| {
                        let angle = -2.0 * PI * (j * h) as f64 / k;
                        Complex64::from_polar(vl * zl, angle)
                    })
                    .sum()
            })
            .collect())
    }

    /// Right eigenvector `q_j` with entries `exp(2 pi i j cls(l) / n_per)`.
    pub fn periodic_right_eigenvector(&self, j: usize) -> Vec<Complex64> {
        let k = self.n_per as f64;
        self.classes
            .iter()
            .map(|&h| Complex64::from_polar(1.0, 2.0 * PI * ((j * h) % self.n_per) as f64 / k))
            .collect()
    }
}

/// Dense projector matrices. `P1 + P2 + P3 = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projectors {
    pub p1: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub p3: DMatrix<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example1() -> InteractionMatrix {
        let rows = vec![vec![0.0, 2.0 / 3.0, 1.0 / 3.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap()
    }

    fn identity2() -> InteractionMatrix {
        InteractionMatrix::from_transpose_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], Mode::Stochastic)
            .unwrap()
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&example1()));
        assert!(!is_irreducible(&identity2()));
        assert!(is_irreducible(&InteractionMatrix::directed_cycle(3).unwrap()));
        // one-way edge only
        let chain = InteractionMatrix::from_transpose_rows(
            &[vec![1.0, 0.0], vec![0.5, 0.5]],
            Mode::Stochastic,
        )
        .unwrap();
        assert!(!is_irreducible(&chain));
    }

    #[test]
    fn periods() {
        assert_eq!(period(&example1()).unwrap(), 2);
        for n in 2..8 {
            assert_eq!(period(&InteractionMatrix::directed_cycle(n).unwrap()).unwrap(), n);
        }
        let lazy = InteractionMatrix::from_transpose_rows(
            &[vec![0.1, 0.6, 0.3], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            Mode::Stochastic,
        )
        .unwrap();
        assert_eq!(period(&lazy).unwrap(), 1);
        assert_eq!(period(&identity2()), Err(Error::Reducible));
    }

    #[test]
    fn classes() {
        assert_eq!(cyclic_classes(&example1(), 2).unwrap(), vec![0, 1, 1]);
        let c4 = InteractionMatrix::directed_cycle(4).unwrap();
        assert_eq!(cyclic_classes(&c4, 4).unwrap(), vec![0, 1, 2, 3]);
        let mf = InteractionMatrix::mean_field(3).unwrap();
        assert_eq!(cyclic_classes(&mf, 1).unwrap(), vec![0, 0, 0]);
        assert!(matches!(cyclic_classes(&c4, 3), Err(Error::InconsistentPeriod { .. })));
    }

    #[test]
    fn perron_example1() {
        let p = perron_vector(&example1()).unwrap();
        assert_eq!(p.lambda_star, 1.0);
        assert_abs_diff_eq!(p.v[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v[2], 1.0 / 6.0, epsilon = 1e-12);
        assert!(p.u.is_none());
    }

    #[test]
    fn perron_mean_field() {
        let p = perron_vector(&InteractionMatrix::mean_field(5).unwrap()).unwrap();
        for v in p.v {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-13);
        }
    }

    #[test]
    fn perron_generalized() {
        let m = InteractionMatrix::from_transpose_rows(
            &[vec![0.0, 0.5], vec![0.5, 0.0]],
            Mode::Generalized,
        )
        .unwrap();
        let p = perron_vector(&m).unwrap();
        assert_abs_diff_eq!(p.lambda_star, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v[1], 0.5, epsilon = 1e-12);
        let u = p.u.unwrap();
        let uv: f64 = u.iter().zip(&p.v).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(uv, 1.0, epsilon = 1e-12);
        let wu = m.apply(&u);
        for (a, b) in wu.iter().zip(&u) {
            assert_abs_diff_eq!(*a, 0.5 * b, epsilon = 1e-10);
        }
    }

    #[test]
    fn direct_fallback_matches_iteration() {
        let m = example1();
        let opts = PerronOptions { max_iter: 1, ..Default::default() };
        let p = perron_vector_with(&m, opts).unwrap();
        assert_abs_diff_eq!(p.v[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v[2], 1.0 / 6.0, epsilon = 1e-12);
        let opts = PerronOptions { max_iter: 1, direct_limit: 2, ..Default::default() };
        assert!(matches!(perron_vector_with(&m, opts), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn projector_extremes() {
        let mf = SpectralStructure::analyze(&InteractionMatrix::mean_field(4).unwrap()).unwrap();
        let p = mf.projectors().unwrap();
        assert!(p.p2.iter().all(|x| x.abs() < 1e-15));

        let cyc = SpectralStructure::analyze(&InteractionMatrix::directed_cycle(5).unwrap()).unwrap();
        let p = cyc.projectors().unwrap();
        assert!(p.p3.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn reducible_is_refused() {
        assert_eq!(SpectralStructure::analyze(&identity2()), Err(Error::Reducible));
    }

    #[test]
    fn periodic_coefficient_zero_is_leading() {
        let s = SpectralStructure::analyze(&example1()).unwrap();
        let z = [0.3, 0.9, 0.2];
        let eta = s.periodic_coefficients(&z).unwrap();
        assert_abs_diff_eq!(eta[0].re, s.leading_coefficient(&z), epsilon = 1e-12);
        assert_abs_diff_eq!(eta[0].im, 0.0, epsilon = 1e-12);
        // j = 1 coefficient vector is (1/2, -1/3, -1/6)
        for (l, expected) in [0.5, -1.0 / 3.0, -1.0 / 6.0].into_iter().enumerate() {
            let mut e = [0.0; 3];
            e[l] = 1.0;
            let c = s.periodic_coefficients(&e).unwrap()[1];
            assert_abs_diff_eq!(c.re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-12);
        }
        assert!(s.periodic_coefficients(&[0.0; 2]).is_err());
    }
}
