//! Block structure of reducible interaction matrices.
//!
//! Strongly connected components of the `W^T` digraph that have no edge
//! leaving them are the recurrent blocks: their vertices are influenced only
//! by each other and can be analysed on their own. Everything else forms the
//! transient block, whose rows couple it to the recurrent blocks.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::matrix::InteractionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentBlock {
    pub vertices: Vec<usize>,
    /// Irreducible sub-matrix `U_s` of `W^T` on `vertices`.
    pub sub_matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensationReport {
    /// Number of recurrent blocks (multiplicity of the eigenvalue 1 in
    /// stochastic mode).
    pub m: usize,
    pub recurrent_blocks: Vec<RecurrentBlock>,
    /// Union of the transient classes, possibly empty.
    pub transient_block: Vec<usize>,
    /// `U_f`: `W^T` restricted to the transient block.
    pub transient_matrix: Vec<Vec<f64>>,
    /// `U_{s,f}`: rows of the transient block, columns of recurrent block `s`.
    pub coupling_blocks: Vec<Vec<Vec<f64>>>,
    /// `permutation[i]` is the original vertex placed at position `i` of the
    /// block-triangular form.
    pub permutation: Vec<usize>,
}

pub fn condensation(m: &InteractionMatrix) -> CondensationReport {
    let n = m.n();
    let mut g = DiGraph::<usize, ()>::with_capacity(n, n * 2);
    let nodes: Vec<_> = (0..n).map(|l| g.add_node(l)).collect();
    for a in 0..n {
        for b in m.successors(a) {
            g.add_edge(nodes[a], nodes[b], ());
        }
    }
    let mut component = vec![0usize; n];
    let sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut vs: Vec<usize> = c.into_iter().map(|ix| g[ix]).collect();
            vs.sort_unstable();
            vs
        })
        .collect();
    for (k, c) in sccs.iter().enumerate() {
        for &l in c {
            component[l] = k;
        }
    }
    let closed = |c: &Vec<usize>| {
        c.iter().all(|&a| m.successors(a).all(|b| component[b] == component[a]))
    };
    let mut recurrent: Vec<Vec<usize>> = sccs.iter().filter(|c| closed(c)).cloned().collect();
    recurrent.sort_by_key(|c| c[0]);
    let mut transient: Vec<usize> =
        sccs.iter().filter(|c| !closed(c)).flatten().copied().collect();
    transient.sort_unstable();

    let recurrent_blocks: Vec<RecurrentBlock> = recurrent
        .iter()
        .map(|vs| RecurrentBlock { vertices: vs.clone(), sub_matrix: m.sub_transpose(vs, vs) })
        .collect();
    let coupling_blocks = recurrent.iter().map(|vs| m.sub_transpose(&transient, vs)).collect();
    let permutation = recurrent.iter().flatten().chain(transient.iter()).copied().collect();
    CondensationReport {
        m: recurrent_blocks.len(),
        recurrent_blocks,
        transient_matrix: m.sub_transpose(&transient, &transient),
        transient_block: transient,
        coupling_blocks,
        permutation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Mode;

    // Independent oracle: S is recurrent iff every vertex of S reaches exactly S.
    fn reach(m: &InteractionMatrix, a: usize) -> Vec<usize> {
        let mut seen = vec![false; m.n()];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(x) = stack.pop() {
            for y in m.successors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..m.n()).filter(|&i| seen[i]).collect()
    }

    fn oracle_recurrent(m: &InteractionMatrix) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for a in 0..m.n() {
            let r = reach(m, a);
            if r.iter().all(|&b| reach(m, b) == r) && !out.contains(&r) {
                out.push(r);
            }
        }
        out.sort_by_key(|c| c[0]);
        out
    }

    #[test]
    fn two_closed_blocks() {
        let rows = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ];
        let m = InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap();
        let r = condensation(&m);
        assert_eq!(r.m, 2);
        assert!(r.transient_block.is_empty());
        assert_eq!(r.recurrent_blocks[0].vertices, vec![0, 1]);
        assert_eq!(r.recurrent_blocks[1].sub_matrix, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn irreducible_single_block() {
        let m = InteractionMatrix::mean_field(3).unwrap();
        let r = condensation(&m);
        assert_eq!(r.m, 1);
        assert_eq!(r.recurrent_blocks[0].vertices, vec![0, 1, 2]);
        assert_eq!(r.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn chain_with_transient_vertex() {
        // vertex 2 listens to both closed vertices 0 and 1
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.5, 0.3, 0.2]];
        let m = InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap();
        let r = condensation(&m);
        assert_eq!(r.m, 2);
        assert_eq!(r.transient_block, vec![2]);
        let blocks: Vec<_> = r.recurrent_blocks.iter().map(|b| b.vertices.clone()).collect();
        assert_eq!(blocks, oracle_recurrent(&m));
        assert_eq!(r.coupling_blocks, vec![vec![vec![0.5]], vec![vec![0.3]]]);
        assert_eq!(r.transient_matrix, vec![vec![0.2]]);
        assert_eq!(r.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn agrees_with_reachability_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..9);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let mut r: Vec<f64> = (0..n)
                        .map(|_| if rng.gen_bool(0.25) { rng.gen::<f64>() + 0.01 } else { 0.0 })
                        .collect();
                    if r.iter().all(|x| *x == 0.0) {
                        r[rng.gen_range(0..n)] = 1.0;
                    }
                    let s: f64 = r.iter().sum();
                    r.iter().map(|x| x / s).collect()
                })
                .collect();
            let m = InteractionMatrix::from_transpose_rows(&rows, Mode::Stochastic).unwrap();
            let r = condensation(&m);
            let blocks: Vec<_> = r.recurrent_blocks.iter().map(|b| b.vertices.clone()).collect();
            assert_eq!(blocks, oracle_recurrent(&m));
            let mut all: Vec<usize> = r.permutation.clone();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
