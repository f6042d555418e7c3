//! Sparse direct solves for the 9-point block stencil of the momentum system.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

/// Neighbour offsets of the 9-point stencil, slot = (dj+1)*3 + (di+1).
pub const STENCIL: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[inline]
pub fn slot_of(di: isize, dj: isize) -> usize {
    ((dj + 1) * 3 + (di + 1)) as usize
}

pub type Block = [[f64; 2]; 2];

/// Block-sparse matrix over the free nodes with a fixed CSC pattern.
///
/// Every free node owns two consecutive unknowns. `blocks[p * 9 + slot]` is
/// the 2×2 coupling between free node `p` (row) and its neighbour at `slot`
/// (column); couplings to fixed nodes are absent from the pattern.
pub struct BlockSystem {
    pub free_count: usize,
    pub blocks: Vec<Block>,
    /// Free-node index of each neighbour, or `usize::MAX` when fixed/outside.
    neighbours: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// CSC position of entry (2p, 2q) for each (p, slot).
    position: Vec<usize>,
    symbolic_llt: Option<SymbolicLlt<usize>>,
    symbolic_lu: Option<SymbolicLu<usize>>,
}

impl BlockSystem {
    /// `neighbours[p * 9 + slot]` gives the free index of the neighbour.
    pub fn new(free_count: usize, neighbours: Vec<usize>) -> Self {
        assert_eq!(neighbours.len(), free_count * 9);
        let n = 2 * free_count;
        // column q lists the rows of its free neighbours, sorted
        let mut cols: Vec<Vec<usize>> = (0..free_count)
            .map(|q| {
                let mut v: Vec<usize> = (0..9)
                    .map(|s| neighbours[q * 9 + s])
                    .filter(|&p| p != usize::MAX)
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for rows in &cols {
            for _ in 0..2 {
                for &p in rows {
                    row_idx.push(2 * p);
                    row_idx.push(2 * p + 1);
                }
                col_ptr.push(row_idx.len());
            }
        }
        let mut position = vec![usize::MAX; free_count * 9];
        for p in 0..free_count {
            for s in 0..9 {
                let q = neighbours[p * 9 + s];
                if q == usize::MAX {
                    continue;
                }
                let idx = cols[q].binary_search(&p).expect("stencil is symmetric");
                position[p * 9 + s] = col_ptr[2 * q] + 2 * idx;
            }
        }
        cols.clear();
        Self {
            free_count,
            blocks: vec![[[0.0; 2]; 2]; free_count * 9],
            neighbours,
            col_ptr,
            row_idx,
            position,
            symbolic_llt: None,
            symbolic_lu: None,
        }
    }

    pub fn clear(&mut self) {
        self.blocks.iter_mut().for_each(|b| *b = [[0.0; 2]; 2]);
    }

    pub fn neighbour(&self, p: usize, slot: usize) -> usize {
        self.neighbours[p * 9 + slot]
    }

    fn values(&self) -> Vec<f64> {
        let mut vals = vec![0.0; self.row_idx.len()];
        let stride = |q: usize| self.col_ptr[2 * q + 1] - self.col_ptr[2 * q];
        for p in 0..self.free_count {
            for s in 0..9 {
                let q = self.neighbours[p * 9 + s];
                if q == usize::MAX {
                    continue;
                }
                let pos = self.position[p * 9 + s];
                let b = &self.blocks[p * 9 + s];
                let next = pos + stride(q);
                vals[pos] = b[0][0];
                vals[pos + 1] = b[1][0];
                vals[next] = b[0][1];
                vals[next + 1] = b[1][1];
            }
        }
        vals
    }

    /// Matrix-vector product, used for residual checks.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; 2 * self.free_count];
        for p in 0..self.free_count {
            for s in 0..9 {
                let q = self.neighbours[p * 9 + s];
                if q == usize::MAX {
                    continue;
                }
                let b = &self.blocks[p * 9 + s];
                y[2 * p] += b[0][0] * x[2 * q] + b[0][1] * x[2 * q + 1];
                y[2 * p + 1] += b[1][0] * x[2 * q] + b[1][1] * x[2 * q + 1];
            }
        }
        y
    }

    /// Solves `A x = rhs` to a relative residual of `rel_tol`, refining the
    /// direct solution when needed. Symmetric systems go through a sparse
    /// Cholesky factorization, with LU as the fallback.
    pub fn solve(&mut self, rhs: &[f64], symmetric: bool, rel_tol: f64) -> Result<Vec<f64>> {
        let n = 2 * self.free_count;
        if n == 0 {
            return Ok(Vec::new());
        }
        faer::set_global_parallelism(Par::Seq);
        let vals = self.values();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(sym, &vals);
        let factor = factorize(
            &mut self.symbolic_llt,
            &mut self.symbolic_lu,
            mat,
            symmetric,
        )?;
        let rhs_norm = norm2(rhs);
        let mut x = factor.solve(rhs);
        for _ in 0..4 {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::LinearSolve("non-finite solution".into()));
            }
            let ax = self.apply(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if norm2(&r) <= rel_tol * rhs_norm {
                break;
            }
            let dx = factor.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        }
        Ok(x)
    }
}

fn factorize(
    symbolic_llt: &mut Option<SymbolicLlt<usize>>,
    symbolic_lu: &mut Option<SymbolicLu<usize>>,
    mat: SparseColMatRef<'_, usize, f64>,
    symmetric: bool,
) -> Result<Factor> {
    if symmetric {
        if symbolic_llt.is_none() {
            *symbolic_llt = Some(
                SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
                    .map_err(|e| Error::LinearSolve(format!("{e:?}")))?,
            );
        }
        let symbolic = symbolic_llt.clone().expect("set above");
        if let Ok(llt) = Llt::try_new_with_symbolic(symbolic, mat, Side::Lower) {
            return Ok(Factor::Llt(llt));
        }
    }
    if symbolic_lu.is_none() {
        *symbolic_lu = Some(
            SymbolicLu::try_new(mat.symbolic())
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?,
        );
    }
    let symbolic = symbolic_lu.clone().expect("set above");
    let lu = Lu::try_new_with_symbolic(symbolic, mat)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    Ok(Factor::Lu(lu))
}

// one short-lived factorization per solve, size does not matter
#[allow(clippy::large_enum_variant)]
enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl Factor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = match self {
            Factor::Llt(f) => f.solve(&b),
            Factor::Lu(f) => f.solve(&b),
        };
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-D chain of free nodes, each coupled to its left/right neighbour.
    fn chain(n: usize) -> BlockSystem {
        let mut nb = vec![usize::MAX; n * 9];
        for p in 0..n {
            nb[p * 9 + slot_of(0, 0)] = p;
            if p > 0 {
                nb[p * 9 + slot_of(-1, 0)] = p - 1;
            }
            if p + 1 < n {
                nb[p * 9 + slot_of(1, 0)] = p + 1;
            }
        }
        BlockSystem::new(n, nb)
    }

    #[test]
    fn solves_symmetric_and_general_systems() {
        for symmetric in [true, false] {
            let mut sys = chain(20);
            for p in 0..20 {
                sys.blocks[p * 9 + slot_of(0, 0)] =
                    [[4.0, 1.0], [if symmetric { 1.0 } else { -1.0 }, 3.0]];
                if p > 0 {
                    sys.blocks[p * 9 + slot_of(-1, 0)] = [[-1.0, 0.2], [0.0, -1.0]];
                }
                if p + 1 < 20 {
                    sys.blocks[p * 9 + slot_of(1, 0)] = [[-1.0, 0.0], [0.2, -1.0]];
                }
            }
            let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
            let rhs = sys.apply(&x_true);
            let x = sys.solve(&rhs, symmetric, 1e-14).unwrap();
            for (a, b) in x.iter().zip(&x_true) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
