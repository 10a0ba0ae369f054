//! Sparse linear solvers: Gaussian elimination with partial pivoting for
//! general systems, preconditioned conjugate gradient for SPD systems.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Relative residual target for iterative solves.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Square sparse matrix stored as rows of `(column, value)`.
#[derive(Clone, Debug, Default)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        SparseMatrix { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }

    /// max_i |(A x - b)_i|
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(b).map(|(ax, bi)| (ax - bi).abs()).fold(0.0, f64::max)
    }

    /// Solve `A x = b` for each right-hand side by sparse Gaussian
    /// elimination with partial pivoting (natural column order).
    pub fn solve_direct(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        let mut rows: Vec<BTreeMap<usize, f64>> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = BTreeMap::new();
                for &(j, a) in r {
                    if a != 0.0 {
                        *m.entry(j).or_insert(0.0) += a;
                    }
                }
                m
            })
            .collect();
        let mut b: Vec<Vec<f64>> = (0..n).map(|i| rhs.iter().map(|v| v[i]).collect()).collect();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &j in r.keys() {
                col_rows[j].push(i);
            }
        }
        let mut pivoted = vec![false; n];
        let mut pivot_row = vec![usize::MAX; n];
        let scale = rows.iter().flat_map(|r| r.values()).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

        for k in 0..n {
            let mut cands: Vec<usize> = col_rows[k]
                .iter()
                .copied()
                .filter(|&r| !pivoted[r] && rows[r].get(&k).is_some_and(|v| *v != 0.0))
                .collect();
            cands.sort_unstable();
            cands.dedup();
            let p = cands
                .iter()
                .copied()
                .max_by(|&a, &b| rows[a][&k].abs().total_cmp(&rows[b][&k].abs()).then(b.cmp(&a)))
                .ok_or_else(|| Error::Singular(format!("no pivot for column {k}")))?;
            let akk = rows[p][&k];
            if akk.abs() <= 1e-300 * scale {
                return Err(Error::Singular(format!("pivot {akk:e} in column {k}")));
            }
            pivoted[p] = true;
            pivot_row[k] = p;
            let prow: Vec<(usize, f64)> = rows[p].iter().map(|(&j, &v)| (j, v)).collect();
            let pb = b[p].clone();
            for &r in &cands {
                if r == p {
                    continue;
                }
                let f = rows[r][&k] / akk;
                for &(j, v) in &prow {
                    if j == k {
                        continue;
                    }
                    let e = rows[r].entry(j).or_insert_with(|| {
                        col_rows[j].push(r);
                        0.0
                    });
                    *e -= f * v;
                }
                rows[r].remove(&k);
                for (bi, pi) in b[r].iter_mut().zip(&pb) {
                    *bi -= f * pi;
                }
            }
            col_rows[k].clear();
        }

        let m = rhs.len();
        let mut x = vec![vec![0.0; n]; m];
        for k in (0..n).rev() {
            let p = pivot_row[k];
            let akk = rows[p][&k];
            for (s, xs) in x.iter_mut().enumerate() {
                let mut acc = b[p][s];
                for (&j, &v) in rows[p].range(k + 1..) {
                    acc -= v * xs[j];
                }
                xs[k] = acc / akk;
            }
        }
        Ok(x)
    }

    /// Jacobi-preconditioned conjugate gradient for symmetric positive
    /// definite `A`. Stops when `|r| <= tol |b|`.
    pub fn solve_cg(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution> {
        let n = self.dim();
        let diag: Vec<f64> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().filter(|e| e.0 == i).map(|e| e.1).sum::<f64>())
            .collect();
        if let Some(i) = diag.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::Singular(format!("non-positive diagonal at row {i}")));
        }
        let bnorm = norm(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(CgSolution { x, iterations: 0, residual: 0.0 });
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            let ap = self.mul_vec(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Singular("matrix is not positive definite".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rel = norm(&r) / bnorm;
            if rel <= tol {
                return Ok(CgSolution { x, iterations: it, residual: rel });
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: norm(&r) / bnorm })
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense(a: &SparseMatrix) -> DMatrix<f64> {
        let n = a.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in a.rows().iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] += v;
            }
        }
        m
    }

    fn random_system(n: usize, seed: Vec<f64>) -> SparseMatrix {
        // diagonally weighted random sparse matrix
        let mut rows = vec![Vec::new(); n];
        for (t, &v) in seed.iter().enumerate() {
            let i = t % n;
            let j = (t * 7 + 3) % n;
            rows[i].push((j, v));
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.push((i, 4.0 + i as f64 * 0.1));
        }
        SparseMatrix::from_rows(rows)
    }

    proptest! {
        #[test]
        fn direct_matches_dense_lu(n in 2usize..25, vals in proptest::collection::vec(-2.0f64..2.0, 10..80)) {
            let a = random_system(n, vals);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
            let ours = a.solve_direct(&[b.clone()]).unwrap().remove(0);
            let reference = dense(&a).lu().solve(&DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                prop_assert!((ours[i] - reference[i]).abs() < 1e-9 * (1.0 + reference[i].abs()));
            }
            prop_assert!(a.residual(&ours, &b) < 1e-10);
        }
    }

    #[test]
    fn needs_pivoting() {
        // zero on the first diagonal entry
        let a = SparseMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        let x = a.solve_direct(&[vec![2.0, 5.0]]).unwrap().remove(0);
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]]);
        assert!(matches!(a.solve_direct(&[vec![1.0, 1.0]]), Err(Error::Singular(_))));
    }

    #[test]
    fn cg_on_path_laplacian() {
        let n = 50;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        let a = SparseMatrix::from_rows(rows);
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let sol = a.solve_cg(&b, 1e-12, 1000).unwrap();
        // potential drops linearly from the source side
        for (i, xi) in sol.x.iter().enumerate() {
            assert!((xi - (n - i) as f64 / (n + 1) as f64).abs() < 1e-10);
        }
        assert!(matches!(a.solve_cg(&b, 1e-14, 3), Err(Error::NoConvergence { .. })));
    }
}
