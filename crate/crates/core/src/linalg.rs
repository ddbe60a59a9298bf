//! Sparse matrix storage (CSR) and the preconditioned conjugate gradient
//! solver used for every linear system in the time stepper.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed sparse row format.
///
/// Column indices are strictly increasing within each row and duplicate
/// entries are merged on construction.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet index out of range");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a matrix from raw CSR arrays. Column indices must be strictly
    /// increasing within each row.
    pub fn from_raw(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> CsrMatrix {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(col_idx.len(), values.len());
        debug_assert!((0..n).all(|i| row_ptr[i] <= row_ptr[i + 1]));
        debug_assert!((0..n).all(|i| col_idx[row_ptr[i]..row_ptr[i + 1]].windows(2).all(|w| w[0] < w[1])));
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of entry (i, j) in the value array, if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| span.start + k)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.position(i, i).map_or(0.0, |p| self.values[p]))
            .collect()
    }

    /// y = A x.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (&j, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Matrix-vector product with a dimension check.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Dense (i, j, value) dump in coordinate text format, for debugging.
    pub fn write_coo(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", i, j, v)?;
            }
        }
        Ok(())
    }
}

/// Stopping controls for the conjugate gradient solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Relative residual tolerance on ||b - Ax|| / ||b||.
    pub rel_tol: f64,
    /// Absolute floor: iteration also stops when ||b - Ax|| falls below this.
    pub abs_floor: f64,
    /// Maximum iterations; `None` means 10 * n.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-10,
            abs_floor: 1e-14,
            max_iter: None,
        }
    }
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_rel_residual: f64,
    pub converged: bool,
    /// Preconditioned residual norm sqrt(r^T M^-1 r) after each iteration.
    pub residual_history: Vec<f64>,
}

/// Solves A x = b for symmetric positive definite A by conjugate gradients
/// with Jacobi (diagonal) preconditioning. The initial guess is always zero.
///
/// Non-convergence within the iteration budget is an error carrying the
/// final residual; a silent inaccurate solution is never returned.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::BadDiagonal { row });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let max_iter = config.max_iter.unwrap_or(10 * n.max(1));

    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_rel_residual: 0.0,
                converged: true,
                residual_history: Vec::new(),
            },
        ));
    }

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();

    for k in 1..=max_iter {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                curvature: pap,
                iteration: k,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        history.push(rz_new.max(0.0).sqrt());

        let r_norm = norm2(&r);
        if r_norm <= config.rel_tol * b_norm || r_norm <= config.abs_floor {
            return Ok((
                x,
                SolveReport {
                    iterations: k,
                    final_rel_residual: r_norm / b_norm,
                    converged: true,
                    residual_history: history,
                },
            ));
        }
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }

    let final_res = norm2(&r) / b_norm;
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: final_res,
        tolerance: config.rel_tol,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense Gaussian elimination with partial pivoting; the independent
    /// oracle for the iterative solver.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
                .unwrap();
            m.swap(k, piv);
            rhs.swap(k, piv);
            assert!(m[k][k].abs() > 1e-14, "singular oracle matrix");
            for i in (k + 1)..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (rhs[i] - s) / m[i][i];
        }
        x
    }

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn spmv_identity_returns_input() {
        let a = CsrMatrix::identity(5);
        let x = vec![3.0, -1.0, 0.5, 2.0, 7.0];
        assert_eq!(a.spmv(&x).unwrap(), x);
    }

    #[test]
    fn spmv_laplacian_times_ones_telescopes() {
        let a = laplacian_1d(8);
        let y = a.spmv(&vec![1.0; 8]).unwrap();
        assert_eq!(y[0], 1.0);
        assert_eq!(y[7], 1.0);
        for &v in &y[1..7] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn spmv_dimension_mismatch_is_rejected() {
        let a = CsrMatrix::identity(4);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn from_triplets_merges_duplicates_and_sorts() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0), (1, 1, 4.0)]);
        let (cols, vals) = a.row(0);
        assert_eq!(cols, &[0, 1]);
        assert_eq!(vals, &[1.0, 5.0]);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn cg_identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(6);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0];
        let (x, rep) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero_without_iterating() {
        let a = laplacian_1d(10);
        let (x, rep) = solve_spd(&a, &vec![0.0; 10], &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cg_matches_dense_oracle_on_1d_laplacian() {
        let n = 10;
        let a = laplacian_1d(n);
        let b = vec![1.0; n];
        let (x, rep) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged);

        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[i][j] = v;
            }
        }
        let x_ref = dense_solve(&dense, &b);
        for (xi, ri) in x.iter().zip(&x_ref) {
            assert!((xi - ri).abs() < 1e-9, "cg {} vs dense {}", xi, ri);
        }
    }

    #[test]
    fn cg_rejects_zero_diagonal() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]);
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0], &SolverConfig::default()),
            Err(Error::BadDiagonal { row: 1 })
        ));
    }

    #[test]
    fn cg_reports_nonconvergence_instead_of_bad_solution() {
        let a = laplacian_1d(50);
        let cfg = SolverConfig {
            max_iter: Some(3),
            ..Default::default()
        };
        match solve_spd(&a, &vec![1.0; 50], &cfg) {
            Err(Error::NoConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected NoConvergence, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn cg_residual_history_decays_without_blowup() {
        // The preconditioned residual of conjugate gradients may oscillate
        // locally (only the energy norm of the error is monotone), but it
        // must never grow past its running minimum by more than a modest
        // factor and must end below the tolerance.
        let a = laplacian_1d(40);
        let b: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let (_, rep) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        let hist = &rep.residual_history;
        assert!(!hist.is_empty());
        let mut running_min = f64::INFINITY;
        for &v in hist {
            assert!(v <= 10.0 * running_min.min(hist[0]), "residual blew up: {}", v);
            running_min = running_min.min(v);
        }
        assert!(*hist.last().unwrap() <= hist[0]);
        assert!(rep.final_rel_residual <= 1e-10);
    }

    #[test]
    fn cg_energy_error_is_monotone() {
        // ||x_k - x*||_A decreases monotonically (CG optimality). The
        // deterministic zero start makes truncated solves reproduce the
        // iterate sequence, so cap the iteration count to observe x_k.
        let n = 12;
        let a = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| ((3 * i % 7) as f64) - 2.0).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[i][j] = v;
            }
        }
        let x_star = dense_solve(&dense, &b);
        let energy = |x: &[f64]| -> f64 {
            let e: Vec<f64> = x.iter().zip(&x_star).map(|(xi, si)| xi - si).collect();
            dot(&e, &a.spmv(&e).unwrap()).sqrt()
        };
        // Tightening the tolerance stops the (deterministic) iteration at
        // later points of the same iterate sequence.
        let mut samples: Vec<(usize, f64)> = vec![(0, energy(&vec![0.0; n]))];
        for j in 1..=12 {
            let cfg = SolverConfig {
                rel_tol: 10f64.powi(-j),
                abs_floor: 0.0,
                max_iter: None,
            };
            let (x, rep) = solve_spd(&a, &b, &cfg).unwrap();
            samples.push((rep.iterations, energy(&x)));
        }
        samples.sort_by_key(|s| s.0);
        for w in samples.windows(2) {
            assert!(
                w[1].1 <= w[0].1 * (1.0 + 1e-10) + 1e-15,
                "energy grew between iterations {} and {}: {} -> {}",
                w[0].0,
                w[1].0,
                w[0].1,
                w[1].1
            );
        }
    }

    #[test]
    fn coordinate_dump_lists_all_entries() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.5), (1, 0, -2.0), (1, 1, 3.0)]);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().starts_with("0 0 1.5"));
    }

    #[test]
    fn solution_is_deterministic() {
        let a = laplacian_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let (x1, _) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        let (x2, _) = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        assert_eq!(x1, x2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// CSR product agrees with a dense row-by-row oracle.
            #[test]
            fn spmv_matches_dense_oracle(seed in 0u64..500) {
                let n = 50;
                let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let mut next = || {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 33) as f64) / ((1u64 << 31) as f64) - 0.5
                };
                let mut dense = vec![vec![0.0; n]; n];
                let mut trip = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        let v = next();
                        if v.abs() > 0.35 {
                            dense[i][j] = v;
                            trip.push((i, j, v));
                        }
                    }
                }
                let a = CsrMatrix::from_triplets(n, &trip);
                let x: Vec<f64> = (0..n).map(|_| next()).collect();
                let y = a.spmv(&x).unwrap();
                for i in 0..n {
                    let yi: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
                    prop_assert!((y[i] - yi).abs() <= 1e-13);
                }
            }
        }
    }
}
