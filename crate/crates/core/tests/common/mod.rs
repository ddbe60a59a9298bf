//! Shared oracles for integration tests: dense direct solver and matrix
//! helpers, kept independent of the library's iterative path.
#![allow(dead_code)] // each test binary uses its own subset

use thermistor_fem::linalg::CsrMatrix;

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        m.swap(k, piv);
        rhs.swap(k, piv);
        assert!(m[k][k].abs() > 1e-300, "singular matrix in dense oracle");
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

pub fn to_dense(a: &CsrMatrix) -> Vec<Vec<f64>> {
    let n = a.n();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            dense[i][j] = v;
        }
    }
    dense
}

/// Largest absolute entry of A - A^T.
pub fn max_asymmetry(a: &CsrMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let vt = a.position(j, i).map_or(0.0, |p| a.values()[p]);
            worst = worst.max((v - vt).abs());
        }
    }
    worst
}

pub fn max_abs(a: &CsrMatrix) -> f64 {
    a.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
