//! Lagrange P1/P2 basis functions on the reference triangle and
//! tetrahedron, expressed through barycentric coordinates.

use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};

/// Local edges of the reference simplex carrying the P2 midpoint dofs.
/// 2D: edge k is opposite vertex k. 3D: lexicographic vertex pairs.
pub const TRI_EDGES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Reference Lagrange element of degree 1 or 2 on a simplex.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub dim: usize,
    pub degree: usize,
}

/// Basis values and reference gradients tabulated at the points of one
/// quadrature rule. Layout is point-major: entry q * n_basis + i.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    pub basis: Vec<f64>,
    pub grad: Vec<[f64; 3]>,
    pub rule: QuadratureRule,
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize) -> Result<ReferenceElement> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!("unsupported dimension {}", dim)));
        }
        if !(degree == 1 || degree == 2) {
            return Err(Error::Config(format!("unsupported element degree {}", degree)));
        }
        Ok(ReferenceElement { dim, degree })
    }

    /// Number of local basis functions: 3/6 on triangles, 4/10 on
    /// tetrahedra.
    pub fn n_basis(&self) -> usize {
        let v = self.dim + 1;
        match self.degree {
            1 => v,
            _ => v + v * (v - 1) / 2,
        }
    }

    fn edges(&self) -> &'static [[usize; 2]] {
        if self.dim == 2 {
            &TRI_EDGES
        } else {
            &TET_EDGES
        }
    }

    /// Basis values at a barycentric point.
    pub fn eval(&self, bary: &[f64; 4], values: &mut [f64]) {
        let v = self.dim + 1;
        if self.degree == 1 {
            values[..v].copy_from_slice(&bary[..v]);
            return;
        }
        for i in 0..v {
            values[i] = bary[i] * (2.0 * bary[i] - 1.0);
        }
        for (k, e) in self.edges().iter().enumerate() {
            values[v + k] = 4.0 * bary[e[0]] * bary[e[1]];
        }
    }

    /// Basis gradients with respect to the reference coordinates
    /// (lambda_0 = 1 - sum xi_a, lambda_i = xi_i).
    pub fn eval_grad(&self, bary: &[f64; 4], grads: &mut [[f64; 3]]) {
        let v = self.dim + 1;
        // gradient of barycentric coordinate i wrt reference coords
        let dl = |i: usize, axis: usize| -> f64 {
            if i == 0 {
                -1.0
            } else if i - 1 == axis {
                1.0
            } else {
                0.0
            }
        };
        if self.degree == 1 {
            for i in 0..v {
                for a in 0..3 {
                    grads[i][a] = if a < self.dim { dl(i, a) } else { 0.0 };
                }
            }
            return;
        }
        for i in 0..v {
            let f = 4.0 * bary[i] - 1.0;
            for a in 0..3 {
                grads[i][a] = if a < self.dim { f * dl(i, a) } else { 0.0 };
            }
        }
        for (k, e) in self.edges().iter().enumerate() {
            for a in 0..3 {
                grads[v + k][a] = if a < self.dim {
                    4.0 * (bary[e[0]] * dl(e[1], a) + bary[e[1]] * dl(e[0], a))
                } else {
                    0.0
                };
            }
        }
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let nb = self.n_basis();
        let nq = rule.len();
        let mut basis = vec![0.0; nq * nb];
        let mut grad = vec![[0.0; 3]; nq * nb];
        for (q, pt) in rule.points.iter().enumerate() {
            self.eval(pt, &mut basis[q * nb..(q + 1) * nb]);
            self.eval_grad(pt, &mut grad[q * nb..(q + 1) * nb]);
        }
        Tabulation {
            n_points: nq,
            n_basis: nb,
            basis,
            grad,
            rule: rule.clone(),
        }
    }
}
