//! Reference elements, quadrature, dof management and assembly for P1/P2
//! Lagrange spaces with variable coefficients.

pub mod assembly;
pub mod dofmap;
pub mod element;
pub mod quadrature;

pub use assembly::{apply_dirichlet, AssembledSystem, Coefficient, DirichletLifter, LoadTerm, RawNorms, ScalarSource};
pub use dofmap::DofMap;
pub use element::{ReferenceElement, Tabulation};
pub use quadrature::QuadratureRule;

use crate::error::Result;
use crate::mesh::Mesh;

/// A finite element space: mesh, dof map, tabulated reference data and
/// cached per-cell geometry plus the shared sparsity pattern of all
/// matrices assembled on it.
///
/// P1 bilinear forms use a degree-2-exact rule and P2 forms a degree-4
/// rule; every right-hand side uses the degree-4 rule (the Joule source
/// composes a non-polynomial conductivity with squared gradients) and
/// error norms use a degree-6 rule.
pub struct FeSpace {
    mesh: Mesh,
    dofmap: DofMap,
    element: ReferenceElement,
    tab_matrix: Tabulation,
    tab_load: Tabulation,
    tab_norm: Tabulation,
    /// Inverse transpose Jacobian per cell (3x3, unused entries zero).
    inv_jac_t: Vec<[[f64; 3]; 3]>,
    /// Jacobian determinant per cell (positive by mesh orientation).
    det: Vec<f64>,
    /// Shared CSR structure.
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// CSR value position of each local (a, b) pair, cell-major.
    scatter: Vec<u32>,
}

impl FeSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Result<FeSpace> {
        let dofmap = DofMap::build(&mesh, degree)?;
        let element = ReferenceElement::new(mesh.dim(), degree)?;
        let matrix_exactness = if degree == 1 { 2 } else { 4 };
        let tab_matrix = element.tabulate(&QuadratureRule::simplex(mesh.dim(), matrix_exactness));
        let tab_load = element.tabulate(&QuadratureRule::simplex(mesh.dim(), 4));
        let tab_norm = element.tabulate(&QuadratureRule::simplex(mesh.dim(), 6));

        let n_cells = mesh.n_simplices();
        let dim = mesh.dim();
        let mut inv_jac_t = vec![[[0.0; 3]; 3]; n_cells];
        let mut det = vec![0.0; n_cells];
        for c in 0..n_cells {
            let s = mesh.simplex(c);
            let p0 = mesh.node(s[0]);
            if dim == 2 {
                let a = mesh.node(s[1]);
                let b = mesh.node(s[2]);
                let j = [[a[0] - p0[0], b[0] - p0[0]], [a[1] - p0[1], b[1] - p0[1]]];
                let d = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                det[c] = d;
                // rows of J^{-T} = columns of J^{-1}
                inv_jac_t[c][0][0] = j[1][1] / d;
                inv_jac_t[c][0][1] = -j[1][0] / d;
                inv_jac_t[c][1][0] = -j[0][1] / d;
                inv_jac_t[c][1][1] = j[0][0] / d;
            } else {
                let a = sub3(mesh.node(s[1]), p0);
                let b = sub3(mesh.node(s[2]), p0);
                let cc = sub3(mesh.node(s[3]), p0);
                let j = [[a[0], b[0], cc[0]], [a[1], b[1], cc[1]], [a[2], b[2], cc[2]]];
                let d = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                    - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                    + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
                det[c] = d;
                let cof = |r: usize, s_: usize| -> f64 {
                    let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                    let (c1, c2) = ((s_ + 1) % 3, (s_ + 2) % 3);
                    j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]
                };
                // inv = adj / det, adj[i][j] = cof(j, i); inv_t[i][j] = inv[j][i]
                for r in 0..3 {
                    for s_ in 0..3 {
                        inv_jac_t[c][r][s_] = cof(r, s_) / d;
                    }
                }
            }
        }

        let (row_ptr, col_idx, scatter) = build_pattern(&dofmap);

        Ok(FeSpace {
            mesh,
            dofmap,
            element,
            tab_matrix,
            tab_load,
            tab_norm,
            inv_jac_t,
            det,
            row_ptr,
            col_idx,
            scatter,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs
    }

    pub(crate) fn tab_matrix(&self) -> &Tabulation {
        &self.tab_matrix
    }

    pub(crate) fn tab_load(&self) -> &Tabulation {
        &self.tab_load
    }

    pub(crate) fn tab_norm(&self) -> &Tabulation {
        &self.tab_norm
    }

    pub(crate) fn cell_geometry(&self, cell: usize) -> (&[[f64; 3]; 3], f64) {
        (&self.inv_jac_t[cell], self.det[cell])
    }

    pub(crate) fn csr_structure(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.col_idx)
    }

    pub(crate) fn scatter(&self) -> &[u32] {
        &self.scatter
    }

    /// Physical coordinates of quadrature point q of `tab` in `cell`.
    pub(crate) fn quad_point(&self, tab: &Tabulation, cell: usize, q: usize) -> [f64; 3] {
        let s = self.mesh.simplex(cell);
        let bary = &tab.rule.points[q];
        let mut x = [0.0; 3];
        for (v, &node) in s.iter().enumerate() {
            let p = self.mesh.node(node);
            for a in 0..3 {
                x[a] += bary[v] * p[a];
            }
        }
        x
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Shared CSR structure of the Galerkin matrices plus the per-cell scatter
/// table mapping local (a, b) pairs to CSR value positions.
fn build_pattern(dofmap: &DofMap) -> (Vec<usize>, Vec<usize>, Vec<u32>) {
    let n = dofmap.n_dofs;
    let k = dofmap.dofs_per_cell();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for c in 0..dofmap.n_cells() {
        let dofs = dofmap.cell_dofs(c);
        for &a in dofs {
            for &b in dofs {
                rows[a].push(b as u32);
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for row in &mut rows {
        row.sort_unstable();
        row.dedup();
        col_idx.extend(row.iter().map(|&j| j as usize));
        row_ptr.push(col_idx.len());
    }
    let mut scatter = Vec::with_capacity(dofmap.n_cells() * k * k);
    for c in 0..dofmap.n_cells() {
        let dofs = dofmap.cell_dofs(c);
        for &a in dofs {
            let span = row_ptr[a]..row_ptr[a + 1];
            let row = &col_idx[span.clone()];
            for &b in dofs {
                let pos = row.binary_search(&b).expect("entry in pattern");
                scatter.push((span.start + pos) as u32);
            }
        }
    }
    (row_ptr, col_idx, scatter)
}
