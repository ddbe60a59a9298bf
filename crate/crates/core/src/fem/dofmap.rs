//! Degree-of-freedom management for P1/P2 Lagrange spaces on structured
//! simplicial meshes.

use std::collections::HashMap;

use super::element::{ReferenceElement, TET_EDGES, TRI_EDGES};
use crate::error::Result;
use crate::mesh::Mesh;

/// Global dof numbering, per-cell connectivity, dof coordinates and the
/// Dirichlet mask. P1 dofs coincide with mesh nodes; P2 appends one dof
/// per mesh edge located at the edge midpoint.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub degree: usize,
    pub n_dofs: usize,
    dofs_per_cell: usize,
    /// Local-to-global table, stride `dofs_per_cell`.
    cell_dofs: Vec<usize>,
    /// Coordinates of each dof (nodal interpolation points).
    pub coords: Vec<[f64; 3]>,
    /// True for dofs on the Dirichlet boundary (all of the box boundary).
    pub is_dirichlet: Vec<bool>,
}

impl DofMap {
    pub fn build(mesh: &Mesh, degree: usize) -> Result<DofMap> {
        let element = ReferenceElement::new(mesh.dim(), degree)?;
        let dofs_per_cell = element.n_basis();
        let n_vertices = mesh.n_nodes();
        let n_cells = mesh.n_simplices();

        let mut cell_dofs = Vec::with_capacity(n_cells * dofs_per_cell);
        let mut coords: Vec<[f64; 3]> = mesh.nodes().to_vec();

        if degree == 1 {
            for j in 0..n_cells {
                cell_dofs.extend_from_slice(mesh.simplex(j));
            }
        } else {
            let edges: &[[usize; 2]] = if mesh.dim() == 2 { &TRI_EDGES } else { &TET_EDGES };
            let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
            for j in 0..n_cells {
                let s = mesh.simplex(j);
                cell_dofs.extend_from_slice(s);
                for e in edges {
                    let (a, b) = (s[e[0]], s[e[1]]);
                    let key = (a.min(b), a.max(b));
                    let next_id = n_vertices + edge_ids.len();
                    let id = *edge_ids.entry(key).or_insert(next_id);
                    if id == coords.len() {
                        let (pa, pb) = (mesh.node(key.0), mesh.node(key.1));
                        coords.push([
                            0.5 * (pa[0] + pb[0]),
                            0.5 * (pa[1] + pb[1]),
                            0.5 * (pa[2] + pb[2]),
                        ]);
                    }
                    cell_dofs.push(id);
                }
            }
            debug_assert_eq!(coords.len(), n_vertices + edge_ids.len());
        }

        // A dof lies on the boundary iff one of its coordinates is exactly
        // 0 or 1; midpoints inherit this exactly since both endpoints must
        // share the extreme coordinate.
        let dim = mesh.dim();
        let is_dirichlet = coords
            .iter()
            .map(|p| (0..dim).any(|a| p[a] == 0.0 || p[a] == 1.0))
            .collect();

        Ok(DofMap {
            degree,
            n_dofs: coords.len(),
            dofs_per_cell,
            cell_dofs,
            coords,
            is_dirichlet,
        })
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.dofs_per_cell
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.dofs_per_cell..(cell + 1) * self.dofs_per_cell]
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len() / self.dofs_per_cell
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| !self.is_dirichlet[i]).collect()
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| self.is_dirichlet[i]).collect()
    }
}
