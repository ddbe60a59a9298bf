//! Structured simplicial meshes of the unit square and unit cube.
//!
//! The 2D mesh splits every grid cell into two triangles along the same
//! lower-left to upper-right diagonal, giving 2M^2 triangles on (M+1)^2
//! nodes. The 3D mesh uses the Kuhn decomposition of each grid cell into
//! 6 tetrahedra sharing the main cell diagonal, giving 6M^3 tetrahedra on
//! (M+1)^3 vertices.

use crate::error::{Error, Result};

/// Axis orders generating the six Kuhn tetrahedra of a cell. Tetrahedron k
/// of a cell covers the points whose fractional cell coordinates satisfy
/// f[p[0]] >= f[p[1]] >= f[p[2]] for p = KUHN_PERMS[k].
const KUHN_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

const KUHN_PERM_ODD: [bool; 6] = [false, true, true, false, false, true];

/// Immutable simplicial mesh of the unit box (0,1)^d, d in {2, 3}.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    subdivisions: usize,
    nodes: Vec<[f64; 3]>,
    /// Vertex indices, stride dim + 1, positively oriented.
    simplices: Vec<usize>,
    boundary: Vec<bool>,
}

impl Mesh {
    /// Uniform triangulation of the unit square with M subdivisions per
    /// axis; every cell is split along its lower-left to upper-right
    /// diagonal.
    pub fn unit_square(m: usize) -> Result<Mesh> {
        if m == 0 {
            return Err(Error::Config("mesh subdivisions must be at least 1".into()));
        }
        let np = m + 1;
        let coord = |i: usize| i as f64 / m as f64;
        let mut nodes = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                nodes.push([coord(i), coord(j), 0.0]);
            }
        }
        let idx = |i: usize, j: usize| j * np + i;
        let mut simplices = Vec::with_capacity(2 * m * m * 3);
        for cy in 0..m {
            for cx in 0..m {
                let p00 = idx(cx, cy);
                let p10 = idx(cx + 1, cy);
                let p01 = idx(cx, cy + 1);
                let p11 = idx(cx + 1, cy + 1);
                // below the diagonal p00-p11, then above; both counterclockwise
                simplices.extend_from_slice(&[p00, p10, p11]);
                simplices.extend_from_slice(&[p00, p11, p01]);
            }
        }
        let boundary = nodes.iter().map(|p| on_unit_boundary(p, 2)).collect();
        Ok(Mesh {
            dim: 2,
            subdivisions: m,
            nodes,
            simplices,
            boundary,
        })
    }

    /// Kuhn tetrahedralization of the unit cube with M subdivisions per
    /// axis: 6 tetrahedra per cell, all sharing the main cell diagonal.
    pub fn unit_cube(m: usize) -> Result<Mesh> {
        if m == 0 {
            return Err(Error::Config("mesh subdivisions must be at least 1".into()));
        }
        let np = m + 1;
        let coord = |i: usize| i as f64 / m as f64;
        let mut nodes = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    nodes.push([coord(i), coord(j), coord(k)]);
                }
            }
        }
        let idx = |v: [usize; 3]| (v[2] * np + v[1]) * np + v[0];
        let mut simplices = Vec::with_capacity(6 * m * m * m * 4);
        for cz in 0..m {
            for cy in 0..m {
                for cx in 0..m {
                    let corner = [cx, cy, cz];
                    for (perm, &odd) in KUHN_PERMS.iter().zip(&KUHN_PERM_ODD) {
                        let mut vtx = [corner; 4];
                        let mut run = corner;
                        for (s, &axis) in perm.iter().enumerate() {
                            run[axis] += 1;
                            vtx[s + 1] = run;
                        }
                        if odd {
                            vtx.swap(2, 3);
                        }
                        for v in vtx {
                            simplices.push(idx(v));
                        }
                    }
                }
            }
        }
        let boundary = nodes.iter().map(|p| on_unit_boundary(p, 3)).collect();
        Ok(Mesh {
            dim: 3,
            subdivisions: m,
            nodes,
            simplices,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subdivisions per axis (the M of the construction).
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn simplex(&self, j: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[j * k..(j + 1) * k]
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.boundary[i]
    }

    /// Signed volume of simplex j (positive for all generated meshes).
    pub fn signed_volume(&self, j: usize) -> f64 {
        let s = self.simplex(j);
        let p0 = self.nodes[s[0]];
        if self.dim == 2 {
            let a = sub(self.nodes[s[1]], p0);
            let b = sub(self.nodes[s[2]], p0);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        } else {
            let a = sub(self.nodes[s[1]], p0);
            let b = sub(self.nodes[s[2]], p0);
            let c = sub(self.nodes[s[3]], p0);
            det3(a, b, c) / 6.0
        }
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_simplices()).map(|j| self.signed_volume(j)).sum()
    }

    /// Maximum simplex diameter; equals sqrt(d)/M on these meshes.
    pub fn mesh_size(&self) -> f64 {
        let k = self.dim + 1;
        let mut h: f64 = 0.0;
        for j in 0..self.n_simplices() {
            let s = self.simplex(j);
            for a in 0..k {
                for b in (a + 1)..k {
                    let d = sub(self.nodes[s[a]], self.nodes[s[b]]);
                    h = h.max(dot3(d, d));
                }
            }
        }
        h.sqrt()
    }

    /// Locates the simplex containing `p` by direct index arithmetic on the
    /// structured grid and returns (simplex index, barycentric coordinates).
    pub fn locate(&self, p: [f64; 3]) -> Result<(usize, [f64; 4])> {
        for a in 0..self.dim {
            if !(0.0..=1.0).contains(&p[a]) {
                return Err(Error::PointOutsideDomain {
                    x: p[0],
                    y: p[1],
                    z: p[2],
                });
            }
        }
        let m = self.subdivisions;
        let cell_of = |x: f64| ((x * m as f64).floor() as usize).min(m - 1);
        let frac = |x: f64, c: usize| x * m as f64 - c as f64;
        let j = if self.dim == 2 {
            let (cx, cy) = (cell_of(p[0]), cell_of(p[1]));
            let (fx, fy) = (frac(p[0], cx), frac(p[1], cy));
            let tri = if fy <= fx { 0 } else { 1 };
            (cy * m + cx) * 2 + tri
        } else {
            let (cx, cy, cz) = (cell_of(p[0]), cell_of(p[1]), cell_of(p[2]));
            let f = [frac(p[0], cx), frac(p[1], cy), frac(p[2], cz)];
            let mut axes = [0usize, 1, 2];
            axes.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap());
            let t = KUHN_PERMS.iter().position(|q| *q == axes).unwrap();
            ((cz * m + cy) * m + cx) * 6 + t
        };
        let bary = self.barycentric(j, p);
        Ok((j, bary))
    }

    /// Barycentric coordinates of `p` within simplex j.
    pub fn barycentric(&self, j: usize, p: [f64; 3]) -> [f64; 4] {
        let s = self.simplex(j);
        let p0 = self.nodes[s[0]];
        let r = sub(p, p0);
        let mut bary = [0.0; 4];
        if self.dim == 2 {
            let a = sub(self.nodes[s[1]], p0);
            let b = sub(self.nodes[s[2]], p0);
            let det = a[0] * b[1] - a[1] * b[0];
            let l1 = (r[0] * b[1] - r[1] * b[0]) / det;
            let l2 = (a[0] * r[1] - a[1] * r[0]) / det;
            bary[0] = 1.0 - l1 - l2;
            bary[1] = l1;
            bary[2] = l2;
        } else {
            let a = sub(self.nodes[s[1]], p0);
            let b = sub(self.nodes[s[2]], p0);
            let c = sub(self.nodes[s[3]], p0);
            let det = det3(a, b, c);
            let l1 = det3(r, b, c) / det;
            let l2 = det3(a, r, c) / det;
            let l3 = det3(a, b, r) / det;
            bary[0] = 1.0 - l1 - l2 - l3;
            bary[1] = l1;
            bary[2] = l2;
            bary[3] = l3;
        }
        bary
    }

    /// Plain-text export: one node per line ("x y [z]"), then one simplex
    /// per line (vertex indices).
    pub fn write_text(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        for p in &self.nodes {
            if self.dim == 2 {
                writeln!(w, "{} {}", p[0], p[1])?;
            } else {
                writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
            }
        }
        for j in 0..self.n_simplices() {
            let s = self.simplex(j);
            let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn on_unit_boundary(p: &[f64; 3], dim: usize) -> bool {
    (0..dim).any(|a| p[a] == 0.0 || p[a] == 1.0)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}
