//! Assembly of mass/stiffness matrices and load vectors, Dirichlet
//! elimination by lifting, nodal interpolation and field evaluation.

use super::FeSpace;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Scalar coefficient of the weighted stiffness form, evaluated at
/// quadrature points during assembly.
pub enum Coefficient<'a> {
    Constant(f64),
    /// Closed form at physical points.
    Function(&'a dyn Fn([f64; 3]) -> f64),
    /// map(value of the FE function with these coefficients).
    MappedField {
        coeffs: &'a [f64],
        map: &'a dyn Fn(f64) -> f64,
    },
}

/// Scalar field entering the Joule source through the conductivity.
pub enum ScalarSource<'a> {
    FeField(&'a [f64]),
    Function(&'a dyn Fn([f64; 3]) -> f64),
}

/// Right-hand-side functional assembled by quadrature.
pub enum LoadTerm<'a> {
    /// (f, v)
    Function(&'a dyn Fn([f64; 3]) -> f64),
    /// (sigma(u) |grad phi_h|^2 + f, v) with phi_h an FE field on this
    /// space and u either an FE field or an exact field.
    Joule {
        temperature: ScalarSource<'a>,
        potential: &'a [f64],
        sigma: &'a dyn Fn(f64) -> f64,
        forcing: &'a dyn Fn([f64; 3]) -> f64,
    },
    /// (g, grad v) for a vector field g.
    GradFunction(&'a dyn Fn([f64; 3]) -> [f64; 3]),
}

/// Squared L2/H1-seminorm and p-th-power errors accumulated by the
/// elevated-degree norm rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct RawNorms {
    pub l2_sq: f64,
    pub h1_semi_sq: f64,
    pub lp_pow: f64,
    pub w1p_semi_pow: f64,
}

impl FeSpace {
    /// Matrix with the shared sparsity pattern and zero values.
    pub fn zero_matrix(&self) -> CsrMatrix {
        let (row_ptr, col_idx) = self.csr_structure();
        CsrMatrix::from_raw(
            self.n_dofs(),
            row_ptr.to_vec(),
            col_idx.to_vec(),
            vec![0.0; col_idx.len()],
        )
    }

    /// Mass matrix (phi_j, phi_i) over all dofs.
    pub fn assemble_mass(&self) -> CsrMatrix {
        let mut out = self.zero_matrix();
        self.assemble_mass_into(&mut out);
        out
    }

    pub fn assemble_mass_into(&self, out: &mut CsrMatrix) {
        out.values_mut().fill(0.0);
        let tab = self.tab_matrix();
        let k = tab.n_basis;
        let mut local = vec![0.0; k * k];
        let values_ptr = out.values_mut();
        for cell in 0..self.dofmap().n_cells() {
            local.fill(0.0);
            let (_, det) = self.cell_geometry(cell);
            for q in 0..tab.n_points {
                let w = tab.rule.weights[q] * det;
                let basis = &tab.basis[q * k..(q + 1) * k];
                for a in 0..k {
                    let wa = w * basis[a];
                    for b in 0..=a {
                        local[a * k + b] += wa * basis[b];
                    }
                }
            }
            scatter_symmetric(&local, k, &self.scatter()[cell * k * k..], values_ptr);
        }
    }

    /// Weighted stiffness matrix (coeff grad phi_j, grad phi_i). The
    /// coefficient must be strictly positive at every quadrature point and,
    /// when `admissible` is given, must stay inside that closed range.
    pub fn assemble_stiffness(
        &self,
        coeff: &Coefficient,
        admissible: Option<(f64, f64)>,
    ) -> Result<CsrMatrix> {
        let mut out = self.zero_matrix();
        self.assemble_stiffness_into(coeff, admissible, &mut out)?;
        Ok(out)
    }

    pub fn assemble_stiffness_into(
        &self,
        coeff: &Coefficient,
        admissible: Option<(f64, f64)>,
        out: &mut CsrMatrix,
    ) -> Result<()> {
        out.values_mut().fill(0.0);
        let tab = self.tab_matrix();
        let k = tab.n_basis;
        let mut local = vec![0.0; k * k];
        let mut grads = vec![[0.0; 3]; k];
        for cell in 0..self.dofmap().n_cells() {
            local.fill(0.0);
            let dofs = self.dofmap().cell_dofs(cell);
            let (inv_jt, det) = self.cell_geometry(cell);
            let inv_jt = *inv_jt;
            for q in 0..tab.n_points {
                let w = tab.rule.weights[q] * det;
                let c = match coeff {
                    Coefficient::Constant(v) => *v,
                    Coefficient::Function(f) => f(self.quad_point(tab, cell, q)),
                    Coefficient::MappedField { coeffs, map } => {
                        let basis = &tab.basis[q * k..(q + 1) * k];
                        let mut s = 0.0;
                        for (l, &d) in dofs.iter().enumerate() {
                            s += coeffs[d] * basis[l];
                        }
                        map(s)
                    }
                };
                let bad_range = admissible.is_some_and(|(lo, hi)| c < lo || c > hi);
                if !c.is_finite() || c <= 0.0 || bad_range {
                    let (lo, hi) = admissible.unwrap_or((f64::MIN_POSITIVE, f64::INFINITY));
                    let x = self.quad_point(tab, cell, q);
                    return Err(Error::CoefficientRange {
                        value: c,
                        min: lo,
                        max: hi,
                        x: x[0],
                        y: x[1],
                        z: x[2],
                    });
                }
                physical_grads(&inv_jt, &tab.grad[q * k..(q + 1) * k], &mut grads);
                let wc = w * c;
                for a in 0..k {
                    let ga = grads[a];
                    for b in 0..=a {
                        let gb = grads[b];
                        local[a * k + b] += wc * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
                    }
                }
            }
            scatter_symmetric(&local, k, &self.scatter()[cell * k * k..], out.values_mut());
        }
        Ok(())
    }

    /// Load vector (term, v) over all dofs.
    pub fn assemble_load(&self, term: &LoadTerm) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        self.add_load_into(term, 1.0, &mut out);
        out
    }

    /// out += scale * (term, v).
    pub fn add_load_into(&self, term: &LoadTerm, scale: f64, out: &mut [f64]) {
        let tab = self.tab_load();
        let k = tab.n_basis;
        let mut grads = vec![[0.0; 3]; k];
        for cell in 0..self.dofmap().n_cells() {
            let dofs = self.dofmap().cell_dofs(cell);
            let (inv_jt, det) = self.cell_geometry(cell);
            let inv_jt = *inv_jt;
            for q in 0..tab.n_points {
                let w = scale * tab.rule.weights[q] * det;
                let basis = &tab.basis[q * k..(q + 1) * k];
                match term {
                    LoadTerm::Function(f) => {
                        let v = f(self.quad_point(tab, cell, q));
                        for (l, &d) in dofs.iter().enumerate() {
                            out[d] += w * v * basis[l];
                        }
                    }
                    LoadTerm::Joule {
                        temperature,
                        potential,
                        sigma,
                        forcing,
                    } => {
                        let x = self.quad_point(tab, cell, q);
                        let u = match temperature {
                            ScalarSource::FeField(c) => {
                                let mut s = 0.0;
                                for (l, &d) in dofs.iter().enumerate() {
                                    s += c[d] * basis[l];
                                }
                                s
                            }
                            ScalarSource::Function(f) => f(x),
                        };
                        physical_grads(&inv_jt, &tab.grad[q * k..(q + 1) * k], &mut grads);
                        let mut g = [0.0; 3];
                        for (l, &d) in dofs.iter().enumerate() {
                            let c = potential[d];
                            g[0] += c * grads[l][0];
                            g[1] += c * grads[l][1];
                            g[2] += c * grads[l][2];
                        }
                        let v = sigma(u) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) + forcing(x);
                        for (l, &d) in dofs.iter().enumerate() {
                            out[d] += w * v * basis[l];
                        }
                    }
                    LoadTerm::GradFunction(gf) => {
                        let gv = gf(self.quad_point(tab, cell, q));
                        physical_grads(&inv_jt, &tab.grad[q * k..(q + 1) * k], &mut grads);
                        for (l, &d) in dofs.iter().enumerate() {
                            out[d] += w
                                * (gv[0] * grads[l][0] + gv[1] * grads[l][1] + gv[2] * grads[l][2]);
                        }
                    }
                }
            }
        }
    }

    /// Lagrange nodal interpolation: coefficient i = g(dof coordinate i).
    pub fn interpolate(&self, g: &dyn Fn([f64; 3]) -> f64) -> Vec<f64> {
        self.dofmap().coords.iter().map(|&p| g(p)).collect()
    }

    /// Full-length vector holding g at Dirichlet dof coordinates, zero at
    /// free dofs.
    pub fn dirichlet_values(&self, g: &dyn Fn([f64; 3]) -> f64) -> Vec<f64> {
        self.dofmap()
            .coords
            .iter()
            .zip(&self.dofmap().is_dirichlet)
            .map(|(&p, &d)| if d { g(p) } else { 0.0 })
            .collect()
    }

    /// Value and gradient of the FE field at a point of the closed domain.
    pub fn evaluate(&self, coeffs: &[f64], p: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let (cell, bary) = self.mesh().locate(p)?;
        let k = self.element().n_basis();
        let mut basis = vec![0.0; k];
        let mut ref_grads = vec![[0.0; 3]; k];
        self.element().eval(&bary, &mut basis);
        self.element().eval_grad(&bary, &mut ref_grads);
        let (inv_jt, _) = self.cell_geometry(cell);
        let dofs = self.dofmap().cell_dofs(cell);
        let mut value = 0.0;
        let mut grad = [0.0; 3];
        for (l, &d) in dofs.iter().enumerate() {
            let c = coeffs[d];
            value += c * basis[l];
            let g = apply3(inv_jt, ref_grads[l]);
            grad[0] += c * g[0];
            grad[1] += c * g[1];
            grad[2] += c * g[2];
        }
        Ok((value, grad))
    }

    /// Error norms of an FE field against an exact field, integrated with
    /// the degree-6 norm rule (one degree above assembly).
    pub fn integrate_error(
        &self,
        coeffs: &[f64],
        exact: &dyn Fn([f64; 3]) -> f64,
        exact_grad: &dyn Fn([f64; 3]) -> [f64; 3],
        p: f64,
    ) -> RawNorms {
        let tab = self.tab_norm();
        let k = tab.n_basis;
        let mut grads = vec![[0.0; 3]; k];
        let mut acc = RawNorms::default();
        for cell in 0..self.dofmap().n_cells() {
            let dofs = self.dofmap().cell_dofs(cell);
            let (inv_jt, det) = self.cell_geometry(cell);
            let inv_jt = *inv_jt;
            for q in 0..tab.n_points {
                let w = tab.rule.weights[q] * det;
                let x = self.quad_point(tab, cell, q);
                let basis = &tab.basis[q * k..(q + 1) * k];
                physical_grads(&inv_jt, &tab.grad[q * k..(q + 1) * k], &mut grads);
                let mut v = 0.0;
                let mut g = [0.0; 3];
                for (l, &d) in dofs.iter().enumerate() {
                    let c = coeffs[d];
                    v += c * basis[l];
                    g[0] += c * grads[l][0];
                    g[1] += c * grads[l][1];
                    g[2] += c * grads[l][2];
                }
                let ev = v - exact(x);
                let eg_exact = exact_grad(x);
                let eg = [g[0] - eg_exact[0], g[1] - eg_exact[1], g[2] - eg_exact[2]];
                let eg_sq = eg[0] * eg[0] + eg[1] * eg[1] + eg[2] * eg[2];
                acc.l2_sq += w * ev * ev;
                acc.h1_semi_sq += w * eg_sq;
                acc.lp_pow += w * ev.abs().powf(p);
                acc.w1p_semi_pow += w * eg_sq.sqrt().powf(p);
            }
        }
        acc
    }
}

fn physical_grads(inv_jt: &[[f64; 3]; 3], ref_grads: &[[f64; 3]], out: &mut [[f64; 3]]) {
    for (o, g) in out.iter_mut().zip(ref_grads) {
        *o = apply3(inv_jt, *g);
    }
}

fn apply3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn scatter_symmetric(local: &[f64], k: usize, positions: &[u32], values: &mut [f64]) {
    for a in 0..k {
        for b in 0..k {
            let v = if b <= a { local[a * k + b] } else { local[b * k + a] };
            values[positions[a * k + b] as usize] += v;
        }
    }
}

/// Rectangular CSR block (free rows x compact Dirichlet columns) used for
/// the lifting contribution of known boundary values.
#[derive(Debug, Clone)]
pub(crate) struct RectCsr {
    pub n_rows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl RectCsr {
    /// out -= R * x
    pub fn sub_mul_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n_rows {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (&j, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc += v * x[j];
            }
            out[i] -= acc;
        }
    }
}

/// Splits matrices assembled on the full dof set into the free/free block
/// and the free/Dirichlet lifting block. The split is structural and can be
/// reused for every matrix sharing the pattern.
pub struct DirichletLifter {
    n_full: usize,
    free: Vec<usize>,
    dirichlet: Vec<usize>,
    /// Destination of each full-matrix entry in free rows, in CSR order:
    /// (position, true) targets the fd block, (position, false) the reduced
    /// matrix. Entries in Dirichlet rows are skipped.
    dest: Vec<(u32, bool)>,
    red_row_ptr: Vec<usize>,
    red_col_idx: Vec<usize>,
    fd_row_ptr: Vec<usize>,
    fd_col_idx: Vec<usize>,
}

impl DirichletLifter {
    pub fn new(pattern_source: &CsrMatrix, mask: &[bool]) -> DirichletLifter {
        let n = pattern_source.n();
        assert_eq!(mask.len(), n);
        let free: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
        let dirichlet: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let mut full_to_free = vec![u32::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            full_to_free[i] = k as u32;
        }
        let mut full_to_dir = vec![u32::MAX; n];
        for (k, &i) in dirichlet.iter().enumerate() {
            full_to_dir[i] = k as u32;
        }

        let mut dest = Vec::new();
        let mut red_row_ptr = Vec::with_capacity(free.len() + 1);
        let mut red_col_idx = Vec::new();
        let mut fd_row_ptr = Vec::with_capacity(free.len() + 1);
        let mut fd_col_idx = Vec::new();
        red_row_ptr.push(0);
        fd_row_ptr.push(0);
        for &i in &free {
            let (cols, _) = pattern_source.row(i);
            for &j in cols {
                if mask[j] {
                    dest.push((fd_col_idx.len() as u32, true));
                    fd_col_idx.push(full_to_dir[j] as usize);
                } else {
                    dest.push((red_col_idx.len() as u32, false));
                    red_col_idx.push(full_to_free[j] as usize);
                }
            }
            red_row_ptr.push(red_col_idx.len());
            fd_row_ptr.push(fd_col_idx.len());
        }

        DirichletLifter {
            n_full: n,
            free,
            dirichlet,
            dest,
            red_row_ptr,
            red_col_idx,
            fd_row_ptr,
            fd_col_idx,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn reduced_zero(&self) -> CsrMatrix {
        CsrMatrix::from_raw(
            self.free.len(),
            self.red_row_ptr.clone(),
            self.red_col_idx.clone(),
            vec![0.0; self.red_col_idx.len()],
        )
    }

    pub(crate) fn fd_zero(&self) -> RectCsr {
        RectCsr {
            n_rows: self.free.len(),
            row_ptr: self.fd_row_ptr.clone(),
            col_idx: self.fd_col_idx.clone(),
            values: vec![0.0; self.fd_col_idx.len()],
        }
    }

    /// Copies the values of a full matrix into the reduced and fd blocks.
    pub(crate) fn split_values(&self, full: &CsrMatrix, reduced: &mut CsrMatrix, fd: &mut RectCsr) {
        let mut pos = 0;
        let red_vals = reduced.values_mut();
        for &i in &self.free {
            let (_, vals) = full.row(i);
            for &v in vals {
                let (p, is_fd) = self.dest[pos];
                if is_fd {
                    fd.values[p as usize] = v;
                } else {
                    red_vals[p as usize] = v;
                }
                pos += 1;
            }
        }
        debug_assert_eq!(pos, self.dest.len());
    }

    /// Reduced right-hand side: rhs_free - A_fd * boundary_values.
    pub(crate) fn reduce_rhs(&self, rhs_full: &[f64], fd: &RectCsr, boundary_values: &[f64]) -> Vec<f64> {
        let bv_compact: Vec<f64> = self.dirichlet.iter().map(|&i| boundary_values[i]).collect();
        let mut out: Vec<f64> = self.free.iter().map(|&i| rhs_full[i]).collect();
        fd.sub_mul_into(&bv_compact, &mut out);
        out
    }

    /// Embeds solved free values and known boundary values into a full
    /// coefficient vector.
    pub fn embed(&self, x_free: &[f64], boundary_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (&i, &v) in self.free.iter().zip(x_free) {
            out[i] = v;
        }
        for &i in &self.dirichlet {
            out[i] = boundary_values[i];
        }
        out
    }
}

/// Reduced SPD system on the free dofs with the boundary data folded into
/// the right-hand side.
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    lifter: DirichletLifter,
    boundary_values: Vec<f64>,
}

impl AssembledSystem {
    pub fn n_free(&self) -> usize {
        self.lifter.n_free()
    }

    pub fn free_dofs(&self) -> &[usize] {
        self.lifter.free()
    }

    /// Full coefficient vector from the solved free values.
    pub fn embed(&self, x_free: &[f64]) -> Vec<f64> {
        self.lifter.embed(x_free, &self.boundary_values)
    }
}

/// Eliminates Dirichlet dofs from a full system by lifting: the matrix is
/// restricted to the free block and the known boundary values are folded
/// into the right-hand side.
pub fn apply_dirichlet(
    matrix: &CsrMatrix,
    rhs: &[f64],
    mask: &[bool],
    boundary_values: &[f64],
) -> AssembledSystem {
    let lifter = DirichletLifter::new(matrix, mask);
    let mut reduced = lifter.reduced_zero();
    let mut fd = lifter.fd_zero();
    lifter.split_values(matrix, &mut reduced, &mut fd);
    let rhs_free = lifter.reduce_rhs(rhs, &fd, boundary_values);
    AssembledSystem {
        matrix: reduced,
        rhs: rhs_free,
        lifter,
        boundary_values: boundary_values.to_vec(),
    }
}
