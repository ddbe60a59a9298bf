//! Symmetric quadrature rules on the reference triangle and tetrahedron.
//!
//! Points are stored in barycentric coordinates; weights sum to the
//! reference simplex volume (1/2 in 2D, 1/6 in 3D). All weights are
//! positive. Exactness is verified against closed-form monomial integrals
//! in the tests.

/// Quadrature rule on a reference simplex.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Highest polynomial degree integrated exactly.
    pub exactness: usize,
    /// Barycentric coordinates, dim + 1 meaningful entries per point.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to 1/dim!.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Smallest stored rule with exactness at least `min_exactness`.
    /// Supported: dim in {2, 3}, min_exactness <= 6.
    pub fn simplex(dim: usize, min_exactness: usize) -> QuadratureRule {
        match (dim, min_exactness) {
            (2, 0..=2) => triangle_degree2(),
            (2, 3..=4) => triangle_degree4(),
            (2, 5..=6) => triangle_degree6(),
            (3, 0..=2) => tetrahedron_degree2(),
            (3, 3..=5) => tetrahedron_degree5(),
            (3, 6) => tetrahedron_degree6(),
            _ => panic!("no simplex rule for dim {} exactness {}", dim, min_exactness),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn rule(dim: usize, exactness: usize, pts: Vec<([f64; 4], f64)>) -> QuadratureRule {
    let volume = if dim == 2 { 0.5 } else { 1.0 / 6.0 };
    let (points, weights): (Vec<_>, Vec<_>) = pts.into_iter().map(|(p, w)| (p, w * volume)).unzip();
    QuadratureRule {
        dim,
        exactness,
        points,
        weights,
    }
}

/// Three distinct placements of (a, a, b).
fn tri_aab(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 4], f64)>) {
    out.push(([b, a, a, 0.0], w));
    out.push(([a, b, a, 0.0], w));
    out.push(([a, a, b, 0.0], w));
}

/// All six permutations of (a, b, c) with distinct entries.
fn tri_abc(a: f64, b: f64, c: f64, w: f64, out: &mut Vec<([f64; 4], f64)>) {
    for p in [
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ] {
        out.push(([p[0], p[1], p[2], 0.0], w));
    }
}

/// Four placements of (a, b, b, b).
fn tet_abbb(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 4], f64)>) {
    for pos in 0..4 {
        let mut p = [b; 4];
        p[pos] = a;
        out.push((p, w));
    }
}

/// Six placements of (a, a, b, b).
fn tet_aabb(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 4], f64)>) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut p = [b; 4];
            p[i] = a;
            p[j] = a;
            out.push((p, w));
        }
    }
}

/// Twelve placements of (a, a, b, c) with b, c distinct.
fn tet_aabc(a: f64, b: f64, c: f64, w: f64, out: &mut Vec<([f64; 4], f64)>) {
    for pb in 0..4 {
        for pc in 0..4 {
            if pb == pc {
                continue;
            }
            let mut p = [a; 4];
            p[pb] = b;
            p[pc] = c;
            out.push((p, w));
        }
    }
}

/// Midpoint rule on the triangle, degree 2, 3 points.
fn triangle_degree2() -> QuadratureRule {
    let mut pts = Vec::new();
    tri_aab(0.5, 0.0, 1.0 / 3.0, &mut pts);
    rule(2, 2, pts)
}

/// Six-point degree-4 rule on the triangle.
fn triangle_degree4() -> QuadratureRule {
    let mut pts = Vec::new();
    let a1 = 0.445948490915965;
    tri_aab(a1, 1.0 - 2.0 * a1, 0.223381589678011, &mut pts);
    let a2 = 0.091576213509771;
    tri_aab(a2, 1.0 - 2.0 * a2, 0.109951743655322, &mut pts);
    rule(2, 4, pts)
}

/// Twelve-point degree-6 rule on the triangle.
fn triangle_degree6() -> QuadratureRule {
    let mut pts = Vec::new();
    let a1 = 0.063089014491502;
    tri_aab(a1, 1.0 - 2.0 * a1, 0.050844906370207, &mut pts);
    let a2 = 0.249286745170910;
    tri_aab(a2, 1.0 - 2.0 * a2, 0.116786275726379, &mut pts);
    let (a3, b3) = (0.310352451033785, 0.053145049844816);
    tri_abc(a3, b3, 1.0 - a3 - b3, 0.082851075618374, &mut pts);
    rule(2, 6, pts)
}

/// Four-point degree-2 rule on the tetrahedron.
fn tetrahedron_degree2() -> QuadratureRule {
    let mut pts = Vec::new();
    let b = (5.0 - 5.0_f64.sqrt()) / 20.0;
    let a = 1.0 - 3.0 * b;
    tet_abbb(a, b, 0.25, &mut pts);
    rule(3, 2, pts)
}

/// Fourteen-point degree-5 rule on the tetrahedron.
fn tetrahedron_degree5() -> QuadratureRule {
    let mut pts = Vec::new();
    let b1 = 0.3108859192633005;
    tet_abbb(1.0 - 3.0 * b1, b1, 0.1126879257180162, &mut pts);
    let b2 = 0.0927352503108912;
    tet_abbb(1.0 - 3.0 * b2, b2, 0.0734930431163619, &mut pts);
    let c = 0.0455037041256497;
    tet_aabb(c, 0.5 - c, 0.0425460207770812, &mut pts);
    rule(3, 5, pts)
}

/// Twenty-four-point degree-6 rule on the tetrahedron.
fn tetrahedron_degree6() -> QuadratureRule {
    let mut pts = Vec::new();
    let b1 = 0.2146028712591517;
    tet_abbb(1.0 - 3.0 * b1, b1, 0.0399227502581679, &mut pts);
    let b2 = 0.0406739585346113;
    tet_abbb(1.0 - 3.0 * b2, b2, 0.0100772110553207, &mut pts);
    let b3 = 0.3223378901422757;
    tet_abbb(1.0 - 3.0 * b3, b3, 0.0553571815436544, &mut pts);
    let a = 0.0636610018750175;
    let b = 0.2696723314583159;
    let c = 0.6030056647916491;
    tet_aabc(a, b, c, 27.0 / 560.0, &mut pts);
    rule(3, 6, pts)
}
