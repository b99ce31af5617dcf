//! Nodal shape functions: standard P1 on regular elements, linear immersed
//! finite element (IFE) functions on cut elements.
//!
//! An IFE shape function is linear on each side of the chord `DE`,
//! `phi(x, y) = a + b x + c y`, with six coefficients fixed by
//!
//! * the nodal values `phi_i(A_j) = delta_ij`, each vertex on its own piece;
//! * continuity at `D` and at `E`;
//! * continuity of the normal flux, `beta+ grad phi+ . n = beta- grad phi- . n`
//!   with `n` the chord normal.

use rayon::prelude::*;

use crate::dense::Lu;
use crate::error::{Error, Result};
use crate::geometry::{CutGeometry, ElementClass, Side};
use crate::mesh::{signed_area, Point2, UniformMesh};

/// Systems with a larger 1-norm condition estimate are reported singular.
pub const MAX_CONDITION: f64 = 1e14;

/// `a + b (x - x0) + c (y - y0)`, anchored at a vertex of its element so
/// evaluation does not lose digits on small elements far from the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub origin: Point2,
    /// `(a, b, c)`.
    pub coeffs: [f64; 3],
}

impl Linear {
    pub fn eval(&self, p: Point2) -> f64 {
        let c = &self.coeffs;
        c[0] + c[1] * (p.x - self.origin.x) + c[2] * (p.y - self.origin.y)
    }

    pub fn grad(&self) -> Point2 {
        Point2::new(self.coeffs[1], self.coeffs[2])
    }
}

pub fn eval_linear(c: &Linear, p: Point2) -> f64 {
    c.eval(p)
}

pub fn grad_linear(c: &Linear) -> Point2 {
    c.grad()
}

#[derive(Clone, Debug)]
pub struct P1Basis {
    pub coeffs: [Linear; 3],
}

impl P1Basis {
    pub fn new(tri: [Point2; 3]) -> Self {
        let twice_area = 2.0 * signed_area(tri[0], tri[1], tri[2]);
        let origin = tri[0];
        let coeffs = std::array::from_fn(|i| {
            let pj = tri[(i + 1) % 3] - origin;
            let pk = tri[(i + 2) % 3] - origin;
            Linear {
                origin,
                coeffs: [
                    (pj.x * pk.y - pk.x * pj.y) / twice_area,
                    (pj.y - pk.y) / twice_area,
                    (pk.x - pj.x) / twice_area,
                ],
            }
        });
        Self { coeffs }
    }
}

#[derive(Clone, Debug)]
pub struct IfeBasis {
    pub minus: [Linear; 3],
    pub plus: [Linear; 3],
    pub d: Point2,
    pub e: Point2,
    pub normal: Point2,
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl IfeBasis {
    pub fn piece(&self, side: Side) -> &[Linear; 3] {
        side.pick(&self.minus, &self.plus)
    }

    pub fn side_of(&self, p: Point2, hint: Side) -> Side {
        let s = (p - self.d).dot(self.normal);
        let tol = 1e-14 * self.d.dist(self.e).max(f64::MIN_POSITIVE);
        if s > tol {
            Side::Plus
        } else if s < -tol {
            Side::Minus
        } else {
            hint
        }
    }
}

#[derive(Clone, Debug)]
pub enum ElementBasis {
    P1(P1Basis),
    Ife(IfeBasis),
}

impl ElementBasis {
    /// Coefficients of the three shape functions on the given piece; both
    /// pieces coincide on regular elements.
    pub fn piece(&self, side: Side) -> &[Linear; 3] {
        match self {
            ElementBasis::P1(b) => &b.coeffs,
            ElementBasis::Ife(b) => b.piece(side),
        }
    }

    /// Piece containing `p`: by signed distance to the chord, ties resolved
    /// by `hint`.
    pub fn side_of(&self, p: Point2, hint: Side) -> Side {
        match self {
            ElementBasis::P1(_) => hint,
            ElementBasis::Ife(b) => b.side_of(p, hint),
        }
    }

    /// Values and gradients of the three shape functions at `p`.
    pub fn eval(&self, p: Point2, hint: Side) -> ([f64; 3], [Point2; 3]) {
        let piece = self.piece(self.side_of(p, hint));
        (
            piece.map(|c| eval_linear(&c, p)),
            piece.map(|c| grad_linear(&c)),
        )
    }

    /// Value at `p` of the function with nodal coefficients `u`.
    pub fn combine(&self, u: &[f64; 3], p: Point2, side: Side) -> f64 {
        let piece = self.piece(side);
        (0..3).map(|i| u[i] * eval_linear(&piece[i], p)).sum()
    }

    pub fn combine_grad(&self, u: &[f64; 3], side: Side) -> Point2 {
        let piece = self.piece(side);
        (0..3).fold(Point2::default(), |g, i| g + grad_linear(&piece[i]) * u[i])
    }
}

/// Convenience wrapper matching `ElementBasis::eval`.
pub fn eval_basis(basis: &ElementBasis, point: Point2, side_hint: Side) -> ([f64; 3], [Point2; 3]) {
    basis.eval(point, side_hint)
}

/// The 6x6 system defining the IFE functions, in coordinates shifted to
/// `origin` and scaled by `scale`. Unknowns are `(a-, b-, c-, a+, b+, c+)`.
fn ife_matrix(
    tri: &[Point2; 3],
    cut: &CutGeometry,
    beta_minus: f64,
    beta_plus: f64,
    origin: Point2,
    scale: f64,
) -> [[f64; 6]; 6] {
    let local = |p: Point2| (p - origin) * (1.0 / scale);
    let mut m = [[0.0; 6]; 6];
    for (j, side) in cut.vertex_sides.iter().enumerate() {
        let p = local(tri[j]);
        let off = side.pick(0, 3);
        m[j][off] = 1.0;
        m[j][off + 1] = p.x;
        m[j][off + 2] = p.y;
    }
    for (row, q) in [(3, cut.d), (4, cut.e)] {
        let p = local(q);
        m[row] = [1.0, p.x, p.y, -1.0, -p.x, -p.y];
    }
    let bmax = beta_minus.max(beta_plus);
    let (n1, n2) = (cut.normal.x, cut.normal.y);
    m[5] = [
        0.0,
        -beta_minus / bmax * n1,
        -beta_minus / bmax * n2,
        0.0,
        beta_plus / bmax * n1,
        beta_plus / bmax * n2,
    ];
    m
}

/// Builds the IFE shape functions of a cut element.
///
/// `element` is only used to label errors.
pub fn build_ife_basis(
    tri: [Point2; 3],
    cut: &CutGeometry,
    beta_minus: f64,
    beta_plus: f64,
    element: usize,
) -> Result<IfeBasis> {
    if !(beta_minus > 0.0 && beta_plus > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "coefficients must be positive, got ({beta_minus}, {beta_plus})"
        )));
    }
    let origin = tri[0];
    let scale = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let m = ife_matrix(&tri, cut, beta_minus, beta_plus, origin, scale);
    let singular = |condition| Error::SingularSystem { element, condition };
    let lu = Lu::factor(m).ok_or_else(|| singular(f64::INFINITY))?;
    let condition = lu.condition();
    if !(condition <= MAX_CONDITION) {
        return Err(singular(condition));
    }

    let zero = Linear {
        origin,
        coeffs: [0.0; 3],
    };
    let mut minus = [zero; 3];
    let mut plus = [zero; 3];
    for i in 0..3 {
        let mut rhs = [0.0; 6];
        rhs[i] = 1.0;
        let x = lu.solve(&rhs);
        // Undo the scaling; the shift stays in `origin`.
        let global = |a: f64, b: f64, c: f64| Linear {
            origin,
            coeffs: [a, b / scale, c / scale],
        };
        minus[i] = global(x[0], x[1], x[2]);
        plus[i] = global(x[3], x[4], x[5]);
    }
    Ok(IfeBasis {
        minus,
        plus,
        d: cut.d,
        e: cut.e,
        normal: cut.normal,
        beta_minus,
        beta_plus,
    })
}

/// Shape functions for every element, in element order.
pub fn build_element_bases(
    mesh: &UniformMesh,
    classes: &[ElementClass],
    beta_minus: f64,
    beta_plus: f64,
) -> Result<Vec<ElementBasis>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.vertices(t);
            match &classes[t] {
                ElementClass::Regular(_) => Ok(ElementBasis::P1(P1Basis::new(tri))),
                ElementClass::Cut(cut) => {
                    build_ife_basis(tri, cut, beta_minus, beta_plus, t).map(ElementBasis::Ife)
                }
            }
        })
        .collect()
}

/// Largest residual of the six defining equations over the three shape
/// functions.
pub fn defining_residual(tri: [Point2; 3], cut: &CutGeometry, basis: &IfeBasis) -> f64 {
    let mut worst: f64 = 0.0;
    let bmax = basis.beta_minus.max(basis.beta_plus);
    for i in 0..3 {
        let (m, p) = (&basis.minus[i], &basis.plus[i]);
        for (j, side) in cut.vertex_sides.iter().enumerate() {
            let v = eval_linear(side.pick(m, p), tri[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
        for q in [basis.d, basis.e] {
            worst = worst.max((eval_linear(m, q) - eval_linear(p, q)).abs());
        }
        let n = basis.normal;
        let flux = basis.beta_plus * grad_linear(p).dot(n) - basis.beta_minus * grad_linear(m).dot(n);
        worst = worst.max(flux.abs() / bmax);
    }
    worst
}
