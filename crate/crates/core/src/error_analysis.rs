//! Discrete error norms against a known exact solution, and observed
//! convergence orders.

use rayon::prelude::*;

use crate::assembly::{edge_average, local_energy, DofMap, InterfaceProblem, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{ElementClass, Side};
use crate::ife::ElementBasis;
use crate::mesh::{Point2, UniformMesh};
use crate::quadrature::{refine_triangle, QuadRule};

/// Discrete weak function `{u0, ub}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WgSolution {
    /// Nodal coefficients of `u0` on each element.
    pub interior: Vec<[f64; 3]>,
    /// Constant on each edge.
    pub edge: Vec<f64>,
}

impl WgSolution {
    /// Splits a full solution vector laid out as in [`DofMap`].
    pub fn from_vector(dofs: &DofMap, x: &[f64]) -> Result<Self> {
        if x.len() != dofs.total_dofs() {
            return Err(Error::IndexOutOfRange {
                index: x.len(),
                len: dofs.total_dofs(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite solution entry {i}")));
        }
        let interior = x[..3 * dofs.n_elements]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        let edge = x[3 * dofs.n_elements..].to_vec();
        Ok(Self { interior, edge })
    }

    /// Nodal interpolant of `u`, edge values `Qb u`.
    pub fn interpolate(mesh: &UniformMesh, classes: &[ElementClass], problem: &InterfaceProblem, u: impl Fn(Point2, Side) -> f64 + Sync) -> Self {
        let interior = (0..mesh.n_elements())
            .map(|t| {
                let tri = mesh.vertices(t);
                std::array::from_fn(|j| u(tri[j], vertex_side(&classes[t], j)))
            })
            .collect();
        let edge = (0..mesh.n_edges())
            .map(|e| {
                let (a, b) = mesh.edge_points(e);
                edge_average(a, b, &problem.levelset, |p| u(p, problem.levelset.side(p)))
            })
            .collect();
        Self { interior, edge }
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.interior.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn vertex_side(class: &ElementClass, j: usize) -> Side {
    match class {
        ElementClass::Regular(s) => *s,
        ElementClass::Cut(c) => c.vertex_sides[j],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub n_per_side: usize,
    pub dofs: usize,
    pub h: f64,
    pub e0_inf: f64,
    /// `max |u(m_e) - ub|` over edge midpoints `m_e`.
    pub eb_inf: f64,
    /// `max |Qb u - ub|` over edges, `Qb u` the exact edge mean.
    pub eb_mean_inf: f64,
    pub e0_l2: f64,
    pub e0_h1: f64,
    /// Energy norm of `{I_h u - u0, Qb u - ub}`, when requested.
    pub energy: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    /// Triangle rule degree for the L2 and H1 norms.
    pub degree: u32,
    /// Extra uniform refinement levels of the sub-triangles of cut elements.
    pub refine: u32,
    /// Scheme whose stabilizer defines the energy norm; `None` skips it.
    pub energy_penalty: Option<Scheme>,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            degree: 4,
            refine: 1,
            energy_penalty: None,
        }
    }
}

/// Integration cells of an element: triangle and the piece of `u0` used on
/// it.
fn integration_cells(tri: [Point2; 3], class: &ElementClass, refine: u32) -> Vec<([Point2; 3], Side)> {
    match class {
        ElementClass::Regular(s) => vec![(tri, *s)],
        ElementClass::Cut(cut) => [Side::Minus, Side::Plus]
            .into_iter()
            .flat_map(|side| {
                cut.sub_polygon(side)
                    .fan()
                    .flat_map(move |t| refine_triangle(t, refine))
                    .map(move |t| (t, side))
                    .collect::<Vec<_>>()
            })
            .collect(),
    }
}

/// `e0_l2`, `e0_h1`, `e0_inf`, `eb_inf` (and optionally the energy norm)
/// of `solution` against the exact solution of `problem`.
///
/// Inside the integrals, `u0` uses the piece of the chord-split sub-polygon
/// while the exact solution follows the sign of the level set at each
/// quadrature point.
pub fn compute_errors(
    solution: &WgSolution,
    problem: &InterfaceProblem,
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    options: &NormOptions,
) -> Result<ErrorReport> {
    let exact = problem.exact.as_ref().ok_or(Error::MissingExactSolution)?;
    if solution.interior.len() != mesh.n_elements() || solution.edge.len() != mesh.n_edges() {
        return Err(Error::IndexOutOfRange {
            index: solution.interior.len(),
            len: mesh.n_elements(),
        });
    }
    let rule = QuadRule::triangle(options.degree)?;
    let ls = &problem.levelset;

    // (l2^2, h1^2, inf, energy^2) per element, reduced in element order.
    let per_element: Vec<[f64; 4]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.vertices(t);
            let u = &solution.interior[t];
            let basis = &bases[t];
            let (mut l2, mut h1) = (0.0, 0.0);
            let refine = if classes[t].is_cut() { options.refine } else { 0 };
            for (cell, side) in integration_cells(tri, &classes[t], refine) {
                let grad_h = basis.combine_grad(u, side);
                for (p, w) in rule.map(cell[0], cell[1], cell[2]) {
                    let s = ls.side(p);
                    let e = (exact.u)(p, s) - basis.combine(u, p, side);
                    let g = (exact.grad)(p, s) - grad_h;
                    l2 += w * e * e;
                    h1 += w * g.dot(g);
                }
            }
            let mut inf: f64 = 0.0;
            for j in 0..3 {
                let a = tri[j];
                inf = inf.max(((exact.u)(a, ls.side(a)) - u[j]).abs());
            }
            let energy = match options.energy_penalty {
                None => 0.0,
                Some(rho) => {
                    let edges = mesh.triangle_edges[t];
                    let mut v = [0.0; 6];
                    for j in 0..3 {
                        v[j] = (exact.u)(tri[j], vertex_side(&classes[t], j)) - u[j];
                    }
                    for k in 0..3 {
                        let (a, b) = mesh.edge_points(edges[k]);
                        let qb = edge_average(a, b, ls, |p| (exact.u)(p, ls.side(p)));
                        v[3 + k] = qb - solution.edge[edges[k]];
                    }
                    let beta = (problem.beta_minus, problem.beta_plus);
                    local_energy(tri, &classes[t], basis, beta, rho, &v)
                }
            };
            [l2, h1, inf, energy]
        })
        .collect();

    let mut totals = [0.0f64; 4];
    for c in &per_element {
        totals[0] += c[0];
        totals[1] += c[1];
        totals[2] = totals[2].max(c[2]);
        totals[3] += c[3];
    }

    let (eb_inf, eb_mean_inf) = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let (a, b) = mesh.edge_points(e);
            let m = a.lerp(b, 0.5);
            let at_mid = (exact.u)(m, ls.side(m));
            let qb = edge_average(a, b, ls, |p| (exact.u)(p, ls.side(p)));
            let ub = solution.edge[e];
            ((at_mid - ub).abs(), (qb - ub).abs())
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));

    Ok(ErrorReport {
        n_per_side: mesh.n_per_side,
        dofs: mesh.wg_dofs(),
        h: mesh.h,
        e0_inf: totals[2],
        eb_inf,
        eb_mean_inf,
        e0_l2: totals[0].sqrt(),
        e0_h1: totals[1].sqrt(),
        energy: options.energy_penalty.map(|_| totals[3].sqrt()),
    })
}

/// Observed orders between two consecutive levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orders {
    pub e0_inf: f64,
    pub eb_inf: f64,
    pub e0_l2: f64,
    pub e0_h1: f64,
}

fn order(coarse: f64, fine: f64, h_ratio: f64) -> f64 {
    (coarse / fine).ln() / h_ratio.ln()
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)` for each norm.
///
/// Consecutive levels must refine by `N -> 2N` or, for odd ladders,
/// `N -> 2N - 1`.
pub fn convergence_orders(reports: &[ErrorReport]) -> Result<Vec<Orders>> {
    if reports.len() < 2 {
        return Err(Error::MismatchedLadder(format!(
            "need at least two levels, got {}",
            reports.len()
        )));
    }
    reports
        .windows(2)
        .map(|w| {
            let (c, f) = (&w[0], &w[1]);
            let (nc, nf) = (c.n_per_side, f.n_per_side);
            if nf != 2 * nc && nf + 1 != 2 * nc {
                return Err(Error::MismatchedLadder(format!("{nc} -> {nf}")));
            }
            if !(c.h > f.h && f.h > 0.0) {
                return Err(Error::MismatchedLadder(format!("mesh sizes {} -> {}", c.h, f.h)));
            }
            let r = c.h / f.h;
            Ok(Orders {
                e0_inf: order(c.e0_inf, f.e0_inf, r),
                eb_inf: order(c.eb_inf, f.eb_inf, r),
                e0_l2: order(c.e0_l2, f.e0_l2, r),
                e0_h1: order(c.e0_h1, f.e0_h1, r),
            })
        })
        .collect()
}
