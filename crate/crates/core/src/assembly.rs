//! Weak Galerkin discretization.
//!
//! A weak function is `v = {v0, vb}`: on every element `v0` is a combination
//! of the element's three nodal shape functions (P1 or IFE), and `vb` is one
//! constant per edge. The bilinear form is, element by element,
//!
//! ```text
//! A(u, v) = (beta grad u0, grad v0)_T
//!         - <Qb(beta grad u0 . n), Qb v0 - vb>_dT
//!         - <Qb(beta grad v0 . n), Qb u0 - ub>_dT
//!         + rho_T / h_T <Qb u0 - ub, Qb v0 - vb>_dT
//! ```
//!
//! where `rho_T` is `rho` or, by default, `rho * beta_T` (see
//! [`PenaltyScaling`]) and `ub = g` on the boundary (see [`BoundaryData`]).
//!
//! where `Qb` is the L2 projection onto constants on each edge. Local
//! unknowns are ordered `(u0 at A0, A1, A2, ub on local edges 0, 1, 2)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dense::Lu;
use crate::error::{Error, Result};
use crate::geometry::{bisect_segment, ElementClass, LevelSet, Side};
use crate::ife::{eval_linear, grad_linear, ElementBasis};
use crate::mesh::{signed_area, Point2, Rect, UniformMesh};
use crate::quadrature::{segment_mean, QuadRule};
use crate::sparse::CsrMatrix;

/// Penalty used in all benchmark runs.
pub const DEFAULT_RHO: f64 = 10.0;

/// How the stabilizer weight depends on the coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PenaltyScaling {
    /// `rho / h_T`. Coercive only for `rho` above a multiple of the largest
    /// coefficient; with `rho = 10` and high contrast the system is
    /// symmetric indefinite.
    Plain,
    /// `rho * beta_T / h_T`, with `beta_T` the largest coefficient present
    /// on the element. Coercive for every contrast once `rho` exceeds a
    /// mesh-dependent constant.
    #[default]
    Coefficient,
}

/// Boundary data imposed on boundary-edge unknowns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryData {
    /// `Qb g`, the edge mean.
    EdgeMean,
    /// `g` at the edge midpoint; the piecewise mean on edges the interface
    /// crosses, where `g` has a kink.
    #[default]
    Midpoint,
}

/// Discretization parameters. Converts from a bare `rho` with the default
/// scaling and boundary data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheme {
    pub rho: f64,
    pub scaling: PenaltyScaling,
    pub boundary: BoundaryData,
}

impl Scheme {
    pub fn new(rho: f64, scaling: PenaltyScaling, boundary: BoundaryData) -> Self {
        Self { rho, scaling, boundary }
    }

    fn check(&self) -> Result<()> {
        if self.rho > 0.0 && self.rho.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)))
        }
    }

    /// `rho` times the coefficient weight of one element.
    pub fn weight(&self, class: &ElementClass, beta: (f64, f64)) -> f64 {
        match self.scaling {
            PenaltyScaling::Plain => self.rho,
            PenaltyScaling::Coefficient => {
                self.rho
                    * match class {
                        ElementClass::Regular(s) => s.pick(beta.0, beta.1),
                        ElementClass::Cut(_) => beta.0.max(beta.1),
                    }
            }
        }
    }
}

impl From<f64> for Scheme {
    fn from(rho: f64) -> Self {
        Self::new(rho, PenaltyScaling::default(), BoundaryData::default())
    }
}

pub type SidedFn = Arc<dyn Fn(Point2, Side) -> f64 + Send + Sync>;
pub type SidedGrad = Arc<dyn Fn(Point2, Side) -> Point2 + Send + Sync>;
pub type PointFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: SidedFn,
    pub grad: SidedGrad,
}

/// Elliptic interface problem with piecewise constant coefficient.
#[derive(Clone)]
pub struct InterfaceProblem {
    pub name: String,
    pub domain: Rect,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub levelset: LevelSet,
    /// Source term, per side.
    pub source: SidedFn,
    /// Dirichlet data on the outer boundary.
    pub boundary: PointFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for InterfaceProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InterfaceProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("beta_minus", &self.beta_minus)
            .field("beta_plus", &self.beta_plus)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl InterfaceProblem {
    pub fn beta(&self, side: Side) -> f64 {
        side.pick(self.beta_minus, self.beta_plus)
    }

    pub fn source_at(&self, p: Point2) -> f64 {
        (self.source)(p, self.levelset.side(p))
    }

    pub fn exact_at(&self, p: Point2) -> Option<f64> {
        self.exact.as_ref().map(|e| (e.u)(p, self.levelset.side(p)))
    }

    /// Same problem with source and boundary data multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let source = self.source.clone();
        let boundary = self.boundary.clone();
        let mut out = self.clone();
        out.source = Arc::new(move |p, s| factor * source(p, s));
        out.boundary = Arc::new(move |p| factor * boundary(p));
        out.exact = self.exact.as_ref().map(|e| {
            let (u, g) = (e.u.clone(), e.grad.clone());
            ExactSolution {
                u: Arc::new(move |p, s| factor * u(p, s)),
                grad: Arc::new(move |p, s| g(p, s) * factor),
            }
        });
        out
    }
}

/// Mean of `f` over the segment `[a, b]`, splitting the segment where the
/// level set changes sign so each piece is integrated by a smooth rule.
pub fn edge_average(a: Point2, b: Point2, levelset: &LevelSet, f: impl Fn(Point2) -> f64) -> f64 {
    let (fa, fb) = (levelset.eval(a), levelset.eval(b));
    if fa * fb < 0.0 {
        let c = bisect_segment(a, b, fa, levelset);
        let (la, lb) = (a.dist(c), c.dist(b));
        (la * segment_mean(a, c, &f) + lb * segment_mean(c, b, &f)) / (la + lb)
    } else {
        segment_mean(a, b, f)
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_edges: usize,
    pub boundary_edges: Vec<usize>,
    pub is_boundary_edge: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &UniformMesh) -> Self {
        Self {
            n_elements: mesh.n_elements(),
            n_edges: mesh.n_edges(),
            boundary_edges: mesh.boundary_edges().collect(),
            is_boundary_edge: mesh.edges.iter().map(|e| e.boundary).collect(),
        }
    }

    /// First of the three interior unknowns of an element.
    pub fn interior_offset(&self, element: usize) -> usize {
        3 * element
    }

    pub fn edge_offset(&self, edge: usize) -> usize {
        3 * self.n_elements + edge
    }

    pub fn total_dofs(&self) -> usize {
        3 * self.n_elements + self.n_edges
    }

    pub fn element_dofs(&self, mesh: &UniformMesh, element: usize) -> [usize; 6] {
        let i = self.interior_offset(element);
        let e = mesh.triangle_edges[element];
        [
            i,
            i + 1,
            i + 2,
            self.edge_offset(e[0]),
            self.edge_offset(e[1]),
            self.edge_offset(e[2]),
        ]
    }
}

pub fn build_dof_map(mesh: &UniformMesh) -> DofMap {
    DofMap::new(mesh)
}

/// Which piece of a cut edge a value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgePiece {
    /// From the start of the edge to the breakpoint.
    First,
    /// From the breakpoint to the end of the edge.
    Second,
}

/// L2 projection onto constants of a function that is linear on the whole
/// edge, or on each side of `breakpoint`. `f(p, piece)` evaluates the piece
/// at a point of its closed segment.
pub fn qb_project_on_edge(
    a: Point2,
    b: Point2,
    breakpoint: Option<Point2>,
    f: impl Fn(Point2, EdgePiece) -> f64,
) -> Result<f64> {
    let len = a.dist(b);
    let Some(c) = breakpoint else {
        return Ok(0.5 * (f(a, EdgePiece::First) + f(b, EdgePiece::First)));
    };
    let ab = b - a;
    let t = (c - a).dot(ab) / ab.dot(ab);
    let off_line = (c - a).cross(ab).abs() / len;
    if !(0.0..=1.0).contains(&t) || off_line > 1e-10 * len {
        return Err(Error::InvalidConfig(format!(
            "breakpoint ({}, {}) is not on the edge",
            c.x, c.y
        )));
    }
    let first = 0.5 * (f(a, EdgePiece::First) + f(c, EdgePiece::First));
    let second = 0.5 * (f(c, EdgePiece::Second) + f(b, EdgePiece::Second));
    Ok(t * first + (1.0 - t) * second)
}

/// Segments of local edge `k` with the piece each lies on.
fn edge_segments(
    tri: &[Point2; 3],
    k: usize,
    class: &ElementClass,
    basis: &ElementBasis,
) -> (Option<Point2>, [Side; 2]) {
    let a = tri[k];
    let b = tri[(k + 1) % 3];
    match class {
        ElementClass::Regular(side) => (None, [*side, *side]),
        ElementClass::Cut(cut) => {
            let ab = b - a;
            let len = ab.norm();
            let breakpoint = [cut.d, cut.e].into_iter().find(|&c| {
                let t = (c - a).dot(ab) / ab.dot(ab);
                let off = (c - a).cross(ab).abs() / len;
                off <= 1e-12 * len && t > 1e-12 && t < 1.0 - 1e-12
            });
            let hint = cut.vertex_sides[k];
            match breakpoint {
                Some(c) => (
                    Some(c),
                    [
                        basis.side_of(a.lerp(c, 0.5), hint),
                        basis.side_of(c.lerp(b, 0.5), cut.vertex_sides[(k + 1) % 3]),
                    ],
                ),
                None => {
                    let s = basis.side_of(a.lerp(b, 0.5), hint);
                    (None, [s, s])
                }
            }
        }
    }
}

/// Per-edge data of one element: for every shape function, its edge average
/// `Qb phi_i` and the projected flux `Qb(beta grad phi_i . n)`.
struct EdgeTraces {
    length: f64,
    average: [f64; 3],
    flux: [f64; 3],
}

fn edge_traces(
    tri: &[Point2; 3],
    k: usize,
    class: &ElementClass,
    basis: &ElementBasis,
    beta: (f64, f64),
) -> EdgeTraces {
    let a = tri[k];
    let b = tri[(k + 1) % 3];
    let ab = b - a;
    let length = ab.norm();
    // Outward normal of a counter-clockwise triangle.
    let n = Point2::new(ab.y, -ab.x) * (1.0 / length);
    let (breakpoint, sides) = edge_segments(tri, k, class, basis);
    let side_of = |piece: EdgePiece| match piece {
        EdgePiece::First => sides[0],
        EdgePiece::Second => sides[1],
    };
    let beta_of = |s: Side| s.pick(beta.0, beta.1);
    let average = std::array::from_fn(|i| {
        qb_project_on_edge(a, b, breakpoint, |p, piece| {
            eval_linear(&basis.piece(side_of(piece))[i], p)
        })
        .expect("breakpoint lies on its edge")
    });
    let flux = std::array::from_fn(|i| {
        qb_project_on_edge(a, b, breakpoint, |_, piece| {
            let s = side_of(piece);
            beta_of(s) * grad_linear(&basis.piece(s)[i]).dot(n)
        })
        .expect("breakpoint lies on its edge")
    });
    EdgeTraces {
        length,
        average,
        flux,
    }
}

pub type LocalMatrix = [[f64; 6]; 6];

/// `(beta grad phi_j, grad phi_i)_T`; gradients are constant on each piece,
/// so cut elements only need the sub-polygon areas.
pub fn volume_block(
    tri: [Point2; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    beta: (f64, f64),
) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    let mut add = |side: Side, area: f64| {
        let w = side.pick(beta.0, beta.1) * area;
        let g = basis.piece(side).map(|c| grad_linear(&c));
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * g[i].dot(g[j]);
            }
        }
    };
    match class {
        ElementClass::Regular(side) => add(*side, signed_area(tri[0], tri[1], tri[2])),
        ElementClass::Cut(cut) => {
            add(Side::Minus, cut.sub_minus.area());
            add(Side::Plus, cut.sub_plus.area());
        }
    }
    m
}

/// Element matrix over `(3 interior, 3 edge)` unknowns.
pub fn local_matrix(
    tri: [Point2; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    beta: (f64, f64),
    scheme: impl Into<Scheme>,
) -> LocalMatrix {
    let mut m = [[0.0; 6]; 6];
    let vol = volume_block(tri, class, basis, beta);
    for i in 0..3 {
        m[i][..3].copy_from_slice(&vol[i]);
    }

    let h_t = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let penalty = scheme.into().weight(class, beta) / h_t;
    for k in 0..3 {
        let tr = edge_traces(&tri, k, class, basis, beta);
        // q = Qb v0 - vb and f = Qb(beta grad v0 . n) as row vectors.
        let mut q = [0.0; 6];
        let mut f = [0.0; 6];
        q[..3].copy_from_slice(&tr.average);
        q[3 + k] = -1.0;
        f[..3].copy_from_slice(&tr.flux);
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += tr.length * (penalty * q[i] * q[j] - f[i] * q[j] - q[i] * f[j]);
            }
        }
    }
    m
}

/// Squared local energy norm
/// `(beta grad v0, grad v0)_T + rho / h_T ||Qb v0 - vb||^2_dT` of the weak
/// function with local unknowns `v`.
pub fn local_energy(
    tri: [Point2; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    beta: (f64, f64),
    scheme: impl Into<Scheme>,
    v: &[f64; 6],
) -> f64 {
    let vol = volume_block(tri, class, basis, beta);
    let mut e = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            e += v[i] * vol[i][j] * v[j];
        }
    }
    let h_t = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let rho = scheme.into().weight(class, beta);
    for k in 0..3 {
        let tr = edge_traces(&tri, k, class, basis, beta);
        let jump: f64 = (0..3).map(|i| tr.average[i] * v[i]).sum::<f64>() - v[3 + k];
        e += rho / h_t * tr.length * jump * jump;
    }
    e
}

/// `(f, phi_i)_T` by the degree-2 rule, per sub-polygon on cut elements.
pub fn local_load(
    tri: [Point2; 3],
    class: &ElementClass,
    basis: &ElementBasis,
    problem: &InterfaceProblem,
) -> [f64; 3] {
    let rule = QuadRule::triangle(2).expect("degree 2 rule");
    let mut out = [0.0; 3];
    let mut add = |t: [Point2; 3], side: Side| {
        let piece = basis.piece(side);
        for (p, w) in rule.map(t[0], t[1], t[2]) {
            let f = problem.source_at(p);
            for i in 0..3 {
                out[i] += w * f * eval_linear(&piece[i], p);
            }
        }
    };
    match class {
        ElementClass::Regular(side) => add(tri, *side),
        ElementClass::Cut(cut) => {
            for side in [Side::Minus, Side::Plus] {
                for t in cut.sub_polygon(side).fan() {
                    add(t, side);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub matrix: LocalMatrix,
    pub load: [f64; 3],
}

pub fn local_systems(
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    problem: &InterfaceProblem,
    scheme: impl Into<Scheme>,
) -> Vec<LocalSystem> {
    let scheme = scheme.into();
    let beta = (problem.beta_minus, problem.beta_plus);
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.vertices(t);
            LocalSystem {
                matrix: local_matrix(tri, &classes[t], &bases[t], beta, scheme),
                load: local_load(tri, &classes[t], &bases[t], problem),
            }
        })
        .collect()
}

/// Boundary data on every boundary edge, in `DofMap::boundary_edges` order.
pub fn boundary_values(
    mesh: &UniformMesh,
    dofs: &DofMap,
    problem: &InterfaceProblem,
    boundary: BoundaryData,
) -> Vec<f64> {
    dofs.boundary_edges
        .iter()
        .map(|&e| {
            let (a, b) = mesh.edge_points(e);
            if boundary == BoundaryData::Midpoint && problem.levelset.eval(a) * problem.levelset.eval(b) >= 0.0 {
                return (problem.boundary)(a.lerp(b, 0.5));
            }
            edge_average(a, b, &problem.levelset, |p| (problem.boundary)(p))
        })
        .collect()
}

/// Global system before and after Dirichlet elimination.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub dofs: DofMap,
    /// All unknowns, no boundary conditions applied.
    pub full_matrix: CsrMatrix,
    pub full_load: Vec<f64>,
    /// Values imposed on boundary-edge unknowns.
    pub boundary_values: Vec<f64>,
    /// Full index of every reduced unknown.
    pub free: Vec<usize>,
    /// Symmetric positive definite system in the free unknowns.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl AssembledSystem {
    /// Full solution vector from the free unknowns.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dofs.total_dofs()];
        for (&i, &v) in self.free.iter().zip(reduced) {
            x[i] = v;
        }
        for (&e, &g) in self.dofs.boundary_edges.iter().zip(&self.boundary_values) {
            x[self.dofs.edge_offset(e)] = g;
        }
        x
    }
}

/// Removes the constrained unknowns from `(matrix, load)`, moving their
/// contribution to the right-hand side. Returns the reduced system and the
/// full index of each free unknown.
fn eliminate(
    matrix: &CsrMatrix,
    load: &[f64],
    constrained: &[(usize, f64)],
) -> (CsrMatrix, Vec<f64>, Vec<usize>) {
    let n = matrix.n;
    let mut value = vec![None; n];
    for &(i, g) in constrained {
        value[i] = Some(g);
    }
    let free: Vec<usize> = (0..n).filter(|&i| value[i].is_none()).collect();
    let mut reduced_index = vec![usize::MAX; n];
    for (r, &i) in free.iter().enumerate() {
        reduced_index[i] = r;
    }
    let mut triplets = Vec::with_capacity(matrix.nnz());
    let mut rhs = Vec::with_capacity(free.len());
    for (r, &i) in free.iter().enumerate() {
        let mut b = load[i];
        for (j, v) in matrix.row(i) {
            match value[j] {
                Some(g) => b -= v * g,
                None => triplets.push((r, reduced_index[j], v)),
            }
        }
        rhs.push(b);
    }
    (CsrMatrix::from_triplets(free.len(), triplets), rhs, free)
}

/// Assembles the global system and imposes the boundary data on boundary
/// edges by symmetric elimination.
pub fn assemble(
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    problem: &InterfaceProblem,
    scheme: impl Into<Scheme>,
) -> Result<AssembledSystem> {
    let scheme = scheme.into();
    scheme.check()?;
    let dofs = DofMap::new(mesh);
    let locals = local_systems(mesh, classes, bases, problem, scheme);

    let mut triplets = Vec::with_capacity(36 * mesh.n_elements());
    let mut load = vec![0.0; dofs.total_dofs()];
    for (t, local) in locals.iter().enumerate() {
        let ids = dofs.element_dofs(mesh, t);
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((ids[i], ids[j], local.matrix[i][j]));
            }
        }
        for i in 0..3 {
            load[ids[i]] += local.load[i];
        }
    }
    let full_matrix = CsrMatrix::from_triplets(dofs.total_dofs(), triplets);

    let boundary_values = boundary_values(mesh, &dofs, problem, scheme.boundary);
    let constrained: Vec<(usize, f64)> = dofs
        .boundary_edges
        .iter()
        .zip(&boundary_values)
        .map(|(&e, &g)| (dofs.edge_offset(e), g))
        .collect();
    let (matrix, rhs, free) = eliminate(&full_matrix, &load, &constrained);
    Ok(AssembledSystem {
        dofs,
        full_matrix,
        full_load: load,
        boundary_values,
        free,
        matrix,
        rhs,
    })
}

/// System in the edge unknowns only, the interior unknowns of each element
/// eliminated locally.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub dofs: DofMap,
    pub boundary_values: Vec<f64>,
    /// Edge index of every reduced unknown.
    pub free_edges: Vec<usize>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    locals: Vec<LocalSystem>,
    triangle_edges: Vec<[usize; 3]>,
}

impl CondensedSystem {
    /// Full solution vector (interior and edge unknowns) from the solved
    /// free edge values.
    pub fn recover(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        let mut edge = vec![0.0; self.dofs.n_edges];
        for (&e, &v) in self.free_edges.iter().zip(reduced) {
            edge[e] = v;
        }
        for (&e, &g) in self.dofs.boundary_edges.iter().zip(&self.boundary_values) {
            edge[e] = g;
        }
        let mut x = vec![0.0; self.dofs.total_dofs()];
        for (t, local) in self.locals.iter().enumerate() {
            let ub = self.triangle_edges[t].map(|e| edge[e]);
            let (lu, _) = interior_block(&local.matrix, t)?;
            let mut b = local.load;
            for i in 0..3 {
                for k in 0..3 {
                    b[i] -= local.matrix[i][3 + k] * ub[k];
                }
            }
            let ui = lu.solve(&b);
            x[3 * t..3 * t + 3].copy_from_slice(&ui);
        }
        for (e, v) in edge.into_iter().enumerate() {
            x[self.dofs.edge_offset(e)] = v;
        }
        Ok(x)
    }
}

fn interior_block(m: &LocalMatrix, element: usize) -> Result<(Lu<3>, [[f64; 3]; 3])> {
    let a: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j]));
    let lu = Lu::factor(a).ok_or(Error::SingularSystem {
        element,
        condition: f64::INFINITY,
    })?;
    Ok((lu, a))
}

/// Static condensation of [`assemble`]: the same discrete solution,
/// obtained from a smaller system in the edge unknowns.
pub fn assemble_condensed(
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    problem: &InterfaceProblem,
    scheme: impl Into<Scheme>,
) -> Result<CondensedSystem> {
    let scheme = scheme.into();
    scheme.check()?;
    let dofs = DofMap::new(mesh);
    let locals = local_systems(mesh, classes, bases, problem, scheme);

    let schur: Vec<([[f64; 3]; 3], [f64; 3])> = locals
        .par_iter()
        .enumerate()
        .map(|(t, local)| {
            let (lu, _) = interior_block(&local.matrix, t)?;
            let m = &local.matrix;
            // inv(A_ii) A_ib, column by column, and inv(A_ii) f_i.
            let cols: [[f64; 3]; 3] = std::array::from_fn(|k| lu.solve(&[m[0][3 + k], m[1][3 + k], m[2][3 + k]]));
            let w = lu.solve(&local.load);
            let s = std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    m[3 + a][3 + b] - (0..3).map(|i| m[3 + a][i] * cols[b][i]).sum::<f64>()
                })
            });
            let g = std::array::from_fn(|a| -(0..3).map(|i| m[3 + a][i] * w[i]).sum::<f64>());
            Ok((s, g))
        })
        .collect::<Result<_>>()?;

    let mut triplets = Vec::with_capacity(9 * mesh.n_elements());
    let mut load = vec![0.0; mesh.n_edges()];
    for (t, (s, g)) in schur.iter().enumerate() {
        let e = mesh.triangle_edges[t];
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((e[a], e[b], s[a][b]));
            }
            load[e[a]] += g[a];
        }
    }
    let edge_matrix = CsrMatrix::from_triplets(mesh.n_edges(), triplets);
    let boundary_values = boundary_values(mesh, &dofs, problem, scheme.boundary);
    let constrained: Vec<(usize, f64)> = dofs
        .boundary_edges
        .iter()
        .copied()
        .zip(boundary_values.iter().copied())
        .collect();
    let (matrix, rhs, free_edges) = eliminate(&edge_matrix, &load, &constrained);
    Ok(CondensedSystem {
        dofs,
        boundary_values,
        free_edges,
        matrix,
        rhs,
        locals,
        triangle_edges: mesh.triangle_edges.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ife::P1Basis;

    #[test]
    fn dof_map_counts() {
        let m = UniformMesh::build(Rect::new(0.0, 1.0, 0.0, 1.0), 1).unwrap();
        let d = build_dof_map(&m);
        assert_eq!(d.total_dofs(), 11);
        let m = UniformMesh::build(Rect::symmetric_unit(), 16).unwrap();
        let d = build_dof_map(&m);
        assert_eq!(d.total_dofs(), 2336);
        assert_eq!(d.boundary_edges.len(), 64);
        assert_eq!(d.edge_offset(0), 3 * 512);
    }

    #[test]
    fn edge_projection_examples() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let lin = qb_project_on_edge(a, b, None, |p, _| 2.0 * p.x).unwrap();
        assert!((lin - 1.0).abs() < 1e-15);
        assert_eq!(qb_project_on_edge(a, b, None, |_, _| 5.0).unwrap(), 5.0);
        let split = qb_project_on_edge(a, b, Some(Point2::new(0.3, 0.0)), |_, piece| match piece {
            EdgePiece::First => 1.0,
            EdgePiece::Second => 4.0,
        })
        .unwrap();
        assert!((split - 3.1).abs() < 1e-15);
        assert!(qb_project_on_edge(a, b, Some(Point2::new(1.5, 0.0)), |_, _| 0.0).is_err());
        assert!(qb_project_on_edge(a, b, Some(Point2::new(0.5, 0.2)), |_, _| 0.0).is_err());
    }

    #[test]
    fn regular_volume_block_is_p1_stiffness() {
        let tri = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let class = ElementClass::Regular(Side::Plus);
        let basis = ElementBasis::P1(P1Basis::new(tri));
        let vol = volume_block(tri, &class, &basis, (1.0, 1.0));
        let stiffness = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((vol[i][j] - stiffness[i][j]).abs() < 1e-15);
            }
        }
        let m = local_matrix(tri, &class, &basis, (1.0, 1.0), 10.0);
        // Constants lie in the kernel.
        for row in &m {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
        for i in 0..6 {
            for j in 0..6 {
                assert!((m[i][j] - m[j][i]).abs() < 1e-14);
            }
        }
    }
}
