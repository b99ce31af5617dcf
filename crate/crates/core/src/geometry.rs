//! Level-set interfaces and their intersection with the mesh.
//!
//! Sign convention: `Omega- = {phi < 0}`, `Omega+ = {phi > 0}`. Mesh
//! vertices with `phi == 0` exactly are counted on the `+` side; the cut
//! points then snap onto them and degenerate slivers are dropped.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{signed_area, Point2, UniformMesh};
use crate::quadrature::Polygon;

/// Samples per edge (endpoints included) for the multiple-crossing check.
pub const EDGE_SAMPLES: usize = 17;
/// Cut points closer than `SNAP_FRACTION * h` to a vertex are moved onto it.
pub const SNAP_FRACTION: f64 = 1e-8;
/// Sub-polygons smaller than this fraction of the element are dropped.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;
/// Parametric bisection tolerance along an edge.
pub const ROOT_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// Side of a level-set value; zero counts as `Plus`.
    pub fn of(phi: f64) -> Self {
        if phi < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn pick<T>(self, minus: T, plus: T) -> T {
        match self {
            Side::Minus => minus,
            Side::Plus => plus,
        }
    }
}

#[derive(Clone)]
pub struct LevelSet {
    phi: Arc<dyn Fn(Point2) -> f64 + Send + Sync>,
}

impl LevelSet {
    pub fn new(phi: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        Self { phi: Arc::new(phi) }
    }

    pub fn eval(&self, p: Point2) -> f64 {
        (self.phi)(p)
    }

    pub fn side(&self, p: Point2) -> Side {
        Side::of(self.eval(p))
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LevelSet")
    }
}

/// Geometry of an element crossed by the interface.
#[derive(Clone, Debug)]
pub struct CutGeometry {
    pub d: Point2,
    pub e: Point2,
    /// Global edges carrying `d` and `e`.
    pub cut_edges: [usize; 2],
    /// Unit normal of the chord `DE`, pointing from `T-` into `T+`.
    pub normal: Point2,
    pub sub_minus: Polygon,
    pub sub_plus: Polygon,
    /// Piece used for the nodal condition at each vertex.
    pub vertex_sides: [Side; 3],
}

impl CutGeometry {
    pub fn sub_polygon(&self, side: Side) -> &Polygon {
        side.pick(&self.sub_minus, &self.sub_plus)
    }

    /// Signed distance from the chord line, positive on the `+` side.
    pub fn chord_distance(&self, p: Point2) -> f64 {
        (p - self.d).dot(self.normal)
    }
}

#[derive(Clone, Debug)]
pub enum ElementClass {
    Regular(Side),
    Cut(CutGeometry),
}

impl ElementClass {
    pub fn is_cut(&self) -> bool {
        matches!(self, ElementClass::Cut(_))
    }

    pub fn cut(&self) -> Option<&CutGeometry> {
        match self {
            ElementClass::Cut(c) => Some(c),
            ElementClass::Regular(_) => None,
        }
    }
}

pub fn count_cut(classes: &[ElementClass]) -> usize {
    classes.iter().filter(|c| c.is_cut()).count()
}

/// Root of the level set on the segment `pq` by bisection.
pub fn edge_intersection(p: Point2, q: Point2, levelset: &LevelSet) -> Result<Point2> {
    let fp = levelset.eval(p);
    let fq = levelset.eval(q);
    if !(fp * fq < 0.0) {
        return Err(Error::NoBracket {
            px: p.x,
            py: p.y,
            qx: q.x,
            qy: q.y,
        });
    }
    Ok(bisect_segment(p, q, fp, levelset))
}

/// Bisection for the sign change of the level set on `pq`, given
/// `fp = phi(p)`; the caller guarantees `phi(p) * phi(q) < 0`.
pub fn bisect_segment(p: Point2, q: Point2, fp: f64, levelset: &LevelSet) -> Point2 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let lo_negative = fp < 0.0;
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f = levelset.eval(p.lerp(q, mid));
        if f == 0.0 {
            return p.lerp(q, mid);
        }
        if (f < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    p.lerp(q, 0.5 * (lo + hi))
}

/// Result of cutting a triangle along a chord before degeneracy checks.
struct Split {
    minus: Polygon,
    plus: Polygon,
}

#[derive(Clone, Copy, PartialEq)]
enum Tag {
    Vertex(usize),
    Chord,
}

/// Position of `p` on the triangle boundary as `k + t` for a point at
/// parameter `t` of local edge `k`, plus its distance to that edge.
fn perimeter_coordinate(tri: &[Point2; 3], p: Point2) -> (f64, f64) {
    (0..3)
        .map(|k| {
            let a = tri[k];
            let ab = tri[(k + 1) % 3] - a;
            let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            (k as f64 + t, a.lerp(tri[(k + 1) % 3], t).dist(p))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three edges")
}

fn split_raw(tri: [Point2; 3], d: Point2, e: Point2, levelset: &LevelSet) -> Result<Split> {
    let scale = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let on_vertex_tol = 1e-12 * scale;

    // Boundary ring ordered by perimeter coordinate, chord ends inserted.
    let mut ring: Vec<(f64, Point2, Tag)> = Vec::with_capacity(5);
    let mut vertex_taken = [false; 3];
    let mut chord_s = [0.0; 2];
    for (slot, c) in [d, e].into_iter().enumerate() {
        if let Some(k) = (0..3).find(|&k| tri[k].dist(c) <= on_vertex_tol) {
            if vertex_taken[k] {
                return Err(Error::DegenerateCut("chord ends coincide".into()));
            }
            vertex_taken[k] = true;
            chord_s[slot] = k as f64;
            ring.push((k as f64, tri[k], Tag::Chord));
        } else {
            let (s, _) = perimeter_coordinate(&tri, c);
            chord_s[slot] = s;
            ring.push((s, c, Tag::Chord));
        }
    }
    let interior_edge = |s: f64| (s.fract() > 0.0).then(|| s.floor() as usize);
    if let (Some(a), Some(b)) = (interior_edge(chord_s[0]), interior_edge(chord_s[1])) {
        if a == b {
            return Err(Error::DegenerateCut("both chord ends on one edge".into()));
        }
    }
    for k in 0..3 {
        if !vertex_taken[k] {
            ring.push((k as f64, tri[k], Tag::Vertex(k)));
        }
    }
    ring.sort_by(|a, b| a.0.total_cmp(&b.0));

    let chord_pos: Vec<usize> = ring
        .iter()
        .enumerate()
        .filter(|(_, r)| r.2 == Tag::Chord)
        .map(|(i, _)| i)
        .collect();
    let (i0, i1) = (chord_pos[0], chord_pos[1]);
    let n = ring.len();
    let chain = |from: usize, to: usize| -> (Polygon, Option<Side>) {
        let mut pts = Vec::with_capacity(n);
        let mut strongest: Option<f64> = None;
        let mut i = from;
        loop {
            let (_, p, tag) = ring[i];
            pts.push(p);
            if let Tag::Vertex(k) = tag {
                let f = levelset.eval(tri[k]);
                if strongest.is_none_or(|s| f.abs() > s.abs()) {
                    strongest = Some(f);
                }
            }
            if i == to {
                break;
            }
            i = (i + 1) % n;
        }
        (Polygon::new(pts), strongest.map(Side::of))
    };
    let (p1, l1) = chain(i0, i1);
    let (p2, l2) = chain(i1, i0);
    match (l1, l2) {
        (Some(Side::Minus), Some(Side::Plus)) => Ok(Split { minus: p1, plus: p2 }),
        (Some(Side::Plus), Some(Side::Minus)) => Ok(Split { minus: p2, plus: p1 }),
        _ => Err(Error::DegenerateCut(
            "chord does not separate vertices of opposite sign".into(),
        )),
    }
}

fn chord_normal(d: Point2, e: Point2, plus: &Polygon) -> Point2 {
    let t = e - d;
    let mut n = t.perp() * (1.0 / t.norm());
    if (plus.centroid() - d).dot(n) < 0.0 {
        n = -n;
    }
    n
}

/// Splits a triangle along the chord `DE` into its `-` and `+` parts.
///
/// Returns the two counter-clockwise sub-polygons and the unit chord normal
/// pointing from the `-` part into the `+` part.
pub fn split_by_chord(
    tri: [Point2; 3],
    d: Point2,
    e: Point2,
    levelset: &LevelSet,
) -> Result<(Polygon, Polygon, Point2)> {
    let split = split_raw(tri, d, e, levelset)?;
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    for p in [&split.minus, &split.plus] {
        if p.vertices.len() < 3 || p.area() < DEGENERATE_AREA_FRACTION * area {
            return Err(Error::DegenerateCut(format!(
                "sub-polygon area {:.3e} of element area {area:.3e}",
                p.area()
            )));
        }
    }
    let n = chord_normal(d, e, &split.plus);
    Ok((split.minus, split.plus, n))
}

/// Counts strict sign changes of the level set along an edge.
fn sign_changes(p: Point2, q: Point2, fp: f64, fq: f64, levelset: &LevelSet) -> usize {
    let mut changes = 0;
    let mut last = if fp != 0.0 { Some(fp > 0.0) } else { None };
    for i in 1..EDGE_SAMPLES {
        let f = if i == EDGE_SAMPLES - 1 {
            fq
        } else {
            levelset.eval(p.lerp(q, i as f64 / (EDGE_SAMPLES - 1) as f64))
        };
        if f == 0.0 {
            continue;
        }
        let s = f > 0.0;
        if let Some(l) = last {
            if l != s {
                changes += 1;
            }
        }
        last = Some(s);
    }
    changes
}

/// What to do with an edge the sampled check finds crossed more than once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MultipleCrossings {
    /// Fail with `HypothesisViolation`.
    #[default]
    Reject,
    /// Classify by the signs at the edge's end points, as if the extra
    /// crossings were absent, and report the edge.
    EndpointSigns,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub classes: Vec<ElementClass>,
    /// Edges crossed more than once, kept under
    /// [`MultipleCrossings::EndpointSigns`].
    pub tolerated_edges: Vec<usize>,
}

/// Tags every element as regular (with its side) or cut (with chord
/// geometry), in element order.
pub fn classify_elements(mesh: &UniformMesh, levelset: &LevelSet) -> Result<Vec<ElementClass>> {
    classify_elements_with(mesh, levelset, MultipleCrossings::Reject).map(|c| c.classes)
}

pub fn classify_elements_with(
    mesh: &UniformMesh,
    levelset: &LevelSet,
    policy: MultipleCrossings,
) -> Result<Classification> {
    let node_phi: Vec<f64> = mesh.nodes.par_iter().map(|&p| levelset.eval(p)).collect();

    let crossings: Vec<usize> = mesh
        .edges
        .par_iter()
        .map(|edge| {
            let [a, b] = edge.nodes;
            sign_changes(mesh.nodes[a], mesh.nodes[b], node_phi[a], node_phi[b], levelset)
        })
        .collect();
    let tolerated_edges: Vec<usize> = (0..crossings.len()).filter(|&i| crossings[i] > 1).collect();
    if let (MultipleCrossings::Reject, Some(&i)) = (policy, tolerated_edges.first()) {
        return Err(Error::HypothesisViolation {
            edge: i,
            reason: format!("interface crosses the edge {} times", crossings[i]),
        });
    }

    let classes = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| classify_one(mesh, t, &node_phi, levelset))
        .collect::<Result<_>>()?;
    Ok(Classification {
        classes,
        tolerated_edges,
    })
}

fn classify_one(
    mesh: &UniformMesh,
    element: usize,
    node_phi: &[f64],
    levelset: &LevelSet,
) -> Result<ElementClass> {
    let tri = mesh.vertices(element);
    let ids = mesh.triangles[element];
    let phi = ids.map(|n| node_phi[n]);
    let sides = phi.map(Side::of);
    if sides[0] == sides[1] && sides[1] == sides[2] {
        return Ok(ElementClass::Regular(sides[0]));
    }

    // The vertex alone on its side; the chord crosses the two edges
    // meeting there.
    let lone = (0..3)
        .find(|&k| sides[k] != sides[(k + 1) % 3] && sides[k] != sides[(k + 2) % 3])
        .expect("mixed signs leave one vertex alone");
    let next = (lone + 1) % 3;
    let prev = (lone + 2) % 3;
    let snap_tol = SNAP_FRACTION * mesh.h;

    let crossing = |a: usize, b: usize| -> Point2 {
        let (p, q) = (tri[a], tri[b]);
        let r = if phi[a] == 0.0 {
            p
        } else if phi[b] == 0.0 {
            q
        } else {
            bisect_segment(p, q, phi[a], levelset)
        };
        if r.dist(p) < snap_tol {
            p
        } else if r.dist(q) < snap_tol {
            q
        } else {
            r
        }
    };
    let d = crossing(lone, next);
    let e = crossing(prev, lone);
    let cut_edges = [
        mesh.triangle_edges[element][lone],
        mesh.triangle_edges[element][prev],
    ];

    let area = mesh.area(element);
    let split = match split_raw(tri, d, e, levelset) {
        Ok(s) => s,
        Err(Error::DegenerateCut(_)) => {
            return Ok(ElementClass::Regular(majority(&tri, d, e, &sides, lone)));
        }
        Err(err) => return Err(err),
    };
    let small = |p: &Polygon| p.vertices.len() < 3 || p.area() < DEGENERATE_AREA_FRACTION * area;
    match (small(&split.minus), small(&split.plus)) {
        (false, false) => {}
        (true, false) => return Ok(ElementClass::Regular(Side::Plus)),
        (false, true) => return Ok(ElementClass::Regular(Side::Minus)),
        (true, true) => return Ok(ElementClass::Regular(majority(&tri, d, e, &sides, lone))),
    }

    let normal = chord_normal(d, e, &split.plus);
    let mut vertex_sides = sides;
    for (k, side) in vertex_sides.iter_mut().enumerate() {
        // A vertex strictly inside one sub-polygon takes that piece; a
        // vertex the chord snapped onto keeps the side of its sign.
        let dist = (tri[k] - d).dot(normal);
        if dist.abs() > snap_tol {
            *side = if dist > 0.0 { Side::Plus } else { Side::Minus };
        }
    }
    Ok(ElementClass::Cut(CutGeometry {
        d,
        e,
        cut_edges,
        normal,
        sub_minus: split.minus,
        sub_plus: split.plus,
        vertex_sides,
    }))
}

fn majority(tri: &[Point2; 3], d: Point2, e: Point2, sides: &[Side; 3], lone: usize) -> Side {
    let lone_area = signed_area(tri[lone], d, e).abs();
    let total = signed_area(tri[0], tri[1], tri[2]).abs();
    if lone_area > 0.5 * total {
        sides[lone]
    } else {
        sides[lone].opposite()
    }
}
