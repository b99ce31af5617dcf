//! Uniform Cartesian triangulation of a rectangle.
//!
//! The rectangle is split into `N x N` congruent cells and every cell is cut
//! along its top-left to bottom-right diagonal. Numbering is fixed:
//!
//! * nodes are row-major, `node(i, j) = j * (N + 1) + i` with `i` along x;
//! * cell `c = j * N + i` owns triangles `2c` (lower) and `2c + 1` (upper);
//! * edges are numbered in order of first appearance when sweeping the
//!   triangles in order, local edges `0, 1, 2` of each.
//!
//! Local edge `k` of a triangle joins its vertices `k` and `(k + 1) % 3`.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Signed area of the triangle `(a, b, c)`, positive when counter-clockwise.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    /// The square `(-1, 1)^2` used by all benchmark problems.
    pub const fn symmetric_unit() -> Self {
        Self::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub nodes: [usize; 2],
    /// First incident triangle (the one that created the edge in the sweep).
    pub first: usize,
    /// Second incident triangle, `None` on the domain boundary.
    pub second: Option<usize>,
    pub boundary: bool,
}

impl Edge {
    pub fn incident(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

#[derive(Clone, Debug)]
pub struct UniformMesh {
    pub domain: Rect,
    pub n_per_side: usize,
    pub nodes: Vec<Point2>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Global edge index of local edge `k` for every triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Largest element diameter.
    pub h: f64,
}

impl UniformMesh {
    pub fn build(domain: Rect, n_per_side: usize) -> Result<Self> {
        if n_per_side == 0 {
            return Err(Error::InvalidMesh("n_per_side must be at least 1".into()));
        }
        let finite = [domain.xmin, domain.xmax, domain.ymin, domain.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || domain.xmin >= domain.xmax || domain.ymin >= domain.ymax {
            return Err(Error::InvalidMesh(format!("degenerate rectangle {domain:?}")));
        }

        let n = n_per_side;
        let dx = (domain.xmax - domain.xmin) / n as f64;
        let dy = (domain.ymax - domain.ymin) / n as f64;

        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                // Pin the last row/column to the exact boundary coordinate.
                let x = if i == n { domain.xmax } else { domain.xmin + i as f64 * dx };
                let y = if j == n { domain.ymax } else { domain.ymin + j as f64 * dy };
                nodes.push(Point2::new(x, y));
            }
        }

        let node = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let bl = node(i, j);
                let br = node(i + 1, j);
                let tl = node(i, j + 1);
                let tr = node(i + 1, j + 1);
                triangles.push([bl, br, tl]);
                triangles.push([br, tr, tl]);
            }
        }

        let n_edges = 2 * n * (n + 1) + n * n;
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(n_edges);
        let mut edges: Vec<Edge> = Vec::with_capacity(n_edges);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *slot = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        nodes: [a, b],
                        first: t,
                        second: None,
                        boundary: true,
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[*slot];
                if edge.first != t {
                    edge.second = Some(t);
                    edge.boundary = false;
                }
            }
            triangle_edges.push(local);
        }

        let mut mesh = Self {
            domain,
            n_per_side: n,
            nodes,
            triangles,
            triangle_edges,
            edges,
            h: 0.0,
        };
        mesh.h = (0..mesh.n_elements())
            .map(|t| mesh.diameter_unchecked(t))
            .fold(0.0, f64::max);
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn vertices(&self, element: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[element];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn edge_points(&self, edge: usize) -> (Point2, Point2) {
        let [a, b] = self.edges[edge].nodes;
        (self.nodes[a], self.nodes[b])
    }

    pub fn area(&self, element: usize) -> f64 {
        let [a, b, c] = self.vertices(element);
        signed_area(a, b, c)
    }

    /// Longest edge of the triangle.
    pub fn element_diameter(&self, element: usize) -> Result<f64> {
        if element >= self.n_elements() {
            return Err(Error::IndexOutOfRange {
                index: element,
                len: self.n_elements(),
            });
        }
        Ok(self.diameter_unchecked(element))
    }

    fn diameter_unchecked(&self, element: usize) -> f64 {
        let [a, b, c] = self.vertices(element);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    /// Number of weak Galerkin unknowns: three interior nodal values per
    /// element plus one constant per edge.
    pub fn wg_dofs(&self) -> usize {
        3 * self.n_elements() + self.n_edges()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.boundary)
            .map(|(i, _)| i)
    }
}
