//! Symmetric Gauss rules on triangles, Gauss-Legendre rules on segments, and
//! integration over convex sub-polygons of cut elements.

use crate::error::{Error, Result};
use crate::mesh::{signed_area, Point2};

/// Quadrature rule on the reference triangle.
///
/// Points are barycentric; weights sum to one and are scaled by the physical
/// area at use.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadRule {
    /// Symmetric rule exact for polynomials up to `degree` (1, 2, 4 or 6).
    pub fn triangle(degree: u32) -> Result<Self> {
        let mut rule = Self {
            points: Vec::new(),
            weights: Vec::new(),
            degree,
        };
        match degree {
            1 => rule.push_s3(1.0),
            2 => rule.push_s21(1.0 / 6.0, 1.0 / 3.0),
            4 => {
                rule.push_s21(0.445_948_490_915_965, 0.223_381_589_678_011);
                rule.push_s21(0.091_576_213_509_771, 0.109_951_743_655_322);
            }
            6 => {
                rule.push_s21(0.249_286_745_170_910, 0.116_786_275_726_379);
                rule.push_s21(0.063_089_014_491_502, 0.050_844_906_370_207);
                rule.push_s111(
                    0.053_145_049_844_817,
                    0.310_352_451_033_784,
                    0.082_851_075_618_374,
                );
            }
            _ => return Err(Error::UnsupportedDegree(degree)),
        }
        Ok(rule)
    }

    fn push_s3(&mut self, w: f64) {
        let t = 1.0 / 3.0;
        self.points.push([t, t, t]);
        self.weights.push(w);
    }

    // Orbit of (1 - 2a, a, a).
    fn push_s21(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    // Orbit of (a, b, 1 - a - b), all six permutations.
    fn push_s111(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on the triangle `(a, b, c)`.
    pub fn map<'a>(
        &'a self,
        a: Point2,
        b: Point2,
        c: Point2,
    ) -> impl Iterator<Item = (Point2, f64)> + 'a {
        let area = signed_area(a, b, c).abs();
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            (
                Point2::new(
                    l[0] * a.x + l[1] * b.x + l[2] * c.x,
                    l[0] * a.y + l[1] * b.y + l[2] * c.y,
                ),
                w * area,
            )
        })
    }

    pub fn integrate_triangle(&self, tri: [Point2; 3], f: impl Fn(Point2) -> f64) -> f64 {
        self.map(tri[0], tri[1], tri[2]).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Three-point Gauss rule on `[0, 1]` (exact for degree 5).
pub const GAUSS3_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Mean of `f` over the segment `[a, b]` by the 3-point Gauss rule.
pub fn segment_mean(a: Point2, b: Point2, f: impl Fn(Point2) -> f64) -> f64 {
    GAUSS3_NODES
        .iter()
        .zip(GAUSS3_WEIGHTS)
        .map(|(&t, w)| w * f(a.lerp(b, t)))
        .sum()
}

/// Convex polygon with 3 or 4 counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    /// Signed (shoelace) area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let mut acc = Point2::default();
        let mut total = 0.0;
        for t in self.fan() {
            let a = signed_area(t[0], t[1], t[2]);
            acc = acc + (t[0] + t[1] + t[2]) * (a / 3.0);
            total += a;
        }
        acc * (1.0 / total)
    }

    /// Triangles of the fan from vertex 0.
    pub fn fan(&self) -> impl Iterator<Item = [Point2; 3]> + '_ {
        let v = &self.vertices;
        (1..v.len().saturating_sub(1)).map(move |i| [v[0], v[i], v[i + 1]])
    }
}

/// Integral of `f` over a convex polygon, fan-triangulated from vertex 0.
pub fn integrate_polygon(poly: &Polygon, f: impl Fn(Point2) -> f64, degree: u32) -> Result<f64> {
    if !(3..=4).contains(&poly.vertices.len()) {
        return Err(Error::DegenerateCut(format!(
            "polygon with {} vertices",
            poly.vertices.len()
        )));
    }
    let rule = QuadRule::triangle(degree)?;
    Ok(poly.fan().map(|t| rule.integrate_triangle(t, &f)).sum())
}

/// Splits a triangle into four congruent children `levels` times.
pub fn refine_triangle(tri: [Point2; 3], levels: u32) -> Vec<[Point2; 3]> {
    let mut out = vec![tri];
    for _ in 0..levels {
        out = out
            .into_iter()
            .flat_map(|[a, b, c]| {
                let ab = a.lerp(b, 0.5);
                let bc = b.lerp(c, 0.5);
                let ca = c.lerp(a, 0.5);
                [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            })
            .collect();
    }
    out
}
