//! Checks shared by the topical suites and the acceptance target. Each
//! returns a [`Check`] instead of panicking so the acceptance runner can
//! report every criterion.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use iwg::assembly::{
    assemble, local_matrix, BoundaryData, DofMap, InterfaceProblem, PenaltyScaling, Scheme, DEFAULT_RHO,
};
use iwg::error_analysis::{compute_errors, ErrorReport, NormOptions, WgSolution};
use iwg::geometry::{classify_elements, split_by_chord, CutGeometry, ElementClass, LevelSet, Side};
use iwg::ife::{build_element_bases, build_ife_basis, defining_residual, eval_linear, ElementBasis, IfeBasis};
use iwg::mesh::signed_area;
use iwg::problems::{problem_circle, problem_line_patch, problem_linear_patch};
use iwg::solver::{solve, solve_detailed, SolverConfig};
use iwg::sparse::CsrMatrix;
use iwg::study::{run_study, solve_problem, StudyConfig, StudyTable};
use iwg::{Error, Point2, Rect, UniformMesh};
use nalgebra::{DMatrix, DVector, SMatrix, SVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }

    fn within(self, limit: Duration, elapsed: Duration) -> Self {
        let ok = elapsed <= limit;
        Self::new(
            self.passed && ok,
            format!("{}; {:.2} s (limit {} s)", self.detail, elapsed.as_secs_f64(), limit.as_secs()),
        )
    }

    fn from_error(e: Error) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn timed(limit_secs: u64, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let c = f();
    c.within(Duration::from_secs(limit_secs), start.elapsed())
}

fn in_band(values: &[f64], lo: f64, hi: f64) -> bool {
    values.iter().all(|v| (lo..=hi).contains(v))
}

fn fmt_list(values: &[f64]) -> String {
    let s: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
    format!("[{}]", s.join(", "))
}

fn within_rel(value: f64, target: f64, tol: f64) -> bool {
    ((value - target) / target).abs() <= tol
}

// ---------------------------------------------------------------------------
// 1. DOF parity

pub const PAPER_DOFS: [(usize, usize); 4] = [(16, 2336), (32, 9280), (64, 36992), (128, 147712)];

pub fn dof_parity() -> Check {
    timed(1, || {
        let mut ok = true;
        let mut got = Vec::new();
        for (n, want) in PAPER_DOFS {
            let dofs = UniformMesh::build(Rect::symmetric_unit(), n).map(|m| m.wg_dofs());
            let dofs = match dofs {
                Ok(d) => d,
                Err(e) => return Check::from_error(e),
            };
            // Rounded to three significant digits as printed in the table.
            let rounded = format!("{:.2E}", dofs as f64);
            ok &= dofs == want;
            got.push(format!("{n}:{dofs} ({rounded})"));
        }
        Check::new(ok, got.join(" "))
    })
}

// ---------------------------------------------------------------------------
// 2-5. Convergence studies

pub fn study(problem: &str, bm: f64, bp: f64, levels: &[usize]) -> iwg::Result<StudyTable> {
    let mut config = StudyConfig::new(problem, bm, bp, levels.to_vec());
    config.solver = SolverConfig::direct();
    run_study(&config)
}

fn orders(t: &StudyTable, f: fn(&iwg::error_analysis::Orders) -> f64) -> Vec<f64> {
    t.orders.iter().map(f).collect()
}

fn report(t: &StudyTable, n: usize) -> ErrorReport {
    t.reports().into_iter().find(|r| r.n_per_side == n).expect("level in ladder")
}

pub const EVEN_LADDER: [usize; 4] = [16, 32, 64, 128];
pub const ODD_LADDER: [usize; 4] = [17, 33, 65, 129];

pub fn circle_1000_1() -> Check {
    timed(60, || {
        let t = match study("circle", 1000.0, 1.0, &EVEN_LADDER) {
            Ok(t) => t,
            Err(e) => return Check::from_error(e),
        };
        let (l2_32, l2_64) = (report(&t, 32).e0_l2, report(&t, 64).e0_l2);
        let l2 = orders(&t, |o| o.e0_l2);
        let h1 = orders(&t, |o| o.e0_h1);
        let eb = orders(&t, |o| o.eb_inf);
        let eb_mean: Vec<f64> = t
            .reports()
            .windows(2)
            .map(|w| (w[0].eb_mean_inf / w[1].eb_mean_inf).log2())
            .collect();
        let parts = [
            ("L2(32)~7.89E-3", within_rel(l2_32, 7.89e-3, 0.25)),
            ("L2(64)~1.98E-3", within_rel(l2_64, 1.98e-3, 0.25)),
            ("L2 orders", in_band(&l2, 1.75, 2.25)),
            ("H1 orders", in_band(&h1, 0.85, 1.15)),
            ("eb orders", in_band(&eb, 0.6, 1.3)),
        ];
        let failed: Vec<&str> = parts.iter().filter(|p| !p.1).map(|p| p.0).collect();
        Check::new(
            failed.is_empty(),
            format!(
                "L2(32)={l2_32:.3E} L2(64)={l2_64:.3E} L2 orders {} H1 orders {} eb orders {} (Qb u form {}){}",
                fmt_list(&l2),
                fmt_list(&h1),
                fmt_list(&eb),
                fmt_list(&eb_mean),
                if failed.is_empty() { String::new() } else { format!("; out of band: {}", failed.join(", ")) }
            ),
        )
    })
}

pub fn circle_1_1000() -> Check {
    timed(60, || {
        let t = match study("circle", 1.0, 1000.0, &EVEN_LADDER) {
            Ok(t) => t,
            Err(e) => return Check::from_error(e),
        };
        let h1_64 = report(&t, 64).e0_h1;
        let l2 = orders(&t, |o| o.e0_l2);
        let h1 = orders(&t, |o| o.e0_h1);
        let ok = in_band(&l2, 1.75, 2.25) && in_band(&h1, 0.85, 1.2) && within_rel(h1_64, 2.44e-2, 0.25);
        Check::new(
            ok,
            format!("H1(64)={h1_64:.3E} (2.44E-2) L2 orders {} H1 orders {}", fmt_list(&l2), fmt_list(&h1)),
        )
    })
}

pub fn petal_both() -> Check {
    timed(90, || {
        let mut ok = true;
        let mut detail = Vec::new();
        for (bm, bp) in [(1.0, 1000.0), (1000.0, 1.0)] {
            let t = match study("petal", bm, bp, &EVEN_LADDER) {
                Ok(t) => t,
                Err(e) => return Check::from_error(e),
            };
            let l2 = orders(&t, |o| o.e0_l2);
            let h1 = orders(&t, |o| o.e0_h1);
            ok &= in_band(&l2, 1.75, 2.25) && in_band(&h1, 0.85, 1.2);
            let mut d = format!("({bm},{bp}) L2 {} H1 {}", fmt_list(&l2), fmt_list(&h1));
            if bm == 1.0 {
                let l2_64 = report(&t, 64).e0_l2;
                ok &= within_rel(l2_64, 5.87e-4, 0.30);
                d.push_str(&format!(" L2(64)={l2_64:.3E} (5.87E-4)"));
            }
            let tolerated: usize = t.rows.iter().map(|r| r.tolerated_edges).sum();
            if tolerated > 0 {
                d.push_str(&format!(" [{tolerated} double-crossed edges]"));
            }
            detail.push(d);
        }
        Check::new(ok, detail.join("; "))
    })
}

pub fn corner_both() -> Check {
    timed(90, || {
        let mut ok = true;
        let mut detail = Vec::new();
        for (bm, bp) in [(1000.0, 1.0), (1.0, 1000.0)] {
            let t = match study("corner", bm, bp, &ODD_LADDER) {
                Ok(t) => t,
                Err(e) => return Check::from_error(e),
            };
            let l2 = orders(&t, |o| o.e0_l2);
            let h1 = orders(&t, |o| o.e0_h1);
            ok &= in_band(&l2, 1.7, 2.3) && in_band(&h1, 0.85, 1.2);
            detail.push(format!("({bm},{bp}) L2 {} H1 {}", fmt_list(&l2), fmt_list(&h1)));
        }
        Check::new(ok, detail.join("; "))
    })
}

// ---------------------------------------------------------------------------
// 6. Patch tests

/// Largest of the four error norms after solving `problem` on an `n x n` mesh.
pub fn patch_error(problem: &InterfaceProblem, n: usize) -> iwg::Result<f64> {
    let s = solve_problem(
        problem,
        n,
        DEFAULT_RHO,
        &SolverConfig::direct(),
        false,
        Default::default(),
    )?;
    let r = compute_errors(&s.solution, problem, &s.mesh, &s.classes, &s.bases, &NormOptions::default())?;
    // The midpoint form of the edge error is not zero for an exact solution
    // with a kink on the edge; the `Qb u` form is the one that must vanish.
    Ok(r.e0_inf.max(r.eb_mean_inf).max(r.e0_l2).max(r.e0_h1))
}

pub fn patch_tests() -> Check {
    timed(5, || {
        let mut worst = [0.0f64; 2];
        for n in [4, 8, 16] {
            for (k, problem) in [problem_linear_patch(), problem_line_patch()].iter().enumerate() {
                match patch_error(problem, n) {
                    Ok(e) => worst[k] = worst[k].max(e),
                    Err(e) => return Check::from_error(e),
                }
            }
        }
        Check::new(
            worst[0] < 1e-9 && worst[1] < 1e-9,
            format!("max norm error: no interface {:.1e}, straight interface {:.1e}", worst[0], worst[1]),
        )
    })
}

// ---------------------------------------------------------------------------
// 7. IFE properties

/// Geometry of a triangle cut by the straight line through `d` and `e`,
/// with `-` on the side of `minus_dir`.
pub fn straight_cut(tri: [Point2; 3], d: Point2, e: Point2, minus_dir: f64) -> iwg::Result<(CutGeometry, LevelSet)> {
    let nrm = (e - d).perp() * minus_dir;
    let ls = LevelSet::new(move |q| (q - d).dot(nrm));
    let (sub_minus, sub_plus, normal) = split_by_chord(tri, d, e, &ls)?;
    let cut = CutGeometry {
        d,
        e,
        cut_edges: [0, 0],
        normal,
        sub_minus,
        sub_plus,
        vertex_sides: tri.map(|q| ls.side(q)),
    };
    Ok((cut, ls))
}

pub struct IfeStats {
    pub trials: usize,
    pub worst_residual: f64,
    pub worst_unity: f64,
    pub singular: usize,
}

/// Random mesh-like right triangles cut by random chords, coefficient ratio
/// log-uniform in `[1e-3, 1e3]`.
pub fn ife_trials(trials: usize, seed: u64) -> IfeStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = IfeStats {
        trials: 0,
        worst_residual: 0.0,
        worst_unity: 0.0,
        singular: 0,
    };
    while stats.trials < trials {
        let h = 10f64.powf(rng.random_range(-3.0..0.0));
        let o = Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        // Both triangles of a uniform-mesh square.
        let tri = if rng.random_bool(0.5) {
            [o, o + Point2::new(h, 0.0), o + Point2::new(0.0, h)]
        } else {
            [o + Point2::new(h, 0.0), o + Point2::new(h, h), o + Point2::new(0.0, h)]
        };
        let i = rng.random_range(0..3);
        let j = (i + rng.random_range(1..3)) % 3;
        let d = tri[i].lerp(tri[(i + 1) % 3], rng.random_range(0.0..1.0));
        let e = tri[j].lerp(tri[(j + 1) % 3], rng.random_range(0.0..1.0));
        let Ok((cut, _)) = straight_cut(tri, d, e, if rng.random_bool(0.5) { 1.0 } else { -1.0 }) else {
            // Degenerate split: the classifier would call this element regular.
            continue;
        };
        stats.trials += 1;
        let ratio = 10f64.powf(rng.random_range(-3.0..3.0));
        let basis = match build_ife_basis(tri, &cut, 1.0, ratio, stats.trials) {
            Ok(b) => b,
            Err(_) => {
                stats.singular += 1;
                continue;
            }
        };
        stats.worst_residual = stats.worst_residual.max(defining_residual(tri, &cut, &basis));
        stats.worst_unity = stats.worst_unity.max(unity_defect(&tri, &basis, &mut rng));
    }
    stats
}

/// Largest `|sum phi_i - 1|` and `h |sum grad phi_i|` over random points on
/// both pieces.
fn unity_defect(tri: &[Point2; 3], basis: &IfeBasis, rng: &mut ChaCha8Rng) -> f64 {
    let h = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let mut worst: f64 = 0.0;
    for piece in [&basis.minus, &basis.plus] {
        for _ in 0..4 {
            let (a, b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let p = tri[0] + (tri[1] - tri[0]) * a + (tri[2] - tri[0]) * b;
            let s: f64 = piece.iter().map(|c| eval_linear(c, p)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        let g = piece.iter().fold(Point2::default(), |g, c| g + c.grad());
        worst = worst.max(h * g.norm());
    }
    worst
}

pub fn ife_properties() -> Check {
    timed(10, || {
        let s = ife_trials(1000, 2024);
        Check::new(
            s.singular == 0 && s.worst_residual < 1e-10 && s.worst_unity < 1e-12,
            format!(
                "{} trials: max residual {:.1e}, max unity defect {:.1e}, {} singular",
                s.trials, s.worst_residual, s.worst_unity, s.singular
            ),
        )
    })
}

// ---------------------------------------------------------------------------
// 8. Structural properties

pub struct SystemFacts {
    pub asymmetry_full: f64,
    pub asymmetry_reduced: f64,
    /// `max |A 1|` before elimination, absolute and relative to `max |A|`.
    pub kernel: f64,
    pub kernel_relative: f64,
    pub cholesky: bool,
    pub cg_iterations: Option<usize>,
}

pub fn system_facts(bm: f64, bp: f64, n: usize, scheme: Scheme, cg_cap: Option<usize>) -> iwg::Result<SystemFacts> {
    let problem = problem_circle(bm, bp)?;
    let mesh = UniformMesh::build(problem.domain, n)?;
    let classes = classify_elements(&mesh, &problem.levelset)?;
    let bases = build_element_bases(&mesh, &classes, bm, bp)?;
    let sys = assemble(&mesh, &classes, &bases, &problem, scheme)?;
    let ones = vec![1.0; sys.full_matrix.n];
    let kernel = sys.full_matrix.matvec(&ones).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cholesky = solve(&sys.matrix, &sys.rhs, &SolverConfig::direct()).is_ok();
    let cg = SolverConfig {
        max_iterations: Some(cg_cap.unwrap_or(20 * sys.matrix.n)),
        ..SolverConfig::cg()
    };
    let cg_iterations = solve_detailed(&sys.matrix, &sys.rhs, &cg).ok().map(|s| s.iterations);
    Ok(SystemFacts {
        asymmetry_full: sys.full_matrix.max_asymmetry() / sys.full_matrix.max_abs(),
        asymmetry_reduced: sys.matrix.max_asymmetry() / sys.matrix.max_abs(),
        kernel,
        kernel_relative: kernel / sys.full_matrix.max_abs(),
        cholesky,
        cg_iterations,
    })
}

pub fn structural() -> Check {
    timed(10, || {
        let mut ok = true;
        let mut detail = Vec::new();
        for (bm, bp) in [(1.0, 1000.0), (1000.0, 1.0)] {
            for rho in [10.0, 10000.0] {
                let f = match system_facts(bm, bp, 32, rho.into(), None) {
                    Ok(f) => f,
                    Err(e) => return Check::from_error(e),
                };
                let pass = f.asymmetry_full < 1e-12
                    && f.asymmetry_reduced < 1e-12
                    && f.kernel_relative < 1e-11
                    && f.cholesky
                    && f.cg_iterations.is_some();
                ok &= pass;
                detail.push(format!(
                    "({bm},{bp}) rho={rho}: sym {:.0e} kernel {:.0e} (abs {:.0e}) chol {} cg {}",
                    f.asymmetry_full.max(f.asymmetry_reduced),
                    f.kernel_relative,
                    f.kernel,
                    if f.cholesky { "ok" } else { "FAIL" },
                    f.cg_iterations.map_or("FAIL".to_string(), |i| format!("{i} it")),
                ));
            }
        }
        Check::new(ok, detail.join("; "))
    })
}

/// Whether the unweighted penalty `rho / h` gives a positive definite
/// reduced system.
pub fn plain_penalty_is_spd(bm: f64, bp: f64, n: usize, rho: f64) -> iwg::Result<bool> {
    system_facts(bm, bp, n, Scheme::new(rho, PenaltyScaling::Plain, BoundaryData::default()), Some(1)).map(|f| f.cholesky)
}

// ---------------------------------------------------------------------------
// 9. Local matrix against a quadrature oracle

/// Degree-4 six-point rule on the reference triangle (barycentric, weights
/// summing to one).
const DEGREE4: [([f64; 3], f64); 6] = [
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
];

/// Gauss-Legendre nodes and weights on `[0, 1]` from the Jacobi matrix.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), v * v)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// The part of `poly` where `(p - o) . n >= 0`.
fn clip(poly: &[Point2], o: Point2, n: Point2) -> Vec<Point2> {
    let f = |p: Point2| (p - o).dot(n);
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if f(a) >= 0.0 {
            out.push(a);
        }
        if (f(a) >= 0.0) != (f(b) >= 0.0) {
            out.push(a.lerp(b, f(a) / (f(a) - f(b))));
        }
    }
    out
}

fn integrate_poly(poly: &[Point2], g: impl Fn(Point2) -> f64) -> f64 {
    let mut s = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let t = [poly[0], poly[k], poly[k + 1]];
        let area = signed_area(t[0], t[1], t[2]).abs();
        for (l, w) in DEGREE4 {
            let p = Point2::new(
                l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x,
                l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y,
            );
            s += area * w * g(p);
        }
    }
    s
}

/// IFE shape function coefficients `[a, b, c]` for both pieces by a dense
/// solve of the defining equations.
pub fn oracle_ife(
    tri: [Point2; 3],
    d: Point2,
    e: Point2,
    sides: [Side; 3],
    normal: Point2,
    beta: (f64, f64),
) -> [[[f64; 3]; 2]; 3] {
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for (r, (p, s)) in tri.iter().zip(sides).enumerate() {
        let off = if s == Side::Minus { 0 } else { 3 };
        m[(r, off)] = 1.0;
        m[(r, off + 1)] = p.x;
        m[(r, off + 2)] = p.y;
    }
    for (r, p) in [(3, d), (4, e)] {
        m[(r, 0)] = 1.0;
        m[(r, 1)] = p.x;
        m[(r, 2)] = p.y;
        m[(r, 3)] = -1.0;
        m[(r, 4)] = -p.x;
        m[(r, 5)] = -p.y;
    }
    m[(5, 1)] = -beta.0 * normal.x;
    m[(5, 2)] = -beta.0 * normal.y;
    m[(5, 4)] = beta.1 * normal.x;
    m[(5, 5)] = beta.1 * normal.y;
    let lu = m.lu();
    std::array::from_fn(|i| {
        let mut rhs = SVector::<f64, 6>::zeros();
        rhs[i] = 1.0;
        let x = lu.solve(&rhs).expect("nonsingular");
        [[x[0], x[1], x[2]], [x[3], x[4], x[5]]]
    })
}

/// Element matrix assembled term by term by numerical integration of the
/// bilinear form with `rho_t` the stabilizer weight (before division by h).
pub fn oracle_local_matrix(
    tri: [Point2; 3],
    d: Point2,
    e: Point2,
    sides: [Side; 3],
    beta: (f64, f64),
    rho_t: f64,
) -> [[f64; 6]; 6] {
    // Chord normal pointing into the `+` piece.
    let mut normal = (e - d).perp() * (1.0 / d.dist(e));
    let plus_vertex = (0..3).find(|&k| sides[k] == Side::Plus).expect("a + vertex");
    if (tri[plus_vertex] - d).dot(normal) < 0.0 {
        normal = -normal;
    }
    let coeffs = oracle_ife(tri, d, e, sides, normal, beta);
    let piece_of = |p: Point2| if (p - d).dot(normal) >= 0.0 { 1 } else { 0 };
    let beta_of = |k: usize| if k == 0 { beta.0 } else { beta.1 };
    let value = |i: usize, p: Point2| {
        let c = coeffs[i][piece_of(p)];
        c[0] + c[1] * p.x + c[2] * p.y
    };
    let grad = |i: usize, k: usize| Point2::new(coeffs[i][k][1], coeffs[i][k][2]);

    let mut m = [[0.0; 6]; 6];
    // Volume term over the two clipped pieces.
    for (k, dir) in [(0usize, -1.0), (1, 1.0)] {
        let poly = clip(&tri, d, normal * dir);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += integrate_poly(&poly, |_| beta_of(k) * grad(i, k).dot(grad(j, k)));
            }
        }
    }

    let h = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
    let gl = gauss_legendre_unit(20);
    for edge in 0..3 {
        let (a, b) = (tri[edge], tri[(edge + 1) % 3]);
        let len = a.dist(b);
        let n = Point2::new(b.y - a.y, a.x - b.x) * (1.0 / len);
        // Split where the chord line crosses the edge.
        let (fa, fb) = ((a - d).dot(normal), (b - d).dot(normal));
        let mut breaks = vec![0.0, 1.0];
        if fa * fb < 0.0 {
            breaks.insert(1, fa / (fa - fb));
        }
        let segment_integral = |g: &dyn Fn(Point2) -> f64| {
            let mut s = 0.0;
            for w in breaks.windows(2) {
                for &(t, wt) in &gl {
                    let p = a.lerp(b, w[0] + (w[1] - w[0]) * t);
                    s += (w[1] - w[0]) * len * wt * g(p);
                }
            }
            s
        };
        // Interior trace and edge value of local unknown `i`.
        let v0 = |i: usize, p: Point2| if i < 3 { value(i, p) } else { 0.0 };
        let vb = |i: usize| if i == 3 + edge { 1.0 } else { 0.0 };
        let flux = |i: usize, p: Point2| {
            if i < 3 {
                let k = piece_of(p);
                beta_of(k) * grad(i, k).dot(n)
            } else {
                0.0
            }
        };
        let qb_flux: [f64; 6] = std::array::from_fn(|i| segment_integral(&|p| flux(i, p)) / len);
        let qb_v0: [f64; 6] = std::array::from_fn(|i| segment_integral(&|p| v0(i, p)) / len);
        for i in 0..6 {
            for j in 0..6 {
                let c1 = segment_integral(&|p| qb_flux[i] * (v0(j, p) - vb(j)));
                let c2 = segment_integral(&|p| qb_flux[j] * (v0(i, p) - vb(i)));
                let stab = rho_t / h * len * (qb_v0[i] - vb(i)) * (qb_v0[j] - vb(j));
                m[i][j] += stab - c1 - c2;
            }
        }
    }
    m
}

fn max_diff(a: &[[f64; 6]; 6], b: &[[f64; 6]; 6]) -> f64 {
    (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .fold(0.0, |m, (i, j)| m.max((a[i][j] - b[i][j]).abs()))
}

/// Worst difference between the library and the oracle on a cut element,
/// for both stabilizer weightings.
pub fn oracle_difference(tri: [Point2; 3], d: Point2, e: Point2, minus_dir: f64, beta: (f64, f64)) -> iwg::Result<f64> {
    let (cut, _) = straight_cut(tri, d, e, minus_dir)?;
    let sides = cut.vertex_sides;
    let class = ElementClass::Cut(cut.clone());
    let basis = ElementBasis::Ife(build_ife_basis(tri, &cut, beta.0, beta.1, 0)?);
    let mut worst: f64 = 0.0;
    for (scaling, rho_t) in [
        (PenaltyScaling::Plain, DEFAULT_RHO),
        (PenaltyScaling::Coefficient, DEFAULT_RHO * beta.0.max(beta.1)),
    ] {
        let scheme = Scheme::new(DEFAULT_RHO, scaling, BoundaryData::default());
        let lib = local_matrix(tri, &class, &basis, beta, scheme);
        let oracle = oracle_local_matrix(tri, d, e, sides, beta, rho_t);
        let scale = oracle.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max_diff(&lib, &oracle) / scale);
    }
    Ok(worst)
}

pub fn reference_triangle() -> [Point2; 3] {
    [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
}

pub fn local_oracle() -> Check {
    timed(1, || {
        // `-` is the corner at the origin.
        match oracle_difference(reference_triangle(), Point2::new(0.5, 0.0), Point2::new(0.0, 0.5), -1.0, (1.0, 2.0)) {
            Ok(diff) => Check::new(diff < 1e-10, format!("max relative difference {diff:.1e}")),
            Err(e) => Check::from_error(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Helpers for the other suites

pub fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.n, m.n, |i, j| rows[i][j])
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn interpolant_vector(mesh: &UniformMesh, solution: &WgSolution) -> DVector<f64> {
    let dofs = DofMap::new(mesh);
    let mut v = DVector::zeros(dofs.total_dofs());
    for (t, u) in solution.interior.iter().enumerate() {
        for k in 0..3 {
            v[dofs.interior_offset(t) + k] = u[k];
        }
    }
    for (e, &u) in solution.edge.iter().enumerate() {
        v[dofs.edge_offset(e)] = u;
    }
    v
}
