//! Registered benchmark problems.
//!
//! All problems live on `(-1, 1)^2` with `Omega- = {phi < 0}` and
//! `Omega+ = {phi >= 0}`. Sources are the closed-form `-div(beta grad u)`
//! on each side.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{ExactSolution, InterfaceProblem};
use crate::error::{Error, Result};
use crate::geometry::{LevelSet, Side};
use crate::mesh::{Point2, Rect};

/// Radius of the circular interface.
pub const CIRCLE_RADIUS: f64 = PI / 5.0;
/// Exponent of the radial solution.
pub const CIRCLE_ALPHA: i32 = 5;
/// Default corner half-angle.
pub const DEFAULT_THETA: f64 = PI / 6.0;

/// Problems selectable by name.
pub const PROBLEM_NAMES: [&str; 3] = ["circle", "petal", "corner"];

fn check_betas(beta_minus: f64, beta_plus: f64) -> Result<()> {
    if beta_minus > 0.0 && beta_plus > 0.0 && beta_minus.is_finite() && beta_plus.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "coefficients must be positive, got ({beta_minus}, {beta_plus})"
        )))
    }
}

/// Problem whose solution is `phi / beta` on each side: `u` vanishes on the
/// interface and `beta grad u = grad phi` is continuous, so both jump
/// conditions hold, and `f = -laplace(phi)` on both sides.
fn levelset_solution_problem(
    name: &str,
    beta_minus: f64,
    beta_plus: f64,
    phi: impl Fn(Point2) -> f64 + Send + Sync + Clone + 'static,
    grad: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    laplacian: impl Fn(Point2) -> f64 + Send + Sync + 'static,
) -> InterfaceProblem {
    let beta = move |s: Side| s.pick(beta_minus, beta_plus);
    let phi_u = phi.clone();
    let phi_g = phi.clone();
    let levelset = LevelSet::new(phi.clone());
    let ls = levelset.clone();
    InterfaceProblem {
        name: name.to_string(),
        domain: Rect::symmetric_unit(),
        beta_minus,
        beta_plus,
        levelset,
        source: Arc::new(move |p, _| -laplacian(p)),
        boundary: Arc::new(move |p| phi_g(p) / beta(ls.side(p))),
        exact: Some(ExactSolution {
            u: Arc::new(move |p, s| phi_u(p) / beta(s)),
            grad: Arc::new(move |p, s| grad(p) * (1.0 / beta(s))),
        }),
    }
}

/// Circular interface of radius `pi/5` with `u- = r^5 / beta-` and
/// `u+ = r^5 / beta+ + (1/beta- - 1/beta+) r0^5`.
///
/// `laplace(r^5) = 25 r^3`, so `f = -25 r^3` on both sides.
pub fn problem_circle(beta_minus: f64, beta_plus: f64) -> Result<InterfaceProblem> {
    check_betas(beta_minus, beta_plus)?;
    let r0 = CIRCLE_RADIUS;
    let a = CIRCLE_ALPHA;
    let shift = (1.0 / beta_minus - 1.0 / beta_plus) * r0.powi(a);
    let u = move |p: Point2, s: Side| {
        let ra = p.norm().powi(a);
        match s {
            Side::Minus => ra / beta_minus,
            Side::Plus => ra / beta_plus + shift,
        }
    };
    let grad = move |p: Point2, s: Side| {
        // grad r^a = a r^(a-2) (x, y)
        let g = p * (a as f64 * p.norm().powi(a - 2));
        g * (1.0 / s.pick(beta_minus, beta_plus))
    };
    let levelset = LevelSet::new(move |p| p.x * p.x + p.y * p.y - r0 * r0);
    let ls = levelset.clone();
    Ok(InterfaceProblem {
        name: "circle".into(),
        domain: Rect::symmetric_unit(),
        beta_minus,
        beta_plus,
        levelset,
        source: Arc::new(move |p, _| -((a * a) as f64) * p.norm().powi(a - 2)),
        boundary: Arc::new(move |p| u(p, ls.side(p))),
        exact: Some(ExactSolution {
            u: Arc::new(u),
            grad: Arc::new(grad),
        }),
    })
}

fn petal_phi(p: Point2) -> f64 {
    let r2 = p.x * p.x + p.y * p.y;
    let theta = p.y.atan2(p.x);
    r2 * r2 * (1.0 + 0.4 * (6.0 * theta).sin()) - 0.3
}

/// Six-petal interface `r^4 (1 + 0.4 sin 6 theta) - 0.3 = 0`, with
/// `theta = atan2(y, x)`, and `u = phi / beta` per side.
pub fn problem_petal(beta_minus: f64, beta_plus: f64) -> Result<InterfaceProblem> {
    check_betas(beta_minus, beta_plus)?;
    // With g(theta) = 1 + 0.4 sin 6 theta:
    //   grad(r^4 g) = 4 r^2 g (x, y) + r^2 g'(theta) (-y, x)
    //   laplace(r^4 g) = r^2 (16 g + g'') = r^2 (16 - 8 sin 6 theta)
    let grad = |p: Point2| {
        let r2 = p.x * p.x + p.y * p.y;
        let theta = p.y.atan2(p.x);
        let g = 1.0 + 0.4 * (6.0 * theta).sin();
        let dg = 2.4 * (6.0 * theta).cos();
        p * (4.0 * r2 * g) + p.perp() * (r2 * dg)
    };
    let laplacian = |p: Point2| {
        let r2 = p.x * p.x + p.y * p.y;
        r2 * (16.0 - 8.0 * (6.0 * p.y.atan2(p.x)).sin())
    };
    Ok(levelset_solution_problem(
        "petal", beta_minus, beta_plus, petal_phi, grad, laplacian,
    ))
}

/// Interface `-y^2 + ((x - 1) tan theta)^2 x = 0`, which has a corner of
/// half-angle `theta` at `(1, 0)`, with `u = phi / beta` per side.
pub fn problem_corner(beta_minus: f64, beta_plus: f64, theta: f64) -> Result<InterfaceProblem> {
    check_betas(beta_minus, beta_plus)?;
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::InvalidConfig(format!("corner angle {theta} not in (0, pi/2)")));
    }
    let t2 = theta.tan().powi(2);
    let phi = move |p: Point2| -p.y * p.y + t2 * (p.x - 1.0).powi(2) * p.x;
    // phi = -y^2 + t2 (x^3 - 2 x^2 + x)
    let grad = move |p: Point2| Point2::new(t2 * (3.0 * p.x * p.x - 4.0 * p.x + 1.0), -2.0 * p.y);
    let laplacian = move |p: Point2| t2 * (6.0 * p.x - 4.0) - 2.0;
    Ok(levelset_solution_problem(
        "corner", beta_minus, beta_plus, phi, grad, laplacian,
    ))
}

/// Looks a problem up by name; `theta` is only used by `corner`.
pub fn problem_by_name(
    name: &str,
    beta_minus: f64,
    beta_plus: f64,
    theta: Option<f64>,
) -> Result<InterfaceProblem> {
    match name {
        "circle" => problem_circle(beta_minus, beta_plus),
        "petal" => problem_petal(beta_minus, beta_plus),
        "corner" => problem_corner(beta_minus, beta_plus, theta.unwrap_or(DEFAULT_THETA)),
        other => Err(Error::InvalidConfig(format!(
            "unknown problem {other:?}; expected one of {PROBLEM_NAMES:?}"
        ))),
    }
}

/// No interface (`phi = 1`), `u = x + y`, `f = 0`.
pub fn problem_linear_patch() -> InterfaceProblem {
    InterfaceProblem {
        name: "linear-patch".into(),
        domain: Rect::symmetric_unit(),
        beta_minus: 1.0,
        beta_plus: 1.0,
        levelset: LevelSet::new(|_| 1.0),
        source: Arc::new(|_, _| 0.0),
        boundary: Arc::new(|p| p.x + p.y),
        exact: Some(ExactSolution {
            u: Arc::new(|p, _| p.x + p.y),
            grad: Arc::new(|_, _| Point2::new(1.0, 1.0)),
        }),
    }
}

/// Straight interface `x = 0.2` with `beta = (1, 10)`: `u- = x`,
/// `u+ = x / 10 + 0.18`. `beta grad u = (1, 0)` on both sides, so the
/// solution lies in the discrete space.
pub fn problem_line_patch() -> InterfaceProblem {
    let (bm, bp, x0) = (1.0, 10.0, 0.2);
    let u = move |p: Point2, s: Side| match s {
        Side::Minus => p.x / bm,
        Side::Plus => p.x / bp + x0 * (1.0 / bm - 1.0 / bp),
    };
    let levelset = LevelSet::new(move |p| p.x - x0);
    let ls = levelset.clone();
    InterfaceProblem {
        name: "line-patch".into(),
        domain: Rect::symmetric_unit(),
        beta_minus: bm,
        beta_plus: bp,
        levelset,
        source: Arc::new(|_, _| 0.0),
        boundary: Arc::new(move |p| u(p, ls.side(p))),
        exact: Some(ExactSolution {
            u: Arc::new(u),
            grad: Arc::new(move |_, s| Point2::new(1.0 / s.pick(bm, bp), 0.0)),
        }),
    }
}
