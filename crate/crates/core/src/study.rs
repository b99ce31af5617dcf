//! End-to-end pipeline and mesh-refinement studies.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::assembly::{assemble, assemble_condensed, BoundaryData, InterfaceProblem, PenaltyScaling, Scheme, DEFAULT_RHO};
use crate::error::{Error, Result};
use crate::error_analysis::{compute_errors, convergence_orders, ErrorReport, NormOptions, Orders, WgSolution};
use crate::export::write_vtk;
use crate::geometry::{classify_elements_with, ElementClass, MultipleCrossings};
use crate::ife::{build_element_bases, ElementBasis};
use crate::mesh::UniformMesh;
use crate::problems::problem_by_name;
use crate::solver::{solve, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    /// One of [`crate::problems::PROBLEM_NAMES`].
    pub problem: String,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub rho: f64,
    pub penalty_scaling: PenaltyScaling,
    pub boundary_data: BoundaryData,
    /// Edges crossed more than once by the interface.
    pub crossings: MultipleCrossings,
    /// Strictly increasing list of `N`.
    pub levels: Vec<usize>,
    pub solver: SolverConfig,
    pub format: OutputFormat,
    /// Writes the finest level's field here.
    pub export_field: Option<PathBuf>,
    /// Corner angle, `corner` only.
    pub theta: Option<f64>,
    /// Solve the statically condensed edge system instead of the full one.
    pub condense: bool,
    pub norms: NormOptions,
}

impl StudyConfig {
    pub fn new(problem: &str, beta_minus: f64, beta_plus: f64, levels: Vec<usize>) -> Self {
        Self {
            problem: problem.to_string(),
            beta_minus,
            beta_plus,
            rho: DEFAULT_RHO,
            penalty_scaling: PenaltyScaling::default(),
            boundary_data: BoundaryData::default(),
            crossings: MultipleCrossings::EndpointSigns,
            levels,
            solver: SolverConfig::default(),
            format: OutputFormat::Csv,
            export_field: None,
            theta: None,
            condense: false,
            norms: NormOptions::default(),
        }
    }

    pub fn scheme(&self) -> Scheme {
        Scheme::new(self.rho, self.penalty_scaling, self.boundary_data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("empty mesh ladder".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) || self.levels[0] == 0 {
            return Err(Error::InvalidConfig(format!(
                "ladder {:?} is not strictly increasing and positive",
                self.levels
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if self.problem == "corner" && self.levels.iter().any(|n| n % 2 == 0) {
            // Odd N keeps the interface points (0, 0) and (1, 0) off the nodes.
            return Err(Error::InvalidConfig(format!(
                "the corner problem needs odd N, got {:?}",
                self.levels
            )));
        }
        if self.theta.is_some() && self.problem != "corner" {
            return Err(Error::InvalidConfig("theta only applies to the corner problem".into()));
        }
        self.solver.validate()
    }
}

/// Everything produced by one solve.
#[derive(Clone, Debug)]
pub struct SolvedLevel {
    pub mesh: UniformMesh,
    pub classes: Vec<ElementClass>,
    pub bases: Vec<ElementBasis>,
    pub solution: WgSolution,
    /// Edges crossed more than once, classified by their end points.
    pub tolerated_edges: Vec<usize>,
}

/// Mesh → classify → bases → assemble → solve on an `N x N` mesh.
pub fn solve_problem(
    problem: &InterfaceProblem,
    n: usize,
    scheme: impl Into<Scheme>,
    solver: &SolverConfig,
    condense: bool,
    crossings: MultipleCrossings,
) -> Result<SolvedLevel> {
    let mesh = UniformMesh::build(problem.domain, n)?;
    let classified = classify_elements_with(&mesh, &problem.levelset, crossings)?;
    let classes = classified.classes;
    let bases = build_element_bases(&mesh, &classes, problem.beta_minus, problem.beta_plus)?;
    let scheme = scheme.into();
    let x = if condense {
        let sys = assemble_condensed(&mesh, &classes, &bases, problem, scheme)?;
        let y = solve(&sys.matrix, &sys.rhs, solver)?;
        sys.recover(&y)?
    } else {
        let sys = assemble(&mesh, &classes, &bases, problem, scheme)?;
        let y = solve(&sys.matrix, &sys.rhs, solver)?;
        sys.expand(&y)
    };
    let dofs = crate::assembly::DofMap::new(&mesh);
    let solution = WgSolution::from_vector(&dofs, &x)?;
    Ok(SolvedLevel {
        mesh,
        classes,
        bases,
        solution,
        tolerated_edges: classified.tolerated_edges,
    })
}

#[derive(Clone, Debug)]
pub struct StudyRow {
    pub report: ErrorReport,
    pub seconds: f64,
    /// See [`SolvedLevel::tolerated_edges`].
    pub tolerated_edges: usize,
}

#[derive(Clone, Debug)]
pub struct StudyTable {
    pub problem: String,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub rows: Vec<StudyRow>,
    /// `orders[i]` compares rows `i` and `i + 1`.
    pub orders: Vec<Orders>,
}

pub const CSV_HEADER: &str = "N,DOF,e0_inf,order,eb_inf,order,e0_l2,order,e0_h1,order,seconds";

fn sci(v: f64) -> String {
    format!("{v:.2E}")
}

impl StudyTable {
    fn cells(&self) -> Vec<[String; 11]> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let r = &row.report;
                let o = i.checked_sub(1).and_then(|k| self.orders.get(k));
                let ord = |f: fn(&Orders) -> f64| o.map(|o| format!("{:.2}", f(o))).unwrap_or_default();
                [
                    r.n_per_side.to_string(),
                    r.dofs.to_string(),
                    sci(r.e0_inf),
                    ord(|o| o.e0_inf),
                    sci(r.eb_inf),
                    ord(|o| o.eb_inf),
                    sci(r.e0_l2),
                    ord(|o| o.e0_l2),
                    sci(r.e0_h1),
                    ord(|o| o.e0_h1),
                    format!("{:.3}", row.seconds),
                ]
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in self.cells() {
            out.push_str(&c.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (beta-, beta+) = ({}, {})\n",
            self.problem, self.beta_minus, self.beta_plus
        );
        out.push_str("| N | DOF | ‖e₀‖∞ | Order | ‖e_b‖∞ | Order | ‖e₀‖L² | Order | \\|e₀\\|H¹ | Order | seconds |\n");
        out.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for c in self.cells() {
            let _ = writeln!(out, "| {} |", c.join(" | "));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn reports(&self) -> Vec<ErrorReport> {
        self.rows.iter().map(|r| r.report).collect()
    }
}

/// Runs every level of the ladder in turn. Errors carry the failing `N`.
pub fn run_study(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let problem = problem_by_name(&config.problem, config.beta_minus, config.beta_plus, config.theta)?;
    run_study_for(&problem, config)
}

/// [`run_study`] for an explicit problem; `config.problem` and `theta` are
/// ignored.
pub fn run_study_for(problem: &InterfaceProblem, config: &StudyConfig) -> Result<StudyTable> {
    let mut rows = Vec::with_capacity(config.levels.len());
    let last = *config.levels.last().ok_or_else(|| Error::InvalidConfig("empty mesh ladder".into()))?;
    for &n in &config.levels {
        let level = |e: Error| Error::Level {
            n,
            source: Box::new(e),
        };
        let start = Instant::now();
        let solved = solve_problem(problem, n, config.scheme(), &config.solver, config.condense, config.crossings).map_err(level)?;
        let seconds = start.elapsed().as_secs_f64();
        let report = compute_errors(
            &solved.solution,
            problem,
            &solved.mesh,
            &solved.classes,
            &solved.bases,
            &config.norms,
        )
        .map_err(level)?;
        if n == last {
            if let Some(path) = &config.export_field {
                write_vtk(path, &solved.mesh, &solved.classes, &solved.bases, &solved.solution).map_err(level)?;
            }
        }
        rows.push(StudyRow {
            report,
            seconds,
            tolerated_edges: solved.tolerated_edges.len(),
        });
    }
    let reports: Vec<ErrorReport> = rows.iter().map(|r| r.report).collect();
    let orders = if reports.len() > 1 {
        convergence_orders(&reports)?
    } else {
        Vec::new()
    };
    Ok(StudyTable {
        problem: problem.name.clone(),
        beta_minus: problem.beta_minus,
        beta_plus: problem.beta_plus,
        rows,
        orders,
    })
}
