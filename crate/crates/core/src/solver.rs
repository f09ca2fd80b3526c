//! Picard iteration on the Galerkin system and degree refinement.
//!
//! The first solve drops the nonlinear terms entirely. Every later solve keeps
//! the same matrix and moves the whole nonlinear term, evaluated at the
//! previous iterate, to the right-hand side. Convergence is measured as the
//! sup-norm change of both trial functions on a uniform grid.

use thiserror::Error;

use crate::assembly::{AffineOffset, Assembler, AssemblyError, Offsets};
use crate::basis::{BasisError, BernsteinBasis};
use crate::linalg::{LinalgError, LuFactors};
use crate::par;
use crate::problem::{ProblemSpec, Unknown};
use crate::quadrature::{self, QuadratureError, QuadratureRule};

pub use crate::linalg::{solve_dense, DenseMatrix};

/// Consecutive iterations examined by the divergence test.
const DIVERGENCE_WINDOW: usize = 5;
/// Growth over the window that counts as divergence.
const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linear(#[from] LinalgError),
    #[error(
        "Picard iteration did not converge in {iterations} iterations \
         (last changes: p {dist_p:.3e}, q {dist_q:.3e})"
    )]
    NotConverged {
        iterations: usize,
        dist_p: f64,
        dist_q: f64,
    },
    #[error("Picard iteration diverged at iteration {iteration} (change {distance:.3e})")]
    Diverged { iteration: usize, distance: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Iteration tolerance on the sup-norm change between Picard iterates.
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    /// Run exactly this many Picard updates after the bootstrap solve.
    pub fixed_iters: Option<usize>,
    /// Tolerance on the sup-norm change between consecutive degrees.
    pub degree_tol: f64,
    pub grid_points: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Gauss-Legendre points; `None` picks `max(24, 2n)`.
    pub quad_order: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            max_picard_iters: 50,
            fixed_iters: None,
            degree_tol: 1e-8,
            grid_points: 101,
            min_degree: 3,
            max_degree: 13,
            quad_order: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if self.picard_tol.is_nan() || self.picard_tol <= 0.0 || self.degree_tol.is_nan() || self.degree_tol <= 0.0 {
            return bad("tolerances must be positive");
        }
        if self.max_picard_iters == 0 {
            return bad("max_picard_iters must be at least 1");
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if self.min_degree > self.max_degree {
            return bad("min_degree exceeds max_degree");
        }
        Ok(())
    }

    fn rule_for(&self, degree: usize, spec: &ProblemSpec) -> Result<QuadratureRule, SolveError> {
        let g = self
            .quad_order
            .unwrap_or_else(|| quadrature::default_order(degree));
        Ok(quadrature::gauss_legendre(g, spec.domain.a, spec.domain.b)?)
    }
}

/// Trial functions `θ + Σ c_j φ_j` for both unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub basis: BernsteinBasis,
    pub offsets: Offsets,
    pub coeffs_p: Vec<f64>,
    pub coeffs_q: Vec<f64>,
    /// Picard updates performed after the bootstrap solve.
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of (p, q) in the last Picard update.
    pub last_change: Option<(f64, f64)>,
}

impl Solution {
    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn coeffs(&self, which: Unknown) -> &[f64] {
        match which {
            Unknown::P => &self.coeffs_p,
            Unknown::Q => &self.coeffs_q,
        }
    }

    /// Value (order 0) or derivative (order 1, 2) of a trial function.
    pub fn eval(&self, x: f64, which: Unknown, order: usize) -> Result<f64, BasisError> {
        if order > 2 {
            return Err(BasisError::Order(order));
        }
        let theta: &AffineOffset = self.offsets.get(which);
        let mut v = theta.eval(x, order);
        for (j, c) in self.coeffs(which).iter().enumerate() {
            let phi = if order == 0 {
                self.basis.eval(j + 1, x)?
            } else {
                self.basis.eval_deriv(j + 1, x, order)?
            };
            v += c * phi;
        }
        // validates x even when there are no coefficients
        self.basis.eval(0, x)?;
        Ok(v)
    }

    /// Values of both trial functions on the given points.
    pub fn sample(&self, xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>), BasisError> {
        let p = xs
            .iter()
            .map(|&x| self.eval(x, Unknown::P, 0))
            .collect::<Result<_, _>>()?;
        let q = xs
            .iter()
            .map(|&x| self.eval(x, Unknown::Q, 0))
            .collect::<Result<_, _>>()?;
        Ok((p, q))
    }
}

/// Values of the interior functions on a fixed grid, for cheap distances
/// between coefficient vectors.
struct GridTable {
    phi: Vec<Vec<f64>>,
}

impl GridTable {
    fn new(basis: &BernsteinBasis, grid: &[f64]) -> Self {
        let phi = grid
            .iter()
            .map(|&x| {
                (1..basis.degree())
                    .map(|i| basis.value_and_derivs(i, x)[0])
                    .collect()
            })
            .collect();
        Self { phi }
    }

    fn distance(&self, c1: &[f64], c2: &[f64]) -> f64 {
        self.phi
            .iter()
            .map(|row| {
                row.iter()
                    .zip(c1.iter().zip(c2))
                    .map(|(phi, (a, b))| (a - b) * phi)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solve at one degree with linear-interpolant offsets.
pub fn picard_solve(
    spec: &ProblemSpec,
    degree: usize,
    config: &SolverConfig,
) -> Result<Solution, SolveError> {
    picard_solve_with_offsets(spec, degree, config, Offsets::linear(spec))
}

/// Solve at one degree with caller-chosen offsets.
pub fn picard_solve_with_offsets(
    spec: &ProblemSpec,
    degree: usize,
    config: &SolverConfig,
    offsets: Offsets,
) -> Result<Solution, SolveError> {
    config.validate()?;
    spec.validate().map_err(AssemblyError::from)?;
    let basis = BernsteinBasis::new(degree, spec.domain.a, spec.domain.b)?;
    let rule = config.rule_for(degree, spec)?;
    let asm = Assembler::new(spec, basis, &rule, offsets)?;
    let system = asm.linear_system()?;
    let lu = LuFactors::new(&system.matrix)?;
    let m = basis.interior_len();

    let split = |c: Vec<f64>| {
        let q = c[m..].to_vec();
        let mut p = c;
        p.truncate(m);
        (p, q)
    };
    let (mut cp, mut cq) = split(lu.solve(&system.rhs)?);
    let finish = |cp, cq, iterations, converged, last_change| Solution {
        basis,
        offsets: asm.offsets().clone(),
        coeffs_p: cp,
        coeffs_q: cq,
        iterations,
        converged,
        last_change,
    };

    if spec.is_linear() {
        return Ok(finish(cp, cq, 0, true, None));
    }

    let grid = GridTable::new(&basis, &spec.domain.grid(config.grid_points));
    let limit = config.fixed_iters.unwrap_or(config.max_picard_iters);
    let mut history: Vec<f64> = Vec::new();
    let mut last = None;
    for k in 1..=limit {
        let nl = asm.nonlinear_rhs(&cp, &cq)?;
        let rhs: Vec<f64> = system.rhs.iter().zip(&nl).map(|(a, b)| a + b).collect();
        let (np, nq) = split(lu.solve(&rhs)?);
        let dp = grid.distance(&np, &cp);
        let dq = grid.distance(&nq, &cq);
        cp = np;
        cq = nq;
        last = Some((dp, dq));
        let d = dp.max(dq);
        if !d.is_finite() {
            return Err(SolveError::Diverged {
                iteration: k,
                distance: d,
            });
        }
        history.push(d);
        let done = dp < config.picard_tol && dq < config.picard_tol;
        if config.fixed_iters.is_none() {
            if done {
                return Ok(finish(cp, cq, k, true, last));
            }
            if diverging(&history) {
                return Err(SolveError::Diverged {
                    iteration: k,
                    distance: d,
                });
            }
        }
    }

    match (config.fixed_iters, last) {
        (Some(_), Some((dp, dq))) => {
            let converged = dp < config.picard_tol && dq < config.picard_tol;
            Ok(finish(cp, cq, limit, converged, last))
        }
        (Some(_), None) => Ok(finish(cp, cq, 0, false, None)),
        (None, last) => {
            let (dist_p, dist_q) = last.unwrap_or((f64::NAN, f64::NAN));
            Err(SolveError::NotConverged {
                iterations: limit,
                dist_p,
                dist_q,
            })
        }
    }
}

/// Steady growth by [`DIVERGENCE_FACTOR`] over the last
/// [`DIVERGENCE_WINDOW`] iterations.
fn diverging(history: &[f64]) -> bool {
    if history.len() <= DIVERGENCE_WINDOW {
        return false;
    }
    let window = &history[history.len() - DIVERGENCE_WINDOW - 1..];
    let increasing = window.windows(2).all(|w| w[1] > w[0]);
    increasing && window[DIVERGENCE_WINDOW] > DIVERGENCE_FACTOR * window[0]
}

/// One entry of a degree sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStep {
    pub degree: usize,
    /// Sup-norm distance (both unknowns) to the previous degree's solution.
    pub distance: Option<f64>,
    pub iterations: usize,
    pub picard_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub solution: Solution,
    pub history: Vec<DegreeStep>,
    /// Whether the degree tolerance was met before `max_degree`.
    pub converged: bool,
}

/// Sup-norm distance between two solutions over `grid`, both unknowns.
pub fn solution_distance(a: &Solution, b: &Solution, grid: &[f64]) -> Result<f64, BasisError> {
    let (pa, qa) = a.sample(grid)?;
    let (pb, qb) = b.sample(grid)?;
    let d = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(d(&pa, &pb).max(d(&qa, &qb)))
}

/// Raise the degree from `min_degree` until two consecutive solutions agree
/// to `degree_tol`, or `max_degree` is reached.
pub fn refine_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<Refinement, SolveError> {
    config.validate()?;
    let solves = (config.min_degree..=config.max_degree).map(|n| picard_solve(spec, n, config));
    refine_over(spec, solves, config)
}

/// Independent solves for every degree in `degrees`, run in parallel and
/// returned in input order.
pub fn sweep(
    spec: &ProblemSpec,
    degrees: &[usize],
    config: &SolverConfig,
) -> Vec<Result<Solution, SolveError>> {
    par::map_slice(degrees, |&n| picard_solve(spec, n, config))
}

/// Apply the degree-tolerance stopping rule to finished sweep results.
/// Results after the stopping degree are ignored, errors included.
pub fn refine_from_sweep(
    spec: &ProblemSpec,
    results: Vec<Result<Solution, SolveError>>,
    config: &SolverConfig,
) -> Result<Refinement, SolveError> {
    refine_over(spec, results.into_iter(), config)
}

fn refine_over<I>(spec: &ProblemSpec, solves: I, config: &SolverConfig) -> Result<Refinement, SolveError>
where
    I: Iterator<Item = Result<Solution, SolveError>>,
{
    let grid = spec.domain.grid(config.grid_points);
    let mut history = Vec::new();
    let mut prev: Option<Solution> = None;
    for result in solves {
        let sol = result?;
        let distance = prev
            .as_ref()
            .map(|p| solution_distance(p, &sol, &grid))
            .transpose()?;
        history.push(DegreeStep {
            degree: sol.degree(),
            distance,
            iterations: sol.iterations,
            picard_converged: sol.converged,
        });
        if distance.is_some_and(|d| d < config.degree_tol) {
            return Ok(Refinement {
                solution: sol,
                history,
                converged: true,
            });
        }
        prev = Some(sol);
    }
    let solution = prev.ok_or_else(|| SolveError::Config("empty degree range".into()))?;
    Ok(Refinement {
        solution,
        history,
        converged: false,
    })
}
