//! Discrete Galerkin system for the coupled third-order problem.
//!
//! Each unknown is written `u = θ_u + Σ c_j φ_j` with `θ_u` carrying the
//! endpoint values. The own third derivative is integrated by parts twice,
//!
//! ```text
//! ∫ φ_i u''' = -φ_i'(b) u'(b) + φ_i'(a) u'(a) + ∫ φ_i'' u'
//! ```
//!
//! A prescribed `u'` moves to the load vector; at the natural end `u'` is
//! expanded in the trial functions and lands in the matrix. The unknown
//! vector is `[a_1..a_m, b_1..b_m]` and the matrix has block layout
//! `[[A, H], [D, C]]` with rows indexed by the test function.

use thiserror::Error;

use crate::basis::BernsteinBasis;
use crate::expr::{EvalError, PointState};
use crate::linalg::DenseMatrix;
use crate::par;
use crate::problem::{BoundaryData, Domain, End, ProblemSpec, SpecError, Unknown};
use crate::quadrature::QuadratureRule;
use crate::solver::Solution;

const OFFSET_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("evaluating {field} failed: {source}")]
    Eval {
        field: String,
        #[source]
        source: EvalError,
    },
    #[error("{field} is not finite at x = {x}")]
    NonFinite { field: String, x: f64 },
    #[error("basis degree {basis} does not match solution degree {solution}")]
    DegreeMismatch { basis: usize, solution: usize },
    #[error("quadrature interval [{0}, {1}] does not match the problem domain")]
    RuleDomain(f64, f64),
    #[error("offset for {unknown:?} misses its boundary value at x = {x}: {got} != {want}")]
    OffsetMismatch {
        unknown: Unknown,
        x: f64,
        got: f64,
        want: f64,
    },
}

/// Polynomial `θ(x) = Σ c_k x^k` carrying the endpoint values of an unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOffset {
    coeffs: Vec<f64>,
}

impl AffineOffset {
    pub fn from_monomials(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Derivative of the given order at `x` (order 0 is the value).
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(order).rev() {
            let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
            acc = acc * x + c * falling;
        }
        acc
    }
}

/// Linear interpolant of the two endpoint values.
pub fn build_offset(bc: &BoundaryData, domain: Domain) -> AffineOffset {
    let slope = (bc.value_b - bc.value_a) / domain.width();
    AffineOffset::from_monomials(vec![bc.value_a - slope * domain.a, slope])
}

/// Offsets for both unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Offsets {
    pub p: AffineOffset,
    pub q: AffineOffset,
}

impl Offsets {
    pub fn linear(spec: &ProblemSpec) -> Self {
        Self {
            p: build_offset(&spec.bc_p, spec.domain),
            q: build_offset(&spec.bc_q, spec.domain),
        }
    }

    pub fn get(&self, which: Unknown) -> &AffineOffset {
        match which {
            Unknown::P => &self.p,
            Unknown::Q => &self.q,
        }
    }

    /// Check that each offset interpolates its endpoint values.
    pub fn check(&self, spec: &ProblemSpec) -> Result<(), AssemblyError> {
        for which in [Unknown::P, Unknown::Q] {
            let bc = spec.bc(which);
            let theta = self.get(which);
            for (x, want) in [(spec.domain.a, bc.value_a), (spec.domain.b, bc.value_b)] {
                let got = theta.eval(x, 0);
                if (got - want).abs() > OFFSET_TOL * (1.0 + want.abs()) {
                    return Err(AssemblyError::OffsetMismatch {
                        unknown: which,
                        x,
                        got,
                        want,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Which block of the coupled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// p-equation, p-unknowns.
    A,
    /// p-equation, q-unknowns.
    H,
    /// q-equation, p-unknowns.
    D,
    /// q-equation, q-unknowns.
    C,
}

/// Matrix and linear load vector of the Galerkin system.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    m: usize,
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
}

impl AssembledSystem {
    /// Number of trial functions per unknown.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Entry of a block at (test `i`, trial `j`), both zero-based.
    pub fn block_entry(&self, block: Block, i: usize, j: usize) -> f64 {
        let (r, c) = match block {
            Block::A => (0, 0),
            Block::H => (0, self.m),
            Block::D => (self.m, 0),
            Block::C => (self.m, self.m),
        };
        self.matrix[(r + i, c + j)]
    }
}

/// Values of φ_j, φ_j', φ_j'' at every quadrature node.
struct NodeTable {
    /// `phi[j][d][k]`
    phi: Vec<[Vec<f64>; 3]>,
    /// φ_j'(a), φ_j'(b)
    end_slope: Vec<(f64, f64)>,
}

impl NodeTable {
    fn new(basis: &BernsteinBasis, nodes: &[f64]) -> Self {
        let (a, b) = basis.interval();
        let phi = par::map_range(basis.interior_len(), |j| {
            let i = j + 1;
            let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(nodes.len()));
            for &x in nodes {
                let v = basis.value_and_derivs(i, x);
                for d in 0..3 {
                    out[d].push(v[d]);
                }
            }
            out
        });
        let end_slope = (1..basis.degree())
            .map(|i| (basis.value_and_derivs(i, a)[1], basis.value_and_derivs(i, b)[1]))
            .collect();
        Self { phi, end_slope }
    }
}

/// Tabulated data for one equation.
struct EquationTable {
    /// `coef[c][k]` for c1..c6.
    coef: [Vec<f64>; 6],
    forcing: Vec<f64>,
}

/// Precomputed assembly state for one (problem, basis, rule, offsets).
pub struct Assembler<'a> {
    spec: &'a ProblemSpec,
    basis: BernsteinBasis,
    rule: &'a QuadratureRule,
    offsets: Offsets,
    nodes: NodeTable,
    /// `theta[u][d][k]`
    theta: [[Vec<f64>; 3]; 2],
    eqs: [EquationTable; 2],
}

fn index(u: Unknown) -> usize {
    match u {
        Unknown::P => 0,
        Unknown::Q => 1,
    }
}

fn other(u: Unknown) -> Unknown {
    match u {
        Unknown::P => Unknown::Q,
        Unknown::Q => Unknown::P,
    }
}

fn tabulate(
    expr: &crate::expr::Expr,
    field: &str,
    nodes: &[f64],
) -> Result<Vec<f64>, AssemblyError> {
    nodes
        .iter()
        .map(|&x| {
            let v = expr.eval_x(x).map_err(|source| AssemblyError::Eval {
                field: field.to_string(),
                source,
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(AssemblyError::NonFinite {
                    field: field.to_string(),
                    x,
                })
            }
        })
        .collect()
}

impl<'a> Assembler<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        basis: BernsteinBasis,
        rule: &'a QuadratureRule,
        offsets: Offsets,
    ) -> Result<Self, AssemblyError> {
        spec.validate()?;
        let (ra, rb) = rule.interval();
        if ra != spec.domain.a || rb != spec.domain.b {
            return Err(AssemblyError::RuleDomain(ra, rb));
        }
        offsets.check(spec)?;
        let pts = rule.points();
        let nodes = NodeTable::new(&basis, pts);
        let theta = [Unknown::P, Unknown::Q].map(|u| {
            let t = offsets.get(u);
            [0, 1, 2].map(|d| pts.iter().map(|&x| t.eval(x, d)).collect())
        });
        let eq_table = |u: Unknown| -> Result<EquationTable, AssemblyError> {
            let eq = spec.equation(u);
            let (prefix, fname) = match u {
                Unknown::P => ('a', "f"),
                Unknown::Q => ('b', "g"),
            };
            let coef = par::try_map_range(6, |c| {
                tabulate(&eq.coeffs[c], &format!("{prefix}{}", c + 1), pts)
            })?;
            let coef: [Vec<f64>; 6] = coef.try_into().expect("six coefficients");
            Ok(EquationTable {
                coef,
                forcing: tabulate(&eq.forcing, fname, pts)?,
            })
        };
        let eqs = [eq_table(Unknown::P)?, eq_table(Unknown::Q)?];
        Ok(Self {
            spec,
            basis,
            rule,
            offsets,
            nodes,
            theta,
            eqs,
        })
    }

    pub fn basis(&self) -> &BernsteinBasis {
        &self.basis
    }

    pub fn offsets(&self) -> &Offsets {
        &self.offsets
    }

    /// Matrix and load vector without the nonlinear terms.
    pub fn linear_system(&self) -> Result<AssembledSystem, AssemblyError> {
        let m = self.basis.interior_len();
        let rows = par::map_range(2 * m, |row| {
            let (u, i) = if row < m {
                (Unknown::P, row)
            } else {
                (Unknown::Q, row - m)
            };
            self.row(u, i)
        });
        let mut matrix = DenseMatrix::zeros(2 * m);
        let mut rhs = Vec::with_capacity(2 * m);
        for (r, (entries, load)) in rows.into_iter().enumerate() {
            for (c, v) in entries.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(AssemblyError::NonFinite {
                        field: format!("matrix entry ({r}, {c})"),
                        x: f64::NAN,
                    });
                }
                matrix[(r, c)] = v;
            }
            if !load.is_finite() {
                return Err(AssemblyError::NonFinite {
                    field: format!("load entry {r}"),
                    x: f64::NAN,
                });
            }
            rhs.push(load);
        }
        Ok(AssembledSystem { m, matrix, rhs })
    }

    /// One matrix row and load entry: equation of unknown `u`, test `φ_{i+1}`.
    fn row(&self, u: Unknown, i: usize) -> (Vec<f64>, f64) {
        let m = self.basis.interior_len();
        let w = self.rule.weights();
        let eq = &self.eqs[index(u)];
        let c = &eq.coef;
        let test = &self.nodes.phi[i];
        let own = index(u) * m;
        let cross = index(other(u)) * m;
        let mut entries = vec![0.0; 2 * m];

        for j in 0..m {
            let trial = &self.nodes.phi[j];
            let mut own_sum = 0.0;
            let mut cross_sum = 0.0;
            for k in 0..w.len() {
                let lower = c[0][k] * trial[2][k] + c[1][k] * trial[1][k] + c[2][k] * trial[0][k];
                own_sum += w[k] * (test[2][k] * trial[1][k] + lower * test[0][k]);
                let coupled = c[3][k] * trial[2][k] + c[4][k] * trial[1][k] + c[5][k] * trial[0][k];
                cross_sum += w[k] * coupled * test[0][k];
            }
            entries[own + j] = own_sum;
            entries[cross + j] = cross_sum;
        }

        let tu = &self.theta[index(u)];
        let tv = &self.theta[index(other(u))];
        let mut load = 0.0;
        for k in 0..w.len() {
            let lower = c[0][k] * tu[2][k] + c[1][k] * tu[1][k] + c[2][k] * tu[0][k];
            let coupled = c[3][k] * tv[2][k] + c[4][k] * tv[1][k] + c[5][k] * tv[0][k];
            load += w[k] * ((eq.forcing[k] - lower - coupled) * test[0][k] - test[2][k] * tu[1][k]);
        }

        let bc = self.spec.bc(u);
        let theta = self.offsets.get(u);
        let (slope_a, slope_b) = self.nodes.end_slope[i];
        // prescribed derivative
        load += match bc.deriv.end {
            End::B => slope_b * bc.deriv.value,
            End::A => -slope_a * bc.deriv.value,
        };
        // natural end: u'(e) = θ'(e) + Σ c_j φ_j'(e)
        let (sign, x_end, at_b) = match bc.natural_end() {
            End::B => (-1.0, self.spec.domain.b, true),
            End::A => (1.0, self.spec.domain.a, false),
        };
        let pick = |s: &(f64, f64)| if at_b { s.1 } else { s.0 };
        let slope_i = pick(&self.nodes.end_slope[i]);
        for j in 0..m {
            entries[own + j] += sign * slope_i * pick(&self.nodes.end_slope[j]);
        }
        load -= sign * slope_i * theta.eval(x_end, 1);

        (entries, load)
    }

    /// Pointwise state of the trial functions at every node.
    fn node_states(&self, coeffs_p: &[f64], coeffs_q: &[f64]) -> Vec<PointState> {
        let pts = self.rule.points();
        par::map_range(pts.len(), |k| {
            let field = |u: usize, coeffs: &[f64], d: usize| {
                self.theta[u][d][k]
                    + coeffs
                        .iter()
                        .zip(&self.nodes.phi)
                        .map(|(c, phi)| c * phi[d][k])
                        .sum::<f64>()
            };
            PointState {
                x: pts[k],
                p: field(0, coeffs_p, 0),
                dp: field(0, coeffs_p, 1),
                d2p: field(0, coeffs_p, 2),
                q: field(1, coeffs_q, 0),
                dq: field(1, coeffs_q, 1),
                d2q: field(1, coeffs_q, 2),
            }
        })
    }

    /// `-∫ M_e(state) φ_i` for both equations, stacked `[p-rows, q-rows]`.
    pub fn nonlinear_rhs(&self, coeffs_p: &[f64], coeffs_q: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let m = self.basis.interior_len();
        let mut out = vec![0.0; 2 * m];
        if self.spec.is_linear() {
            return Ok(out);
        }
        let states = self.node_states(coeffs_p, coeffs_q);
        let w = self.rule.weights();
        for u in [Unknown::P, Unknown::Q] {
            let Some(term) = &self.spec.equation(u).nonlinear else {
                continue;
            };
            let field = match u {
                Unknown::P => "nonlinear term of the p-equation",
                Unknown::Q => "nonlinear term of the q-equation",
            };
            let values = par::map_slice(&states, |s| term.evaluate(s));
            let mut vals = Vec::with_capacity(values.len());
            for (v, s) in values.into_iter().zip(&states) {
                let v = v.map_err(|source| AssemblyError::Eval {
                    field: field.to_string(),
                    source,
                })?;
                if !v.is_finite() {
                    return Err(AssemblyError::NonFinite {
                        field: field.to_string(),
                        x: s.x,
                    });
                }
                vals.push(v);
            }
            let base = index(u) * m;
            for (i, phi) in self.nodes.phi.iter().enumerate() {
                let integral: f64 = (0..w.len()).map(|k| w[k] * vals[k] * phi[0][k]).sum();
                out[base + i] = -integral;
            }
        }
        Ok(out)
    }

    /// Weighted residuals `K c - rhs - N(c)` with the nonlinear term taken at
    /// `c` itself.
    pub fn residual(&self, system: &AssembledSystem, coeffs_p: &[f64], coeffs_q: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let c: Vec<f64> = coeffs_p.iter().chain(coeffs_q).copied().collect();
        let kc = system.matrix.mul_vec(&c);
        let nl = self.nonlinear_rhs(coeffs_p, coeffs_q)?;
        Ok(kc
            .iter()
            .zip(&system.rhs)
            .zip(&nl)
            .map(|((k, r), n)| k - r - n)
            .collect())
    }
}

/// Linear Galerkin system with linear-interpolant offsets.
pub fn assemble_linear(
    spec: &ProblemSpec,
    basis: &BernsteinBasis,
    rule: &QuadratureRule,
) -> Result<AssembledSystem, AssemblyError> {
    Assembler::new(spec, *basis, rule, Offsets::linear(spec))?.linear_system()
}

/// Linear Galerkin system with caller-chosen offsets.
pub fn assemble_linear_with_offsets(
    spec: &ProblemSpec,
    basis: &BernsteinBasis,
    rule: &QuadratureRule,
    offsets: Offsets,
) -> Result<AssembledSystem, AssemblyError> {
    Assembler::new(spec, *basis, rule, offsets)?.linear_system()
}

/// Lagged nonlinear load `-∫ M_e(p̃, q̃) φ_i` evaluated at `current`.
pub fn assemble_nonlinear_rhs(
    spec: &ProblemSpec,
    basis: &BernsteinBasis,
    rule: &QuadratureRule,
    current: &Solution,
) -> Result<Vec<f64>, AssemblyError> {
    check_degree(basis, current)?;
    Assembler::new(spec, *basis, rule, current.offsets.clone())?
        .nonlinear_rhs(&current.coeffs_p, &current.coeffs_q)
}

/// Largest absolute weighted residual over both equations, with the
/// nonlinear terms evaluated at `sol` itself.
pub fn residual_norm(
    spec: &ProblemSpec,
    sol: &Solution,
    basis: &BernsteinBasis,
    rule: &QuadratureRule,
) -> Result<f64, AssemblyError> {
    check_degree(basis, sol)?;
    let asm = Assembler::new(spec, *basis, rule, sol.offsets.clone())?;
    let system = asm.linear_system()?;
    let r = asm.residual(&system, &sol.coeffs_p, &sol.coeffs_q)?;
    Ok(r.iter().fold(0.0, |m, v| m.max(v.abs())))
}

fn check_degree(basis: &BernsteinBasis, sol: &Solution) -> Result<(), AssemblyError> {
    if basis.degree() != sol.basis.degree() || sol.coeffs_p.len() != basis.interior_len() {
        return Err(AssemblyError::DegreeMismatch {
            basis: basis.degree(),
            solution: sol.basis.degree(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::problem::Equation;
    use crate::quadrature::gauss_legendre;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn example1() -> ProblemSpec {
        let mut eq_p = Equation::default();
        eq_p.coeffs[1] = e("2");
        eq_p.coeffs[5] = e("x");
        eq_p.forcing = e("x^5 - x^3 - 18*x^2 + 12*x - 18");
        let eq_q = Equation {
            forcing: e("-36*x^3 + 12*x^2 + 30*x - 2"),
            nonlinear: Some(e("(1/6)*d2p*d2q")),
            ..Equation::default()
        };
        let bc = BoundaryData::new(0.0, 0.0, End::A, 0.0);
        ProblemSpec {
            domain: Domain::unit(),
            eq_p,
            eq_q,
            bc_p: bc,
            bc_q: bc,
        }
    }

    fn zero_problem() -> ProblemSpec {
        let bc = BoundaryData::new(0.0, 0.0, End::A, 0.0);
        ProblemSpec {
            domain: Domain::unit(),
            eq_p: Equation::default(),
            eq_q: Equation::default(),
            bc_p: bc,
            bc_q: bc,
        }
    }

    #[test]
    fn offsets_interpolate_endpoints() {
        let d = Domain::unit();
        let t = build_offset(&BoundaryData::new(0.0, 0.0, End::A, 0.0), d);
        assert_eq!(t.eval(0.3, 0), 0.0);
        let t = build_offset(&BoundaryData::new(0.0, 1.0, End::A, 0.0), d);
        assert_eq!(t.eval(0.3, 0), 0.3);
        assert_eq!(t.eval(0.3, 1), 1.0);
        let t = build_offset(&BoundaryData::new(1.0, 0.0, End::A, 0.0), d);
        assert!((t.eval(0.25, 0) - 0.75).abs() < 1e-15);
        let d = Domain::new(2.0, 5.0).unwrap();
        let t = build_offset(&BoundaryData::new(-1.0, 4.0, End::B, 0.0), d);
        assert!((t.eval(2.0, 0) + 1.0).abs() < 1e-13);
        assert!((t.eval(5.0, 0) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn offset_derivatives() {
        // 1 + 2x + 3x^2
        let t = AffineOffset::from_monomials(vec![1.0, 2.0, 3.0]);
        assert_eq!(t.eval(2.0, 0), 17.0);
        assert_eq!(t.eval(2.0, 1), 14.0);
        assert_eq!(t.eval(2.0, 2), 6.0);
        assert_eq!(t.eval(2.0, 3), 0.0);
    }

    #[test]
    fn example1_degree3_entries() {
        let spec = example1();
        let basis = BernsteinBasis::new(3, 0.0, 1.0).unwrap();
        let rule = gauss_legendre(24, 0.0, 1.0).unwrap();
        let sys = assemble_linear(&spec, &basis, &rule).unwrap();
        assert!((sys.block_entry(Block::A, 0, 0) + 4.5).abs() < 1e-12);
        assert!((sys.block_entry(Block::H, 0, 0) - 9.0 / 280.0).abs() < 1e-14);
        // decoupled q-equation has no p-block
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(sys.block_entry(Block::D, i, j), 0.0);
            }
        }
    }

    #[test]
    fn zero_problem_has_zero_load() {
        let spec = zero_problem();
        let basis = BernsteinBasis::new(5, 0.0, 1.0).unwrap();
        let rule = gauss_legendre(24, 0.0, 1.0).unwrap();
        let sys = assemble_linear(&spec, &basis, &rule).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rule_must_match_domain() {
        let spec = zero_problem();
        let basis = BernsteinBasis::new(3, 0.0, 1.0).unwrap();
        let rule = gauss_legendre(8, 0.0, 2.0).unwrap();
        assert!(matches!(
            assemble_linear(&spec, &basis, &rule),
            Err(AssemblyError::RuleDomain(..))
        ));
    }

    #[test]
    fn non_finite_coefficient_is_reported() {
        let mut spec = zero_problem();
        spec.eq_p.coeffs[2] = e("1/(x - x)");
        let basis = BernsteinBasis::new(3, 0.0, 1.0).unwrap();
        let rule = gauss_legendre(8, 0.0, 1.0).unwrap();
        let err = assemble_linear(&spec, &basis, &rule).unwrap_err();
        assert!(matches!(err, AssemblyError::Eval { ref field, .. } if field == "a3"));
        spec.eq_p.coeffs[2] = e("exp(1000*x)");
        let err = assemble_linear(&spec, &basis, &rule).unwrap_err();
        assert!(matches!(err, AssemblyError::NonFinite { ref field, .. } if field == "a3"));
    }

    #[test]
    fn mismatched_offset_is_rejected() {
        let spec = example1();
        let basis = BernsteinBasis::new(3, 0.0, 1.0).unwrap();
        let rule = gauss_legendre(8, 0.0, 1.0).unwrap();
        let offsets = Offsets {
            p: AffineOffset::from_monomials(vec![0.0, 1.0]),
            q: AffineOffset::from_monomials(vec![0.0]),
        };
        assert!(matches!(
            assemble_linear_with_offsets(&spec, &basis, &rule, offsets),
            Err(AssemblyError::OffsetMismatch {
                unknown: Unknown::P,
                ..
            })
        ));
    }
}
