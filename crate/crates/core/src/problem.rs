//! The canonical coupled system and its boundary data.
//!
//! ```text
//! p''' + a1 p'' + a2 p' + a3 p + a4 q'' + a5 q' + a6 q + M1 = f
//! q''' + b1 q'' + b2 q' + b3 q + b4 p'' + b5 p' + b6 p + M2 = g
//! ```
//!
//! Each unknown carries both endpoint values and one endpoint derivative.

use thiserror::Error;

use crate::expr::{Expr, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("invalid domain [{a}, {b}]: need finite a < b")]
    Domain { a: f64, b: f64 },
    #[error("{field} must depend on x only, but uses `{var}`")]
    NotAFunctionOfX { field: String, var: &'static str },
    #[error("boundary value {field} = {value} is not finite")]
    Boundary { field: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self, SpecError> {
        let d = Domain { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.a.is_finite() && self.b.is_finite() && self.a < self.b {
            Ok(())
        } else {
            Err(SpecError::Domain {
                a: self.a,
                b: self.b,
            })
        }
    }

    pub fn unit() -> Self {
        Domain { a: 0.0, b: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// `n` equally spaced points including both ends.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.a],
            _ => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.b
                    } else {
                        self.a + self.width() * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    A,
    B,
}

/// The one prescribed endpoint derivative of an unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCondition {
    pub end: End,
    pub value: f64,
}

/// Three boundary conditions for one unknown: both endpoint values and the
/// first derivative at one end. The derivative at the other end is natural.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub value_a: f64,
    pub value_b: f64,
    pub deriv: DerivativeCondition,
}

impl BoundaryData {
    pub fn new(value_a: f64, value_b: f64, end: End, deriv_value: f64) -> Self {
        Self {
            value_a,
            value_b,
            deriv: DerivativeCondition {
                end,
                value: deriv_value,
            },
        }
    }

    /// The end where the derivative is not prescribed.
    pub fn natural_end(&self) -> End {
        match self.deriv.end {
            End::A => End::B,
            End::B => End::A,
        }
    }

    fn validate(&self, name: &str) -> Result<(), SpecError> {
        let fields = [
            ("value_a", self.value_a),
            ("value_b", self.value_b),
            ("deriv", self.deriv.value),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(SpecError::Boundary {
                    field: format!("{name}.{field}"),
                    value,
                });
            }
        }
        Ok(())
    }
}

/// One row of the coupled system, seen from its own unknown `u` and the
/// cross unknown `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    /// `[c1..c6]`: own `u'', u', u` then cross `v'', v', v`.
    pub coeffs: [Expr; 6],
    pub forcing: Expr,
    pub nonlinear: Option<Expr>,
}

impl Default for Equation {
    fn default() -> Self {
        Self {
            coeffs: std::array::from_fn(|_| Expr::zero()),
            forcing: Expr::zero(),
            nonlinear: None,
        }
    }
}

impl Equation {
    fn validate(&self, prefix: char, forcing_name: &str) -> Result<(), SpecError> {
        for (k, c) in self.coeffs.iter().enumerate() {
            only_x(c, &format!("{prefix}{}", k + 1))?;
        }
        only_x(&self.forcing, forcing_name)
    }
}

fn only_x(e: &Expr, field: &str) -> Result<(), SpecError> {
    match e.free_vars().into_iter().find(|v| *v != Var::X) {
        Some(v) => Err(SpecError::NotAFunctionOfX {
            field: field.to_string(),
            var: v.name(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    P,
    Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub eq_p: Equation,
    pub eq_q: Equation,
    pub bc_p: BoundaryData,
    pub bc_q: BoundaryData,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        self.domain.validate()?;
        self.eq_p.validate('a', "f")?;
        self.eq_q.validate('b', "g")?;
        self.bc_p.validate("bc.p")?;
        self.bc_q.validate("bc.q")
    }

    pub fn equation(&self, which: Unknown) -> &Equation {
        match which {
            Unknown::P => &self.eq_p,
            Unknown::Q => &self.eq_q,
        }
    }

    pub fn bc(&self, which: Unknown) -> &BoundaryData {
        match which {
            Unknown::P => &self.bc_p,
            Unknown::Q => &self.bc_q,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.eq_p.nonlinear.is_none() && self.eq_q.nonlinear.is_none()
    }
}
