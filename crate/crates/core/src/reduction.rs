//! Sixth-order problems rewritten as a coupled pair of third-order problems.
//!
//! With `q = p'''`,
//!
//! ```text
//! p^(6) + c5 p^(5) + c4 p^(4) + c3 p''' + c2 p'' + c1 p' + c0 p + M = r
//! ```
//!
//! becomes `p''' - q = 0` together with
//! `q''' + c5 q'' + c4 q' + c3 q + c2 p'' + c1 p' + c0 p + M = r`.
//!
//! Boundary data for the reduced pair is supplied by the caller: conditions
//! on `p''` or higher do not translate into conditions on `q` in general.

use thiserror::Error;

use crate::expr::{EvalError, Expr, PointState};
use crate::problem::{BoundaryData, Domain, Equation, ProblemSpec, SpecError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("the nonlinear term may only use x, p, dp and d2p, but uses `{0}`")]
    NonlinearUsesQ(&'static str),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SixthOrderSpec {
    pub domain: Domain,
    /// `[c0..c5]`, the coefficients of `p, p', ..., p^(5)`.
    pub coeffs: [Expr; 6],
    pub forcing: Expr,
    pub nonlinear: Option<Expr>,
    pub bc_p: BoundaryData,
    pub bc_q: BoundaryData,
}

pub fn reduce(spec6: &SixthOrderSpec) -> Result<ProblemSpec, ReductionError> {
    if let Some(m) = &spec6.nonlinear {
        if let Some(v) = m.free_vars().into_iter().find(|v| v.is_q()) {
            return Err(ReductionError::NonlinearUsesQ(v.name()));
        }
    }
    let [c0, c1, c2, c3, c4, c5] = spec6.coeffs.clone();

    let mut eq_p = Equation::default();
    eq_p.coeffs[5] = Expr::constant(-1.0);

    let eq_q = Equation {
        // own q'', q', q then cross p'', p', p
        coeffs: [c5, c4, c3, c2, c1, c0],
        forcing: spec6.forcing.clone(),
        nonlinear: spec6.nonlinear.clone(),
    };

    let spec = ProblemSpec {
        domain: spec6.domain,
        eq_p,
        eq_q,
        bc_p: spec6.bc_p,
        bc_q: spec6.bc_q,
    };
    spec.validate()?;
    Ok(spec)
}

/// Residual of the sixth-order equation for a function given by its first
/// six derivatives `[u, u', ..., u^(6)]` at `x`.
pub fn sixth_order_residual(spec6: &SixthOrderSpec, x: f64, derivs: &[f64; 7]) -> Result<f64, EvalError> {
    let mut r = derivs[6];
    for (k, c) in spec6.coeffs.iter().enumerate() {
        r += c.eval_x(x)? * derivs[k];
    }
    if let Some(m) = &spec6.nonlinear {
        let s = PointState {
            x,
            p: derivs[0],
            dp: derivs[1],
            d2p: derivs[2],
            ..Default::default()
        };
        r += m.evaluate(&s)?;
    }
    Ok(r - spec6.forcing.eval_x(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::End;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn base() -> SixthOrderSpec {
        SixthOrderSpec {
            domain: Domain::unit(),
            coeffs: std::array::from_fn(|_| Expr::zero()),
            forcing: Expr::zero(),
            nonlinear: None,
            bc_p: BoundaryData::new(0.0, 0.0, End::A, 0.0),
            bc_q: BoundaryData::new(0.0, 0.0, End::A, 0.0),
        }
    }

    #[test]
    fn linear_example_maps_coefficients() {
        let mut s6 = base();
        s6.coeffs[0] = e("-1");
        s6.forcing = e("-6*exp(x)");
        let spec = reduce(&s6).unwrap();
        assert_eq!(spec.eq_p.coeffs[5].eval_x(0.3).unwrap(), -1.0);
        assert!(spec.eq_p.coeffs[..5].iter().all(Expr::is_zero));
        assert!(spec.eq_p.forcing.is_zero() && spec.eq_p.nonlinear.is_none());
        assert_eq!(spec.eq_q.coeffs[5], e("-1"));
        assert_eq!(spec.eq_q.forcing, e("-6*exp(x)"));
        assert!(spec.eq_q.nonlinear.is_none());
    }

    #[test]
    fn nonlinear_example_moves_term_to_q_equation() {
        let mut s6 = base();
        s6.nonlinear = Some(e("-exp(-x)*p^2"));
        let spec = reduce(&s6).unwrap();
        assert_eq!(spec.eq_q.nonlinear, Some(e("-exp(-x)*p^2")));
        assert!(spec.eq_q.forcing.is_zero());
        assert!(spec.eq_q.coeffs.iter().all(Expr::is_zero));
    }

    #[test]
    fn all_zero_input_decouples() {
        let spec = reduce(&base()).unwrap();
        assert!(spec.eq_q.coeffs.iter().all(Expr::is_zero));
        assert!(!spec.eq_p.coeffs[5].is_zero());
    }

    #[test]
    fn q_dependence_is_rejected() {
        let mut s6 = base();
        s6.nonlinear = Some(e("p*dq"));
        assert_eq!(reduce(&s6), Err(ReductionError::NonlinearUsesQ("dq")));
    }

    #[test]
    fn coefficient_with_unknowns_is_rejected() {
        let mut s6 = base();
        s6.coeffs[2] = e("p");
        assert!(matches!(reduce(&s6), Err(ReductionError::Spec(_))));
    }
}
