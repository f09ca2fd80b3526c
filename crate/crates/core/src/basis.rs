//! Bernstein polynomials on an arbitrary interval `[a, b]`.
//!
//! `φ_{i,n}(x) = C(n,i) (x-a)^i (b-x)^(n-i) / (b-a)^n` for `i = 0..=n`.
//! Only the interior members `1..=n-1` vanish at both endpoints, so those are
//! the trial functions used by the Galerkin assembly.

use thiserror::Error;

/// Largest supported degree. Beyond this the Galerkin systems are too badly
/// conditioned to be useful in double precision.
pub const MAX_DEGREE: usize = 30;

/// Smallest supported degree (two interior functions).
pub const MIN_DEGREE: usize = 3;

const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("degree {0} is outside the supported range {MIN_DEGREE}..={MAX_DEGREE}")]
    Degree(usize),
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    Interval { a: f64, b: f64 },
    #[error("x = {x} lies outside [{a}, {b}]")]
    Domain { x: f64, a: f64, b: f64 },
    #[error("derivative order {0} is not supported (expected 1, 2 or 3)")]
    Order(usize),
}

/// Bernstein basis of a fixed degree on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinBasis {
    degree: usize,
    a: f64,
    b: f64,
}

impl BernsteinBasis {
    pub fn new(degree: usize, a: f64, b: f64) -> Result<Self, BasisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(BasisError::Degree(degree));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(BasisError::Interval { a, b });
        }
        Ok(Self { degree, a, b })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Number of interior trial functions, `n - 1`.
    pub fn interior_len(&self) -> usize {
        self.degree - 1
    }

    /// Indices of the functions that vanish at both ends: `[1, ..., n-1]`.
    pub fn interior_indices(&self) -> Vec<usize> {
        (1..self.degree).collect()
    }

    /// Value of `φ_{i,n}(x)`. Indices above `n` give zero.
    pub fn eval(&self, i: usize, x: f64) -> Result<f64, BasisError> {
        let t = self.local(x)?;
        Ok(bernstein_unit(self.degree, i as isize, t))
    }

    /// Exact derivative of order 1, 2 or 3 of `φ_{i,n}` at `x`.
    pub fn eval_deriv(&self, i: usize, x: f64, order: usize) -> Result<f64, BasisError> {
        if !(1..=3).contains(&order) {
            return Err(BasisError::Order(order));
        }
        let t = self.local(x)?;
        Ok(self.deriv_at_unit(i, t, order))
    }

    /// Value and first two derivatives of `φ_i` at `x`, without domain
    /// checking. Callers guarantee `x` is a quadrature or grid point.
    pub(crate) fn value_and_derivs(&self, i: usize, x: f64) -> [f64; 3] {
        let t = ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        [
            bernstein_unit(self.degree, i as isize, t),
            self.deriv_at_unit(i, t, 1),
            self.deriv_at_unit(i, t, 2),
        ]
    }

    // d^k/dx^k φ_{i,n} = n!/(n-k)! / (b-a)^k * Σ_j (-1)^j C(k,j) φ_{i-k+j, n-k}
    fn deriv_at_unit(&self, i: usize, t: f64, order: usize) -> f64 {
        let n = self.degree;
        if order > n {
            return 0.0;
        }
        let falling: f64 = ((n - order + 1)..=n).map(|v| v as f64).product();
        let scale = falling / (self.b - self.a).powi(order as i32);
        let mut sum = 0.0;
        for j in 0..=order {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let idx = i as isize - order as isize + j as isize;
            sum += sign * binomial(order, j) * bernstein_unit(n - order, idx, t);
        }
        scale * sum
    }

    fn local(&self, x: f64) -> Result<f64, BasisError> {
        let tol = CLAMP_TOL * (self.b - self.a).max(1.0);
        if !x.is_finite() || x < self.a - tol || x > self.b + tol {
            return Err(BasisError::Domain {
                x,
                a: self.a,
                b: self.b,
            });
        }
        Ok(((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0))
    }
}

/// Binomial coefficient via the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

fn bernstein_unit(n: usize, i: isize, t: f64) -> f64 {
    if i < 0 || i as usize > n {
        return 0.0;
    }
    let i = i as usize;
    binomial(n, i) * t.powi(i as i32) * (1.0 - t).powi((n - i) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> BernsteinBasis {
        BernsteinBasis::new(n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn values_from_explicit_formulas() {
        assert!((unit(3).eval(2, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(unit(4).eval(0, 0.0).unwrap(), 1.0);
        // 10 * 0.3^3 * 0.7^2
        assert!((unit(5).eval(3, 0.3).unwrap() - 0.1323).abs() < 1e-15);
        assert_eq!(unit(5).eval(6, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        assert!((unit(3).eval_deriv(1, 0.0, 1).unwrap() - 3.0).abs() < 1e-14);
        assert!(unit(3).eval_deriv(1, 1.0, 1).unwrap().abs() < 1e-14);
        // φ_2 = 6x^2(1-x)^2, φ_2'' = 6(2 - 12x + 12x^2)
        assert!((unit(4).eval_deriv(2, 0.5, 2).unwrap() + 6.0).abs() < 1e-13);
        // φ_1 = 3x(1-x)^2 has φ_1''' = 18
        assert!((unit(3).eval_deriv(1, 0.2, 3).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn interior_indices_match_degree() {
        assert_eq!(unit(3).interior_indices(), vec![1, 2]);
        assert_eq!(unit(5).interior_indices(), vec![1, 2, 3, 4]);
        assert_eq!(unit(3).interior_indices().len(), unit(3).interior_len());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(BernsteinBasis::new(2, 0.0, 1.0), Err(BasisError::Degree(2)));
        assert_eq!(BernsteinBasis::new(31, 0.0, 1.0), Err(BasisError::Degree(31)));
        assert!(matches!(
            BernsteinBasis::new(4, 1.0, 1.0),
            Err(BasisError::Interval { .. })
        ));
        assert!(matches!(unit(4).eval(1, 1.5), Err(BasisError::Domain { .. })));
        assert_eq!(unit(4).eval_deriv(1, 0.5, 4), Err(BasisError::Order(4)));
        assert_eq!(unit(4).eval_deriv(1, 0.5, 0), Err(BasisError::Order(0)));
    }

    #[test]
    fn clamps_round_off_outside_interval() {
        let b = unit(4);
        assert_eq!(b.eval(0, -1e-13).unwrap(), 1.0);
        assert_eq!(b.eval(4, 1.0 + 1e-13).unwrap(), 1.0);
    }

    #[test]
    fn scaled_interval_derivative() {
        // On [0, 2], φ_{1,3} = 3 (x/2) (1 - x/2)^2 so φ' (0) = 3/2.
        let b = BernsteinBasis::new(3, 0.0, 2.0).unwrap();
        assert!((b.eval_deriv(1, 0.0, 1).unwrap() - 1.5).abs() < 1e-14);
    }
}
