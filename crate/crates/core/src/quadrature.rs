//! Gauss-Legendre rules mapped to `[a, b]`.

use std::f64::consts::PI;

use thiserror::Error;

/// Highest supported number of nodes.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature order {0} is not supported (expected 1..={MAX_ORDER})")]
    Order(usize),
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    Interval { a: f64, b: f64 },
}

/// Nodes and weights of a Gauss-Legendre rule on a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl QuadratureRule {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// `Σ w_k f(x_k)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Like [`integrate`](Self::integrate), stopping at the first node where
    /// `f` fails.
    pub fn try_integrate<E, F>(&self, f: F) -> Result<f64, E>
    where
        F: Fn(f64) -> Result<f64, E>,
    {
        let mut sum = 0.0;
        for (&x, &w) in self.points.iter().zip(&self.weights) {
            sum += w * f(x)?;
        }
        Ok(sum)
    }
}

/// Default rule size for trial degree `n`: `max(24, 2n)`.
pub fn default_order(degree: usize) -> usize {
    (2 * degree).max(24)
}

/// The `g`-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(g: usize, a: f64, b: f64) -> Result<QuadratureRule, QuadratureError> {
    if g == 0 || g > MAX_ORDER {
        return Err(QuadratureError::Order(g));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::Interval { a, b });
    }

    let (ref_nodes, ref_weights) = reference_rule(g);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let points = ref_nodes.iter().map(|&t| mid + half * t).collect();
    let weights = ref_weights.iter().map(|&w| half * w).collect();
    Ok(QuadratureRule {
        points,
        weights,
        a,
        b,
    })
}

/// Nodes (ascending) and weights on `[-1, 1]`.
fn reference_rule(g: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; g];
    let mut weights = vec![0.0; g];
    let half = g.div_ceil(2);
    for k in 0..half {
        // cosine guess for the k-th largest root
        let mut x = (PI * (k as f64 + 0.75) / (g as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(g, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(g, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[g - 1 - k] = x;
        nodes[k] = -x;
        weights[g - 1 - k] = w;
        weights[k] = w;
    }
    if g % 2 == 1 {
        nodes[g / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
