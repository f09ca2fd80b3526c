//! Pointwise error tables on the nine interior points `a + k(b-a)/10`.

use std::fmt::Write as _;

use thiserror::Error;

use super::file::ExactSolution;
use crate::basis::BasisError;
use crate::expr::{EvalError, Expr};
use crate::problem::{Domain, Unknown};
use crate::solver::{DegreeStep, Solution};

pub const CSV_HEADER: &str = "x,p_exact,p_approx,p_abs_err,q_exact,q_approx,q_abs_err";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("exact solution: {0}")]
    Exact(#[from] EvalError),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// `a + k(b-a)/10` for `k = 1..9`.
pub fn table_points(domain: Domain) -> Vec<f64> {
    (1..10).map(|k| domain.a + domain.width() * k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub exact: Option<f64>,
    pub approx: f64,
}

impl Cell {
    pub fn abs_err(&self) -> Option<f64> {
        self.exact.map(|e| (e - self.approx).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub x: f64,
    pub p: Cell,
    pub q: Cell,
}

impl ErrorRow {
    pub fn cell(&self, which: Unknown) -> &Cell {
        match which {
            Unknown::P => &self.p,
            Unknown::Q => &self.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Evaluate `sol` (and the exact solution, if known) at `xs`.
    pub fn at(sol: &Solution, exact: Option<&ExactSolution>, xs: &[f64]) -> Result<Self, ReportError> {
        let exact_at = |e: Option<&Expr>, x: f64| e.map(|e| e.eval_x(x)).transpose();
        let rows = xs
            .iter()
            .map(|&x| {
                Ok(ErrorRow {
                    x,
                    p: Cell {
                        exact: exact_at(exact.and_then(|e| e.p.as_ref()), x)?,
                        approx: sol.eval(x, Unknown::P, 0)?,
                    },
                    q: Cell {
                        exact: exact_at(exact.and_then(|e| e.q.as_ref()), x)?,
                        approx: sol.eval(x, Unknown::Q, 0)?,
                    },
                })
            })
            .collect::<Result<_, ReportError>>()?;
        Ok(Self { rows })
    }

    /// The standard nine-point table.
    pub fn build(sol: &Solution, domain: Domain, exact: Option<&ExactSolution>) -> Result<Self, ReportError> {
        Self::at(sol, exact, &table_points(domain))
    }

    /// Largest absolute error, if the exact solution is known.
    pub fn max_error(&self, which: Unknown) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.cell(which).abs_err())
            .try_fold(0.0, |m: f64, e| e.map(|e| m.max(e)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{},{:.16e},{},{},{:.16e},{}",
                r.x,
                opt(r.p.exact),
                r.p.approx,
                opt(r.p.abs_err()),
                opt(r.q.exact),
                r.q.approx,
                opt(r.q.abs_err()),
            );
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). Error columns are recomputed.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(ReportError::Csv {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| ReportError::Csv {
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(err(format!("expected 7 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
            let opt = |s: &str| if s.trim().is_empty() { Ok(None) } else { num(s).map(Some) };
            rows.push(ErrorRow {
                x: num(fields[0])?,
                p: Cell {
                    exact: opt(fields[1])?,
                    approx: num(fields[2])?,
                },
                q: Cell {
                    exact: opt(fields[4])?,
                    approx: num(fields[5])?,
                },
            });
        }
        Ok(Self { rows })
    }

    /// Fixed-width text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5}  {:>15} {:>15} {:>12}  {:>15} {:>15} {:>12}",
            "x", "p exact", "p approx", "|p err|", "q exact", "q approx", "|q err|"
        );
        let opt = |v: Option<f64>, w: usize, prec: usize, sci: bool| match v {
            Some(v) if sci => format!("{v:>w$.prec$e}"),
            Some(v) => format!("{v:>w$.prec$}"),
            None => format!("{:>w$}", "-"),
        };
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>5.3}  {} {:>15.10} {}  {} {:>15.10} {}",
                r.x,
                opt(r.p.exact, 15, 10, false),
                r.p.approx,
                opt(r.p.abs_err(), 12, 6, true),
                opt(r.q.exact, 15, 10, false),
                r.q.approx,
                opt(r.q.abs_err(), 12, 6, true),
            );
        }
        if let (Some(mp), Some(mq)) = (self.max_error(Unknown::P), self.max_error(Unknown::Q)) {
            let _ = writeln!(out, "max |p err| = {mp:.6e}, max |q err| = {mq:.6e}");
        }
        out
    }
}

/// One line per degree of a sweep.
pub fn history_text(history: &[DegreeStep]) -> String {
    let mut out = format!("{:>6} {:>10} {:>14} {:>9}\n", "degree", "iterations", "distance", "picard");
    for s in history {
        let d = s.distance.map(|d| format!("{d:.6e}")).unwrap_or_else(|| "-".into());
        let status = if s.picard_converged { "ok" } else { "open" };
        let _ = writeln!(out, "{:>6} {:>10} {:>14} {:>9}", s.degree, s.iterations, d, status);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ErrorTable {
        ErrorTable {
            rows: vec![
                ErrorRow {
                    x: 0.1,
                    p: Cell {
                        exact: Some(0.25),
                        approx: 0.2,
                    },
                    q: Cell {
                        exact: Some(-1.0),
                        approx: -1.5,
                    },
                },
                ErrorRow {
                    x: 0.2,
                    p: Cell {
                        exact: Some(1.0 / 3.0),
                        approx: 0.3,
                    },
                    q: Cell {
                        exact: Some(2.0),
                        approx: 2.0,
                    },
                },
            ],
        }
    }

    #[test]
    fn points_are_tenths() {
        let pts = table_points(Domain::new(1.0, 3.0).unwrap());
        assert_eq!(pts.len(), 9);
        assert!((pts[0] - 1.2).abs() < 1e-15);
        assert!((pts[8] - 2.8).abs() < 1e-15);
    }

    #[test]
    fn max_error_over_rows() {
        let t = table();
        assert!((t.max_error(Unknown::P).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(t.max_error(Unknown::Q), Some(0.5));
    }

    #[test]
    fn csv_layout() {
        let csv = table().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first = lines.next().unwrap();
        assert!(first.starts_with("1.0000000000000001e-1,2.5000000000000000e-1,"));
        assert_eq!(first.split(',').count(), 7);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table();
        assert_eq!(ErrorTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn blank_exact_fields() {
        let mut t = table();
        for r in &mut t.rows {
            r.p.exact = None;
            r.q.exact = None;
        }
        let csv = t.to_csv();
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(t.max_error(Unknown::P), None);
        assert_eq!(ErrorTable::from_csv(&csv).unwrap(), t);
    }
}
