//! Sectioned key-value problem files.
//!
//! ```text
//! [domain]
//! a = 0
//! b = 1
//!
//! [equation.p]          # a1..a6, f, nonlinear (missing entries are zero)
//! a2 = 2
//! a6 = x
//! f = x^5 - x^3 - 18*x^2 + 12*x - 18
//!
//! [equation.q]          # b1..b6, g, nonlinear
//! g = -36*x^3 + 12*x^2 + 30*x - 2
//! nonlinear = (1/6)*d2p*d2q
//!
//! [bc.p]                # value_a, value_b and exactly one of deriv_a/deriv_b
//! value_a = 0
//! value_b = 0
//! deriv_a = 0
//!
//! [bc.q]
//! ...
//!
//! [exact]               # optional
//! p = 3*x^2 - 3*x^3
//! q = x^4 - x^2
//! ```
//!
//! A sixth-order problem uses a single `[equation]` section with `c0..c5`,
//! `r` and `nonlinear`, plus `[bc.p]` and `[bc.q]` for the reduced pair.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::expr::{Expr, ParseError};
use crate::problem::{BoundaryData, Domain, End, Equation, ProblemSpec, SpecError};
use crate::reduction::{self, ReductionError, SixthOrderSpec};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { name: String, line: usize },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("missing [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("[{section}] {key}: {source}")]
    Expr {
        section: String,
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("[{section}] {key}: {message}")]
    Invalid {
        section: String,
        key: String,
        message: String,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// Known exact solutions, used for error reporting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExactSolution {
    pub p: Option<Expr>,
    pub q: Option<Expr>,
}

/// A coupled third-order problem as loaded from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub spec: ProblemSpec,
    pub exact: Option<ExactSolution>,
}

/// A sixth-order problem as loaded from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct SixthOrderFile {
    pub spec: SixthOrderSpec,
    pub exact: Option<ExactSolution>,
}

impl SixthOrderFile {
    pub fn reduce(&self) -> Result<ProblemFile, FileError> {
        Ok(ProblemFile {
            spec: reduction::reduce(&self.spec)?,
            exact: self.exact.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Coupled(ProblemFile),
    SixthOrder(SixthOrderFile),
}

impl Document {
    /// The coupled system, reducing a sixth-order problem if needed.
    pub fn into_coupled(self) -> Result<ProblemFile, FileError> {
        match self {
            Document::Coupled(p) => Ok(p),
            Document::SixthOrder(s) => s.reduce(),
        }
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), FileError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(FileError::UnknownKey {
                section: self.name.clone(),
                key: e.key.clone(),
                line: e.line,
            }),
            None => Ok(()),
        }
    }

    fn expr(&self, key: &str) -> Result<Option<Expr>, FileError> {
        self.get(key)
            .map(|e| {
                Expr::parse(&e.value).map_err(|source| FileError::Expr {
                    section: self.name.clone(),
                    key: key.to_string(),
                    source,
                })
            })
            .transpose()
    }

    fn constant(&self, key: &str) -> Result<Option<f64>, FileError> {
        let Some(expr) = self.expr(key)? else {
            return Ok(None);
        };
        let invalid = |message: String| FileError::Invalid {
            section: self.name.clone(),
            key: key.to_string(),
            message,
        };
        if let Some(v) = expr.free_vars().into_iter().next() {
            return Err(invalid(format!("must be a constant, but uses `{}`", v.name())));
        }
        let v = expr.eval_x(0.0).map_err(|e| invalid(e.to_string()))?;
        if !v.is_finite() {
            return Err(invalid("value is not finite".into()));
        }
        Ok(Some(v))
    }

    fn required_constant(&self, key: &str) -> Result<f64, FileError> {
        self.constant(key)?.ok_or_else(|| FileError::Missing {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, FileError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| FileError::Syntax {
                    line,
                    message: "unterminated section header".into(),
                })?
                .trim()
                .to_string();
            if sections.iter().any(|s| s.name == name) {
                return Err(FileError::Syntax {
                    line,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| FileError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let section = sections.last_mut().ok_or_else(|| FileError::Syntax {
            line,
            message: "entry before the first section header".into(),
        })?;
        let key = key.trim().to_string();
        if section.get(&key).is_some() {
            return Err(FileError::Syntax {
                line,
                message: format!("duplicate key `{key}` in [{}]", section.name),
            });
        }
        section.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

const COUPLED_SECTIONS: [&str; 6] = ["domain", "equation.p", "equation.q", "bc.p", "bc.q", "exact"];
const SIXTH_SECTIONS: [&str; 5] = ["domain", "equation", "bc.p", "bc.q", "exact"];

fn find<'s>(sections: &'s [Section], name: &str) -> Option<&'s Section> {
    sections.iter().find(|s| s.name == name)
}

fn require<'s>(sections: &'s [Section], name: &str) -> Result<&'s Section, FileError> {
    find(sections, name).ok_or_else(|| FileError::Missing {
        section: name.to_string(),
        key: "(section)".into(),
    })
}

fn parse_domain(sections: &[Section]) -> Result<Domain, FileError> {
    let s = require(sections, "domain")?;
    s.check_keys(&["a", "b"])?;
    let a = s.required_constant("a")?;
    let b = s.required_constant("b")?;
    Ok(Domain::new(a, b)?)
}

fn parse_bc(sections: &[Section], name: &str) -> Result<BoundaryData, FileError> {
    let s = require(sections, name)?;
    s.check_keys(&["value_a", "value_b", "deriv_a", "deriv_b"])?;
    let value_a = s.required_constant("value_a")?;
    let value_b = s.required_constant("value_b")?;
    let (end, value) = match (s.constant("deriv_a")?, s.constant("deriv_b")?) {
        (Some(v), None) => (End::A, v),
        (None, Some(v)) => (End::B, v),
        (Some(_), Some(_)) => {
            return Err(FileError::Invalid {
                section: name.to_string(),
                key: "deriv_b".into(),
                message: "exactly one of deriv_a and deriv_b may be given".into(),
            })
        }
        (None, None) => {
            return Err(FileError::Missing {
                section: name.to_string(),
                key: "deriv_a or deriv_b".into(),
            })
        }
    };
    Ok(BoundaryData::new(value_a, value_b, end, value))
}

fn parse_equation(sections: &[Section], name: &str, prefix: char, forcing: &str) -> Result<Equation, FileError> {
    let mut eq = Equation::default();
    let Some(s) = find(sections, name) else {
        return Ok(eq);
    };
    let keys: Vec<String> = (1..=6).map(|k| format!("{prefix}{k}")).collect();
    let mut allowed: Vec<&str> = keys.iter().map(String::as_str).collect();
    allowed.extend([forcing, "nonlinear"]);
    s.check_keys(&allowed)?;
    for (k, key) in keys.iter().enumerate() {
        if let Some(e) = s.expr(key)? {
            eq.coeffs[k] = e;
        }
    }
    if let Some(e) = s.expr(forcing)? {
        eq.forcing = e;
    }
    eq.nonlinear = s.expr("nonlinear")?;
    Ok(eq)
}

fn parse_exact(sections: &[Section]) -> Result<Option<ExactSolution>, FileError> {
    let Some(s) = find(sections, "exact") else {
        return Ok(None);
    };
    s.check_keys(&["p", "q"])?;
    let exact = ExactSolution {
        p: s.expr("p")?,
        q: s.expr("q")?,
    };
    for (key, e) in [("p", &exact.p), ("q", &exact.q)] {
        if let Some(v) = e.as_ref().and_then(|e| e.free_vars().into_iter().find(|v| *v != crate::expr::Var::X)) {
            return Err(FileError::Invalid {
                section: "exact".into(),
                key: key.into(),
                message: format!("must depend on x only, but uses `{}`", v.name()),
            });
        }
    }
    Ok(Some(exact))
}

fn check_sections(sections: &[Section], allowed: &[&str]) -> Result<(), FileError> {
    match sections.iter().find(|s| !allowed.contains(&s.name.as_str())) {
        Some(s) => Err(FileError::UnknownSection {
            name: s.name.clone(),
            line: s.line,
        }),
        None => Ok(()),
    }
}

/// Parse either a coupled or a sixth-order problem.
pub fn parse_document(text: &str) -> Result<Document, FileError> {
    let sections = split_sections(text)?;
    let domain = parse_domain(&sections)?;
    let bc_p = parse_bc(&sections, "bc.p")?;
    let bc_q = parse_bc(&sections, "bc.q")?;
    let exact = parse_exact(&sections)?;

    if find(&sections, "equation").is_some() {
        check_sections(&sections, &SIXTH_SECTIONS)?;
        let s = require(&sections, "equation")?;
        s.check_keys(&["c0", "c1", "c2", "c3", "c4", "c5", "r", "nonlinear"])?;
        let mut coeffs: [Expr; 6] = std::array::from_fn(|_| Expr::zero());
        for (k, c) in coeffs.iter_mut().enumerate() {
            if let Some(e) = s.expr(&format!("c{k}"))? {
                *c = e;
            }
        }
        let spec = SixthOrderSpec {
            domain,
            coeffs,
            forcing: s.expr("r")?.unwrap_or_else(Expr::zero),
            nonlinear: s.expr("nonlinear")?,
            bc_p,
            bc_q,
        };
        // surface reduction errors at load time
        reduction::reduce(&spec)?;
        return Ok(Document::SixthOrder(SixthOrderFile { spec, exact }));
    }

    check_sections(&sections, &COUPLED_SECTIONS)?;
    let spec = ProblemSpec {
        domain,
        eq_p: parse_equation(&sections, "equation.p", 'a', "f")?,
        eq_q: parse_equation(&sections, "equation.q", 'b', "g")?,
        bc_p,
        bc_q,
    };
    spec.validate()?;
    Ok(Document::Coupled(ProblemFile { spec, exact }))
}

/// Parse a coupled problem; sixth-order problems are reduced.
pub fn parse_problem(text: &str) -> Result<ProblemFile, FileError> {
    parse_document(text)?.into_coupled()
}

pub fn load_document(path: &Path) -> Result<Document, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, FileError> {
    load_document(path)?.into_coupled()
}

fn write_bc(out: &mut String, name: &str, bc: &BoundaryData) {
    let _ = writeln!(out, "[bc.{name}]");
    let _ = writeln!(out, "value_a = {}", fmt_num(bc.value_a));
    let _ = writeln!(out, "value_b = {}", fmt_num(bc.value_b));
    let key = match bc.deriv.end {
        End::A => "deriv_a",
        End::B => "deriv_b",
    };
    let _ = writeln!(out, "{key} = {}", fmt_num(bc.deriv.value));
}

/// Shortest round-trip representation.
fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn write_exact(out: &mut String, exact: &Option<ExactSolution>) {
    if let Some(ex) = exact {
        if ex.p.is_some() || ex.q.is_some() {
            out.push_str("\n[exact]\n");
            if let Some(p) = &ex.p {
                let _ = writeln!(out, "p = {p}");
            }
            if let Some(q) = &ex.q {
                let _ = writeln!(out, "q = {q}");
            }
        }
    }
}

/// Render a coupled problem in the file format. Zero coefficients are omitted.
pub fn write_problem(file: &ProblemFile) -> String {
    let spec = &file.spec;
    let mut out = String::new();
    let _ = writeln!(out, "[domain]\na = {}\nb = {}", fmt_num(spec.domain.a), fmt_num(spec.domain.b));
    for (name, eq, prefix, forcing) in [("p", &spec.eq_p, 'a', "f"), ("q", &spec.eq_q, 'b', "g")] {
        let _ = writeln!(out, "\n[equation.{name}]");
        for (k, c) in eq.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let _ = writeln!(out, "{prefix}{} = {c}", k + 1);
            }
        }
        let _ = writeln!(out, "{forcing} = {}", eq.forcing);
        if let Some(m) = &eq.nonlinear {
            let _ = writeln!(out, "nonlinear = {m}");
        }
    }
    out.push('\n');
    write_bc(&mut out, "p", &spec.bc_p);
    out.push('\n');
    write_bc(&mut out, "q", &spec.bc_q);
    write_exact(&mut out, &file.exact);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
# coupled problem
[domain]
a = 0
b = 1

[equation.p]
a2 = 2
a6 = x
f = x^5 - x^3 - 18*x^2 + 12*x - 18

[equation.q]
g = -36*x^3 + 12*x^2 + 30*x - 2
nonlinear = (1/6) * d2p * d2q

[bc.p]
value_a = 0
value_b = 0
deriv_a = 0

[bc.q]
value_a = 0
value_b = 0
deriv_a = 0

[exact]
p = 3*x^2 - 3*x^3
q = x^4 - x^2
";

    #[test]
    fn parses_coupled_problem() {
        let f = parse_problem(EXAMPLE).unwrap();
        assert_eq!(f.spec.eq_p.coeffs[1].eval_x(0.4).unwrap(), 2.0);
        assert_eq!(f.spec.eq_p.coeffs[5].eval_x(0.4).unwrap(), 0.4);
        assert!(f.spec.eq_q.nonlinear.is_some());
        assert_eq!(f.spec.bc_p, BoundaryData::new(0.0, 0.0, End::A, 0.0));
        assert!(f.exact.unwrap().q.is_some());
    }

    #[test]
    fn missing_boundary_value_is_named() {
        let text = EXAMPLE.replacen("value_b = 0\n", "", 1);
        let err = parse_problem(&text).unwrap_err();
        assert_eq!(err.to_string(), "missing [bc.p] value_b");
    }

    #[test]
    fn third_derivative_variable_is_unknown() {
        let text = EXAMPLE.replace("(1/6) * d2p * d2q", "d3p * q");
        let err = parse_problem(&text).unwrap_err();
        assert!(matches!(
            err,
            FileError::Expr {
                source: ParseError::UnknownIdentifier { .. },
                ..
            }
        ));
    }

    #[test]
    fn both_derivatives_rejected() {
        let text = EXAMPLE.replacen("deriv_a = 0\n", "deriv_a = 0\nderiv_b = 1\n", 1);
        assert!(matches!(parse_problem(&text), Err(FileError::Invalid { .. })));
        let text = EXAMPLE.replacen("deriv_a = 0\n", "", 1);
        assert!(matches!(parse_problem(&text), Err(FileError::Missing { .. })));
    }

    #[test]
    fn coefficient_using_unknown_rejected() {
        let text = EXAMPLE.replace("a6 = x", "a6 = x*q");
        assert!(matches!(parse_problem(&text), Err(FileError::Spec(_))));
    }

    #[test]
    fn syntax_problems_report_lines() {
        let err = parse_problem("[domain]\na 0\n").unwrap_err();
        assert!(matches!(err, FileError::Syntax { line: 2, .. }));
        let err = parse_problem("a = 0\n").unwrap_err();
        assert!(matches!(err, FileError::Syntax { line: 1, .. }));
        let text = EXAMPLE.replace("[exact]", "[extra]");
        assert!(matches!(parse_problem(&text), Err(FileError::UnknownSection { .. })));
        let text = EXAMPLE.replace("a2 = 2", "a7 = 2");
        assert!(matches!(parse_problem(&text), Err(FileError::UnknownKey { .. })));
    }

    #[test]
    fn written_problem_parses_back() {
        let f = parse_problem(EXAMPLE).unwrap();
        let again = parse_problem(&write_problem(&f)).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn constant_boundary_expressions() {
        let text = EXAMPLE.replacen("value_b = 0", "value_b = -3*exp(1)", 1);
        let f = parse_problem(&text).unwrap();
        assert!((f.spec.bc_p.value_b + 3.0 * 1f64.exp()).abs() < 1e-15);
        let text = EXAMPLE.replacen("value_b = 0", "value_b = x", 1);
        assert!(matches!(parse_problem(&text), Err(FileError::Invalid { .. })));
    }
}
