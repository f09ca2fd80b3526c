//! Built-in example problems.

use super::file::{parse_document, Document, FileError, ProblemFile};

pub const NAMES: [&str; 4] = ["example1", "example2", "example3", "example4"];

/// Raw text of a preset, as it would appear on disk.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(include_str!("../../presets/example1.prob")),
        "example2" => Some(include_str!("../../presets/example2.prob")),
        "example3" => Some(include_str!("../../presets/example3.prob")),
        "example4" => Some(include_str!("../../presets/example4.prob")),
        _ => None,
    }
}

pub fn document(name: &str) -> Option<Result<Document, FileError>> {
    source(name).map(parse_document)
}

/// A preset as a coupled problem, sixth-order presets reduced.
///
/// # Panics
/// Never for names in [`NAMES`]; the embedded files are checked by tests.
pub fn load(name: &str) -> Option<ProblemFile> {
    document(name).map(|d| {
        d.and_then(Document::into_coupled)
            .unwrap_or_else(|e| panic!("preset {name} is invalid: {e}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        for name in NAMES {
            let f = load(name).unwrap();
            assert!(f.exact.is_some(), "{name}");
        }
        assert!(load("example5").is_none());
    }

    #[test]
    fn sixth_order_presets_are_reduced() {
        assert!(matches!(document("example3"), Some(Ok(Document::SixthOrder(_)))));
        let f = load("example4").unwrap();
        assert_eq!(f.spec.eq_p.coeffs[5].eval_x(0.3).unwrap(), -1.0);
        assert!(f.spec.eq_q.nonlinear.is_some());
    }

    #[test]
    fn exact_solutions_meet_boundary_values() {
        for name in NAMES {
            let f = load(name).unwrap();
            let ex = f.exact.unwrap();
            let (a, b) = (f.spec.domain.a, f.spec.domain.b);
            for (e, bc) in [(ex.p, f.spec.bc_p), (ex.q, f.spec.bc_q)] {
                let e = e.unwrap();
                assert!((e.eval_x(a).unwrap() - bc.value_a).abs() < 1e-14, "{name}");
                assert!((e.eval_x(b).unwrap() - bc.value_b).abs() < 1e-14, "{name}");
            }
        }
    }
}
