#![allow(dead_code)]

use bernstein_galerkin::cli::file::ProblemFile;
use bernstein_galerkin::cli::presets;
use bernstein_galerkin::problem::Unknown;
use bernstein_galerkin::solver::Solution;

pub fn preset(name: &str) -> ProblemFile {
    presets::load(name).expect("known preset")
}

/// `0.1, ..., 0.9` on the unit interval.
pub fn tenths() -> Vec<f64> {
    (1..10).map(|k| k as f64 / 10.0).collect()
}

pub fn uniform(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// Largest `|exact - approx|` for one unknown over `xs`.
pub fn max_error(problem: &ProblemFile, sol: &Solution, which: Unknown, xs: &[f64]) -> f64 {
    let ex = problem.exact.as_ref().expect("preset has an exact solution");
    let e = match which {
        Unknown::P => ex.p.as_ref(),
        Unknown::Q => ex.q.as_ref(),
    }
    .expect("exact expression");
    xs.iter()
        .map(|&x| (e.eval_x(x).unwrap() - sol.eval(x, which, 0).unwrap()).abs())
        .fold(0.0, f64::max)
}

pub fn max_error_both(problem: &ProblemFile, sol: &Solution, xs: &[f64]) -> (f64, f64) {
    (
        max_error(problem, sol, Unknown::P, xs),
        max_error(problem, sol, Unknown::Q, xs),
    )
}
