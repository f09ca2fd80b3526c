//! Command-line front end: problem files, presets and reports.

pub mod file;
pub mod presets;
pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::problem::Unknown;
use crate::solver::{self, SolveError, Solution, SolverConfig};
use file::{Document, ProblemFile};
use report::ErrorTable;

/// Exit status for a run that finished without meeting its tolerance.
pub const EXIT_UNCONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gbsolve", version, about = "Galerkin solver with Bernstein polynomials for coupled third-order BVPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file or a built-in preset.
    Solve(SolveArgs),
    /// Print the coupled third-order system for a sixth-order problem file.
    Reduce {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in problem file, or list them.
    Preset { name: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Problem file.
    #[arg(required_unless_present = "preset")]
    pub file: Option<PathBuf>,
    /// Built-in problem (example1..example4).
    #[arg(long, conflicts_with = "file")]
    pub preset: Option<String>,
    /// Solve at a single degree.
    #[arg(long, conflicts_with = "sweep")]
    pub degree: Option<usize>,
    /// Solve every degree in MIN..MAX in parallel, then pick the first that
    /// agrees with its predecessor.
    #[arg(long, value_name = "MIN..MAX", value_parser = parse_range)]
    pub sweep: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_picard: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_degree: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Run exactly K Picard updates after the initial linear solve.
    #[arg(long, value_name = "K")]
    pub fixed_iters: Option<usize>,
    /// Gauss-Legendre points (default max(24, 2n)).
    #[arg(long, value_name = "G")]
    pub quad_order: Option<usize>,
    /// Points in the convergence grid.
    #[arg(long, value_name = "P", default_value_t = 101)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected MIN..MAX")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("bad MIN: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("bad MAX: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

impl SolveArgs {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig {
            picard_tol: self.tol_picard,
            max_picard_iters: self.max_iters,
            fixed_iters: self.fixed_iters,
            degree_tol: self.tol_degree,
            grid_points: self.grid,
            quad_order: self.quad_order,
            ..SolverConfig::default()
        };
        if let Some((lo, hi)) = self.sweep {
            c.min_degree = lo;
            c.max_degree = hi;
        }
        c
    }

    fn problem(&self) -> Result<(String, ProblemFile)> {
        match (&self.preset, &self.file) {
            (Some(name), _) => {
                let p = presets::load(name)
                    .ok_or_else(|| anyhow!("unknown preset `{name}` (available: {})", presets::NAMES.join(", ")))?;
                Ok((name.clone(), p))
            }
            (None, Some(path)) => {
                let p = file::load_problem(path).with_context(|| format!("loading {}", path.display()))?;
                Ok((path.display().to_string(), p))
            }
            (None, None) => bail!("a problem file or --preset is required"),
        }
    }
}

/// What a run produced, before rendering.
struct Outcome {
    text: String,
    converged: bool,
}

fn describe(sol: &Solution, config: &SolverConfig) -> String {
    let status = match (config.fixed_iters, sol.converged) {
        (Some(_), _) => "fixed iteration count",
        (None, true) => "converged",
        (None, false) => "not converged",
    };
    let mut s = format!(
        "degree {}, {} Picard iterations, {status}",
        sol.degree(),
        sol.iterations
    );
    if let Some((dp, dq)) = sol.last_change {
        let _ = write!(s, " (last change p {dp:.3e}, q {dq:.3e})");
    }
    s
}

fn coeff_line(name: &str, c: &[f64]) -> String {
    let cs: Vec<String> = c.iter().map(|v| format!("{v:.10}")).collect();
    format!("{name} coefficients: [{}]\n", cs.join(", "))
}

fn render(label: &str, sol: &Solution, problem: &ProblemFile, args: &SolveArgs, config: &SolverConfig, history: Option<&[solver::DegreeStep]>) -> Result<String> {
    let table = ErrorTable::build(sol, problem.spec.domain, problem.exact.as_ref())?;
    if args.format == Format::Csv {
        return Ok(table.to_csv());
    }
    let mut out = format!("problem: {label}\n");
    if let Some(h) = history {
        out.push_str(&report::history_text(h));
        out.push('\n');
    }
    let _ = writeln!(out, "{}", describe(sol, config));
    out.push_str(&coeff_line("p", sol.coeffs(Unknown::P)));
    out.push_str(&coeff_line("q", sol.coeffs(Unknown::Q)));
    out.push('\n');
    out.push_str(&table.to_text());
    Ok(out)
}

fn solve(args: &SolveArgs, err: &mut dyn Write) -> Result<Outcome> {
    let (label, problem) = args.problem()?;
    let config = args.config();
    config.validate()?;
    let spec = &problem.spec;

    if let Some(n) = args.degree {
        let sol = solver::picard_solve(spec, n, &config)?;
        let converged = sol.converged || config.fixed_iters.is_some();
        let text = render(&label, &sol, &problem, args, &config, None)?;
        return Ok(Outcome { text, converged });
    }

    let refinement = match args.sweep {
        Some((lo, hi)) => {
            let degrees: Vec<usize> = (lo..=hi).collect();
            solver::refine_from_sweep(spec, solver::sweep(spec, &degrees, &config), &config)?
        }
        None => solver::refine_solve(spec, &config)?,
    };
    if args.format == Format::Csv {
        // keep the CSV stream clean
        let _ = err.write_all(report::history_text(&refinement.history).as_bytes());
    }
    let text = render(&label, &refinement.solution, &problem, args, &config, Some(&refinement.history))?;
    if !refinement.converged {
        let _ = writeln!(
            err,
            "warning: degrees did not agree to {:e} by degree {}",
            config.degree_tol,
            refinement.solution.degree()
        );
    }
    Ok(Outcome {
        text,
        converged: refinement.converged,
    })
}

fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(text.as_bytes()).context("writing output"),
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Solve(args) => match solve(&args, err) {
            Ok(o) => {
                emit(&o.text, args.out.as_ref(), out)?;
                Ok(if o.converged { 0 } else { EXIT_UNCONVERGED })
            }
            Err(e) => match e.downcast_ref::<SolveError>() {
                Some(SolveError::NotConverged { .. }) => {
                    let _ = writeln!(err, "error: {e:#}");
                    Ok(EXIT_UNCONVERGED)
                }
                _ => Err(e),
            },
        },
        Command::Reduce { file: path, out: dest } => {
            let doc = file::load_document(&path).with_context(|| format!("loading {}", path.display()))?;
            let Document::SixthOrder(six) = doc else {
                bail!("{} is already a coupled third-order problem", path.display());
            };
            let text = file::write_problem(&six.reduce()?);
            emit(&text, dest.as_ref(), out)?;
            Ok(0)
        }
        Command::Preset { name: None } => {
            emit(&(presets::NAMES.join("\n") + "\n"), None, out)?;
            Ok(0)
        }
        Command::Preset { name: Some(name) } => {
            let text = presets::source(&name).ok_or_else(|| anyhow!("unknown preset `{name}`"))?;
            emit(text, None, out)?;
            Ok(0)
        }
    }
}

/// Parse `args` (program name first), run, and return the exit status.
/// 0 on success, 1 on any error, 2 when a run ended unconverged.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}
