//! Command dispatch for the `selfadj` binary.

mod report;

use std::collections::BTreeMap;
use std::io::IsTerminal;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::json;

use selfadj_core::conslaw::{
    conserved_vector, equivalent_up_to_trivial, reduce_trivial, specialize_v, ConservedVector,
    ConslawError,
};
use selfadj_core::expr::{Atom, Expression, Name};
use selfadj_core::io::{
    parse_expression, parse_problem, tex, tex_generator, Problem, ProblemError,
};
use selfadj_core::jet::{verify_point_symmetry, Generator, JetError};
use selfadj_core::numverify::{density_drift, integrate, NumError};
use selfadj_core::variational::{
    adjoint, determining_system, self_adjointness_test, solve_exact_derivative_patterns,
    verify_family, VariationalError,
};

pub use report::{Format, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Print F* and F* at v = u
    Adjoint,
    /// Decide self-adjointness and report phi
    CheckSa,
    /// Determining system of a family with unknown functions
    Detsys,
    /// Solve the determining system and verify the closed forms
    Classify,
    /// Conserved vectors for every generator
    Conslaw,
    /// Check that each generator is a point symmetry
    VerifySymmetry,
    /// Integrate the numeric block and track densities
    Numcheck,
}

#[derive(Debug, Parser)]
#[command(
    name = "selfadj",
    version,
    about = "Self-adjointness and conservation laws of evolution equations"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    pub format: Format,
    /// Write the output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bind a constant before running, e.g. `--set mu=2` (repeatable)
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Restrict conslaw and verify-symmetry to one generator
    #[arg(long)]
    pub generator: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] ProblemError),
    #[error("{0}")]
    Usage(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numeric run failed: {0}")]
    Numeric(#[from] NumError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } | CliError::Usage(_) => 2,
            CliError::Parse(e) => e.exit_code(),
            CliError::Unsupported(_) => 3,
            CliError::Numeric(NumError::BlowUp { .. } | NumError::Unstable { .. }) => 5,
            CliError::Numeric(NumError::InvalidGrid(_)) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<VariationalError> for CliError {
    fn from(e: VariationalError) -> CliError {
        CliError::Unsupported(e.to_string())
    }
}

impl From<ConslawError> for CliError {
    fn from(e: ConslawError) -> CliError {
        CliError::Unsupported(e.to_string())
    }
}

impl From<JetError> for CliError {
    fn from(e: JetError) -> CliError {
        CliError::Unsupported(e.to_string())
    }
}

/// Bind constants given as `NAME=VALUE` in the equation and generators.
pub fn apply_settings(problem: &mut Problem, settings: &[String]) -> Result<(), CliError> {
    if settings.is_empty() {
        return Ok(());
    }
    let mut bindings = BTreeMap::new();
    for s in settings {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected NAME=VALUE, got `{s}`")))?;
        let n = Name::new(name.trim());
        if !problem.constants.contains(&n) {
            return Err(CliError::Usage(format!(
                "`{name}` is not a declared constant"
            )));
        }
        let v = parse_expression(value, &problem.functions, &problem.constants)?;
        if v.as_coeff().is_none() {
            return Err(CliError::Usage(format!(
                "value of `{name}` must be constant"
            )));
        }
        bindings.insert(Atom::Const(n), v);
    }
    problem.equation = problem.equation.substitute(&bindings)?;
    for (_, g) in problem.generators.iter_mut() {
        *g = g.substitute(&bindings)?;
    }
    problem
        .constants
        .retain(|c| !bindings.contains_key(&Atom::Const(*c)));
    Ok(())
}

fn names(set: impl IntoIterator<Item = Name>) -> Vec<String> {
    set.into_iter().map(|n| n.as_str().to_string()).collect()
}

fn equation_header(report: &mut Report, problem: &Problem) {
    let eq = &problem.equation;
    report.line(format!("equation: {eq}"));
    report.tex(format!("u_{{t}} = {}", tex(eq.rhs())));
    report.record(
        "equation",
        json!({
            "rhs": eq.rhs().to_string(),
            "order": eq.order(),
            "unknown_functions": names(eq.unknown_functions().iter().copied()),
        }),
    );
}

fn selected<'a>(
    problem: &'a Problem,
    only: Option<&str>,
) -> Result<Vec<(&'a str, &'a Generator)>, CliError> {
    let all: Vec<(&str, &Generator)> = problem
        .generators
        .iter()
        .map(|(n, g)| (n.as_str(), g))
        .collect();
    match only {
        None => Ok(all),
        Some(name) => all
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|g| vec![g])
            .ok_or_else(|| CliError::Usage(format!("no generator named `{name}`"))),
    }
}

fn cmd_adjoint(report: &mut Report, problem: &Problem) {
    let adj = adjoint(&problem.equation);
    report.line(format!("F* = {}", adj.f_star));
    report.line(format!("F*|v=u = {}", adj.f_star_at_v_eq_u));
    report.tex(format!("F^{{*}} = {}", tex(&adj.f_star)));
    report.tex(format!(
        "F^{{*}}\\big|_{{v=u}} = {}",
        tex(&adj.f_star_at_v_eq_u)
    ));
    report.record(
        "adjoint",
        json!({
            "f_star": adj.f_star.to_string(),
            "f_star_at_v_eq_u": adj.f_star_at_v_eq_u.to_string(),
            "order": adj.order,
        }),
    );
}

fn cmd_check_sa(report: &mut Report, problem: &Problem) {
    let r = self_adjointness_test(&problem.equation);
    report.line(r.to_string());
    let phi = r.phi.as_ref().map(|p| p.to_string());
    report.tex(match (&r.phi, r.is_self_adjoint) {
        (Some(p), true) => format!("\\text{{self-adjoint}},\\ \\phi = {}", tex(p)),
        _ => format!(
            "\\text{{not self-adjoint}},\\ F^{{*}}|_{{v=u}} - \\phi F = {}",
            tex(&r.residual)
        ),
    });
    report.record(
        "self_adjointness",
        json!({
            "self_adjoint": r.is_self_adjoint,
            "phi": phi,
            "residual": r.residual.to_string(),
        }),
    );
}

fn cmd_detsys(report: &mut Report, problem: &Problem) -> Result<(), CliError> {
    let sys = determining_system(&problem.equation)?;
    for (i, eq) in sys.equations.iter().enumerate() {
        let sources: Vec<String> = eq.sources.iter().map(|m| m.to_string()).collect();
        report.line(format!(
            "[{}] {} = 0    from {}",
            i + 1,
            eq.expr,
            sources.join(", ")
        ));
        report.tex(format!("{} = 0", tex(&eq.expr)));
        report.record(
            "determining_equation",
            json!({ "index": i + 1, "expr": eq.expr.to_string(), "sources": sources }),
        );
    }
    report.record(
        "determining_system",
        json!({ "count": sys.len(), "unknowns": names(sys.unknowns.iter().copied()) }),
    );
    Ok(())
}

fn cmd_classify(report: &mut Report, problem: &Problem) -> Result<(), CliError> {
    let sys = determining_system(&problem.equation)?;
    let sol = solve_exact_derivative_patterns(&sys);
    let fam = &sol.family;
    for (name, value) in &fam.assignments {
        report.line(format!("{name}(u) = {value}"));
        report.tex(format!("{name}(u) = {}", tex(value)));
        report.record(
            "assignment",
            json!({ "function": name.as_str(), "value": value.to_string() }),
        );
    }
    if !fam.free_functions.is_empty() {
        report.line(format!(
            "free: {}",
            names(fam.free_functions.iter().copied()).join(", ")
        ));
    }
    if !fam.constants.is_empty() {
        report.line(format!(
            "constants: {}",
            names(fam.constants.iter().copied()).join(", ")
        ));
    }
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    if !sol.redundant.is_empty() {
        let list: Vec<String> = one_based(&sol.redundant)
            .iter()
            .map(|i| i.to_string())
            .collect();
        report.line(format!("redundant equations: {}", list.join(", ")));
    }
    for (i, e) in &sol.unsolved {
        report.line(format!("unsolved [{}]: {e} = 0", i + 1));
        report.tex(format!("{} = 0", tex(e)));
    }
    let verified = verify_family(&problem.equation, fam)?;
    report.check("closed forms make F*|v=u + F vanish", verified);
    if !verified || !sol.unsolved.is_empty() {
        report.fail();
    }
    report.record(
        "classification",
        json!({
            "free_functions": names(fam.free_functions.iter().copied()),
            "constants": names(fam.constants.iter().copied()),
            "solved_from": sol.solved_from.iter().map(|(i, n)| json!([i + 1, n.as_str()])).collect::<Vec<_>>(),
            "redundant": one_based(&sol.redundant),
            "unsolved": sol.unsolved.iter().map(|(i, e)| json!([i + 1, e.to_string()])).collect::<Vec<_>>(),
            "verified": verified,
        }),
    );
    Ok(())
}

fn vector_lines(report: &mut Report, name: &str, cv: &ConservedVector) {
    let label = format!("{name} {}", cv.stage);
    report.check(format!("{label}: C0 = {}", cv.c0), cv.verified);
    report.line(format!("{}  C1 = {}", " ".repeat(label.len()), cv.c1));
    report.tex(format!(
        "% {label}\nC^{{0}} = {},\\quad C^{{1}} = {}",
        tex(&cv.c0),
        tex(&cv.c1)
    ));
    report.record(
        "conserved_vector",
        json!({
            "generator": name,
            "stage": cv.stage.to_string(),
            "c0": cv.c0.to_string(),
            "c1": cv.c1.to_string(),
            "verified": cv.verified,
            "premise_unverified": cv.premise_unverified,
            "reduction_capped": cv.reduction_capped,
        }),
    );
}

fn cmd_conslaw(report: &mut Report, problem: &Problem, only: Option<&str>) -> Result<(), CliError> {
    let eq = &problem.equation;
    let gens = selected(problem, only)?;
    if gens.is_empty() {
        return Err(CliError::Usage("the problem declares no generators".into()));
    }
    if !self_adjointness_test(eq).is_self_adjoint {
        report.warn("the equation is not self-adjoint; vectors with v = u are not guaranteed to be conserved");
    }
    let mut reduced: Vec<(&str, ConservedVector)> = Vec::new();
    for (name, g) in gens {
        report.line(format!("generator {name} = {g}"));
        report.tex(format!("% generator {name}\nX = {}", tex_generator(g)));
        if !verify_point_symmetry(g, eq).holds {
            report.warn(format!("{name} is not a point symmetry of the equation"));
        }
        let raw = conserved_vector(eq, g)?;
        let raw_label = format!("{name} raw");
        report.line(format!("{raw_label}: C0 = {}", raw.c0));
        report.line(format!("{}  C1 = {}", " ".repeat(raw_label.len()), raw.c1));
        report.record(
            "conserved_vector",
            json!({
                "generator": name,
                "stage": raw.stage.to_string(),
                "c0": raw.c0.to_string(),
                "c1": raw.c1.to_string(),
                "verified": null,
                "premise_unverified": raw.premise_unverified,
                "reduction_capped": raw.reduction_capped,
            }),
        );
        let specialized = specialize_v(&raw)?;
        vector_lines(report, name, &specialized);
        let red = reduce_trivial(&specialized)?;
        vector_lines(report, name, &red);
        if !red.verified {
            report.fail();
        }
        reduced.push((name, red));
    }
    for (i, (na, a)) in reduced.iter().enumerate() {
        for (nb, b) in reduced.iter().skip(i + 1) {
            if !(a.verified && b.verified) || a.c0.is_zero() || b.c0.is_zero() {
                continue;
            }
            let e = equivalent_up_to_trivial(a, b)?;
            let scale = e.scale.as_ref().map(|s| Expression::from_coeff(s.clone()));
            match &scale {
                Some(s) => {
                    report.line(format!(
                        "{nb} is equivalent to {na}: C0({nb}) = {s} * C0({na})"
                    ));
                    report.tex(format!("C^{{0}}_{{{nb}}} = {}\\,C^{{0}}_{{{na}}}", tex(s)));
                }
                None => report.line(format!("{nb} and {na} give different conservation laws")),
            }
            report.record(
                "equivalence",
                json!({
                    "first": na,
                    "second": nb,
                    "equivalent": e.equivalent,
                    "scale": scale.map(|s| s.to_string()),
                }),
            );
        }
    }
    Ok(())
}

fn cmd_verify_symmetry(
    report: &mut Report,
    problem: &Problem,
    only: Option<&str>,
) -> Result<(), CliError> {
    let gens = selected(problem, only)?;
    if gens.is_empty() {
        return Err(CliError::Usage("the problem declares no generators".into()));
    }
    for (name, g) in gens {
        let check = verify_point_symmetry(g, &problem.equation);
        report.check(
            format!("{name} = {g}: residual {}", check.residual),
            check.holds,
        );
        report.tex(format!("% {name}: residual\n{}", tex(&check.residual)));
        report.record(
            "symmetry",
            json!({
                "generator": name,
                "holds": check.holds,
                "residual": check.residual.to_string(),
            }),
        );
        if !check.holds {
            report.fail();
        }
    }
    Ok(())
}

fn cmd_numcheck(report: &mut Report, problem: &Problem) -> Result<(), CliError> {
    let num = problem
        .numeric
        .as_ref()
        .ok_or_else(|| CliError::Usage("the problem has no numeric block".into()))?;
    let eq = &problem.equation;
    if !eq.is_concrete() {
        return Err(CliError::Unsupported(
            "numcheck needs an equation without unknown functions".into(),
        ));
    }
    let mut densities = num.densities.clone();
    if densities.is_empty() {
        for (name, g) in &problem.generators {
            let red = reduce_trivial(&specialize_v(&conserved_vector(eq, g)?)?)?;
            if red.verified && !red.c0.is_zero() {
                densities.push((name.clone(), red.c0));
            }
        }
    }
    let start = Instant::now();
    let traj = integrate(eq, &num.grid, &num.initial_data(), &num.bindings)?;
    let g = &num.grid;
    report.line(format!(
        "grid: L = {}, N = {}, dt = {:e}, t_end = {}",
        g.length, g.n, g.dt, g.t_end
    ));
    for (name, c0) in densities {
        let trace = density_drift(&traj, &c0, &num.bindings)?;
        let kind = if trace.absolute {
            "absolute"
        } else {
            "relative"
        };
        report.line(format!(
            "{name}: C0 = {c0}, {kind} drift {:.3e}",
            trace.relative_drift
        ));
        report.tex(format!(
            "% {name}: {kind} drift {:.3e}\n\\int {}\\,dx",
            trace.relative_drift,
            tex(&c0)
        ));
        report.record(
            "density_trace",
            json!({
                "name": name,
                "density": c0.to_string(),
                "times": trace.times,
                "integrals": trace.integrals,
                "relative_drift": trace.relative_drift,
                "absolute": trace.absolute,
            }),
        );
    }
    report.record(
        "run",
        json!({ "steps": g.steps(), "seconds": start.elapsed().as_secs_f64() }),
    );
    Ok(())
}

/// Run one command on a parsed problem.
pub fn run_command(
    command: Command,
    problem: &Problem,
    generator: Option<&str>,
) -> Result<Report, CliError> {
    let mut report = Report::new();
    equation_header(&mut report, problem);
    match command {
        Command::Adjoint => cmd_adjoint(&mut report, problem),
        Command::CheckSa => cmd_check_sa(&mut report, problem),
        Command::Detsys => cmd_detsys(&mut report, problem)?,
        Command::Classify => cmd_classify(&mut report, problem)?,
        Command::Conslaw => cmd_conslaw(&mut report, problem, generator)?,
        Command::VerifySymmetry => cmd_verify_symmetry(&mut report, problem, generator)?,
        Command::Numcheck => cmd_numcheck(&mut report, problem)?,
    }
    Ok(report)
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

/// Execute a parsed command line; returns the rendered output and exit code.
pub fn execute(cli: &Cli) -> Result<(String, i32), CliError> {
    let text = std::fs::read_to_string(&cli.file).map_err(|source| CliError::Read {
        path: cli.file.clone(),
        source,
    })?;
    let mut problem = parse_problem(&text)?;
    apply_settings(&mut problem, &cli.set)?;
    let report = run_command(cli.command, &problem, cli.generator.as_deref())?;
    let color = cli.out.is_none() && use_color();
    let code = if report.failed() { 4 } else { 0 };
    Ok((report.render(cli.format, color), code))
}

pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok((output, code)) => {
            if let Some(path) = &cli.out {
                if let Err(source) = std::fs::write(path, output) {
                    let e = CliError::Write {
                        path: path.clone(),
                        source,
                    };
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            } else {
                print!("{output}");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
