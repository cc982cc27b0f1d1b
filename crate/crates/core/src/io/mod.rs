//! Problem files: a small line-oriented grammar for one evolution equation,
//! its function and constant declarations, symmetry generators and an
//! optional numeric run.
//!
//! ```text
//! func r p
//! const mu
//! u_t = r(u)*u_xxx + p(u)*u_xx
//! gen X = t*d/dt - u*d/du
//! numeric { N = 256; dt = 1e-4; t_end = 1; u0 = cos(x); density mass = u }
//! ```

mod lexer;
mod numexpr;
mod parser;
mod tex;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::expr::{Expression, Name, Rational};
use crate::jet::{EvolutionEquation, Generator};
use crate::numverify::GridSpec;

pub use numexpr::NumExpr;
pub use parser::{parse_expression, parse_problem};
pub use tex::{tex, tex_generator};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: the right-hand side contains the t-derivative `{jet}`")]
    TDerivative {
        jet: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: `{jet}` has order {order}; at most 4 x-derivatives are supported")]
    OrderTooHigh {
        jet: String,
        order: u32,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: unsupported form: {message}")]
    Unsupported {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ProblemError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ProblemError::Unsupported { .. } => 3,
            _ => 2,
        }
    }
}

/// Settings of the `numeric { ... }` block.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericConfig {
    pub grid: GridSpec,
    pub initial: NumExpr,
    /// Named densities to track, in declaration order.
    pub densities: Vec<(String, Expression)>,
    /// Values for the symbolic constants during the run.
    pub bindings: BTreeMap<Name, Rational>,
}

impl NumericConfig {
    pub fn initial_data(&self) -> Vec<f64> {
        self.grid
            .points()
            .into_iter()
            .map(|x| self.initial.eval(x))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub functions: Vec<Name>,
    pub constants: Vec<Name>,
    pub equation: EvolutionEquation,
    pub generators: Vec<(String, Generator)>,
    pub numeric: Option<NumericConfig>,
}

impl Problem {
    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.generators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
    }
}

/// Print a problem back in the input grammar; parsing the output yields the
/// same structures.
pub fn emit_problem(p: &Problem) -> String {
    let mut out = String::new();
    let join = |names: &[Name]| {
        names
            .iter()
            .map(|n| n.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !p.functions.is_empty() {
        let _ = writeln!(out, "func {}", join(&p.functions));
    }
    if !p.constants.is_empty() {
        let _ = writeln!(out, "const {}", join(&p.constants));
    }
    let _ = writeln!(out, "{}", p.equation);
    for (name, g) in &p.generators {
        let _ = writeln!(out, "gen {name} = {g}");
    }
    if let Some(num) = &p.numeric {
        let g = &num.grid;
        let _ = writeln!(out, "numeric {{");
        let _ = writeln!(out, "  L = {:?}", g.length);
        let _ = writeln!(out, "  N = {}", g.n);
        let _ = writeln!(out, "  dt = {:?}", g.dt);
        let _ = writeln!(out, "  t_end = {:?}", g.t_end);
        let _ = writeln!(out, "  samples = {}", g.samples);
        let _ = writeln!(out, "  safety = {:?}", g.safety);
        let _ = writeln!(out, "  u0 = {}", num.initial);
        for (name, value) in &num.bindings {
            let _ = writeln!(
                out,
                "  set {name} = {}",
                Expression::rational(value.clone())
            );
        }
        for (name, c0) in &num.densities {
            let _ = writeln!(out, "  density {name} = {c0}");
        }
        let _ = writeln!(out, "}}");
    }
    out
}
