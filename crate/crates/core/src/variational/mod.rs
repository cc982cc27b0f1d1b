//! Euler-Lagrange operator, formal adjoints, the self-adjointness test and the
//! determining system for families with unknown coefficient functions.

mod solve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::expr::{base_var, substitute, Atom, ExprError, Expression, Jet, Monomial, Name};
use crate::jet::{total_derivative_n, EvolutionEquation, JetError};

pub use solve::{integrate_in_u, solve_exact_derivative_patterns, ClosedFormFamily, Solution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VariationalError {
    #[error("self-adjointness would need phi = {phi}; only phi = -1 is supported for determining systems")]
    PhiMismatch { phi: String },
    #[error("the equation has no unknown functions")]
    NoUnknowns,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// The auxiliary dependent variable of the formal Lagrangian.
pub fn adjoint_var() -> Name {
    Name::new("v")
}

/// Variational derivative of `l` with respect to the dependent variable `var`.
pub fn euler_lagrange(l: &Expression, var: Name) -> Expression {
    let mut jets: BTreeSet<Jet> = l.jets().into_iter().filter(|j| j.var == var).collect();
    jets.insert(Jet::base(var));
    let mut out = Expression::zero();
    for j in jets {
        let partial = l.diff_partial(&Atom::Jet(j));
        if partial.is_zero() {
            continue;
        }
        let d = total_derivative_n(&partial, j.t, j.x);
        if j.order() % 2 == 0 {
            out = out.add(&d);
        } else {
            out = out.sub(&d);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjointResult {
    /// `F* = delta(v F)/delta u`, linear in `v` and its jets.
    pub f_star: Expression,
    pub f_star_at_v_eq_u: Expression,
    pub order: u32,
}

pub fn adjoint(eq: &EvolutionEquation) -> AdjointResult {
    let v = Expression::atom(Atom::Jet(Jet::base(adjoint_var())));
    let lagrangian = v.mul(eq.f());
    let f_star = euler_lagrange(&lagrangian, eq.var());
    let f_star_at_v_eq_u = v_to_u(&f_star);
    let order = f_star.jets().iter().map(|j| j.order()).max().unwrap_or(0);
    AdjointResult {
        f_star,
        f_star_at_v_eq_u,
        order,
    }
}

/// Substitute `v = u` (with all jets).
pub fn v_to_u(e: &Expression) -> Expression {
    let bindings: BTreeMap<Atom, Expression> = [(
        Atom::Jet(Jet::base(adjoint_var())),
        Expression::atom(Atom::Jet(Jet::base(base_var()))),
    )]
    .into_iter()
    .collect();
    substitute(e, &bindings).expect("v -> u is always a valid binding")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointnessReport {
    pub is_self_adjoint: bool,
    pub phi: Option<Expression>,
    /// `F*|_{v=u} - phi F`
    pub residual: Expression,
}

impl fmt::Display for SelfAdjointnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.phi, self.is_self_adjoint) {
            (Some(phi), true) => write!(f, "self-adjoint, phi = {phi}"),
            (Some(phi), false) => write!(
                f,
                "not self-adjoint (phi = {phi}, residual {})",
                self.residual
            ),
            (None, _) => write!(f, "not self-adjoint (residual {})", self.residual),
        }
    }
}

fn ut() -> Atom {
    Atom::Jet(Jet::new(base_var(), 1, 0))
}

/// Coefficient of `u_t` in an expression linear in `u_t`.
fn ut_coefficient(e: &Expression) -> Option<Expression> {
    let basis: BTreeSet<Atom> = [ut()].into_iter().collect();
    let parts = e.collect_coefficients(&basis).ok()?;
    let mut coeff = Expression::zero();
    for (m, c) in parts {
        if m == Monomial::atom(ut()) {
            coeff = c;
        } else if !m.is_one() {
            return None;
        }
    }
    Some(coeff)
}

/// Decide whether `F*|_{v=u} = phi F`, taking `phi` from the `u_t` terms.
pub fn self_adjointness_test(eq: &EvolutionEquation) -> SelfAdjointnessReport {
    let adj = adjoint(eq);
    let at_u = adj.f_star_at_v_eq_u;
    match ut_coefficient(&at_u) {
        Some(phi) if !phi.is_zero() => {
            let residual = at_u.sub(&phi.mul(eq.f()));
            SelfAdjointnessReport {
                is_self_adjoint: residual.is_zero(),
                phi: Some(phi),
                residual,
            }
        }
        _ => SelfAdjointnessReport {
            is_self_adjoint: false,
            phi: None,
            residual: at_u,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminingEquation {
    pub expr: Expression,
    /// Jet monomials whose coefficients reduce to this equation.
    pub sources: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminingSystem {
    pub equations: Vec<DeterminingEquation>,
    pub unknowns: BTreeSet<Name>,
}

impl DeterminingSystem {
    pub fn from_equations(
        equations: impl IntoIterator<Item = Expression>,
        unknowns: BTreeSet<Name>,
    ) -> DeterminingSystem {
        let mut sys = DeterminingSystem {
            equations: Vec::new(),
            unknowns,
        };
        for e in equations {
            sys.push(e, None);
        }
        sys
    }

    fn push(&mut self, e: Expression, source: Option<Monomial>) {
        if e.is_zero() {
            return;
        }
        let key = e.primitive();
        if let Some(existing) = self
            .equations
            .iter_mut()
            .find(|d| d.expr.primitive() == key)
        {
            existing.sources.extend(source);
            return;
        }
        self.equations.push(DeterminingEquation {
            expr: e,
            sources: source.into_iter().collect(),
        });
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expression> {
        self.equations.iter().map(|d| &d.expr)
    }
}

/// `F*|_{v=u} + F`, which vanishes identically exactly when the equation is
/// self-adjoint with `phi = -1`.
pub fn self_adjointness_defect(eq: &EvolutionEquation) -> Expression {
    adjoint(eq).f_star_at_v_eq_u.add(eq.f())
}

/// Split `F*|_{v=u} + F` by jet monomials; each coefficient must vanish.
pub fn determining_system(eq: &EvolutionEquation) -> Result<DeterminingSystem, VariationalError> {
    if eq.unknown_functions().is_empty() {
        return Err(VariationalError::NoUnknowns);
    }
    let at_u = adjoint(eq).f_star_at_v_eq_u;
    let phi = ut_coefficient(&at_u).unwrap_or_else(Expression::zero);
    if phi != Expression::int(-1) {
        return Err(VariationalError::PhiMismatch {
            phi: phi.to_string(),
        });
    }
    let defect = at_u.add(eq.f());
    let basis: BTreeSet<Atom> = defect
        .jets()
        .into_iter()
        .filter(|j| !j.is_base())
        .map(Atom::Jet)
        .collect();
    let parts = defect.collect_coefficients(&basis)?;
    let mut sys = DeterminingSystem {
        equations: Vec::new(),
        unknowns: eq.unknown_functions().clone(),
    };
    for (m, c) in parts {
        sys.push(c, Some(m));
    }
    Ok(sys)
}

/// Substitute the closed forms and test `F*|_{v=u} + F == 0` symbolically.
pub fn verify_family(
    eq: &EvolutionEquation,
    closed: &ClosedFormFamily,
) -> Result<bool, VariationalError> {
    let bindings: BTreeMap<Atom, Expression> = closed
        .assignments
        .iter()
        .map(|(n, v)| (Atom::Func { name: *n, order: 0 }, v.clone()))
        .collect();
    let concrete = eq.substitute(&bindings)?;
    Ok(self_adjointness_defect(&concrete).is_zero())
}

/// Scale an expression so that its leading coefficient is rational one;
/// equations that differ by a constant factor compare equal afterwards.
pub fn monic(e: &Expression) -> Expression {
    match e.leading() {
        Some((_, c)) => match c.inverse() {
            Ok(inv) => e.scale(&inv),
            Err(_) => e.primitive(),
        },
        None => e.clone(),
    }
}

/// True when every equation of `a` is a nonzero constant multiple of an
/// equation of `b` and vice versa.
pub fn equivalent_systems<'a>(
    a: impl IntoIterator<Item = &'a Expression>,
    b: impl IntoIterator<Item = &'a Expression>,
) -> bool {
    let ka: Vec<Expression> = a.into_iter().filter(|e| !e.is_zero()).map(monic).collect();
    let kb: Vec<Expression> = b.into_iter().filter(|e| !e.is_zero()).map(monic).collect();
    ka.iter().all(|e| kb.contains(e)) && kb.iter().all(|e| ka.contains(e))
}
