//! Conserved vectors from a point symmetry and the formal Lagrangian `v F`.

use std::fmt;

use crate::expr::{Atom, Coeff, Exponent, Expression, IndepVar, Jet, Monomial, Name};
use crate::jet::{eliminate_t_derivatives, total_derivative, EvolutionEquation, Generator};
use crate::variational::{adjoint_var, self_adjointness_test, v_to_u};

/// Highest equation order the conserved-vector formula is written out for.
pub const MAX_ORDER: u32 = 4;

const REDUCTION_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConslawError {
    #[error("equation of order {0} is not supported (maximum {MAX_ORDER})")]
    OrderTooHigh(u32),
    #[error("expected a {expected} vector, got a {found} one")]
    WrongStage { expected: Stage, found: Stage },
    #[error("vector still contains the adjoint variable v")]
    AdjointVariablePresent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    RawWithV,
    Specialized,
    Reduced,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::RawWithV => "raw",
            Stage::Specialized => "specialized",
            Stage::Reduced => "reduced",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservedVector {
    pub c0: Expression,
    pub c1: Expression,
    pub equation: EvolutionEquation,
    pub generator: Generator,
    pub stage: Stage,
    pub verified: bool,
    /// Set when `v = u` was substituted for an equation that is not
    /// self-adjoint.
    pub premise_unverified: bool,
    /// Set when trivial-part reduction hit its iteration cap.
    pub reduction_capped: bool,
}

impl fmt::Display for ConservedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C0 = {}, C1 = {}", self.c0, self.c1)
    }
}

fn jet(var: Name, t: u8, x: u8) -> Atom {
    Atom::Jet(Jet::new(var, t, x))
}

fn dx_n(e: &Expression, n: u32) -> Expression {
    let mut d = e.clone();
    for _ in 0..n {
        d = total_derivative(&d, IndepVar::X);
    }
    d
}

/// `C0 = tau L + W dL/du_t` and
/// `C1 = xi L + sum_k D_x^k(W) sum_{j>=k} (-D_x)^(j-k) dL/du_(x^(j+1))`
/// with `L = v F`.
pub fn conserved_vector(
    eq: &EvolutionEquation,
    g: &Generator,
) -> Result<ConservedVector, ConslawError> {
    let n = eq.order();
    if n > MAX_ORDER {
        return Err(ConslawError::OrderTooHigh(n));
    }
    let u = eq.var();
    let v = Expression::atom(Atom::Jet(Jet::base(adjoint_var())));
    let l = v.mul(eq.f());
    let w = g.characteristic();

    let c0 = g.tau.mul(&l).add(&w.mul(&l.diff_partial(&jet(u, 1, 0))));

    let partials: Vec<Expression> = (1..=n)
        .map(|k| l.diff_partial(&jet(u, 0, k as u8)))
        .collect();
    let mut c1 = g.xi.mul(&l);
    let mut dw = w;
    for k in 0..n {
        let mut bracket = Expression::zero();
        for j in k..n {
            let term = dx_n(&partials[j as usize], j - k);
            if (j - k) % 2 == 0 {
                bracket = bracket.add(&term);
            } else {
                bracket = bracket.sub(&term);
            }
        }
        c1 = c1.add(&dw.mul(&bracket));
        dw = total_derivative(&dw, IndepVar::X);
    }

    Ok(ConservedVector {
        c0,
        c1,
        equation: eq.clone(),
        generator: g.clone(),
        stage: Stage::RawWithV,
        verified: false,
        premise_unverified: false,
        reduction_capped: false,
    })
}

/// Set `v = u`. The result is a conservation law of the equation itself only
/// when the equation is self-adjoint; otherwise `premise_unverified` is set.
pub fn specialize_v(cv: &ConservedVector) -> Result<ConservedVector, ConslawError> {
    if cv.stage != Stage::RawWithV {
        return Err(ConslawError::WrongStage {
            expected: Stage::RawWithV,
            found: cv.stage,
        });
    }
    let self_adjoint = self_adjointness_test(&cv.equation).is_self_adjoint;
    let mut out = ConservedVector {
        c0: v_to_u(&cv.c0),
        c1: v_to_u(&cv.c1),
        stage: Stage::Specialized,
        verified: false,
        premise_unverified: !self_adjoint,
        ..cv.clone()
    };
    out.verified = divergence_residual(&out)?.is_zero();
    Ok(out)
}

/// `D_t C0 + D_x C1` restricted to solutions.
pub fn divergence_residual(cv: &ConservedVector) -> Result<Expression, ConslawError> {
    let v = adjoint_var();
    if cv.c0.mentions_var(v) || cv.c1.mentions_var(v) {
        return Err(ConslawError::AdjointVariablePresent);
    }
    let div = total_derivative(&cv.c0, IndepVar::T).add(&total_derivative(&cv.c1, IndepVar::X));
    Ok(eliminate_t_derivatives(&div, &cv.equation))
}

/// Check the divergence identity on solutions and record the outcome.
pub fn verify_divergence(cv: &mut ConservedVector) -> Result<bool, ConslawError> {
    let ok = divergence_residual(cv)?.is_zero();
    cv.verified = ok;
    Ok(ok)
}

/// Highest x-order among the jets of `var` in the monomial.
fn max_x_order(m: &Monomial, var: Name) -> u8 {
    m.atoms()
        .filter_map(|a| a.as_jet())
        .filter(|j| j.var == var)
        .map(|j| j.x)
        .max()
        .unwrap_or(0)
}

/// Antiderivative with respect to `u_(x^k)` of terms whose other factors
/// have lower x-order. Terms that cannot be integrated in closed form are
/// left out.
fn integrate_in_jet(c: &Expression, var: Name, k: u8) -> Expression {
    let target = jet(var, 0, k);
    let mut out = Expression::zero();
    for (m, coeff) in c.terms() {
        let (e, rest) = m.split(&target);
        let e = e.unwrap_or_else(|| Exponent::int(0));
        let funcs: Vec<(Name, u32)> = rest
            .atoms()
            .filter_map(|a| match a {
                Atom::Func { name, order } => Some((name, order)),
                _ => None,
            })
            .collect();
        if k == 0 && !funcs.is_empty() {
            // f^(n)(u) integrates to f^(n-1)(u) when nothing else depends on u
            if !e.is_zero() || funcs.len() != 1 || funcs[0].1 == 0 {
                continue;
            }
            let (name, order) = funcs[0];
            let f_atom = Atom::Func { name, order };
            if rest.exponent_of(&f_atom).and_then(|x| x.as_int()) != Some(1) {
                continue;
            }
            let (_, others) = rest.split(&f_atom);
            let lowered = others.mul(&Monomial::atom(Atom::Func {
                name,
                order: order - 1,
            }));
            out = out.add(&Expression::term(lowered, coeff.clone()));
            continue;
        }
        let e1 = e.add_int(1);
        if e1.is_zero() {
            continue;
        }
        let Ok(scale) = Coeff::from_exponent(&e1).inverse() else {
            continue;
        };
        let raised = rest.mul(&Monomial::atom_pow(target, e1));
        out = out.add(&Expression::term(raised, coeff.mul(&scale)));
    }
    out
}

/// One integration-by-parts pass on the highest x-order that admits one.
/// Returns `B` with `C0 = A + D_x(B)`, or zero if nothing was found.
fn exact_part(c0: &Expression, var: Name) -> Expression {
    let top = c0
        .terms()
        .map(|(m, _)| max_x_order(m, var))
        .max()
        .unwrap_or(0);
    for k in (1..=top).rev() {
        let target = jet(var, 0, k);
        let mut linear = Expression::zero();
        for (m, c) in c0.terms() {
            let (e, rest) = m.split(&target);
            if e.and_then(|e| e.as_int()) != Some(1) || max_x_order(&rest, var) >= k {
                continue;
            }
            linear = linear.add(&Expression::term(rest, c.clone()));
        }
        if linear.is_zero() {
            continue;
        }
        let b = integrate_in_jet(&linear, var, k - 1);
        if !b.is_zero() {
            return b;
        }
    }
    Expression::zero()
}

/// Drop terms that are constant in the relevant direction and carry no jets:
/// functions of x alone in C0, functions of t alone in C1.
fn drop_trivial_terms(e: &Expression, keep_if: Atom) -> Expression {
    Expression::from_terms(
        e.terms()
            .filter(|(m, _)| {
                m.atoms()
                    .any(|a| a == keep_if || matches!(a, Atom::Jet(_) | Atom::Func { .. }))
            })
            .map(|(m, c)| (m.clone(), c.clone())),
    )
}

/// Remove trivial contributions: on-shell terms and total x-derivatives
/// in the density, moved into the flux as `C1 + D_t(B)`.
pub fn reduce_trivial(cv: &ConservedVector) -> Result<ConservedVector, ConslawError> {
    if cv.stage == Stage::RawWithV {
        return Err(ConslawError::WrongStage {
            expected: Stage::Specialized,
            found: cv.stage,
        });
    }
    let eq = &cv.equation;
    let var = eq.var();
    let mut c0 = eliminate_t_derivatives(&cv.c0, eq);
    let mut c1 = eliminate_t_derivatives(&cv.c1, eq);
    let mut capped = true;
    for _ in 0..REDUCTION_CAP {
        let b = exact_part(&c0, var);
        if b.is_zero() {
            capped = false;
            break;
        }
        c0 = c0.sub(&total_derivative(&b, IndepVar::X));
        c1 = eliminate_t_derivatives(&c1.add(&total_derivative(&b, IndepVar::T)), eq);
    }
    c0 = drop_trivial_terms(&c0, Atom::t());
    c1 = drop_trivial_terms(&c1, Atom::x());
    let mut out = ConservedVector {
        c0,
        c1,
        stage: Stage::Reduced,
        reduction_capped: capped,
        ..cv.clone()
    };
    verify_divergence(&mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// `s` with `C0(second) = s * C0(first)` after reduction.
    pub scale: Option<Coeff>,
}

/// Compare two conservation laws by their reduced densities up to a nonzero
/// constant factor.
pub fn equivalent_up_to_trivial(
    first: &ConservedVector,
    second: &ConservedVector,
) -> Result<Equivalence, ConslawError> {
    let reduce = |cv: &ConservedVector| -> Result<ConservedVector, ConslawError> {
        match cv.stage {
            Stage::Reduced => Ok(cv.clone()),
            Stage::Specialized => reduce_trivial(cv),
            Stage::RawWithV => reduce_trivial(&specialize_v(cv)?),
        }
    };
    let a = reduce(first)?;
    let b = reduce(second)?;
    if a.c0.is_zero() || b.c0.is_zero() {
        return Ok(Equivalence {
            equivalent: false,
            scale: None,
        });
    }
    let scale = b.c0.ratio_to(&a.c0).filter(|s| !s.is_zero());
    Ok(Equivalence {
        equivalent: scale.is_some(),
        scale,
    })
}
