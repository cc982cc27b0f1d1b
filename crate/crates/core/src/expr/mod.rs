//! Canonical symbolic expressions over jet coordinates, function-symbol
//! derivatives and symbolic constants.
//!
//! The supported class is: differential polynomials in the jet coordinates
//! whose coefficients are Laurent polynomials in `u`, derivatives `f^(k)(u)`
//! of named functions, powers `u^(c0 + c1*mu + ...)` with affine symbolic
//! exponents, and rational functions of the symbolic constants with affine
//! denominators. On this class [`Expression`] is a canonical form, so
//! `is_zero` is a complete zero test.

mod atom;
mod coeff;
mod expression;
mod name;
mod raw;

use std::collections::{BTreeMap, HashMap};

pub use atom::{Atom, Exponent, IndepVar, Jet};
pub use coeff::{int, rat, Coeff, CoeffError, ConstMono, ConstPoly, LinForm, Rational};
pub use expression::{Expression, Monomial};
pub use name::Name;
pub use raw::{normalize, RawExpr};

use crate::jet::total_derivative;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unsupported form `{subterm}`: {reason}")]
    UnsupportedForm { subterm: String, reason: String },
    #[error("`{atom}` appears with exponent {exponent}; expected a positive integer power")]
    NotPolynomial { atom: String, exponent: String },
    #[error("cannot bind the function derivative `{0}` directly; bind the function itself")]
    FuncDerivativeBinding(String),
    #[error("function `{name}` can only be bound to an expression in u, got `{value}`")]
    InvalidFunctionBinding { name: String, value: String },
    #[error("constant `{name}` can only be bound to a constant expression, got `{value}`")]
    InvalidConstBinding { name: String, value: String },
    #[error("cyclic binding: the value for `{0}` refers to a bound atom")]
    CyclicBinding(String),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

impl ExprError {
    pub fn unsupported(subterm: impl Into<String>, reason: impl Into<String>) -> ExprError {
        ExprError::UnsupportedForm {
            subterm: subterm.into(),
            reason: reason.into(),
        }
    }
}

/// The dependent variable every function symbol is evaluated at.
pub fn base_var() -> Name {
    Name::new("u")
}

pub fn is_zero(e: &Expression) -> bool {
    e.is_zero()
}

/// Raise an expression to an (integer or affine symbolic) exponent.
pub fn pow_exponent(base: &Expression, e: &Exponent) -> Result<Expression, ExprError> {
    if let Some(k) = e.as_int() {
        return if k >= 0 {
            Ok(base.pow(k as u32))
        } else {
            Ok(base.inverse()?.pow((-k) as u32))
        };
    }
    let mut terms = base.terms();
    let (m, c) = match (terms.next(), terms.next()) {
        (Some(t), None) => t,
        _ => {
            return Err(ExprError::unsupported(
                format!("({base})^({e})"),
                "only powers of u may carry a symbolic exponent",
            ))
        }
    };
    if !c.is_one() {
        return Err(ExprError::unsupported(
            format!("({base})^({e})"),
            "a constant factor cannot be raised to a symbolic power",
        ));
    }
    let mut factors = Vec::new();
    for (a, ea) in m.factors() {
        let k = ea.as_int().ok_or_else(|| {
            ExprError::unsupported(
                format!("({base})^({e})"),
                "exponent is not affine in the constants",
            )
        })?;
        match a {
            Atom::Jet(j) if j.is_base() => factors.push((*a, e.scale(k))),
            _ => {
                return Err(ExprError::unsupported(
                    format!("({base})^({e})"),
                    "only powers of u may carry a symbolic exponent",
                ))
            }
        }
    }
    Ok(Expression::term(
        Monomial::from_factors(factors),
        Coeff::one(),
    ))
}

/// Simultaneous substitution of atoms followed by normalization.
///
/// * Binding a base jet `w` rebinds every jet `w_J` to `D_J` of the value, so
///   `{v -> u}` maps `v_x` to `u_x`.
/// * Binding a function `f` (order 0) replaces `f^(k)(u)` by the k-th
///   u-derivative of the value, which must be an expression in `u` only.
/// * Binding a constant requires a constant value; symbolic exponents are
///   re-evaluated and must stay affine with integer coefficients.
pub fn substitute(
    e: &Expression,
    bindings: &BTreeMap<Atom, Expression>,
) -> Result<Expression, ExprError> {
    if bindings.is_empty() {
        return Ok(e.clone());
    }
    validate_bindings(bindings)?;

    let const_binds: HashMap<Name, Coeff> =
        bindings
            .iter()
            .filter_map(|(a, v)| match a {
                Atom::Const(n) => Some(v.as_coeff().map(|c| (*n, c)).ok_or_else(|| {
                    ExprError::InvalidConstBinding {
                        name: n.to_string(),
                        value: v.to_string(),
                    }
                })),
                _ => None,
            })
            .collect::<Result<_, _>>()?;
    let bind_const = |n: Name| const_binds.get(&n).cloned();

    let mut cache: HashMap<Atom, Option<Expression>> = HashMap::new();
    let mut replacement = |a: Atom| -> Option<Expression> {
        cache
            .entry(a)
            .or_insert_with(|| atom_replacement(a, bindings))
            .clone()
    };

    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        let c = if const_binds.is_empty() {
            c.clone()
        } else {
            c.substitute(&bind_const)?
        };
        let mut acc = Expression::from_coeff(c);
        for (a, ea) in m.factors() {
            let ea = if const_binds.is_empty() || !ea.is_symbolic() {
                ea.clone()
            } else {
                Coeff::from_exponent(ea)
                    .substitute(&bind_const)?
                    .to_exponent()
                    .ok_or_else(|| {
                        ExprError::unsupported(
                            format!("{a}^({ea})"),
                            "exponent is no longer affine with integer coefficients",
                        )
                    })?
            };
            let base = replacement(*a).unwrap_or_else(|| Expression::atom(*a));
            acc = acc.mul(&pow_exponent(&base, &ea)?);
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc);
    }
    Ok(out)
}

fn validate_bindings(bindings: &BTreeMap<Atom, Expression>) -> Result<(), ExprError> {
    for (a, v) in bindings {
        match a {
            Atom::Func { order, .. } if *order > 0 => {
                return Err(ExprError::FuncDerivativeBinding(a.to_string()))
            }
            Atom::Func { name, .. } => {
                let ok = v.atoms().iter().all(|b| match b {
                    Atom::Jet(j) => j.is_base() && j.var == base_var(),
                    Atom::Func { .. } => true,
                    _ => false,
                });
                if !ok {
                    return Err(ExprError::InvalidFunctionBinding {
                        name: name.to_string(),
                        value: v.to_string(),
                    });
                }
            }
            _ => {}
        }
    }
    for (key, v) in bindings {
        for other in bindings.keys() {
            let hit = match other {
                Atom::Jet(j) if j.is_base() => v.mentions_var(j.var),
                Atom::Jet(_) | Atom::Indep(_) => v.contains_atom(other),
                Atom::Func { name, .. } => v.function_names().contains(name),
                Atom::Const(n) => v.constants().contains(n),
            };
            if hit {
                return Err(ExprError::CyclicBinding(key.to_string()));
            }
        }
    }
    Ok(())
}

fn atom_replacement(a: Atom, bindings: &BTreeMap<Atom, Expression>) -> Option<Expression> {
    if let Some(v) = bindings.get(&a) {
        return Some(v.clone());
    }
    match a {
        Atom::Jet(j) if !j.is_base() => {
            let v = bindings.get(&Atom::Jet(Jet::base(j.var)))?;
            let mut d = v.clone();
            for _ in 0..j.t {
                d = total_derivative(&d, IndepVar::T);
            }
            for _ in 0..j.x {
                d = total_derivative(&d, IndepVar::X);
            }
            Some(d)
        }
        Atom::Func { name, order } if order > 0 => {
            let v = bindings.get(&Atom::Func { name, order: 0 })?;
            let u = Atom::Jet(Jet::base(base_var()));
            let mut d = v.clone();
            for _ in 0..order {
                d = d.diff_partial(&u);
            }
            Some(d)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expression {
        Expression::jet("u", 0, 0)
    }

    fn bind(pairs: &[(Atom, Expression)]) -> BTreeMap<Atom, Expression> {
        pairs.iter().cloned().collect()
    }

    #[test]
    fn v_to_u_rebinds_jets() {
        let e = Expression::jet("v", 0, 0) * Expression::jet("u", 0, 3);
        let b = bind(&[(Atom::jet("v", 0, 0), u())]);
        assert_eq!(
            substitute(&e, &b).unwrap(),
            &u() * &Expression::jet("u", 0, 3)
        );
        let e = Expression::jet("v", 0, 1) * Expression::jet("u", 0, 1);
        assert_eq!(
            substitute(&e, &b).unwrap(),
            Expression::jet("u", 0, 1).pow(2)
        );
    }

    #[test]
    fn function_binding_differentiates() {
        // r(u) u_xxx with r -> a1 + a2/u
        let a1 = Expression::constant("a1");
        let a2 = Expression::constant("a2");
        let value = &a1 + &a2 * u().inverse().unwrap();
        let e = Expression::func("r", 0) * Expression::jet("u", 0, 3);
        let b = bind(&[(Atom::func("r", 0), value.clone())]);
        let uxxx = Expression::jet("u", 0, 3);
        let expected = &a1 * &uxxx + &a2 * &u().inverse().unwrap() * &uxxx;
        assert_eq!(substitute(&e, &b).unwrap(), expected);
        // r'(u) -> -a2/u^2
        let d = substitute(&Expression::func("r", 1), &b).unwrap();
        assert_eq!(d, -(&a2 * &u().pow(2).inverse().unwrap()));
    }

    #[test]
    fn derivative_binding_rejected() {
        let b = bind(&[(Atom::func("r", 1), u())]);
        assert!(matches!(
            substitute(&Expression::func("r", 1), &b),
            Err(ExprError::FuncDerivativeBinding(_))
        ));
    }

    #[test]
    fn cyclic_binding_rejected() {
        let b = bind(&[
            (Atom::jet("v", 0, 0), u()),
            (Atom::jet("u", 0, 0), Expression::jet("v", 0, 0)),
        ]);
        assert!(matches!(
            substitute(&u(), &b),
            Err(ExprError::CyclicBinding(_))
        ));
    }

    #[test]
    fn constant_binding_updates_exponents() {
        let mu = Name::new("mu");
        let e = Expression::term(
            Monomial::atom_pow(Atom::jet("u", 0, 0), Exponent::new(2, [(mu, 1)])),
            Coeff::one(),
        );
        let b = bind(&[(Atom::Const(mu), Expression::int(1))]);
        assert_eq!(substitute(&e, &b).unwrap(), u().pow(3));
    }

    #[test]
    fn q_from_closed_form_is_consistent() {
        // u q - (u p)' with q = p' + p/u vanishes
        let p = Expression::func("p", 0);
        let q_value = Expression::func("p", 1) + &p * &u().inverse().unwrap();
        let e = &u() * &Expression::func("q", 0) - (&u() * &Expression::func("p", 1) + &p);
        let b = bind(&[(Atom::func("q", 0), q_value)]);
        assert!(is_zero(&substitute(&e, &b).unwrap()));
    }
}
