use std::fmt;
use std::ops;

use super::atom::Atom;
use super::coeff::Rational;
use super::expression::Expression;
use super::{pow_exponent, ExprError};

/// Unnormalized expression tree, as produced by the parser or built by hand.
#[derive(Clone, Debug, PartialEq)]
pub enum RawExpr {
    Num(Rational),
    Atom(Atom),
    Add(Vec<RawExpr>),
    Mul(Vec<RawExpr>),
    Neg(Box<RawExpr>),
    Pow(Box<RawExpr>, Box<RawExpr>),
    Div(Box<RawExpr>, Box<RawExpr>),
}

impl RawExpr {
    pub fn pow(base: RawExpr, exp: RawExpr) -> RawExpr {
        RawExpr::Pow(Box::new(base), Box::new(exp))
    }

    pub fn int(n: i64) -> RawExpr {
        RawExpr::Num(super::coeff::int(n))
    }
}

impl ops::Div for RawExpr {
    type Output = RawExpr;

    fn div(self, den: RawExpr) -> RawExpr {
        RawExpr::Div(Box::new(self), Box::new(den))
    }
}

impl ops::Neg for RawExpr {
    type Output = RawExpr;

    fn neg(self) -> RawExpr {
        RawExpr::Neg(Box::new(self))
    }
}

/// Bring a raw tree into canonical form.
pub fn normalize(raw: &RawExpr) -> Result<Expression, ExprError> {
    match raw {
        RawExpr::Num(r) => Ok(Expression::rational(r.clone())),
        RawExpr::Atom(a) => Ok(Expression::atom(*a)),
        RawExpr::Add(items) => items
            .iter()
            .try_fold(Expression::zero(), |acc, it| Ok(acc.add(&normalize(it)?))),
        RawExpr::Mul(items) => items
            .iter()
            .try_fold(Expression::one(), |acc, it| Ok(acc.mul(&normalize(it)?))),
        RawExpr::Neg(inner) => Ok(normalize(inner)?.neg()),
        RawExpr::Pow(base, exp) => {
            let b = normalize(base)?;
            let e = normalize(exp)?;
            let exponent = e
                .as_coeff()
                .and_then(|c| c.to_exponent())
                .ok_or_else(|| {
                    ExprError::unsupported(
                        raw.to_string(),
                        "exponents must be integers or affine in the constants with integer coefficients",
                    )
                })?;
            pow_exponent(&b, &exponent)
        }
        RawExpr::Div(num, den) => {
            let n = normalize(num)?;
            let d = normalize(den)?;
            if d.is_zero() {
                return Err(ExprError::Coeff(super::CoeffError::DivisionByZero));
            }
            let inv = d.inverse().map_err(|_| {
                ExprError::unsupported(
                    raw.to_string(),
                    "division is limited to powers of u and constants",
                )
            })?;
            Ok(n.mul(&inv))
        }
    }
}

impl fmt::Display for RawExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, items: &[RawExpr], sep: &str) -> fmt::Result {
            f.write_str("(")?;
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{it}")?;
            }
            f.write_str(")")
        }
        match self {
            RawExpr::Num(r) => write!(f, "{r}"),
            RawExpr::Atom(a) => write!(f, "{a}"),
            RawExpr::Add(items) => join(f, items, " + "),
            RawExpr::Mul(items) => join(f, items, "*"),
            RawExpr::Neg(e) => write!(f, "-{e}"),
            RawExpr::Pow(b, e) => write!(f, "{b}^({e})"),
            RawExpr::Div(n, d) => write!(f, "({n})/({d})"),
        }
    }
}
