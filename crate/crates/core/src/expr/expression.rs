use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use num_traits::{One, Zero};

use super::atom::{Atom, Exponent, IndepVar, Jet};
use super::coeff::{int, Coeff, Rational};
use super::name::Name;
use super::ExprError;

/// Product of non-constant atoms raised to exponents. Factors are sorted by
/// atom and exponents are never zero; symbolic constants live in the
/// coefficient instead.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(Atom, Exponent)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Monomial {
        Monomial::atom_pow(a, Exponent::int(1))
    }

    pub fn atom_pow(a: Atom, e: Exponent) -> Monomial {
        debug_assert!(!a.is_const());
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (Atom, Exponent)>) -> Monomial {
        factors.into_iter().fold(Monomial::one(), |m, (a, e)| {
            m.mul(&Monomial::atom_pow(a, e))
        })
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    pub fn exponent_of(&self, a: &Atom) -> Option<&Exponent> {
        self.0
            .binary_search_by(|(b, _)| b.cmp(a))
            .ok()
            .map(|i| &self.0[i].1)
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.exponent_of(a).is_some()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = &self.0[i];
            let (b, eb) = &other.0[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((*a, ea.clone()));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((*b, eb.clone()));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = ea.add(eb);
                    if !e.is_zero() {
                        out.push((*a, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Remove atom `a`, returning its exponent and the cofactor.
    pub fn split(&self, a: &Atom) -> (Option<Exponent>, Monomial) {
        let mut rest = self.clone();
        match rest.0.binary_search_by(|(b, _)| b.cmp(a)) {
            Ok(i) => {
                let (_, e) = rest.0.remove(i);
                (Some(e), rest)
            }
            Err(_) => (None, rest),
        }
    }

    pub fn pow(&self, k: i64) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|(a, e)| {
                    let e = e.scale(k);
                    (!e.is_zero()).then_some((*a, e))
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.0.iter().map(|(a, _)| *a)
    }

    /// Total differential weight: sum of jet orders times integer exponents.
    pub fn weight(&self) -> i64 {
        self.0
            .iter()
            .map(|(a, e)| a.weight() as i64 * e.grade())
            .sum()
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    // Graded lexicographic: heavier monomials first, then higher integer
    // degree, then the sorted factor list.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .weight()
            .cmp(&self.weight())
            .then_with(|| other.degree().cmp(&self.degree()))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl Monomial {
    fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| e.grade()).sum()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut factors: Vec<&(Atom, Exponent)> = self.0.iter().collect();
        factors.sort_by_key(|(a, _)| print_rank(a));
        for (i, (a, e)) in factors.into_iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{a}")?;
            match e.as_int() {
                Some(1) => {}
                Some(n) if n < 0 => write!(f, "^({n})")?,
                Some(n) => write!(f, "^{n}")?,
                None if e.constant_part() == 0
                    && e.symbolic_part().count() == 1
                    && e.symbolic_part().all(|(_, c)| c == 1) =>
                {
                    write!(f, "^{e}")?
                }
                None => write!(f, "^({e})")?,
            }
        }
        Ok(())
    }
}

// t, x, functions, then u-jets by increasing order.
fn print_rank(a: &Atom) -> (u8, u32, Atom) {
    match a {
        Atom::Indep(_) => (0, 0, *a),
        Atom::Func { .. } => (1, 0, *a),
        Atom::Jet(j) => (2, j.order(), *a),
        Atom::Const(_) => (3, 0, *a),
    }
}

/// Canonical sum of `coefficient * monomial` terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Expression {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Expression {
    pub fn zero() -> Expression {
        Expression::default()
    }

    pub fn one() -> Expression {
        Expression::from_coeff(Coeff::one())
    }

    pub fn int(n: i64) -> Expression {
        Expression::from_coeff(Coeff::from_int(n))
    }

    pub fn rational(r: Rational) -> Expression {
        Expression::from_coeff(Coeff::from_rational(r))
    }

    pub fn from_coeff(c: Coeff) -> Expression {
        Expression::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Expression {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Expression { terms }
    }

    pub fn atom(a: Atom) -> Expression {
        match a {
            Atom::Const(n) => Expression::from_coeff(Coeff::var(n)),
            _ => Expression::term(Monomial::atom(a), Coeff::one()),
        }
    }

    pub fn atom_pow(a: Atom, e: Exponent) -> Result<Expression, ExprError> {
        match a {
            Atom::Const(n) => match e.as_int() {
                Some(k) => Ok(Expression::from_coeff(Coeff::var(n).pow(k)?)),
                None => Err(ExprError::unsupported(
                    format!("{n}^({e})"),
                    "symbolic constants cannot carry symbolic exponents",
                )),
            },
            _ => Ok(Expression::term(Monomial::atom_pow(a, e), Coeff::one())),
        }
    }

    pub fn jet(var: &str, t: u8, x: u8) -> Expression {
        Expression::atom(Atom::jet(var, t, x))
    }

    pub fn constant(name: &str) -> Expression {
        Expression::atom(Atom::constant(name))
    }

    pub fn func(name: &str, order: u32) -> Expression {
        Expression::atom(Atom::func(name, order))
    }

    pub fn indep(v: IndepVar) -> Expression {
        Expression::atom(Atom::Indep(v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient_of(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// The coefficient if this expression is free of all non-constant atoms.
    pub fn as_coeff(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.as_coeff().and_then(|c| c.as_rational())
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                let sum = slot.add(&c);
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Expression) -> Expression {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn neg(&self) -> Expression {
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        let mut out = Expression::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &Coeff) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn scale_rational(&self, r: &Rational) -> Expression {
        self.scale(&Coeff::from_rational(r.clone()))
    }

    pub fn mul_monomial(&self, mono: &Monomial) -> Expression {
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(mono), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Expression {
        let mut out = Expression::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Multiplicative inverse of a single-term expression.
    pub fn inverse(&self) -> Result<Expression, ExprError> {
        if self.terms.len() != 1 {
            return Err(ExprError::unsupported(
                self.to_string(),
                "only single-term expressions (powers of u times constants) can be inverted",
            ));
        }
        let (m, c) = self.terms.iter().next().unwrap();
        Ok(Expression::term(m.pow(-1), c.inverse()?))
    }

    /// Divide every coefficient by a constant coefficient.
    pub fn div_coeff(&self, c: &Coeff) -> Result<Expression, ExprError> {
        Ok(self.scale(&c.inverse()?))
    }

    /// All non-constant atoms appearing in some term.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms.keys().flat_map(|m| m.atoms()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.terms.values().flat_map(|c| c.names()).collect()
    }

    pub fn jets(&self) -> BTreeSet<Jet> {
        self.atoms()
            .into_iter()
            .filter_map(|a| a.as_jet())
            .collect()
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        self.terms.keys().any(|m| m.contains(a))
    }

    pub fn has_t_derivatives_of(&self, var: Name) -> bool {
        self.jets().iter().any(|j| j.var == var && j.t > 0)
    }

    pub fn mentions_var(&self, var: Name) -> bool {
        self.jets().iter().any(|j| j.var == var)
    }

    pub fn function_names(&self) -> BTreeSet<Name> {
        self.atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Func { name, .. } => Some(name),
                _ => None,
            })
            .collect()
    }

    /// Highest pure-x derivative order of `var` present.
    pub fn x_order(&self, var: Name) -> u32 {
        self.jets()
            .iter()
            .filter(|j| j.var == var)
            .map(|j| j.x as u32)
            .max()
            .unwrap_or(0)
    }

    /// Formal partial derivative with respect to a jet coordinate or an
    /// independent variable. Function atoms `f^(k)(u)` depend on the base
    /// jet `u` through `f^(k+1)(u)`.
    pub fn diff_partial(&self, a: &Atom) -> Expression {
        let base_u = matches!(a, Atom::Jet(j) if j.is_base() && j.var.as_str() == "u");
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            for (i, (b, e)) in m.0.iter().enumerate() {
                if b == a {
                    let mut rest = m.0.clone();
                    let lowered = e.add_int(-1);
                    if lowered.is_zero() {
                        rest.remove(i);
                    } else {
                        rest[i].1 = lowered;
                    }
                    out.add_term(Monomial(rest), c.mul(&Coeff::from_exponent(e)));
                } else if base_u {
                    if let Atom::Func { name, order } = b {
                        let mut rest = m.0.clone();
                        let lowered = e.add_int(-1);
                        if lowered.is_zero() {
                            rest.remove(i);
                        } else {
                            rest[i].1 = lowered;
                        }
                        let next = Monomial::atom(Atom::Func {
                            name: *name,
                            order: order + 1,
                        });
                        out.add_term(Monomial(rest).mul(&next), c.mul(&Coeff::from_exponent(e)));
                    }
                }
            }
        }
        out
    }

    /// Coefficients of `self` viewed as a polynomial in the `basis` atoms.
    pub fn collect_coefficients(
        &self,
        basis: &BTreeSet<Atom>,
    ) -> Result<BTreeMap<Monomial, Expression>, ExprError> {
        let mut out: BTreeMap<Monomial, Expression> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut key = Vec::new();
            let mut rest = Vec::new();
            for (a, e) in &m.0 {
                if basis.contains(a) {
                    match e.as_int() {
                        Some(k) if k > 0 => key.push((*a, e.clone())),
                        _ => {
                            return Err(ExprError::NotPolynomial {
                                atom: a.to_string(),
                                exponent: e.to_string(),
                            })
                        }
                    }
                } else {
                    rest.push((*a, e.clone()));
                }
            }
            out.entry(Monomial(key))
                .or_default()
                .add_term(Monomial(rest), c.clone());
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Exact evaluation; `None` if some atom is unbound or a denominator
    /// vanishes.
    pub fn eval(&self, env: &dyn Fn(Atom) -> Option<Rational>) -> Option<Rational> {
        let consts = |n: Name| env(Atom::Const(n));
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut term = c.eval(&consts)?;
            for (a, e) in &m.0 {
                let base = env(*a)?;
                let k = match e.as_int() {
                    Some(k) => k,
                    None => {
                        let v = Coeff::from_exponent(e).eval(&consts)?;
                        if !v.is_integer() {
                            return None;
                        }
                        num_traits::ToPrimitive::to_i64(&v.to_integer())?
                    }
                };
                if k < 0 && base.is_zero() {
                    return None;
                }
                term *= if k >= 0 {
                    num_traits::pow(base, k as usize)
                } else {
                    num_traits::pow(Rational::one() / base, (-k) as usize)
                };
            }
            acc += term;
        }
        Some(acc)
    }

    /// Apply a coefficient map to every term (e.g. constant substitution).
    pub fn map_coeffs(
        &self,
        f: impl Fn(&Coeff) -> Result<Coeff, ExprError>,
    ) -> Result<Expression, ExprError> {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Leading term in canonical order.
    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next()
    }

    /// Divide by the leading coefficient when it is rational, making the
    /// expression monic. Used to compare equations up to a scalar multiple.
    pub fn primitive(&self) -> Expression {
        match self.leading() {
            Some((_, c)) => {
                let lead = c.leading_rational();
                if lead.is_zero() {
                    self.clone()
                } else {
                    self.scale_rational(&(Rational::one() / lead))
                }
            }
            None => self.clone(),
        }
    }

    /// `Some(c)` with `self == c * other` for a constant coefficient `c`.
    pub fn ratio_to(&self, other: &Expression) -> Option<Coeff> {
        if self.is_zero() && other.is_zero() {
            return Some(Coeff::one());
        }
        let (m, c_other) = other.leading()?;
        let c_self = self.terms.get(m)?;
        let scale = c_self.div(c_other).ok()?;
        self.sub(&other.scale(&scale)).is_zero().then_some(scale)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let simple = !c.is_compound();
            let neg = simple && c.is_negative_lead();
            let mag = if neg { c.neg() } else { c.clone() };
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                if mag.is_compound()
                    && mag.numerator().len() > 1
                    && mag.denominator_factors().next().is_none()
                {
                    write!(f, "({mag})")?;
                } else {
                    write!(f, "{mag}")?;
                }
            } else {
                if !mag.is_one() {
                    if mag.numerator().len() > 1 && mag.denominator_factors().next().is_none() {
                        write!(f, "({mag})*")?;
                    } else {
                        write!(f, "{mag}*")?;
                    }
                }
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

impl From<Atom> for Expression {
    fn from(a: Atom) -> Self {
        Expression::atom(a)
    }
}

impl From<i64> for Expression {
    fn from(n: i64) -> Self {
        Expression::rational(int(n))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl ops::$trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression::$impl(self, rhs)
            }
        }
        impl ops::$trait<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$impl(&self, &rhs)
            }
        }
        impl ops::$trait<&Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                Expression::$impl(&self, rhs)
            }
        }
        impl ops::$trait<Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$impl(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(&self)
    }
}

impl ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::neg(self)
    }
}
