//! Term coefficients: rational functions of the symbolic constants.
//!
//! A coefficient is a Laurent polynomial over Q in the constants divided by a
//! product of normalized affine forms (e.g. `mu + 2`). Affine forms are
//! irreducible and pairwise coprime after normalization, and common factors
//! are cancelled eagerly, so the representation is canonical: two
//! coefficients are equal iff their fields are equal.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::atom::Exponent;
use super::name::Name;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Laurent monomial in the symbolic constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConstMono(Vec<(Name, i32)>);

impl ConstMono {
    pub fn one() -> ConstMono {
        ConstMono(Vec::new())
    }

    pub fn var(n: Name) -> ConstMono {
        ConstMono(vec![(n, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| *e as i64).sum()
    }

    pub fn exponent_of(&self, n: Name) -> i32 {
        self.0
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Name, i32)] {
        &self.0
    }

    pub fn mul(&self, other: &ConstMono) -> ConstMono {
        let mut out: BTreeMap<Name, i32> = self.0.iter().copied().collect();
        for (n, e) in &other.0 {
            *out.entry(*n).or_insert(0) += e;
        }
        ConstMono(out.into_iter().filter(|(_, e)| *e != 0).collect())
    }

    pub fn inverse(&self) -> ConstMono {
        ConstMono(self.0.iter().map(|(n, e)| (*n, -e)).collect())
    }

    /// Remove the factor `n` entirely, returning its exponent.
    fn split(&self, n: Name) -> (i32, ConstMono) {
        let e = self.exponent_of(n);
        (
            e,
            ConstMono(self.0.iter().filter(|(m, _)| *m != n).copied().collect()),
        )
    }

    fn with(&self, n: Name, e: i32) -> ConstMono {
        self.mul(&ConstMono(if e == 0 { vec![] } else { vec![(n, e)] }))
    }
}

impl PartialOrd for ConstMono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ConstMono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Laurent polynomial with rational coefficients in the symbolic constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstPoly(BTreeMap<ConstMono, Rational>);

impl ConstPoly {
    pub fn zero() -> ConstPoly {
        ConstPoly(BTreeMap::new())
    }

    pub fn from_rational(r: Rational) -> ConstPoly {
        let mut m = BTreeMap::new();
        if !r.is_zero() {
            m.insert(ConstMono::one(), r);
        }
        ConstPoly(m)
    }

    pub fn monomial(m: ConstMono, r: Rational) -> ConstPoly {
        let mut out = BTreeMap::new();
        if !r.is_zero() {
            out.insert(m, r);
        }
        ConstPoly(out)
    }

    pub fn var(n: Name) -> ConstPoly {
        ConstPoly::monomial(ConstMono::var(n), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ConstMono, &Rational)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: ConstMono, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&m);
        }
    }

    pub fn add(&self, other: &ConstPoly) -> ConstPoly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> ConstPoly {
        ConstPoly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &ConstPoly) -> ConstPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ConstPoly) -> ConstPoly {
        let mut out = ConstPoly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, r: &Rational) -> ConstPoly {
        if r.is_zero() {
            return ConstPoly::zero();
        }
        ConstPoly(self.0.iter().map(|(m, c)| (m.clone(), c * r)).collect())
    }

    pub fn mul_mono(&self, mono: &ConstMono) -> ConstPoly {
        ConstPoly(
            self.0
                .iter()
                .map(|(m, c)| (m.mul(mono), c.clone()))
                .collect(),
        )
    }

    pub fn names(&self) -> impl Iterator<Item = Name> + '_ {
        self.0.keys().flat_map(|m| m.0.iter().map(|(n, _)| *n))
    }

    pub fn eval(&self, values: &dyn Fn(Name) -> Option<Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.0 {
            let mut term = c.clone();
            for (n, e) in &m.0 {
                let v = values(*n)?;
                if *e < 0 && v.is_zero() {
                    return None;
                }
                term *= pow_rational(&v, *e);
            }
            acc += term;
        }
        Some(acc)
    }

    /// Exact division by an affine form; `None` if not divisible.
    fn div_linform(&self, form: &LinForm) -> Option<ConstPoly> {
        if self.is_zero() {
            return Some(ConstPoly::zero());
        }
        let y = form.lead;
        // beta = form - y
        let beta = form.tail_poly();
        let mut by_degree: BTreeMap<i32, ConstPoly> = BTreeMap::new();
        for (m, c) in &self.0 {
            let (e, rest) = m.split(y);
            by_degree
                .entry(e)
                .or_insert_with(ConstPoly::zero)
                .add_term(rest, c.clone());
        }
        let lo = *by_degree.keys().next().unwrap();
        let hi = *by_degree.keys().next_back().unwrap();
        let n = (hi - lo) as usize;
        let coeff = |e: usize| {
            by_degree
                .get(&(e as i32 + lo))
                .cloned()
                .unwrap_or_else(ConstPoly::zero)
        };
        let mut q = vec![ConstPoly::zero(); n];
        let mut carry = coeff(n);
        for e in (0..n).rev() {
            q[e] = carry.clone();
            carry = coeff(e).sub(&beta.mul(&q[e]));
        }
        if !carry.is_zero() {
            return None;
        }
        let mut out = ConstPoly::zero();
        for (e, qe) in q.into_iter().enumerate() {
            for (m, c) in qe.0 {
                out.add_term(m.with(y, e as i32 + lo), c);
            }
        }
        Some(out)
    }

    /// Split off the monomial content and leading rational:
    /// `self = r * mono * rest` with `rest` a polynomial whose leading
    /// coefficient is 1 and with no monomial factor.
    fn content(&self) -> (Rational, ConstMono, ConstPoly) {
        let lead = self
            .0
            .values()
            .next()
            .cloned()
            .unwrap_or_else(Rational::one);
        let mut names: Vec<Name> = self.names().collect();
        names.sort();
        names.dedup();
        let mins: BTreeMap<Name, i32> = names
            .into_iter()
            .map(|n| {
                (
                    n,
                    self.0.keys().map(|m| m.exponent_of(n)).min().unwrap_or(0),
                )
            })
            .collect();
        let mono = ConstMono(mins.into_iter().filter(|(_, e)| *e != 0).collect());
        let inv = mono.inverse();
        let rest = self.mul_mono(&inv).scale(&(Rational::one() / &lead));
        (lead, mono, rest)
    }
}

fn pow_rational(v: &Rational, e: i32) -> Rational {
    if e >= 0 {
        num_traits::pow(v.clone(), e as usize)
    } else {
        num_traits::pow(Rational::one() / v, (-e) as usize)
    }
}

/// Normalized affine form `lead + sum(c_i n_i) + c0` in the constants, with
/// the coefficient of the alphabetically first constant equal to one and at
/// least two terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinForm {
    lead: Name,
    rest: BTreeMap<Name, Rational>,
    constant: Rational,
}

impl LinForm {
    /// Interpret `p` (monomial content removed) as `scale * form`.
    fn from_poly(p: &ConstPoly) -> Option<(Rational, LinForm)> {
        let mut lin: BTreeMap<Name, Rational> = BTreeMap::new();
        let mut constant = Rational::zero();
        for (m, c) in &p.0 {
            match m.0.as_slice() {
                [] => constant = c.clone(),
                [(n, 1)] => {
                    lin.insert(*n, c.clone());
                }
                _ => return None,
            }
        }
        let (lead, lead_c) = lin.iter().next().map(|(n, c)| (*n, c.clone()))?;
        if lin.len() == 1 && constant.is_zero() {
            return None;
        }
        let rest = lin
            .into_iter()
            .skip(1)
            .map(|(n, c)| (n, c / &lead_c))
            .collect();
        let constant = constant / &lead_c;
        Some((
            lead_c,
            LinForm {
                lead,
                rest,
                constant,
            },
        ))
    }

    pub fn to_poly(&self) -> ConstPoly {
        ConstPoly::var(self.lead).add(&self.tail_poly())
    }

    fn tail_poly(&self) -> ConstPoly {
        let mut out = ConstPoly::from_rational(self.constant.clone());
        for (n, c) in &self.rest {
            out.add_term(ConstMono::var(*n), c.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoeffError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot invert `{0}`: only monomials and products of affine forms in the constants are supported")]
    NotInvertible(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coeff {
    num: ConstPoly,
    den: BTreeMap<LinForm, u32>,
}

impl Default for Coeff {
    fn default() -> Self {
        Coeff::zero()
    }
}

impl Coeff {
    pub fn zero() -> Coeff {
        Coeff {
            num: ConstPoly::zero(),
            den: BTreeMap::new(),
        }
    }

    pub fn one() -> Coeff {
        Coeff::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Coeff {
        Coeff {
            num: ConstPoly::from_rational(r),
            den: BTreeMap::new(),
        }
    }

    pub fn from_int(n: i64) -> Coeff {
        Coeff::from_rational(int(n))
    }

    pub fn from_poly(p: ConstPoly) -> Coeff {
        Coeff {
            num: p,
            den: BTreeMap::new(),
        }
    }

    pub fn var(n: Name) -> Coeff {
        Coeff::from_poly(ConstPoly::var(n))
    }

    /// The affine exponent `e` as a coefficient.
    pub fn from_exponent(e: &Exponent) -> Coeff {
        let mut p = ConstPoly::from_rational(int(e.constant_part()));
        for (n, c) in e.symbolic_part() {
            p = p.add(&ConstPoly::monomial(ConstMono::var(n), int(c)));
        }
        Coeff::from_poly(p)
    }

    pub fn numerator(&self) -> &ConstPoly {
        &self.num
    }

    pub fn denominator_factors(&self) -> impl Iterator<Item = (&LinForm, u32)> {
        self.den.iter().map(|(l, k)| (l, *k))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.as_rational().is_some_and(|r| r.is_one())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.den.is_empty() {
            self.num.as_rational()
        } else {
            None
        }
    }

    /// True when the coefficient involves no symbolic constant.
    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn names(&self) -> Vec<Name> {
        let mut out: Vec<Name> = self.num.names().collect();
        for l in self.den.keys() {
            out.push(l.lead);
            out.extend(l.rest.keys().copied());
        }
        out.sort();
        out.dedup();
        out
    }

    fn normalized(mut self) -> Coeff {
        if self.num.is_zero() {
            self.den.clear();
            return self;
        }
        let mut den = BTreeMap::new();
        for (form, mut k) in std::mem::take(&mut self.den) {
            while k > 0 {
                match self.num.div_linform(&form) {
                    Some(q) => {
                        self.num = q;
                        k -= 1;
                    }
                    None => break,
                }
            }
            if k > 0 {
                den.insert(form, k);
            }
        }
        self.den = den;
        self
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return Coeff {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            }
            .normalized();
        }
        let mut den = self.den.clone();
        for (l, k) in &other.den {
            let e = den.entry(l.clone()).or_insert(0);
            *e = (*e).max(*k);
        }
        let lift = |c: &Coeff| {
            let mut n = c.num.clone();
            for (l, k) in &den {
                let have = c.den.get(l).copied().unwrap_or(0);
                for _ in have..*k {
                    n = n.mul(&l.to_poly());
                }
            }
            n
        };
        let num = lift(self).add(&lift(other));
        Coeff { num, den }.normalized()
    }

    pub fn neg(&self) -> Coeff {
        Coeff {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Coeff) -> Coeff {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        if self.is_zero() || other.is_zero() {
            return Coeff::zero();
        }
        let mut den = self.den.clone();
        for (l, k) in &other.den {
            *den.entry(l.clone()).or_insert(0) += k;
        }
        let c = Coeff {
            num: self.num.mul(&other.num),
            den,
        };
        if self.den.is_empty() && other.den.is_empty() {
            c
        } else {
            c.normalized()
        }
    }

    pub fn scale(&self, r: &Rational) -> Coeff {
        Coeff {
            num: self.num.scale(r),
            den: if r.is_zero() {
                BTreeMap::new()
            } else {
                self.den.clone()
            },
        }
    }

    pub fn inverse(&self) -> Result<Coeff, CoeffError> {
        if self.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        let (lead, mono, rest) = self.num.content();
        let mut num = ConstPoly::monomial(mono.inverse(), Rational::one() / &lead);
        for (l, k) in &self.den {
            for _ in 0..*k {
                num = num.mul(&l.to_poly());
            }
        }
        let mut den = BTreeMap::new();
        if rest.as_rational().is_none() {
            match LinForm::from_poly(&rest) {
                Some((scale, form)) => {
                    num = num.scale(&(Rational::one() / scale));
                    den.insert(form, 1);
                }
                None => return Err(CoeffError::NotInvertible(self.to_string())),
            }
        }
        Ok(Coeff { num, den }.normalized())
    }

    pub fn div(&self, other: &Coeff) -> Result<Coeff, CoeffError> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn pow(&self, n: i64) -> Result<Coeff, CoeffError> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut out = Coeff::one();
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// Evaluate with every constant bound; `None` if a constant is unbound or
    /// a denominator vanishes.
    pub fn eval(&self, values: &dyn Fn(Name) -> Option<Rational>) -> Option<Rational> {
        let n = self.num.eval(values)?;
        let mut d = Rational::one();
        for (l, k) in &self.den {
            let v = l.to_poly().eval(values)?;
            if v.is_zero() {
                return None;
            }
            d *= pow_rational(&v, *k as i32);
        }
        Some(n / d)
    }

    /// Leading rational factor, used to normalize sign and scale.
    pub fn leading_rational(&self) -> Rational {
        self.num
            .0
            .values()
            .next()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Substitute constants by coefficients.
    pub fn substitute(&self, bind: &dyn Fn(Name) -> Option<Coeff>) -> Result<Coeff, CoeffError> {
        let mut num = Coeff::zero();
        for (m, c) in &self.num.0 {
            let mut term = Coeff::from_rational(c.clone());
            for (n, e) in &m.0 {
                let base = bind(*n).unwrap_or_else(|| Coeff::var(*n));
                term = term.mul(&base.pow(*e as i64)?);
            }
            num = num.add(&term);
        }
        let mut out = num;
        for (l, k) in &self.den {
            let mut form = Coeff::from_rational(l.constant.clone());
            form = form.add(&bind(l.lead).unwrap_or_else(|| Coeff::var(l.lead)));
            for (n, c) in &l.rest {
                form = form.add(&bind(*n).unwrap_or_else(|| Coeff::var(*n)).scale(c));
            }
            out = out.mul(&form.pow(-(*k as i64))?);
        }
        Ok(out)
    }

    /// Convert an affine coefficient with integer coefficients back into an
    /// exponent.
    pub fn to_exponent(&self) -> Option<Exponent> {
        if !self.den.is_empty() {
            return None;
        }
        let mut constant = 0i64;
        let mut sym = Vec::new();
        for (m, c) in &self.num.0 {
            if !c.is_integer() {
                return None;
            }
            let v = c.to_integer().to_i64()?;
            match m.0.as_slice() {
                [] => constant = v,
                [(n, 1)] => sym.push((*n, v)),
                _ => return None,
            }
        }
        Some(Exponent::new(constant, sym))
    }

    pub(crate) fn is_negative_lead(&self) -> bool {
        self.leading_rational().is_negative()
    }

    /// Whether printing needs parentheses when used as a factor.
    pub(crate) fn is_compound(&self) -> bool {
        self.num.len() > 1 || !self.den.is_empty()
    }
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn fmt_mono(m: &ConstMono, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, (n, e)) in m.0.iter().enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        match e {
            1 => write!(f, "{n}")?,
            e if *e < 0 => write!(f, "{n}^({e})")?,
            e => write!(f, "{n}^{e}")?,
        }
    }
    Ok(())
}

impl fmt::Display for ConstPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.0.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                fmt_rational(&mag, f)?;
            } else {
                if !mag.is_one() {
                    fmt_rational(&mag, f)?;
                    f.write_str("*")?;
                }
                fmt_mono(m, f)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        if self.num.len() > 1 {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        f.write_str("/")?;
        let many = self.den.len() > 1 || self.den.values().any(|k| *k > 1);
        if many {
            f.write_str("(")?;
        }
        for (i, (l, k)) in self.den.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "({l})")?;
            if *k > 1 {
                write!(f, "^{k}")?;
            }
        }
        if many {
            f.write_str(")")?;
        }
        Ok(())
    }
}
