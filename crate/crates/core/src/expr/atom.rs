//! Atoms of the expression kernel and their exponents.

use std::collections::BTreeMap;
use std::fmt;

use super::name::Name;

/// Independent variables of the jet space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndepVar {
    T,
    X,
}

impl IndepVar {
    pub fn symbol(self) -> &'static str {
        match self {
            IndepVar::T => "t",
            IndepVar::X => "x",
        }
    }
}

/// A jet coordinate `var_{t^t x^x}`. Total derivatives commute, so the pair of
/// derivative counts is canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Jet {
    pub var: Name,
    pub t: u8,
    pub x: u8,
}

impl Jet {
    pub fn new(var: Name, t: u8, x: u8) -> Jet {
        Jet { var, t, x }
    }

    pub fn base(var: Name) -> Jet {
        Jet { var, t: 0, x: 0 }
    }

    pub fn order(&self) -> u32 {
        self.t as u32 + self.x as u32
    }

    pub fn shifted(&self, wrt: IndepVar) -> Jet {
        match wrt {
            IndepVar::T => Jet {
                t: self.t + 1,
                ..*self
            },
            IndepVar::X => Jet {
                x: self.x + 1,
                ..*self
            },
        }
    }

    pub fn is_base(&self) -> bool {
        self.t == 0 && self.x == 0
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.var)?;
        if !self.is_base() {
            f.write_str("_")?;
            for _ in 0..self.t {
                f.write_str("t")?;
            }
            for _ in 0..self.x {
                f.write_str("x")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Indep(IndepVar),
    Jet(Jet),
    /// `name^{(order)}(u)`: a derivative of an arbitrary function of the base
    /// dependent variable `u`.
    Func {
        name: Name,
        order: u32,
    },
    Const(Name),
}

impl Atom {
    pub fn t() -> Atom {
        Atom::Indep(IndepVar::T)
    }

    pub fn x() -> Atom {
        Atom::Indep(IndepVar::X)
    }

    pub fn jet(var: &str, t: u8, x: u8) -> Atom {
        Atom::Jet(Jet::new(Name::new(var), t, x))
    }

    pub fn func(name: &str, order: u32) -> Atom {
        Atom::Func {
            name: Name::new(name),
            order,
        }
    }

    pub fn constant(name: &str) -> Atom {
        Atom::Const(Name::new(name))
    }

    pub fn as_jet(&self) -> Option<Jet> {
        match self {
            Atom::Jet(j) => Some(*j),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Atom::Const(_))
    }

    /// Differential order contributed to a monomial's grading.
    pub(crate) fn weight(&self) -> u32 {
        match self {
            Atom::Jet(j) => j.order(),
            _ => 0,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Indep(v) => f.write_str(v.symbol()),
            Atom::Jet(j) => write!(f, "{j}"),
            Atom::Func { name, order } => match order {
                0..=3 => write!(f, "{}{}(u)", name, "'".repeat(*order as usize)),
                _ => write!(f, "diff({name},u,{order})"),
            },
            Atom::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Exponent `c0 + sum(ci * const_i)` with integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    constant: i64,
    symbolic: BTreeMap<Name, i64>,
}

impl Exponent {
    pub fn int(n: i64) -> Exponent {
        Exponent {
            constant: n,
            symbolic: BTreeMap::new(),
        }
    }

    pub fn new(constant: i64, symbolic: impl IntoIterator<Item = (Name, i64)>) -> Exponent {
        let mut e = Exponent::int(constant);
        for (n, c) in symbolic {
            *e.symbolic.entry(n).or_insert(0) += c;
        }
        e.symbolic.retain(|_, c| *c != 0);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.symbolic.is_empty()
    }

    pub fn as_int(&self) -> Option<i64> {
        self.symbolic.is_empty().then_some(self.constant)
    }

    pub fn is_symbolic(&self) -> bool {
        !self.symbolic.is_empty()
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn symbolic_part(&self) -> impl Iterator<Item = (Name, i64)> + '_ {
        self.symbolic.iter().map(|(n, c)| (*n, *c))
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        let mut out = self.clone();
        out.constant += other.constant;
        for (n, c) in &other.symbolic {
            *out.symbolic.entry(*n).or_insert(0) += c;
        }
        out.symbolic.retain(|_, c| *c != 0);
        out
    }

    pub fn add_int(&self, n: i64) -> Exponent {
        Exponent {
            constant: self.constant + n,
            symbolic: self.symbolic.clone(),
        }
    }

    pub fn scale(&self, k: i64) -> Exponent {
        let mut out = Exponent::int(self.constant * k);
        if k != 0 {
            out.symbolic = self.symbolic.iter().map(|(n, c)| (*n, c * k)).collect();
        }
        out
    }

    /// Positive-looking exponents sort the grading upward; symbolic parts
    /// count by their constant component only.
    pub(crate) fn grade(&self) -> i64 {
        self.constant
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbolic.is_empty() {
            return write!(f, "{}", self.constant);
        }
        let mut first = true;
        for (n, c) in &self.symbolic {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if *c < 0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(sign)?;
            }
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{n}")?;
            first = false;
        }
        if self.constant > 0 {
            write!(f, "+{}", self.constant)?;
        } else if self.constant < 0 {
            write!(f, "{}", self.constant)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_arithmetic() {
        let mu = Name::new("mu");
        let e = Exponent::new(0, [(mu, 1)]);
        let e2 = e.add(&Exponent::int(2));
        assert_eq!(e2.to_string(), "mu+2");
        assert_eq!(e2.add(&Exponent::new(-2, [(mu, -1)])), Exponent::int(0));
        assert_eq!(Exponent::new(-1, [(mu, 2)]).to_string(), "2*mu-1");
        assert_eq!(Exponent::new(0, [(mu, -1)]).to_string(), "-mu");
    }

    #[test]
    fn atom_display() {
        assert_eq!(Atom::jet("u", 1, 2).to_string(), "u_txx");
        assert_eq!(Atom::jet("v", 0, 0).to_string(), "v");
        assert_eq!(Atom::func("r", 2).to_string(), "r''(u)");
        assert_eq!(Atom::func("f", 4).to_string(), "diff(f,u,4)");
    }
}
