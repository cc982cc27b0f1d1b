//! Closed-form solutions of determining systems built from exact
//! u-derivatives: `(u X)^(k) = 0`, algebraic relations such as `u q = (u p)'`
//! and linear eliminations of one function in terms of others.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::expr::{base_var, substitute, Atom, Coeff, Expression, Jet, Monomial, Name};

use super::DeterminingSystem;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ClosedFormFamily {
    pub assignments: BTreeMap<Name, Expression>,
    pub free_functions: BTreeSet<Name>,
    /// Integration constants introduced by the solver, in naming order.
    pub constants: Vec<Name>,
}

impl fmt::Display for ClosedFormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in &self.assignments {
            writeln!(f, "{name}(u) = {value}")?;
        }
        if !self.free_functions.is_empty() {
            let free: Vec<&str> = self.free_functions.iter().map(|n| n.as_str()).collect();
            writeln!(f, "free: {}", free.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Solution {
    pub family: ClosedFormFamily,
    /// Equation index and the function determined from it.
    pub solved_from: Vec<(usize, Name)>,
    /// Equations that vanish once the closed forms are substituted.
    pub redundant: Vec<usize>,
    /// Equations left over, after substitution of the closed forms.
    pub unsolved: Vec<(usize, Expression)>,
}

fn u_atom() -> Atom {
    Atom::Jet(Jet::base(base_var()))
}

/// The function factor of a term, if the term is `c u^s f^(k)` or `c u^s`.
/// `Err(())` for anything else (products of functions, other atoms).
fn term_function(m: &Monomial) -> Result<Option<(Name, u32)>, ()> {
    let mut found = None;
    for (a, e) in m.factors() {
        match a {
            Atom::Jet(j) if j.is_base() && j.var == base_var() => {}
            Atom::Func { name, order } => {
                if found.is_some() || e.as_int() != Some(1) {
                    return Err(());
                }
                found = Some((*name, *order));
            }
            _ => return Err(()),
        }
    }
    Ok(found)
}

fn lower_function(m: &Monomial, name: Name, order: u32) -> Monomial {
    Monomial::from_factors(m.factors().iter().map(|(a, e)| match a {
        Atom::Func { name: n, order: k } if *n == name && *k == order => (
            Atom::Func {
                name,
                order: order - 1,
            },
            e.clone(),
        ),
        _ => (*a, e.clone()),
    }))
}

/// An antiderivative in `u` of an expression linear in function atoms, or
/// `None` when it is not an exact derivative in this class.
pub fn integrate_in_u(e: &Expression) -> Option<Expression> {
    let u = u_atom();
    let mut rest = e.clone();
    let mut prim = Expression::zero();
    for _ in 0..10_000 {
        let mut best: Option<(u32, Monomial, Coeff, Name)> = None;
        let mut has_plain = false;
        for (m, c) in rest.terms() {
            match term_function(m).ok()? {
                Some((name, order)) => {
                    if best.as_ref().is_none_or(|b| order > b.0) {
                        best = Some((order, m.clone(), c.clone(), name));
                    }
                }
                None => has_plain = true,
            }
        }
        match best {
            Some((0, ..)) => return None,
            Some((order, m, c, name)) => {
                let piece = Expression::term(lower_function(&m, name, order), c);
                rest = rest.sub(&piece.diff_partial(&u));
                prim = prim.add(&piece);
            }
            None => {
                if has_plain {
                    for (m, c) in rest.terms() {
                        let s = m
                            .exponent_of(&u)
                            .cloned()
                            .unwrap_or_else(|| crate::expr::Exponent::int(0));
                        let s1 = s.add_int(1);
                        if s1.is_zero() {
                            return None;
                        }
                        let k = Coeff::from_exponent(&s1).inverse().ok()?;
                        let piece = Expression::term(Monomial::atom_pow(u, s1), c.mul(&k));
                        prim = prim.add(&piece);
                    }
                }
                return Some(prim);
            }
        }
    }
    None
}

fn has_functions(e: &Expression) -> bool {
    !e.function_names().is_empty()
}

/// Successive antiderivatives `P_0 = e, P_1, ...` while they still involve
/// unknown functions.
fn integration_chain(e: &Expression) -> Vec<Expression> {
    let mut chain = vec![e.clone()];
    while let Some(next) = integrate_in_u(chain.last().unwrap()) {
        if !has_functions(&next) || next.is_zero() {
            break;
        }
        chain.push(next);
    }
    chain
}

/// `(coefficient, remainder)` of `p = coefficient * f + remainder` when `f`
/// enters only undifferentiated, linearly, with a coefficient `c u^n`.
fn isolate(p: &Expression, f: Name) -> Option<(Expression, Expression)> {
    let f0 = Atom::Func { name: f, order: 0 };
    let mut coeff = Expression::zero();
    let mut rest = Expression::zero();
    for (m, c) in p.terms() {
        let mut hit = false;
        for (a, e) in m.factors() {
            if let Atom::Func { name, order } = a {
                if *name == f {
                    if *order != 0 || e.as_int() != Some(1) {
                        return None;
                    }
                    hit = true;
                }
            }
        }
        let term = Expression::term(m.clone(), c.clone());
        if hit {
            let (_, others) = m.split(&f0);
            coeff = coeff.add(&Expression::term(others, c.clone()));
        } else {
            rest = rest.add(&term);
        }
    }
    if coeff.len() != 1 || has_functions(&coeff) {
        return None;
    }
    Some((coeff, rest))
}

struct Fresh {
    name: Name,
    series: char,
    equation: usize,
    rank: usize,
}

/// Solve a determining system by repeated integration in `u` and linear
/// elimination, one function at a time.
///
/// At every step the pending equation needing the fewest integrations is
/// used; it determines the alphabetically first function that appears in the
/// integrated equation only undifferentiated and with an invertible
/// coefficient. Integration constants are named `a1, a2, ...` when the
/// equation involves a single function and `c1, c2, ...` otherwise.
pub fn solve_exact_derivative_patterns(sys: &DeterminingSystem) -> Solution {
    let mut eqs: Vec<Expression> = sys.exprs().cloned().collect();
    let mut used = vec![false; eqs.len()];
    let mut assignments: BTreeMap<Name, Expression> = BTreeMap::new();
    let mut solved_from = Vec::new();
    let mut fresh: Vec<Fresh> = Vec::new();

    loop {
        let mut pick: Option<(usize, usize, Name, Expression, Expression, Expression)> = None;
        for (i, e) in eqs.iter().enumerate() {
            if used[i] || e.is_zero() || !has_functions(e) {
                continue;
            }
            for (m, p) in integration_chain(e).into_iter().enumerate() {
                if pick.as_ref().is_some_and(|b| m >= b.1) {
                    break;
                }
                let candidate = p
                    .function_names()
                    .into_iter()
                    .find_map(|f| isolate(&p, f).map(|(c, r)| (f, c, r)));
                if let Some((f, c, r)) = candidate {
                    pick = Some((i, m, f, p.clone(), c, r));
                    break;
                }
            }
        }
        let Some((i, m, f, p, coeff, rest)) = pick else {
            break;
        };

        let series = if p.function_names().len() == 1 {
            'a'
        } else {
            'c'
        };
        let (_, lead) = coeff.leading().expect("nonzero coefficient");
        let lead = Expression::rational(lead.leading_rational());
        let mut poly = Expression::zero();
        for k in 0..m {
            let name = Name::new(&format!("_k{}", fresh.len()));
            fresh.push(Fresh {
                name,
                series,
                equation: i,
                rank: m - 1 - k,
            });
            poly = poly.add(
                &Expression::constant(name.as_str()).mul(&Expression::atom(u_atom()).pow(k as u32)),
            );
        }
        let inv = coeff.inverse().expect("single-term coefficient");
        let value = lead.mul(&poly).sub(&rest).mul(&inv);
        debug_assert!(!p.function_names().contains(&f) || isolate(&p, f).is_some());

        let bind: BTreeMap<Atom, Expression> = [(Atom::Func { name: f, order: 0 }, value.clone())]
            .into_iter()
            .collect();
        for e in eqs.iter_mut() {
            *e = substitute(e, &bind).expect("closed form binds a function of u");
        }
        for v in assignments.values_mut() {
            *v = substitute(v, &bind).expect("closed form binds a function of u");
        }
        assignments.insert(f, value);
        used[i] = true;
        solved_from.push((i, f));
    }

    // Name the integration constants by the order of the equations that
    // produced them.
    let taken: BTreeSet<Name> = sys.exprs().flat_map(|e| e.constants()).collect();
    fresh.sort_by_key(|c| (c.series, c.equation, c.rank));
    let mut counters: BTreeMap<char, usize> = BTreeMap::new();
    let mut renames = BTreeMap::new();
    let mut constants = Vec::new();
    for c in &fresh {
        let n = counters.entry(c.series).or_insert(0);
        let name = loop {
            *n += 1;
            let candidate = Name::new(&format!("{}{}", c.series, n));
            if !taken.contains(&candidate) {
                break candidate;
            }
        };
        renames.insert(Atom::Const(c.name), Expression::constant(name.as_str()));
        constants.push(name);
    }
    let rename = |e: &Expression| substitute(e, &renames).expect("constant renaming");
    let assignments: BTreeMap<Name, Expression> =
        assignments.iter().map(|(k, v)| (*k, rename(v))).collect();

    let mut redundant = Vec::new();
    let mut unsolved = Vec::new();
    for (i, e) in eqs.iter().enumerate() {
        if used[i] {
            continue;
        }
        if e.is_zero() {
            redundant.push(i);
        } else {
            unsolved.push((i, rename(e)));
        }
    }

    let free_functions = sys
        .unknowns
        .iter()
        .copied()
        .filter(|n| !assignments.contains_key(n))
        .collect();
    Solution {
        family: ClosedFormFamily {
            assignments,
            free_functions,
            constants,
        },
        solved_from,
        redundant,
        unsolved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expression {
        Expression::jet("u", 0, 0)
    }
    fn f(name: &str, k: u32) -> Expression {
        Expression::func(name, k)
    }
    fn du(e: &Expression, k: u32) -> Expression {
        let mut e = e.clone();
        for _ in 0..k {
            e = e.diff_partial(&u_atom());
        }
        e
    }
    fn unknowns(names: &[&str]) -> BTreeSet<Name> {
        names.iter().map(|n| Name::new(n)).collect()
    }

    #[test]
    fn integrates_exact_derivatives() {
        let ur = &u() * &f("r", 0);
        assert_eq!(integrate_in_u(&du(&ur, 1)), Some(ur.clone()));
        assert_eq!(integrate_in_u(&du(&ur, 3)), Some(du(&ur, 2)));
        assert_eq!(
            integrate_in_u(&u().pow(2)),
            Some(u().pow(3).scale_rational(&crate::expr::rat(1, 3)))
        );
        assert_eq!(integrate_in_u(&u().inverse().unwrap()), None);
        assert_eq!(integrate_in_u(&f("r", 0)), None);
        assert_eq!(
            integrate_in_u(&(&u() * &f("q", 0) - du(&(&u() * &f("p", 0)), 1))),
            None
        );
    }

    #[test]
    fn single_exact_derivative() {
        let sys =
            DeterminingSystem::from_equations([du(&(&u() * &f("b", 0)), 1)], unknowns(&["b"]));
        let sol = solve_exact_derivative_patterns(&sys);
        let expected = Expression::constant("a1").mul(&u().inverse().unwrap());
        assert_eq!(sol.family.assignments[&Name::new("b")], expected);
        assert!(sol.unsolved.is_empty());
    }

    #[test]
    fn third_order_family_system() {
        let ur = &u() * &f("r", 0);
        let up = &u() * &f("p", 0);
        let sys = DeterminingSystem::from_equations(
            [
                du(&ur, 3),
                du(&ur, 2),
                &u() * &f("q", 0) - du(&up, 1),
                &u() * &f("q", 1) - Expression::int(2) * f("p", 1) - &u() * &f("p", 2) + f("q", 0),
                du(&(&u() * &f("b", 0)), 1),
            ],
            unknowns(&["a", "b", "p", "q", "r"]),
        );
        let sol = solve_exact_derivative_patterns(&sys);
        let a = |n: &str| Name::new(n);
        let inv_u = u().inverse().unwrap();
        assert_eq!(
            sol.family.assignments[&a("r")],
            Expression::constant("a1") + Expression::constant("a2") * &inv_u
        );
        assert_eq!(
            sol.family.assignments[&a("b")],
            Expression::constant("a3") * &inv_u
        );
        assert_eq!(sol.family.assignments[&a("q")], du(&up, 1) * &inv_u);
        assert_eq!(sol.family.free_functions, unknowns(&["a", "p"]));
        assert_eq!(sol.redundant, vec![0, 3]);
        assert!(sol.unsolved.is_empty());
    }

    #[test]
    fn elimination_between_functions() {
        let uf = &u() * &f("f", 0);
        let ug = &u() * &f("g", 0);
        let uh = &u() * &f("h", 0);
        let ud = &u() * &f("d", 0);
        let sys = DeterminingSystem::from_equations(
            [
                du(&uf, 1) - &ug + &uh,
                Expression::int(3) * du(&uf, 3) - Expression::int(3) * du(&ug, 2)
                    + du(&uh, 2)
                    + Expression::int(2) * du(&ud, 1),
            ],
            unknowns(&["d", "f", "g", "h"]),
        );
        let sol = solve_exact_derivative_patterns(&sys);
        let inv_u = u().inverse().unwrap();
        assert_eq!(
            sol.family.assignments[&Name::new("g")],
            f("h", 0) + du(&uf, 1) * &inv_u
        );
        assert_eq!(
            sol.family.assignments[&Name::new("d")],
            Expression::constant("c1") * &inv_u + du(&uh, 1) * &inv_u
        );
    }

    #[test]
    fn leftover_constraints_are_unsolved() {
        let sys = DeterminingSystem::from_equations(
            [f("r", 0) * f("r", 1) + Expression::one()],
            unknowns(&["r"]),
        );
        let sol = solve_exact_derivative_patterns(&sys);
        assert!(sol.family.assignments.is_empty());
        assert_eq!(sol.unsolved.len(), 1);
    }
}
