//! Random expressions and exact evaluation oracles shared by the property
//! suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use selfadj_core::expr::{int, rat, Atom, Exponent, Monomial, Name, Rational, RawExpr};
use selfadj_core::{Coeff, EvolutionEquation, Expression, IndepVar};

/// Draw `n` values from a strategy with a fixed seed.
pub fn samples<S: Strategy>(strategy: S, n: usize, seed: u8) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy never rejects")
                .current()
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub functions: bool,
    pub negative_powers: bool,
    pub symbolic: bool,
    pub t_jets: bool,
}

impl Shape {
    pub fn full() -> Shape {
        Shape {
            functions: true,
            negative_powers: true,
            symbolic: true,
            t_jets: true,
        }
    }

    /// Polynomial in t, x, the jets and function symbols.
    pub fn polynomial() -> Shape {
        Shape {
            functions: true,
            negative_powers: false,
            symbolic: false,
            t_jets: true,
        }
    }
}

fn atom_pool(shape: Shape) -> Vec<Atom> {
    let mut pool = vec![
        Atom::t(),
        Atom::x(),
        Atom::jet("u", 0, 1),
        Atom::jet("u", 0, 2),
        Atom::jet("u", 0, 3),
    ];
    if shape.t_jets {
        pool.push(Atom::jet("u", 1, 0));
        pool.push(Atom::jet("u", 1, 1));
    }
    if shape.functions {
        pool.push(Atom::func("r", 0));
        pool.push(Atom::func("r", 1));
        pool.push(Atom::func("p", 0));
        pool.push(Atom::func("p", 2));
    }
    pool
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-5i64..=5, 1i64..=3).prop_filter_map("nonzero", |(n, d)| (n != 0).then(|| rat(n, d)))
}

fn term(shape: Shape) -> impl Strategy<Value = Expression> {
    let pool = atom_pool(shape);
    let n = pool.len();
    let u_low = if shape.negative_powers { -2 } else { 0 };
    (
        small_rational(),
        u_low..=3i64,
        proptest::collection::vec((0..n, 1i64..=2), 0..=3),
        any::<bool>(),
    )
        .prop_map(move |(c, ku, factors, sym)| {
            let mut u_exp = Exponent::int(ku);
            if shape.symbolic && sym {
                u_exp = u_exp.add(&Exponent::new(0, [(Name::new("mu"), 1)]));
            }
            let mut all = vec![(Atom::jet("u", 0, 0), u_exp)];
            all.extend(
                factors
                    .into_iter()
                    .map(|(i, k)| (pool[i], Exponent::int(k))),
            );
            Expression::term(Monomial::from_factors(all), Coeff::from_rational(c))
        })
}

pub fn expression(shape: Shape) -> impl Strategy<Value = Expression> {
    proptest::collection::vec(term(shape), 1..=4)
        .prop_map(|ts| ts.iter().fold(Expression::zero(), |acc, t| acc.add(t)))
}

// ---- raw trees and their direct evaluation ----

pub fn raw_expr() -> impl Strategy<Value = RawExpr> {
    proptest::collection::vec(raw_subtree(), 2..=4).prop_map(RawExpr::Mul)
}

fn raw_subtree() -> impl Strategy<Value = RawExpr> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(RawExpr::int),
        small_rational().prop_map(RawExpr::Num),
        Just(RawExpr::Atom(Atom::jet("u", 0, 0))),
        Just(RawExpr::Atom(Atom::jet("u", 0, 1))),
        Just(RawExpr::Atom(Atom::jet("u", 0, 2))),
        Just(RawExpr::Atom(Atom::t())),
        Just(RawExpr::Atom(Atom::x())),
        Just(RawExpr::Atom(Atom::constant("mu"))),
        Just(RawExpr::Atom(Atom::func("r", 1))),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..=3).prop_map(RawExpr::Add),
            proptest::collection::vec(inner.clone(), 2..=3).prop_map(RawExpr::Mul),
            inner.clone().prop_map(|e| -e),
            (inner.clone(), 0i64..=3).prop_map(|(b, k)| RawExpr::pow(b, RawExpr::int(k))),
            (inner.clone(), 1i64..=3).prop_map(|(b, k)| b / RawExpr::pow(
                RawExpr::Atom(Atom::jet("u", 0, 0)),
                RawExpr::int(k)
            )),
            (inner.clone(), 1i64..=3).prop_map(|(b, k)| b / RawExpr::Add(vec![
                RawExpr::Atom(Atom::constant("mu")),
                RawExpr::int(k)
            ])),
            (inner, 0i64..=2).prop_map(|(b, k)| RawExpr::Mul(vec![
                b,
                RawExpr::pow(
                    RawExpr::Atom(Atom::jet("u", 0, 0)),
                    RawExpr::Add(vec![RawExpr::Atom(Atom::constant("mu")), RawExpr::int(k)])
                )
            ])),
        ]
    })
}

/// Evaluate a raw tree directly, without normalizing it first.
pub fn eval_raw(raw: &RawExpr, env: &dyn Fn(Atom) -> Option<Rational>) -> Option<Rational> {
    Some(match raw {
        RawExpr::Num(r) => r.clone(),
        RawExpr::Atom(a) => env(*a)?,
        RawExpr::Add(items) => {
            let mut acc = Rational::zero();
            for it in items {
                acc += eval_raw(it, env)?;
            }
            acc
        }
        RawExpr::Mul(items) => {
            let mut acc = Rational::one();
            for it in items {
                acc *= eval_raw(it, env)?;
            }
            acc
        }
        RawExpr::Neg(e) => -eval_raw(e, env)?,
        RawExpr::Pow(b, e) => {
            let base = eval_raw(b, env)?;
            let k = eval_raw(e, env)?;
            if !k.is_integer() {
                return None;
            }
            let k: i64 = num_traits::ToPrimitive::to_i64(&k.to_integer())?;
            if k >= 0 {
                num_traits::pow(base, k as usize)
            } else {
                if base.is_zero() {
                    return None;
                }
                num_traits::pow(Rational::one() / base, (-k) as usize)
            }
        }
        RawExpr::Div(n, d) => {
            let den = eval_raw(d, env)?;
            if den.is_zero() {
                return None;
            }
            eval_raw(n, env)? / den
        }
    })
}

/// A fixed sample point: u = 3/2, u_x = -2, ..., mu = 2.
pub fn point_env(a: Atom) -> Option<Rational> {
    Some(match a {
        Atom::Indep(IndepVar::T) => rat(2, 3),
        Atom::Indep(IndepVar::X) => rat(-5, 4),
        Atom::Const(_) => int(2),
        Atom::Jet(j) => match (j.t, j.x) {
            (0, 0) => rat(3, 2),
            (0, 1) => int(-2),
            (0, 2) => rat(1, 3),
            (t, x) => rat(7 + 2 * t as i64 - x as i64, 5),
        },
        Atom::Func { order, .. } => rat(order as i64 + 2, 7),
    })
}

// ---- bivariate polynomial oracle for total derivatives ----

/// Polynomial in (t, x) with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BiPoly(BTreeMap<(u32, u32), Rational>);

impl BiPoly {
    pub fn constant(c: Rational) -> BiPoly {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert((0, 0), c);
        }
        BiPoly(m)
    }

    pub fn monomial(c: Rational, t: u32, x: u32) -> BiPoly {
        let mut p = BiPoly::default();
        p.0.insert((t, x), c);
        p
    }

    pub fn add(&self, o: &BiPoly) -> BiPoly {
        let mut out = self.0.clone();
        for (k, v) in &o.0 {
            *out.entry(*k).or_insert_with(Rational::zero) += v;
        }
        out.retain(|_, v| !v.is_zero());
        BiPoly(out)
    }

    pub fn mul(&self, o: &BiPoly) -> BiPoly {
        let mut out: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
        for ((a, b), v) in &self.0 {
            for ((c, d), w) in &o.0 {
                *out.entry((a + c, b + d)).or_insert_with(Rational::zero) += v * w;
            }
        }
        out.retain(|_, v| !v.is_zero());
        BiPoly(out)
    }

    pub fn pow(&self, k: u32) -> BiPoly {
        (0..k).fold(BiPoly::constant(int(1)), |acc, _| acc.mul(self))
    }

    pub fn diff(&self, wrt: IndepVar) -> BiPoly {
        let mut out = BTreeMap::new();
        for ((t, x), v) in &self.0 {
            let (n, key) = match wrt {
                IndepVar::T if *t > 0 => (*t, (t - 1, *x)),
                IndepVar::X if *x > 0 => (*x, (*t, x - 1)),
                _ => continue,
            };
            out.insert(key, v * Rational::from_integer(n.into()));
        }
        BiPoly(out)
    }

    pub fn diff_n(&self, t: u8, x: u8) -> BiPoly {
        let mut p = self.clone();
        for _ in 0..t {
            p = p.diff(IndepVar::T);
        }
        for _ in 0..x {
            p = p.diff(IndepVar::X);
        }
        p
    }

    pub fn eval(&self, t: &Rational, x: &Rational) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, ((a, b), v)| {
            acc + v
                * num_traits::pow(t.clone(), *a as usize)
                * num_traits::pow(x.clone(), *b as usize)
        })
    }
}

/// Concrete polynomials standing in for the function symbols r and p.
pub fn function_poly(name: &str) -> Vec<Rational> {
    match name {
        "r" => vec![int(1), int(2), int(0), rat(-1, 2)],
        _ => vec![rat(1, 3), int(-1), int(1)],
    }
}

fn poly_derivative(c: &[Rational], k: u32) -> Vec<Rational> {
    let mut c = c.to_vec();
    for _ in 0..k {
        c = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, v)| v * Rational::from_integer((i as i64).into()))
            .collect();
    }
    c
}

/// Composition `f^(k)(P)` by Horner's rule.
fn compose(c: &[Rational], p: &BiPoly) -> BiPoly {
    c.iter().rev().fold(BiPoly::default(), |acc, v| {
        acc.mul(p).add(&BiPoly::constant(v.clone()))
    })
}

/// Substitute `u = P(t, x)` into a polynomial expression.
pub fn substitute_solution(e: &Expression, p: &BiPoly) -> Option<BiPoly> {
    let mut out = BiPoly::default();
    for (m, c) in e.terms() {
        let mut term = BiPoly::constant(c.as_rational()?);
        for (a, k) in m.factors() {
            let k = u32::try_from(k.as_int()?).ok()?;
            let base = match a {
                Atom::Indep(IndepVar::T) => BiPoly::monomial(int(1), 1, 0),
                Atom::Indep(IndepVar::X) => BiPoly::monomial(int(1), 0, 1),
                Atom::Jet(j) => p.diff_n(j.t, j.x),
                Atom::Func { name, order } => {
                    compose(&poly_derivative(&function_poly(name.as_str()), *order), p)
                }
                Atom::Const(_) => return None,
            };
            term = term.mul(&base.pow(k));
        }
        out = out.add(&term);
    }
    Some(out)
}

/// Jet values of `u = P(t, x)` at a point, for `Expression::eval`.
pub fn solution_env(
    p: &BiPoly,
    t0: Rational,
    x0: Rational,
) -> impl Fn(Atom) -> Option<Rational> + '_ {
    move |a| match a {
        Atom::Indep(IndepVar::T) => Some(t0.clone()),
        Atom::Indep(IndepVar::X) => Some(x0.clone()),
        Atom::Jet(j) => Some(p.diff_n(j.t, j.x).eval(&t0, &x0)),
        Atom::Func { name, order } => {
            let u = p.eval(&t0, &x0);
            let c = poly_derivative(&function_poly(name.as_str()), order);
            Some(c.iter().rev().fold(Rational::zero(), |acc, v| acc * &u + v))
        }
        Atom::Const(_) => None,
    }
}

pub fn solution_poly() -> impl Strategy<Value = BiPoly> {
    proptest::collection::vec((-3i64..=3, 0u32..=2, 0u32..=4), 2..=5).prop_map(|cs| {
        cs.into_iter().fold(BiPoly::default(), |acc, (c, t, x)| {
            acc.add(&BiPoly::monomial(int(c), t, x))
        })
    })
}

// ---- the third-order family ----

/// Coefficient functions of `u_t = r u_xxx + p u_xx + q u_x^2 + a u_x + b`.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub r: Expression,
    pub p: Expression,
    pub q: Expression,
    pub a: Expression,
    pub b: Expression,
}

impl FamilyMember {
    pub fn equation(&self) -> EvolutionEquation {
        let j = |k| Expression::jet("u", 0, k);
        let rhs = &self.r * &j(3)
            + &self.p * &j(2)
            + &self.q * &j(1).pow(2)
            + &self.a * &j(1)
            + self.b.clone();
        EvolutionEquation::new(rhs).expect("third-order rhs")
    }
}

fn laurent() -> impl Strategy<Value = Expression> {
    proptest::collection::vec((-3i64..=3, -2i64..=2), 1..=3).prop_map(|cs| {
        let u = Expression::jet("u", 0, 0);
        cs.into_iter().fold(Expression::zero(), |acc, (c, k)| {
            let pw = if k >= 0 {
                u.pow(k as u32)
            } else {
                u.inverse().unwrap().pow((-k) as u32)
            };
            acc.add(&pw.scale_rational(&int(c)))
        })
    })
}

/// Members with `r = a1 + a2/u`, `q = (u p)'/u`, `b = a3/u`.
pub fn family_member() -> impl Strategy<Value = FamilyMember> {
    (
        small_rational(),
        small_rational(),
        small_rational(),
        laurent(),
        laurent(),
    )
        .prop_map(|(a1, a2, a3, p, a)| {
            let u = Expression::jet("u", 0, 0);
            let inv = u.inverse().unwrap();
            let du = Atom::jet("u", 0, 0);
            let q = u.mul(&p).diff_partial(&du).mul(&inv);
            FamilyMember {
                r: Expression::rational(a1).add(&inv.scale_rational(&a2)),
                p,
                q,
                a,
                b: inv.scale_rational(&a3),
            }
        })
}

/// A member with one of r, q, b pushed off the self-adjoint class.
pub fn perturbed_member() -> impl Strategy<Value = FamilyMember> {
    (family_member(), 0usize..3, small_rational(), 0i64..=2).prop_map(|(mut m, which, c, k)| {
        let u = Expression::jet("u", 0, 0);
        match which {
            0 => m.r = m.r.add(&u.pow(k as u32 + 1).scale_rational(&c)),
            1 => m.q = m.q.add(&u.pow(k as u32).scale_rational(&c)),
            _ => m.b = m.b.add(&u.pow(k as u32).scale_rational(&c)),
        }
        m
    })
}
