//! LaTeX rendering: `u_{xx}`, `r'(u)`, `\frac{2}{3}u^{3}`.

use num_traits::{One, Signed};

use crate::expr::{Atom, Coeff, ConstMono, Exponent, Expression, Monomial, Name, Rational};
use crate::jet::Generator;

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "kappa", "lambda", "mu",
    "nu", "xi", "rho", "sigma", "tau", "phi", "chi", "psi", "omega",
];

fn name(n: Name) -> String {
    let s = n.as_str();
    let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
    let (stem, digits) = s.split_at(split);
    let stem = if GREEK.contains(&stem) {
        format!("\\{stem}")
    } else {
        stem.to_string()
    };
    if digits.is_empty() {
        stem
    } else {
        format!("{stem}_{{{digits}}}")
    }
}

fn rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

fn const_mono(m: &ConstMono) -> String {
    m.factors()
        .iter()
        .map(|(n, e)| match e {
            1 => name(*n),
            e => format!("{}^{{{e}}}", name(*n)),
        })
        .collect()
}

fn const_poly_terms(c: &Coeff) -> Vec<(bool, String)> {
    c.numerator()
        .terms()
        .map(|(m, r)| {
            let mag = r.abs();
            let body = match (m.is_one(), mag.is_one()) {
                (true, _) => rational(&mag),
                (false, true) => const_mono(m),
                (false, false) => format!("{}{}", rational(&mag), const_mono(m)),
            };
            (r.is_negative(), body)
        })
        .collect()
}

fn signed_sum(parts: &[(bool, String)]) -> String {
    let mut out = String::new();
    for (i, (neg, body)) in parts.iter().enumerate() {
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(body);
    }
    out
}

/// Coefficient as (negative, magnitude) where the magnitude is empty for one.
fn coeff(c: &Coeff) -> (bool, String) {
    let den: Vec<String> = c
        .denominator_factors()
        .map(|(l, k)| {
            let inner = Coeff::from_poly(l.to_poly());
            let s = signed_sum(&const_poly_terms(&inner));
            if k > 1 {
                format!("({s})^{{{k}}}")
            } else {
                format!("({s})")
            }
        })
        .collect();
    let num = const_poly_terms(c);
    if den.is_empty() && num.len() == 1 {
        let (neg, body) = num.into_iter().next().unwrap();
        return (neg, if body == "1" { String::new() } else { body });
    }
    if den.is_empty() {
        return (false, format!("\\left({}\\right)", signed_sum(&num)));
    }
    (
        false,
        format!("\\frac{{{}}}{{{}}}", signed_sum(&num), den.join("")),
    )
}

fn exponent(e: &Exponent) -> String {
    let mut parts: Vec<(bool, String)> = e
        .symbolic_part()
        .map(|(n, k)| {
            let mag = k.abs();
            let body = if mag == 1 {
                name(n)
            } else {
                format!("{mag}{}", name(n))
            };
            (k < 0, body)
        })
        .collect();
    let c = e.constant_part();
    if c != 0 || parts.is_empty() {
        parts.push((c < 0, c.abs().to_string()));
    }
    signed_sum(&parts)
}

fn atom(a: &Atom) -> String {
    match a {
        Atom::Indep(v) => v.symbol().to_string(),
        Atom::Const(n) => name(*n),
        Atom::Jet(j) => {
            let base = name(j.var);
            if j.is_base() {
                return base;
            }
            let sub = "t".repeat(j.t as usize) + &"x".repeat(j.x as usize);
            format!("{base}_{{{sub}}}")
        }
        Atom::Func { name: n, order } => match order {
            0..=3 => format!("{}{}(u)", name(*n), "'".repeat(*order as usize)),
            k => format!("{}^{{({k})}}(u)", name(*n)),
        },
    }
}

fn monomial(m: &Monomial) -> String {
    let mut factors: Vec<&(Atom, Exponent)> = m.factors().iter().collect();
    factors.sort_by_key(|(a, _)| match a {
        Atom::Indep(_) => (0, 0),
        Atom::Func { .. } => (1, 0),
        Atom::Jet(j) => (2, j.order()),
        Atom::Const(_) => (3, 0),
    });
    factors
        .into_iter()
        .map(|(a, e)| {
            let base = atom(a);
            if e.as_int() == Some(1) {
                return base;
            }
            // r'(u)^{2} would read as a derivative of r^2
            let base = if matches!(a, Atom::Func { .. }) {
                format!("\\left({base}\\right)")
            } else {
                base
            };
            format!("{base}^{{{}}}", exponent(e))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tex(e: &Expression) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let parts: Vec<(bool, String)> = e
        .terms()
        .map(|(m, c)| {
            let (neg, mag) = coeff(c);
            let body = match (m.is_one(), mag.is_empty()) {
                (true, true) => "1".to_string(),
                (true, false) => mag,
                (false, true) => monomial(m),
                (false, false) => format!("{mag}{}", monomial(m)),
            };
            (neg, body)
        })
        .collect();
    signed_sum(&parts)
}

pub fn tex_generator(g: &Generator) -> String {
    let parts: Vec<(bool, String)> = [(&g.tau, "t"), (&g.xi, "x"), (&g.eta, "u")]
        .into_iter()
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, v)| {
            let d = format!("\\frac{{\\partial}}{{\\partial {v}}}");
            if *c == Expression::one() {
                (false, d)
            } else if *c == Expression::int(-1) {
                (true, d)
            } else if c.len() == 1 {
                let t = tex(c);
                match t.strip_prefix('-') {
                    Some(rest) => (true, format!("{rest}{d}")),
                    None => (false, format!("{t}{d}")),
                }
            } else {
                (false, format!("\\left({}\\right){d}", tex(c)))
            }
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        signed_sum(&parts)
    }
}
