//! Total derivatives, evolution equations, point-symmetry generators and
//! their prolongations, and on-shell elimination of t-derivatives.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::expr::{base_var, substitute, Atom, ExprError, Expression, IndepVar, Jet, Name};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("right-hand side contains the t-derivative `{0}`")]
    TDerivativeInRhs(String),
    #[error("not an evolution equation: {0}")]
    NotEvolution(String),
    #[error("evolution equation must contain at least one x-derivative")]
    OrderTooLow,
    #[error("generator component `{0}` must depend only on t, x, u")]
    NotPointGenerator(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Apply `D_t` or `D_x` to `e`.
///
/// The operator is truncated to the jet coordinates present in `e`, which is
/// exact for a differential function of finite order.
pub fn total_derivative(e: &Expression, wrt: IndepVar) -> Expression {
    let mut out = e.diff_partial(&Atom::Indep(wrt));
    let mut jets = e.jets();
    if !e.function_names().is_empty() {
        jets.insert(Jet::base(base_var()));
    }
    for j in jets {
        let partial = e.diff_partial(&Atom::Jet(j));
        if partial.is_zero() {
            continue;
        }
        out = out.add(&partial.mul(&Expression::atom(Atom::Jet(j.shifted(wrt)))));
    }
    out
}

/// `D_t^a D_x^b e`.
pub fn total_derivative_n(e: &Expression, t: u8, x: u8) -> Expression {
    let mut d = e.clone();
    for _ in 0..x {
        d = total_derivative(&d, IndepVar::X);
    }
    for _ in 0..t {
        d = total_derivative(&d, IndepVar::T);
    }
    d
}

/// `D_t D_x e - D_x D_t e` vanishes identically; exposed as a sanity hook.
pub fn commute_check(e: &Expression) -> bool {
    let tx = total_derivative(&total_derivative(e, IndepVar::X), IndepVar::T);
    let xt = total_derivative(&total_derivative(e, IndepVar::T), IndepVar::X);
    tx.sub(&xt).is_zero()
}

/// `u_t = rhs`, stored together with `F = u_t - rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionEquation {
    var: Name,
    rhs: Expression,
    f: Expression,
    order: u32,
    unknown_functions: BTreeSet<Name>,
}

impl EvolutionEquation {
    /// Build `u_t = rhs`. Every function symbol in `rhs` is an unknown.
    pub fn new(rhs: Expression) -> Result<EvolutionEquation, JetError> {
        let unknowns = rhs.function_names();
        EvolutionEquation::with_unknowns(rhs, unknowns)
    }

    pub fn with_unknowns(
        rhs: Expression,
        unknown_functions: BTreeSet<Name>,
    ) -> Result<EvolutionEquation, JetError> {
        let var = base_var();
        if let Some(j) = rhs.jets().into_iter().find(|j| j.var == var && j.t > 0) {
            return Err(JetError::TDerivativeInRhs(j.to_string()));
        }
        if let Some(j) = rhs.jets().into_iter().find(|j| j.var != var) {
            return Err(JetError::NotEvolution(format!(
                "unexpected dependent variable `{}`",
                j.var
            )));
        }
        let order = rhs.x_order(var);
        if order < 1 {
            return Err(JetError::OrderTooLow);
        }
        let f = Expression::atom(Atom::Jet(Jet::new(var, 1, 0))).sub(&rhs);
        Ok(EvolutionEquation {
            var,
            rhs,
            f,
            order,
            unknown_functions,
        })
    }

    /// Build from a differential function `F = c u_t + G` with `c` a nonzero
    /// constant and `G` free of t-derivatives; the equation is `F = 0`.
    pub fn from_differential_function(f: &Expression) -> Result<EvolutionEquation, JetError> {
        let ut = Atom::Jet(Jet::new(base_var(), 1, 0));
        let basis: BTreeSet<Atom> = [ut].into_iter().collect();
        let parts = f
            .collect_coefficients(&basis)
            .map_err(|e| JetError::NotEvolution(e.to_string()))?;
        let mut lead = None;
        let mut rest = Expression::zero();
        for (m, c) in parts {
            if m.is_one() {
                rest = c;
            } else if m == crate::expr::Monomial::atom(ut) {
                lead = Some(c);
            } else {
                return Err(JetError::NotEvolution(format!(
                    "u_t appears nonlinearly in `{f}`"
                )));
            }
        }
        let lead = lead
            .and_then(|c| c.as_coeff())
            .filter(|c| !c.is_zero())
            .ok_or_else(|| {
                JetError::NotEvolution(format!(
                    "`{f}` is not solvable for u_t with a constant coefficient"
                ))
            })?;
        let rhs = rest.neg().div_coeff(&lead)?;
        EvolutionEquation::new(rhs)
    }

    pub fn var(&self) -> Name {
        self.var
    }

    pub fn rhs(&self) -> &Expression {
        &self.rhs
    }

    /// The differential function `F = u_t - rhs`.
    pub fn f(&self) -> &Expression {
        &self.f
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn unknown_functions(&self) -> &BTreeSet<Name> {
        &self.unknown_functions
    }

    pub fn is_concrete(&self) -> bool {
        self.rhs.function_names().is_empty()
    }

    /// Substitute atoms (functions, constants) in the right-hand side.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<Atom, Expression>,
    ) -> Result<EvolutionEquation, JetError> {
        let rhs = substitute(&self.rhs, bindings)?;
        let unknowns = self
            .unknown_functions
            .iter()
            .copied()
            .filter(|n| !bindings.contains_key(&Atom::Func { name: *n, order: 0 }))
            .collect();
        EvolutionEquation::with_unknowns(rhs, unknowns)
    }
}

impl fmt::Display for EvolutionEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_t = {}", self.var, self.rhs)
    }
}

/// Point symmetry generator `tau d/dt + xi d/dx + eta d/du`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub tau: Expression,
    pub xi: Expression,
    pub eta: Expression,
}

impl Generator {
    pub fn new(tau: Expression, xi: Expression, eta: Expression) -> Result<Generator, JetError> {
        for c in [&tau, &xi, &eta] {
            let ok = c.atoms().iter().all(|a| match a {
                Atom::Indep(_) | Atom::Func { .. } | Atom::Const(_) => true,
                Atom::Jet(j) => j.is_base() && j.var == base_var(),
            });
            if !ok {
                return Err(JetError::NotPointGenerator(c.to_string()));
            }
        }
        Ok(Generator { tau, xi, eta })
    }

    pub fn zero() -> Generator {
        Generator {
            tau: Expression::zero(),
            xi: Expression::zero(),
            eta: Expression::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tau.is_zero() && self.xi.is_zero() && self.eta.is_zero()
    }

    /// Act on a function of (t, x, u) as a first-order derivation.
    pub fn apply(&self, f: &Expression) -> Expression {
        let u = Atom::Jet(Jet::base(base_var()));
        self.tau
            .mul(&f.diff_partial(&Atom::t()))
            .add(&self.xi.mul(&f.diff_partial(&Atom::x())))
            .add(&self.eta.mul(&f.diff_partial(&u)))
    }

    /// `W = eta - tau u_t - xi u_x`.
    pub fn characteristic(&self) -> Expression {
        let v = base_var();
        self.eta
            .sub(
                &self
                    .tau
                    .mul(&Expression::atom(Atom::Jet(Jet::new(v, 1, 0)))),
            )
            .sub(&self.xi.mul(&Expression::atom(Atom::Jet(Jet::new(v, 0, 1)))))
    }

    /// Prolongation coefficients `eta_J` for every jet `u_J` with
    /// `1 <= |J| <= order`, via `eta_J = D_J(W) + tau u_{J,t} + xi u_{J,x}`.
    pub fn prolong(&self, order: u32) -> BTreeMap<Jet, Expression> {
        let v = base_var();
        let w = self.characteristic();
        let mut dw: HashMap<(u8, u8), Expression> = HashMap::new();
        dw.insert((0, 0), w);
        let mut out = BTreeMap::new();
        for total in 1..=order as u8 {
            for t in 0..=total {
                let x = total - t;
                let d = if x > 0 {
                    total_derivative(&dw[&(t, x - 1)], IndepVar::X)
                } else {
                    total_derivative(&dw[&(t - 1, 0)], IndepVar::T)
                };
                let jet = Jet::new(v, t, x);
                let coeff = d
                    .add(
                        &self
                            .tau
                            .mul(&Expression::atom(Atom::Jet(jet.shifted(IndepVar::T)))),
                    )
                    .add(
                        &self
                            .xi
                            .mul(&Expression::atom(Atom::Jet(jet.shifted(IndepVar::X)))),
                    );
                dw.insert((t, x), d);
                out.insert(jet, coeff);
            }
        }
        out
    }

    /// Apply the prolonged generator to a differential function.
    pub fn prolonged_apply(&self, f: &Expression) -> Expression {
        let v = base_var();
        let jets: Vec<Jet> = f
            .jets()
            .into_iter()
            .filter(|j| j.var == v && !j.is_base())
            .collect();
        let order = jets.iter().map(|j| j.order()).max().unwrap_or(0);
        let mut out = self.apply(f);
        if order == 0 {
            return out;
        }
        let prolonged = self.prolong(order);
        for j in jets {
            out = out.add(&prolonged[&j].mul(&f.diff_partial(&Atom::Jet(j))));
        }
        out
    }

    /// Substitute constants or functions in all components.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expression>) -> Result<Generator, JetError> {
        Generator::new(
            substitute(&self.tau, bindings)?,
            substitute(&self.xi, bindings)?,
            substitute(&self.eta, bindings)?,
        )
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, d) in [(&self.tau, "d/dt"), (&self.xi, "d/dx"), (&self.eta, "d/du")] {
            if c.is_zero() {
                continue;
            }
            let (neg, mag) = if c.len() == 1 && c.to_string().starts_with('-') {
                (true, c.neg())
            } else {
                (false, c.clone())
            };
            match (first, neg) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            if mag == Expression::one() {
                f.write_str(d)?;
            } else if mag.len() == 1 {
                write!(f, "{mag}*{d}")?;
            } else {
                write!(f, "({mag})*{d}")?;
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `[X, Y]` as a point generator.
pub fn commutator(x: &Generator, y: &Generator) -> Generator {
    Generator {
        tau: x.apply(&y.tau).sub(&y.apply(&x.tau)),
        xi: x.apply(&y.xi).sub(&y.apply(&x.xi)),
        eta: x.apply(&y.eta).sub(&y.apply(&x.eta)),
    }
}

/// Replace every t-derivative of the equation's variable by its value on
/// solutions: `u_{t^a x^b} -> D_x^b D_t^(a-1)(rhs)`, recursively.
pub fn eliminate_t_derivatives(e: &Expression, eq: &EvolutionEquation) -> Expression {
    let var = eq.var();
    let needed: Vec<Jet> = e
        .jets()
        .into_iter()
        .filter(|j| j.var == var && j.t > 0)
        .collect();
    if needed.is_empty() {
        return e.clone();
    }
    let mut rules: HashMap<(u8, u8), Expression> = HashMap::new();
    let mut bindings = BTreeMap::new();
    for j in needed {
        let value = on_shell_rule(eq, j.t, j.x, &mut rules);
        bindings.insert(Atom::Jet(j), value);
    }
    substitute(e, &bindings).expect("on-shell rules are t-free and acyclic")
}

fn on_shell_rule(
    eq: &EvolutionEquation,
    t: u8,
    x: u8,
    rules: &mut HashMap<(u8, u8), Expression>,
) -> Expression {
    if let Some(r) = rules.get(&(t, x)) {
        return r.clone();
    }
    let value = if t == 1 {
        total_derivative_n(eq.rhs(), 0, x)
    } else {
        let prev = on_shell_rule(eq, t - 1, x, rules);
        let d = total_derivative(&prev, IndepVar::T);
        // D_t of a t-free expression only introduces first t-derivatives.
        let mut bindings = BTreeMap::new();
        for j in d
            .jets()
            .into_iter()
            .filter(|j| j.var == eq.var() && j.t > 0)
        {
            bindings.insert(Atom::Jet(j), on_shell_rule(eq, j.t, j.x, rules));
        }
        substitute(&d, &bindings).expect("on-shell rules are t-free and acyclic")
    };
    rules.insert((t, x), value.clone());
    value
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCheck {
    pub holds: bool,
    pub residual: Expression,
}

/// Evaluate the prolonged generator on `F` and restrict to solutions.
pub fn verify_point_symmetry(g: &Generator, eq: &EvolutionEquation) -> SymmetryCheck {
    let raw = g.prolonged_apply(eq.f());
    let residual = eliminate_t_derivatives(&raw, eq);
    SymmetryCheck {
        holds: residual.is_zero(),
        residual,
    }
}
