use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::pow;

use super::lexer::{tokenize, Tok, Token};
use super::numexpr::{BinOp, Func, NumExpr};
use super::{NumericConfig, Problem, ProblemError};
use crate::expr::{
    base_var, pow_exponent, Atom, CoeffError, ExprError, Expression, IndepVar, Name, Rational,
};
use crate::jet::{EvolutionEquation, Generator, JetError};
use crate::numverify::GridSpec;

const MAX_X_ORDER: u32 = 4;
const RESERVED: &[&str] = &[
    "u", "t", "x", "v", "diff", "pi", "func", "const", "gen", "numeric", "set", "density",
];

const DIVISION_HINT: &str =
    "division is only supported by constants and powers of u; write other factors as products";

/// Either an ordinary expression or a vector field `tau d/dt + xi d/dx + eta d/du`.
#[derive(Clone, Debug)]
enum Value {
    Expr(Expression),
    Field([Expression; 3]),
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

impl From<&Token> for Pos {
    fn from(t: &Token) -> Pos {
        Pos {
            line: t.line,
            col: t.col,
        }
    }
}

fn syntax(at: Pos, message: impl Into<String>) -> ProblemError {
    ProblemError::Syntax {
        line: at.line,
        col: at.col,
        message: message.into(),
    }
}

fn expr_error(at: Pos, e: ExprError) -> ProblemError {
    match e {
        ExprError::Coeff(CoeffError::DivisionByZero) => syntax(at, "division by zero"),
        other => ProblemError::Unsupported {
            line: at.line,
            col: at.col,
            message: other.to_string(),
        },
    }
}

/// Exact value of a decimal literal such as `12`, `0.25` or `1e-4`.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if (int_part.is_empty() && frac_part.is_empty()) || frac_part.contains('.') {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        Rational::from_integer(digits * pow(ten, scale as usize))
    } else {
        Rational::new(digits, pow(ten, (-scale) as usize))
    })
}

/// `u`, `u_x`, `u_tx`, ... as (t-count, x-count).
fn jet_orders(name: &str) -> Option<(u32, u32)> {
    if name == "u" {
        return Some((0, 0));
    }
    let suffix = name.strip_prefix("u_")?;
    if suffix.is_empty() || !suffix.chars().all(|c| c == 't' || c == 'x') {
        return None;
    }
    let t = suffix.chars().filter(|c| *c == 't').count() as u32;
    Some((t, suffix.len() as u32 - t))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    functions: Vec<Name>,
    constants: Vec<Name>,
    allow_fields: bool,
    /// t-derivative jets met in the current statement, with positions.
    t_jets: Vec<(String, Pos)>,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ProblemError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            functions: Vec::new(),
            constants: Vec::new(),
            allow_fields: false,
            t_jets: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> Pos {
        (&self.toks[self.pos]).into()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ProblemError> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(syntax(
                self.here(),
                format!("expected {what}, found {}", self.peek()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ProblemError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let at = self.here();
                self.bump();
                Ok((s, at))
            }
            other => Err(syntax(
                self.here(),
                format!("expected {what}, found {other}"),
            )),
        }
    }

    fn end_statement(&mut self) -> Result<(), ProblemError> {
        match self.peek() {
            Tok::Sep => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::RBrace => Ok(()),
            other => Err(syntax(
                self.here(),
                format!("expected end of statement, found {other}"),
            )),
        }
    }

    fn is_declared(&self, name: &str) -> bool {
        let n = Name::new(name);
        self.functions.contains(&n) || self.constants.contains(&n)
    }

    fn declare(&mut self, is_function: bool) -> Result<(), ProblemError> {
        let mut any = false;
        while let Tok::Ident(_) = self.peek() {
            let (name, at) = self.ident("a name")?;
            if RESERVED.contains(&name.as_str()) || jet_orders(&name).is_some() {
                return Err(syntax(at, format!("`{name}` is reserved")));
            }
            if self.is_declared(&name) {
                return Err(syntax(at, format!("`{name}` is declared twice")));
            }
            if is_function {
                self.functions.push(Name::new(&name));
            } else {
                self.constants.push(Name::new(&name));
            }
            any = true;
        }
        if !any {
            return Err(syntax(self.here(), "expected at least one name"));
        }
        Ok(())
    }

    // ---- symbolic expressions ----

    fn value(&mut self) -> Result<Value, ProblemError> {
        let mut acc = self.term()?;
        loop {
            let negate = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Ok(acc),
            };
            let at = self.here();
            self.bump();
            let mut rhs = self.term()?;
            if negate {
                rhs = neg(rhs);
            }
            acc = match (acc, rhs) {
                (Value::Expr(a), Value::Expr(b)) => Value::Expr(a.add(&b)),
                (Value::Field(a), Value::Field(b)) => {
                    Value::Field([&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]])
                }
                _ => return Err(syntax(at, "cannot add a vector field and a function")),
            };
        }
    }

    fn term(&mut self) -> Result<Value, ProblemError> {
        let mut acc = self.unary()?;
        loop {
            let divide = match self.peek() {
                Tok::Star => false,
                Tok::Slash => true,
                _ => return Ok(acc),
            };
            let at = self.here();
            self.bump();
            let rhs = self.unary()?;
            acc = if divide {
                let den = match rhs {
                    Value::Expr(d) => d,
                    Value::Field(_) => return Err(syntax(at, "cannot divide by a vector field")),
                };
                let inv = invert(&den, at)?;
                scale(acc, &inv)
            } else {
                match (acc, rhs) {
                    (Value::Expr(a), Value::Expr(b)) => Value::Expr(a.mul(&b)),
                    (Value::Expr(a), f @ Value::Field(_))
                    | (f @ Value::Field(_), Value::Expr(a)) => scale(f, &a),
                    (Value::Field(_), Value::Field(_)) => {
                        return Err(syntax(at, "cannot multiply two vector fields"))
                    }
                }
            };
        }
    }

    fn unary(&mut self) -> Result<Value, ProblemError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(neg(self.unary()?))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Value, ProblemError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let at = self.here();
        self.bump();
        let exp_at = self.here();
        let exp = match self.unary()? {
            Value::Expr(e) => e,
            Value::Field(_) => return Err(syntax(exp_at, "a vector field cannot be an exponent")),
        };
        let base = match base {
            Value::Expr(b) => b,
            Value::Field(_) => {
                return Err(syntax(at, "a vector field cannot be raised to a power"))
            }
        };
        let exponent = exp
            .as_coeff()
            .and_then(|c| c.to_exponent())
            .ok_or_else(|| ProblemError::Unsupported {
                line: exp_at.line,
                col: exp_at.col,
                message: format!(
                    "exponent `{exp}` must be an integer or affine in the constants with integer coefficients"
                ),
            })?;
        if exponent.as_int().is_some_and(|k| k < 0)
            && !is_u_power(&base)
            && base.as_coeff().is_none()
        {
            return Err(syntax(at, DIVISION_HINT));
        }
        pow_exponent(&base, &exponent)
            .map(Value::Expr)
            .map_err(|e| expr_error(at, e))
    }

    fn primary(&mut self) -> Result<Value, ProblemError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Number(s) => {
                self.bump();
                let r = parse_decimal(&s)
                    .ok_or_else(|| syntax(at, format!("malformed number `{s}`")))?;
                Ok(Value::Expr(Expression::rational(r)))
            }
            Tok::LParen => {
                self.bump();
                let v = self.value()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Tok::Ident(name) => self.identifier(name, at),
            other => Err(syntax(at, format!("expected an expression, found {other}"))),
        }
    }

    fn identifier(&mut self, name: String, at: Pos) -> Result<Value, ProblemError> {
        if name == "d" && *self.peek_at(1) == Tok::Slash {
            if let Tok::Ident(w) = self.peek_at(2).clone() {
                let slot = match w.as_str() {
                    "dt" => Some(0),
                    "dx" => Some(1),
                    "du" => Some(2),
                    _ => None,
                };
                if let Some(slot) = slot {
                    if !self.allow_fields {
                        return Err(syntax(
                            at,
                            "`d/dt`, `d/dx`, `d/du` are only allowed in `gen` lines",
                        ));
                    }
                    self.pos += 3;
                    let mut field = [Expression::zero(), Expression::zero(), Expression::zero()];
                    field[slot] = Expression::one();
                    return Ok(Value::Field(field));
                }
            }
        }
        self.bump();
        if name == "diff" {
            return self.diff_call();
        }
        let n = Name::new(&name);
        if self.functions.contains(&n) {
            let mut order = 0;
            while *self.peek() == Tok::Prime {
                self.bump();
                order += 1;
            }
            self.expect(Tok::LParen, &format!("`(u)` after `{name}`"))?;
            self.expect_u()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Value::Expr(Expression::atom(Atom::Func { name: n, order })));
        }
        if let Some((t, x)) = jet_orders(&name) {
            if x > MAX_X_ORDER {
                return Err(ProblemError::OrderTooHigh {
                    jet: name,
                    order: x,
                    line: at.line,
                    col: at.col,
                });
            }
            if t > 0 {
                self.t_jets.push((name.clone(), at));
            }
            return Ok(Value::Expr(Expression::jet("u", t as u8, x as u8)));
        }
        match name.as_str() {
            "t" => return Ok(Value::Expr(Expression::indep(IndepVar::T))),
            "x" => return Ok(Value::Expr(Expression::indep(IndepVar::X))),
            _ => {}
        }
        if self.constants.contains(&n) {
            return Ok(Value::Expr(Expression::atom(Atom::Const(n))));
        }
        Err(ProblemError::Undeclared {
            name,
            line: at.line,
            col: at.col,
        })
    }

    fn expect_u(&mut self) -> Result<(), ProblemError> {
        let (arg, at) = self.ident("`u`")?;
        if arg != "u" {
            return Err(syntax(
                at,
                format!("functions take the argument `u`, found `{arg}`"),
            ));
        }
        Ok(())
    }

    /// `diff(r, u, k)`
    fn diff_call(&mut self) -> Result<Value, ProblemError> {
        self.expect(Tok::LParen, "`(` after `diff`")?;
        let (fname, fat) = self.ident("a function name")?;
        let n = Name::new(&fname);
        if !self.functions.contains(&n) {
            return Err(ProblemError::Undeclared {
                name: fname,
                line: fat.line,
                col: fat.col,
            });
        }
        self.expect(Tok::Comma, "`,`")?;
        self.expect_u()?;
        self.expect(Tok::Comma, "`,`")?;
        let order = match self.peek().clone() {
            Tok::Number(s) => s.parse::<u32>().ok(),
            _ => None,
        }
        .ok_or_else(|| syntax(self.here(), "expected a derivative order"))?;
        self.bump();
        self.expect(Tok::RParen, "`)`")?;
        Ok(Value::Expr(Expression::atom(Atom::Func { name: n, order })))
    }

    fn expression(&mut self) -> Result<Expression, ProblemError> {
        let at = self.here();
        match self.value()? {
            Value::Expr(e) => Ok(e),
            Value::Field(_) => Err(syntax(at, "expected a function, found a vector field")),
        }
    }

    // ---- statements ----

    fn equation(&mut self) -> Result<EvolutionEquation, ProblemError> {
        let at = self.here();
        self.t_jets.clear();
        let lhs = self.expression()?;
        self.expect(Tok::Eq, "`=`")?;
        let lhs_t_jets = self.t_jets.len();
        let rhs = self.expression()?;
        let ut = Expression::jet("u", 1, 0);
        let result = if lhs == ut {
            if let Some((jet, p)) = self.t_jets.get(lhs_t_jets) {
                return Err(ProblemError::TDerivative {
                    jet: jet.clone(),
                    line: p.line,
                    col: p.col,
                });
            }
            EvolutionEquation::new(rhs)
        } else {
            if let Some((jet, p)) = self.t_jets.iter().find(|(j, _)| j != "u_t") {
                return Err(ProblemError::TDerivative {
                    jet: jet.clone(),
                    line: p.line,
                    col: p.col,
                });
            }
            EvolutionEquation::from_differential_function(&lhs.sub(&rhs))
        };
        result.map_err(|e| match e {
            JetError::Expr(inner) => expr_error(at, inner),
            JetError::OrderTooLow => syntax(at, "the equation must contain an x-derivative of u"),
            other => syntax(at, other.to_string()),
        })
    }

    fn generator(&mut self) -> Result<(String, Generator), ProblemError> {
        let (name, _) = self.ident("a generator name")?;
        self.expect(Tok::Eq, "`=`")?;
        let at = self.here();
        self.allow_fields = true;
        let v = self.value();
        self.allow_fields = false;
        let [tau, xi, eta] = match v? {
            Value::Field(f) => f,
            Value::Expr(_) => {
                return Err(syntax(
                    at,
                    "expected a vector field such as `t*d/dt - u*d/du`",
                ))
            }
        };
        let g = Generator::new(tau, xi, eta).map_err(|e| syntax(at, e.to_string()))?;
        Ok((name, g))
    }

    fn numeric(&mut self) -> Result<NumericConfig, ProblemError> {
        let start = self.here();
        self.expect(Tok::LBrace, "`{`")?;
        let mut grid = GridSpec::new(2.0 * PI, 256, 1e-4, 1.0);
        let mut initial = None;
        let mut densities = Vec::new();
        let mut bindings = BTreeMap::new();
        loop {
            match self.peek().clone() {
                Tok::Sep => {
                    self.bump();
                    continue;
                }
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(_) => {}
                other => {
                    return Err(syntax(
                        self.here(),
                        format!("unexpected {other} in numeric block"),
                    ))
                }
            }
            let (key, at) = self.ident("a setting")?;
            match key.as_str() {
                "set" => {
                    let (cname, cat) = self.ident("a constant")?;
                    let n = Name::new(&cname);
                    if !self.constants.contains(&n) {
                        return Err(ProblemError::Undeclared {
                            name: cname,
                            line: cat.line,
                            col: cat.col,
                        });
                    }
                    self.expect(Tok::Eq, "`=`")?;
                    let vat = self.here();
                    let v = self
                        .expression()?
                        .as_rational()
                        .ok_or_else(|| syntax(vat, "expected a rational number"))?;
                    bindings.insert(n, v);
                }
                "density" => {
                    let (dname, _) = self.ident("a density name")?;
                    self.expect(Tok::Eq, "`=`")?;
                    densities.push((dname, self.expression()?));
                }
                _ => {
                    self.expect(Tok::Eq, "`=`")?;
                    let vat = self.here();
                    let e = self.num_expr()?;
                    if key == "u0" {
                        initial = Some(e);
                    } else {
                        let v = e
                            .constant()
                            .ok_or_else(|| syntax(vat, format!("`{key}` cannot depend on x")))?;
                        let count = || -> Result<usize, ProblemError> {
                            if v >= 0.0 && v.fract() == 0.0 {
                                Ok(v as usize)
                            } else {
                                Err(syntax(
                                    vat,
                                    format!("`{key}` must be a non-negative integer"),
                                ))
                            }
                        };
                        match key.as_str() {
                            "L" => grid.length = v,
                            "N" => grid.n = count()?,
                            "dt" => grid.dt = v,
                            "t_end" => grid.t_end = v,
                            "samples" => grid.samples = count()?,
                            "safety" => grid.safety = v,
                            _ => {
                                return Err(syntax(at, format!("unknown numeric setting `{key}`")))
                            }
                        }
                    }
                }
            }
            self.end_statement()?;
        }
        let initial = initial.ok_or_else(|| syntax(start, "numeric block needs `u0 = ...`"))?;
        Ok(NumericConfig {
            grid,
            initial,
            densities,
            bindings,
        })
    }

    // ---- numeric expressions ----

    fn num_expr(&mut self) -> Result<NumExpr, ProblemError> {
        let mut acc = self.num_term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(acc),
            };
            self.bump();
            acc = NumExpr::Bin(op, Box::new(acc), Box::new(self.num_term()?));
        }
    }

    fn num_term(&mut self) -> Result<NumExpr, ProblemError> {
        let mut acc = self.num_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(acc),
            };
            self.bump();
            acc = NumExpr::Bin(op, Box::new(acc), Box::new(self.num_unary()?));
        }
    }

    fn num_unary(&mut self) -> Result<NumExpr, ProblemError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(NumExpr::Neg(Box::new(self.num_unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.num_unary()
            }
            _ => {
                let base = self.num_primary()?;
                if *self.peek() == Tok::Caret {
                    self.bump();
                    let e = self.num_unary()?;
                    return Ok(NumExpr::Bin(BinOp::Pow, Box::new(base), Box::new(e)));
                }
                Ok(base)
            }
        }
    }

    fn num_primary(&mut self) -> Result<NumExpr, ProblemError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Number(s) => {
                self.bump();
                s.parse::<f64>()
                    .map(NumExpr::Num)
                    .map_err(|_| syntax(at, format!("malformed number `{s}`")))
            }
            Tok::LParen => {
                self.bump();
                let e = self.num_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(NumExpr::X),
                    "pi" => Ok(NumExpr::Pi),
                    _ => {
                        let f = Func::from_name(&name).ok_or(ProblemError::Undeclared {
                            name: name.clone(),
                            line: at.line,
                            col: at.col,
                        })?;
                        self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                        let arg = self.num_expr()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(NumExpr::Call(f, Box::new(arg)))
                    }
                }
            }
            other => Err(syntax(
                at,
                format!("expected a number or formula, found {other}"),
            )),
        }
    }
}

fn neg(v: Value) -> Value {
    match v {
        Value::Expr(e) => Value::Expr(e.neg()),
        Value::Field([a, b, c]) => Value::Field([a.neg(), b.neg(), c.neg()]),
    }
}

fn scale(v: Value, by: &Expression) -> Value {
    match v {
        Value::Expr(e) => Value::Expr(e.mul(by)),
        Value::Field([a, b, c]) => Value::Field([a.mul(by), b.mul(by), c.mul(by)]),
    }
}

fn is_u_power(e: &Expression) -> bool {
    let u = Atom::Jet(crate::expr::Jet::base(base_var()));
    let mut terms = e.terms();
    match (terms.next(), terms.next()) {
        (Some((m, _)), None) => m.atoms().all(|a| a == u),
        _ => false,
    }
}

fn invert(den: &Expression, at: Pos) -> Result<Expression, ProblemError> {
    if den.is_zero() {
        return Err(syntax(at, "division by zero"));
    }
    if !is_u_power(den) && den.as_coeff().is_none() {
        return Err(syntax(at, DIVISION_HINT));
    }
    den.inverse().map_err(|e| expr_error(at, e))
}

pub fn parse_problem(src: &str) -> Result<Problem, ProblemError> {
    let mut p = Parser::new(src)?;
    let mut equation: Option<EvolutionEquation> = None;
    let mut generators: Vec<(String, Generator)> = Vec::new();
    let mut numeric = None;
    loop {
        let at = p.here();
        let keyword = match p.peek() {
            Tok::Eof => break,
            Tok::Sep => {
                p.bump();
                continue;
            }
            Tok::Ident(s) if matches!(s.as_str(), "func" | "const" | "gen" | "numeric") => {
                Some(s.clone())
            }
            _ => None,
        };
        if keyword.is_some() {
            p.bump();
        }
        match keyword.as_deref() {
            Some("func") => p.declare(true)?,
            Some("const") => p.declare(false)?,
            Some("gen") => {
                let (name, g) = p.generator()?;
                if generators.iter().any(|(n, _)| *n == name) {
                    return Err(syntax(at, format!("generator `{name}` is defined twice")));
                }
                generators.push((name, g));
            }
            Some(_) => {
                if numeric.is_some() {
                    return Err(syntax(at, "only one numeric block is allowed"));
                }
                numeric = Some(p.numeric()?);
            }
            None => {
                if equation.is_some() {
                    return Err(syntax(at, "only one equation is allowed"));
                }
                equation = Some(p.equation()?);
            }
        }
        p.end_statement()?;
    }
    let equation = equation.ok_or_else(|| syntax(p.here(), "no equation given"))?;
    Ok(Problem {
        functions: p.functions,
        constants: p.constants,
        equation,
        generators,
        numeric,
    })
}

/// Parse a single expression against the given declarations.
pub fn parse_expression(
    src: &str,
    functions: &[Name],
    constants: &[Name],
) -> Result<Expression, ProblemError> {
    let mut p = Parser::new(src)?;
    p.functions = functions.to_vec();
    p.constants = constants.to_vec();
    let e = p.expression()?;
    p.end_statement()?;
    if *p.peek() != Tok::Eof {
        return Err(syntax(p.here(), format!("unexpected {}", p.peek())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{rat, Exponent, Monomial};

    fn u() -> Expression {
        Expression::jet("u", 0, 0)
    }
    fn ux(k: u8) -> Expression {
        Expression::jet("u", 0, k)
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_decimal("1e-4"), Some(rat(1, 10000)));
        assert_eq!(parse_decimal("2.5E2"), Some(rat(250, 1)));
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn kdv() {
        let p = parse_problem("u_t = u_xxx + u*u_x").unwrap();
        assert_eq!(p.equation.rhs(), &(ux(3) + &u() * &ux(1)));
        assert!(p.equation.is_concrete());
    }

    #[test]
    fn singular_and_zero_form() {
        let a = parse_problem("u_t = u_xx/u").unwrap();
        let b = parse_problem("u*u_t - u_xx = 0").unwrap_err();
        // u*u_t is not constant-coefficient solvable
        assert_eq!(b.exit_code(), 2);
        let c = parse_problem("2*u_t - 2*u^(-1)*u_xx = 0").unwrap();
        assert_eq!(a.equation, c.equation);
    }

    #[test]
    fn gkdv_symbolic_power() {
        let p = parse_problem("const mu;\nu_t = u_xxx + u^mu*u_x").unwrap();
        let mono = Monomial::from_factors([
            (
                Atom::jet("u", 0, 0),
                Exponent::new(0, [(Name::new("mu"), 1)]),
            ),
            (Atom::jet("u", 0, 1), Exponent::int(1)),
        ]);
        assert!(!p.equation.rhs().coefficient_of(&mono).is_zero());
    }

    #[test]
    fn functions_and_derivatives() {
        let f = [Name::new("r")];
        let a = parse_expression("r''(u) + diff(r,u,2) + r(u)", &f, &[]).unwrap();
        let expected = Expression::int(2) * Expression::func("r", 2) + Expression::func("r", 0);
        assert_eq!(a, expected);
    }

    #[test]
    fn generators() {
        let p = parse_problem("u_t = u*u_x\ngen X = t*d/dt - u*d/du\ngen T = d/dt").unwrap();
        let x = p.generator("X").unwrap();
        assert_eq!(x.tau, Expression::indep(IndepVar::T));
        assert_eq!(x.xi, Expression::zero());
        assert_eq!(x.eta, -u());
        assert_eq!(p.generator("T").unwrap().tau, Expression::one());
    }

    #[test]
    fn errors() {
        let e = parse_problem("u_t = u_xx + w").unwrap_err();
        assert!(
            matches!(e, ProblemError::Undeclared { ref name, line: 1, col: 14 } if name == "w"),
            "{e}"
        );
        let e = parse_problem("u_t = u_tx").unwrap_err();
        assert!(matches!(e, ProblemError::TDerivative { .. }), "{e}");
        let e = parse_problem("u_t = u_xxxxx").unwrap_err();
        assert!(
            matches!(e, ProblemError::OrderTooHigh { order: 5, .. }),
            "{e}"
        );
        let e = parse_problem("u_t = u_xx/u_x").unwrap_err();
        assert!(e.to_string().contains("division"), "{e}");
        let e = parse_problem("u_t = u_xx * (2").unwrap_err();
        assert!(matches!(e, ProblemError::Syntax { .. }));
        let e = parse_problem("func r\nu_t = r*u_x").unwrap_err();
        assert!(e.to_string().contains("(u)"), "{e}");
    }

    #[test]
    fn division_by_constant_sum() {
        let c = [Name::new("mu")];
        let e = parse_expression("u^(mu+2)/(mu+2)", &[], &c).unwrap();
        let printed = e.to_string();
        assert_eq!(parse_expression(&printed, &[], &c).unwrap(), e);
    }

    #[test]
    fn numeric_block() {
        let p = parse_problem(
            "u_t = u_xxx + u*u_x\nnumeric {\n  N = 64\n  dt = 1e-3\n  u0 = cos(x)\n  density mass = u\n}\n",
        )
        .unwrap();
        let num = p.numeric.unwrap();
        assert_eq!(num.grid.n, 64);
        assert_eq!(num.densities[0].1, u());
        assert!((num.initial_data()[0] - 1.0).abs() < 1e-15);
    }
}
