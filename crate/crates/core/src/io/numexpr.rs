use std::f64::consts::PI;
use std::fmt;

/// A real function of `x` used for initial data.
#[derive(Clone, Debug, PartialEq)]
pub enum NumExpr {
    Num(f64),
    X,
    Pi,
    Neg(Box<NumExpr>),
    Bin(BinOp, Box<NumExpr>, Box<NumExpr>),
    Call(Func, Box<NumExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
    Sech,
}

impl Func {
    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "sech" => Func::Sech,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
        }
    }
}

impl NumExpr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            NumExpr::Num(v) => *v,
            NumExpr::X => x,
            NumExpr::Pi => PI,
            NumExpr::Neg(e) => -e.eval(x),
            NumExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            NumExpr::Call(f, e) => {
                let v = e.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Tanh => v.tanh(),
                    Func::Sech => 1.0 / v.cosh(),
                }
            }
        }
    }

    /// Evaluate an expression without `x`.
    pub fn constant(&self) -> Option<f64> {
        if self.mentions_x() {
            None
        } else {
            Some(self.eval(0.0))
        }
    }

    fn mentions_x(&self) -> bool {
        match self {
            NumExpr::X => true,
            NumExpr::Num(_) | NumExpr::Pi => false,
            NumExpr::Neg(e) | NumExpr::Call(_, e) => e.mentions_x(),
            NumExpr::Bin(_, a, b) => a.mentions_x() || b.mentions_x(),
        }
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Num(v) => write!(f, "{v:?}"),
            NumExpr::X => f.write_str("x"),
            NumExpr::Pi => f.write_str("pi"),
            NumExpr::Neg(e) => write!(f, "-({e})"),
            NumExpr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}){sym}({b})")
            }
            NumExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
