//! Numerical cross-check of conserved densities on a periodic grid.
//!
//! Space is discretised with fourth-order central differences. Terms of the
//! right-hand side of the form `c * u_(x^k)` with a constant `c` are
//! integrated exactly in Fourier space (integrating factor), everything else
//! by the classic four-stage Runge-Kutta method.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rustfft::{Fft, FftPlanner};

use crate::expr::{base_var, Atom, Coeff, Expression, Name, Rational};
use crate::jet::EvolutionEquation;

/// Highest x-derivative the stencils cover.
pub const MAX_DERIVATIVE: usize = 4;

/// Fourth-order central difference weights for derivatives 1..=4, as
/// `(offset, weight)` pairs scaled by `1 / (denominator * h^k)`.
const STENCILS: [(&[(i64, f64)], f64); MAX_DERIVATIVE] = [
    (&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0),
    (
        &[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)],
        12.0,
    ),
    (
        &[
            (-3, 1.0),
            (-2, -8.0),
            (-1, 13.0),
            (1, -13.0),
            (2, 8.0),
            (3, -1.0),
        ],
        8.0,
    ),
    (
        &[
            (-3, -1.0),
            (-2, 12.0),
            (-1, -39.0),
            (0, 56.0),
            (1, -39.0),
            (2, 12.0),
            (3, -1.0),
        ],
        6.0,
    ),
];

/// Stability limit of classic RK4 on the imaginary axis.
const RK4_LIMIT: f64 = 2.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("cannot evaluate `{0}` numerically: {1}")]
    Unsupported(String, String),
    #[error("constant `{0}` has no numeric value")]
    UnboundConstant(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time step {dt:e} exceeds the stability limit {limit:e} of the explicit part")]
    Unstable { dt: f64, limit: f64 },
    #[error("solution became non-finite or unbounded after t = {last_valid_time}")]
    BlowUp { last_valid_time: f64 },
    #[error("density contains the t-derivative `{0}`; reduce it first")]
    TimeDerivativeInDensity(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the RK4 stability limit the explicit part may use.
    pub safety: f64,
    /// Number of equally spaced output times after t = 0.
    pub samples: usize,
}

impl GridSpec {
    pub fn new(length: f64, n: usize, dt: f64, t_end: f64) -> GridSpec {
        GridSpec {
            length,
            n,
            dt,
            t_end,
            safety: 0.9,
            samples: 20,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx()).collect()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn validate(&self) -> Result<(), NumError> {
        if self.n < 32 {
            return Err(NumError::InvalidGrid(format!("N = {} is below 32", self.n)));
        }
        if !(self.length > 0.0 && self.dt > 0.0 && self.t_end >= 0.0) {
            return Err(NumError::InvalidGrid(
                "length and dt must be positive and t_end non-negative".into(),
            ));
        }
        if self.samples == 0 {
            return Err(NumError::InvalidGrid("samples must be positive".into()));
        }
        Ok(())
    }
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    Deriv(usize),
    X,
    T,
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    factors: Vec<(Slot, f64)>,
}

/// A differential function of `u` compiled to a pointwise evaluator over
/// `(x, t, u, u_x, ..., u_xxxx)`.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    terms: Vec<CompiledTerm>,
    order: usize,
}

impl CompiledExpr {
    pub fn new(
        e: &Expression,
        consts: &BTreeMap<Name, Rational>,
    ) -> Result<CompiledExpr, NumError> {
        let lookup = |n: Name| consts.get(&n).cloned();
        let check_consts = |c: &Coeff| -> Result<(), NumError> {
            match c.names().into_iter().find(|n| !consts.contains_key(n)) {
                Some(n) => Err(NumError::UnboundConstant(n.to_string())),
                None => Ok(()),
            }
        };
        let var = base_var();
        let mut terms = Vec::new();
        let mut order = 0;
        for (m, c) in e.terms() {
            check_consts(c)?;
            let coeff = c.eval(&lookup).ok_or_else(|| {
                NumError::Unsupported(c.to_string(), "singular coefficient".into())
            })?;
            let mut factors = Vec::new();
            for (a, ex) in m.factors() {
                let slot = match a {
                    Atom::Indep(crate::expr::IndepVar::X) => Slot::X,
                    Atom::Indep(crate::expr::IndepVar::T) => Slot::T,
                    Atom::Jet(j)
                        if j.var == var && j.t == 0 && (j.x as usize) <= MAX_DERIVATIVE =>
                    {
                        order = order.max(j.x as usize);
                        Slot::Deriv(j.x as usize)
                    }
                    Atom::Jet(j) if j.var == var && j.t > 0 => {
                        return Err(NumError::TimeDerivativeInDensity(a.to_string()))
                    }
                    _ => {
                        return Err(NumError::Unsupported(
                            a.to_string(),
                            "only u and its x-derivatives up to order 4, x and t are allowed"
                                .into(),
                        ))
                    }
                };
                let p = match ex.as_int() {
                    Some(k) => k as f64,
                    None => {
                        let ec = Coeff::from_exponent(ex);
                        check_consts(&ec)?;
                        to_f64(&ec.eval(&lookup).ok_or_else(|| {
                            NumError::Unsupported(ex.to_string(), "exponent".into())
                        })?)
                    }
                };
                factors.push((slot, p));
            }
            terms.push(CompiledTerm {
                coeff: to_f64(&coeff),
                factors,
            });
        }
        Ok(CompiledExpr { terms, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Evaluate with `jets[k]` holding `u_(x^k)`.
    pub fn eval(&self, x: f64, t: f64, jets: &[f64; MAX_DERIVATIVE + 1]) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                term.factors.iter().fold(term.coeff, |acc, (slot, p)| {
                    let base = match slot {
                        Slot::Deriv(k) => jets[*k],
                        Slot::X => x,
                        Slot::T => t,
                    };
                    acc * pow(base, *p)
                })
            })
            .sum()
    }
}

fn pow(base: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        base.powi(p as i32)
    } else {
        base.powf(p)
    }
}

/// Periodic finite-difference derivative of order `k` (1..=4).
pub fn fd_derivative(u: &[f64], k: usize, h: f64) -> Vec<f64> {
    let n = u.len() as i64;
    let (weights, denom) = STENCILS[k - 1];
    let scale = 1.0 / (denom * h.powi(k as i32));
    (0..n)
        .map(|i| {
            weights
                .iter()
                .map(|(o, w)| w * u[(i + o).rem_euclid(n) as usize])
                .sum::<f64>()
                * scale
        })
        .collect()
}

/// Fourier symbol of the `k`-th difference operator at grid angle `theta`.
fn stencil_symbol(k: usize, theta: f64, h: f64) -> Complex64 {
    let (weights, denom) = STENCILS[k - 1];
    let s: Complex64 = weights
        .iter()
        .map(|(o, w)| Complex64::from_polar(*w, theta * *o as f64))
        .sum();
    s / (denom * h.powi(k as i32))
}

fn max_symbol(k: usize, h: f64) -> f64 {
    (0..=512)
        .map(|i| stencil_symbol(k, PI * i as f64 / 512.0, h).norm())
        .fold(0.0, f64::max)
}

/// Sampled solution of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Semi-discrete right-hand side split into `L u + N(u)`.
struct SplitRhs {
    linear: [f64; MAX_DERIVATIVE + 1],
    nonlinear: CompiledExpr,
}

fn split_rhs(
    eq: &EvolutionEquation,
    consts: &BTreeMap<Name, Rational>,
) -> Result<SplitRhs, NumError> {
    if !eq.is_concrete() {
        let f = eq.rhs().function_names().into_iter().next().unwrap();
        return Err(NumError::Unsupported(
            f.to_string(),
            "unknown functions must be bound first".into(),
        ));
    }
    let var = base_var();
    let mut linear = [0.0; MAX_DERIVATIVE + 1];
    let mut rest = Expression::zero();
    for (m, c) in eq.rhs().terms() {
        let single = match m.factors() {
            [(Atom::Jet(j), e)]
                if j.var == var && j.t == 0 && j.x >= 1 && e.as_int() == Some(1) =>
            {
                Some(j.x as usize)
            }
            _ => None,
        };
        let value = c.eval(&|n| consts.get(&n).cloned());
        match (single, value) {
            (Some(k), Some(v)) if k <= MAX_DERIVATIVE => linear[k] += to_f64(&v),
            _ => rest = rest.add(&Expression::term(m.clone(), c.clone())),
        }
    }
    Ok(SplitRhs {
        linear,
        nonlinear: CompiledExpr::new(&rest, consts)?,
    })
}

struct Stepper {
    n: usize,
    h: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `exp(dt/2 * L)` per Fourier mode.
    half: Vec<Complex64>,
    has_linear: bool,
    rhs: CompiledExpr,
    xs: Vec<f64>,
}

impl Stepper {
    fn new(split: SplitRhs, grid: &GridSpec) -> Stepper {
        let n = grid.n;
        let h = grid.dx();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let has_linear = split.linear.iter().any(|c| *c != 0.0);
        let half = (0..n)
            .map(|m| {
                let k = if m <= n / 2 {
                    m as f64
                } else {
                    m as f64 - n as f64
                };
                let theta = 2.0 * PI * k / n as f64;
                let l: Complex64 = (1..=MAX_DERIVATIVE)
                    .filter(|d| split.linear[*d] != 0.0)
                    .map(|d| stencil_symbol(d, theta, h) * split.linear[d])
                    .sum();
                (l * (grid.dt / 2.0)).exp()
            })
            .collect();
        Stepper {
            n,
            h,
            fwd,
            inv,
            half,
            has_linear,
            rhs: split.nonlinear,
            xs: grid.points(),
        }
    }

    fn nonlinear(&self, u: &[f64], t: f64) -> Vec<f64> {
        let derivs: Vec<Vec<f64>> = (1..=self.rhs.order())
            .map(|k| fd_derivative(u, k, self.h))
            .collect();
        (0..self.n)
            .map(|i| {
                let mut jets = [0.0; MAX_DERIVATIVE + 1];
                jets[0] = u[i];
                for (k, d) in derivs.iter().enumerate() {
                    jets[k + 1] = d[i];
                }
                self.rhs.eval(self.xs[i], t, &jets)
            })
            .collect()
    }

    /// Apply `exp(dt/2 L)` in place.
    fn propagate(&self, u: &mut [f64]) {
        if !self.has_linear {
            return;
        }
        let mut buf: Vec<Complex64> = u.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (b, e) in buf.iter_mut().zip(&self.half) {
            *b *= e;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (v, b) in u.iter_mut().zip(&buf) {
            *v = b.re * scale;
        }
    }

    fn step(&self, u: &[f64], t: f64, dt: f64) -> Vec<f64> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + s * y).collect()
        };
        let k1 = self.nonlinear(u, t);
        let mut a = axpy(u, dt / 2.0, &k1);
        self.propagate(&mut a);
        let k2 = self.nonlinear(&a, t + dt / 2.0);
        let mut eu = u.to_vec();
        self.propagate(&mut eu);
        let b = axpy(&eu, dt / 2.0, &k2);
        let k3 = self.nonlinear(&b, t + dt / 2.0);
        let mut c = axpy(&eu, dt, &k3);
        self.propagate(&mut c);
        let k4 = self.nonlinear(&c, t + dt);
        // u_{n+1} = E^2 u + dt/6 (E^2 k1 + 2 E (k2 + k3) + k4)
        let mut acc = axpy(u, dt / 6.0, &k1);
        self.propagate(&mut acc);
        let mid: Vec<f64> = (0..self.n)
            .map(|i| acc[i] + dt / 3.0 * (k2[i] + k3[i]))
            .collect();
        let mut out = mid;
        self.propagate(&mut out);
        for i in 0..self.n {
            out[i] += dt / 6.0 * k4[i];
        }
        out
    }

    /// Largest stable step for the explicit part, estimated from the
    /// linearisation around `u`.
    fn stability_limit(&self, u: &[f64], safety: f64) -> f64 {
        let order = self.rhs.order();
        if self.rhs.terms.is_empty() {
            return f64::INFINITY;
        }
        let derivs: Vec<Vec<f64>> = (1..=order).map(|k| fd_derivative(u, k, self.h)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let mut jets = [0.0; MAX_DERIVATIVE + 1];
            jets[0] = u[i];
            for (k, d) in derivs.iter().enumerate() {
                jets[k + 1] = d[i];
            }
            let mut rate = 0.0;
            for k in 0..=order {
                let eps = 1e-6 * (1.0 + jets[k].abs());
                let mut hi = jets;
                hi[k] += eps;
                let mut lo = jets;
                lo[k] -= eps;
                let slope = (self.rhs.eval(self.xs[i], 0.0, &hi)
                    - self.rhs.eval(self.xs[i], 0.0, &lo))
                    / (2.0 * eps);
                let sym = if k == 0 { 1.0 } else { max_symbol(k, self.h) };
                rate += slope.abs() * sym;
            }
            worst = worst.max(rate);
        }
        if worst == 0.0 {
            f64::INFINITY
        } else {
            safety * RK4_LIMIT / worst
        }
    }
}

/// Integrate `eq` from `u0` (sampled on `grid.points()`).
pub fn integrate(
    eq: &EvolutionEquation,
    grid: &GridSpec,
    u0: &[f64],
    consts: &BTreeMap<Name, Rational>,
) -> Result<Trajectory, NumError> {
    grid.validate()?;
    if u0.len() != grid.n {
        return Err(NumError::InvalidGrid(format!(
            "initial data has {} points, grid has {}",
            u0.len(),
            grid.n
        )));
    }
    let stepper = Stepper::new(split_rhs(eq, consts)?, grid);
    let limit = stepper.stability_limit(u0, grid.safety);
    if grid.dt > limit {
        return Err(NumError::Unstable { dt: grid.dt, limit });
    }
    let bound = 1e6 * (1.0 + u0.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let steps = grid.steps();
    let every = (steps / grid.samples).max(1);
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    for s in 1..=steps {
        let next = stepper.step(&u, t, grid.dt);
        if next.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(NumError::BlowUp { last_valid_time: t });
        }
        u = next;
        t = s as f64 * grid.dt;
        if s % every == 0 || s == steps {
            times.push(t);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        grid: grid.clone(),
        times,
        states,
    })
}

/// Values of `C0` integrated over the period at each sampled time.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTrace {
    pub times: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `max |I(t) - I(0)| / |I(0)|`, or the absolute drift when `I(0)` is
    /// below the floor.
    pub relative_drift: f64,
    pub absolute: bool,
}

/// Below this `|I(0)|` drift is reported in absolute terms.
pub const DRIFT_FLOOR: f64 = 1e-12;

pub fn density_integral(c0: &CompiledExpr, u: &[f64], t: f64, grid: &GridSpec) -> f64 {
    let h = grid.dx();
    let derivs: Vec<Vec<f64>> = (1..=c0.order()).map(|k| fd_derivative(u, k, h)).collect();
    let xs = grid.points();
    (0..u.len())
        .map(|i| {
            let mut jets = [0.0; MAX_DERIVATIVE + 1];
            jets[0] = u[i];
            for (k, d) in derivs.iter().enumerate() {
                jets[k + 1] = d[i];
            }
            c0.eval(xs[i], t, &jets)
        })
        .sum::<f64>()
        * h
}

pub fn density_drift(
    traj: &Trajectory,
    c0: &Expression,
    consts: &BTreeMap<Name, Rational>,
) -> Result<DensityTrace, NumError> {
    if let Some(j) = c0.jets().into_iter().find(|j| j.t > 0) {
        return Err(NumError::TimeDerivativeInDensity(j.to_string()));
    }
    let compiled = CompiledExpr::new(c0, consts)?;
    let integrals: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, u)| density_integral(&compiled, u, *t, &traj.grid))
        .collect();
    let i0 = integrals[0];
    let worst = integrals.iter().fold(0.0_f64, |m, i| m.max((i - i0).abs()));
    let absolute = i0.abs() <= DRIFT_FLOOR;
    Ok(DensityTrace {
        times: traj.times.clone(),
        integrals,
        relative_drift: if absolute { worst } else { worst / i0.abs() },
        absolute,
    })
}
