//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero on any outcome other than the expected one.
//!
//! Criterion 4 is known to fail on its KdV item: `t d/dt - d/du` is not a
//! point symmetry of `u_t = u_xxx + u u_x`, so the vector built from it does
//! not verify. The line is printed as FAIL and the test pins that exact
//! failure, so any other change in outcome breaks the build.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::Value;

use common::*;
use selfadj_cli::{apply_settings, run_command, Command, Report};
use selfadj_core::conslaw::{
    conserved_vector, equivalent_up_to_trivial, reduce_trivial, specialize_v, verify_divergence,
    ConservedVector,
};
use selfadj_core::expr::{int, normalize, rat, Atom, Coeff, Expression, Name};
use selfadj_core::io::{parse_expression, parse_problem, Problem};
use selfadj_core::jet::{
    eliminate_t_derivatives, total_derivative, verify_point_symmetry, EvolutionEquation,
};
use selfadj_core::numverify::{density_drift, integrate, GridSpec};
use selfadj_core::variational::{
    euler_lagrange, self_adjointness_test, verify_family, ClosedFormFamily,
};
use selfadj_core::IndepVar::{T, X};

struct Outcome {
    summary: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            summary: String::new(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn criterion(
    number: u32,
    title: &str,
    limit: Option<Duration>,
    body: impl FnOnce() -> Outcome,
) -> Outcome {
    let start = Instant::now();
    let mut out = body();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        out.check(
            elapsed <= limit,
            format!(
                "took {:.2} s, limit {} s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            ),
        );
    }
    let status = if out.failures.is_empty() {
        "PASS"
    } else {
        "FAIL"
    };
    let detail = if out.failures.is_empty() {
        out.summary.clone()
    } else {
        out.failures.join("; ")
    };
    println!(
        "criterion {number} {status} ({:.2} s) {title}: {detail}",
        elapsed.as_secs_f64()
    );
    out
}

fn load(name: &str) -> Problem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name);
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn records<'a>(report: &'a Report, kind: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    report.records().iter().filter(move |r| r["kind"] == kind)
}

fn parse_in(p: &Problem, src: &str) -> Expression {
    parse_expression(src, &p.functions, &p.constants).unwrap()
}

fn u() -> Expression {
    Expression::jet("u", 0, 0)
}

fn f(name: &str) -> Expression {
    Expression::func(name, 0)
}

fn c(name: &str) -> Expression {
    Expression::constant(name)
}

/// k-th derivative in u of an expression in u.
fn du(e: &Expression, k: u32) -> Expression {
    (0..k).fold(e.clone(), |acc, _| acc.diff_partial(&Atom::jet("u", 0, 0)))
}

fn over_u(e: &Expression) -> Expression {
    e.mul(&u().inverse().unwrap())
}

/// Nonzero constant `s` with `a = s * b`.
fn proportional(a: &Expression, b: &Expression) -> Option<Coeff> {
    a.ratio_to(b).filter(|s| !s.is_zero())
}

/// 1-based index of the system row proportional to `want`.
fn row_of(rows: &[Expression], want: &Expression) -> Option<usize> {
    rows.iter()
        .position(|r| proportional(r, want).is_some())
        .map(|i| i + 1)
}

fn determining_system() -> Outcome {
    let mut out = Outcome::new();
    let p = load("family3.sa");
    let report = run_command(Command::Detsys, &p, None).unwrap();
    let rows: Vec<Expression> = records(&report, "determining_equation")
        .map(|r| parse_in(&p, r["expr"].as_str().unwrap()))
        .collect();
    let (r, pp, q, b) = (f("r"), f("p"), f("q"), f("b"));
    let want = [
        ("(ur)'''", du(&u().mul(&r), 3)),
        ("(ur)''", du(&u().mul(&r), 2)),
        ("uq - (up)'", u().mul(&q).sub(&du(&u().mul(&pp), 1))),
        (
            "uq' - 2p' - up'' + q",
            u().mul(&du(&q, 1)) - du(&pp, 1).scale_rational(&int(2)) - u().mul(&du(&pp, 2))
                + q.clone(),
        ),
        ("(ub)'", du(&u().mul(&b), 1)),
    ];
    out.check(
        rows.len() == want.len(),
        format!("{} rows, expected {}", rows.len(), want.len()),
    );
    let mut used = vec![false; rows.len()];
    for (label, w) in &want {
        match row_of(&rows, w) {
            Some(i) if !used[i - 1] => used[i - 1] = true,
            Some(i) => out.check(false, format!("{label} matched row {i} twice")),
            None => out.check(false, format!("no row proportional to {label} = {w}")),
        }
    }
    out.summary = format!(
        "{} rows, each a constant multiple of one expected equation",
        rows.len()
    );
    out
}

/// Closed forms from the records, parsed with the integration constants the
/// solver introduced.
fn assignments(report: &Report, p: &Problem) -> Vec<(String, Expression)> {
    let mut constants = p.constants.clone();
    constants.extend(
        names(&classification(report)["constants"])
            .into_iter()
            .map(Name::new),
    );
    records(report, "assignment")
        .map(|r| {
            let value = parse_expression(r["value"].as_str().unwrap(), &p.functions, &constants);
            (r["function"].as_str().unwrap().to_string(), value.unwrap())
        })
        .collect()
}

fn check_assignments(out: &mut Outcome, got: &[(String, Expression)], want: &[(&str, Expression)]) {
    for (name, value) in want {
        match got.iter().find(|(n, _)| n == name) {
            Some((_, v)) => out.check(v == value, format!("{name} = {v}, expected {value}")),
            None => out.check(false, format!("{name} not determined")),
        }
    }
    out.check(
        got.len() == want.len(),
        format!(
            "{} functions determined, expected {}",
            got.len(),
            want.len()
        ),
    );
}

fn classification(report: &Report) -> &Value {
    records(report, "classification").next().unwrap()
}

fn names(v: &Value) -> Vec<&str> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect()
}

fn third_order_classification() -> Outcome {
    let mut out = Outcome::new();
    let p = load("family3.sa");
    let report = run_command(Command::Classify, &p, None).unwrap();
    let want = [
        ("r", c("a1") + over_u(&c("a2"))),
        ("q", over_u(&du(&u().mul(&f("p")), 1))),
        ("b", over_u(&c("a3"))),
    ];
    check_assignments(&mut out, &assignments(&report, &p), &want);
    let cls = classification(&report);
    out.check(
        names(&cls["free_functions"]) == ["a", "p"],
        format!("free functions {}", cls["free_functions"]),
    );
    out.check(cls["verified"] == true, "verify_family is false");
    out.check(!report.failed(), "classify reported failure");
    out.summary = "r = a1 + a2/u, q = (up)'/u, b = a3/u, p and a free, verified".into();
    out
}

fn fourth_order_classification() -> Outcome {
    let mut out = Outcome::new();
    let p = load("family4.sa");
    let report = run_command(Command::Classify, &p, None).unwrap();
    let (ff, h, pp) = (f("f"), f("h"), f("p"));
    let want = [
        ("g", h.clone() + over_u(&du(&u().mul(&ff), 1))),
        ("d", over_u(&c("c1")) + over_u(&du(&u().mul(&h), 1))),
        ("q", over_u(&du(&u().mul(&pp), 1))),
        ("r", c("a1") + over_u(&c("a2"))),
        ("b", over_u(&c("a3"))),
    ];
    check_assignments(&mut out, &assignments(&report, &p), &want);
    let cls = classification(&report);
    out.check(cls["verified"] == true, "verify_family is false");
    out.check(
        names(&cls["free_functions"]) == ["a", "f", "h", "p"],
        format!("free functions {}", cls["free_functions"]),
    );

    // Rows that follow from the others.
    let detsys = run_command(Command::Detsys, &p, None).unwrap();
    let rows: Vec<Expression> = records(&detsys, "determining_equation")
        .map(|r| parse_in(&p, r["expr"].as_str().unwrap()))
        .collect();
    let redundant: Vec<usize> = cls["redundant"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let (uf, ug, uh, ud) = (
        u().mul(&ff),
        u().mul(&f("g")),
        u().mul(&h),
        u().mul(&f("d")),
    );
    let (up, uq) = (u().mul(&pp), u().mul(&f("q")));
    let consequences = [
        (
            "(uf)'' - (ug)' + (uh)'",
            du(&uf, 2) - du(&ug, 1) + du(&uh, 1),
        ),
        ("(up)'' - (uq)'", du(&up, 2) - du(&uq, 1)),
        (
            "(uf)'''' - (ug)''' + (ud)''",
            du(&uf, 4) - du(&ug, 3) + du(&ud, 2),
        ),
    ];
    let mut found = Vec::new();
    for (label, e) in &consequences {
        match row_of(&rows, e) {
            Some(i) => {
                out.check(
                    redundant.contains(&i),
                    format!("{label} (row {i}) not reported redundant"),
                );
                found.push(format!("{label} = row {i}"));
            }
            None => out.check(false, format!("{label} is not a row of the system")),
        }
    }

    // q = (c2 + (up)')/u with c2 != 0 is rejected.
    let c2 = load("family4_c2.sa");
    let rejected = run_command(Command::Classify, &c2, None).unwrap();
    let leftovers: Vec<Expression> = classification(&rejected)["unsolved"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| parse_in(&c2, v[1].as_str().unwrap()))
        .collect();
    out.check(rejected.failed(), "c2 variant was accepted");
    out.check(
        leftovers.len() == 1 && proportional(&leftovers[0], &c("c2")).is_some(),
        format!("c2 variant leaves {leftovers:?}, expected a multiple of c2"),
    );
    // Everything but c2 is already in closed form, so c2 alone decides.
    let fam = ClosedFormFamily::default();
    let mut c2_zero = c2.clone();
    apply_settings(&mut c2_zero, &["c2=0".to_string()]).unwrap();
    out.check(
        !verify_family(&c2.equation, &fam).unwrap(),
        "c2 variant verifies with c2 free",
    );
    out.check(
        verify_family(&c2_zero.equation, &fam).unwrap(),
        "c2 variant fails with c2 = 0",
    );
    out.summary = format!(
        "closed forms match, verified; c2 != 0 leaves `c2 = 0` unsolved; redundant: {}",
        found.join(", ")
    );
    out
}

fn reduced(p: &Problem, generator: &str) -> ConservedVector {
    let g = p.generator(generator).unwrap();
    reduce_trivial(&specialize_v(&conserved_vector(&p.equation, g).unwrap()).unwrap()).unwrap()
}

/// Check `cv` against `(c0, c1)` up to one constant factor and verify the
/// divergence identity twice: via the library and via an on-shell
/// computation here.
fn law_matches(cv: &ConservedVector, c0: &Expression, c1: &Expression) -> Result<Coeff, String> {
    let mut checked = cv.clone();
    if !verify_divergence(&mut checked).unwrap() {
        return Err(format!("({}, {}) fails verify_divergence", cv.c0, cv.c1));
    }
    let div = total_derivative(&cv.c0, T).add(&total_derivative(&cv.c1, X));
    if !eliminate_t_derivatives(&div, &cv.equation).is_zero() {
        return Err("divergence does not vanish on solutions".into());
    }
    let s = proportional(&cv.c0, c0)
        .ok_or_else(|| format!("C0 = {} is not a multiple of {c0}", cv.c0))?;
    if cv.c1 != c1.scale(&s) {
        return Err(format!("C1 = {} is not {s} * ({c1})", cv.c1));
    }
    Ok(s)
}

fn inline(src: &str) -> Problem {
    parse_problem(src).unwrap()
}

fn conservation_laws() -> Outcome {
    let mut out = Outcome::new();
    let e = |p: &Problem, s: &str| parse_in(p, s);
    let mut done = Vec::new();

    let burgers = inline("u_t = u*u_x\ngen X = t*d/dt - u*d/du\n");
    match law_matches(
        &reduced(&burgers, "X"),
        &e(&burgers, "-u^2"),
        &e(&burgers, "2/3*u^3"),
    ) {
        Ok(_) => done.push("Burgers"),
        Err(m) => out.check(false, format!("Burgers: {m}")),
    }

    let singular = inline("u_t = u_xx/u\ngen X = t*d/dt + u*d/du\ngen Y = x*d/dx + 2*t*d/dt\n");
    let (x, y) = (reduced(&singular, "X"), reduced(&singular, "Y"));
    match law_matches(&x, &e(&singular, "u^2"), &e(&singular, "-2*u_x")) {
        Ok(_) => done.push("singular"),
        Err(m) => out.check(false, format!("singular X: {m}")),
    }
    let eq = equivalent_up_to_trivial(&x, &y).unwrap();
    out.check(
        eq.equivalent && eq.scale == Some(Coeff::from_rational(rat(1, 2))),
        format!(
            "singular Y: scale {:?}, expected 1/2",
            eq.scale.map(|s| s.to_string())
        ),
    );

    // KdV with the generator as stated.
    let kdv = inline("u_t = u_xxx + u*u_x\ngen X = t*d/dt - d/du\ngen G = t*d/dx - d/du\n");
    let (kc0, kc1) = (e(&kdv, "-u"), e(&kdv, "1/2*u^2 + u_xx"));
    let stated = verify_point_symmetry(kdv.generator("X").unwrap(), &kdv.equation);
    match law_matches(&reduced(&kdv, "X"), &kc0, &kc1) {
        Ok(_) => done.push("KdV"),
        Err(m) => out.check(
            false,
            format!(
                "KdV + (t d/dt - d/du): {m}; the generator is not a point symmetry (on-shell residual {})",
                stated.residual
            ),
        ),
    }
    let boost = law_matches(&reduced(&kdv, "G"), &kc0, &kc1);
    out.check(
        !stated.holds && stated.residual == e(&kdv, "u_x - u_xxx - u*u_x"),
        "KdV: residual of t d/dt - d/du differs from u_x - u_xxx - u u_x",
    );
    out.check(boost.is_ok(), format!("KdV boost t d/dx - d/du: {boost:?}"));

    let gkdv =
        inline("const mu\nu_t = u_xxx + u^mu*u_x\ngen X = 2/mu*u*d/du - 3*t*d/dt - x*d/dx\n");
    let g0 = e(&gkdv, "u^2");
    let g1 = e(&gkdv, "u_x^2 - 2*u*u_xx - 2/(mu+2)*u^(mu+2)");
    match law_matches(&reduced(&gkdv, "X"), &g0, &g1) {
        Ok(s) => {
            out.check(
                Expression::from_coeff(s.clone()) == e(&gkdv, "(4 - mu)/(2*mu)"),
                format!("gKdV factor {s}, expected (4 - mu)/(2 mu)"),
            );
            done.push("gKdV(mu)");
        }
        Err(m) => out.check(false, format!("gKdV symbolic: {m}")),
    }
    for (mu, flux) in [
        ("1", "u_x^2 - 2*u*u_xx - 2/3*u^3"),
        ("2", "u_x^2 - 2*u*u_xx - 1/2*u^4"),
    ] {
        let mut special = gkdv.clone();
        apply_settings(&mut special, &[format!("mu={mu}")]).unwrap();
        let cv = reduced(&special, "X");
        match law_matches(&cv, &e(&special, "u^2"), &e(&special, flux)) {
            Ok(_) => done.push(if mu == "1" { "gKdV(1)" } else { "gKdV(2)" }),
            Err(m) => out.check(false, format!("gKdV mu = {mu}: {m}")),
        }
    }
    out.summary = format!("verified and proportional: {}", done.join(", "));
    out
}

fn self_adjointness_decisions() -> Outcome {
    let mut out = Outcome::new();
    let cases = [
        ("KdV", "u_t = u_xxx + u*u_x", true),
        ("Burgers", "u_t = u*u_x", true),
        ("singular", "u_t = u_xx/u", true),
        ("heat", "u_t = u_xx", false),
    ];
    for (name, src, want) in cases {
        let report = run_command(Command::CheckSa, &inline(src), None).unwrap();
        let r = records(&report, "self_adjointness").next().unwrap();
        let got = r["self_adjoint"] == true;
        out.check(got == want, format!("{name}: self_adjoint = {got}"));
        if want {
            out.check(r["phi"] == "-1", format!("{name}: phi = {}", r["phi"]));
        }
    }
    out.summary = "KdV, Burgers, singular: yes with phi = -1; heat: no".into();
    out
}

fn property_suites() -> Outcome {
    let mut out = Outcome::new();

    let mut bad = 0;
    for e in samples(expression(Shape::full()), 200, 1) {
        let tx = total_derivative(&total_derivative(&e, X), T);
        let xt = total_derivative(&total_derivative(&e, T), X);
        bad += usize::from(tx != xt);
    }
    out.check(bad == 0, format!("D_t D_x != D_x D_t on {bad}/200"));

    let var = Name::new("u");
    let mut bad = 0;
    for l in samples(expression(Shape::full()), 100, 2) {
        let ok = euler_lagrange(&total_derivative(&l, X), var).is_zero()
            && euler_lagrange(&total_derivative(&l, T), var).is_zero();
        bad += usize::from(!ok);
    }
    out.check(
        bad == 0,
        format!("Euler operator misses a total derivative on {bad}/100"),
    );

    let mut bad = 0;
    let mut compared = 0;
    for raw in samples(raw_expr(), 500, 3) {
        let e = normalize(&raw).unwrap();
        if let Some(direct) = eval_raw(&raw, &point_env) {
            compared += 1;
            bad += usize::from(e.eval(&point_env) != Some(direct));
        }
    }
    out.check(
        bad == 0 && compared == 500,
        format!("normalize disagrees on {bad}/{compared}"),
    );

    let mut bad = 0;
    for (e, p) in samples((expression(Shape::polynomial()), solution_poly()), 500, 4) {
        let on = |x: &Expression| substitute_solution(x, &p).unwrap();
        let ok = on(&total_derivative(&e, X)) == on(&e).diff(X)
            && on(&total_derivative(&e, T)) == on(&e).diff(T);
        bad += usize::from(!ok);
    }
    out.check(
        bad == 0,
        format!("total_derivative disagrees with the polynomial oracle on {bad}/500"),
    );

    let members = samples(family_member(), 10, 5);
    let accepted = members
        .iter()
        .filter(|m| self_adjointness_test(&m.equation()).is_self_adjoint)
        .count();
    let perturbed = samples(perturbed_member(), 10, 6);
    let rejected = perturbed
        .iter()
        .filter(|m| !self_adjointness_test(&m.equation()).is_self_adjoint)
        .count();
    out.check(accepted == 10, format!("{accepted}/10 members accepted"));
    out.check(
        rejected == 10,
        format!("{rejected}/10 perturbed members rejected"),
    );

    out.summary = "commutation 200, Euler operator 100, normalize 500 + total derivative 500, membership 10 + 10".into();
    out
}

fn kdv_energy_drift(n: usize, dt: f64) -> f64 {
    let eq = EvolutionEquation::new(
        u().mul(&Expression::jet("u", 0, 1))
            .add(&Expression::jet("u", 0, 3)),
    )
    .unwrap();
    let grid = GridSpec::new(2.0 * PI, n, dt, 1.0);
    let u0: Vec<f64> = grid.points().iter().map(|x| x.cos()).collect();
    let none = Default::default();
    let traj = integrate(&eq, &grid, &u0, &none).unwrap();
    density_drift(&traj, &u().pow(2), &none)
        .unwrap()
        .relative_drift
}

fn numerical_cross_check() -> Outcome {
    let mut out = Outcome::new();
    let p = load("kdv.sa");
    let grid = &p.numeric.as_ref().unwrap().grid;
    out.check(
        grid.n == 256
            && grid.dt == 1e-4
            && grid.t_end == 1.0
            && (grid.length - 2.0 * PI).abs() < 1e-12,
        "kdv.sa grid differs from N = 256, dt = 1e-4, t_end = 1 on [0, 2 pi]",
    );
    let report = run_command(Command::Numcheck, &p, None).unwrap();
    let drift = |name: &str| {
        records(&report, "density_trace")
            .find(|r| r["name"] == name)
            .and_then(|r| r["relative_drift"].as_f64())
            .unwrap()
    };
    let (mass, energy, control) = (drift("mass"), drift("energy"), drift("control"));
    out.check(mass <= 1e-6, format!("int u drift {mass:.2e}"));
    out.check(energy <= 1e-6, format!("int u^2 drift {energy:.2e}"));
    out.check(
        control >= 1e3 * mass.max(energy),
        format!("control drift {control:.2e} not 1e3 above"),
    );

    let runs = [(64, 1e-3), (128, 1.25e-4), (256, 1.5625e-5)];
    let drifts: Vec<f64> = runs
        .iter()
        .map(|&(n, dt)| kdv_energy_drift(n, dt))
        .collect();
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for o in &orders {
        out.check((o - 4.0).abs() <= 0.75, format!("observed order {o:.2}"));
    }
    out.summary = format!(
        "drift int u {mass:.1e}, int u^2 {energy:.1e}, u_x^2 {control:.1e}; orders {:.2}, {:.2}",
        orders[0], orders[1]
    );
    out
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "determining system", Some(secs(5)), determining_system),
        criterion(
            2,
            "third-order classification",
            Some(secs(5)),
            third_order_classification,
        ),
        criterion(
            3,
            "fourth-order classification",
            Some(secs(10)),
            fourth_order_classification,
        ),
        criterion(4, "conservation laws", Some(secs(30)), conservation_laws),
        criterion(
            5,
            "self-adjointness decisions",
            None,
            self_adjointness_decisions,
        ),
        criterion(6, "property suites", None, property_suites),
        criterion(
            7,
            "numerical cross-check",
            Some(secs(60)),
            numerical_cross_check,
        ),
    ];
    let failed: Vec<usize> = (1..=results.len())
        .filter(|i| !results[i - 1].failures.is_empty())
        .collect();
    assert_eq!(failed, [4], "unexpected acceptance outcome");
    let kdv = &results[3].failures;
    assert_eq!(kdv.len(), 1, "{kdv:?}");
    assert!(kdv[0].starts_with("KdV + (t d/dt - d/du)"), "{kdv:?}");
    println!(
        "acceptance: {} of {} criteria pass; criterion 4 fails only on the non-symmetry t d/dt - d/du",
        results.len() - failed.len(),
        results.len()
    );
}
