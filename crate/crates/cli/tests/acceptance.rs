//! One line per acceptance criterion. Criteria listed in `EXPECTED_FAIL`
//! reproduce printed values that do not hold; they are reported as FAIL
//! and do not fail the test run.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use dflat::expr::{parse_with, Expr, ParseContext, Sym};
use dflat::flags::{DerivedFlag, RefinedDerivedType, Signature};
use dflat::geometry::{Chart, CoordMap, Role, VectorField};
use dflat::goursat::{goursat_test, BrunovskyForm};
use dflat::Config;
use dflat_cli::corpus::{fixture, FIXTURES};
use dflat_cli::model::Model;
use dflat_cli::run::{run, RunOptions};
use dflat_cli::sysfile::Verb;

const EXPECTED_FAIL: &[usize] = &[4, 6];

struct Outcome {
    id: usize,
    title: &'static str,
    parts: Vec<(String, bool)>,
    elapsed: Duration,
    limit: Option<Duration>,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.parts.iter().all(|p| p.1) && self.limit.is_none_or(|l| self.elapsed <= l)
    }

    fn line(&self) -> String {
        let parts: Vec<String> = self.parts.iter().map(|(n, ok)| format!("{n}={}", if *ok { "ok" } else { "FAIL" })).collect();
        format!(
            "criterion {} {:<5} {} [{}] {:.2}s{}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            parts.join(", "),
            self.elapsed.as_secs_f64(),
            self.limit.map(|l| format!(" (limit {}s)", l.as_secs())).unwrap_or_default()
        )
    }
}

fn timed(id: usize, title: &'static str, limit: Option<u64>, f: impl FnOnce() -> Vec<(String, bool)>) -> Outcome {
    let start = Instant::now();
    let parts = f();
    Outcome { id, title, parts, elapsed: start.elapsed(), limit: limit.map(Duration::from_secs) }
}

fn report(name: &str) -> Value {
    let f = fixture(name).unwrap();
    run(None, &f, RunOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ctx(consts: &[&str]) -> ParseContext {
    ParseContext::with_constants(consts.iter().copied())
}

fn ex(c: &ParseContext, s: &str) -> Expr {
    parse_with(s, c).unwrap_or_else(|e| panic!("{s}: {e}"))
}

/// Exact equality of a report string with an expression.
fn eq_expr(r: &Value, ptr: &str, want: &str, c: &ParseContext) -> bool {
    r.pointer(ptr)
        .and_then(Value::as_str)
        .and_then(|s| parse_with(s, c).ok())
        .is_some_and(|got| (&got - &ex(c, want)).is_zero())
}

fn at<'a>(r: &'a Value, ptr: &str) -> &'a Value {
    r.pointer(ptr).unwrap_or(&Value::Null)
}

fn part(name: &str, ok: bool) -> (String, bool) {
    (name.to_string(), ok)
}

fn hsm() -> Vec<(String, bool)> {
    let f = fixture("hsm").unwrap();
    let r = run(Some(Verb::Sfl), &f, RunOptions::default()).unwrap();
    let c = ctx(&[]);
    let coords = [
        ("z1_0", "x4"),
        ("z1_1", "x5 + x4^3 - x1^10"),
        ("z2_0", "x1"),
        ("z2_1", "sin(x2)"),
        ("z2_2", "cos(x2)*sin(x3)"),
        ("z2_3", "-sin(x2)*sin(x3)^2 + (x4^3 + u1)*cos(x2)*cos(x3)"),
    ];
    vec![
        part("refined type", at(&r, "/analyze/refined_type") == &serde_json::json!([[3, 0], [5, 2, 2], [7, 4, 5], [8, 8]])),
        part("decel", at(&r, "/analyze/deceleration") == &serde_json::json!([0, 1, 1])),
        part("sfl", at(&r, "/sfl/is_sfl") == &Value::Bool(true)),
        part("contact coords", coords.iter().all(|(n, e)| eq_expr(&r, &format!("/sfl/contact/coordinates/{n}"), e, &c))),
    ]
}

fn random_signature(rng: &mut ChaCha8Rng) -> Signature {
    let k = rng.gen_range(1..=4);
    let mut rho: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=3)).collect();
    rho[k - 1] = 1;
    Signature::new(rho)
}

/// Relations of the refined derived type of a Brunovsky form, with the
/// ranks predicted from the signature.
fn brunovsky_relations(t: &RefinedDerivedType, kappa: &Signature, dim: usize) -> bool {
    let rho = kappa.entries();
    let k = rho.len();
    let m: usize = rho.iter().sum();
    let mut ranks = vec![1 + m];
    for j in 1..=k {
        ranks.push(ranks[j - 1] + rho[j - 1..].iter().sum::<usize>());
    }
    if t.0.len() != k + 1 || ranks[k] != dim {
        return false;
    }
    (0..=k).all(|j| t.m(j) == ranks[j])
        && (0..k).all(|j| t.chi(j) as i64 == 2 * ranks[j] as i64 - ranks[j + 1] as i64 - 1)
        && (1..k).all(|i| t.chi_lower(i) == Some(ranks[i - 1] - 1))
        && t.chi(k) == dim
}

fn brunovsky_suite() -> Vec<(String, bool)> {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut relations = true;
    let mut signatures = true;
    for _ in 0..50 {
        let kappa = random_signature(&mut rng);
        let b = BrunovskyForm::new(&kappa, "z").unwrap();
        let dim = 1 + kappa.entries().iter().enumerate().map(|(i, r)| (i + 2) * r).sum::<usize>();
        let flag = DerivedFlag::compute(&b.distribution(), &cfg).unwrap();
        relations &= b.chart.dim() == dim && brunovsky_relations(&flag.refined_type().unwrap(), &kappa, dim);
        let v = goursat_test(&flag, &cfg).unwrap();
        signatures &= v.is_goursat && v.signature.as_ref() == Some(&kappa);
    }
    vec![part("type relations", relations), part("goursat signature", signatures)]
}

fn charlet() -> Vec<(String, bool)> {
    let r = report("charlet");
    let c = ctx(&[]);
    let f = |k: u32| Expr::jet("z2", k);
    let h = |k: u32| Expr::jet("z1", k);
    let x3 = h(1).try_div(&(&Expr::one() - &f(2))).unwrap();
    let solution = [
        ("x1", f(0)),
        ("x2", f(1)),
        ("x3", x3.clone()),
        ("x4", h(0)),
        ("u1", f(2)),
        ("u2", x3.diff(Sym::time())),
    ];
    let sol_ok = solution.iter().all(|(x, want)| {
        at(&r, &format!("/cascade/solution/values/{x}")).as_str().and_then(|s| parse_with(s, &c).ok()).is_some_and(|g| (&g - want).is_zero())
    });
    vec![
        part("relative <1,1>", at(&r, "/symmetry/relative/signature") == "<1,1>" && at(&r, "/symmetry/relative/is_static_feedback_relative") == true),
        part("lambda", eq_expr(&r, "/subconnection/lambda/e1", "z_0*(1 - w_2)", &c)),
        part("reduced sfl k=2", at(&r, "/cascade/reduced/is_sfl") == true && at(&r, "/cascade/reduced/k_bar") == 2),
        part("plan", at(&r, "/cascade/plan/extra") == &serde_json::json!([["w", 1]])),
        part("solution", sol_ok),
        part("residual", at(&r, "/cascade/solution/residuals_vanish") == true),
    ]
}

fn four_input() -> Vec<(String, bool)> {
    let r = report("four_input");
    let c = ctx(&[]);
    let phi13 = ex(&c, "D(f2,3)(t)/D(f1,3)(t)*(D(f1,2)(t)*z2_0 - e2) + (e3 - D(f2,2)(t)*z2_0)");
    let got13 = ex(&c, at(&r, "/cascade/reduced/fundamentals/0/expr").as_str().unwrap_or("0"));
    let ratio = got13.try_div(&phi13).ok();
    let up_to_t = ratio.is_some_and(|q| q.coords().iter().all(|s| *s == Sym::time() || s.name().starts_with("D(")));
    vec![
        part("phi13 up to F(t,phi)", up_to_t),
        part(
            "phi14 printed",
            eq_expr(&r, "/cascade/reduced/fundamentals/1/expr", "e1 - D(f1,4)(t)*z1_0 + D(f1,3)(t)*z1_1 - D(f2,2)(t)*z1_2", &c),
        ),
        part(
            "phi14 corrected",
            eq_expr(&r, "/cascade/reduced/fundamentals/1/expr", "e1 - D(f1,4)(t)*z1_0 + D(f1,3)(t)*z1_1 - D(f1,2)(t)*z1_2", &c),
        ),
        part("nu'", at(&r, "/cascade/plan/nu_prime") == "<0,0,0,0,0,1,0,1>"),
        part("prolonged", at(&r, "/cascade/prolonged/signature") == "<0,0,1,1,0,1,0,1>"),
    ]
}

fn pvtol() -> Vec<(String, bool)> {
    let g = report("pvtol_galilean");
    let o = report("pvtol_oscillation");
    let c = ctx(&["h"]);
    let outputs = at(&o, "/cascade/flat_outputs").as_array().cloned().unwrap_or_default();
    let want = [ex(&c, "x - h*sin(th)"), ex(&c, "z + h*cos(th)")];
    let outs_ok = outputs.len() == 2
        && want.iter().all(|w| outputs.iter().any(|v| v.as_str().and_then(|s| parse_with(s, &c).ok()).is_some_and(|e| (&e - w).is_zero())));
    vec![
        part("galilean chain on u2", at(&g, "/cascade/compensator/y") == &serde_json::json!(["y1", "y2", "y3", "y4"]) && eq_expr(&g, "/cascade/compensator/beta/u2", "y1", &c)),
        part("chi identity", at(&g, "/cascade/compensator/chi_identity") == true),
        part("bound plan 7", at(&g, "/cascade/plans/bound/extra") == &serde_json::json!([["m", 7]])),
        part("refined to 6", at(&g, "/cascade/plans/refined/orders") == &serde_json::json!([["m", 6]])),
        part("oscillation outputs", outs_ok),
        part("oscillation compensator", eq_expr(&o, "/cascade/compensator/beta/u1", "h*th1^2 - csc(th)*y1", &c)),
    ]
}

fn tvtol() -> Vec<(String, bool)> {
    let r = report("tvtol");
    let c = ctx(&[]);
    let outputs = at(&r, "/cascade/flat_outputs").as_array().cloned().unwrap_or_default();
    let has = |w: &str| outputs.iter().any(|v| v.as_str().and_then(|s| parse_with(s, &c).ok()).is_some_and(|e| (&e - &ex(&c, w)).is_zero()));
    vec![
        part("u1", eq_expr(&r, "/cascade/compensator/beta/u1", "W1", &c)),
        part("u2", eq_expr(&r, "/cascade/compensator/beta/u2", "y1 + x1*x2*W1", &c)),
        part("flat outputs {x1, x5}", outputs.len() == 2 && has("x1") && has("x5")),
        part("augmented sfl", at(&r, "/cascade/compensator/is_sfl") == true),
        part("signature", at(&r, "/cascade/compensator/signature") == "<0,0,0,1,0,1>"),
    ]
}

/// Random polynomial of total degree at most 2 with small integer coefficients.
fn random_poly(rng: &mut ChaCha8Rng, vars: &[&str]) -> String {
    let terms: Vec<String> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let coef = rng.gen_range(-3i32..=3);
            let mono: Vec<&str> = (0..rng.gen_range(0..=2)).map(|_| vars[rng.gen_range(0..vars.len())]).collect();
            if mono.is_empty() {
                format!("({coef})")
            } else {
                format!("({coef})*{}", mono.join("*"))
            }
        })
        .collect();
    terms.join(" + ")
}

fn random_field(rng: &mut ChaCha8Rng, chart: &Arc<Chart>, c: &ParseContext) -> VectorField {
    let names = ["x1", "x2", "x3"];
    let comps = chart.syms().iter().map(|_| ex(c, &random_poly(rng, &names))).collect();
    VectorField::new(chart.clone(), comps).unwrap()
}

fn brackets(rng: &mut ChaCha8Rng) -> bool {
    let c = ctx(&[]);
    let mut coords = vec![(Sym::time(), Role::Time)];
    coords.extend(["x1", "x2", "x3"].iter().map(|x| (Sym::coord(x), Role::State)));
    let chart = Chart::new(coords).unwrap();
    let fields: Vec<VectorField> = (0..100).map(|_| random_field(rng, &chart, &c)).collect();
    let anti = fields.chunks(2).all(|p| p[0].bracket(&p[1]).unwrap().add(&p[1].bracket(&p[0]).unwrap()).is_zero());
    let jacobi = fields.windows(3).step_by(3).all(|w| {
        let (a, b, d) = (&w[0], &w[1], &w[2]);
        let s1 = a.bracket(&b.bracket(d).unwrap()).unwrap();
        let s2 = b.bracket(&d.bracket(a).unwrap()).unwrap();
        let s3 = d.bracket(&a.bracket(b).unwrap()).unwrap();
        s1.add(&s2).add(&s3).is_zero()
    });
    anti && jacobi
}

fn corpus_flags(cfg: &Config) -> Vec<DerivedFlag> {
    let mut out = Vec::new();
    for (name, text) in FIXTURES {
        let model = Model::build(&text.parse().unwrap()).unwrap();
        if let Some(sys) = &model.system {
            out.push(DerivedFlag::compute(&sys.distribution(), cfg).unwrap());
        } else if let Some(h) = model.normal_form(cfg).unwrap() {
            out.push(DerivedFlag::compute(&h.distribution(), cfg).unwrap());
        } else {
            panic!("{name} has nothing to analyse");
        }
    }
    out
}

fn cauchy_involutive(cfg: &Config) -> bool {
    corpus_flags(cfg).iter().all(|flag| (0..=flag.length()).all(|j| flag.cauchy(j).unwrap().is_integrable(cfg).unwrap()))
}

/// `y_i = x_i + p_i(x_1, ..., x_{i-1})` on the states, identity elsewhere.
fn diffeo_invariance(rng: &mut ChaCha8Rng, cfg: &Config) -> bool {
    let c = ctx(&[]);
    let mut ok = true;
    for trial in 0..20 {
        let name = if trial % 2 == 0 { "charlet" } else { "marino" };
        let model = Model::build(&fixture(name).unwrap()).unwrap();
        let sys = model.system.unwrap();
        let chart = sys.chart().clone();
        let states: Vec<String> = sys.state_syms().iter().map(|s| s.name().to_string()).collect();
        let mut coords = Vec::new();
        let mut comps = Vec::new();
        for (i, (s, role)) in chart.syms().iter().zip(chart.roles()).enumerate() {
            let name = s.name().to_string();
            match states.iter().position(|x| *x == name) {
                Some(p) => {
                    coords.push((Sym::coord(&format!("y{}", p + 1)), role.clone()));
                    let lower: Vec<&str> = states[..p].iter().map(String::as_str).collect();
                    let shift = if lower.is_empty() { "0".to_string() } else { random_poly(rng, &lower) };
                    comps.push(ex(&c, &format!("{name} + {shift}")));
                }
                None => {
                    coords.push((*s, role.clone()));
                    comps.push(Expr::sym(chart.sym(i)));
                }
            }
        }
        let target = Chart::new(coords).unwrap();
        let map = CoordMap::new(chart.clone(), target, comps, cfg).unwrap();
        let pushed = map.push_distribution(&sys.distribution()).unwrap();
        let a = DerivedFlag::compute(&sys.distribution(), cfg).unwrap().refined_type().unwrap();
        let b = DerivedFlag::compute(&pushed, cfg).unwrap().refined_type().unwrap();
        ok &= a == b;
    }
    ok
}

fn jet_dim(sig: &str) -> usize {
    sig.trim_matches(|c| c == '<' || c == '>')
        .split(',')
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, r)| (i + 2) * r.parse::<usize>().unwrap())
        .sum()
}

fn clocked(name: &str, f: impl FnOnce() -> bool) -> (String, bool) {
    let start = Instant::now();
    let ok = f();
    (format!("{name} {:.1}s", start.elapsed().as_secs_f64()), ok)
}

fn properties() -> Vec<(String, bool)> {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reports: Vec<Value> = FIXTURES.iter().map(|f| report(f.0)).collect();
    let mut solutions = 0;
    let mut residuals = true;
    let mut plans = 0;
    let mut identity = true;
    for r in &reports {
        if let Some(sol) = r.pointer("/cascade/solution").filter(|s| s.get("functions").is_some()) {
            solutions += 1;
            residuals &= sol["residuals_vanish"] == true;
        }
        if let Some(ps) = r.pointer("/cascade/plans").and_then(Value::as_object) {
            for p in ps.values() {
                plans += 1;
                let n = jet_dim(p["nu_prime"].as_str().unwrap()) - jet_dim(p["nu"].as_str().unwrap());
                identity &= p["prolonged_dim"].as_u64() == Some((n + p["base_dim"].as_u64().unwrap() as usize) as u64);
            }
        }
    }
    vec![
        clocked("brackets", || brackets(&mut rng)),
        clocked("cauchy involutive", || cauchy_involutive(&cfg)),
        clocked("diffeo invariance", || diffeo_invariance(&mut rng, &cfg)),
        part(&format!("residuals ({solutions} solutions)"), solutions > 0 && residuals),
        part(&format!("dimension identity ({plans} plans)"), plans > 0 && identity),
    ]
}

#[test]
fn acceptance() {
    let outcomes = [
        timed(1, "HSM analyze and sfl", Some(10), hsm),
        timed(2, "Brunovsky suite", Some(60), brunovsky_suite),
        timed(3, "Charlet cascade", Some(30), charlet),
        timed(4, "4-input fixture", Some(60), four_input),
        timed(5, "PVTOL double check", Some(120), pvtol),
        timed(6, "tVTOL", Some(120), tvtol),
        timed(7, "property suites", None, properties),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        println!("{}", o.line());
        if !o.pass() && !EXPECTED_FAIL.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria {unexpected:?} failed");
}
