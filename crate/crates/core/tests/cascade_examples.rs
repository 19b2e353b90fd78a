mod common;

use common::{ctx, ex, field, system};
use dflat::cascade::{
    analyze_reduction, dynamic_compensator, flat_outputs_and_solution, prolong_and_linearize, prolongation_plan, reduce,
    refine_plan, PlanMode,
};
use dflat::contact::{contact_coordinates, ContactOptions};
use dflat::flags::Signature;
use dflat::goursat::sfl_test;
use dflat::symmetry::{derive_group_coordinates, group_names, quotient_system, trivialize, SubConnection, SymmetryAlgebra};
use dflat::expr::Sym;
use dflat::Config;

#[test]
fn charlet_cascade() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let sys = system(&c, &[("x1", "x2"), ("x2", "u1"), ("x3", "u2"), ("x4", "x3*(1-u1)")], &["u1", "u2"]);
    let alg = SymmetryAlgebra::new(sys.chart().clone(), vec![field(&c, sys.chart(), &[("x4", "1")])], &cfg).unwrap();
    let q = quotient_system(&sys, &alg, None, &cfg).unwrap();
    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    let opts = ContactOptions { names: Some(vec!["z".into(), "w".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps: Vec<(String, _)> = group_names(1).into_iter().zip(derive_group_coordinates(&sys, &alg, &cfg).unwrap()).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &eps, &cfg).unwrap();

    let red = reduce(&h, &["w".to_string()]).unwrap();
    assert_eq!(red.system.drift().last().unwrap(), &ex(&c, "z_0*(1 - D(f,2)(t))"));
    let an = analyze_reduction(&red, &[], &cfg).unwrap();
    assert!(an.is_sfl());
    assert_eq!(an.k_bar, 2);
    assert_eq!(an.signature(), Some(&Signature::new(vec![0, 1])));
    let plan = prolongation_plan(&red, &an, PlanMode::Exact).unwrap();
    assert_eq!(plan.orders, vec![("w".to_string(), 3)]);
    let bound = prolongation_plan(&red, &an, PlanMode::Bound).unwrap();
    assert!(plan.nu_prime().le(&bound.nu_prime()));

    let pr = prolong_and_linearize(&h, &plan, &cfg).unwrap();
    assert_eq!(pr.sub.chart.dim(), h.chart.dim() + plan.added_dim());
    let comp = dynamic_compensator(&sys, &h, &plan, &cfg).unwrap();
    assert!(comp.chi_identity);
    assert_eq!(comp.beta, vec![(ex(&c, "u1").as_symbol().unwrap(), ex(&c, "y1")), (ex(&c, "u2").as_symbol().unwrap(), ex(&c, "W1"))]);
    let flat = flat_outputs_and_solution(&sys, &comp, &ContactOptions::default(), &cfg).unwrap();
    let sol = flat.solution.unwrap();
    assert!(sol.residuals_vanish());
    assert_eq!(flat.outputs, vec![ex(&c, "x4"), ex(&c, "x1")]);
    assert_eq!(sol.get("x3").unwrap(), &ex(&c, "D(z1,1)(t)/(1 - D(z2,2)(t))"));
    assert_eq!(sol.get("u2").unwrap(), &ex(&c, "D(z1,1)(t)/(1 - D(z2,2)(t))").diff(Sym::time()));
    assert_eq!(sol.signature, Signature::new(vec![0, 1, 1]));
}

fn pvtol(c: &dflat::expr::ParseContext) -> dflat::geometry::ControlSystem {
    system(
        c,
        &[
            ("x", "x1"),
            ("x1", "-u1*sin(th) + h*u2*cos(th)"),
            ("z", "z1"),
            ("z1", "u1*cos(th) + h*u2*sin(th) - 1"),
            ("th", "th1"),
            ("th1", "u2"),
        ],
        &["u1", "u2"],
    )
}

#[test]
fn pvtol_galilean_cascade() {
    let cfg = Config::default();
    let c = ctx(&["h"]);
    let sys = pvtol(&c);
    let ch = sys.chart();
    let gens = vec![field(&c, ch, &[("x", "t"), ("x1", "1")]), field(&c, ch, &[("x", "1")]), field(&c, ch, &[("z", "1")])];
    let alg = SymmetryAlgebra::new(ch.clone(), gens, &cfg).unwrap();
    let q = quotient_system(&sys, &alg, None, &cfg).unwrap();
    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    let opts = ContactOptions { names: Some(vec!["n".into(), "m".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps: Vec<(String, _)> = group_names(3).into_iter().zip(derive_group_coordinates(&sys, &alg, &cfg).unwrap()).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &eps, &cfg).unwrap();
    let red = reduce(&h, &["m".to_string()]).unwrap();
    let an = analyze_reduction(&red, &[], &cfg).unwrap();
    assert_eq!(an.signature(), Some(&Signature::new(vec![0, 0, 0, 1])));
    assert_eq!(an.k_bar, 4);
    let bound = prolongation_plan(&red, &an, PlanMode::Bound).unwrap();
    assert_eq!(bound.orders, vec![("m".to_string(), 9)]);
    let exact = prolongation_plan(&red, &an, PlanMode::Exact).unwrap();
    assert_eq!(exact.orders, vec![("m".to_string(), 6)]);
    let refined = refine_plan(&h, &bound, &cfg).unwrap();
    assert_eq!(refined.orders, vec![("m".to_string(), 6)]);
    assert_eq!(refined.extra(), vec![("m".to_string(), 4)]);
    let pr = prolong_and_linearize(&h, &refined, &cfg).unwrap();
    assert_eq!(pr.signature(), Some(&Signature::new(vec![0, 0, 0, 1, 0, 1])));
    let comp = dynamic_compensator(&sys, &h, &refined, &cfg).unwrap();
    assert!(comp.chi_identity);
    assert_eq!(comp.beta, vec![(Sym::coord("u1"), ex(&c, "W1")), (Sym::coord("u2"), ex(&c, "y1"))]);
    assert_eq!(comp.y, vec!["y1", "y2", "y3", "y4"]);
}

#[test]
fn tvtol_cascade() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let sys = system(
        &c,
        &[
            ("x1", "x2"),
            ("x2", "-x2*u1*(x1 + x5) + u2"),
            ("x3", "x3^2*x4"),
            ("x4", "-x5*(x1*x2*u1 - u2) + x2*u1 - 1"),
            ("x5", "x6"),
            ("x6", "u2 - x1*x2*u1"),
        ],
        &["u1", "u2"],
    );
    let ch = sys.chart();
    let gens = vec![
        field(&c, ch, &[("x1", "t"), ("x2", "1"), ("u1", "-u1/x2"), ("u2", "t*x2*u1")]),
        field(&c, ch, &[("x1", "1"), ("u2", "x2*u1")]),
        field(&c, ch, &[("x3", "x3^2")]),
    ];
    let alg = SymmetryAlgebra::new(ch.clone(), gens, &cfg).unwrap();
    let inv = [("q1", "x4"), ("q2", "x5"), ("q3", "x6"), ("v1", "x2*u1"), ("v2", "u2 - x1*x2*u1")]
        .iter()
        .map(|(n, e)| (n.to_string(), ex(&c, e)))
        .collect();
    let q = quotient_system(&sys, &alg, Some(inv), &cfg).unwrap();
    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    let opts = ContactOptions { names: Some(vec!["z".into(), "w".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps: Vec<(String, _)> = group_names(3).into_iter().zip(["x2 - 1", "x1 - t*(x2 - 1)", "1 - 1/x3"].map(|s| ex(&c, s))).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &eps, &cfg).unwrap();
    let red = reduce(&h, &["w".to_string()]).unwrap();
    let an = analyze_reduction(&red, &[], &cfg).unwrap();
    assert_eq!(an.signature(), Some(&Signature::new(vec![0, 0, 0, 1])));
    let exact = prolongation_plan(&red, &an, PlanMode::Exact).unwrap();
    assert_eq!(exact.orders, vec![("w".to_string(), 6)]);
    let comp = dynamic_compensator(&sys, &h, &exact, &cfg).unwrap();
    assert_eq!(comp.beta[0].1, ex(&c, "W1"));
    assert_eq!(comp.beta[1].1, ex(&c, "y1 + x1*x2*W1"));
    assert_eq!(comp.y, vec!["y1", "y2", "y3", "y4"]);
    assert_eq!(comp.verdict.goursat.signature, Some(Signature::new(vec![0, 0, 0, 1, 0, 1])));

    // x1 cannot be an order 4 fundamental function: its second derivative
    // already involves W1.
    let z = comp.system.drift_field();
    let x1dd = z.apply(&z.apply(&ex(&c, "x1")));
    assert!(x1dd.depends_on(Sym::coord("W1")));

    let pr = prolong_and_linearize(&h, &exact, &cfg).unwrap();
    let cands = comp.sub_connection_candidates(&h, &pr, &cfg).unwrap();
    let flat = flat_outputs_and_solution(&sys, &comp, &ContactOptions { names: None, candidates: cands }, &cfg).unwrap();
    let phi4 = ex(&c, "x1*y1 + 2*x6*(x2 - 1) + 2*x4*x5*x6 + (x5*y1 - 2*x6^2)*(1 - 1/x3)");
    assert_eq!(flat.outputs, vec![phi4, ex(&c, "x5")]);
    let orders: Vec<usize> = flat.contact.fundamentals.iter().map(|f| f.order).collect();
    assert_eq!(orders, vec![4, 6]);
}

#[test]
fn four_input_cascade() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let chains = vec![("z2".to_string(), 1), ("w1".to_string(), 2), ("w2".to_string(), 2), ("z1".to_string(), 3)];
    let lambda = vec![ex(&c, "w1_2*z1_3"), ex(&c, "w1_2*z2_1"), ex(&c, "w2_2*z2_1")];
    let h = SubConnection::from_normal_form(chains, group_names(3), lambda).unwrap();
    let red = reduce(&h, &["w1".to_string(), "w2".to_string()]).unwrap();
    let fc = ctx(&[]);
    let drift: Vec<_> = red.system.state_syms().into_iter().zip(red.system.drift().iter().cloned()).collect();
    for (g, l) in [("e1", "D(f1,2)(t)*z1_3"), ("e2", "D(f1,2)(t)*z2_1"), ("e3", "D(f2,2)(t)*z2_1")] {
        let got = &drift.iter().find(|(s, _)| &*s.name() == g).unwrap().1;
        assert_eq!(got, &ex(&fc, l));
    }
    let an = analyze_reduction(&red, &[], &cfg).unwrap();
    assert_eq!(an.signature(), Some(&Signature::new(vec![0, 0, 1, 1])));
    let ct = an.contact.as_ref().unwrap();
    let phi13 = ex(&fc, "D(f2,3)(t)/D(f1,3)(t)*(D(f1,2)(t)*z2_0 - e2) + (e3 - D(f2,2)(t)*z2_0)");
    let phi14 = ex(&fc, "e1 - D(f1,4)(t)*z1_0 + D(f1,3)(t)*z1_1 - D(f1,2)(t)*z1_2");
    let ours13 = &ct.fundamentals[0].integral.expr;
    let ratio = ours13.try_div(&phi13).unwrap();
    assert!(ratio.coords().iter().all(|s| s.name().starts_with("D(f")), "{ratio}");
    assert_eq!(ct.fundamentals[1].integral.expr, phi14);

    let exact = prolongation_plan(&red, &an, PlanMode::Exact).unwrap();
    assert_eq!(exact.orders, vec![("w1".to_string(), 8), ("w2".to_string(), 6)]);
    assert_eq!(exact.nu_prime(), Signature::new(vec![0, 0, 0, 0, 0, 1, 0, 1]));
    let pr = prolong_and_linearize(&h, &exact, &cfg).unwrap();
    assert_eq!(pr.signature(), Some(&Signature::new(vec![0, 0, 1, 1, 0, 1, 0, 1])));
}

#[test]
fn pvtol_center_of_oscillation_cascade() {
    let cfg = Config::default();
    let c = ctx(&["h"]);
    let sys = pvtol(&c);
    let chains = vec![("z".to_string(), 2), ("w".to_string(), 2)];
    let lambda = vec![ex(&c, "-(1 + z_1)/w_1"), ex(&c, "(w_1*(z_0 - w_1) + w_0*(1 + z_1))/w_1")];
    let comps = [
        "t",
        "z1 + (x1*cos(th) - h*th1)*csc(th)",
        "(h*th1^2*cos(th) - th1*x1)*csc(th)^2 - 1",
        "-csc(th)^3*th1^2*(th1*h - x1*cos(th)) + u1*th1*csc(th) - csc(th)^3*(cos(th)*th1*h - x1)*(th1^2*cos(th) - u2*sin(th))",
        "x - h*sin(th)",
        "x1 - h*th1*cos(th)",
        "(h*th1^2 - u1)*sin(th)",
        "1 - cot(th)",
        "z - x + h*sin(th) + x*cot(th)",
    ]
    .iter()
    .map(|s| ex(&c, s))
    .collect();
    let h = SubConnection::from_normal_form(chains, group_names(2), lambda).unwrap().with_map(&sys, comps, &cfg).unwrap();
    let red = reduce(&h, &["w".to_string()]).unwrap();
    let an = analyze_reduction(&red, &[], &cfg).unwrap();
    assert_eq!(an.signature(), Some(&Signature::new(vec![0, 0, 0, 1])));
    let exact = prolongation_plan(&red, &an, PlanMode::Exact).unwrap();
    assert_eq!(exact.orders, vec![("w".to_string(), 4)]);
    let pr = prolong_and_linearize(&h, &exact, &cfg).unwrap();
    assert_eq!(pr.signature(), Some(&Signature::new(vec![0, 0, 0, 2])));
    let comp = dynamic_compensator(&sys, &h, &exact, &cfg).unwrap();
    assert!((&comp.beta[0].1 - &ex(&c, "h*th1^2 - csc(th)*y1")).is_zero(), "{}", comp.beta[0].1);
    assert_eq!(comp.beta[1].1, ex(&c, "W1"));
    assert_eq!(comp.verdict.goursat.signature, Some(Signature::new(vec![0, 0, 0, 2])));
    let cands = comp.sub_connection_candidates(&h, &pr, &cfg).unwrap();
    let flat = flat_outputs_and_solution(&sys, &comp, &ContactOptions { names: None, candidates: cands }, &cfg).unwrap();
    let mut outs = flat.outputs.clone();
    let mut want = vec![ex(&c, "x - h*sin(th)"), ex(&c, "z + h*cos(th)")];
    outs.sort_by_key(|e| e.to_string());
    want.sort_by_key(|e| e.to_string());
    assert_eq!(outs, want);
}
