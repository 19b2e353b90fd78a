mod common;

use common::{ctx, ex, field, system};
use dflat::contact::{contact_coordinates, ContactOptions};
use dflat::flags::Signature;
use dflat::goursat::{relative_goursat_test, sfl_test};
use dflat::symmetry::{
    check_control_admissible, derive_group_coordinates, group_names, quotient_system, trivialize, SymmetryAlgebra,
};
use dflat::{Config, DflatError};

#[test]
fn charlet_quotient_and_sub_connection() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let sys = system(&c, &[("x1", "x2"), ("x2", "u1"), ("x3", "u2"), ("x4", "x3*(1-u1)")], &["u1", "u2"]);
    let alg = SymmetryAlgebra::new(sys.chart().clone(), vec![field(&c, sys.chart(), &[("x4", "1")])], &cfg).unwrap();
    assert!(alg.is_abelian());
    let adm = check_control_admissible(&sys, &alg, &cfg).unwrap();
    assert!(adm.is_admissible(), "{:?}", adm.failures);

    let (rel, _) = relative_goursat_test(&sys, &alg.distribution(), &cfg).unwrap();
    assert!(rel.is_static_feedback_relative, "{:?}", rel.failures);
    assert_eq!(rel.signature, Some(Signature::new(vec![1, 1])));

    let q = quotient_system(&sys, &alg, None, &cfg).unwrap();
    let inv: Vec<String> = q.invariants.iter().map(|(n, e)| format!("{n}={e}")).collect();
    assert_eq!(inv, ["q1=x1", "q2=x2", "q3=x3", "v1=u1", "v2=u2"]);
    assert_eq!(q.system.drift(), &[ex(&c, "q2"), ex(&c, "v1"), ex(&c, "v2")]);

    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    assert!(v.is_sfl);
    let opts = ContactOptions { names: Some(vec!["z".into(), "w".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps = derive_group_coordinates(&sys, &alg, &cfg).unwrap();
    assert_eq!(eps, vec![ex(&c, "x4")]);
    let named: Vec<(String, _)> = group_names(1).into_iter().zip(eps).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &named, &cfg).unwrap();
    assert_eq!(h.lambda, vec![ex(&c, "z_0*(1 - w_2)")]);
}

#[test]
fn marino_admissible_quotient() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let sys = system(
        &c,
        &[("x1", "x5*x3 + x2"), ("x2", "x5*x1 + x3"), ("x3", "u1"), ("x4", "x5"), ("x5", "u2")],
        &["u1", "u2"],
    );
    let x = field(&c, sys.chart(), &[("x1", "x1"), ("x2", "x2"), ("x3", "x3"), ("u1", "u1")]);
    let alg = SymmetryAlgebra::new(sys.chart().clone(), vec![x], &cfg).unwrap();
    let adm = check_control_admissible(&sys, &alg, &cfg).unwrap();
    assert!(adm.is_admissible(), "{:?}", adm.failures);
    let inv = [("q1", "x2/x1"), ("q2", "x3/x1"), ("q3", "x4"), ("q4", "x5"), ("v1", "u1/x1"), ("v2", "u2")]
        .iter()
        .map(|(n, e)| (n.to_string(), ex(&c, e)))
        .collect();
    let q = quotient_system(&sys, &alg, Some(inv), &cfg).unwrap();
    let want = ["-(q1*q2*q4 + q1^2 - q2 - q4)", "-(q2^2*q4 + q1*q2 - v1)", "q4", "v2"];
    let want: Vec<_> = want.iter().map(|s| ex(&c, s)).collect();
    assert_eq!(q.system.drift(), &want[..]);
}

#[test]
fn pvtol_galilean() {
    let cfg = Config::default();
    let c = ctx(&["h"]);
    let sys = system(
        &c,
        &[
            ("x", "x1"),
            ("x1", "-u1*sin(th) + h*u2*cos(th)"),
            ("z", "z1"),
            ("z1", "u1*cos(th) + h*u2*sin(th) - 1"),
            ("th", "th1"),
            ("th1", "u2"),
        ],
        &["u1", "u2"],
    );
    let ch = sys.chart();
    let gens = vec![field(&c, ch, &[("x", "t"), ("x1", "1")]), field(&c, ch, &[("x", "1")]), field(&c, ch, &[("z", "1")])];
    let mut wider = gens.clone();
    wider.push(field(&c, ch, &[("z", "t"), ("z1", "1")]));
    let big = SymmetryAlgebra::new(ch.clone(), wider, &cfg).unwrap();
    let adm = check_control_admissible(&sys, &big, &cfg).unwrap();
    assert!(!adm.strongly_transverse);
    assert!(adm.symmetry);

    let alg = SymmetryAlgebra::new(ch.clone(), gens, &cfg).unwrap();
    assert!(check_control_admissible(&sys, &alg, &cfg).unwrap().is_admissible());
    let q = quotient_system(&sys, &alg, None, &cfg).unwrap();
    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    assert!(v.is_sfl, "{:?}", v.failures);
    let opts = ContactOptions { names: Some(vec!["n".into(), "m".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps = derive_group_coordinates(&sys, &alg, &cfg).unwrap();
    assert_eq!(eps, vec![ex(&c, "x1"), ex(&c, "x - t*x1"), ex(&c, "z")]);
    let named: Vec<(String, _)> = group_names(3).into_iter().zip(eps).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &named, &cfg).unwrap();
    let block = ex(&c, "((n_1 + 1)*sin(m_0) - h*m_2)/cos(m_0)");
    assert_eq!(h.lambda[0], -&block);
    assert_eq!(h.lambda[1], &ex(&c, "t") * &block);
    assert_eq!(h.lambda[2], ex(&c, "n_0"));
}

#[test]
fn tvtol_quotient_and_sub_connection() {
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
    assert!(alg.is_abelian());
    assert!(check_control_admissible(&sys, &alg, &cfg).unwrap().is_admissible());
    assert!(matches!(derive_group_coordinates(&sys, &alg, &cfg), Err(DflatError::Invalid(_))));
    let inv = [("q1", "x4"), ("q2", "x5"), ("q3", "x6"), ("v1", "x2*u1"), ("v2", "u2 - x1*x2*u1")]
        .iter()
        .map(|(n, e)| (n.to_string(), ex(&c, e)))
        .collect();
    let q = quotient_system(&sys, &alg, Some(inv), &cfg).unwrap();
    assert_eq!(q.system.drift(), &[ex(&c, "v2*q2 + v1 - 1"), ex(&c, "q3"), ex(&c, "v2")]);
    let (v, flag) = sfl_test(&q.system, &cfg).unwrap();
    assert_eq!(v.goursat.signature, Some(Signature::new(vec![1, 1])));
    let opts = ContactOptions { names: Some(vec!["z".into(), "w".into()]), candidates: vec![] };
    let ct = contact_coordinates(&q.system, &flag, &v, &opts, &cfg).unwrap();
    let eps: Vec<(String, _)> = group_names(3).into_iter().zip(["x2 - 1", "x1 - t*(x2 - 1)", "1 - 1/x3"].map(|s| ex(&c, s))).collect();
    let h = trivialize(&sys, &alg, &q, &ct, &eps, &cfg).unwrap();
    let lam = ex(&c, "w_2*(w_0^2 + 1) - w_0*(z_1 + 1)");
    assert_eq!(h.lambda, vec![lam.clone(), &ex(&c, "1") - &(&ex(&c, "t") * &lam), ex(&c, "z_0")]);
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
fn appendix_trivialization_matches_sub_connection() {
    use dflat::symmetry::SubConnection;
    let cfg = Config::default();
    let c = ctx(&["h"]);
    let sys = pvtol(&c);
    let chains = vec![("z".to_string(), 2), ("w".to_string(), 2)];
    let lambda = vec![ex(&c, "-(1 + z_1)/w_1"), ex(&c, "(w_1*(z_0 - w_1) + w_0*(1 + z_1))/w_1")];
    let h = SubConnection::from_normal_form(chains, group_names(2), lambda).unwrap();
    let z0 = "z1 + (x1*cos(th) - h*th1)*csc(th)";
    let z1 = "(h*th1^2*cos(th) - th1*x1)*csc(th)^2 - 1";
    let z2 = "-csc(th)^3*th1^2*(th1*h - x1*cos(th)) + u1*th1*csc(th) - csc(th)^3*(cos(th)*th1*h - x1)*(th1^2*cos(th) - u2*sin(th))";
    let comps: Vec<_> = [
        "t",
        z0,
        z1,
        z2,
        "x - h*sin(th)",
        "x1 - h*th1*cos(th)",
        "(h*th1^2 - u1)*sin(th)",
        "1 - cot(th)",
        "z - x + h*sin(th) + x*cot(th)",
    ]
    .iter()
    .map(|s| ex(&c, s))
    .collect();
    let zf = sys.drift_field();
    assert_eq!(zf.apply(&comps[2]), comps[3]);
    h.verify_map(&sys, &comps, &cfg).unwrap();
    let mut printed = comps.clone();
    printed[1] = ex(&c, "(x1*cos(th) - h*th1)*csc(th)");
    assert!(matches!(h.verify_map(&sys, &printed, &cfg), Err(DflatError::NormalFormViolation(_))));
}
