mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::{ctx, ex};
use dflat::contact::{contact_coordinates, ContactOptions};
use dflat::expr::{Expr, ProbePoint, Sym};
use dflat::flags::{DerivedFlag, Signature};
use dflat::geometry::{generic_rank, Chart, Distribution, Role, VectorField};
use dflat::goursat::{brunovsky_type, goursat_test, relative_goursat_test, sfl_test, BrunovskyForm};
use dflat::linalg::{nullspace, Probes};
use dflat::Config;

const VARS: [&str; 3] = ["x1", "x2", "x3"];

fn chart() -> Arc<Chart> {
    let mut coords = vec![(Sym::time(), Role::Time)];
    coords.extend(VARS.iter().map(|x| (Sym::coord(x), Role::State)));
    Chart::new(coords).unwrap()
}

/// Polynomial of total degree at most 2 in `t, x1, x2, x3`.
fn poly() -> impl Strategy<Value = String> {
    let mono = (-4i32..=4, prop::collection::vec(0usize..4, 0..=2)).prop_map(|(c, vs)| {
        let names = ["t", VARS[0], VARS[1], VARS[2]];
        let mut s = format!("({c})");
        for v in vs {
            s.push('*');
            s.push_str(names[v]);
        }
        s
    });
    prop::collection::vec(mono, 1..=3).prop_map(|ts| ts.join(" + "))
}

/// Rational-trigonometric expression with a denominator that never vanishes.
fn expr() -> impl Strategy<Value = String> {
    (poly(), poly(), 0usize..3, 0usize..3).prop_map(|(a, b, i, j)| {
        format!("({a}) + ({b})*sin({}) / (1 + {}^2)", VARS[i], VARS[j])
    })
}

fn field_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(poly(), 4)
}

fn field(comps: &[String]) -> VectorField {
    let c = ctx(&[]);
    VectorField::new(chart(), comps.iter().map(|s| ex(&c, s)).collect()).unwrap()
}

fn points(n: u64) -> Vec<ProbePoint> {
    (0..n).map(|i| ProbePoint::new(Config::default().seed, i)).collect()
}

fn signature() -> impl Strategy<Value = Signature> {
    prop::collection::vec(0usize..=3, 0..4).prop_map(|mut rho| {
        rho.push(1);
        Signature::new(rho)
    })
}

fn double_annihilator_rank_matches(fs: &[Vec<String>]) -> bool {
    let cfg = Config::default();
    let d = Distribution::new(chart(), fs.iter().map(|f| field(f)).collect()).unwrap();
    let forms = d.annihilator(&cfg).unwrap();
    let n = chart().dim();
    let back: Vec<VectorField> = if forms.is_empty() {
        (0..n).map(|i| VectorField::coordinate(&chart(), i)).collect()
    } else {
        let rows: Vec<Vec<Expr>> = forms.iter().map(|w| w.comps().to_vec()).collect();
        nullspace(&rows, n, &Probes::new(cfg.seed), cfg.size_budget)
            .unwrap()
            .into_iter()
            .map(|v| VectorField::new(chart(), v).unwrap())
            .collect()
    };
    generic_rank(&back, &cfg).unwrap() == d.rank(&cfg).unwrap()
}

#[test]
fn double_annihilator_of_three_dense_fields() {
    let p = [
        "3*x1*x2 - 2*t + 1",
        "x3^2 - 4*x1 + 2*t*x2",
        "-x2*x3 + 3*t^2 - 1",
        "2*x1^2 + x3 - 3*x2*t",
        "x1*x3 + 4*x2^2 - 2",
        "-3*t*x3 + x1 + x2^2",
    ];
    let fs: Vec<Vec<String>> =
        (0..3).map(|i| (0..4).map(|j| p[(i * 4 + j * 3 + i * j) % 6].to_string()).collect()).collect();
    assert!(double_annihilator_rank_matches(&fs));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn diff_is_linear_and_leibniz(a in expr(), b in expr(), k in -5i64..5, v in 0usize..3) {
        let c = ctx(&[]);
        let (a, b) = (ex(&c, &a), ex(&c, &b));
        let x = Sym::coord(VARS[v]);
        let k = Expr::int(k);
        let lin = (&k * &a + &b).diff(x) - (&k * a.diff(x) + b.diff(x));
        prop_assert!(lin.is_zero());
        let leibniz = (&a * &b).diff(x) - (a.diff(x) * &b + &a * b.diff(x));
        prop_assert!(leibniz.is_zero());
    }

    #[test]
    fn zero_expressions_evaluate_to_zero(a in expr(), b in expr()) {
        let c = ctx(&[]);
        let (a, b) = (ex(&c, &a), ex(&c, &b));
        let z = (&a + &b) * (&a - &b) - (&a * &a - &b * &b);
        prop_assert!(z.is_zero());
        for mut p in points(5) {
            prop_assert!(z.eval(&mut p).unwrap() == Default::default());
        }
    }

    #[test]
    fn normal_form_preserves_values(a in expr(), b in expr(), d in expr()) {
        let c = ctx(&[]);
        let (a, b, d) = (ex(&c, &a), ex(&c, &b), ex(&c, &d));
        let e = &a * &b - &d;
        let printed = ex(&c, &e.to_string());
        for mut p in points(3) {
            let (va, vb, vd) = (a.eval(&mut p).unwrap(), b.eval(&mut p).unwrap(), d.eval(&mut p).unwrap());
            let ve = e.eval(&mut p).unwrap();
            prop_assert_eq!(&ve, &(va * vb - vd));
            prop_assert_eq!(printed.eval(&mut p).unwrap(), ve);
        }
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi(a in field_strategy(), b in field_strategy(), d in field_strategy()) {
        let (a, b, d) = (field(&a), field(&b), field(&d));
        prop_assert!(a.bracket(&b).unwrap().add(&b.bracket(&a).unwrap()).is_zero());
        let jacobi = a.bracket(&b.bracket(&d).unwrap()).unwrap()
            .add(&b.bracket(&d.bracket(&a).unwrap()).unwrap())
            .add(&d.bracket(&a.bracket(&b).unwrap()).unwrap());
        prop_assert!(jacobi.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn double_annihilator_keeps_rank(fs in prop::collection::vec(field_strategy(), 1..=2)) {
        prop_assert!(double_annihilator_rank_matches(&fs));
    }

    #[test]
    fn rank_ignores_triangular_recombination(
        fs in prop::collection::vec(field_strategy(), 1..=4),
        coeffs in prop::collection::vec(poly(), 6),
    ) {
        let cfg = Config::default();
        let c = ctx(&[]);
        let gens: Vec<VectorField> = fs.iter().map(|f| field(f)).collect();
        let mut mixed = gens.clone();
        let mut k = 0;
        for i in 0..gens.len() {
            for j in 0..i {
                mixed[i] = mixed[i].add(&gens[j].scale(&ex(&c, &coeffs[k % coeffs.len()])));
                k += 1;
            }
        }
        prop_assert_eq!(generic_rank(&mixed, &cfg).unwrap(), generic_rank(&gens, &cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn brunovsky_forms_are_goursat_and_sfl(kappa in signature()) {
        let cfg = Config::default();
        let b = BrunovskyForm::new(&kappa, "z").unwrap();
        let flag = DerivedFlag::compute(&b.distribution(), &cfg).unwrap();
        prop_assert_eq!(flag.refined_type().unwrap(), brunovsky_type(&kappa));
        prop_assert_eq!(flag.decel_signature(), Some(kappa.clone()));
        let g = goursat_test(&flag, &cfg).unwrap();
        prop_assert!(g.is_goursat);
        prop_assert_eq!(g.signature, Some(kappa.clone()));
        let (sfl, _) = sfl_test(&b.system, &cfg).unwrap();
        prop_assert!(sfl.is_sfl);
    }

    #[test]
    fn cauchy_bundles_are_involutive(kappa in signature()) {
        let cfg = Config::default();
        let b = BrunovskyForm::new(&kappa, "z").unwrap();
        let flag = DerivedFlag::compute(&b.distribution(), &cfg).unwrap();
        for j in 0..=flag.length() {
            prop_assert!(flag.cauchy(j).unwrap().is_integrable(&cfg).unwrap());
        }
    }

    #[test]
    fn relative_test_with_trivial_gamma(kappa in signature()) {
        let cfg = Config::default();
        let b = BrunovskyForm::new(&kappa, "z").unwrap();
        let gamma = Distribution::new(b.chart.clone(), Vec::new()).unwrap();
        let (rel, _) = relative_goursat_test(&b.system, &gamma, &cfg).unwrap();
        let (sfl, _) = sfl_test(&b.system, &cfg).unwrap();
        prop_assert_eq!(rel.is_static_feedback_relative, sfl.is_sfl);
        prop_assert_eq!(rel.signature, sfl.goursat.signature);
    }

    #[test]
    fn contact_coordinates_of_brunovsky_relabel_jets(kappa in signature()) {
        let cfg = Config::default();
        let b = BrunovskyForm::new(&kappa, "z").unwrap();
        let (verdict, flag) = sfl_test(&b.system, &cfg).unwrap();
        let ct = contact_coordinates(&b.system, &flag, &verdict, &ContactOptions::default(), &cfg).unwrap();
        prop_assert_eq!(&ct.signature, &kappa);
        let mut images: Vec<Sym> = ct.comps.iter().map(|e| e.as_symbol().expect("coordinate image")).collect();
        images.sort();
        images.dedup();
        prop_assert_eq!(images.len(), b.chart.dim());
    }
}
