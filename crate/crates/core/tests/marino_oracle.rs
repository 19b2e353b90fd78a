//! Values printed by `oracles/marino_oracle.py`.

mod common;

use common::{ctx, ex, field, system};
use dflat::flags::DerivedFlag;
use dflat::symmetry::{quotient_system, SymmetryAlgebra};
use dflat::Config;

const ORIGINAL_RANKS: [usize; 4] = [3, 5, 7, 8];
const QUOTIENT_RANKS: [usize; 3] = [3, 5, 7];
const QUOTIENT_DRIFT: [&str; 4] = ["-q1^2 - q1*q2*q4 + q2 + q4", "-q1*q2 - q2^2*q4 + v1", "q4", "v2"];

#[test]
fn marino_matches_sympy_oracle() {
    let cfg = Config::default();
    let c = ctx(&[]);
    let sys = system(
        &c,
        &[("x1", "x5*x3 + x2"), ("x2", "x5*x1 + x3"), ("x3", "u1"), ("x4", "x5"), ("x5", "u2")],
        &["u1", "u2"],
    );
    let flag = DerivedFlag::compute(&sys.distribution(), &cfg).unwrap();
    assert_eq!(flag.ranks(), ORIGINAL_RANKS);

    let x = field(&c, sys.chart(), &[("x1", "x1"), ("x2", "x2"), ("x3", "x3"), ("u1", "u1")]);
    let alg = SymmetryAlgebra::new(sys.chart().clone(), vec![x], &cfg).unwrap();
    let inv = [("q1", "x2/x1"), ("q2", "x3/x1"), ("q3", "x4"), ("q4", "x5"), ("v1", "u1/x1"), ("v2", "u2")]
        .iter()
        .map(|(n, e)| (n.to_string(), ex(&c, e)))
        .collect();
    let q = quotient_system(&sys, &alg, Some(inv), &cfg).unwrap();
    for (got, want) in q.system.drift().iter().zip(QUOTIENT_DRIFT) {
        assert!((got - &ex(&c, want)).is_zero(), "{got} != {want}");
    }
    let qflag = DerivedFlag::compute(&q.system.distribution(), &cfg).unwrap();
    assert_eq!(qflag.ranks(), QUOTIENT_RANKS);
}
