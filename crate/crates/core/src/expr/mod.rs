//! Exact expressions over rational functions extended by `sin`, `cos` and
//! `exp` of atomic arguments and by jets of arbitrary functions of time.
//!
//! An [`Expr`] is stored as `N/D` with `D` free of sines, `N` at most linear
//! in every sine symbol (`sin^2 = 1 - cos^2` is applied eagerly),
//! `gcd(N, D) = 1` and `D` primitive with a positive leading term under a
//! name-based graded order. Two expressions are equal as functions exactly
//! when these representations coincide.

mod gcd;
mod parse;
pub mod poly;
mod print;
pub mod probe;
pub mod symbol;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

pub use parse::{parse, parse_with, ParseContext};
pub use poly::{Monomial, Poly, Q};
pub use probe::ProbePoint;
pub use symbol::{Sym, SymKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression has a pole at the probe point")]
    PoleAtPoint,
    #[error("argument of {func} is not an atomic symbol: {arg}")]
    NonAtomicArgument { func: String, arg: String },
    #[error("normal form and numeric probes disagree: {0}")]
    Inconclusive(String),
}

pub type ExprResult<T> = Result<T, ExprError>;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Frac {
    num: Poly,
    den: Poly,
}

/// Canonical element of the expression field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Frac>);

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

fn reduce_trig(p: &Poly) -> (Poly, bool) {
    let needs = p
        .terms()
        .iter()
        .any(|(m, _)| m.factors().iter().any(|&(s, e)| e >= 2 && s.is_sin()));
    if !needs {
        return (p.clone(), false);
    }
    let mut acc = Poly::zero();
    for (m, c) in p.terms() {
        let mut rest = Monomial::one();
        let mut factor = Poly::one();
        for &(s, e) in m.factors() {
            if e >= 2 && s.is_sin() {
                let cs = s.cos_partner().unwrap();
                let one_minus = Poly::one().sub(&Poly::var(cs).pow(2));
                factor = factor.mul(&one_minus.pow(e / 2));
                rest = rest.mul(&Monomial::var(s, e % 2));
            } else {
                rest = rest.mul(&Monomial::var(s, e));
            }
        }
        acc = acc.add(&factor.mul_monomial(&rest, c));
    }
    (acc, true)
}

fn first_sin(p: &Poly) -> Option<Sym> {
    p.vars().into_iter().find(|s| s.is_sin())
}

fn rationalize(mut num: Poly, mut den: Poly) -> (Poly, Poly) {
    while let Some(s) = first_sin(&den) {
        let coeffs = den.coeffs_in(s);
        let d0 = coeffs[0].clone();
        let d1 = coeffs.get(1).cloned().unwrap_or_default();
        let conj = d0.sub(&d1.mul(&Poly::var(s)));
        let c = Poly::var(s.cos_partner().unwrap());
        let one_minus = Poly::one().sub(&c.pow(2));
        num = reduce_trig(&num.mul(&conj)).0;
        den = reduce_trig(&d0.pow(2).sub(&d1.pow(2).mul(&one_minus))).0;
    }
    (num, den)
}

fn leading_named(p: &Poly) -> &Q {
    let mut best = &p.terms()[0];
    for t in &p.terms()[1..] {
        if t.0.cmp_named(&best.0) == std::cmp::Ordering::Greater {
            best = t;
        }
    }
    &best.1
}

impl Expr {
    fn raw(num: Poly, den: Poly) -> Expr {
        Expr(Arc::new(Frac { num, den }))
    }

    /// Normalizes an arbitrary quotient. `den` must be nonzero.
    fn make(num: Poly, den: Poly) -> Expr {
        debug_assert!(!den.is_zero());
        let (num, den) = if first_sin(&den).is_some() { rationalize(num, den) } else { (num, den) };
        if num.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = den.constant_value() {
            return Expr::raw(num.scale(&c.recip()), Poly::one());
        }
        let g = gcd::gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        Self::finish(num, den)
    }

    fn finish(num: Poly, den: Poly) -> Expr {
        if let Some(c) = den.constant_value() {
            return Expr::raw(num.scale(&c.recip()), Poly::one());
        }
        let (k, dp) = den.primitive();
        let mut k = k;
        let mut dp = dp;
        if leading_named(&dp) < &Q::zero() {
            k = -k;
            dp = dp.neg();
        }
        Expr::raw(num.scale(&k.recip()), dp)
    }

    pub fn zero() -> Expr {
        Expr::raw(Poly::zero(), Poly::one())
    }

    pub fn one() -> Expr {
        Expr::raw(Poly::one(), Poly::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(Q::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::rational(Q::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(q: Q) -> Expr {
        Expr::raw(Poly::constant(q), Poly::one())
    }

    pub fn sym(s: Sym) -> Expr {
        Expr::raw(Poly::var(s), Poly::one())
    }

    pub fn coord(name: &str) -> Expr {
        Expr::sym(Sym::coord(name))
    }

    pub fn constant(name: &str) -> Expr {
        Expr::sym(Sym::constant(name))
    }

    pub fn jet(func: &str, order: u32) -> Expr {
        Expr::sym(Sym::jet(func, order))
    }

    pub fn from_poly(p: Poly) -> Expr {
        let p = reduce_trig(&p).0;
        Expr::raw(p, Poly::one())
    }

    /// Builds `num/den` from polynomials.
    pub fn from_polys(num: Poly, den: Poly) -> ExprResult<Expr> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::make(reduce_trig(&num).0, reduce_trig(&den).0))
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &Poly {
        &self.0.den
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.num.is_one() && self.0.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.0.den.is_one() {
            self.0.num.constant_value()
        } else {
            None
        }
    }

    pub fn as_symbol(&self) -> Option<Sym> {
        if !self.0.den.is_one() || !self.0.num.is_monomial() {
            return None;
        }
        let (m, c) = &self.0.num.terms()[0];
        match m.factors() {
            [(s, 1)] if c.is_one() => Some(*s),
            _ => None,
        }
    }

    /// Number of terms in numerator and denominator.
    pub fn size(&self) -> usize {
        self.0.num.len() + self.0.den.len()
    }

    /// Zero test by normal form, cross-checked at five probe points.
    pub fn is_zero_checked(&self, seed: u64) -> ExprResult<bool> {
        if self.is_zero() {
            return Ok(true);
        }
        let mut evaluated = 0;
        let mut index = 0u64;
        while evaluated < 5 && index < 40 {
            let mut pt = ProbePoint::new(seed, 1000 + index);
            index += 1;
            match self.eval(&mut pt) {
                Ok(v) if !v.is_zero() => return Ok(false),
                Ok(_) => evaluated += 1,
                Err(ExprError::PoleAtPoint) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(ExprError::Inconclusive(format!(
            "nonzero normal form vanishes at every probe: {self}"
        )))
    }

    pub fn recip(&self) -> ExprResult<Expr> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::make(self.0.den.clone(), self.0.num.clone()))
    }

    pub fn try_div(&self, other: &Expr) -> ExprResult<Expr> {
        Ok(self * &other.recip()?)
    }

    pub fn pow(&self, n: i32) -> ExprResult<Expr> {
        if n < 0 {
            return self.recip()?.pow(-n);
        }
        let mut r = Expr::one();
        for _ in 0..n {
            r = &r * self;
        }
        Ok(r)
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut it = items.into_iter();
        let Some(first) = it.next() else { return Expr::zero() };
        let mut acc = first.clone();
        for e in it {
            acc = &acc + e;
        }
        acc
    }

    /// Every symbol occurring in the normal form.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut s: BTreeSet<Sym> = self.0.num.vars().into_iter().collect();
        s.extend(self.0.den.vars());
        s
    }

    /// Whether the expression involves `v`, directly or through `sin`, `cos`,
    /// `exp` or (for time) jets.
    pub fn depends_on(&self, v: Sym) -> bool {
        let is_time = v == Sym::time();
        self.symbols().into_iter().any(|s| sym_depends_on(s, v, is_time))
    }

    /// Coordinates the expression depends on, including through
    /// transcendental symbols.
    pub fn coords(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for s in self.symbols() {
            match s.kind() {
                SymKind::Coord => {
                    out.insert(s);
                }
                SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) => {
                    if a.kind() == SymKind::Coord {
                        out.insert(a);
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Highest jet order of `func` present, if any.
    pub fn jet_order(&self, func: &str) -> Option<u32> {
        let mut best: Option<u32> = None;
        for s in self.symbols() {
            let k = match s.kind() {
                SymKind::Jet { func: f, order } if &*f == func => Some(order),
                SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) => match a.kind() {
                    SymKind::Jet { func: f, order } if &*f == func => Some(order),
                    _ => None,
                },
                _ => None,
            };
            if let Some(k) = k {
                best = Some(best.map_or(k, |b: u32| b.max(k)));
            }
        }
        best
    }

    /// Partial derivative in the coordinate `v`; for `v = t` jets advance.
    pub fn diff(&self, v: Sym) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        let dn = total_deriv(&self.0.num, v);
        let dd = total_deriv(&self.0.den, v);
        if dd.is_zero() {
            return Expr::make(dn, self.0.den.clone());
        }
        let num = reduce_trig(&dn.mul(&self.0.den).sub(&self.0.num.mul(&dd))).0;
        Expr::make(num, self.0.den.pow(2))
    }

    /// Simultaneous substitution. Transcendental symbols whose argument is
    /// replaced need the replacement to be a bare coordinate or jet.
    pub fn subst(&self, map: &HashMap<Sym, Expr>) -> ExprResult<Expr> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let syms = self.symbols();
        let mut values: HashMap<Sym, Expr> = HashMap::new();
        for s in syms {
            if let Some(e) = map.get(&s) {
                values.insert(s, e.clone());
                continue;
            }
            let kind = s.kind();
            if let SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) = kind {
                if let Some(e) = map.get(&a) {
                    let b = e.as_symbol().filter(|b| b.is_atomic_argument()).ok_or_else(|| {
                        ExprError::NonAtomicArgument { func: s.name().to_string(), arg: e.to_string() }
                    })?;
                    let r = match kind {
                        SymKind::Sin(_) => Sym::sin_of(b),
                        SymKind::Cos(_) => Sym::cos_of(b),
                        _ => Sym::exp_of(b),
                    };
                    values.insert(s, Expr::sym(r));
                }
            }
        }
        if values.is_empty() {
            return Ok(self.clone());
        }
        let (nn, nd) = subst_poly(&self.0.num, &values);
        let (dn, dd) = subst_poly(&self.0.den, &values);
        let num = reduce_trig(&nn.mul(&dd)).0;
        let den = reduce_trig(&nd.mul(&dn)).0;
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Expr::make(num, den))
    }

    pub fn subst_one(&self, v: Sym, e: &Expr) -> ExprResult<Expr> {
        let mut m = HashMap::new();
        m.insert(v, e.clone());
        self.subst(&m)
    }

    /// Exact value at a point.
    pub fn eval_with<F: FnMut(Sym) -> Q>(&self, mut value: F) -> ExprResult<Q> {
        let d = self.0.den.eval_with(&mut value);
        if d.is_zero() {
            return Err(ExprError::PoleAtPoint);
        }
        Ok(self.0.num.eval_with(&mut value) / d)
    }

    pub fn eval(&self, pt: &mut ProbePoint) -> ExprResult<Q> {
        self.eval_with(|s| pt.value(s))
    }

    /// `sin(k*a)` style constructors for atomic `a`.
    pub fn sin(arg: &Expr) -> ExprResult<Expr> {
        let (k, a) = multiple_of_atom("sin", arg)?;
        let Some(a) = a else { return Ok(Expr::zero()) };
        let (_, s) = multiple_angle(a, k.unsigned_abs());
        let s = Expr::from_poly(s);
        Ok(if k < 0 { -&s } else { s })
    }

    pub fn cos(arg: &Expr) -> ExprResult<Expr> {
        let (k, a) = multiple_of_atom("cos", arg)?;
        let Some(a) = a else { return Ok(Expr::one()) };
        Ok(Expr::from_poly(multiple_angle(a, k.unsigned_abs()).0))
    }

    pub fn exp(arg: &Expr) -> ExprResult<Expr> {
        let (k, a) = multiple_of_atom("exp", arg)?;
        let Some(a) = a else { return Ok(Expr::one()) };
        Expr::sym(Sym::exp_of(a)).pow(k as i32)
    }
}

fn multiple_of_atom(func: &str, arg: &Expr) -> ExprResult<(i64, Option<Sym>)> {
    let err = || ExprError::NonAtomicArgument { func: func.to_string(), arg: arg.to_string() };
    if arg.is_zero() {
        return Ok((0, None));
    }
    if !arg.is_polynomial() || !arg.num().is_monomial() {
        return Err(err());
    }
    let (m, c) = &arg.num().terms()[0];
    let [(s, 1)] = m.factors() else { return Err(err()) };
    if !s.is_atomic_argument() || !c.is_integer() {
        return Err(err());
    }
    let k: i64 = c.to_integer().try_into().map_err(|_| err())?;
    Ok((k, Some(*s)))
}

/// `(cos(k a), sin(k a))` as reduced polynomials in `cos(a)`, `sin(a)`.
fn multiple_angle(a: Sym, k: u64) -> (Poly, Poly) {
    let c = Poly::var(Sym::cos_of(a));
    let s = Poly::var(Sym::sin_of(a));
    let mut ck = Poly::one();
    let mut sk = Poly::zero();
    for _ in 0..k {
        let nc = ck.mul(&c).sub(&sk.mul(&s));
        let ns = sk.mul(&c).add(&ck.mul(&s));
        ck = reduce_trig(&nc).0;
        sk = reduce_trig(&ns).0;
    }
    (ck, sk)
}

fn sym_depends_on(s: Sym, v: Sym, is_time: bool) -> bool {
    if s == v {
        return true;
    }
    match s.kind() {
        SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) => {
            a == v || (is_time && matches!(a.kind(), SymKind::Jet { .. }))
        }
        SymKind::Jet { .. } => is_time,
        _ => false,
    }
}

/// Derivative of an atomic argument in `v`.
fn atom_deriv(a: Sym, v: Sym) -> Poly {
    if a == v {
        return Poly::one();
    }
    match a.kind() {
        SymKind::Jet { func, order } if v == Sym::time() => Poly::var(Sym::jet(&func, order + 1)),
        _ => Poly::zero(),
    }
}

fn total_deriv(p: &Poly, v: Sym) -> Poly {
    let mut acc = Poly::zero();
    for w in p.vars() {
        let dw = match w.kind() {
            SymKind::Coord | SymKind::Const | SymKind::Jet { .. } => atom_deriv(w, v),
            SymKind::Sin(a) => atom_deriv(a, v).mul(&Poly::var(Sym::cos_of(a))),
            SymKind::Cos(a) => atom_deriv(a, v).mul(&Poly::var(Sym::sin_of(a))).neg(),
            SymKind::Exp(a) => atom_deriv(a, v).mul(&Poly::var(w)),
        };
        if dw.is_zero() {
            continue;
        }
        acc = acc.add(&p.deriv(w).mul(&dw));
    }
    reduce_trig(&acc).0
}

/// Substitutes into a polynomial over a common denominator.
fn subst_poly(p: &Poly, values: &HashMap<Sym, Expr>) -> (Poly, Poly) {
    let mut maxdeg: HashMap<Sym, u32> = HashMap::new();
    for (m, _) in p.terms() {
        for &(s, e) in m.factors() {
            if values.contains_key(&s) {
                let d = maxdeg.entry(s).or_insert(0);
                *d = (*d).max(e);
            }
        }
    }
    let mut den = Poly::one();
    for (s, d) in &maxdeg {
        den = den.mul(&values[s].den().pow(*d));
    }
    let mut num_pows: HashMap<(Sym, u32), Poly> = HashMap::new();
    let mut den_pows: HashMap<(Sym, u32), Poly> = HashMap::new();
    let mut acc = Poly::zero();
    for (m, c) in p.terms() {
        let mut rest = Monomial::one();
        let mut t = Poly::constant(c.clone());
        for &(s, e) in m.factors() {
            match values.get(&s) {
                Some(val) => {
                    let np = num_pows
                        .entry((s, e))
                        .or_insert_with(|| reduce_trig(&val.num().pow(e)).0)
                        .clone();
                    t = reduce_trig(&t.mul(&np)).0;
                }
                None => rest = rest.mul(&Monomial::var(s, e)),
            }
        }
        for (&s, &d) in &maxdeg {
            let k = d - m.exp(s);
            if k > 0 {
                let dp = den_pows.entry((s, k)).or_insert_with(|| values[&s].den().pow(k)).clone();
                t = t.mul(&dp);
            }
        }
        acc = acc.add(&t.mul_monomial(&rest, &Q::one()));
    }
    (reduce_trig(&acc).0, den)
}

fn add_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.den() == b.den() {
        let num = a.num().add(b.num());
        if a.den().is_one() {
            return Expr::raw(num, Poly::one());
        }
        return Expr::make(num, a.den().clone());
    }
    if a.den().is_one() {
        return Expr::finish(a.num().mul(b.den()).add(b.num()), b.den().clone());
    }
    if b.den().is_one() {
        return Expr::finish(b.num().mul(a.den()).add(a.num()), a.den().clone());
    }
    let g = gcd::gcd(a.den(), b.den());
    if g.is_one() {
        let num = a.num().mul(b.den()).add(&b.num().mul(a.den()));
        return Expr::finish(num, a.den().mul(b.den()));
    }
    let da = a.den().div_exact(&g).unwrap();
    let db = b.den().div_exact(&g).unwrap();
    let num = a.num().mul(&db).add(&b.num().mul(&da));
    Expr::make(num, a.den().mul(&db))
}

fn mul_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if let Some(c) = a.constant_value() {
        return Expr::raw(b.num().scale(&c), b.den().clone());
    }
    if let Some(c) = b.constant_value() {
        return Expr::raw(a.num().scale(&c), a.den().clone());
    }
    let (an, ad) = (a.num(), a.den());
    let (bn, bd) = (b.num(), b.den());
    let g1 = if bd.is_one() { Poly::one() } else { gcd::gcd(an, bd) };
    let g2 = if ad.is_one() { Poly::one() } else { gcd::gcd(bn, ad) };
    let an = if g1.is_one() { an.clone() } else { an.div_exact(&g1).unwrap() };
    let bd = if g1.is_one() { bd.clone() } else { bd.div_exact(&g1).unwrap() };
    let bn = if g2.is_one() { bn.clone() } else { bn.div_exact(&g2).unwrap() };
    let ad = if g2.is_one() { ad.clone() } else { ad.div_exact(&g2).unwrap() };
    let (num, changed) = reduce_trig(&an.mul(&bn));
    let den = ad.mul(&bd);
    if changed && !den.is_const() {
        Expr::make(num, den)
    } else {
        Expr::finish(num, den)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        add_exprs(self, rhs)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        add_exprs(self, &-rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        mul_exprs(self, rhs)
    }
}

/// Panics on division by zero; see [`Expr::try_div`].
impl Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        self.try_div(rhs).expect("division by zero expression")
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::raw(self.num().neg(), self.den().clone())
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { (&self).$m(&rhs) }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { (&self).$m(rhs) }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { self.$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::render(self))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn subst_scales_terms_without_the_variable() {
        let e = p("ex_u*cos(ex_a) + ex_b - 1");
        let mut m = HashMap::new();
        m.insert(Sym::coord("ex_u"), p("(ex_n + 1 - ex_b)/cos(ex_a)"));
        assert_eq!(e.subst(&m).unwrap(), p("ex_n"));
    }

    #[test]
    fn cancels_common_factors() {
        assert_eq!(p("(ex_x^2 - 1)/(ex_x - 1)"), p("ex_x + 1"));
        assert_eq!(p("ex_x/ex_y * ex_y/ex_x"), Expr::one());
    }

    #[test]
    fn pythagorean_identity() {
        assert_eq!(p("sin(ex_a)^2 + cos(ex_a)^2"), Expr::one());
        assert_eq!(p("sin(ex_a)*sin(ex_a)/(1 - cos(ex_a)^2)"), Expr::one());
        assert_eq!(p("sin(2*ex_a)"), p("2*sin(ex_a)*cos(ex_a)"));
        assert_eq!(p("tan(ex_a)*cos(ex_a)"), p("sin(ex_a)"));
        assert_eq!(p("1/(1 + sin(ex_a)) + 1/(1 - sin(ex_a))"), p("2/cos(ex_a)^2"));
    }

    #[test]
    fn derivatives() {
        let a = Sym::coord("ex_a");
        assert_eq!(p("sin(ex_a)").diff(a), p("cos(ex_a)"));
        assert_eq!(p("cot(ex_a)").diff(a), p("-1/sin(ex_a)^2"));
        let t = Sym::time();
        assert_eq!(p("D(ex_f,1)(t)*sin(D(ex_f,0)(t))").diff(t), p("D(ex_f,2)(t)*sin(D(ex_f,0)(t)) + D(ex_f,1)(t)^2*cos(D(ex_f,0)(t))"));
    }

    #[test]
    fn substitution_renames_angles() {
        let a = Sym::coord("ex_a");
        let e = p("sin(ex_a)*ex_a").subst_one(a, &p("ex_b")).unwrap();
        assert_eq!(e, p("sin(ex_b)*ex_b"));
        assert!(p("sin(ex_a)").subst_one(a, &p("2*ex_b + 1")).is_err());
    }

    #[test]
    fn checked_zero_test() {
        assert!(p("ex_x - ex_x").is_zero_checked(1).unwrap());
        assert!(!p("ex_x - ex_y").is_zero_checked(1).unwrap());
    }
}
