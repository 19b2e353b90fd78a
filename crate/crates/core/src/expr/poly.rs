//! Sparse multivariate polynomials with rational coefficients.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::symbol::Sym;

pub type Q = BigRational;

/// Power product, sorted by symbol id with positive exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(SmallVec<[(Sym, u32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(v: Sym, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        let mut s = SmallVec::new();
        s.push((v, e));
        Monomial(s)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Sym, u32)] {
        &self.0
    }

    pub fn exp(&self, v: Sym) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| *s == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other`, assuming divisibility.
    pub fn div(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::new();
        for &(v, e) in &self.0 {
            let d = e - other.exp(v);
            if d > 0 {
                out.push((v, d));
            }
        }
        Monomial(out)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|&(v, e)| other.exp(v) >= e)
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::new();
        for &(v, e) in &self.0 {
            let m = e.min(other.exp(v));
            if m > 0 {
                out.push((v, m));
            }
        }
        Monomial(out)
    }

    /// Splits off the power of `v`.
    pub fn split(&self, v: Sym) -> (Monomial, u32) {
        let mut e = 0;
        let mut out = SmallVec::new();
        for &(s, k) in &self.0 {
            if s == v {
                e = k;
            } else {
                out.push((s, k));
            }
        }
        (Monomial(out), e)
    }

    /// Name-based comparison: total degree, then exponents by name.
    pub fn cmp_named(&self, other: &Monomial) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let mut a: Vec<(Sym, u32)> = self.0.to_vec();
        let mut b: Vec<(Sym, u32)> = other.0.to_vec();
        a.sort_by(|x, y| x.0.cmp_by_name(y.0));
        b.sort_by(|x, y| x.0.cmp_by_name(y.0));
        for (x, y) in a.iter().zip(b.iter()) {
            match x.0.cmp_by_name(y.0) {
                Ordering::Equal => match x.1.cmp(&y.1) {
                    Ordering::Equal => {}
                    o => return o,
                },
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        a.len().cmp(&b.len())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(s, e)| if *e == 1 { format!("{s}") } else { format!("{s}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Polynomial as a sorted list of nonzero terms.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Monomial, Q)>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("{c}*{m:?}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly { terms: vec![(Monomial::one(), c)] }
    }

    pub fn var(v: Sym) -> Self {
        Poly { terms: vec![(Monomial::var(v, 1), Q::one())] }
    }

    pub fn monomial(m: Monomial, c: Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly { terms: vec![(m, c)] }
    }

    /// Builds from arbitrary terms, merging duplicates.
    pub fn from_terms(mut terms: Vec<(Monomial, Q)>) -> Self {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Monomial, Q)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Poly { terms: out }
    }

    pub fn terms(&self) -> &[(Monomial, Q)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.terms.is_empty() {
            Some(Q::zero())
        } else if self.is_const() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn vars(&self) -> Vec<Sym> {
        let mut v: Vec<Sym> = self
            .terms
            .iter()
            .flat_map(|(m, _)| m.factors().iter().map(|(s, _)| *s))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn contains(&self, v: Sym) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(v) > 0)
    }

    pub fn degree_in(&self, v: Sym) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_monomial(&self, mono: &Monomial, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.mul(mono), c * k)).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge(other, true)
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        Poly { terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        let mut acc: HashMap<Monomial, Q> = HashMap::with_capacity(self.len() * other.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                match acc.get_mut(&m) {
                    Some(x) => *x += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        Poly::from_terms(acc.into_iter().collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Formal partial derivative in the indeterminate `v`.
    pub fn deriv(&self, v: Sym) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let (rest, e) = m.split(v);
            if e > 0 {
                out.push((rest.mul(&Monomial::var(v, e - 1)), c * Q::from_integer(BigInt::from(e))));
            }
        }
        Poly::from_terms(out)
    }

    /// Coefficients in `v`, indexed by degree.
    pub fn coeffs_in(&self, v: Sym) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Monomial, Q)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.split(v);
            buckets[e as usize].push((rest, c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    pub fn from_coeffs(v: Sym, coeffs: &[Poly]) -> Poly {
        let mut terms = Vec::new();
        for (e, p) in coeffs.iter().enumerate() {
            let vm = Monomial::var(v, e as u32);
            for (m, c) in &p.terms {
                terms.push((m.mul(&vm), c.clone()));
            }
        }
        Poly::from_terms(terms)
    }

    pub fn leading_coeff_in(&self, v: Sym) -> Poly {
        let d = self.degree_in(v);
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let (rest, e) = m.split(v);
                (e == d).then(|| (rest, c.clone()))
            })
            .collect();
        Poly::from_terms(terms)
    }

    /// Substitutes `v := q`.
    pub fn subst(&self, v: Sym, q: &Poly) -> Poly {
        if !self.contains(v) {
            return self.clone();
        }
        let coeffs = self.coeffs_in(v);
        let mut acc = Poly::zero();
        for c in coeffs.iter().rev() {
            acc = acc.mul(q).add(c);
        }
        acc
    }

    pub fn eval_with<F: FnMut(Sym) -> Q>(&self, mut value: F) -> Q {
        let mut cache: HashMap<Sym, Q> = HashMap::new();
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(s, e) in m.factors() {
                let x = cache.entry(s).or_insert_with(|| value(s));
                t *= num_traits::pow(x.clone(), e as usize);
            }
            total += t;
        }
        total
    }

    /// Evaluates modulo the prime used for probabilistic tests.
    pub fn eval_mod<F: FnMut(Sym) -> u64>(&self, mut value: F) -> Option<u64> {
        let mut cache: HashMap<Sym, u64> = HashMap::new();
        let mut total = 0u64;
        for (m, c) in &self.terms {
            let mut t = modp::from_q(c)?;
            for &(s, e) in m.factors() {
                let x = *cache.entry(s).or_insert_with(|| value(s));
                t = modp::mul(t, modp::pow(x, e as u64));
            }
            total = modp::add(total, t);
        }
        Some(total)
    }

    /// Greatest common monomial divisor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for (m, _) in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly { terms: self.terms.iter().map(|(x, c)| (x.div(m), c.clone())).collect() }
            .resorted()
    }

    fn resorted(mut self) -> Poly {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        self
    }

    /// Writes `self = k * p` with `p` having coprime integer coefficients and
    /// a positive last term.
    pub fn primitive(&self) -> (Q, Poly) {
        if self.is_zero() {
            return (Q::one(), Poly::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut k = Q::new(num_gcd, den_lcm);
        if self.terms.last().unwrap().1.is_negative() {
            k = -k;
        }
        (k.clone(), self.scale(&k.recip()))
    }

    /// Exact division, `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        if d.is_monomial() {
            let (dm, dc) = &d.terms[0];
            if !self.terms.iter().all(|(m, _)| dm.divides(m)) {
                return None;
            }
            return Some(self.div_monomial(dm).scale(&dc.recip()));
        }
        let dv = d.vars();
        let sv = self.vars();
        if dv.iter().any(|v| !sv.contains(v)) {
            return None;
        }
        let v = dv[0];
        let dd = d.degree_in(v);
        if self.degree_in(v) < dd {
            return None;
        }
        let lcd = d.leading_coeff_in(v);
        let mut r = self.clone();
        let mut q = Poly::zero();
        while !r.is_zero() {
            let rd = r.degree_in(v);
            if rd < dd {
                return None;
            }
            let lcr = r.leading_coeff_in(v);
            let c = lcr.div_exact(&lcd)?;
            let t = c.mul_monomial(&Monomial::var(v, rd - dd), &Q::one());
            r = r.sub(&t.mul(d));
            q = q.add(&t);
            if !r.is_zero() && r.degree_in(v) >= rd {
                return None;
            }
        }
        Some(q)
    }
}

/// Arithmetic modulo the Mersenne prime 2^61 - 1.
pub mod modp {
    use super::Q;
    use num_bigint::BigInt;
    use num_traits::{ToPrimitive, Zero};

    pub const P: u64 = (1u64 << 61) - 1;

    pub fn add(a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= P {
            s - P
        } else {
            s
        }
    }

    pub fn sub(a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + P - b
        }
    }

    pub fn mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    pub fn pow(mut a: u64, mut e: u64) -> u64 {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(a: u64) -> Option<u64> {
        (a != 0).then(|| pow(a, P - 2))
    }

    pub fn from_int(n: &BigInt) -> u64 {
        let p = BigInt::from(P);
        let mut r = n % &p;
        if r < BigInt::zero() {
            r += &p;
        }
        r.to_u64().unwrap()
    }

    pub fn from_q(q: &Q) -> Option<u64> {
        let d = from_int(q.denom());
        Some(mul(from_int(q.numer()), inv(d)?))
    }

    /// Degree of the gcd of two dense univariate polynomials.
    pub fn gcd_degree(a: &[u64], b: &[u64]) -> usize {
        let mut f = trim(a.to_vec());
        let mut g = trim(b.to_vec());
        if f.len() < g.len() {
            std::mem::swap(&mut f, &mut g);
        }
        while !g.is_empty() {
            let r = rem(&f, &g);
            f = g;
            g = r;
        }
        f.len().saturating_sub(1)
    }

    fn trim(mut v: Vec<u64>) -> Vec<u64> {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    fn rem(f: &[u64], g: &[u64]) -> Vec<u64> {
        let mut r = f.to_vec();
        let lg = inv(*g.last().unwrap()).unwrap();
        while r.len() >= g.len() {
            let c = mul(*r.last().unwrap(), lg);
            let shift = r.len() - g.len();
            for (i, gi) in g.iter().enumerate() {
                r[shift + i] = sub(r[shift + i], mul(c, *gi));
            }
            r.pop();
            r = trim(r);
        }
        r
    }
}
