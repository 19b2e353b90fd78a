//! Multivariate polynomial gcd over Q.
//!
//! Cheap modular images detect variables the gcd cannot involve, which
//! collapses most calls to gcds of coefficient lists. The remaining cases
//! fall through to a primitive pseudo-remainder sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::{modp, Monomial, Poly, Q};
use super::symbol::Sym;

/// Primitive integer gcd; the constant 1 when coprime.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive().1;
    }
    if b.is_zero() {
        return a.primitive().1;
    }
    if a.is_const() || b.is_const() {
        return Poly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let gm = ma.gcd(&mb);
    let a1 = if ma.is_one() { a.clone() } else { a.div_monomial(&ma) };
    let b1 = if mb.is_one() { b.clone() } else { b.div_monomial(&mb) };
    let g = gcd_core(&a1, &b1);
    g.mul_monomial(&gm, &Q::from_integer(1.into())).primitive().1
}

/// Gcd of a list of polynomials.
pub fn gcd_list<'a, I: IntoIterator<Item = &'a Poly>>(items: I) -> Poly {
    let mut g = Poly::zero();
    for p in items {
        g = gcd(&g, p);
        if g.is_one() {
            break;
        }
    }
    g
}

fn gcd_core(a: &Poly, b: &Poly) -> Poly {
    if a.is_const() || b.is_const() {
        return Poly::one();
    }
    if a.is_monomial() || b.is_monomial() {
        return Poly::one();
    }
    let va = a.vars();
    let vb = b.vars();
    if let Some(&v) = va.iter().find(|v| !vb.contains(v)) {
        return fold(b, &a.coeffs_in(v));
    }
    if let Some(&v) = vb.iter().find(|v| !va.contains(v)) {
        return fold(a, &b.coeffs_in(v));
    }
    if let Some(q) = b.div_exact(a) {
        let _ = q;
        return a.primitive().1;
    }
    if let Some(q) = a.div_exact(b) {
        let _ = q;
        return b.primitive().1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut best: Option<(Sym, u32)> = None;
    for &v in &va {
        match image_gcd_degree(a, b, v, &va, &mut rng) {
            Some(0) => {
                let mut coeffs = a.coeffs_in(v);
                coeffs.extend(b.coeffs_in(v));
                coeffs.sort_by_key(|p| p.len());
                return gcd_list(coeffs.iter());
            }
            Some(d) => {
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((v, d));
                }
            }
            None => {}
        }
    }
    let v = best.map(|(v, _)| v).unwrap_or(va[0]);
    prs_gcd(a, b, v)
}

fn fold(start: &Poly, coeffs: &[Poly]) -> Poly {
    let mut g = start.clone();
    let mut sorted: Vec<&Poly> = coeffs.iter().filter(|c| !c.is_zero()).collect();
    sorted.sort_by_key(|p| p.len());
    for c in sorted {
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

fn image_gcd_degree(a: &Poly, b: &Poly, v: Sym, vars: &[Sym], rng: &mut ChaCha8Rng) -> Option<u32> {
    let ca = a.coeffs_in(v);
    let cb = b.coeffs_in(v);
    for _ in 0..3 {
        let pts: Vec<(Sym, u64)> = vars
            .iter()
            .filter(|&&s| s != v)
            .map(|&s| (s, rng.gen_range(1..modp::P)))
            .collect();
        let val = |s: Sym| pts.iter().find(|(x, _)| *x == s).map(|p| p.1).unwrap_or(0);
        let ia: Option<Vec<u64>> = ca.iter().map(|c| c.eval_mod(val)).collect();
        let ib: Option<Vec<u64>> = cb.iter().map(|c| c.eval_mod(val)).collect();
        let (Some(ia), Some(ib)) = (ia, ib) else { continue };
        if ia.last() == Some(&0) || ib.last() == Some(&0) {
            continue;
        }
        return Some(modp::gcd_degree(&ia, &ib) as u32);
    }
    None
}

fn content_in(p: &Poly, v: Sym) -> Poly {
    let coeffs = p.coeffs_in(v);
    fold(&Poly::zero(), &coeffs)
}

fn primitive_in(p: &Poly, v: Sym) -> (Poly, Poly) {
    let c = content_in(p, v);
    if c.is_const() {
        return (Poly::one(), p.primitive().1);
    }
    let q = p.div_exact(&c).expect("content divides");
    (c, q.primitive().1)
}

fn prem(f: &Poly, g: &Poly, v: Sym) -> Poly {
    let dg = g.degree_in(v);
    let lc = g.leading_coeff_in(v);
    let mut r = f.clone();
    while !r.is_zero() && r.degree_in(v) >= dg {
        let dr = r.degree_in(v);
        let lr = r.leading_coeff_in(v);
        let shift = lr.mul_monomial(&Monomial::var(v, dr - dg), &Q::from_integer(1.into()));
        r = r.mul(&lc).sub(&shift.mul(g));
        r = r.primitive().1;
    }
    r
}

fn prs_gcd(a: &Poly, b: &Poly, v: Sym) -> Poly {
    let (ca, pa) = primitive_in(a, v);
    let (cb, pb) = primitive_in(b, v);
    let c = gcd(&ca, &cb);
    let (mut f, mut g) = if pa.degree_in(v) >= pb.degree_in(v) { (pa, pb) } else { (pb, pa) };
    let g_final = loop {
        if g.degree_in(v) == 0 {
            break Poly::one();
        }
        let r = prem(&f, &g, v);
        if r.is_zero() {
            break g;
        }
        if r.degree_in(v) == 0 {
            break Poly::one();
        }
        f = g;
        g = primitive_in(&r, v).1;
    };
    c.mul(&g_final).primitive().1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Poly {
        Poly::var(Sym::coord(n))
    }

    #[test]
    fn common_factor_recovered() {
        let (x, y, z) = (v("gcd_x"), v("gcd_y"), v("gcd_z"));
        let g = x.mul(&y).add(&z).add(&Poly::one());
        let a = g.mul(&x.sub(&y.pow(2)));
        let b = g.mul(&z.mul(&x).add(&y));
        assert_eq!(gcd(&a, &b), g.primitive().1);
        assert!(gcd(&x.add(&y), &x.sub(&y)).is_one());
    }

    #[test]
    fn squares_and_monomials() {
        let (x, y) = (v("gcd_x"), v("gcd_y"));
        let g = x.sub(&y).pow(2);
        let a = g.mul(&x.pow(3));
        let b = g.mul(&x).mul(&y.add(&Poly::one()));
        assert_eq!(gcd(&a, &b), g.mul(&x).primitive().1);
    }
}
