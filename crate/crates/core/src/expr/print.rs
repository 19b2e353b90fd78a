//! Deterministic infix rendering; the output parses back to the same value.

use num_traits::{One, Signed};

use super::poly::{Monomial, Poly, Q};
use super::Expr;

fn monomial(m: &Monomial) -> String {
    let mut f: Vec<_> = m.factors().to_vec();
    f.sort_by(|a, b| a.0.cmp_by_name(b.0));
    f.iter()
        .map(|(s, e)| if *e == 1 { s.name().to_string() } else { format!("{}^{e}", s.name()) })
        .collect::<Vec<_>>()
        .join("*")
}

fn term(m: &Monomial, c: &Q) -> String {
    let a = c.abs();
    if m.is_one() {
        return a.to_string();
    }
    if a.is_one() {
        monomial(m)
    } else {
        format!("{a}*{}", monomial(m))
    }
}

pub(crate) fn poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<_> = p.terms().iter().collect();
    terms.sort_by(|a, b| b.0.cmp_named(&a.0));
    let mut out = String::new();
    for (i, (m, c)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&term(m, c));
    }
    out
}

fn is_bare_factor(p: &Poly) -> bool {
    p.is_monomial() && p.terms()[0].1.is_one() && p.terms()[0].0.factors().len() == 1
}

pub(crate) fn render(e: &Expr) -> String {
    let n = poly(e.num());
    if e.den().is_one() {
        return n;
    }
    let n = if e.num().len() > 1 { format!("({n})") } else { n };
    let d = poly(e.den());
    if is_bare_factor(e.den()) {
        format!("{n}/{d}")
    } else {
        format!("{n}/({d})")
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn round_trip() {
        for s in [
            "pr_x^2*pr_y - 3/2*sin(pr_a)",
            "(pr_x + 1)/(pr_y^2 - pr_x)",
            "-pr_x/pr_y",
            "cot(pr_a)*D(pr_f,3)(t)",
            "1/(2*pr_x)",
        ] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }
}
