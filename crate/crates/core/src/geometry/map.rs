//! Coordinate maps between charts of equal dimension, their inverses and
//! pushforwards.

use std::collections::HashMap;
use std::sync::Arc;

use super::{Chart, Distribution, VectorField};
use crate::error::{DflatError, Result};
use crate::expr::{Expr, Sym};
use crate::linalg;
use crate::Config;

/// A map `source -> target` given by one expression per target coordinate,
/// together with its inverse written in target coordinates.
#[derive(Clone, Debug)]
pub struct CoordMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    comps: Vec<Expr>,
    inverse: Vec<Expr>,
}

impl CoordMap {
    /// Builds the map and inverts it by triangular and linear elimination.
    pub fn new(source: Arc<Chart>, target: Arc<Chart>, comps: Vec<Expr>, cfg: &Config) -> Result<Self> {
        check_shape(&source, &target, &comps)?;
        let shared = shared_identity(&source, &target, &comps)?;
        let eqs: Vec<Expr> = comps
            .iter()
            .zip(target.syms())
            .filter(|(_, y)| !shared.contains(y))
            .map(|(c, y)| c - &Expr::sym(*y))
            .collect();
        let unknowns: Vec<Sym> = source.syms().iter().copied().filter(|x| !shared.contains(x)).collect();
        let sol = solve_equations(&eqs, &unknowns, cfg)?;
        let inverse = source
            .syms()
            .iter()
            .map(|x| if shared.contains(x) { Expr::sym(*x) } else { sol[x].clone() })
            .collect();
        let m = CoordMap { source, target, comps, inverse };
        m.verify()?;
        Ok(m)
    }

    /// Builds the map from a supplied inverse, which is verified.
    pub fn with_inverse(source: Arc<Chart>, target: Arc<Chart>, comps: Vec<Expr>, inverse: Vec<Expr>) -> Result<Self> {
        check_shape(&source, &target, &comps)?;
        shared_identity(&source, &target, &comps)?;
        if inverse.len() != source.dim() {
            return Err(DflatError::Invalid("inverse has the wrong length".into()));
        }
        let m = CoordMap { source, target, comps, inverse };
        m.verify()?;
        Ok(m)
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        let comps: Vec<Expr> = chart.syms().iter().map(|s| Expr::sym(*s)).collect();
        CoordMap { source: chart.clone(), target: chart.clone(), inverse: comps.clone(), comps }
    }

    fn verify(&self) -> Result<()> {
        let back = self.inverse_map();
        for (c, y) in self.comps.iter().zip(self.target.syms()) {
            let r = c.subst(&back).map_err(|e| DflatError::InversionFailed(e.to_string()))?;
            if r != Expr::sym(*y) {
                return Err(DflatError::InversionFailed(format!("composition gives {y} -> {r}")));
            }
        }
        Ok(())
    }

    fn inverse_map(&self) -> HashMap<Sym, Expr> {
        self.source.syms().iter().copied().zip(self.inverse.iter().cloned()).collect()
    }

    fn forward_map(&self) -> HashMap<Sym, Expr> {
        self.target.syms().iter().copied().zip(self.comps.iter().cloned()).collect()
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn inverse(&self) -> &[Expr] {
        &self.inverse
    }

    /// Rewrites a function on the source in target coordinates.
    pub fn to_target(&self, f: &Expr) -> Result<Expr> {
        Ok(f.subst(&self.inverse_map())?)
    }

    /// Pulls a function on the target back to the source.
    pub fn pull(&self, f: &Expr) -> Result<Expr> {
        Ok(f.subst(&self.forward_map())?)
    }

    pub fn pushforward(&self, v: &VectorField) -> Result<VectorField> {
        if v.chart() != &self.source {
            return Err(DflatError::Invalid("field is not on the map's source chart".into()));
        }
        let back = self.inverse_map();
        let comps = self
            .comps
            .iter()
            .map(|c| Ok(v.apply(c).subst(&back)?))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(self.target.clone(), comps)
    }

    pub fn push_distribution(&self, d: &Distribution) -> Result<Distribution> {
        let gens = d.gens().iter().map(|g| self.pushforward(g)).collect::<Result<Vec<_>>>()?;
        Distribution::new(self.target.clone(), gens)
    }

    /// Generic rank of the Jacobian.
    pub fn jacobian_rank(&self, cfg: &Config) -> Result<usize> {
        let rows: Vec<Vec<Expr>> = self
            .comps
            .iter()
            .map(|c| self.source.syms().iter().map(|x| c.diff(*x)).collect())
            .collect();
        linalg::generic_rank(&rows, &cfg.probes())
    }
}

fn check_shape(source: &Chart, target: &Chart, comps: &[Expr]) -> Result<()> {
    if source.dim() != target.dim() || comps.len() != target.dim() {
        return Err(DflatError::NotInvertible(format!(
            "map from dimension {} to {} with {} components",
            source.dim(),
            target.dim(),
            comps.len()
        )));
    }
    Ok(())
}

/// Names common to both charts; each must be carried by the identity.
fn shared_identity(source: &Chart, target: &Chart, comps: &[Expr]) -> Result<Vec<Sym>> {
    let mut shared = Vec::new();
    for (y, c) in target.syms().iter().zip(comps) {
        if source.index_of(*y).is_some() {
            if c.as_symbol() != Some(*y) {
                return Err(DflatError::Invalid(format!(
                    "target coordinate {y} shares a source name but is not carried identically"
                )));
            }
            shared.push(*y);
        }
    }
    Ok(shared)
}

fn depends_on_any(e: &Expr, vars: &[Sym]) -> Vec<Sym> {
    vars.iter().copied().filter(|v| e.depends_on(*v)).collect()
}

/// Whether `v` occurs inside a transcendental symbol of `e`.
fn transcendental_in(e: &Expr, v: Sym) -> bool {
    e.symbols().into_iter().any(|s| s.argument() == Some(v))
}

/// Solves `eqs = 0` for `unknowns`: repeatedly isolates an unknown occurring
/// linearly and alone in some equation, then falls back to a square linear
/// solve over the remaining unknowns.
pub fn solve_equations(eqs: &[Expr], unknowns: &[Sym], cfg: &Config) -> Result<HashMap<Sym, Expr>> {
    let mut pending: Vec<Expr> = eqs.to_vec();
    let mut open: Vec<Sym> = unknowns.to_vec();
    let mut sol: HashMap<Sym, Expr> = HashMap::new();
    while !open.is_empty() {
        if let Some((i, u, value)) = isolate(&pending, &open) {
            pending.remove(i);
            open.retain(|x| *x != u);
            substitute_all(&mut pending, &mut sol, u, value)?;
            continue;
        }
        let solved = linear_step(&pending, &open, cfg)?;
        if solved.is_empty() {
            let names: Vec<String> = open.iter().map(|s| s.name().to_string()).collect();
            return Err(DflatError::InversionFailed(format!("cannot solve for {}", names.join(", "))));
        }
        for (u, value) in solved {
            open.retain(|x| *x != u);
            substitute_all(&mut pending, &mut sol, u, value)?;
        }
        pending.retain(|e| !depends_on_any(e, &open).is_empty());
    }
    Ok(sol)
}

/// Solves as many of `eqs = 0` as possible for `unknowns` by repeated
/// isolation, preferring roots whose coefficient is free of the other
/// unknowns. Unknowns that stay open are left in the solution values.
pub fn solve_partial(eqs: &[Expr], unknowns: &[Sym]) -> Result<HashMap<Sym, Expr>> {
    let mut pending: Vec<Expr> = eqs.to_vec();
    let mut open: Vec<Sym> = unknowns.to_vec();
    let mut sol: HashMap<Sym, Expr> = HashMap::new();
    loop {
        let mut best: Option<((bool, usize), usize, Sym, Expr)> = None;
        for (i, e) in pending.iter().enumerate() {
            for u in depends_on_any(e, &open) {
                let Some(value) = solve_linear_in(e, u) else { continue };
                let needs_atom = pending.iter().any(|f| transcendental_in(f, u));
                if needs_atom && value.as_symbol().filter(|s| s.is_atomic_argument()).is_none() {
                    continue;
                }
                let coupled = !depends_on_any(&value, &open).is_empty();
                let key = (coupled, value.size());
                if best.as_ref().is_none_or(|b| key < b.0) {
                    best = Some((key, i, u, value));
                }
            }
        }
        let Some((_, i, u, value)) = best else { break };
        pending.remove(i);
        open.retain(|x| *x != u);
        substitute_all(&mut pending, &mut sol, u, value)?;
        pending.retain(|e| !depends_on_any(e, &open).is_empty());
    }
    Ok(sol)
}

fn substitute_all(pending: &mut [Expr], sol: &mut HashMap<Sym, Expr>, u: Sym, value: Expr) -> Result<()> {
    for e in pending.iter_mut() {
        *e = e.subst_one(u, &value)?;
    }
    for e in sol.values_mut() {
        *e = e.subst_one(u, &value)?;
    }
    sol.insert(u, value);
    Ok(())
}

fn isolate(pending: &[Expr], open: &[Sym]) -> Option<(usize, Sym, Expr)> {
    for (i, e) in pending.iter().enumerate() {
        let vars = depends_on_any(e, open);
        let [u] = vars[..] else { continue };
        let Some(value) = solve_linear_in(e, u) else { continue };
        let needs_atom = pending.iter().enumerate().any(|(j, f)| j != i && transcendental_in(f, u));
        if needs_atom && value.as_symbol().filter(|s| s.is_atomic_argument()).is_none() {
            continue;
        }
        return Some((i, u, value));
    }
    None
}

/// Root of `e` when its numerator is `a u + b` with `a`, `b` free of `u`.
fn solve_linear_in(e: &Expr, u: Sym) -> Option<Expr> {
    if transcendental_in(e, u) || e.num().degree_in(u) != 1 {
        return None;
    }
    let c = e.num().coeffs_in(u);
    let b = Expr::from_poly(c[0].clone());
    let a = Expr::from_poly(c[1].clone());
    (-&b).try_div(&a).ok()
}

fn linear_step(pending: &[Expr], open: &[Sym], cfg: &Config) -> Result<Vec<(Sym, Expr)>> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut used: Vec<Sym> = Vec::new();
    for e in pending {
        let vars = depends_on_any(e, open);
        if vars.is_empty() || vars.iter().any(|v| transcendental_in(e, *v)) {
            continue;
        }
        let n = e.num();
        let linear = n.terms().iter().all(|(m, _)| vars.iter().map(|v| m.exp(*v)).sum::<u32>() <= 1);
        if !linear {
            continue;
        }
        let zero: std::collections::HashMap<Sym, Expr> = open.iter().map(|v| (*v, Expr::zero())).collect();
        let num = Expr::from_poly(n.clone());
        let b = num.subst(&zero)?;
        let coeffs: Vec<Expr> = open.iter().map(|v| num.diff(*v)).collect();
        for v in &vars {
            if !used.contains(v) {
                used.push(*v);
            }
        }
        rows.push(coeffs);
        rhs.push(-&b);
    }
    if rows.is_empty() {
        return Ok(vec![]);
    }
    let cols: Vec<usize> = open.iter().enumerate().filter(|(_, v)| used.contains(v)).map(|(i, _)| i).collect();
    let a: Vec<Vec<Expr>> = rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
    let (rank, mut pt) = linalg::generic_rank_at(&a, &cfg.probes())?;
    if rank < cols.len() {
        return Ok(vec![]);
    }
    let vals = linalg::eval_rows(&a, &mut pt)?;
    let keep = linalg::independent_rows(&vals);
    let sa: Vec<Vec<Expr>> = keep.iter().map(|&i| a[i].clone()).collect();
    let sb: Vec<Expr> = keep.iter().map(|&i| rhs[i].clone()).collect();
    let x = linalg::solve(&sa, &sb, &cfg.probes(), cfg.size_budget)?;
    Ok(cols.iter().map(|&c| open[c]).zip(x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::Role;

    #[test]
    fn triangular_inverse_and_pushforward() {
        let src = Chart::new(vec![
            (Sym::time(), Role::Time),
            (Sym::coord("mp_x"), Role::State),
            (Sym::coord("mp_y"), Role::State),
        ])
        .unwrap();
        let tgt = Chart::new(vec![
            (Sym::time(), Role::Time),
            (Sym::coord("mp_a"), Role::State),
            (Sym::coord("mp_b"), Role::State),
        ])
        .unwrap();
        let e = |s: &str| parse(s).unwrap();
        let cfg = Config::default();
        let m = CoordMap::new(src.clone(), tgt.clone(), vec![e("t"), e("mp_x"), e("mp_y + mp_x^3 + t")], &cfg).unwrap();
        assert_eq!(m.inverse()[2], e("mp_b - mp_a^3 - t"));
        let dy = VectorField::coordinate(&src, 2);
        assert_eq!(m.pushforward(&dy).unwrap(), VectorField::coordinate(&tgt, 2));
        let lin = CoordMap::new(src, tgt, vec![e("t"), e("mp_x + mp_y"), e("mp_x - mp_y")], &cfg).unwrap();
        assert_eq!(lin.inverse()[1], e("(mp_a + mp_b)/2"));
    }
}
