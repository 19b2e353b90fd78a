//! Charts, vector fields, one-forms and distributions.

mod map;
mod system;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{DflatError, Result};
use crate::expr::{Expr, ExprError, ProbePoint, Sym, Q};
use crate::linalg::{self, Echelon, Probes};
use crate::{par, Config};

pub use map::{solve_equations, solve_partial, CoordMap};
pub use system::ControlSystem;

/// Role of a chart coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Time,
    State,
    Control,
    Group,
    Jet { var: String, order: u32 },
    Aux,
}

/// Ordered coordinates with role tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    syms: Vec<Sym>,
    roles: Vec<Role>,
    index: HashMap<Sym, usize>,
}

impl Chart {
    pub fn new(coords: Vec<(Sym, Role)>) -> Result<Arc<Chart>> {
        let mut index = HashMap::new();
        let mut syms = Vec::new();
        let mut roles = Vec::new();
        for (i, (s, r)) in coords.into_iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(DflatError::Invalid(format!("duplicate coordinate {s}")));
            }
            syms.push(s);
            roles.push(r);
        }
        let times = roles.iter().filter(|r| **r == Role::Time).count();
        if times != 1 {
            return Err(DflatError::Invalid(format!("chart needs exactly one time coordinate, found {times}")));
        }
        if syms[roles.iter().position(|r| *r == Role::Time).unwrap()] != Sym::time() {
            return Err(DflatError::Invalid("the time coordinate must be named t".into()));
        }
        Ok(Arc::new(Chart { syms, roles, index }))
    }

    pub fn dim(&self) -> usize {
        self.syms.len()
    }

    pub fn syms(&self) -> &[Sym] {
        &self.syms
    }

    pub fn sym(&self, i: usize) -> Sym {
        self.syms[i]
    }

    pub fn role(&self, i: usize) -> &Role {
        &self.roles[i]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn index_of(&self, s: Sym) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn time_index(&self) -> usize {
        self.roles.iter().position(|r| *r == Role::Time).unwrap()
    }

    pub fn names(&self) -> Vec<String> {
        self.syms.iter().map(|s| s.name().to_string()).collect()
    }

    pub fn with_role(&self, f: impl Fn(&Role) -> bool) -> Vec<usize> {
        (0..self.dim()).filter(|&i| f(&self.roles[i])).collect()
    }
}

/// Vector field as one coefficient per chart coordinate.
#[derive(Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(DflatError::Invalid(format!(
                "vector field has {} components on a {}-dimensional chart",
                comps.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart, comps })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field of the `i`-th coordinate.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = Self::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    /// Builds from `(coordinate, coefficient)` pairs; other entries are zero.
    pub fn from_pairs(chart: &Arc<Chart>, pairs: &[(Sym, Expr)]) -> Result<Self> {
        let mut v = Self::zero(chart);
        for (s, e) in pairs {
            let i = chart
                .index_of(*s)
                .ok_or_else(|| DflatError::Invalid(format!("{s} is not a chart coordinate")))?;
            v.comps[i] = &v.comps[i] + e;
        }
        Ok(v)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    /// Lie derivative of a function.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.diff(self.chart.sym(i));
            if !d.is_zero() {
                terms.push(c * &d);
            }
        }
        Expr::sum(&terms)
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        if self.chart != other.chart {
            return Err(DflatError::Invalid("bracket of fields on different charts".into()));
        }
        let comps = (0..self.chart.dim())
            .map(|i| &self.apply(&other.comps[i]) - &other.apply(&self.comps[i]))
            .collect();
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    pub fn scale(&self, k: &Expr) -> VectorField {
        let comps = self.comps.iter().map(|a| a * k).collect();
        VectorField { chart: self.chart.clone(), comps }
    }

    /// `sum_i c_i X_i`.
    pub fn combination(chart: &Arc<Chart>, coeffs: &[Expr], fields: &[VectorField]) -> VectorField {
        let mut acc = VectorField::zero(chart);
        for (c, f) in coeffs.iter().zip(fields) {
            if !c.is_zero() {
                acc = acc.add(&f.scale(c));
            }
        }
        acc
    }

    pub fn eval(&self, pt: &mut ProbePoint) -> std::result::Result<Vec<Q>, ExprError> {
        self.comps.iter().map(|e| e.eval(pt)).collect()
    }

    pub fn substitute(&self, map: &HashMap<Sym, Expr>) -> Result<VectorField> {
        let comps = self.comps.iter().map(|e| e.subst(map)).collect::<std::result::Result<_, _>>()?;
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    /// Nonzero components as `(name, printed coefficient)`.
    pub fn entries(&self) -> Vec<(String, String)> {
        self.comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.chart.sym(i).name().to_string(), c.to_string()))
            .collect()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries().into_iter().map(|(n, c)| format!("{n}: {c}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// One-form as one coefficient per coordinate differential.
#[derive(Clone, PartialEq)]
pub struct OneForm {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl OneForm {
    pub fn new(chart: Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(DflatError::Invalid("one-form length does not match chart".into()));
        }
        Ok(OneForm { chart, comps })
    }

    pub fn differential(chart: &Arc<Chart>, f: &Expr) -> OneForm {
        OneForm { chart: chart.clone(), comps: chart.syms().iter().map(|s| f.diff(*s)).collect() }
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn pair(&self, v: &VectorField) -> Expr {
        let terms: Vec<Expr> = self
            .comps
            .iter()
            .zip(v.comps())
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .map(|(a, b)| a * b)
            .collect();
        Expr::sum(&terms)
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("d{}: {c}", self.chart.sym(i)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Span of vector fields on one chart.
#[derive(Clone)]
pub struct Distribution {
    chart: Arc<Chart>,
    gens: Vec<VectorField>,
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.gens.iter()).finish()
    }
}

impl Distribution {
    pub fn new(chart: Arc<Chart>, gens: Vec<VectorField>) -> Result<Self> {
        if gens.iter().any(|g| g.chart != chart) {
            return Err(DflatError::Invalid("generators live on different charts".into()));
        }
        Ok(Distribution { chart, gens })
    }

    pub fn coordinate_fields(chart: &Arc<Chart>, idx: &[usize]) -> Self {
        Distribution {
            chart: chart.clone(),
            gens: idx.iter().map(|&i| VectorField::coordinate(chart, i)).collect(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn gens(&self) -> &[VectorField] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        self.gens.iter().map(|g| g.comps.clone()).collect()
    }

    pub fn union(&self, other: &Distribution) -> Distribution {
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        Distribution { chart: self.chart.clone(), gens }
    }

    pub fn with(&self, extra: &[VectorField]) -> Distribution {
        let mut gens = self.gens.clone();
        gens.extend(extra.iter().cloned());
        Distribution { chart: self.chart.clone(), gens }
    }

    /// Generic rank, cross-checked symbolically when small enough.
    pub fn rank(&self, cfg: &Config) -> Result<usize> {
        generic_rank(&self.gens, cfg)
    }

    /// Whether `v` lies in the span generically.
    pub fn contains(&self, v: &VectorField, cfg: &Config) -> Result<bool> {
        self.contains_all(std::slice::from_ref(v), cfg)
    }

    pub fn contains_all(&self, vs: &[VectorField], cfg: &Config) -> Result<bool> {
        let probes = cfg.probes();
        let vals = probes.collect(|pt| {
            let base: Vec<Vec<Q>> = self.gens.iter().map(|g| g.eval(pt)).collect::<std::result::Result<_, _>>()?;
            let extra: Vec<Vec<Q>> = vs.iter().map(|g| g.eval(pt)).collect::<std::result::Result<_, _>>()?;
            Ok((base, extra))
        })?;
        let rb = vals.iter().map(|(_, (b, _))| linalg::rank_q(b)).max().unwrap_or(0);
        let ru = vals
            .iter()
            .map(|(_, (b, e))| {
                let mut all = b.clone();
                all.extend(e.iter().cloned());
                linalg::rank_q(&all)
            })
            .max()
            .unwrap_or(0);
        Ok(ru == rb)
    }

    /// Equality by two containment checks.
    pub fn same_span(&self, other: &Distribution, cfg: &Config) -> Result<bool> {
        Ok(self.contains_all(&other.gens, cfg)? && other.contains_all(&self.gens, cfg)?)
    }

    /// All brackets of generator pairs `i < j`, in row-major order.
    pub fn pair_brackets(&self) -> Result<Vec<((usize, usize), VectorField)>> {
        let n = self.gens.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let out = par::map(&pairs, |&(i, j)| self.gens[i].bracket(&self.gens[j]).map(|b| ((i, j), b)));
        out.into_iter().collect()
    }

    /// Bracket closure test.
    pub fn is_integrable(&self, cfg: &Config) -> Result<bool> {
        let br: Vec<VectorField> = self.pair_brackets()?.into_iter().map(|(_, b)| b).filter(|b| !b.is_zero()).collect();
        if br.is_empty() {
            return Ok(true);
        }
        self.contains_all(&br, cfg)
    }

    /// A generically independent subset of the generators spanning the same
    /// distribution.
    pub fn independent(&self, cfg: &Config) -> Result<Distribution> {
        let (_, mut pt) = linalg::generic_rank_at(&self.rows(), &cfg.probes())?;
        let mut e = Echelon::new();
        let mut gens = Vec::new();
        for g in &self.gens {
            if e.insert(&g.eval(&mut pt)?) {
                gens.push(g.clone());
            }
        }
        Ok(Distribution { chart: self.chart.clone(), gens })
    }

    /// Canonical generators: the reduced row echelon form of the
    /// coefficient matrix in chart order.
    pub fn rref_basis(&self, cfg: &Config) -> Result<(Distribution, Vec<Expr>)> {
        let rows = self.independent(cfg)?.rows();
        if rows.is_empty() {
            return Ok((Distribution { chart: self.chart.clone(), gens: vec![] }, vec![]));
        }
        let (_, mut pt) = linalg::generic_rank_at(&rows, &cfg.probes())?;
        let r = linalg::rref(&rows, &mut pt, cfg.size_budget)?
            .ok_or_else(|| DflatError::Inconclusive("row reduction exceeded its size budget".into()))?;
        let gens = r
            .rows
            .into_iter()
            .map(|comps| VectorField { chart: self.chart.clone(), comps })
            .collect();
        let loci = r.loci.into_iter().filter(|l| l.constant_value().is_none()).collect();
        Ok((Distribution { chart: self.chart.clone(), gens }, loci))
    }

    /// Basis of the annihilator, from the row echelon form.
    pub fn annihilator(&self, cfg: &Config) -> Result<Vec<OneForm>> {
        let (basis, _) = self.rref_basis(cfg)?;
        let n = self.chart.dim();
        let rows: Vec<Vec<Expr>> = basis.rows();
        let pivots: Vec<usize> = rows
            .iter()
            .map(|r| r.iter().position(|e| !e.is_zero()).unwrap())
            .collect();
        let mut out = Vec::new();
        for q in 0..n {
            if pivots.contains(&q) {
                continue;
            }
            let mut comps = vec![Expr::zero(); n];
            comps[q] = Expr::one();
            for (row, &p) in rows.iter().zip(&pivots) {
                comps[p] = -&row[q];
            }
            out.push(OneForm { chart: self.chart.clone(), comps });
        }
        Ok(out)
    }
}

/// Generic rank of fields, with a symbolic cross-check within budget.
pub fn generic_rank(fields: &[VectorField], cfg: &Config) -> Result<usize> {
    if fields.is_empty() {
        return Ok(0);
    }
    let rows: Vec<Vec<Expr>> = fields.iter().map(|f| f.comps.clone()).collect();
    let (numeric, mut pt) = linalg::generic_rank_at(&rows, &cfg.probes())?;
    if cfg.symbolic_check {
        if let Some(symbolic) = linalg::symbolic_rank(&rows, &mut pt, cfg.size_budget)? {
            if symbolic != numeric {
                return Err(DflatError::RankDisagreement { what: "distribution".into(), numeric, symbolic });
            }
        }
    }
    Ok(numeric)
}

/// Generic rank of one-forms.
pub fn generic_rank_forms(forms: &[OneForm], probes: &Probes) -> Result<usize> {
    let rows: Vec<Vec<Expr>> = forms.iter().map(|f| f.comps.clone()).collect();
    if rows.is_empty() {
        return Ok(0);
    }
    linalg::generic_rank(&rows, probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn chart() -> Arc<Chart> {
        Chart::new(vec![
            (Sym::time(), Role::Time),
            (Sym::coord("geo_x"), Role::State),
            (Sym::coord("geo_y"), Role::State),
        ])
        .unwrap()
    }

    #[test]
    fn brackets_and_ranks() {
        let c = chart();
        let e = |s: &str| parse(s).unwrap();
        let dx = VectorField::coordinate(&c, 1);
        let dy = VectorField::coordinate(&c, 2);
        assert!(dx.bracket(&dy).unwrap().is_zero());
        let xdy = dy.scale(&e("geo_x"));
        assert_eq!(dx.bracket(&xdy).unwrap(), dy);
        let cfg = Config::default();
        let d = Distribution::new(c.clone(), vec![dx.clone(), dy.clone(), dx.add(&dy)]).unwrap();
        assert_eq!(d.rank(&cfg).unwrap(), 2);
        let d1 = Distribution::new(c.clone(), vec![xdy]).unwrap();
        assert_eq!(d1.rank(&cfg).unwrap(), 1);
        let ann = Distribution::new(c.clone(), vec![dx, dy]).unwrap().annihilator(&cfg).unwrap();
        assert_eq!(ann.len(), 1);
        assert_eq!(ann[0].comps()[0], Expr::one());
    }
}
