//! Derived flags, Cauchy bundles, intersection bundles and the type numbers
//! built from them.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::Zero;

use crate::error::{DflatError, Result};
use crate::expr::{Expr, ExprError, ProbePoint, Q};
use crate::geometry::{Chart, Distribution, OneForm, VectorField};
use crate::linalg::{self, Echelon};
use crate::{par, Config};

/// List of nonnegative integers `<rho_1, ..., rho_k>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Signature(Vec<usize>);

impl Signature {
    /// Trailing zeros are dropped.
    pub fn new(mut rho: Vec<usize>) -> Self {
        while rho.last() == Some(&0) {
            rho.pop();
        }
        Signature(rho)
    }

    /// Signature with one chain of each given order (orders start at 1).
    pub fn from_orders(orders: &[usize]) -> Self {
        let k = orders.iter().copied().max().unwrap_or(0);
        let mut rho = vec![0; k];
        for &o in orders {
            if o > 0 {
                rho[o - 1] += 1;
            }
        }
        Signature::new(rho)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        if i == 0 {
            return 0;
        }
        self.0.get(i - 1).copied().unwrap_or(0)
    }

    /// Number of dependent variables.
    pub fn width(&self) -> usize {
        self.0.iter().sum()
    }

    /// Chain orders in decreasing order.
    pub fn orders(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self
            .0
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| std::iter::repeat(i + 1).take(r))
            .collect();
        o.sort_unstable_by(|a, b| b.cmp(a));
        o
    }

    /// `1 + sum (1 + i) rho_i`.
    pub fn jet_dim(&self) -> usize {
        1 + self.0.iter().enumerate().map(|(i, r)| (i + 2) * r).sum::<usize>()
    }

    /// Every chain raised by `l` orders.
    pub fn shift(&self, l: usize) -> Signature {
        let mut rho = vec![0; l];
        rho.extend(self.0.iter().copied());
        Signature::new(rho)
    }

    /// Jet-space inclusion.
    pub fn le(&self, other: &Signature) -> bool {
        let a = self.orders();
        let b = other.orders();
        a.len() <= b.len() && a.iter().zip(&b).all(|(x, y)| x <= y)
    }

    /// Smallest signature above every member.
    pub fn join<'a, I: IntoIterator<Item = &'a Signature>>(sigs: I) -> Signature {
        let mut best: Vec<usize> = Vec::new();
        for s in sigs {
            let o = s.orders();
            if o.len() > best.len() {
                best.resize(o.len(), 0);
            }
            for (b, x) in best.iter_mut().zip(o) {
                *b = (*b).max(x);
            }
        }
        Signature::from_orders(&best)
    }

    /// Sum as jet spaces: the chains of both.
    pub fn plus(&self, other: &Signature) -> Signature {
        let mut o = self.orders();
        o.extend(other.orders());
        Signature::from_orders(&o)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// `[[m0, chi0], [m1, chi1_0, chi1], ..., [mk, chik]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinedDerivedType(pub Vec<Vec<usize>>);

impl RefinedDerivedType {
    pub fn m(&self, j: usize) -> usize {
        self.0[j][0]
    }

    /// `chi^j`.
    pub fn chi(&self, j: usize) -> usize {
        *self.0[j].last().unwrap()
    }

    /// `chi^j_{j-1}` for interior levels.
    pub fn chi_lower(&self, j: usize) -> Option<usize> {
        (self.0[j].len() == 3).then(|| self.0[j][1])
    }

    pub fn length(&self) -> usize {
        self.0.len() - 1
    }
}

impl fmt::Display for RefinedDerivedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| format!("[{}]", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

type Brackets = Vec<((usize, usize), VectorField)>;

#[derive(Clone)]
struct Level {
    dist: Distribution,
    brackets: Brackets,
    cauchy: OnceLock<Distribution>,
    intersection: OnceLock<Distribution>,
}

/// The derived flag `V = V^(0) < V^(1) < ... < V^(k) = V^(k+1)`.
#[derive(Clone)]
pub struct DerivedFlag {
    chart: Arc<Chart>,
    levels: Vec<Level>,
    loci: Vec<Expr>,
    cfg: Config,
}

impl fmt::Debug for DerivedFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DerivedFlag").field("ranks", &self.ranks()).finish()
    }
}

fn canonical(d: &Distribution, cfg: &Config) -> Result<(Distribution, Vec<Expr>)> {
    match d.rref_basis(cfg) {
        Ok(r) => Ok(r),
        Err(DflatError::Inconclusive(_)) => Ok((d.independent(cfg)?, vec![])),
        Err(e) => Err(e),
    }
}

/// `[X_i, X_l]` as `(negated, stored bracket)`.
fn bracket_lookup(br: &Brackets, i: usize, l: usize) -> Option<(bool, &VectorField)> {
    if i == l {
        return None;
    }
    let (a, b, neg) = if i < l { (i, l, false) } else { (l, i, true) };
    br.iter().find(|((x, y), _)| *x == a && *y == b).map(|(_, v)| (neg, v))
}

impl DerivedFlag {
    pub fn compute(d: &Distribution, cfg: &Config) -> Result<DerivedFlag> {
        let chart = d.chart().clone();
        let (mut cur, mut loci) = canonical(d, cfg)?;
        let mut levels = Vec::new();
        loop {
            let brackets = cur.pair_brackets()?;
            let extra: Vec<VectorField> =
                brackets.iter().map(|(_, b)| b.clone()).filter(|b| !b.is_zero()).collect();
            let (next, l) = canonical(&cur.with(&extra), cfg)?;
            let grew = next.len() > cur.len();
            levels.push(Level { dist: cur, brackets, cauchy: OnceLock::new(), intersection: OnceLock::new() });
            if !grew {
                break;
            }
            if levels.len() > chart.dim() {
                return Err(DflatError::Verification("derived flag failed to stabilise".into()));
            }
            loci.extend(l);
            cur = next;
        }
        loci.sort_by_key(|e| e.to_string());
        loci.dedup();
        Ok(DerivedFlag { chart, levels, loci, cfg: cfg.clone() })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Derived length `k`.
    pub fn length(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dist.len()).collect()
    }

    pub fn level(&self, j: usize) -> &Distribution {
        &self.levels[j].dist
    }

    /// Whether the top of the flag is the whole tangent bundle.
    pub fn is_bracket_generating(&self) -> bool {
        self.levels.last().unwrap().dist.len() == self.chart.dim()
    }

    /// Pivot entries used by the row reductions; the flag is certified off
    /// their zero sets.
    pub fn loci(&self) -> &[Expr] {
        &self.loci
    }

    /// `Delta_j = m_j - m_{j-1}`.
    pub fn velocity(&self) -> Vec<usize> {
        let m = self.ranks();
        m.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `<Delta_1 - Delta_2, ..., Delta_{k-1} - Delta_k, Delta_k>`, possibly
    /// with negative entries for flags that are not Goursat.
    pub fn deceleration(&self) -> Vec<i64> {
        let v: Vec<i64> = self.velocity().iter().map(|&x| x as i64).collect();
        let mut out: Vec<i64> = v.windows(2).map(|w| w[0] - w[1]).collect();
        if let Some(&last) = v.last() {
            out.push(last);
        }
        out
    }

    pub fn decel_signature(&self) -> Option<Signature> {
        let d = self.deceleration();
        if d.is_empty() || d.iter().any(|&x| x < 0) {
            return None;
        }
        Some(Signature(d.into_iter().map(|x| x as usize).collect()))
    }

    /// Numeric data of level `j` at one probe point: values of the basis,
    /// the structure matrix whose kernel is the Cauchy bundle, and the
    /// values of level `j - 1`.
    fn numeric_at(&self, j: usize, pt: &mut ProbePoint) -> std::result::Result<LevelValues, ExprError> {
        let lvl = &self.levels[j];
        let n = self.chart.dim();
        let x: Vec<Vec<Q>> = lvl.dist.gens().iter().map(|g| g.eval(pt)).collect::<std::result::Result<_, _>>()?;
        let r = x.len();
        let mut bv: Vec<((usize, usize), Vec<Q>)> = Vec::with_capacity(lvl.brackets.len());
        for (ij, b) in &lvl.brackets {
            bv.push((*ij, b.eval(pt)?));
        }
        let ann = linalg::nullspace_q(&x, n);
        let mut m = Vec::new();
        for l in 0..r {
            for na in &ann {
                let row: Vec<Q> = (0..r)
                    .map(|i| {
                        if i == l {
                            return Q::zero();
                        }
                        let (a, b, neg) = if i < l { (i, l, false) } else { (l, i, true) };
                        let v = &bv.iter().find(|(ij, _)| *ij == (a, b)).unwrap().1;
                        let d: Q = v.iter().zip(na).map(|(p, q)| p * q).sum();
                        if neg {
                            -d
                        } else {
                            d
                        }
                    })
                    .collect();
                m.push(row);
            }
        }
        let below = if j > 0 {
            self.levels[j - 1].dist.gens().iter().map(|g| g.eval(pt)).collect::<std::result::Result<_, _>>()?
        } else {
            vec![]
        };
        Ok(LevelValues { x, m, below })
    }

    fn level_values(&self, j: usize) -> Result<Vec<LevelValues>> {
        let vals = self.cfg.probes().collect(|pt| self.numeric_at(j, pt))?;
        Ok(vals.into_iter().map(|(_, v)| v).collect())
    }

    /// Generic rank of `Char V^(j)`.
    pub fn cauchy_rank(&self, j: usize) -> Result<usize> {
        let vals = self.level_values(j)?;
        let r = self.levels[j].dist.len();
        let best = vals
            .iter()
            .filter(|v| linalg::rank_q(&v.x) == r)
            .map(|v| linalg::rank_q(&v.m))
            .max()
            .ok_or_else(|| DflatError::DegenerateProbes(format!("level {j} of the derived flag")))?;
        Ok(r - best)
    }

    /// Generic rank of `Char V^(i)_{i-1} = V^(i-1) n Char V^(i)`.
    pub fn intersection_rank(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.length() {
            return Err(DflatError::Invalid(format!("no intersection bundle at level {i}")));
        }
        let vals = self.level_values(i)?;
        let r = self.levels[i].dist.len();
        let rb = self.levels[i - 1].dist.len();
        let generic_m = vals.iter().map(|v| linalg::rank_q(&v.m)).max().unwrap_or(0);
        let mut best: Option<usize> = None;
        for v in &vals {
            if linalg::rank_q(&v.x) != r || linalg::rank_q(&v.below) != rb || linalg::rank_q(&v.m) != generic_m {
                continue;
            }
            let char_vecs: Vec<Vec<Q>> = linalg::nullspace_q(&v.m, r)
                .into_iter()
                .map(|c| {
                    let mut acc = vec![Q::zero(); self.chart.dim()];
                    for (ci, xi) in c.iter().zip(&v.x) {
                        if !ci.is_zero() {
                            for (a, b) in acc.iter_mut().zip(xi) {
                                *a += ci * b;
                            }
                        }
                    }
                    acc
                })
                .collect();
            let mut e = Echelon::new();
            for row in v.below.iter().chain(&char_vecs) {
                e.insert(row);
            }
            let dim = rb + linalg::rank_q(&char_vecs) - e.rank();
            best = Some(best.map_or(dim, |b| b.min(dim)));
        }
        best.ok_or_else(|| DflatError::DegenerateProbes(format!("intersection bundle {i}")))
    }

    /// Symbolic basis of `Char V^(j)`.
    pub fn cauchy(&self, j: usize) -> Result<Distribution> {
        if let Some(d) = self.levels[j].cauchy.get() {
            return Ok(d.clone());
        }
        let lvl = &self.levels[j];
        let r = lvl.dist.len();
        let ann = lvl.dist.annihilator(&self.cfg)?;
        let mut rows = Vec::new();
        for l in 0..r {
            for w in &ann {
                rows.push(
                    (0..r)
                        .map(|i| match bracket_lookup(&lvl.brackets, i, l) {
                            None => Expr::zero(),
                            Some((neg, b)) => {
                                let d = w.pair(b);
                                if neg {
                                    -&d
                                } else {
                                    d
                                }
                            }
                        })
                        .collect::<Vec<Expr>>(),
                );
            }
        }
        rows.retain(|row| row.iter().any(|e| !e.is_zero()));
        let coeffs = linalg::nullspace(&rows, r, &self.cfg.probes(), self.cfg.size_budget)?;
        let gens: Vec<VectorField> = coeffs
            .iter()
            .map(|c| VectorField::combination(&self.chart, c, lvl.dist.gens()))
            .collect();
        let (d, _) = canonical(&Distribution::new(self.chart.clone(), gens)?, &self.cfg)?;
        let numeric = self.cauchy_rank(j)?;
        if d.len() != numeric {
            return Err(DflatError::RankDisagreement { what: format!("Cauchy bundle {j}"), numeric, symbolic: d.len() });
        }
        let _ = lvl.cauchy.set(d.clone());
        Ok(d)
    }

    /// Symbolic basis of `Char V^(i)_{i-1}`.
    pub fn intersection(&self, i: usize) -> Result<Distribution> {
        if i == 0 || i > self.length() {
            return Err(DflatError::Invalid(format!("no intersection bundle at level {i}")));
        }
        if let Some(d) = self.levels[i].intersection.get() {
            return Ok(d.clone());
        }
        let ch = self.cauchy(i)?;
        let ann = self.levels[i - 1].dist.annihilator(&self.cfg)?;
        let rows: Vec<Vec<Expr>> = ann
            .iter()
            .map(|w| ch.gens().iter().map(|c| w.pair(c)).collect::<Vec<Expr>>())
            .filter(|row| row.iter().any(|e| !e.is_zero()))
            .collect();
        let coeffs = linalg::nullspace(&rows, ch.len(), &self.cfg.probes(), self.cfg.size_budget)?;
        let gens: Vec<VectorField> =
            coeffs.iter().map(|c| VectorField::combination(&self.chart, c, ch.gens())).collect();
        let (d, _) = canonical(&Distribution::new(self.chart.clone(), gens)?, &self.cfg)?;
        let numeric = self.intersection_rank(i)?;
        if d.len() != numeric {
            return Err(DflatError::RankDisagreement {
                what: format!("intersection bundle {i}"),
                numeric,
                symbolic: d.len(),
            });
        }
        let _ = self.levels[i].intersection.set(d.clone());
        Ok(d)
    }

    /// Annihilator `Xi^(j)` of `Char V^(j)`.
    pub fn cauchy_annihilator(&self, j: usize) -> Result<Vec<OneForm>> {
        self.cauchy(j)?.annihilator(&self.cfg)
    }

    pub fn refined_type(&self) -> Result<RefinedDerivedType> {
        let k = self.length();
        let ranks = self.ranks();
        let idx: Vec<usize> = (0..=k).collect();
        let chis = par::map(&idx, |&j| self.cauchy_rank(j)).into_iter().collect::<Result<Vec<_>>>()?;
        let lows = par::map(&idx, |&j| if j == 0 || j == k { Ok(0) } else { self.intersection_rank(j) })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for j in 0..=k {
            if j == 0 || j == k {
                out.push(vec![ranks[j], chis[j]]);
            } else {
                out.push(vec![ranks[j], lows[j], chis[j]]);
            }
        }
        Ok(RefinedDerivedType(out))
    }
}

struct LevelValues {
    x: Vec<Vec<Q>>,
    m: Vec<Vec<Q>>,
    below: Vec<Vec<Q>>,
}
