//! Exact linear algebra: rational matrices at probe points and symbolic
//! row reduction over the expression field.

use num_traits::{One, Zero};

use crate::error::{DflatError, Result};
use crate::expr::{Expr, ExprError, Poly, ProbePoint, Q};

/// Incremental row echelon form over Q.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<(usize, Vec<Q>)>,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let f = v[*p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v`; returns whether it was independent.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        let r: Vec<Q> = r.iter().map(|x| x * &inv).collect();
        for (_, row) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        self.rows.push((p, r));
        true
    }
}

pub fn rank_q(rows: &[Vec<Q>]) -> usize {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Right nullspace basis of a rational matrix with `ncols` columns.
pub fn nullspace_q(rows: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r);
    }
    let pivots: Vec<usize> = e.rows.iter().map(|(p, _)| *p).collect();
    let mut out = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (p, row) in &e.rows {
            v[*p] = -row[free].clone();
        }
        out.push(v);
    }
    out
}

pub fn transpose<T: Clone>(rows: &[Vec<T>], ncols: usize) -> Vec<Vec<T>> {
    (0..ncols).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Seeded probe points used for generic ranks.
#[derive(Clone, Copy, Debug)]
pub struct Probes {
    pub seed: u64,
    pub count: usize,
}

impl Probes {
    pub fn new(seed: u64) -> Self {
        Probes { seed, count: 3 }
    }

    pub fn point(&self, i: u64) -> ProbePoint {
        ProbePoint::new(self.seed, i)
    }

    /// Evaluates `f` at `count` points, skipping points where it has a pole.
    /// Points are evaluated in parallel batches; the result keeps index order.
    pub fn collect<T, F>(&self, f: F) -> Result<Vec<(ProbePoint, T)>>
    where
        T: Send,
        F: Fn(&mut ProbePoint) -> std::result::Result<T, ExprError> + Sync + Send,
    {
        let mut out = Vec::new();
        let mut next = 0u64;
        let limit = 40 + 10 * self.count as u64;
        while out.len() < self.count {
            if next > limit {
                return Err(DflatError::DegenerateProbes("too many poles".into()));
            }
            let batch: Vec<u64> = (next..next + (self.count - out.len()) as u64).collect();
            next += batch.len() as u64;
            let results = crate::par::map(&batch, |&i| {
                let mut pt = self.point(i);
                let r = f(&mut pt);
                (pt, r)
            });
            for (pt, r) in results {
                match r {
                    Ok(v) => out.push((pt, v)),
                    Err(ExprError::PoleAtPoint) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(out)
    }
}

pub fn eval_rows(rows: &[Vec<Expr>], pt: &mut ProbePoint) -> std::result::Result<Vec<Vec<Q>>, ExprError> {
    rows.iter()
        .map(|r| r.iter().map(|e| e.eval(pt)).collect())
        .collect()
}

/// Generic rank: the maximum over the probe points, with the point attaining it.
pub fn generic_rank_at(rows: &[Vec<Expr>], probes: &Probes) -> Result<(usize, ProbePoint)> {
    let vals = probes.collect(|pt| eval_rows(rows, pt))?;
    let mut best: Option<(usize, ProbePoint)> = None;
    for (pt, m) in vals {
        let r = rank_q(&m);
        if best.as_ref().map_or(true, |(b, _)| r > *b) {
            best = Some((r, pt));
        }
    }
    Ok(best.unwrap())
}

pub fn generic_rank(rows: &[Vec<Expr>], probes: &Probes) -> Result<usize> {
    Ok(generic_rank_at(rows, probes)?.0)
}

/// Symbolic reduced row echelon form.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Vec<Expr>>,
    pub pivots: Vec<usize>,
    /// Pivot entries before normalisation; their zero sets are excluded.
    pub loci: Vec<Expr>,
}

/// The row multiplied by the product of its distinct denominators.
fn clear_denominators(row: &[Expr]) -> Vec<Expr> {
    let mut dens: Vec<&Poly> = Vec::new();
    for e in row {
        if !e.den().is_one() && !dens.contains(&e.den()) {
            dens.push(e.den());
        }
    }
    let common = dens.iter().fold(Poly::one(), |acc, d| acc.mul(d));
    row.iter()
        .map(|e| {
            let k = common.div_exact(e.den()).expect("denominator divides the product");
            Expr::from_poly(e.num().mul(&k))
        })
        .collect()
}

/// `(p*x - f*y) / prev`, exactly when the division is polynomial.
fn bareiss_entry(p: &Expr, x: &Expr, f: &Expr, y: &Expr, prev: &Expr) -> Result<Expr> {
    let cross = &(p * x) - &(f * y);
    if cross.den().is_one() && prev.den().is_one() {
        if let Some(q) = cross.num().div_exact(prev.num()) {
            return Ok(Expr::from_poly(q));
        }
    }
    Ok(cross.try_div(prev)?)
}

/// Row index among `rows[top..]` for a pivot in `col`, preferring entries
/// nonzero at `pt`.
fn pivot_row(m: &[Vec<Expr>], top: usize, col: usize, pt: &mut ProbePoint) -> Option<usize> {
    let mut choice = None;
    for (i, row) in m.iter().enumerate().skip(top) {
        if row[col].is_zero() {
            continue;
        }
        if row[col].eval(pt).is_ok_and(|v| !v.is_zero()) {
            return Some(i);
        }
        choice.get_or_insert(i);
    }
    choice
}

/// Row reduces symbolically, choosing pivots that are nonzero at `pt`
/// where possible. Aborts with `None` if an entry exceeds `budget` terms.
pub fn rref(rows: &[Vec<Expr>], pt: &mut ProbePoint, budget: usize) -> Result<Option<Rref>> {
    let mut m: Vec<Vec<Expr>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut loci = Vec::new();
    let mut top = 0;
    for col in 0..ncols {
        if top == m.len() {
            break;
        }
        let Some(i) = pivot_row(&m, top, col, pt) else { continue };
        m.swap(top, i);
        let p = m[top][col].clone();
        loci.push(p.clone());
        let inv = p.recip()?;
        let prow: Vec<Expr> = m[top].iter().map(|x| if x.is_zero() { Expr::zero() } else { x * &inv }).collect();
        m[top] = prow.clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == top || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                    if x.size() > budget {
                        return Ok(None);
                    }
                }
            }
        }
        pivots.push(col);
        top += 1;
    }
    m.truncate(top);
    Ok(Some(Rref { rows: m, pivots, loci }))
}

/// Rank by fraction-free elimination after clearing row denominators.
/// Aborts with `None` if an entry exceeds `budget` terms.
pub fn symbolic_rank(rows: &[Vec<Expr>], pt: &mut ProbePoint, budget: usize) -> Result<Option<usize>> {
    let mut m: Vec<Vec<Expr>> = rows.iter().map(|r| clear_denominators(r)).collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut prev = Expr::one();
    let mut top = 0;
    for col in 0..ncols {
        if top == m.len() {
            break;
        }
        let Some(i) = pivot_row(&m, top, col, pt) else { continue };
        m.swap(top, i);
        let prow = m[top].clone();
        let p = prow[col].clone();
        for row in m.iter_mut().skip(top + 1) {
            let f = row[col].clone();
            for j in col + 1..ncols {
                row[j] = bareiss_entry(&p, &row[j], &f, &prow[j], &prev)?;
                if row[j].size() > budget {
                    return Ok(None);
                }
            }
            row[col] = Expr::zero();
        }
        prev = p;
        top += 1;
    }
    Ok(Some(top))
}

/// Right nullspace over the expression field from an RREF.
pub fn nullspace_from_rref(r: &Rref, ncols: usize) -> Vec<Vec<Expr>> {
    let mut out = Vec::new();
    for free in 0..ncols {
        if r.pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Expr::zero(); ncols];
        v[free] = Expr::one();
        for (row, &p) in r.rows.iter().zip(&r.pivots) {
            v[p] = -&row[free];
        }
        out.push(v);
    }
    out
}

/// Indices of a maximal set of rows independent at `pt`.
pub fn independent_rows(rows: &[Vec<Q>]) -> Vec<usize> {
    let mut e = Echelon::new();
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| e.insert(r).then_some(i))
        .collect()
}

/// Right nullspace of a symbolic matrix with `ncols` columns. Rows are first
/// thinned to a set independent at a generic probe point, and the result is
/// checked against every row exactly.
pub fn nullspace(rows: &[Vec<Expr>], ncols: usize, probes: &Probes, budget: usize) -> Result<Vec<Vec<Expr>>> {
    if rows.is_empty() {
        return Ok((0..ncols)
            .map(|i| (0..ncols).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect());
    }
    let (rank, mut pt) = generic_rank_at(rows, probes)?;
    let vals = eval_rows(rows, &mut pt)?;
    let keep = independent_rows(&vals);
    debug_assert_eq!(keep.len(), rank);
    let sub: Vec<Vec<Expr>> = keep.iter().map(|&i| rows[i].clone()).collect();
    let r = rref(&sub, &mut pt, budget)?
        .ok_or_else(|| DflatError::Inconclusive("symbolic elimination exceeded its size budget".into()))?;
    if r.pivots.len() != rank {
        return Err(DflatError::RankDisagreement {
            what: "nullspace".into(),
            numeric: rank,
            symbolic: r.pivots.len(),
        });
    }
    let basis = nullspace_from_rref(&r, ncols);
    for row in rows {
        for v in &basis {
            let s = Expr::sum(&row.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>());
            if !s.is_zero() {
                return Err(DflatError::RankDisagreement {
                    what: "nullspace verification".into(),
                    numeric: rank,
                    symbolic: rank + 1,
                });
            }
        }
    }
    Ok(basis)
}

/// Solves `A x = b` for square generically invertible `A`.
pub fn solve(a: &[Vec<Expr>], b: &[Expr], probes: &Probes, budget: usize) -> Result<Vec<Expr>> {
    let n = a.len();
    let aug: Vec<Vec<Expr>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect())
        .collect();
    let (_, mut pt) = generic_rank_at(a, probes)?;
    let r = rref(&aug, &mut pt, budget)?
        .ok_or_else(|| DflatError::Inconclusive("symbolic solve exceeded its size budget".into()))?;
    if r.pivots.len() != n || r.pivots.iter().any(|&p| p >= n) {
        return Err(DflatError::NotInvertible("singular linear system".into()));
    }
    Ok(r.rows.iter().map(|row| row[n].clone()).collect())
}
