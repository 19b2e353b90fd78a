//! Fundamental bundles, first integrals and the contact coordinates that
//! carry a static feedback linearisable system to its Brunovsky form.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Signed;

use crate::error::{DflatError, Result};
use crate::expr::{Expr, Monomial, Poly, Sym, SymKind, Q};
use crate::flags::{DerivedFlag, Signature};
use crate::geometry::{Chart, ControlSystem, CoordMap, Distribution, VectorField};
use crate::goursat::{chain_names, jet_name, BrunovskyForm, SflVerdict};
use crate::linalg;
use crate::Config;

/// How a first integral was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Coordinate,
    Ansatz,
    Supplied,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Coordinate => "coordinate",
            Method::Ansatz => "polynomial-ansatz",
            Method::Supplied => "user-supplied",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstIntegral {
    pub expr: Expr,
    pub method: Method,
}

/// Whether every generator annihilates `s`.
fn passive(s: Sym, gens: &[VectorField], chart: &Chart) -> bool {
    match s.kind() {
        SymKind::Const => true,
        SymKind::Coord => match chart.index_of(s) {
            Some(i) => gens.iter().all(|g| g.comp(i).is_zero()),
            None => true,
        },
        SymKind::Jet { .. } => passive(Sym::time(), gens, chart),
        SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) => passive(a, gens, chart),
    }
}

fn sort_key(e: &Expr) -> (bool, u32, usize, String) {
    let bare = e.as_symbol().is_some_and(|s| s.kind() == SymKind::Coord);
    (!bare, e.num().total_degree() + e.den().total_degree(), e.size(), e.to_string())
}

/// `lcm(a, b)` up to a constant.
fn lcm(a: &Poly, b: &Poly) -> Result<Poly> {
    let r = Expr::from_polys(a.clone(), b.clone())?;
    Ok(a.mul(r.den()))
}

/// Ansatz variables: active coordinates, with `cos`/`sin` for active angles.
enum AnsatzVar {
    Plain(Sym),
    Angle(Sym, Sym),
}

fn ansatz_monomials(vars: &[AnsatzVar], degree: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    for v in vars {
        let mut next = Vec::new();
        for m in &out {
            let d = m.degree();
            for e in 0..=(degree - d) {
                match v {
                    AnsatzVar::Plain(s) => next.push(m.mul(&Monomial::var(*s, e))),
                    AnsatzVar::Angle(c, s) => {
                        next.push(m.mul(&Monomial::var(*c, e)));
                        if e < degree - d {
                            next.push(m.mul(&Monomial::var(*c, e)).mul(&Monomial::var(*s, 1)));
                        }
                    }
                }
            }
        }
        out = next;
    }
    out.retain(|m| !m.is_one());
    out.sort_by(|a, b| a.cmp_named(b));
    out
}

const ANSATZ_LIMIT: usize = 400;

/// Polynomial first integrals of the given degree in active variables with
/// coefficients in the field of passive functions.
fn ansatz(d: &Distribution, degree: u32, cfg: &Config) -> Result<Vec<Expr>> {
    let chart = d.chart();
    let gens = d.gens();
    let mut vars = Vec::new();
    let mut active_syms = Vec::new();
    for &s in chart.syms() {
        if passive(s, gens, chart) {
            continue;
        }
        active_syms.push(s);
        let (si, co) = (Sym::sin_of(s), Sym::cos_of(s));
        let trig = gens.iter().any(|g| g.comps().iter().any(|c| c.symbols().iter().any(|x| *x == si || *x == co)));
        vars.push(AnsatzVar::Plain(s));
        if trig {
            vars.push(AnsatzVar::Angle(co, si));
            active_syms.push(si);
            active_syms.push(co);
        }
    }
    if vars.is_empty() {
        return Ok(vec![]);
    }
    let monos = ansatz_monomials(&vars, degree);
    if monos.len() > ANSATZ_LIMIT {
        return Ok(vec![]);
    }
    let is_active = |s: Sym| active_syms.contains(&s) || s.argument().is_some_and(|a| active_syms.contains(&a));
    let mexpr: Vec<Expr> = monos.iter().map(|m| Expr::from_poly(Poly::monomial(m.clone(), Q::from_integer(1.into())))).collect();
    let mut rows: Vec<Vec<Expr>> = Vec::new();
    for g in gens {
        let images: Vec<Expr> = mexpr.iter().map(|m| g.apply(m)).collect();
        let mut l = Poly::one();
        for e in &images {
            if !e.is_zero() {
                l = lcm(&l, e.den())?;
            }
        }
        let lx = Expr::from_poly(l);
        let mut table: BTreeMap<String, (Monomial, Vec<Poly>)> = BTreeMap::new();
        for (a, e) in images.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let p = &(e * &lx);
            for (m, c) in p.num().terms() {
                let mut act = Monomial::one();
                let mut pas = Monomial::one();
                for &(s, k) in m.factors() {
                    if is_active(s) {
                        act = act.mul(&Monomial::var(s, k));
                    } else {
                        pas = pas.mul(&Monomial::var(s, k));
                    }
                }
                let key = format!("{act:?}");
                let entry = table.entry(key).or_insert_with(|| (act.clone(), vec![Poly::zero(); monos.len()]));
                entry.1[a] = entry.1[a].add(&Poly::monomial(pas, c.clone()));
            }
        }
        for (_, (_, coeffs)) in table {
            rows.push(coeffs.into_iter().map(Expr::from_poly).collect());
        }
    }
    rows.retain(|r| r.iter().any(|e| !e.is_zero()));
    let basis = linalg::nullspace(&rows, monos.len(), &cfg.probes(), cfg.size_budget)?;
    let mut out = Vec::new();
    for v in basis {
        let phi = Expr::sum(&v.iter().zip(&mexpr).map(|(a, m)| a * m).collect::<Vec<_>>());
        let phi = &phi * &Expr::from_poly(phi.den().clone());
        let (_, prim) = phi.num().primitive();
        out.push(Expr::from_poly(positive_lead(&prim, d.chart())));
    }
    Ok(out)
}

/// Sign convention: the lowest-degree term, ties broken by the earliest chart
/// coordinate, gets a positive coefficient.
fn positive_lead(p: &Poly, chart: &Chart) -> Poly {
    let rank = |m: &Monomial| {
        let first = m.factors().iter().filter_map(|(s, _)| chart.index_of(*s)).min().unwrap_or(usize::MAX);
        (m.degree(), first)
    };
    match p.terms().iter().min_by_key(|(m, _)| rank(m)) {
        Some((_, c)) if c.is_negative() => p.neg(),
        _ => p.clone(),
    }
}

/// Differential of `f` as a row over the chart.
fn d_row(chart: &Chart, f: &Expr) -> Vec<Expr> {
    chart.syms().iter().map(|s| f.diff(*s)).collect()
}

/// Finds `count` first integrals of an integrable distribution whose
/// differentials are independent of each other and of `modulo`.
pub fn first_integrals(
    d: &Distribution,
    count: usize,
    modulo: &[Vec<Expr>],
    candidates: &[Expr],
    cfg: &Config,
) -> Result<Vec<FirstIntegral>> {
    let chart = d.chart().clone();
    let mut chosen: Vec<FirstIntegral> = Vec::new();
    let mut rows: Vec<Vec<Expr>> = modulo.to_vec();
    let probes = cfg.probes();
    let mut base_rank = if rows.is_empty() { 0 } else { linalg::generic_rank(&rows, &probes)? };
    let mut consider = |f: Expr, method: Method, chosen: &mut Vec<FirstIntegral>, rows: &mut Vec<Vec<Expr>>| -> Result<()> {
        if chosen.len() >= count || chosen.iter().any(|c| c.expr == f) {
            return Ok(());
        }
        rows.push(d_row(&chart, &f));
        let r = linalg::generic_rank(rows, &probes)?;
        if r > base_rank {
            base_rank = r;
            chosen.push(FirstIntegral { expr: f, method });
        } else {
            rows.pop();
        }
        Ok(())
    };
    let mut coords: Vec<Expr> = chart
        .syms()
        .iter()
        .filter(|s| passive(**s, d.gens(), &chart))
        .map(|s| Expr::sym(*s))
        .collect();
    coords.sort_by_key(sort_key);
    for c in coords {
        consider(c, Method::Coordinate, &mut chosen, &mut rows)?;
    }
    let mut degree = 1;
    while chosen.len() < count && degree <= cfg.degree_budget {
        let mut found = ansatz(d, degree, cfg)?;
        found.sort_by_key(sort_key);
        for f in found {
            consider(f, Method::Ansatz, &mut chosen, &mut rows)?;
        }
        degree += 1;
    }
    for c in candidates {
        if chosen.len() >= count {
            break;
        }
        if d.gens().iter().all(|g| g.apply(c).is_zero()) {
            consider(c.clone(), Method::Supplied, &mut chosen, &mut rows)?;
        }
    }
    if chosen.len() < count {
        return Err(DflatError::NoFirstIntegral { needed: count, found: chosen.len(), budget: cfg.degree_budget });
    }
    Ok(chosen)
}

/// `Pi^0 = Char V^(1)_0`, then `Pi^{l+1} = Pi^l + [Pi^l, Z]` until the
/// bundle has corank `1 + Delta_k`.
pub fn fundamental_bundle(flag: &DerivedFlag, z: &VectorField, cfg: &Config) -> Result<Distribution> {
    fundamental_bundle_along(flag, z, Sym::time(), cfg)
}

/// As [`fundamental_bundle`] with `tau` in place of time.
pub fn fundamental_bundle_along(flag: &DerivedFlag, z: &VectorField, tau: Sym, cfg: &Config) -> Result<Distribution> {
    if z.apply(&Expr::sym(tau)) != Expr::one() {
        return Err(DflatError::Invalid(format!("the section Z must satisfy Z({tau}) = 1")));
    }
    let k = flag.length();
    let chart = flag.chart().clone();
    if k < 2 {
        return Err(DflatError::Invalid("the fundamental bundle needs a flag of length at least two".into()));
    }
    let mut pi = flag.intersection(1)?;
    for _ in 1..k {
        let extra: Vec<VectorField> = pi.gens().iter().map(|g| g.bracket(z)).collect::<Result<_>>()?;
        let grown = pi.with(&extra);
        pi = match grown.rref_basis(cfg) {
            Ok((b, _)) => b,
            Err(_) => grown.independent(cfg)?,
        };
    }
    let delta_k = flag.velocity().last().copied().unwrap_or(1);
    let r = pi.rank(cfg)?;
    if r + 1 + delta_k != chart.dim() || !pi.is_integrable(cfg)? {
        return Err(DflatError::Verification(format!(
            "fundamental bundle has rank {r} in dimension {} or is not integrable",
            chart.dim()
        )));
    }
    Ok(pi)
}

/// Options for naming and seeding the construction.
#[derive(Clone, Debug, Default)]
pub struct ContactOptions {
    /// Chain names, shortest chain first; defaults to `z1, z2, ...`.
    pub names: Option<Vec<String>>,
    /// Candidate fundamental functions to try after the automatic search.
    pub candidates: Vec<Expr>,
}

/// A fundamental function and the chain it starts.
#[derive(Clone, Debug, PartialEq)]
pub struct Fundamental {
    pub order: usize,
    pub chain: String,
    pub integral: FirstIntegral,
}

/// Contact coordinates `t, z_0 = phi, z_s = Z^s phi`.
#[derive(Clone, Debug)]
pub struct ContactTransformation {
    pub signature: Signature,
    pub source: Arc<Chart>,
    pub target: BrunovskyForm,
    /// One entry per target coordinate, in target chart order.
    pub comps: Vec<Expr>,
    pub fundamentals: Vec<Fundamental>,
    pub drift: VectorField,
}

impl ContactTransformation {
    pub fn entries(&self) -> Vec<(String, Expr)> {
        self.target.chart.names().into_iter().zip(self.comps.iter().cloned()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        let i = self.target.chart.names().iter().position(|n| n == name)?;
        Some(&self.comps[i])
    }

    /// The map with its inverse, when elimination succeeds.
    pub fn invert(&self, cfg: &Config) -> Result<CoordMap> {
        CoordMap::new(self.source.clone(), self.target.chart.clone(), self.comps.clone(), cfg)
    }
}

/// Fundamental functions of every order for a static feedback linearisable
/// system, ordered by increasing order.
pub fn fundamental_functions(
    sys: &ControlSystem,
    flag: &DerivedFlag,
    kappa: &Signature,
    candidates: &[Expr],
    cfg: &Config,
) -> Result<Vec<(usize, FirstIntegral)>> {
    let k = flag.length();
    let chart = sys.chart().clone();
    let mut out = Vec::new();
    for j in 1..k {
        let rho = kappa.get(j);
        if rho == 0 {
            continue;
        }
        let low = flag.intersection(j)?;
        let xi: Vec<Vec<Expr>> = flag.cauchy_annihilator(j)?.iter().map(|w| w.comps().to_vec()).collect();
        for f in first_integrals(&low, rho, &xi, candidates, cfg)? {
            out.push((j, f));
        }
    }
    if k == 1 {
        for s in sys.state_syms() {
            out.push((1, FirstIntegral { expr: Expr::sym(s), method: Method::Coordinate }));
        }
        return Ok(out);
    }
    let pi = fundamental_bundle(flag, &sys.drift_field(), cfg)?;
    let dt = d_row(&chart, &Expr::sym(Sym::time()));
    let top_count = kappa.get(k);
    for f in first_integrals(&pi, top_count, &[dt], candidates, cfg)? {
        out.push((k, f));
    }
    Ok(out)
}

/// Runs the contact procedure on a system that passed the static feedback
/// test and verifies the result.
pub fn contact_coordinates(
    sys: &ControlSystem,
    flag: &DerivedFlag,
    verdict: &SflVerdict,
    opts: &ContactOptions,
    cfg: &Config,
) -> Result<ContactTransformation> {
    if !verdict.is_sfl {
        return Err(DflatError::NotSfl(verdict.failures.join("; ")));
    }
    let kappa = verdict.goursat.signature.clone().expect("sfl verdicts carry a signature");
    let funs = fundamental_functions(sys, flag, &kappa, &opts.candidates, cfg)?;
    let chains = match &opts.names {
        Some(names) => {
            if names.len() != funs.len() {
                return Err(DflatError::Invalid(format!("{} chain names for {} chains", names.len(), funs.len())));
            }
            names.iter().cloned().zip(funs.iter().map(|f| f.0)).collect()
        }
        None => chain_names(&kappa, "z"),
    };
    let target = BrunovskyForm::with_chains(&kappa, chains.clone())?;
    let z = sys.drift_field();
    let mut comps = vec![Expr::sym(Sym::time())];
    let mut fundamentals = Vec::new();
    for ((name, order), (_, f)) in chains.iter().zip(&funs) {
        let mut cur = f.expr.clone();
        for _ in 0..=*order {
            comps.push(cur.clone());
            cur = z.apply(&cur);
        }
        fundamentals.push(Fundamental { order: *order, chain: name.clone(), integral: f.clone() });
    }
    let ct = ContactTransformation { signature: kappa, source: sys.chart().clone(), target, comps, fundamentals, drift: z };
    verify_contact(sys, &ct, cfg)?;
    Ok(ct)
}

/// Checks that the coordinates form a local diffeomorphism carrying the
/// system to the Brunovsky form: `Z z_s = z_{s+1}` below the top order,
/// lower jets free of controls, top jets of full rank in the controls.
pub fn verify_contact(sys: &ControlSystem, ct: &ContactTransformation, cfg: &Config) -> Result<()> {
    let tchart = &ct.target.chart;
    let controls = sys.control_syms();
    let mut top_rows = Vec::new();
    for (i, role) in tchart.roles().iter().enumerate() {
        let crate::geometry::Role::Jet { var, order } = role else { continue };
        let chain_order = ct.target.chains.iter().find(|c| &c.0 == var).unwrap().1 as u32;
        let e = &ct.comps[i];
        if *order < chain_order {
            let next = tchart.index_of(Sym::coord(&jet_name(var, *order as usize + 1))).unwrap();
            if ct.drift.apply(e) != ct.comps[next] {
                return Err(DflatError::Verification(format!("Z {} is not {}", tchart.sym(i), tchart.sym(next))));
            }
            if controls.iter().any(|u| !e.diff(*u).is_zero()) {
                return Err(DflatError::Verification(format!("{} depends on the controls", tchart.sym(i))));
            }
        } else {
            top_rows.push(controls.iter().map(|u| e.diff(*u)).collect::<Vec<_>>());
        }
    }
    if linalg::generic_rank(&top_rows, &cfg.probes())? != controls.len() {
        return Err(DflatError::Verification("top-order coordinates are degenerate in the controls".into()));
    }
    let jac: Vec<Vec<Expr>> = ct.comps.iter().map(|c| d_row(sys.chart(), c)).collect();
    if linalg::generic_rank(&jac, &cfg.probes())? != sys.chart().dim() {
        return Err(DflatError::Verification("contact coordinates are not independent".into()));
    }
    Ok(())
}
