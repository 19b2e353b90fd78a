//! Control admissible symmetries, quotient control systems and the contact
//! sub-connection on `J^kappa x G`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::contact::{first_integrals, ContactTransformation};
use crate::error::{DflatError, Result};
use crate::expr::{Expr, Sym, Q};
use crate::flags::Signature;
use crate::geometry::{solve_partial, Chart, ControlSystem, CoordMap, Distribution, Role, VectorField};
use crate::goursat::{jet_name, BrunovskyForm};
use crate::linalg::{self, Echelon};
use crate::Config;

/// A finite-dimensional Lie algebra of vector fields on a system chart.
#[derive(Clone, Debug)]
pub struct SymmetryAlgebra {
    chart: Arc<Chart>,
    gens: Vec<VectorField>,
    /// `structure[a][b][c]`: coefficient of `X_c` in `[X_a, X_b]`.
    structure: Vec<Vec<Vec<Q>>>,
    abelian: bool,
}

impl SymmetryAlgebra {
    /// Computes the structure constants, which must be constant.
    pub fn new(chart: Arc<Chart>, gens: Vec<VectorField>, cfg: &Config) -> Result<Self> {
        if gens.is_empty() {
            return Err(DflatError::Invalid("empty symmetry algebra".into()));
        }
        if gens.iter().any(|g| g.chart() != &chart) {
            return Err(DflatError::Invalid("generators live on another chart".into()));
        }
        let r = gens.len();
        let d = Distribution::new(chart.clone(), gens.clone())?;
        if d.rank(cfg)? != r {
            return Err(DflatError::Invalid("symmetry generators are dependent".into()));
        }
        let mut structure = vec![vec![vec![Q::zero(); r]; r]; r];
        for ((a, b), br) in d.pair_brackets()? {
            let c = constant_coefficients(&gens, &br, cfg)?;
            for (k, v) in c.into_iter().enumerate() {
                structure[b][a][k] = -&v;
                structure[a][b][k] = v;
            }
        }
        let abelian = structure.iter().flatten().flatten().all(Q::is_zero);
        Ok(SymmetryAlgebra { chart, gens, structure, abelian })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn gens(&self) -> &[VectorField] {
        &self.gens
    }

    pub fn dim(&self) -> usize {
        self.gens.len()
    }

    pub fn structure(&self) -> &[Vec<Vec<Q>>] {
        &self.structure
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    pub fn distribution(&self) -> Distribution {
        Distribution::new(self.chart.clone(), self.gens.clone()).expect("generators share the chart")
    }
}

/// Constant `c` with `v = sum c_k X_k`, found at probe points and checked
/// symbolically.
fn constant_coefficients(gens: &[VectorField], v: &VectorField, cfg: &Config) -> Result<Vec<Q>> {
    let r = gens.len();
    let probes = cfg.probes();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for i in 0..(r as u64 + 3) {
        let mut pt = probes.point(i);
        let cols: Vec<Vec<Q>> = gens.iter().map(|g| g.eval(&mut pt)).collect::<std::result::Result<_, _>>()?;
        let rhs = v.eval(&mut pt)?;
        for (j, b) in rhs.into_iter().enumerate() {
            let mut row: Vec<Q> = cols.iter().map(|c| c[j].clone()).collect();
            row.push(-b);
            rows.push(row);
        }
    }
    let ns = linalg::nullspace_q(&rows, r + 1);
    let sol = ns.iter().find(|n| !n[r].is_zero());
    let fail = || DflatError::Invalid("generators do not close under the bracket with constant coefficients".into());
    let sol = sol.ok_or_else(fail)?;
    let c: Vec<Q> = sol[..r].iter().map(|x| x / &sol[r]).collect();
    let coeffs: Vec<Expr> = c.iter().map(|q| Expr::rational(q.clone())).collect();
    let combo = VectorField::combination(v.chart(), &coeffs, gens);
    if !v.sub(&combo).is_zero() {
        return Err(fail());
    }
    Ok(c)
}

/// Outcome of the control admissibility conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub symmetry: bool,
    pub time_invariant: bool,
    pub projection_rank: bool,
    pub dimension: bool,
    pub strongly_transverse: bool,
    pub failures: Vec<String>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_control_admissible(sys: &ControlSystem, alg: &SymmetryAlgebra, cfg: &Config) -> Result<Admissibility> {
    if alg.chart() != sys.chart() {
        return Err(DflatError::Invalid("symmetry algebra and system use different charts".into()));
    }
    let v = sys.distribution();
    let r = alg.dim();
    let mut failures = Vec::new();

    let brackets: Vec<VectorField> = alg
        .gens()
        .iter()
        .flat_map(|x| v.gens().iter().map(move |y| x.bracket(y)))
        .collect::<Result<_>>()?;
    let symmetry = v.contains_all(&brackets, cfg)?;
    if !symmetry {
        failures.push("symmetry: [X, V] is not contained in V".into());
    }

    let t = sys.chart().time_index();
    let time_invariant = alg.gens().iter().all(|g| g.comp(t).is_zero());
    if !time_invariant {
        failures.push("time invariance: X(t) != 0".into());
    }

    let mut cols = vec![t];
    cols.extend_from_slice(sys.states());
    let rows: Vec<Vec<Expr>> = alg.gens().iter().map(|g| cols.iter().map(|&i| g.comp(i).clone()).collect()).collect();
    let projection_rank = linalg::generic_rank(&rows, &cfg.probes())? == r;
    if !projection_rank {
        failures.push("projection: the (t, x) parts of the generators are dependent".into());
    }

    let dimension = r < sys.states().len();
    if !dimension {
        failures.push(format!("dimension: dim Gamma = {r} is not below the number of states"));
    }

    let pairs: Vec<VectorField> = v.pair_brackets()?.into_iter().map(|(_, b)| b).collect();
    let v1 = v.with(&pairs);
    let strongly_transverse = v1.union(&alg.distribution()).rank(cfg)? == v1.rank(cfg)? + r;
    if !strongly_transverse {
        failures.push("strong transversality: Gamma meets V^(1)".into());
    }

    Ok(Admissibility { symmetry, time_invariant, projection_rank, dimension, strongly_transverse, failures })
}

/// The quotient of a system by a symmetry algebra.
#[derive(Clone, Debug)]
pub struct QuotientData {
    /// Invariants on the system chart, states `q` first, then controls `v`.
    pub invariants: Vec<(String, Expr)>,
    pub state_count: usize,
    pub system: ControlSystem,
}

impl QuotientData {
    pub fn chart(&self) -> &Arc<Chart> {
        self.system.chart()
    }

    /// `q` and `v` as functions on the system chart, keyed by quotient symbol.
    pub fn projection(&self) -> HashMap<Sym, Expr> {
        self.invariants.iter().map(|(n, e)| (Sym::coord(n), e.clone())).collect()
    }

    /// Pulls a function on the quotient back to the system chart.
    pub fn pull(&self, f: &Expr) -> Result<Expr> {
        Ok(f.subst(&self.projection())?)
    }
}

fn dummy(name: &str) -> Sym {
    Sym::coord(&format!("{name}'"))
}

/// Computes invariants when none are given, splits them into states and
/// controls, and rewrites the drift in invariant coordinates.
pub fn quotient_system(
    sys: &ControlSystem,
    alg: &SymmetryAlgebra,
    invariants: Option<Vec<(String, Expr)>>,
    cfg: &Config,
) -> Result<QuotientData> {
    let chart = sys.chart();
    let n = sys.states().len();
    let m = sys.controls().len();
    let r = alg.dim();
    let need = n + m - r;
    let controls = sys.control_syms();
    let depends_on_u = |e: &Expr| controls.iter().any(|u| e.depends_on(*u));

    let named: Vec<(String, Expr)> = match invariants {
        Some(list) => list,
        None => {
            let dt: Vec<Expr> = chart.syms().iter().map(|s| if *s == Sym::time() { Expr::one() } else { Expr::zero() }).collect();
            let found = first_integrals(&alg.distribution(), need, &[dt], &[], cfg)?;
            let (mut qs, mut vs) = (Vec::new(), Vec::new());
            for f in found {
                if depends_on_u(&f.expr) {
                    vs.push(f.expr);
                } else {
                    qs.push(f.expr);
                }
            }
            let mut out: Vec<(String, Expr)> = qs.into_iter().enumerate().map(|(i, e)| (format!("q{}", i + 1), e)).collect();
            out.extend(vs.into_iter().enumerate().map(|(i, e)| (format!("v{}", i + 1), e)));
            out
        }
    };
    if named.len() != need {
        return Err(DflatError::NotExpressibleInInvariants(format!("{} invariants given, {need} needed", named.len())));
    }
    for (name, e) in &named {
        if let Some(x) = alg.gens().iter().find(|g| !g.apply(e).is_zero()) {
            return Err(DflatError::Invalid(format!("{name} is not annihilated by {x}")));
        }
    }
    let mut order: Vec<usize> = (0..need).filter(|&i| !depends_on_u(&named[i].1)).collect();
    let state_count = order.len();
    order.extend((0..need).filter(|&i| depends_on_u(&named[i].1)));
    let named: Vec<(String, Expr)> = order.into_iter().map(|i| named[i].clone()).collect();
    if state_count != n - r {
        return Err(DflatError::NotExpressibleInInvariants(format!(
            "{state_count} control-free invariants, expected {}",
            n - r
        )));
    }
    let v_rows: Vec<Vec<Expr>> = named[state_count..].iter().map(|(_, e)| controls.iter().map(|u| e.diff(*u)).collect()).collect();
    if linalg::generic_rank(&v_rows, &cfg.probes())? != m {
        return Err(DflatError::NotExpressibleInInvariants("control invariants are degenerate in the controls".into()));
    }

    let eqs: Vec<Expr> = named.iter().map(|(name, e)| e - &Expr::sym(dummy(name))).collect();
    let unknowns: Vec<Sym> = chart.syms().iter().copied().filter(|s| *s != Sym::time()).collect();
    let sol = solve_partial(&eqs, &unknowns)?;
    let rename: HashMap<Sym, Expr> = named.iter().map(|(name, _)| (dummy(name), Expr::coord(name))).collect();
    let mut coords = vec![(Sym::time(), Role::Time)];
    for (i, (name, _)) in named.iter().enumerate() {
        coords.push((Sym::coord(name), if i < state_count { Role::State } else { Role::Control }));
    }
    let qchart = Chart::new(coords)?;
    let allowed: Vec<Sym> = qchart.syms().to_vec();
    let z = sys.drift_field();
    let mut drift = Vec::new();
    for (name, q) in &named[..state_count] {
        let zq = z.apply(q);
        let e = zq.subst(&sol)?.subst(&rename)?;
        if let Some(bad) = e.coords().into_iter().find(|s| !allowed.contains(s)) {
            return Err(DflatError::NotExpressibleInInvariants(format!("Z({name}) still depends on {bad}")));
        }
        drift.push(e);
    }
    let system = ControlSystem::new(qchart, drift)?;
    let data = QuotientData { invariants: named, state_count, system };
    for ((name, q), f) in data.invariants[..state_count].iter().zip(data.system.drift()) {
        if data.pull(f)? != z.apply(q) {
            return Err(DflatError::Verification(format!("quotient drift of {name} does not pull back to Z({name})")));
        }
    }
    Ok(data)
}

/// Group coordinates for generators whose state parts depend on `t` only
/// and that do not move the controls: `eps = C x_S` with `X_a(eps^b) = delta`.
pub fn derive_group_coordinates(sys: &ControlSystem, alg: &SymmetryAlgebra, cfg: &Config) -> Result<Vec<Expr>> {
    let t = Sym::time();
    let unsupported = || DflatError::Invalid("group coordinates must be supplied for these generators".into());
    for g in alg.gens() {
        if sys.controls().iter().any(|&i| !g.comp(i).is_zero()) {
            return Err(unsupported());
        }
        if sys.states().iter().any(|&i| g.comp(i).coords().into_iter().any(|s| s != t)) {
            return Err(unsupported());
        }
    }
    let r = alg.dim();
    let mut pt = cfg.probes().point(0);
    let mut e = Echelon::new();
    let mut cols = Vec::new();
    for &i in sys.states() {
        let col: Vec<Q> = alg.gens().iter().map(|g| g.comp(i).eval(&mut pt)).collect::<std::result::Result<_, _>>()?;
        if e.insert(&col) {
            cols.push(i);
        }
        if cols.len() == r {
            break;
        }
    }
    if cols.len() < r {
        return Err(unsupported());
    }
    let a: Vec<Vec<Expr>> = alg.gens().iter().map(|g| cols.iter().map(|&i| g.comp(i).clone()).collect()).collect();
    let xs: Vec<Expr> = cols.iter().map(|&i| Expr::sym(sys.chart().sym(i))).collect();
    let mut eps = Vec::new();
    for b in 0..r {
        let rhs: Vec<Expr> = (0..r).map(|a| if a == b { Expr::one() } else { Expr::zero() }).collect();
        let c = linalg::solve(&a, &rhs, &cfg.probes(), cfg.size_budget)?;
        eps.push(Expr::sum(&c.iter().zip(&xs).map(|(ci, x)| ci * x).collect::<Vec<_>>()));
    }
    verify_group_coordinates(sys, alg, &eps)?;
    Ok(eps)
}

/// `X_a(eps^b) = delta_ab` with `eps` free of the controls.
pub fn verify_group_coordinates(sys: &ControlSystem, alg: &SymmetryAlgebra, eps: &[Expr]) -> Result<()> {
    if eps.len() != alg.dim() {
        return Err(DflatError::Invalid(format!("{} group coordinates for {} generators", eps.len(), alg.dim())));
    }
    for (b, e) in eps.iter().enumerate() {
        if sys.control_syms().iter().any(|u| e.depends_on(*u)) {
            return Err(DflatError::Invalid(format!("group coordinate {e} depends on the controls")));
        }
        for (a, g) in alg.gens().iter().enumerate() {
            let want = if a == b { Expr::one() } else { Expr::zero() };
            if g.apply(e) != want {
                return Err(DflatError::Verification(format!("X{}(eps{}) is not {want}", a + 1, b + 1)));
            }
        }
    }
    Ok(())
}

/// `H_G = span{D_t + sum lambda^a d/d eps^a, d/d z_top}` on `J^kappa x G`.
#[derive(Clone, Debug)]
pub struct SubConnection {
    pub base: BrunovskyForm,
    pub group: Vec<Sym>,
    pub chart: Arc<Chart>,
    pub lambda: Vec<Expr>,
    /// The sub-connection as a control system with the top jets as controls.
    pub system: ControlSystem,
    /// Components of the trivialization on the original chart, when known.
    pub map: Option<(Arc<Chart>, Vec<Expr>)>,
}

impl SubConnection {
    /// Builds the normal form from chains, group coordinate names and the
    /// coefficients `lambda`, which must not depend on the group.
    pub fn from_normal_form(chains: Vec<(String, usize)>, group: Vec<String>, lambda: Vec<Expr>) -> Result<Self> {
        if group.len() != lambda.len() {
            return Err(DflatError::Invalid(format!("{} coefficients for {} group coordinates", lambda.len(), group.len())));
        }
        let orders: Vec<usize> = chains.iter().map(|c| c.1).collect();
        let base = BrunovskyForm::with_chains(&Signature::from_orders(&orders), chains)?;
        let mut coords: Vec<(Sym, Role)> = base.chart.syms().iter().copied().zip(base.chart.roles().iter().cloned()).collect();
        let group: Vec<Sym> = group.iter().map(|g| Sym::coord(g)).collect();
        coords.extend(group.iter().map(|g| (*g, Role::Group)));
        let chart = Chart::new(coords)?;
        for (a, l) in lambda.iter().enumerate() {
            if let Some(s) = l.coords().into_iter().find(|s| chart.index_of(*s).is_none_or(|i| *chart.role(i) == Role::Group)) {
                return Err(DflatError::NormalFormViolation(format!("lambda{} depends on {s}", a + 1)));
            }
        }
        let mut states: Vec<usize> = base.system.states().to_vec();
        let controls: Vec<usize> = base.system.controls().to_vec();
        let mut drift: Vec<Expr> = base.system.drift().to_vec();
        let offset = base.chart.dim();
        states.extend(offset..offset + group.len());
        drift.extend(lambda.iter().cloned());
        let system = ControlSystem::with_split(chart.clone(), states, controls, drift)?;
        Ok(SubConnection { base, group, chart, lambda, system, map: None })
    }

    pub fn signature(&self) -> &Signature {
        &self.base.signature
    }

    pub fn chains(&self) -> &[(String, usize)] {
        &self.base.chains
    }

    pub fn distribution(&self) -> Distribution {
        self.system.distribution()
    }

    /// Checks that `comps` (one per chart coordinate, on the chart of `sys`)
    /// carry `sys` onto this normal form: composition with the drift, control
    /// directions onto the top jets, and full Jacobian rank.
    pub fn verify_map(&self, sys: &ControlSystem, comps: &[Expr], cfg: &Config) -> Result<()> {
        if comps.len() != self.chart.dim() || sys.chart().dim() != self.chart.dim() {
            return Err(DflatError::Invalid("trivialization has the wrong dimension".into()));
        }
        let forward: HashMap<Sym, Expr> = self.chart.syms().iter().copied().zip(comps.iter().cloned()).collect();
        let z = sys.drift_field();
        if comps[self.chart.time_index()] != Expr::sym(Sym::time()) {
            return Err(DflatError::NormalFormViolation("the trivialization does not preserve t".into()));
        }
        let controls = sys.control_syms();
        for (&i, f) in self.system.states().iter().zip(self.system.drift()) {
            let lhs = z.apply(&comps[i]);
            let rhs = f.subst(&forward)?;
            if lhs != rhs {
                return Err(DflatError::NormalFormViolation(format!(
                    "Z({}) = {lhs} does not match {f}",
                    self.chart.sym(i)
                )));
            }
            if controls.iter().any(|u| comps[i].depends_on(*u)) {
                return Err(DflatError::NormalFormViolation(format!("{} depends on the controls", self.chart.sym(i))));
            }
        }
        let top: Vec<Vec<Expr>> = self
            .system
            .controls()
            .iter()
            .map(|&i| controls.iter().map(|u| comps[i].diff(*u)).collect())
            .collect();
        if linalg::generic_rank(&top, &cfg.probes())? != controls.len() {
            return Err(DflatError::NormalFormViolation("control directions do not map onto the top jets".into()));
        }
        let jac: Vec<Vec<Expr>> = comps.iter().map(|c| sys.chart().syms().iter().map(|s| c.diff(*s)).collect()).collect();
        if linalg::generic_rank(&jac, &cfg.probes())? != self.chart.dim() {
            return Err(DflatError::NormalFormViolation("trivialization is degenerate".into()));
        }
        Ok(())
    }

    /// Attaches a trivialization after verifying it.
    pub fn with_map(mut self, sys: &ControlSystem, comps: Vec<Expr>, cfg: &Config) -> Result<Self> {
        self.verify_map(sys, &comps, cfg)?;
        self.map = Some((sys.chart().clone(), comps));
        Ok(self)
    }

    /// The trivialization component of a chart coordinate, on the original chart.
    pub fn component(&self, name: &str) -> Option<&Expr> {
        let (_, comps) = self.map.as_ref()?;
        let i = self.chart.index_of(Sym::lookup(name)?)?;
        Some(&comps[i])
    }
}

/// Assembles `(phi o pi) x eps`, inverts it, reads off `lambda` and checks
/// the normal form. Group coordinate names default to `e1, e2, ...`.
pub fn trivialize(
    sys: &ControlSystem,
    alg: &SymmetryAlgebra,
    quotient: &QuotientData,
    ct: &ContactTransformation,
    eps: &[(String, Expr)],
    cfg: &Config,
) -> Result<SubConnection> {
    if !alg.is_abelian() {
        return Err(DflatError::Invalid("non-abelian symmetry algebras need a supplied right-invariant frame".into()));
    }
    let exprs: Vec<Expr> = eps.iter().map(|e| e.1.clone()).collect();
    verify_group_coordinates(sys, alg, &exprs)?;
    let mut comps = ct.comps.iter().map(|c| quotient.pull(c)).collect::<Result<Vec<_>>>()?;
    comps.extend(exprs.iter().cloned());
    let names: Vec<String> = eps.iter().map(|e| e.0.clone()).collect();
    let mut coords: Vec<(Sym, Role)> = ct.target.chart.syms().iter().copied().zip(ct.target.chart.roles().iter().cloned()).collect();
    coords.extend(names.iter().map(|n| (Sym::coord(n), Role::Group)));
    let target = Chart::new(coords)?;
    let map = CoordMap::new(sys.chart().clone(), target, comps.clone(), cfg)?;
    let z = sys.drift_field();
    let lambda = exprs.iter().map(|e| map.to_target(&z.apply(e))).collect::<Result<Vec<_>>>()?;
    SubConnection::from_normal_form(ct.target.chains.clone(), names, lambda)?.with_map(sys, comps, cfg)
}

/// Default group coordinate names.
pub fn group_names(r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("e{i}")).collect()
}

/// Names of the top-order jet of each chain.
pub fn top_jets(chains: &[(String, usize)]) -> Vec<String> {
    chains.iter().map(|(v, o)| jet_name(v, *o)).collect()
}
