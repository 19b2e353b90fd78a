//! Partial contact curve reduction, prolongation plans, dynamic
//! compensators, flat outputs and explicit solutions.

use std::collections::HashMap;
use std::fmt;

use crate::contact::{contact_coordinates, ContactOptions, ContactTransformation};
use crate::error::{DflatError, Result};
use crate::expr::{Expr, Sym};
use crate::flags::{DerivedFlag, Signature};
use crate::geometry::{solve_equations, Chart, ControlSystem, Role};
use crate::goursat::{jet_name, sfl_test, SflVerdict};
use crate::symmetry::SubConnection;
use crate::{par, Config};

/// `f` for a single function, `f1, f2, ...` otherwise.
pub fn function_names(n: usize) -> Vec<String> {
    if n == 1 {
        return vec!["f".into()];
    }
    (1..=n).map(|i| format!("f{i}")).collect()
}

/// `H_G` restricted to partial contact curves along some chains.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// Chains replaced by arbitrary functions, with their orders.
    pub nu: Vec<(String, usize)>,
    pub functions: Vec<String>,
    pub system: ControlSystem,
}

impl Reduction {
    pub fn nu_signature(&self) -> Signature {
        Signature::from_orders(&self.nu.iter().map(|c| c.1).collect::<Vec<_>>())
    }
}

/// Substitutes `z_l -> D(f, l)(t)` for every chain in `along`.
pub fn reduce(h: &SubConnection, along: &[String]) -> Result<Reduction> {
    let chains = h.chains();
    let mut nu = Vec::new();
    for a in along {
        let c = chains
            .iter()
            .find(|c| &c.0 == a)
            .ok_or_else(|| DflatError::Invalid(format!("{a} is not a chain of the sub-connection")))?;
        nu.push(c.clone());
    }
    if nu.is_empty() || nu.len() == chains.len() {
        return Err(DflatError::Invalid("a reduction needs a proper nonempty set of chains".into()));
    }
    let functions = function_names(nu.len());
    let mut subs = HashMap::new();
    for ((var, order), f) in nu.iter().zip(&functions) {
        for l in 0..=*order {
            subs.insert(Sym::coord(&jet_name(var, l)), Expr::jet(f, l as u32));
        }
    }
    let mut coords = vec![(Sym::time(), Role::Time)];
    let mut states = Vec::new();
    let mut controls = Vec::new();
    let mut drift = Vec::new();
    for (var, order) in chains.iter().filter(|c| !along.contains(&c.0)) {
        for l in 0..=*order {
            let i = coords.len();
            coords.push((Sym::coord(&jet_name(var, l)), Role::Jet { var: var.clone(), order: l as u32 }));
            if l == *order {
                controls.push(i);
            } else {
                states.push(i);
                drift.push(Expr::coord(&jet_name(var, l + 1)));
            }
        }
    }
    for (g, lam) in h.group.iter().zip(&h.lambda) {
        states.push(coords.len());
        coords.push((*g, Role::Group));
        drift.push(lam.subst(&subs)?);
    }
    let chart = Chart::new(coords)?;
    let system = ControlSystem::with_split(chart, states, controls, drift)?;
    Ok(Reduction { nu, functions, system })
}

/// Static feedback analysis of a reduction.
#[derive(Clone, Debug)]
pub struct ReducedAnalysis {
    pub verdict: SflVerdict,
    pub k_bar: usize,
    pub contact: Option<ContactTransformation>,
    /// Highest jet order of each function in the top contact coordinates.
    pub top_orders: Vec<(String, u32)>,
    pub contact_error: Option<String>,
}

impl ReducedAnalysis {
    pub fn is_sfl(&self) -> bool {
        self.verdict.is_sfl
    }

    pub fn signature(&self) -> Option<&Signature> {
        self.verdict.goursat.signature.as_ref()
    }
}

pub fn analyze_reduction(red: &Reduction, candidates: &[Expr], cfg: &Config) -> Result<ReducedAnalysis> {
    let (verdict, flag) = sfl_test(&red.system, cfg)?;
    let k_bar = flag.length();
    let mut out = ReducedAnalysis { verdict, k_bar, contact: None, top_orders: vec![], contact_error: None };
    if !out.verdict.is_sfl {
        return Ok(out);
    }
    let opts = ContactOptions { names: None, candidates: candidates.to_vec() };
    match contact_coordinates(&red.system, &flag, &out.verdict, &opts, cfg) {
        Ok(ct) => {
            out.top_orders = top_jet_orders(&ct, &red.functions);
            out.contact = Some(ct);
        }
        Err(e) => out.contact_error = Some(e.to_string()),
    }
    Ok(out)
}

fn top_jet_orders(ct: &ContactTransformation, functions: &[String]) -> Vec<(String, u32)> {
    let tops: Vec<&Expr> = ct
        .target
        .chart
        .roles()
        .iter()
        .zip(&ct.comps)
        .filter(|(r, _)| match r {
            Role::Jet { var, order } => ct.target.chains.iter().any(|c| &c.0 == var && c.1 as u32 == *order),
            _ => false,
        })
        .map(|(_, e)| e)
        .collect();
    functions
        .iter()
        .map(|f| (f.clone(), tops.iter().filter_map(|e| e.jet_order(f)).max().unwrap_or(0)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    Exact,
    Bound,
    Refined,
}

impl PlanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanMode::Exact => "exact",
            PlanMode::Bound => "bound",
            PlanMode::Refined => "refined",
        }
    }
}

/// Target orders for the chains along which `H_G` is prolonged.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongationPlan {
    pub mode: PlanMode,
    /// The reduced chains with their original orders.
    pub base: Vec<(String, usize)>,
    /// The same chains with their prolonged orders.
    pub orders: Vec<(String, usize)>,
}

impl ProlongationPlan {
    pub fn nu(&self) -> Signature {
        Signature::from_orders(&self.base.iter().map(|c| c.1).collect::<Vec<_>>())
    }

    pub fn nu_prime(&self) -> Signature {
        Signature::from_orders(&self.orders.iter().map(|c| c.1).collect::<Vec<_>>())
    }

    /// Added orders per chain.
    pub fn extra(&self) -> Vec<(String, usize)> {
        self.base.iter().zip(&self.orders).map(|(b, o)| (b.0.clone(), o.1 - b.1)).collect()
    }

    /// Number of jet coordinates added, `N_{nu' - nu}`.
    pub fn added_dim(&self) -> usize {
        self.extra().iter().map(|e| e.1).sum()
    }
}

impl fmt::Display for ProlongationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.base.iter().zip(&self.orders).map(|(b, o)| format!("{}: {} -> {}", b.0, b.1, o.1)).collect();
        write!(f, "{} [{}]", self.mode.as_str(), parts.join(", "))
    }
}

pub fn prolongation_plan(red: &Reduction, analysis: &ReducedAnalysis, mode: PlanMode) -> Result<ProlongationPlan> {
    if !analysis.is_sfl() {
        return Err(DflatError::NotSfl("the reduction is not static feedback linearisable".into()));
    }
    let orders = match mode {
        PlanMode::Bound | PlanMode::Refined => {
            red.nu.iter().map(|(v, o)| (v.clone(), o + 2 * analysis.k_bar - 1)).collect()
        }
        PlanMode::Exact => {
            if analysis.contact.is_none() {
                return Err(DflatError::Inconclusive(format!(
                    "exact plan needs the reduced contact coordinates: {}",
                    analysis.contact_error.as_deref().unwrap_or("not computed")
                )));
            }
            red.nu
                .iter()
                .zip(&analysis.top_orders)
                .map(|((v, o), (_, t))| (v.clone(), (*o).max(*t as usize)))
                .collect()
        }
    };
    Ok(ProlongationPlan { mode, base: red.nu.clone(), orders })
}

/// `pr H_G`: the planned chains extended, everything else unchanged.
pub fn prolong(h: &SubConnection, plan: &ProlongationPlan) -> Result<SubConnection> {
    let chains = h
        .chains()
        .iter()
        .map(|(v, o)| {
            let new = plan.orders.iter().find(|c| &c.0 == v).map_or(*o, |c| c.1);
            (v.clone(), new)
        })
        .collect();
    let group = h.group.iter().map(|g| g.name().to_string()).collect();
    SubConnection::from_normal_form(chains, group, h.lambda.clone())
}

#[derive(Clone, Debug)]
pub struct Prolonged {
    pub plan: ProlongationPlan,
    pub sub: SubConnection,
    pub verdict: SflVerdict,
    pub flag: DerivedFlag,
}

impl Prolonged {
    pub fn signature(&self) -> Option<&Signature> {
        self.verdict.goursat.signature.as_ref()
    }

    /// Contact coordinates of `pr H_G`.
    pub fn linearize(&self, opts: &ContactOptions, cfg: &Config) -> Result<ContactTransformation> {
        contact_coordinates(&self.sub.system, &self.flag, &self.verdict, opts, cfg)
    }
}

/// Prolongs and runs the static feedback test, which must pass.
pub fn prolong_and_linearize(h: &SubConnection, plan: &ProlongationPlan, cfg: &Config) -> Result<Prolonged> {
    let sub = prolong(h, plan)?;
    let (verdict, flag) = sfl_test(&sub.system, cfg)?;
    if !verdict.is_sfl {
        return Err(DflatError::ProlongationInsufficient(format!("{plan}: {}", verdict.failures.join("; "))));
    }
    Ok(Prolonged { plan: plan.clone(), sub, verdict, flag })
}

/// Lowers each chain order in turn while `pr H_G` stays linearisable.
pub fn refine_plan(h: &SubConnection, plan: &ProlongationPlan, cfg: &Config) -> Result<ProlongationPlan> {
    let mut cur = plan.clone();
    cur.mode = PlanMode::Refined;
    for i in 0..cur.orders.len() {
        while cur.orders[i].1 > cur.base[i].1 {
            let mut next = cur.clone();
            next.orders[i].1 -= 1;
            let (v, _) = sfl_test(&prolong(h, &next)?.system, cfg)?;
            if !v.is_sfl {
                break;
            }
            cur = next;
        }
    }
    Ok(cur)
}

/// `u = beta(t, x, y, W)` with integrator dynamics for `y`.
#[derive(Clone, Debug)]
pub struct DynamicCompensator {
    /// Top jets of the prolonged chains as functions of `(t, x, u)`.
    pub outputs: Vec<(String, Expr)>,
    pub y: Vec<String>,
    /// Grown chain variable, its order in `H_G` and its integrator states.
    pub chains: Vec<(String, usize, Vec<String>)>,
    pub w: Vec<String>,
    pub beta: Vec<(Sym, Expr)>,
    /// The compensator only renames inputs.
    pub chi_identity: bool,
    pub system: ControlSystem,
    pub verdict: SflVerdict,
    pub flag: DerivedFlag,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Builds the compensator from the trivialization of `h`, verifies the
/// solution correspondence and the static feedback property.
pub fn dynamic_compensator(
    sys: &ControlSystem,
    h: &SubConnection,
    plan: &ProlongationPlan,
    cfg: &Config,
) -> Result<DynamicCompensator> {
    if h.map.is_none() {
        return Err(DflatError::Invalid("the sub-connection carries no trivialization".into()));
    }
    let grown: Vec<(String, usize, usize)> = plan
        .base
        .iter()
        .zip(&plan.orders)
        .filter(|(b, o)| o.1 > b.1)
        .map(|(b, o)| (b.0.clone(), b.1, o.1 - b.1))
        .collect();
    if grown.is_empty() {
        return Err(DflatError::Invalid("the plan adds no orders".into()));
    }
    let single = grown.len() == 1;
    let mut outputs = Vec::new();
    let mut chains: Vec<Vec<String>> = Vec::new();
    for (a, (var, order, extra)) in grown.iter().enumerate() {
        let name = jet_name(var, *order);
        let top = h
            .component(&name)
            .ok_or_else(|| DflatError::Invalid(format!("no trivialization component for {name}")))?
            .clone();
        outputs.push((name, top));
        let ys = (1..=*extra)
            .map(|i| if single { format!("y{i}") } else { format!("y{}_{i}", a + 1) })
            .collect();
        chains.push(ys);
    }

    let controls = sys.control_syms();
    let eqs: Vec<Expr> = outputs
        .iter()
        .zip(&chains)
        .map(|((_, top), ys)| top - &Expr::coord(&ys[0]))
        .collect();
    let mut best: Option<((usize, usize), Vec<Sym>, HashMap<Sym, Expr>)> = None;
    for pick in subsets(controls.len(), grown.len()) {
        let unknowns: Vec<Sym> = pick.iter().map(|&i| controls[i]).collect();
        let Ok(sol) = solve_equations(&eqs, &unknowns, cfg) else { continue };
        let fractions = sol.values().filter(|v| !v.den().is_const()).count();
        let size = (fractions, sol.values().map(Expr::size).sum::<usize>());
        if best.as_ref().is_none_or(|b| size < b.0) {
            best = Some((size, unknowns, sol));
        }
    }
    let (_, solved, sol) = best.ok_or_else(|| {
        DflatError::CompensatorSolveFailed(outputs.iter().map(|o| o.1.to_string()).collect::<Vec<_>>().join(", "))
    })?;

    let rest: Vec<Sym> = controls.iter().copied().filter(|u| !solved.contains(u)).collect();
    let mut w: Vec<String> = (1..=rest.len()).map(|i| format!("W{i}")).collect();
    w.extend((0..grown.len()).map(|a| format!("W{}", rest.len() + a + 1)));
    let rename: HashMap<Sym, Expr> = rest.iter().zip(&w).map(|(u, n)| (*u, Expr::coord(n))).collect();
    let beta: Vec<(Sym, Expr)> = controls
        .iter()
        .map(|u| {
            let e = match sol.get(u) {
                Some(v) => v.subst(&rename)?,
                None => rename[u].clone(),
            };
            Ok((*u, e))
        })
        .collect::<Result<_>>()?;

    let mut back: HashMap<Sym, Expr> = rest.iter().zip(&w).map(|(u, n)| (Sym::coord(n), Expr::sym(*u))).collect();
    for ((_, top), ys) in outputs.iter().zip(&chains) {
        back.insert(Sym::coord(&ys[0]), top.clone());
    }
    for (u, b) in &beta {
        if b.subst(&back)? != Expr::sym(*u) {
            return Err(DflatError::Verification(format!("beta does not return {u}")));
        }
    }

    let beta_map: HashMap<Sym, Expr> = beta.iter().cloned().collect();
    let mut coords = vec![(Sym::time(), Role::Time)];
    let mut drift = Vec::new();
    for (x, f) in sys.state_syms().into_iter().zip(sys.drift()) {
        coords.push((x, Role::State));
        drift.push(f.subst(&beta_map)?);
    }
    for (a, ys) in chains.iter().enumerate() {
        for (i, y) in ys.iter().enumerate() {
            coords.push((Sym::coord(y), Role::State));
            drift.push(match ys.get(i + 1) {
                Some(next) => Expr::coord(next),
                None => Expr::coord(&w[rest.len() + a]),
            });
        }
    }
    coords.extend(w.iter().map(|n| (Sym::coord(n), Role::Control)));
    let system = ControlSystem::new(Chart::new(coords)?, drift)?;
    let (verdict, flag) = sfl_test(&system, cfg)?;
    if !verdict.is_sfl {
        return Err(DflatError::Verification(format!(
            "the augmented system is not static feedback linearisable: {}",
            verdict.failures.join("; ")
        )));
    }
    let chi_identity = outputs.iter().all(|(_, top)| top.as_symbol().is_some_and(|s| controls.contains(&s)));
    let y = chains.iter().flatten().cloned().collect();
    let chains = grown.into_iter().zip(chains).map(|((v, o, _), ys)| (v, o, ys)).collect();
    Ok(DynamicCompensator { outputs, y, chains, w, beta, chi_identity, system, verdict, flag })
}

impl DynamicCompensator {
    /// Coordinates of `pr H_G` as functions on the augmented chart.
    pub fn pullback(&self, h: &SubConnection, pr: &Prolonged) -> Result<HashMap<Sym, Expr>> {
        let beta: HashMap<Sym, Expr> = self.beta.iter().cloned().collect();
        let rest = self.w.len() - self.chains.len();
        let mut out = HashMap::new();
        for &s in pr.sub.chart.syms() {
            let name = s.name();
            let e = if s == Sym::time() {
                Expr::sym(s)
            } else if let Some(c) = h.component(&name) {
                c.subst(&beta)?
            } else {
                let (a, ys, i) = self
                    .chains
                    .iter()
                    .enumerate()
                    .find_map(|(a, (v, o, ys))| {
                        let l: usize = name.strip_prefix(&format!("{v}_"))?.parse().ok()?;
                        (l > *o).then_some((a, ys, l - o))
                    })
                    .ok_or_else(|| DflatError::Invalid(format!("no pullback for {name}")))?;
                match ys.get(i) {
                    Some(y) => Expr::coord(y),
                    None => Expr::coord(&self.w[rest + a]),
                }
            };
            out.insert(s, e);
        }
        Ok(out)
    }

    /// Fundamental functions of `pr H_G` pulled back to the augmented chart.
    /// They serve as first-integral candidates when the augmented
    /// coordinates are poorly adapted to the symmetry.
    pub fn sub_connection_candidates(&self, h: &SubConnection, pr: &Prolonged, cfg: &Config) -> Result<Vec<Expr>> {
        let ct = pr.linearize(&ContactOptions::default(), cfg)?;
        let map = self.pullback(h, pr)?;
        ct.fundamentals.iter().map(|f| Ok(f.integral.expr.subst(&map)?)).collect()
    }
}

/// Trajectories of the original system in terms of arbitrary functions.
#[derive(Clone, Debug)]
pub struct ExplicitSolution {
    pub functions: Vec<String>,
    /// One entry per original state and control.
    pub values: Vec<(Sym, Expr)>,
    pub signature: Signature,
    pub residuals: Vec<Expr>,
}

impl ExplicitSolution {
    pub fn residuals_vanish(&self) -> bool {
        self.residuals.iter().all(Expr::is_zero)
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.values.iter().find(|(s, _)| &*s.name() == name).map(|(_, e)| e)
    }
}

#[derive(Clone, Debug)]
pub struct FlatOutputs {
    pub outputs: Vec<Expr>,
    pub contact: ContactTransformation,
    pub solution: std::result::Result<ExplicitSolution, DflatError>,
}

/// Flat outputs are the fundamental functions of the augmented system. The
/// explicit solution inverts its contact coordinates and is checked against
/// the original equations.
pub fn flat_outputs_and_solution(
    sys: &ControlSystem,
    comp: &DynamicCompensator,
    opts: &ContactOptions,
    cfg: &Config,
) -> Result<FlatOutputs> {
    let ct = contact_coordinates(&comp.system, &comp.flag, &comp.verdict, opts, cfg)?;
    let outputs = ct.fundamentals.iter().map(|f| f.integral.expr.clone()).collect();
    let solution = explicit_solution(sys, comp, &ct, cfg);
    Ok(FlatOutputs { outputs, contact: ct, solution })
}

pub fn explicit_solution(
    sys: &ControlSystem,
    comp: &DynamicCompensator,
    ct: &ContactTransformation,
    cfg: &Config,
) -> Result<ExplicitSolution> {
    let map = ct.invert(cfg)?;
    let functions: Vec<String> = ct.target.chains.iter().map(|c| c.0.clone()).collect();
    let mut jets = HashMap::new();
    for (var, order) in &ct.target.chains {
        for l in 0..=*order {
            jets.insert(Sym::coord(&jet_name(var, l)), Expr::jet(var, l as u32));
        }
    }
    let aug = comp.system.chart();
    let mut curve: HashMap<Sym, Expr> = HashMap::new();
    for (s, e) in aug.syms().iter().zip(map.inverse()) {
        if *s != Sym::time() {
            curve.insert(*s, e.subst(&jets)?);
        }
    }
    let mut values = Vec::new();
    for x in sys.state_syms() {
        values.push((x, curve[&x].clone()));
    }
    for (u, b) in &comp.beta {
        values.push((*u, b.subst(&curve)?));
    }
    let full: HashMap<Sym, Expr> = values.iter().cloned().collect();
    let residuals = sys.residuals(&full)?;
    let orders: Vec<usize> = functions
        .iter()
        .map(|f| values.iter().filter_map(|(_, e)| e.jet_order(f)).max().unwrap_or(0) as usize)
        .collect();
    let sol = ExplicitSolution { functions, values, signature: Signature::from_orders(&orders), residuals };
    if !sol.residuals_vanish() {
        return Err(DflatError::Verification("explicit solution leaves a nonzero residual".into()));
    }
    Ok(sol)
}

/// Reductions along single chains first, then larger sets, in chain order.
pub fn split_candidates(h: &SubConnection) -> Vec<Vec<String>> {
    let names: Vec<String> = h.chains().iter().map(|c| c.0.clone()).collect();
    let mut out = Vec::new();
    for k in 1..names.len() {
        let mut level: Vec<Vec<String>> = subsets(names.len(), k)
            .into_iter()
            .map(|s| s.into_iter().map(|i| names[i].clone()).collect())
            .collect();
        level.sort_by_key(|s: &Vec<String>| s.iter().map(|n| names.iter().position(|m| m == n).unwrap()).collect::<Vec<_>>());
        out.extend(level);
    }
    out
}

/// Tries the candidate splits in parallel and returns the first, in trial
/// order, whose reduction is static feedback linearisable, together with
/// the outcome of every trial.
pub fn find_split(
    h: &SubConnection,
    splits: &[Vec<String>],
    candidates: &[Expr],
    cfg: &Config,
) -> Result<(Option<(Reduction, ReducedAnalysis)>, Vec<(Vec<String>, String)>)> {
    let trials = par::map(splits, |along| -> Result<(Reduction, ReducedAnalysis)> {
        let red = reduce(h, along)?;
        let an = analyze_reduction(&red, candidates, cfg)?;
        Ok((red, an))
    });
    let mut log = Vec::new();
    let mut found = None;
    for (along, t) in splits.iter().zip(trials) {
        match t {
            Ok((red, an)) => {
                let sig = an.signature().map_or("-".to_string(), |s| s.to_string());
                log.push((along.clone(), format!("sfl={} signature={sig}", an.is_sfl())));
                if an.is_sfl() && found.is_none() {
                    found = Some((red, an));
                }
            }
            Err(e) if e.is_inconclusive() => return Err(e),
            Err(e) => log.push((along.clone(), e.to_string())),
        }
    }
    Ok((found, log))
}
