//! Verb pipelines and their JSON report sections.

use std::time::Instant;

use serde_json::{json, Map, Value};

use dflat::cascade::{
    dynamic_compensator, find_split, prolong, flat_outputs_and_solution, prolong_and_linearize,
    prolongation_plan, refine_plan, split_candidates, PlanMode, ProlongationPlan, Reduction,
};
use dflat::contact::{contact_coordinates, ContactOptions, ContactTransformation, Fundamental};
use dflat::expr::Expr;
use dflat::flags::DerivedFlag;
use dflat::geometry::ControlSystem;
use dflat::goursat::{goursat_test, relative_goursat_test, sfl_test, GoursatVerdict, SflVerdict};
use dflat::symmetry::{
    check_control_admissible, derive_group_coordinates, group_names, quotient_system, trivialize, SubConnection,
};
use dflat::{Config, DflatError};

use crate::model::Model;
use crate::sysfile::{SystemFile, Verb};
use crate::CliError;

pub const SCHEMA: &str = "dflat-report/1";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub cfg: Config,
    pub mode: Option<PlanMode>,
    pub split: Option<Vec<String>>,
}

pub fn parse_mode(s: &str) -> Result<PlanMode, CliError> {
    match s {
        "exact" => Ok(PlanMode::Exact),
        "bound" => Ok(PlanMode::Bound),
        _ => Err(CliError::Usage(format!("unknown mode {s}; use exact or bound"))),
    }
}

fn text(e: &Expr) -> Value {
    Value::String(e.to_string())
}

fn named<'a, I: IntoIterator<Item = (String, &'a Expr)>>(items: I) -> Value {
    Value::Object(items.into_iter().map(|(n, e)| (n, text(e))).collect())
}

fn sig<T: ToString>(s: Option<T>) -> Value {
    s.map_or(Value::Null, |s| Value::String(s.to_string()))
}

fn goursat_json(flag: &DerivedFlag, v: &GoursatVerdict) -> Value {
    json!({
        "ranks": v.ranks,
        "refined_type": v.refined_type.0,
        "velocity": v.velocity,
        "deceleration": v.deceleration,
        "delta_k": v.delta_k,
        "signature": sig(v.signature.as_ref()),
        "is_goursat": v.is_goursat,
        "failures": v.failures,
        "loci": flag.loci().iter().map(text).collect::<Vec<_>>(),
    })
}

fn fundamentals_json(f: &[Fundamental]) -> Value {
    f.iter()
        .map(|f| json!({"chain": f.chain, "order": f.order, "expr": text(&f.integral.expr), "method": f.integral.method.as_str()}))
        .collect()
}

fn contact_json(ct: &ContactTransformation) -> Value {
    json!({
        "signature": ct.signature.to_string(),
        "coordinates": named(ct.entries().iter().map(|(n, e)| (n.clone(), e))),
        "fundamentals": fundamentals_json(&ct.fundamentals),
    })
}

fn sfl_json(v: &SflVerdict, flag: &DerivedFlag) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("is_sfl".into(), json!(v.is_sfl));
    m.insert("controls_condition".into(), json!(v.controls_condition));
    m.insert("time_condition".into(), json!(v.time_condition));
    m.insert("failures".into(), json!(v.failures));
    m.insert("goursat".into(), goursat_json(flag, &v.goursat));
    m
}

/// Errors that stop a pipeline unless they are negative verdicts.
fn soft<T>(r: Result<T, DflatError>) -> Result<Result<T, String>, CliError> {
    match r {
        Ok(x) => Ok(Ok(x)),
        Err(e) if e.is_inconclusive() => Err(e.into()),
        Err(e) => Ok(Err(e.to_string())),
    }
}

fn system_json(sys: &ControlSystem) -> Value {
    named(sys.state_syms().into_iter().map(|s| s.name().to_string()).zip(sys.drift()))
}

/// Static feedback test with contact coordinates when it passes.
fn linearize(
    sys: &ControlSystem,
    opts: &ContactOptions,
    cfg: &Config,
) -> Result<(Value, Option<ContactTransformation>), CliError> {
    let (v, flag) = sfl_test(sys, cfg)?;
    let mut m = sfl_json(&v, &flag);
    let mut ct = None;
    if v.is_sfl {
        match soft(contact_coordinates(sys, &flag, &v, opts, cfg))? {
            Ok(c) => {
                m.insert("contact".into(), contact_json(&c));
                ct = Some(c);
            }
            Err(e) => {
                m.insert("contact_error".into(), json!(e));
            }
        }
    }
    Ok((Value::Object(m), ct))
}

fn plan_json(p: &ProlongationPlan, h: &SubConnection) -> Value {
    let prolonged_dim = prolong(h, p).map(|s| s.chart.dim()).ok();
    json!({
        "prolonged_dim": prolonged_dim,
        "mode": p.mode.as_str(),
        "display": p.to_string(),
        "orders": p.orders,
        "nu": p.nu().to_string(),
        "nu_prime": p.nu_prime().to_string(),
        "extra": p.extra(),
        "added_dim": p.added_dim(),
        "base_dim": h.chart.dim(),
    })
}

fn solution_json(s: &Result<dflat::cascade::ExplicitSolution, DflatError>) -> Value {
    match s {
        Ok(s) => json!({
            "functions": s.functions,
            "signature": s.signature.to_string(),
            "values": named(s.values.iter().map(|(x, e)| (x.name().to_string(), e))),
            "residuals_vanish": s.residuals_vanish(),
        }),
        Err(e) => json!({"error": e.to_string()}),
    }
}

pub struct Pipeline<'a> {
    pub file: &'a SystemFile,
    pub model: Model,
    pub opts: RunOptions,
    report: Map<String, Value>,
}

impl<'a> Pipeline<'a> {
    pub fn new(file: &'a SystemFile, opts: RunOptions) -> Result<Self, CliError> {
        let model = Model::build(file)?;
        Ok(Pipeline { file, model, opts, report: Map::new() })
    }

    fn cfg(&self) -> &Config {
        &self.opts.cfg
    }

    fn put(&mut self, key: &str, v: Value) {
        self.report.insert(key.into(), v);
    }

    fn analyze(&mut self) -> Result<(), CliError> {
        let sys = self.model.system()?;
        let flag = DerivedFlag::compute(&sys.distribution(), self.cfg())?;
        let v = goursat_test(&flag, self.cfg())?;
        let g = goursat_json(&flag, &v);
        self.put("analyze", g);
        Ok(())
    }

    fn sfl(&mut self) -> Result<(), CliError> {
        let sys = self.model.system()?;
        let opts = ContactOptions { names: None, candidates: self.model.candidates.clone() };
        let (v, _) = linearize(sys, &opts, self.cfg())?;
        self.put("sfl", v);
        Ok(())
    }

    /// Symmetry checks and the quotient; returns the quotient contact map.
    fn quotient(&mut self) -> Result<Option<(dflat::symmetry::QuotientData, ContactTransformation)>, CliError> {
        let cfg = self.cfg().clone();
        let sys = self.model.system()?.clone();
        let alg = self.model.algebra(&cfg)?;
        let adm = check_control_admissible(&sys, &alg, &cfg)?;
        let structure: Vec<Value> = alg
            .structure()
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().enumerate().flat_map(move |(j, c)| {
                    c.iter().enumerate().filter(|(_, q)| q.to_string() != "0").map(move |(k, q)| json!([i + 1, j + 1, k + 1, q.to_string()]))
                })
            })
            .collect();
        let relative = match soft(relative_goursat_test(&sys, &alg.distribution(), &cfg))? {
            Ok((r, flag)) => json!({
                "is_static_feedback_relative": r.is_static_feedback_relative,
                "signature": sig(r.signature.as_ref()),
                "controls_condition": r.controls_condition,
                "time_condition": r.time_condition,
                "failures": r.failures,
                "goursat": goursat_json(&flag, &r.goursat),
            }),
            Err(e) => json!({"error": e}),
        };
        self.put(
            "symmetry",
            json!({
                "dim": alg.dim(),
                "abelian": alg.is_abelian(),
                "structure": structure,
                "admissibility": {
                    "admissible": adm.is_admissible(),
                    "symmetry": adm.symmetry,
                    "time_invariant": adm.time_invariant,
                    "projection_rank": adm.projection_rank,
                    "dimension": adm.dimension,
                    "strongly_transverse": adm.strongly_transverse,
                    "failures": adm.failures,
                },
                "relative": relative,
            }),
        );
        if !adm.is_admissible() {
            return Ok(None);
        }
        let q = match soft(quotient_system(&sys, &alg, self.model.invariants.clone(), &cfg))? {
            Ok(q) => q,
            Err(e) => {
                self.put("quotient", json!({"error": e}));
                return Ok(None);
            }
        };
        let opts = ContactOptions { names: self.model.names.clone(), candidates: vec![] };
        let (lin, ct) = linearize(&q.system, &opts, &cfg)?;
        self.put(
            "quotient",
            json!({
                "invariants": named(q.invariants.iter().map(|(n, e)| (n.clone(), e))),
                "drift": system_json(&q.system),
                "sfl": lin,
            }),
        );
        Ok(ct.map(|c| (q, c)))
    }

    fn subconnection(&mut self, quotient: Option<(dflat::symmetry::QuotientData, ContactTransformation)>) -> Result<Option<SubConnection>, CliError> {
        let cfg = self.cfg().clone();
        let normal = match self.model.normal_form(&cfg) {
            Ok(h) => h,
            Err(CliError::Core(e)) if !e.is_inconclusive() => {
                self.put("subconnection", json!({"error": e.to_string()}));
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        let (h, source) = if let Some(h) = normal {
            let source = if h.map.is_some() { "normal form with verified map" } else { "normal form" };
            (h, source)
        } else {
            let Some((q, ct)) = quotient else {
                self.put("subconnection", json!({"error": "no linearisable quotient"}));
                return Ok(None);
            };
            let sys = self.model.system()?.clone();
            let alg = self.model.algebra(&cfg)?;
            let eps = if self.model.group.is_empty() {
                match soft(derive_group_coordinates(&sys, &alg, &cfg))? {
                    Ok(e) => group_names(e.len()).into_iter().zip(e).collect(),
                    Err(e) => {
                        self.put("subconnection", json!({"error": format!("group coordinates must be supplied: {e}")}));
                        return Ok(None);
                    }
                }
            } else {
                self.model.group.clone()
            };
            match soft(trivialize(&sys, &alg, &q, &ct, &eps, &cfg))? {
                Ok(h) => (h, "trivialization"),
                Err(e) => {
                    self.put("subconnection", json!({"error": e}));
                    return Ok(None);
                }
            }
        };
        let mut m = Map::new();
        m.insert("source".into(), json!(source));
        m.insert("signature".into(), json!(h.signature().to_string()));
        m.insert("chains".into(), json!(h.chains()));
        m.insert("lambda".into(), named(h.group.iter().map(|g| g.name().to_string()).zip(&h.lambda)));
        let flag = DerivedFlag::compute(&h.distribution(), &cfg)?;
        let v = goursat_test(&flag, &cfg)?;
        m.insert("goursat".into(), goursat_json(&flag, &v));
        if let Some((_, comps)) = &h.map {
            m.insert("map".into(), named(h.chart.names().into_iter().zip(comps)));
        }
        self.put("subconnection", Value::Object(m));
        Ok(Some(h))
    }

    fn cascade(&mut self, h: &SubConnection) -> Result<(), CliError> {
        let cfg = self.cfg().clone();
        let mut m = Map::new();
        let split = self.opts.split.clone().or_else(|| self.file.split.clone());
        let splits = match &split {
            Some(s) => vec![s.clone()],
            None => split_candidates(h),
        };
        let (found, log) = find_split(h, &splits, &self.model.candidates, &cfg)?;
        m.insert("trials".into(), log.iter().map(|(s, o)| json!([s, o])).collect());
        let Some((red, an)) = found else {
            m.insert("verdict".into(), json!("no split gives a linearisable reduction"));
            self.put("cascade", Value::Object(m));
            return Ok(());
        };
        m.insert("split".into(), json!(red.nu.iter().map(|c| &c.0).collect::<Vec<_>>()));
        m.insert("reduced".into(), reduced_json(&red, &an));
        let mode = self.opts.mode.or(self.file.mode.as_deref().map(parse_mode).transpose()?).unwrap_or(PlanMode::Exact);
        let exact = prolongation_plan(&red, &an, PlanMode::Exact)?;
        let bound = prolongation_plan(&red, &an, PlanMode::Bound)?;
        let mut plans = Map::new();
        plans.insert("exact".into(), plan_json(&exact, h));
        plans.insert("bound".into(), plan_json(&bound, h));
        let plan = match mode {
            PlanMode::Exact => exact,
            _ => {
                let refined = refine_plan(h, &bound, &cfg)?;
                plans.insert("refined".into(), plan_json(&refined, h));
                refined
            }
        };
        m.insert("plans".into(), Value::Object(plans));
        m.insert("plan".into(), plan_json(&plan, h));
        let pr = match soft(prolong_and_linearize(h, &plan, &cfg))? {
            Ok(pr) => pr,
            Err(e) => {
                m.insert("prolonged".into(), json!({"error": e}));
                self.put("cascade", Value::Object(m));
                return Ok(());
            }
        };
        m.insert(
            "prolonged".into(),
            json!({
                "signature": sig(pr.signature()),
                "prolonged_jets": pr.sub.signature().to_string(),
                "dim": pr.sub.chart.dim(),
                "dimension_identity": pr.sub.chart.dim() == plan.added_dim() + h.chart.dim(),
            }),
        );
        let Some(sys) = self.model.system.clone() else {
            self.put("cascade", Value::Object(m));
            return Ok(());
        };
        if h.map.is_none() {
            self.put("cascade", Value::Object(m));
            return Ok(());
        }
        let comp = match soft(dynamic_compensator(&sys, h, &plan, &cfg))? {
            Ok(c) => c,
            Err(e) => {
                m.insert("compensator".into(), json!({"error": e}));
                self.put("cascade", Value::Object(m));
                return Ok(());
            }
        };
        m.insert(
            "compensator".into(),
            json!({
                "beta": named(comp.beta.iter().map(|(u, e)| (u.name().to_string(), e))),
                "outputs": named(comp.outputs.iter().map(|(n, e)| (n.clone(), e))),
                "y": comp.y,
                "w": comp.w,
                "chi_identity": comp.chi_identity,
                "signature": sig(comp.verdict.goursat.signature.as_ref()),
                "is_sfl": comp.verdict.is_sfl,
                "system": system_json(&comp.system),
            }),
        );
        let mut candidates = self.model.candidates.clone();
        if let Ok(Ok(c)) = soft(comp.sub_connection_candidates(h, &pr, &cfg)) {
            candidates.extend(c);
        }
        let opts = ContactOptions { names: None, candidates };
        match soft(flat_outputs_and_solution(&sys, &comp, &opts, &cfg))? {
            Ok(f) => {
                m.insert("flat_outputs".into(), f.outputs.iter().map(text).collect());
                m.insert("contact".into(), contact_json(&f.contact));
                m.insert("solution".into(), solution_json(&f.solution));
            }
            Err(e) => {
                m.insert("flat_outputs".into(), json!({"error": e}));
            }
        }
        self.put("cascade", Value::Object(m));
        Ok(())
    }

    pub fn run(mut self, verb: Verb) -> Result<Value, CliError> {
        let start = Instant::now();
        if self.model.system.is_some() {
            self.analyze()?;
            if verb != Verb::Analyze {
                self.sfl()?;
            }
        }
        if matches!(verb, Verb::Quotient | Verb::Subconnection | Verb::Cascade) {
            let quotient = if self.model.generators.is_empty() { None } else { self.quotient()? };
            if verb != Verb::Quotient {
                if let Some(h) = self.subconnection(quotient)? {
                    if verb == Verb::Cascade {
                        self.cascade(&h)?;
                    }
                }
            }
        }
        let cfg = self.cfg().clone();
        self.put("schema", json!(SCHEMA));
        self.put("verb", json!(verb.as_str()));
        self.put("system", json!(self.file.display_name()));
        self.put(
            "config",
            json!({
                "seed": cfg.seed,
                "degree_budget": cfg.degree_budget,
                "size_budget": cfg.size_budget,
                "symbolic_check": cfg.symbolic_check,
                "parallel": dflat::par::is_parallel(),
            }),
        );
        self.put("timing_ms", json!(start.elapsed().as_millis() as u64));
        Ok(Value::Object(self.report))
    }
}

fn reduced_json(red: &Reduction, an: &dflat::cascade::ReducedAnalysis) -> Value {
    let groups: Vec<(String, &Expr)> = red
        .system
        .state_syms()
        .into_iter()
        .zip(red.system.drift())
        .filter(|(s, _)| s.name().starts_with('e'))
        .map(|(s, e)| (s.name().to_string(), e))
        .collect();
    let mut m = Map::new();
    m.insert("nu".into(), json!(red.nu_signature().to_string()));
    m.insert("functions".into(), json!(red.functions));
    m.insert("lambda".into(), named(groups));
    m.insert("is_sfl".into(), json!(an.is_sfl()));
    m.insert("signature".into(), sig(an.signature()));
    m.insert("k_bar".into(), json!(an.k_bar));
    m.insert("top_orders".into(), json!(an.top_orders));
    if let Some(ct) = &an.contact {
        m.insert("fundamentals".into(), fundamentals_json(&ct.fundamentals));
    }
    if let Some(e) = &an.contact_error {
        m.insert("contact_error".into(), json!(e));
    }
    Value::Object(m)
}

/// Runs `verb` (or the file's own task) on a parsed file.
pub fn run(verb: Option<Verb>, file: &SystemFile, opts: RunOptions) -> Result<Value, CliError> {
    let verb = verb.or(file.task).unwrap_or(Verb::Analyze);
    let mut opts = opts;
    if let Some(d) = file.degree_budget {
        opts.cfg.degree_budget = opts.cfg.degree_budget.max(d);
    }
    Pipeline::new(file, opts)?.run(verb)
}
