//! Core objects built from a parsed system file.

use std::collections::BTreeSet;

use dflat::expr::{parse_with, Expr, ExprError, ParseContext, Sym};
use dflat::geometry::{Chart, ControlSystem, Role, VectorField};
use dflat::symmetry::{SubConnection, SymmetryAlgebra};
use dflat::Config;

use crate::sysfile::{Src, SystemFile};
use crate::CliError;

pub struct Model {
    pub ctx: ParseContext,
    pub system: Option<ControlSystem>,
    pub generators: Vec<VectorField>,
    pub invariants: Option<Vec<(String, Expr)>>,
    pub group: Vec<(String, Expr)>,
    pub names: Option<Vec<String>>,
    /// Normal form chains and coefficients, when given directly.
    pub normal_form: Option<(Vec<(String, usize)>, Vec<String>, Vec<Expr>)>,
    pub map: Vec<(String, Expr)>,
    pub candidates: Vec<Expr>,
}

pub fn parse_src(src: &Src, ctx: &ParseContext) -> Result<Expr, CliError> {
    parse_with(&src.text, ctx).map_err(|e| match e {
        ExprError::Parse { pos, msg } => CliError::Parse { line: src.line, col: src.col + pos.min(src.text.len()), msg },
        other => CliError::Parse { line: src.line, col: src.col, msg: other.to_string() },
    })
}

fn undeclared(e: &Expr, allowed: &BTreeSet<Sym>, src: &Src) -> Result<(), CliError> {
    match e.coords().into_iter().find(|s| !allowed.contains(s)) {
        Some(s) => Err(CliError::Parse { line: src.line, col: src.col, msg: format!("{s} is not declared") }),
        None => Ok(()),
    }
}

impl Model {
    pub fn build(file: &SystemFile) -> Result<Model, CliError> {
        let ctx = ParseContext::with_constants(file.constants.iter().cloned());
        let mut system = None;
        let mut generators = Vec::new();
        let mut invariants = None;
        let mut group = Vec::new();
        if file.has_system() {
            let mut coords = vec![(Sym::time(), Role::Time)];
            coords.extend(file.states.iter().map(|x| (Sym::coord(x), Role::State)));
            coords.extend(file.controls.iter().map(|u| (Sym::coord(u), Role::Control)));
            let chart = Chart::new(coords)?;
            let allowed: BTreeSet<Sym> = chart.syms().iter().copied().collect();
            let mut drift = Vec::new();
            for x in &file.states {
                let (_, src) = file.drift.iter().find(|d| &d.0 == x).expect("validated");
                let e = parse_src(src, &ctx)?;
                undeclared(&e, &allowed, src)?;
                drift.push(e);
            }
            let sys = ControlSystem::new(chart.clone(), drift)?;
            for (_, comps) in &file.generators {
                let mut pairs = Vec::new();
                for (x, src) in comps {
                    let s = Sym::coord(x);
                    if !allowed.contains(&s) {
                        return Err(CliError::Parse { line: src.line, col: 1, msg: format!("{x} is not a chart coordinate") });
                    }
                    let e = parse_src(src, &ctx)?;
                    undeclared(&e, &allowed, src)?;
                    pairs.push((s, e));
                }
                generators.push(VectorField::from_pairs(&chart, &pairs)?);
            }
            if !file.invariants.is_empty() {
                let mut inv = Vec::new();
                for (n, src) in &file.invariants {
                    let e = parse_src(src, &ctx)?;
                    undeclared(&e, &allowed, src)?;
                    inv.push((n.clone(), e));
                }
                invariants = Some(inv);
            }
            for (n, src) in &file.group {
                let e = parse_src(src, &ctx)?;
                undeclared(&e, &allowed, src)?;
                group.push((n.clone(), e));
            }
            system = Some(sys);
        }
        let normal_form = if file.chains.is_empty() {
            None
        } else {
            let mut gnames = Vec::new();
            let mut lambda = Vec::new();
            for (g, src) in &file.lambda {
                gnames.push(g.clone());
                lambda.push(parse_src(src, &ctx)?);
            }
            Some((file.chains.clone(), gnames, lambda))
        };
        let mut map = Vec::new();
        for (n, src) in &file.map {
            map.push((n.clone(), parse_src(src, &ctx)?));
        }
        let candidates = file.candidates.iter().map(|c| parse_src(c, &ctx)).collect::<Result<_, _>>()?;
        Ok(Model {
            ctx,
            system,
            generators,
            invariants,
            group,
            names: (!file.names.is_empty()).then(|| file.names.clone()),
            normal_form,
            map,
            candidates,
        })
    }

    pub fn system(&self) -> Result<&ControlSystem, CliError> {
        self.system.as_ref().ok_or_else(|| CliError::Missing("states, controls and drift equations".into()))
    }

    pub fn algebra(&self, cfg: &Config) -> Result<SymmetryAlgebra, CliError> {
        if self.generators.is_empty() {
            return Err(CliError::Missing("symmetry generators".into()));
        }
        Ok(SymmetryAlgebra::new(self.system()?.chart().clone(), self.generators.clone(), cfg)?)
    }

    /// The normal form sub-connection, with its trivialization map when one
    /// is given and a system is present.
    pub fn normal_form(&self, cfg: &Config) -> Result<Option<SubConnection>, CliError> {
        let Some((chains, group, lambda)) = &self.normal_form else { return Ok(None) };
        let h = SubConnection::from_normal_form(chains.clone(), group.clone(), lambda.clone())?;
        if self.map.is_empty() {
            return Ok(Some(h));
        }
        let sys = self.system()?;
        let comps = h
            .chart
            .syms()
            .iter()
            .map(|s| {
                if *s == Sym::time() {
                    return Ok(Expr::sym(*s));
                }
                self.map
                    .iter()
                    .find(|(n, _)| n.as_str() == &*s.name())
                    .map(|(_, e)| e.clone())
                    .ok_or_else(|| CliError::Missing(format!("map entry for {s}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(h.with_map(sys, comps, cfg)?))
    }
}
