#![allow(dead_code)]

use std::sync::Arc;

use dflat::expr::{parse_with, Expr, ParseContext, Sym};
use dflat::geometry::{Chart, ControlSystem, Role, VectorField};

pub fn ctx(constants: &[&str]) -> ParseContext {
    ParseContext::with_constants(constants.iter().copied())
}

pub fn ex(ctx: &ParseContext, s: &str) -> Expr {
    parse_with(s, ctx).unwrap_or_else(|e| panic!("{s}: {e}"))
}

/// `x' = f` for `(x, f)` pairs with the listed controls.
pub fn system(ctx: &ParseContext, states: &[(&str, &str)], controls: &[&str]) -> ControlSystem {
    let mut coords = vec![(Sym::time(), Role::Time)];
    coords.extend(states.iter().map(|(x, _)| (Sym::coord(x), Role::State)));
    coords.extend(controls.iter().map(|u| (Sym::coord(u), Role::Control)));
    let chart = Chart::new(coords).unwrap();
    let drift = states.iter().map(|(_, f)| ex(ctx, f)).collect();
    ControlSystem::new(chart, drift).unwrap()
}

pub fn field(ctx: &ParseContext, chart: &Arc<Chart>, pairs: &[(&str, &str)]) -> VectorField {
    let pairs: Vec<(Sym, Expr)> = pairs.iter().map(|(x, c)| (Sym::coord(x), ex(ctx, c))).collect();
    VectorField::from_pairs(chart, &pairs).unwrap()
}
