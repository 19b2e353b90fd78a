//! Control systems `x' = f(t, x, u)` and their Pfaffian distributions.

use std::collections::HashMap;
use std::sync::Arc;

use super::{Chart, Distribution, Role, VectorField};
use crate::error::{DflatError, Result};
use crate::expr::{Expr, Sym};
use crate::linalg;
use crate::Config;

/// A chart split into time, states and controls with one drift per state.
/// Coordinates outside the split must not occur.
#[derive(Clone, Debug)]
pub struct ControlSystem {
    chart: Arc<Chart>,
    states: Vec<usize>,
    controls: Vec<usize>,
    drift: Vec<Expr>,
}

impl ControlSystem {
    /// Uses the chart roles: `State` (and `Group`, `Jet`, `Aux`) coordinates
    /// carry drifts, `Control` coordinates are inputs.
    pub fn new(chart: Arc<Chart>, drift: Vec<Expr>) -> Result<Self> {
        let states = chart.with_role(|r| !matches!(r, Role::Time | Role::Control));
        let controls = chart.with_role(|r| *r == Role::Control);
        Self::with_split(chart, states, controls, drift)
    }

    pub fn with_split(chart: Arc<Chart>, states: Vec<usize>, controls: Vec<usize>, drift: Vec<Expr>) -> Result<Self> {
        if drift.len() != states.len() {
            return Err(DflatError::Invalid(format!(
                "{} drift equations for {} states",
                drift.len(),
                states.len()
            )));
        }
        let t = chart.time_index();
        let mut seen = vec![false; chart.dim()];
        seen[t] = true;
        for &i in states.iter().chain(&controls) {
            if seen[i] {
                return Err(DflatError::Invalid(format!("coordinate {} used twice", chart.sym(i))));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(DflatError::Invalid("every coordinate must be time, a state or a control".into()));
        }
        if controls.is_empty() {
            return Err(DflatError::Invalid("a control system needs at least one control".into()));
        }
        Ok(ControlSystem { chart, states, controls, drift })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn state_syms(&self) -> Vec<Sym> {
        self.states.iter().map(|&i| self.chart.sym(i)).collect()
    }

    pub fn control_syms(&self) -> Vec<Sym> {
        self.controls.iter().map(|&i| self.chart.sym(i)).collect()
    }

    pub fn drift(&self) -> &[Expr] {
        &self.drift
    }

    /// Drift of a state coordinate by symbol.
    pub fn drift_of(&self, s: Sym) -> Option<&Expr> {
        let i = self.chart.index_of(s)?;
        self.states.iter().position(|&j| j == i).map(|k| &self.drift[k])
    }

    /// `Z = d/dt + sum f^i d/dx^i`.
    pub fn drift_field(&self) -> VectorField {
        let mut comps = vec![Expr::zero(); self.chart.dim()];
        comps[self.chart.time_index()] = Expr::one();
        for (&i, f) in self.states.iter().zip(&self.drift) {
            comps[i] = f.clone();
        }
        VectorField::new(self.chart.clone(), comps).expect("length matches chart")
    }

    pub fn control_fields(&self) -> Vec<VectorField> {
        self.controls.iter().map(|&i| VectorField::coordinate(&self.chart, i)).collect()
    }

    /// `span{Z, d/du^a}`.
    pub fn distribution(&self) -> Distribution {
        let mut gens = vec![self.drift_field()];
        gens.extend(self.control_fields());
        Distribution::new(self.chart.clone(), gens).expect("fields share the chart")
    }

    /// Generic rank of `df/du`.
    pub fn control_rank(&self, cfg: &Config) -> Result<usize> {
        let rows: Vec<Vec<Expr>> = self
            .drift
            .iter()
            .map(|f| self.controls.iter().map(|&a| f.diff(self.chart.sym(a))).collect())
            .collect();
        linalg::generic_rank(&rows, &cfg.probes())
    }

    pub fn is_regular(&self, cfg: &Config) -> Result<bool> {
        Ok(self.control_rank(cfg)? == self.controls.len())
    }

    /// Residuals of `x^i(t) - f^i` along a curve given by expressions in `t`
    /// and function jets.
    pub fn residuals(&self, curve: &HashMap<Sym, Expr>) -> Result<Vec<Expr>> {
        let t = Sym::time();
        self.states
            .iter()
            .zip(&self.drift)
            .map(|(&i, f)| {
                let x = self.chart.sym(i);
                let xs = curve
                    .get(&x)
                    .ok_or_else(|| DflatError::Invalid(format!("curve does not give {x}")))?;
                Ok(&xs.diff(t) - &f.subst(curve)?)
            })
            .collect()
    }
}
