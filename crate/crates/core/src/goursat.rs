//! Brunovsky normal forms and the Goursat, static feedback and relative
//! Goursat tests.

use std::sync::Arc;

use crate::error::{DflatError, Result};
use crate::expr::{Expr, Sym};
use crate::flags::{DerivedFlag, RefinedDerivedType, Signature};
use crate::geometry::{Chart, ControlSystem, Distribution, OneForm, Role, VectorField};
use crate::Config;

/// `J^kappa` with its contact distribution.
#[derive(Clone, Debug)]
pub struct BrunovskyForm {
    pub signature: Signature,
    pub chart: Arc<Chart>,
    /// `(variable name, order)` of every chain, lowest order first.
    pub chains: Vec<(String, usize)>,
    pub system: ControlSystem,
}

/// Name of the jet coordinate of order `l` of `var`.
pub fn jet_name(var: &str, l: usize) -> String {
    format!("{var}_{l}")
}

/// Names `prefix1, prefix2, ...` for the chains of `kappa`, shortest first,
/// or just `prefix` when there is a single chain.
pub fn chain_names(kappa: &Signature, prefix: &str) -> Vec<(String, usize)> {
    let mut orders = kappa.orders();
    orders.reverse();
    if orders.len() == 1 {
        return vec![(prefix.to_string(), orders[0])];
    }
    orders.iter().enumerate().map(|(i, &o)| (format!("{prefix}{}", i + 1), o)).collect()
}

impl BrunovskyForm {
    pub fn new(kappa: &Signature, prefix: &str) -> Result<Self> {
        Self::with_chains(kappa, chain_names(kappa, prefix))
    }

    /// Uses the given chain names and orders, which must match `kappa`.
    pub fn with_chains(kappa: &Signature, chains: Vec<(String, usize)>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(DflatError::Invalid("empty signature".into()));
        }
        let orders: Vec<usize> = chains.iter().map(|c| c.1).collect();
        if Signature::from_orders(&orders) != *kappa {
            return Err(DflatError::Invalid(format!("chains do not have signature {kappa}")));
        }
        let mut coords = vec![(Sym::time(), Role::Time)];
        let mut states = Vec::new();
        let mut controls = Vec::new();
        let mut drift = Vec::new();
        for (var, order) in &chains {
            for l in 0..=*order {
                let idx = coords.len();
                coords.push((Sym::coord(&jet_name(var, l)), Role::Jet { var: var.clone(), order: l as u32 }));
                if l == *order {
                    controls.push(idx);
                } else {
                    states.push(idx);
                    drift.push(Expr::coord(&jet_name(var, l + 1)));
                }
            }
        }
        let chart = Chart::new(coords)?;
        let system = ControlSystem::with_split(chart.clone(), states, controls, drift)?;
        Ok(BrunovskyForm { signature: kappa.clone(), chart, chains, system })
    }

    pub fn distribution(&self) -> Distribution {
        self.system.distribution()
    }

    /// Total derivative `D_t`.
    pub fn total_derivative(&self) -> VectorField {
        self.system.drift_field()
    }

    /// Contact forms `dz_l - z_{l+1} dt`.
    pub fn contact_forms(&self) -> Vec<OneForm> {
        let n = self.chart.dim();
        let t = self.chart.time_index();
        self.system
            .states()
            .iter()
            .zip(self.system.drift())
            .map(|(&i, f)| {
                let mut comps = vec![Expr::zero(); n];
                comps[i] = Expr::one();
                comps[t] = -f;
                OneForm::new(self.chart.clone(), comps).expect("length matches")
            })
            .collect()
    }
}

/// Type numbers of the Brunovsky form of signature `kappa`.
pub fn brunovsky_type(kappa: &Signature) -> RefinedDerivedType {
    let k = kappa.len();
    let m = kappa.width();
    let delta: Vec<usize> = (1..=k).map(|i| (i..=k).map(|l| kappa.get(l)).sum()).collect();
    let mut ms = vec![1 + m];
    for d in &delta {
        ms.push(ms.last().unwrap() + d);
    }
    let mut out = Vec::new();
    for j in 0..=k {
        if j == k {
            out.push(vec![ms[k], ms[k]]);
        } else {
            let chi = 2 * ms[j] - ms[j + 1] - 1;
            if j == 0 {
                out.push(vec![ms[0], chi]);
            } else {
                out.push(vec![ms[j], ms[j - 1] - 1, chi]);
            }
        }
    }
    RefinedDerivedType(out)
}

/// Outcome of the Goursat test. When `delta_k > 1` the refined type, the
/// intersection bundles and the fundamental bundle are checked; the last
/// needs a coordinate first integral of `Char V^(k-1)` and is skipped for
/// relative bundles.
#[derive(Clone, Debug, PartialEq)]
pub struct GoursatVerdict {
    pub is_goursat: bool,
    pub signature: Option<Signature>,
    pub refined_type: RefinedDerivedType,
    pub ranks: Vec<usize>,
    pub velocity: Vec<usize>,
    pub deceleration: Vec<i64>,
    pub delta_k: usize,
    pub failures: Vec<String>,
}

fn type_failures(t: &RefinedDerivedType, kappa: &Signature, dim: usize, relative: bool) -> Vec<String> {
    let mut out = Vec::new();
    let k = t.length();
    if !relative && t.m(0) != 1 + kappa.width() {
        out.push(format!("m0 = {} but 1 + m = {}", t.m(0), 1 + kappa.width()));
    }
    if t.m(k) != dim {
        out.push(format!("m{k} = {} but the manifold has dimension {dim}", t.m(k)));
    }
    for j in 0..k {
        if j == 0 && relative {
            continue;
        }
        let want = (2 * t.m(j)) as i64 - t.m(j + 1) as i64 - 1;
        if t.chi(j) as i64 != want {
            out.push(format!("chi^{j} = {} but 2 m{j} - m{} - 1 = {want}", t.chi(j), j + 1));
        }
    }
    for i in 1..k {
        let want = t.m(i - 1) - 1;
        if t.chi_lower(i) != Some(want) {
            out.push(format!("chi^{i}_{} = {} but m{} - 1 = {want}", i - 1, t.chi_lower(i).unwrap_or(0), i - 1));
        }
    }
    out
}

fn goursat_on_flag(flag: &DerivedFlag, relative: bool, cfg: &Config) -> Result<GoursatVerdict> {
    let refined_type = flag.refined_type()?;
    let velocity = flag.velocity();
    let deceleration = flag.deceleration();
    let delta_k = velocity.last().copied().unwrap_or(0);
    let mut failures = Vec::new();
    let dim = flag.chart().dim();
    if !flag.is_bracket_generating() {
        failures.push(format!("derived flag stops at rank {} below dimension {dim}", flag.ranks().last().unwrap()));
    }
    let signature = flag.decel_signature();
    if flag.length() == 0 {
        failures.push("distribution is integrable".into());
    }
    match &signature {
        None if flag.length() > 0 => failures.push(format!("deceleration {deceleration:?} has negative entries")),
        Some(kappa) => failures.extend(type_failures(&refined_type, kappa, dim, relative)),
        None => {}
    }
    if failures.is_empty() {
        for i in 1..flag.length() {
            if !flag.intersection(i)?.is_integrable(cfg)? {
                failures.push(format!("intersection bundle Char V^({i})_{} is not integrable", i - 1));
            }
        }
    }
    if failures.is_empty() && !relative && delta_k > 1 && flag.length() >= 2 {
        if let Some(f) = fundamental_failure(flag, cfg)? {
            failures.push(f);
        }
    }
    Ok(GoursatVerdict {
        is_goursat: failures.is_empty(),
        signature,
        refined_type,
        ranks: flag.ranks(),
        velocity,
        deceleration,
        delta_k,
        failures,
    })
}

/// Builds the fundamental bundle with `tau` the first chart coordinate
/// annihilated by `Char V^(k-1)` and `Z` a generator of `V` normalised by
/// `Z(tau) = 1`.
fn fundamental_failure(flag: &DerivedFlag, cfg: &Config) -> Result<Option<String>> {
    let cauchy = flag.cauchy(flag.length() - 1)?;
    for &s in flag.chart().syms() {
        let tau = Expr::sym(s);
        if !cauchy.gens().iter().all(|g| g.apply(&tau).is_zero()) {
            continue;
        }
        let Some(g) = flag.level(0).gens().iter().find(|g| !g.apply(&tau).is_zero()) else { continue };
        let z = g.scale(&g.apply(&tau).recip()?);
        return match crate::contact::fundamental_bundle_along(flag, &z, s, cfg) {
            Ok(_) => Ok(None),
            Err(DflatError::Verification(m)) => Ok(Some(m)),
            Err(e) => Err(e),
        };
    }
    Ok(None)
}

pub fn goursat_test(flag: &DerivedFlag, cfg: &Config) -> Result<GoursatVerdict> {
    goursat_on_flag(flag, false, cfg)
}

/// Outcome of the static feedback linearisation test.
#[derive(Clone, Debug, PartialEq)]
pub struct SflVerdict {
    pub goursat: GoursatVerdict,
    /// `Char V^(1)_0` is spanned by the control directions.
    pub controls_condition: bool,
    /// `dt` annihilates `Char V^(k-1)`.
    pub time_condition: bool,
    pub is_sfl: bool,
    pub failures: Vec<String>,
}

fn time_annihilates(d: &Distribution) -> bool {
    let t = d.chart().time_index();
    d.gens().iter().all(|g| g.comp(t).is_zero())
}

pub fn sfl_test_on(sys: &ControlSystem, flag: &DerivedFlag, cfg: &Config) -> Result<SflVerdict> {
    let goursat = goursat_test(flag, cfg)?;
    let mut failures = goursat.failures.clone();
    let mut controls_condition = false;
    let mut time_condition = false;
    if goursat.is_goursat {
        let k = flag.length();
        let du = Distribution::new(sys.chart().clone(), sys.control_fields())?;
        controls_condition = if k == 1 {
            sys.controls().len() == sys.states().len() && sys.is_regular(cfg)?
        } else {
            flag.intersection(1)?.same_span(&du, cfg)?
        };
        if !controls_condition {
            failures.push("Char V^(1)_0 is not spanned by the control directions".into());
        }
        time_condition = time_annihilates(&flag.cauchy(k - 1)?);
        if !time_condition {
            failures.push(format!("dt does not annihilate Char V^({})", k - 1));
        }
    }
    Ok(SflVerdict {
        is_sfl: goursat.is_goursat && controls_condition && time_condition,
        goursat,
        controls_condition,
        time_condition,
        failures,
    })
}

pub fn sfl_test(sys: &ControlSystem, cfg: &Config) -> Result<(SflVerdict, DerivedFlag)> {
    let flag = DerivedFlag::compute(&sys.distribution(), cfg)?;
    Ok((sfl_test_on(sys, &flag, cfg)?, flag))
}

/// Outcome of the relative Goursat test of `V + Gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeVerdict {
    pub goursat: GoursatVerdict,
    pub controls_condition: bool,
    pub time_condition: bool,
    pub is_static_feedback_relative: bool,
    /// Signature predicted for the quotient.
    pub signature: Option<Signature>,
    pub failures: Vec<String>,
}

/// Requires `Char V = 0` and `Gamma n V^(1) = 0`.
pub fn relative_goursat_test(
    sys: &ControlSystem,
    gamma: &Distribution,
    cfg: &Config,
) -> Result<(RelativeVerdict, DerivedFlag)> {
    let v = sys.distribution();
    let base = DerivedFlag::compute(&v, cfg)?;
    if base.cauchy_rank(0)? != 0 {
        return Err(DflatError::NotAdmissible("the system distribution has a nontrivial Cauchy bundle".into()));
    }
    if base.length() >= 1 {
        let v1 = base.level(1);
        let r = gamma.rank(cfg)?;
        if v1.union(gamma).rank(cfg)? != v1.len() + r {
            return Err(DflatError::NotAdmissible("symmetry algebra is not strongly transverse".into()));
        }
    }
    let hat = v.union(gamma);
    let flag = DerivedFlag::compute(&hat, cfg)?;
    let goursat = goursat_on_flag(&flag, true, cfg)?;
    let mut failures = goursat.failures.clone();
    let mut controls_condition = false;
    let mut time_condition = false;
    if goursat.is_goursat {
        let k = flag.length();
        let du = sys.control_fields();
        controls_condition = if k == 1 { true } else { flag.intersection(1)?.contains_all(&du, cfg)? };
        if !controls_condition {
            failures.push("control directions are not in Char V^(1)_0".into());
        }
        time_condition = time_annihilates(&flag.cauchy(k - 1)?);
        if !time_condition {
            failures.push(format!("dt does not annihilate Char V^({})", k - 1));
        }
    }
    let signature = goursat.signature.clone();
    Ok((
        RelativeVerdict {
            is_static_feedback_relative: goursat.is_goursat && controls_condition && time_condition,
            goursat,
            controls_condition,
            time_condition,
            signature,
            failures,
        },
        flag,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brunovsky_dimensions() {
        let b = BrunovskyForm::new(&Signature::new(vec![0, 2]), "z").unwrap();
        assert_eq!(b.chart.dim(), 7);
        assert_eq!(b.contact_forms().len(), 4);
        let b = BrunovskyForm::new(&Signature::new(vec![1]), "z").unwrap();
        assert_eq!(b.chart.dim(), 3);
        assert_eq!(b.chart.names(), vec!["t", "z_0", "z_1"]);
        assert_eq!(brunovsky_type(&Signature::new(vec![0, 1, 1])).to_string(), "[[3,0],[5,2,2],[7,4,5],[8,8]]");
    }

    #[test]
    fn brunovsky_is_sfl() {
        let cfg = Config::default();
        for rho in [vec![1], vec![0, 1], vec![2, 1], vec![1, 0, 1]] {
            let kappa = Signature::new(rho);
            let b = BrunovskyForm::new(&kappa, "bz").unwrap();
            let (v, flag) = sfl_test(&b.system, &cfg).unwrap();
            assert!(v.is_sfl, "{kappa}: {:?}", v.failures);
            assert_eq!(v.goursat.signature.as_ref(), Some(&kappa));
            assert_eq!(flag.refined_type().unwrap(), brunovsky_type(&kappa));
        }
    }
}
