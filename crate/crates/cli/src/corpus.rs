//! Embedded example systems, their stored reports and expectation checks.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;

use dflat::expr::{parse_with, Expr, ParseContext, Sym};

use crate::run::{run, RunOptions};
use crate::sysfile::{ExpectKind, Expectation, SystemFile};
use crate::CliError;

pub const FIXTURES: &[(&str, &str)] = &[
    ("hsm", include_str!("../corpus/hsm.sys")),
    ("charlet", include_str!("../corpus/charlet.sys")),
    ("marino", include_str!("../corpus/marino.sys")),
    ("four_input", include_str!("../corpus/four_input.sys")),
    ("tvtol", include_str!("../corpus/tvtol.sys")),
    ("pvtol_galilean", include_str!("../corpus/pvtol_galilean.sys")),
    ("pvtol_oscillation", include_str!("../corpus/pvtol_oscillation.sys")),
];

const EXPECTED: &str = include_str!("../corpus/expected.json");

pub fn expected_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/expected.json")
}

pub fn fixture(name: &str) -> Option<SystemFile> {
    FIXTURES.iter().find(|f| f.0 == name).map(|f| f.1.parse().expect("embedded fixture parses"))
}

/// Report fields that vary between runs or builds.
pub fn strip_volatile(mut report: Value) -> Value {
    if let Some(o) = report.as_object_mut() {
        o.remove("timing_ms");
        if let Some(c) = o.get_mut("config").and_then(Value::as_object_mut) {
            c.remove("parallel");
        }
    }
    report
}

/// For a misprint, `pass` means the printed value was confirmed not to hold.
#[derive(Clone, Debug)]
pub struct Check {
    pub line: usize,
    pub kind: ExpectKind,
    pub pointer: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub name: String,
    pub report: Result<Value, String>,
    pub checks: Vec<Check>,
    /// `None` when no stored report exists.
    pub snapshot: Option<bool>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.report.is_ok() && self.snapshot != Some(false) && self.checks.iter().all(|c| c.pass)
    }
}

fn parse_expr(s: &str, ctx: &ParseContext) -> Option<Expr> {
    parse_with(s, ctx).ok()
}

fn same(actual: &Value, expected: &Value, ctx: &ParseContext) -> bool {
    match (actual, expected) {
        (Value::String(a), Value::String(b)) => {
            if a == b {
                return true;
            }
            match (parse_expr(a, ctx), parse_expr(b, ctx)) {
                (Some(x), Some(y)) => (&x - &y).is_zero(),
                _ => false,
            }
        }
        (Value::Array(a), Value::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y, ctx)),
        (Value::Number(a), Value::Number(b)) => a.as_f64() == b.as_f64(),
        _ => actual == expected,
    }
}

/// Quotient of two expressions depends on time and function jets only.
fn proportional(actual: &Value, expected: &Value, ctx: &ParseContext) -> bool {
    let (Some(a), Some(b)) = (actual.as_str(), expected.as_str()) else { return false };
    let (Some(a), Some(b)) = (parse_expr(a, ctx), parse_expr(b, ctx)) else { return false };
    if b.is_zero() {
        return a.is_zero();
    }
    match a.try_div(&b) {
        Ok(r) => !r.is_zero() && r.coords().into_iter().all(|s| s == Sym::time() || s.name().starts_with("D(")),
        Err(_) => false,
    }
}

pub fn check(report: &Value, e: &Expectation, ctx: &ParseContext) -> Check {
    let actual = report.pointer(&e.pointer);
    let (pass, detail) = match actual {
        None => (false, "missing".to_string()),
        Some(a) => {
            let ok = match e.kind {
                ExpectKind::Equal => same(a, &e.value, ctx),
                ExpectKind::Proportional => proportional(a, &e.value, ctx),
                ExpectKind::Misprint => !same(a, &e.value, ctx),
            };
            (ok, a.to_string())
        }
    };
    Check { line: e.line, kind: e.kind, pointer: e.pointer.clone(), pass, detail }
}

pub fn check_all(file: &SystemFile, report: &Value) -> Vec<Check> {
    let ctx = ParseContext::with_constants(file.constants.iter().cloned());
    file.expectations.iter().map(|e| check(report, e, &ctx)).collect()
}

pub fn stored() -> BTreeMap<String, Value> {
    serde_json::from_str(EXPECTED).unwrap_or_default()
}

/// Runs every fixture, in parallel when enabled.
pub fn run_corpus(opts: &RunOptions) -> Vec<Outcome> {
    let stored = stored();
    dflat::par::map(FIXTURES, |(name, text)| {
        let file: SystemFile = text.parse().expect("embedded fixture parses");
        let report = run(None, &file, opts.clone()).map_err(|e| e.to_string());
        let checks = report.as_ref().map(|r| check_all(&file, r)).unwrap_or_default();
        let snapshot = match (&report, stored.get(*name)) {
            (Ok(r), Some(s)) => Some(strip_volatile(r.clone()) == *s),
            _ => None,
        };
        Outcome { name: name.to_string(), report, checks, snapshot }
    })
}

pub fn bless(outcomes: &[Outcome]) -> Result<(), CliError> {
    let mut map = BTreeMap::new();
    for o in outcomes {
        if let Ok(r) = &o.report {
            map.insert(o.name.clone(), strip_volatile(r.clone()));
        }
    }
    let path = expected_path();
    let text = serde_json::to_string_pretty(&map).expect("json") + "\n";
    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
