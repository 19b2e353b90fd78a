//! Line-oriented system descriptions.
//!
//! ```text
//! # comment
//! name charlet
//! task cascade
//! constants h
//! states x1 x2 x3 x4
//! controls u1 u2
//! x1' = x2
//! generator X1: x4 = 1
//! invariant q1 = x1
//! group e1 = x4
//! names z w
//! chains z:1 w:2
//! lambda e1 = z_0*(1 - w_2)
//! map z_0 = x3
//! split w
//! mode exact
//! degree_budget 4
//! candidate x1 + x2
//! expect /cascade/plan/orders/0/1 = 3
//! proportional /path = expr
//! misprint /path = "expr"
//! ```

use std::fmt;
use std::str::FromStr;

use crate::CliError;

/// A source fragment with its position, kept for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Src {
    pub line: usize,
    pub col: usize,
    pub text: String,
}

impl Src {
    fn new(line: usize, raw: &str, text: &str) -> Src {
        let col = raw.find(text).map_or(1, |c| c + 1);
        Src { line, col, text: text.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Analyze,
    Sfl,
    Quotient,
    Subconnection,
    Cascade,
}

impl Verb {
    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Analyze => "analyze",
            Verb::Sfl => "sfl",
            Verb::Quotient => "quotient",
            Verb::Subconnection => "subconnection",
            Verb::Cascade => "cascade",
        }
    }
}

impl FromStr for Verb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "analyze" => Verb::Analyze,
            "sfl" => Verb::Sfl,
            "quotient" => Verb::Quotient,
            "subconnection" => Verb::Subconnection,
            "cascade" => Verb::Cascade,
            _ => return Err(format!("unknown task {s}")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectKind {
    /// Value equals; strings are compared as expressions.
    Equal,
    /// Expression ratio depends only on `t` and arbitrary-function jets.
    Proportional,
    /// A printed value that must not hold.
    Misprint,
}

impl ExpectKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ExpectKind::Equal => "expect",
            ExpectKind::Proportional => "proportional",
            ExpectKind::Misprint => "misprint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectation {
    pub kind: ExpectKind,
    pub pointer: String,
    pub value: serde_json::Value,
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemFile {
    pub name: Option<String>,
    pub task: Option<Verb>,
    pub constants: Vec<String>,
    pub states: Vec<String>,
    pub controls: Vec<String>,
    pub drift: Vec<(String, Src)>,
    pub generators: Vec<(String, Vec<(String, Src)>)>,
    pub invariants: Vec<(String, Src)>,
    pub group: Vec<(String, Src)>,
    pub names: Vec<String>,
    pub chains: Vec<(String, usize)>,
    pub lambda: Vec<(String, Src)>,
    pub map: Vec<(String, Src)>,
    pub split: Option<Vec<String>>,
    pub mode: Option<String>,
    pub degree_budget: Option<u32>,
    pub candidates: Vec<Src>,
    pub expectations: Vec<Expectation>,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { line, col, msg: msg.into() }
}

fn ident(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic()) && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

/// `lhs = rhs` with an identifier on the left.
fn assignment(n: usize, raw: &str, rest: &str) -> Result<(String, Src), CliError> {
    let (lhs, rhs) = rest.split_once('=').ok_or_else(|| err(n, 1, "expected `name = expression`"))?;
    let lhs = lhs.trim();
    if !ident(lhs) {
        return Err(err(n, Src::new(n, raw, lhs).col, format!("`{lhs}` is not a name")));
    }
    let rhs = rhs.trim();
    if rhs.is_empty() {
        return Err(err(n, raw.len() + 1, "missing expression"));
    }
    Ok((lhs.to_string(), Src::new(n, raw, rhs)))
}

fn names(n: usize, raw: &str, rest: &str) -> Result<Vec<String>, CliError> {
    rest.split_whitespace()
        .map(|w| {
            if ident(w) {
                Ok(w.to_string())
            } else {
                Err(err(n, Src::new(n, raw, w).col, format!("`{w}` is not a name")))
            }
        })
        .collect()
}

impl FromStr for SystemFile {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut f = SystemFile::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "name" => f.name = Some(rest.to_string()),
                "task" => f.task = Some(rest.parse().map_err(|e: String| err(n, 1, e))?),
                "constants" => f.constants.extend(names(n, raw, rest)?),
                "states" => f.states.extend(names(n, raw, rest)?),
                "controls" => f.controls.extend(names(n, raw, rest)?),
                "generator" => {
                    let (gname, body) = rest.split_once(':').ok_or_else(|| err(n, 1, "expected `generator NAME: x = f; ...`"))?;
                    let comps = body
                        .split(';')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| assignment(n, raw, p))
                        .collect::<Result<_, _>>()?;
                    f.generators.push((gname.trim().to_string(), comps));
                }
                "invariant" => f.invariants.push(assignment(n, raw, rest)?),
                "group" => f.group.push(assignment(n, raw, rest)?),
                "names" => f.names = names(n, raw, rest)?,
                "chains" => {
                    for w in rest.split_whitespace() {
                        let (v, o) = w.split_once(':').ok_or_else(|| err(n, Src::new(n, raw, w).col, "expected `var:order`"))?;
                        let o = o.parse().map_err(|_| err(n, Src::new(n, raw, w).col, format!("bad order in `{w}`")))?;
                        f.chains.push((v.to_string(), o));
                    }
                }
                "lambda" => f.lambda.push(assignment(n, raw, rest)?),
                "map" => f.map.push(assignment(n, raw, rest)?),
                "split" => f.split = Some(rest.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
                "mode" => f.mode = Some(rest.to_string()),
                "degree_budget" => f.degree_budget = Some(rest.parse().map_err(|_| err(n, 1, "degree_budget needs an integer"))?),
                "candidate" => f.candidates.push(Src::new(n, raw, rest)),
                "expect" | "proportional" | "misprint" => {
                    let kind = match key {
                        "expect" => ExpectKind::Equal,
                        "proportional" => ExpectKind::Proportional,
                        _ => ExpectKind::Misprint,
                    };
                    let (p, v) = rest.split_once('=').ok_or_else(|| err(n, 1, "expected `/pointer = value`"))?;
                    let v = v.trim();
                    let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
                    f.expectations.push(Expectation { kind, pointer: p.trim().to_string(), value, line: n });
                }
                _ => {
                    let Some(x) = key.strip_suffix('\'') else {
                        return Err(err(n, 1, format!("unknown directive `{key}`")));
                    };
                    f.drift.push(assignment(n, raw, &format!("{x} {rest}"))?);
                }
            }
        }
        f.validate()?;
        Ok(f)
    }
}

impl SystemFile {
    fn validate(&self) -> Result<(), CliError> {
        for (x, src) in &self.drift {
            if !self.states.contains(x) {
                return Err(err(src.line, 1, format!("{x} is not a declared state")));
            }
        }
        for x in &self.states {
            let count = self.drift.iter().filter(|d| &d.0 == x).count();
            if count != 1 {
                return Err(err(0, 0, format!("state {x} has {count} equations")));
            }
        }
        Ok(())
    }

    pub fn has_system(&self) -> bool {
        !self.states.is_empty()
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "system".into())
    }
}

impl fmt::Display for SystemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            writeln!(f, "name {n}")?;
        }
        if let Some(t) = self.task {
            writeln!(f, "task {}", t.as_str())?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "constants {}", self.constants.join(" "))?;
        }
        if !self.states.is_empty() {
            writeln!(f, "states {}", self.states.join(" "))?;
        }
        if !self.controls.is_empty() {
            writeln!(f, "controls {}", self.controls.join(" "))?;
        }
        for (x, e) in &self.drift {
            writeln!(f, "{x}' = {}", e.text)?;
        }
        for (g, comps) in &self.generators {
            let body: Vec<String> = comps.iter().map(|(x, e)| format!("{x} = {}", e.text)).collect();
            writeln!(f, "generator {g}: {}", body.join("; "))?;
        }
        for (key, list) in [("invariant", &self.invariants), ("group", &self.group)] {
            for (x, e) in list {
                writeln!(f, "{key} {x} = {}", e.text)?;
            }
        }
        if !self.names.is_empty() {
            writeln!(f, "names {}", self.names.join(" "))?;
        }
        if !self.chains.is_empty() {
            let c: Vec<String> = self.chains.iter().map(|(v, o)| format!("{v}:{o}")).collect();
            writeln!(f, "chains {}", c.join(" "))?;
        }
        for (key, list) in [("lambda", &self.lambda), ("map", &self.map)] {
            for (x, e) in list {
                writeln!(f, "{key} {x} = {}", e.text)?;
            }
        }
        if let Some(s) = &self.split {
            writeln!(f, "split {}", s.join(","))?;
        }
        if let Some(m) = &self.mode {
            writeln!(f, "mode {m}")?;
        }
        if let Some(d) = self.degree_budget {
            writeln!(f, "degree_budget {d}")?;
        }
        for c in &self.candidates {
            writeln!(f, "candidate {}", c.text)?;
        }
        for e in &self.expectations {
            writeln!(f, "{} {} = {}", e.kind.keyword(), e.pointer, e.value)?;
        }
        Ok(())
    }
}
