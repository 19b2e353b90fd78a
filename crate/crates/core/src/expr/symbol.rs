//! Global symbol table.
//!
//! Every indeterminate that can occur in an [`Expr`](super::Expr) is interned
//! here once and referred to by a small copyable [`Sym`] handle afterwards.
//! Ids depend on interning order, so anything user visible is ordered by
//! name instead.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

/// Handle to an interned symbol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

/// What a symbol stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymKind {
    /// A chart coordinate.
    Coord,
    /// A named parameter.
    Const,
    /// `sin` of an atomic argument.
    Sin(Sym),
    /// `cos` of an atomic argument.
    Cos(Sym),
    /// `exp` of an atomic argument.
    Exp(Sym),
    /// The `order`-th derivative of an arbitrary function of time.
    Jet { func: Arc<str>, order: u32 },
}

#[derive(Clone)]
struct Entry {
    kind: SymKind,
    name: Arc<str>,
}

#[derive(Default)]
struct Table {
    entries: Vec<Entry>,
    by_key: HashMap<(Arc<str>, u8), Sym>,
}

static TABLE: LazyLock<RwLock<Table>> = LazyLock::new(|| RwLock::new(Table::default()));

fn tag(kind: &SymKind) -> u8 {
    match kind {
        SymKind::Coord | SymKind::Const => 0,
        SymKind::Sin(_) => 1,
        SymKind::Cos(_) => 2,
        SymKind::Exp(_) => 3,
        SymKind::Jet { .. } => 4,
    }
}

fn intern(name: String, kind: SymKind) -> Sym {
    let key: Arc<str> = Arc::from(name.as_str());
    let t = tag(&kind);
    if let Some(s) = TABLE.read().unwrap().by_key.get(&(key.clone(), t)) {
        return *s;
    }
    let mut table = TABLE.write().unwrap();
    if let Some(s) = table.by_key.get(&(key.clone(), t)) {
        return *s;
    }
    let sym = Sym(table.entries.len() as u32);
    table.entries.push(Entry { kind, name: key.clone() });
    table.by_key.insert((key, t), sym);
    sym
}

impl Sym {
    /// Interns a coordinate. Panics if `name` is already a constant.
    pub fn coord(name: &str) -> Sym {
        let s = intern(name.to_string(), SymKind::Coord);
        assert!(s.kind() == SymKind::Coord, "`{name}` is declared as a constant");
        s
    }

    /// Interns a named constant. Panics if `name` is already a coordinate.
    pub fn constant(name: &str) -> Sym {
        let key: Arc<str> = Arc::from(name);
        if let Some(s) = TABLE.read().unwrap().by_key.get(&(key, 0)) {
            assert!(s.kind() == SymKind::Const, "`{name}` is declared as a coordinate");
            return *s;
        }
        intern(name.to_string(), SymKind::Const)
    }

    /// Looks up a plain name without creating it.
    pub fn lookup(name: &str) -> Option<Sym> {
        TABLE.read().unwrap().by_key.get(&(Arc::from(name), 0)).copied()
    }

    /// The jet symbol `D(func, order)(t)`.
    pub fn jet(func: &str, order: u32) -> Sym {
        intern(
            format!("D({func},{order})(t)"),
            SymKind::Jet { func: Arc::from(func), order },
        )
    }

    /// `sin(arg)`; `arg` must be a coordinate or a jet.
    pub fn sin_of(arg: Sym) -> Sym {
        debug_assert!(arg.is_atomic_argument());
        intern(format!("sin({})", arg.name()), SymKind::Sin(arg))
    }

    /// `cos(arg)`; `arg` must be a coordinate or a jet.
    pub fn cos_of(arg: Sym) -> Sym {
        debug_assert!(arg.is_atomic_argument());
        intern(format!("cos({})", arg.name()), SymKind::Cos(arg))
    }

    /// `exp(arg)`; `arg` must be a coordinate or a jet.
    pub fn exp_of(arg: Sym) -> Sym {
        debug_assert!(arg.is_atomic_argument());
        intern(format!("exp({})", arg.name()), SymKind::Exp(arg))
    }

    /// The time coordinate every jet depends on.
    pub fn time() -> Sym {
        Sym::coord("t")
    }

    pub fn kind(self) -> SymKind {
        TABLE.read().unwrap().entries[self.0 as usize].kind.clone()
    }

    /// Display name, also the deterministic sort key.
    pub fn name(self) -> Arc<str> {
        TABLE.read().unwrap().entries[self.0 as usize].name.clone()
    }

    pub fn is_atomic_argument(self) -> bool {
        matches!(self.kind(), SymKind::Coord | SymKind::Jet { .. })
    }

    pub fn is_sin(self) -> bool {
        matches!(self.kind(), SymKind::Sin(_))
    }

    /// For `sin(a)` returns `cos(a)`.
    pub fn cos_partner(self) -> Option<Sym> {
        match self.kind() {
            SymKind::Sin(a) => Some(Sym::cos_of(a)),
            _ => None,
        }
    }

    /// The atomic argument of a transcendental symbol.
    pub fn argument(self) -> Option<Sym> {
        match self.kind() {
            SymKind::Sin(a) | SymKind::Cos(a) | SymKind::Exp(a) => Some(a),
            _ => None,
        }
    }

    /// Deterministic comparison by name.
    pub fn cmp_by_name(self, other: Sym) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let t = TABLE.read().unwrap();
        let a = &t.entries[self.0 as usize].name;
        let b = &t.entries[other.0 as usize].name;
        a.cmp(b).then(self.0.cmp(&other.0))
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_idempotent() {
        let a = Sym::coord("sym_test_a");
        assert_eq!(a, Sym::coord("sym_test_a"));
        let s = Sym::sin_of(a);
        assert_eq!(s.cos_partner(), Some(Sym::cos_of(a)));
        assert_eq!(s.argument(), Some(a));
        assert_eq!(&*Sym::jet("g", 2).name(), "D(g,2)(t)");
    }
}
