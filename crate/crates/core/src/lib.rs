//! Exact differential-geometric analysis of nonlinear control systems:
//! derived flags, Goursat and static feedback linearisation tests, contact
//! coordinates, symmetry reduction and the cascade construction of flat
//! outputs through dynamic compensators.

pub mod cascade;
pub mod contact;
pub mod error;
pub mod expr;
pub mod flags;
pub mod geometry;
pub mod goursat;
pub mod linalg;
pub mod par;
pub mod symmetry;

pub use error::{DflatError, Result};

/// Run-wide settings shared by every computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Seed for all probe points.
    pub seed: u64,
    /// Highest total degree tried in polynomial first-integral ansatz.
    pub degree_budget: u32,
    /// Largest expression (in terms) allowed during symbolic elimination.
    pub size_budget: usize,
    /// Cross-check numeric ranks by symbolic elimination.
    pub symbolic_check: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { seed: 20_181_105, degree_budget: 4, size_budget: 2_000, symbolic_check: true }
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Config { seed, ..Config::default() }
    }

    pub fn probes(&self) -> linalg::Probes {
        linalg::Probes::new(self.seed)
    }
}
