use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DflatError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("numeric and symbolic rank disagree ({numeric} vs {symbolic}) for {what}")]
    RankDisagreement { what: String, numeric: usize, symbolic: usize },
    #[error("probe points are degenerate for {0}")]
    DegenerateProbes(String),
    #[error("map is not invertible: {0}")]
    NotInvertible(String),
    #[error("could not invert map: {0}")]
    InversionFailed(String),
    #[error("found {found} of {needed} independent first integrals within degree {budget}")]
    NoFirstIntegral { needed: usize, found: usize, budget: u32 },
    #[error("not static feedback linearisable: {0}")]
    NotSfl(String),
    #[error("symmetry is not admissible: {0}")]
    NotAdmissible(String),
    #[error("not expressible in the invariants: {0}")]
    NotExpressibleInInvariants(String),
    #[error("normal form violated: {0}")]
    NormalFormViolation(String),
    #[error("prolongation insufficient: {0}")]
    ProlongationInsufficient(String),
    #[error("cannot solve for the compensator: {0}")]
    CompensatorSolveFailed(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

impl DflatError {
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            DflatError::Inconclusive(_)
                | DflatError::Expr(ExprError::Inconclusive(_))
                | DflatError::RankDisagreement { .. }
                | DflatError::DegenerateProbes(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DflatError>;
