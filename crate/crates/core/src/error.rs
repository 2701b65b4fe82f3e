//! Domain errors.
//!
//! Everything a caller can trigger with bad data is an [`Error`] variant;
//! conditions that would contradict an already-checked invariant panic
//! instead.  File and parse problems live in [`crate::io::IoError`] so that
//! callers can tell invalid economies apart from unreadable files.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one agent")]
    EmptyMatrix,

    #[error("economy has {n} agents, operation needs at least {min}")]
    TooFewAgents { n: usize, min: usize },

    #[error("entry index ({row}, {col}) out of bounds for {n} agents")]
    IndexOutOfBounds { row: usize, col: usize, n: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("column {col} sums to {sum}, expected 1 within tolerance {tolerance}")]
    ColumnSumViolation {
        col: usize,
        sum: f64,
        tolerance: f64,
    },

    #[error("column {col} spends {sum} of unit wealth, which exceeds 1")]
    OverSpending { col: usize, sum: f64 },

    #[error("diagonal entry supplied for agent {agent}, but the savings diagonal is derived")]
    UnexpectedDiagonal { agent: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense operation on {n} agents exceeds cap {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    #[error("negative wealth {value} for agent {agent}")]
    NegativeWealth { agent: usize, value: f64 },

    #[error("circulation graph is not strongly connected ({scc_count} components)")]
    NotStronglyConnected { scc_count: usize },

    #[error("circulation graph is periodic with period {period}, not primitive")]
    NotPrimitive { period: usize },

    #[error("primitivity exponent exceeds cap {cap}")]
    ExponentCapExceeded { cap: usize },

    #[error("no path from agent {from} to agent {to}")]
    Unreachable { from: usize, to: usize },

    #[error("operation requires a cohesive society, verdict was {verdict}")]
    NotCohesive { verdict: &'static str },

    #[error("vector coordinates sum to {sum}, expected zero")]
    NotZeroSum { sum: f64 },

    #[error("matrix entry at ({row}, {col}) is not strictly positive")]
    NotPositive { row: usize, col: usize },

    #[error("epsilon must be strictly positive, got {value}")]
    NonPositiveEpsilon { value: f64 },

    #[error("support donor and recipient are both agent {agent}")]
    SameAgent { agent: usize },

    #[error("donor {donor} holds {wealth}, cannot give {epsilon}")]
    InsufficientDonorWealth {
        donor: usize,
        wealth: f64,
        epsilon: f64,
    },

    #[error("support event scheduled at time {event_time} but state is at time {state_time}")]
    TimeMismatch {
        event_time: usize,
        state_time: usize,
    },

    #[error("no default horizon applies to this economy, pass one explicitly")]
    HorizonRequired,

    #[error("last agent is not a pure cash hoarder: {reason}")]
    NotPureHoarder { reason: &'static str },

    #[error("sub-economy without the hoarder is not strongly connected")]
    SubEconomyNotWhole,

    #[error("linear system is singular or nearly singular (pivot {pivot})")]
    SingularSystem { pivot: f64 },

    #[error("agent {agent} appears in both classes of a partition")]
    OverlappingClasses { agent: usize },

    #[error("noise level must be non-negative, got {value}")]
    InvalidSigma { value: f64 },

    #[error("perturbation drove entry ({row}, {col}) below the structural zero threshold at step {step}")]
    PatternBroken { step: usize, row: usize, col: usize },

    #[error("perturbed matrix stopped being primitive at step {step}")]
    PrimitivityLost { step: usize },

    #[error("agent {payer} paid with zero wealth at time {time}")]
    ZeroWealthPayer { payer: usize, time: usize },

    #[error("agent {agent} pays itself at time {time}")]
    SelfPayment { agent: usize, time: usize },

    #[error("non-positive amount {amount} from {payer} to {payee} at time {time}")]
    NonPositiveAmount {
        time: usize,
        payer: usize,
        payee: usize,
        amount: f64,
    },

    #[error("transaction at time {time} does not belong to step {step}")]
    RecordOutsideStep { time: usize, step: usize },

    #[error("estimation window is empty")]
    EmptyWindow,

    #[error("unknown economy profile '{name}'")]
    UnknownProfile { name: String },
}

impl Error {
    /// Stable machine-readable tag, used by the structured error output of
    /// the command line tool.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMatrix => "empty_matrix",
            Error::TooFewAgents { .. } => "too_few_agents",
            Error::IndexOutOfBounds { .. } => "index_out_of_bounds",
            Error::NonFinite { .. } => "non_finite",
            Error::NegativeEntry { .. } => "negative_entry",
            Error::ColumnSumViolation { .. } => "column_sum_violation",
            Error::OverSpending { .. } => "over_spending",
            Error::UnexpectedDiagonal { .. } => "unexpected_diagonal",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SizeCapExceeded { .. } => "size_cap_exceeded",
            Error::NegativeWealth { .. } => "negative_wealth",
            Error::NotStronglyConnected { .. } => "not_strongly_connected",
            Error::NotPrimitive { .. } => "not_primitive",
            Error::ExponentCapExceeded { .. } => "exponent_cap_exceeded",
            Error::Unreachable { .. } => "unreachable",
            Error::NotCohesive { .. } => "not_cohesive",
            Error::NotZeroSum { .. } => "not_zero_sum",
            Error::NotPositive { .. } => "not_positive",
            Error::NonPositiveEpsilon { .. } => "non_positive_epsilon",
            Error::SameAgent { .. } => "same_agent",
            Error::InsufficientDonorWealth { .. } => "insufficient_donor_wealth",
            Error::TimeMismatch { .. } => "time_mismatch",
            Error::HorizonRequired => "horizon_required",
            Error::NotPureHoarder { .. } => "not_pure_hoarder",
            Error::SubEconomyNotWhole => "sub_economy_not_whole",
            Error::SingularSystem { .. } => "singular_system",
            Error::OverlappingClasses { .. } => "overlapping_classes",
            Error::InvalidSigma { .. } => "invalid_sigma",
            Error::PatternBroken { .. } => "pattern_broken",
            Error::PrimitivityLost { .. } => "primitivity_lost",
            Error::ZeroWealthPayer { .. } => "zero_wealth_payer",
            Error::SelfPayment { .. } => "self_payment",
            Error::NonPositiveAmount { .. } => "non_positive_amount",
            Error::RecordOutsideStep { .. } => "record_outside_step",
            Error::EmptyWindow => "empty_window",
            Error::UnknownProfile { .. } => "unknown_profile",
        }
    }
}
