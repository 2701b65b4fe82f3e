//! Analysis of economies modelled as column-stochastic income circulation
//! matrices.
//!
//! An economy of `n` agents is described by a matrix `F` whose entry
//! `f[i][j]` is the fraction of agent `j`'s wealth paid to agent `i` during
//! one time step; diagonal entries are savings fractions.  Wealth evolves by
//! `x(t+1) = F x(t)`, which conserves the total amount of money in play.
//!
//! The crate provides:
//!
//! * [`matrix`]: validated sparse matrices, wealth states, trajectories and
//!   dense matrix powers.
//! * [`graph`]: the circulation graph induced by the nonzero pattern, strong
//!   connectivity, period, primitivity exponent and the society verdict.
//! * [`generosity`]: minimum circulated-share profiles and the geometric
//!   convergence bound they yield for support experiments.
//! * [`block`]: wealth-ordered permutations, class partitions, and exact
//!   closed forms for economies with a pure cash hoarder.
//! * [`dynamics`]: epsilon-support experiments, recovery rates, and noisy
//!   (perturbed) evolution with a shared noise stream.
//! * [`ingest`]: estimation of circulation matrices from transaction logs
//!   and synthetic economy generators.
//! * [`io`]: file formats (JSON matrices and wealth states, CSV transaction
//!   logs and trajectories).

pub mod block;
pub mod dynamics;
pub mod error;
pub mod generosity;
pub mod graph;
pub mod ingest;
pub mod io;
pub mod matrix;

pub use block::{
    fragmented_asymptotics, hoarder_decompose, hoarder_limit, hoarder_power_closed_form,
    order_by_wealth, AbsorptionVerdict, ClassBlocks, ClassPartition, FragmentationDiagnosis,
    HoarderDecomposition,
};
pub use dynamics::{
    apply_support, perturbed_evolve, recovery_rate, support_experiment, PerturbationSpec,
    PerturbedExperimentResult, SupportEvent, SupportExperimentResult, SupportOptions,
};
pub use error::{Error, Result};
pub use generosity::{
    contraction_check, convergence_bound, generosity_profile, ContractionCheck, ConvergenceBound,
    GenerosityProfile,
};
pub use graph::{classify, CirculationGraph, PathWitness, SocietyClassification, Verdict};
pub use ingest::{
    average_icm, estimate_icm, synthesize_economy, EconomyProfile, EstimationWindow,
    TransactionRecord,
};
pub use matrix::{
    evolve, evolve_constant, l1_distance, l1_norm, AgentId, DenseMatrix, IncomeCirculationMatrix,
    Trajectory, WealthVector, DEFAULT_DENSE_CAP, DEFAULT_TOLERANCE, STRUCTURAL_ZERO,
};
