//! Adaptive regularization with dynamic accuracy for composite problems
//! `min ψ(x) = f(x) + h(c(x))` with smooth `f, c` and a norm `h`.
//!
//! Values, gradients and Jacobians come from inexact oracles that certify an
//! absolute error bound; the solver asks for the accuracy it needs and tightens
//! it only when the criticality or step tests require it.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`). The `*64` aliases
//! below fix the scalar to `f64`.

pub mod composite;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod subproblem;
pub mod suite;
pub mod verify;

pub use composite::*;
pub use error::{ArldaError, OracleError, SubproblemError};
pub use linalg::Matrix;
pub use oracle::{
    AccuracyFloor, AdditiveNoiseOracle, EvalSite, EvaluationLedger, Evaluator, ExactOracle, FiniteSum, InexactOracle,
    LedgerSummary, NoiseMode, OracleRequest, OracleResponse, OracleValue, PartialSumOracle, SeriesExpansion,
    TruncatedSeriesOracle,
};
pub use scalar::Real;
pub use solver::{
    run, run_with_observer, Arlda, ExitStatus, IterationRecord, RunAudits, RunOutput, SolverOptions, SolverState,
    StallCase, TerminationReport,
};
pub use subproblem::{
    solve_criticality, solve_model, CriticalitySolution, ModelSolution, SubproblemCertificate, SubproblemOptions,
};
pub use suite::{OracleKind, ProblemId, SuiteProblem};
pub use verify::{audit_run, brute_force_phi, finite_diff_check, AuditFinding};

pub type ProblemSpec64 = ProblemSpec<f64>;
pub type AlgoConstants64 = AlgoConstants<f64>;
pub type OuterFunction64 = OuterFunction<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Evaluator64 = Evaluator<f64>;
pub type IterationRecord64 = IterationRecord<f64>;
pub type RunOutput64 = RunOutput<f64>;
pub type TerminationReport64 = TerminationReport<f64>;
pub type SuiteProblem64 = SuiteProblem<f64>;
