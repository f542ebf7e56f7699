//! The adaptive-regularization driver with dynamic accuracy control.
//!
//! One outer iteration runs five steps: a certified criticality check with
//! its own accuracy loop, the regularized step with a second accuracy test,
//! the acceptance ratio on inexact function values, the σ update and the
//! accuracy rescaling. Evaluations go through an [`Evaluator`], which owns the
//! oracle, the floors and the ledger.

use std::fmt;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::composite::{
    delta_k_eps, error_bound_rhs, nu_bound, nu_k_bound, sigma_max_bound, tau_bound, theta_global, theta_threshold,
};
use crate::composite::{AccuracyState, AlgoConstants, InexactSnapshot, ProblemSpec, Quantity};
use crate::error::{ArldaError, OracleError, SubproblemError};
use crate::linalg::add;
use crate::oracle::{AccuracyFloor, EvaluationLedger, Evaluator, OracleRequest, OracleValue};
use crate::scalar::Real;
use crate::subproblem::{
    solve_criticality, solve_model, CriticalitySolution, ModelSolution, SubproblemOptions, WarmStart,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StallCase {
    /// The criticality accuracy loop could not tighten further.
    PhiNoise,
    /// The step accuracy loop could not tighten further.
    StepNoise,
    /// `f̄` could not be obtained at the accuracy the ratio test needs.
    FunctionNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Exit1,
    Exit2,
    MaxIterations,
    AccuracyStalled(StallCase),
    TargetUnreachable,
}

impl ExitStatus {
    pub fn is_exit(self) -> bool {
        matches!(self, ExitStatus::Exit1 | ExitStatus::Exit2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExitStatus::Exit1 => "exit1",
            ExitStatus::Exit2 => "exit2",
            ExitStatus::MaxIterations => "max-iterations",
            ExitStatus::AccuracyStalled(StallCase::PhiNoise) => "stalled-phi-noise",
            ExitStatus::AccuracyStalled(StallCase::StepNoise) => "stalled-step-noise",
            ExitStatus::AccuracyStalled(StallCase::FunctionNoise) => "stalled-function-noise",
            ExitStatus::TargetUnreachable => "target-unreachable",
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the driver carries between steps.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub sigma: T,
    pub omega: T,
    pub accuracy: AccuracyState<T>,
    pub snapshot: InexactSnapshot<T>,
    pub trial: Option<InexactSnapshot<T>>,
}

/// One row of the run trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub sigma: T,
    pub omega: T,
    /// Accuracies in force when the step was tested (after any shrinks).
    pub eps_f: T,
    pub eps_g: T,
    pub eps_c: T,
    pub eps_j: T,
    /// Accuracies at the top of the iteration, in `f, g, c, J` order.
    pub eps_start: [T; 4],
    /// Primal value of the last criticality solve.
    pub phibar: T,
    /// Certified upper bound from the same solve.
    pub phi_upper: T,
    pub dellbar: T,
    pub dmbar: T,
    pub snorm: T,
    /// NaN on the terminal row, which computes no step.
    pub rho: T,
    pub accepted: bool,
    /// Step 1.3 and 2.3 shrink events.
    pub shrinks: usize,
    /// Step 3 shrinks of `ε_f`.
    pub f_shrinks: usize,
    pub nf: u64,
    pub ng: u64,
    pub nc: u64,
    pub nj: u64,
    /// Evaluations of `f̄` at the iterate and at the trial point.
    pub nf_iterate: u64,
    pub nf_trial: u64,
    pub x: Vec<T>,
    pub s: Vec<T>,
    pub psi_bar: T,
    pub psi_bar_trial: T,
    pub terminal: bool,
}

impl<T: Real> IterationRecord<T> {
    pub fn step_computed(&self) -> bool {
        !self.terminal && !self.s.is_empty()
    }

    pub fn accuracy(&self) -> AccuracyState<T> {
        AccuracyState {
            eps_f: self.eps_f,
            eps_g: self.eps_g,
            eps_c: self.eps_c,
            eps_j: self.eps_j,
            maxima: crate::composite::AccuracyMaxima::uniform(T::zero()),
            omega: self.omega,
            gamma_eps: T::zero(),
        }
    }
}

/// Theoretical envelopes checked at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunAudits<T> {
    pub sigma_max: Option<T>,
    pub sigma_max_ok: Option<bool>,
    pub tau: Option<T>,
    pub tau_ok: Option<bool>,
    pub nu_ok: bool,
    /// `⌈ν(ε)⌉` and the total shrink count, for monotonic runs.
    pub nu_global: Option<T>,
    pub nu_global_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminationReport<T> {
    pub status: ExitStatus,
    pub x: Vec<T>,
    /// Final `φ̄`, or the noisy-optimality bound after a stall.
    pub phi_bar: T,
    pub phi_upper: T,
    pub noisy_optimality_bound: Option<T>,
    pub iterations: usize,
    pub successful: u64,
    pub ledger: EvaluationLedger,
    pub audits: RunAudits<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput<T> {
    pub report: TerminationReport<T>,
    pub records: Vec<IterationRecord<T>>,
}

/// Solver knobs that are not algorithm constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions<T> {
    pub criticality: SubproblemOptions<T>,
    pub model: SubproblemOptions<T>,
    /// Extra shrink events allowed per iteration beyond `⌈ν_k⌉` before a stall.
    pub shrink_cap_slack: usize,
    /// Re-solves with a 100× tighter gap when a decision straddles a threshold.
    pub straddle_retries: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            criticality: SubproblemOptions::default(),
            model: SubproblemOptions::default(),
            shrink_cap_slack: 5,
            straddle_retries: 4,
        }
    }
}

/// Reason a step could not complete normally.
#[derive(Debug, Clone, PartialEq)]
pub enum Interrupt {
    Stalled(StallCase),
    TargetUnreachable,
    Failed(ArldaError),
}

impl From<ArldaError> for Interrupt {
    fn from(e: ArldaError) -> Self {
        Interrupt::Failed(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step1Outcome<T> {
    Terminate { status: ExitStatus, criticality: CriticalitySolution<T> },
    Proceed(CriticalitySolution<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step3Outcome<T> {
    pub rho: T,
    pub accepted: bool,
    pub psi_bar: T,
    pub psi_bar_trial: T,
}

/// Per-iteration bookkeeping.
#[derive(Debug, Clone)]
struct Scratch<T> {
    eps_start: [T; 4],
    shrinks: usize,
    f_shrinks: usize,
    cap: usize,
    last_crit: Option<CriticalitySolution<T>>,
    /// `ε_g + L_h ε_J + 2 L_h ε_c` at the last completed criticality solve.
    last_noise: T,
}

enum Decision {
    Exit1,
    Exit2,
    Proceed,
    Shrink,
    Straddle { fallback: Box<Decision> },
}

/// The driver. Owns the problem, the constants, the evaluator and the state.
pub struct Arlda<T: Real> {
    spec: ProblemSpec<T>,
    consts: AlgoConstants<T>,
    evaluator: Evaluator<T>,
    options: SolverOptions<T>,
    state: SolverState<T>,
    scratch: Scratch<T>,
    warm_crit: WarmStart<T>,
    warm_model: WarmStart<T>,
}

impl<T: Real> Arlda<T> {
    /// Step 0.
    pub fn initialize(
        spec: ProblemSpec<T>,
        consts: AlgoConstants<T>,
        evaluator: Evaluator<T>,
    ) -> Result<Self, ArldaError> {
        Self::initialize_with(spec, consts, evaluator, SolverOptions::default())
    }

    pub fn initialize_with(
        spec: ProblemSpec<T>,
        consts: AlgoConstants<T>,
        evaluator: Evaluator<T>,
        options: SolverOptions<T>,
    ) -> Result<Self, ArldaError> {
        spec.validate()?;
        consts.validate()?;
        let accuracy = initial_accuracy(&consts, spec.l_h);
        let state = SolverState {
            k: 0,
            x: spec.x0.clone(),
            sigma: consts.sigma0,
            omega: accuracy.omega,
            accuracy,
            snapshot: InexactSnapshot::empty(spec.x0.clone()),
            trial: None,
        };
        for w in feasibility_check(&spec, &consts, evaluator.floors()) {
            warn!("{w}");
        }
        let eps_start = eps_array(&accuracy);
        Ok(Self {
            spec,
            consts,
            evaluator,
            options,
            state,
            scratch: Scratch { eps_start, shrinks: 0, f_shrinks: 0, cap: 0, last_crit: None, last_noise: T::zero() },
            warm_crit: WarmStart::default(),
            warm_model: WarmStart::default(),
        })
    }

    pub fn state(&self) -> &SolverState<T> {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SolverState<T> {
        &mut self.state
    }

    pub fn constants(&self) -> &AlgoConstants<T> {
        &self.consts
    }

    pub fn spec(&self) -> &ProblemSpec<T> {
        &self.spec
    }

    pub fn ledger(&self) -> &EvaluationLedger {
        self.evaluator.ledger()
    }

    /// `⌈ν_k(ε)⌉` for the current σ and ω.
    pub fn nu_k(&self) -> T {
        per_iteration_nu(&self.spec, &self.consts, self.state.sigma, self.state.omega)
    }

    fn begin_iteration(&mut self) {
        self.evaluator.ledger_mut().begin_iteration();
        let nu = self.nu_k();
        self.scratch = Scratch {
            eps_start: eps_array(&self.state.accuracy),
            shrinks: 0,
            f_shrinks: 0,
            cap: nu.ceil().to_usize().unwrap_or(usize::MAX / 2).saturating_add(self.options.shrink_cap_slack),
            last_crit: None,
            last_noise: T::zero(),
        };
    }

    fn evaluate_into(&mut self, trial: bool, q: Quantity, eps: T) -> Result<(), OracleError> {
        let snap = if trial { self.state.trial.as_mut().expect("trial snapshot") } else { &mut self.state.snapshot };
        if !snap.needs(q, eps) {
            return Ok(());
        }
        let point = snap.point.clone();
        let mut req = OracleRequest::new(&point, q, eps);
        if trial {
            req = req.at_trial();
        }
        let resp = self.evaluator.evaluate(req)?;
        let snap = if trial { self.state.trial.as_mut().expect("trial snapshot") } else { &mut self.state.snapshot };
        let cert = resp.certified_error;
        match resp.value {
            OracleValue::Scalar(v) => snap.store_f(v, eps, cert),
            OracleValue::Vector(v) if q == Quantity::G => snap.store_g(v, eps, cert),
            OracleValue::Vector(v) => snap.store_c(v, eps, cert),
            OracleValue::Matrix(v) => snap.store_j(v, eps, cert),
        }
        Ok(())
    }

    fn ensure_derivatives(&mut self) -> Result<(), Interrupt> {
        let acc = self.state.accuracy;
        for (q, eps) in [(Quantity::G, acc.eps_g), (Quantity::C, acc.eps_c), (Quantity::J, acc.eps_j)] {
            self.evaluate_into(false, q, eps).map_err(|e| oracle_interrupt(e, StallCase::PhiNoise))?;
        }
        Ok(())
    }

    fn shrink(&mut self, case: StallCase) -> Result<(), Interrupt> {
        if self.scratch.shrinks >= self.scratch.cap {
            warn!("iteration {}: shrink cap {} reached", self.state.k, self.scratch.cap);
            return Err(Interrupt::Stalled(case));
        }
        self.state.accuracy.shrink_derivative_accuracies();
        self.scratch.shrinks += 1;
        self.evaluator.ledger_mut().record_shrink();
        debug!(
            "iteration {}: shrink {} -> eps_g={:e} eps_c={:e} eps_J={:e}",
            self.state.k,
            self.scratch.shrinks,
            self.state.accuracy.eps_g.as_f64(),
            self.state.accuracy.eps_c.as_f64(),
            self.state.accuracy.eps_j.as_f64()
        );
        Ok(())
    }

    /// Step 1: criticality check with its accuracy loop.
    pub fn step1_check_termination(&mut self) -> Result<Step1Outcome<T>, Interrupt> {
        let eps = self.consts.epsilon;
        let l_h = self.spec.l_h;
        loop {
            self.ensure_derivatives()?;
            let omega = self.state.omega;
            let noise = self.state.accuracy.ball_noise(l_h);
            let mut opts = self.options.criticality;
            opts.gap_tol_abs = opts.gap_tol_abs.max(T::lit(0.05) * eps * omega);
            let mut retries = 0;
            let (crit, decision) = loop {
                let crit = solve_criticality(&self.state.snapshot, &self.spec.h, &opts, Some(&self.warm_crit))
                    .map_err(|e| subproblem_interrupt(e, StallCase::PhiNoise))?;
                let decision = decide(crit.phi_bar, crit.phi_upper(), noise, eps, omega);
                match decision {
                    Decision::Straddle { fallback } => {
                        if retries >= self.options.straddle_retries {
                            break (crit, *fallback);
                        }
                        retries += 1;
                        opts.gap_tol = opts.gap_tol * T::lit(1e-2);
                        opts.gap_tol_abs = opts.gap_tol_abs * T::lit(1e-2);
                    }
                    d => break (crit, d),
                }
            };
            self.warm_crit = WarmStart { primal: Some(crit.direction.clone()), dual: Some(crit.dual.clone()) };
            self.scratch.last_crit = Some(crit.clone());
            self.scratch.last_noise = noise;
            match decision {
                Decision::Exit1 => return Ok(Step1Outcome::Terminate { status: ExitStatus::Exit1, criticality: crit }),
                Decision::Exit2 => return Ok(Step1Outcome::Terminate { status: ExitStatus::Exit2, criticality: crit }),
                Decision::Proceed => return Ok(Step1Outcome::Proceed(crit)),
                Decision::Shrink | Decision::Straddle { .. } => self.shrink(StallCase::PhiNoise)?,
            }
        }
    }

    /// Step 2: regularized step and its accuracy test. `Ok(None)` means the
    /// accuracies were shrunk and Step 1 must run again.
    pub fn step2_compute_step(&mut self, phi_bar: T) -> Result<Option<ModelSolution<T>>, Interrupt> {
        let sigma = self.state.sigma;
        let target = T::lit(0.25) * T::one().min(phi_bar / sigma) * phi_bar;
        let mut opts = self.options.model;
        opts.gap_tol_abs = opts.gap_tol_abs.max(T::lit(1e-3) * target);
        let sol = solve_model(&self.state.snapshot, &self.spec.h, sigma, Some(target), &opts, Some(&self.warm_model))
            .map_err(|e| subproblem_interrupt(e, StallCase::StepNoise))?;
        self.warm_model = WarmStart { primal: Some(sol.step.clone()), dual: Some(sol.dual.clone()) };
        let lhs = error_bound_rhs(&self.state.accuracy, self.spec.l_h, sol.report.norm_v);
        if lhs <= self.state.omega * sol.report.linearized_decrease {
            Ok(Some(sol))
        } else {
            self.shrink(StallCase::StepNoise)?;
            Ok(None)
        }
    }

    /// Step 3: `ε_f` control, trial evaluation and the ratio test. Moves the
    /// iterate on acceptance.
    pub fn step3_accept(&mut self, step: &ModelSolution<T>) -> Result<Step3Outcome<T>, Interrupt> {
        let dl = step.report.linearized_decrease;
        let bound = self.state.omega * dl;
        while self.state.accuracy.eps_f > bound {
            self.state.accuracy.eps_f = self.state.accuracy.eps_f * self.state.accuracy.gamma_eps;
            self.scratch.f_shrinks += 1;
        }
        let acc = self.state.accuracy;
        let fnoise = |e| oracle_interrupt(e, StallCase::FunctionNoise);
        self.evaluate_into(false, Quantity::F, acc.eps_f).map_err(fnoise)?;
        let psi_bar = self.state.snapshot.psi_bar(&self.spec.h)?;

        let trial_point = add(&self.state.x, &step.step);
        self.state.trial = Some(InexactSnapshot::empty(trial_point));
        self.evaluate_into(true, Quantity::F, acc.eps_f).map_err(fnoise)?;
        self.evaluate_into(true, Quantity::C, acc.eps_c).map_err(fnoise)?;
        let trial = self.state.trial.take().expect("trial snapshot");
        let psi_bar_trial = trial.psi_bar(&self.spec.h)?;
        let rho = (psi_bar - psi_bar_trial) / dl;
        let accepted = rho >= self.consts.eta1;
        if accepted {
            self.state.x = trial.point.clone();
            self.state.snapshot = trial;
            self.warm_crit = WarmStart::default();
            self.warm_model = WarmStart::default();
        } else {
            self.state.trial = Some(trial);
        }
        self.evaluator.ledger_mut().record_outcome(accepted);
        Ok(Step3Outcome { rho, accepted, psi_bar, psi_bar_trial })
    }

    /// Step 4.
    pub fn step4_update_sigma(&mut self, rho: T) -> T {
        self.state.sigma = updated_sigma(&self.consts, self.state.sigma, rho);
        self.state.sigma
    }

    /// Step 5.
    pub fn step5_update_accuracy(&mut self) {
        let omega_next = self.consts.omega_for(self.state.sigma);
        self.state.accuracy =
            updated_accuracy(&self.state.accuracy, self.state.omega, omega_next, self.spec.l_h, self.consts.monotonic);
        self.state.omega = omega_next;
        self.state.k += 1;
    }

    fn record(
        &self,
        crit: Option<&CriticalitySolution<T>>,
        step: Option<&ModelSolution<T>>,
        outcome: Option<&Step3Outcome<T>>,
        x_before: Vec<T>,
    ) -> IterationRecord<T> {
        let acc = self.state.accuracy;
        let ledger = self.evaluator.ledger();
        let nan = T::nan();
        IterationRecord {
            k: self.state.k,
            sigma: self.state.sigma,
            omega: self.state.omega,
            eps_f: acc.eps_f,
            eps_g: acc.eps_g,
            eps_c: acc.eps_c,
            eps_j: acc.eps_j,
            eps_start: self.scratch.eps_start,
            phibar: crit.map_or(nan, |c| c.phi_bar),
            phi_upper: crit.map_or(nan, |c| c.phi_upper()),
            dellbar: step.map_or(T::zero(), |s| s.report.linearized_decrease),
            dmbar: step.map_or(T::zero(), |s| s.report.model_decrease),
            snorm: step.map_or(T::zero(), |s| s.report.norm_v),
            rho: outcome.map_or(nan, |o| o.rho),
            accepted: outcome.is_some_and(|o| o.accepted),
            shrinks: self.scratch.shrinks,
            f_shrinks: self.scratch.f_shrinks,
            nf: ledger.iteration_count(Quantity::F),
            ng: ledger.iteration_count(Quantity::G),
            nc: ledger.iteration_count(Quantity::C),
            nj: ledger.iteration_count(Quantity::J),
            nf_iterate: ledger.iteration_at_iterate[Quantity::F.index()],
            nf_trial: ledger.iteration_at_trial[Quantity::F.index()],
            x: x_before,
            s: step.map_or_else(Vec::new, |s| s.step.clone()),
            psi_bar: outcome.map_or(nan, |o| o.psi_bar),
            psi_bar_trial: outcome.map_or(nan, |o| o.psi_bar_trial),
            terminal: outcome.is_none(),
        }
    }

    /// Noisy-optimality bound `max(ε/2, Δℓ̄(d)) + ε_g + L_h ε_J + 2 L_h ε_c`.
    fn noisy_bound(&self) -> T {
        let half = self.consts.epsilon / T::lit(2.0);
        let (dl, noise) = match &self.scratch.last_crit {
            Some(c) => (c.phi_upper(), self.scratch.last_noise),
            None => (T::zero(), self.state.accuracy.ball_noise(self.spec.l_h)),
        };
        half.max(dl) + noise
    }

    /// Runs Steps 1–5 until termination.
    pub fn run_with_observer<F: FnMut(&IterationRecord<T>)>(mut self, mut observer: F) -> RunOutput<T> {
        let mut records = Vec::new();
        info!(
            "solving '{}' (n={}, m={}) with oracle '{}', epsilon={:e}",
            self.spec.name,
            self.spec.n,
            self.spec.m,
            self.evaluator.oracle_name(),
            self.consts.epsilon.as_f64()
        );
        let (status, final_crit, noisy) = loop {
            if self.state.k >= self.consts.max_iterations {
                break (ExitStatus::MaxIterations, self.scratch.last_crit.clone(), None);
            }
            self.begin_iteration();
            let x_before = self.state.x.clone();
            let interrupted = |s: &Self, i: Interrupt| -> (ExitStatus, Option<T>) {
                match i {
                    Interrupt::Stalled(case) => (ExitStatus::AccuracyStalled(case), Some(s.noisy_bound())),
                    Interrupt::TargetUnreachable => (ExitStatus::TargetUnreachable, None),
                    Interrupt::Failed(e) => {
                        warn!("iteration {}: {e}", s.state.k);
                        (ExitStatus::AccuracyStalled(StallCase::PhiNoise), Some(s.noisy_bound()))
                    }
                }
            };
            // Steps 1 and 2, restarting Step 1 after every Step 2.3 shrink.
            let step = loop {
                match self.step1_check_termination() {
                    Ok(Step1Outcome::Terminate { status, criticality }) => {
                        break Err((status, None, Some(criticality)))
                    }
                    Ok(Step1Outcome::Proceed(crit)) => match self.step2_compute_step(crit.phi_bar) {
                        Ok(Some(sol)) => break Ok((crit, sol)),
                        Ok(None) => continue,
                        Err(i) => {
                            let (st, nb) = interrupted(&self, i);
                            break Err((st, nb, Some(crit)));
                        }
                    },
                    Err(i) => {
                        let (st, nb) = interrupted(&self, i);
                        break Err((st, nb, self.scratch.last_crit.clone()));
                    }
                }
            };
            let (crit, sol) = match step {
                Ok(v) => v,
                Err((status, noisy, crit)) => {
                    let rec = self.record(crit.as_ref(), None, None, x_before);
                    observer(&rec);
                    records.push(rec);
                    break (status, crit, noisy);
                }
            };
            let outcome = match self.step3_accept(&sol) {
                Ok(o) => o,
                Err(i) => {
                    let (st, nb) = interrupted(&self, i);
                    let rec = self.record(Some(&crit), Some(&sol), None, x_before);
                    observer(&rec);
                    records.push(rec);
                    break (st, Some(crit), nb);
                }
            };
            let rec = self.record(Some(&crit), Some(&sol), Some(&outcome), x_before);
            debug!(
                "k={} sigma={:e} phibar={:e} dellbar={:e} rho={:.4} {}",
                rec.k,
                rec.sigma.as_f64(),
                rec.phibar.as_f64(),
                rec.dellbar.as_f64(),
                rec.rho.as_f64(),
                if rec.accepted { "accepted" } else { "rejected" }
            );
            observer(&rec);
            records.push(rec);
            self.step4_update_sigma(outcome.rho);
            self.step5_update_accuracy();
        };

        let phi_bar = final_crit.as_ref().map_or(T::nan(), |c| c.phi_bar);
        let phi_upper = final_crit.as_ref().map_or(T::nan(), |c| c.phi_upper());
        let audits = run_audits(&self.spec, &self.consts, &records);
        let ledger = self.evaluator.ledger().clone();
        info!("'{}' finished: {} after {} iterations", self.spec.name, status, records.len());
        RunOutput {
            report: TerminationReport {
                status,
                x: self.state.x.clone(),
                phi_bar: noisy.unwrap_or(phi_bar),
                phi_upper,
                noisy_optimality_bound: noisy,
                iterations: records.len(),
                successful: ledger.successful,
                ledger,
                audits,
            },
            records,
        }
    }

    pub fn run(self) -> RunOutput<T> {
        self.run_with_observer(|_| {})
    }
}

/// Convenience wrapper: initialize and run.
pub fn run<T: Real>(
    spec: &ProblemSpec<T>,
    consts: &AlgoConstants<T>,
    evaluator: Evaluator<T>,
) -> Result<RunOutput<T>, ArldaError> {
    Ok(Arlda::initialize(spec.clone(), *consts, evaluator)?.run())
}

pub fn run_with_observer<T: Real, F: FnMut(&IterationRecord<T>)>(
    spec: &ProblemSpec<T>,
    consts: &AlgoConstants<T>,
    evaluator: Evaluator<T>,
    options: SolverOptions<T>,
    observer: F,
) -> Result<RunOutput<T>, ArldaError> {
    Ok(Arlda::initialize_with(spec.clone(), *consts, evaluator, options)?.run_with_observer(observer))
}

fn eps_array<T: Real>(a: &AccuracyState<T>) -> [T; 4] {
    [a.eps_f, a.eps_g, a.eps_c, a.eps_j]
}

fn oracle_interrupt(e: OracleError, case: StallCase) -> Interrupt {
    match e {
        OracleError::AccuracyFloorReached { .. } => {
            warn!("{e}");
            Interrupt::Stalled(case)
        }
        other => Interrupt::Failed(other.into()),
    }
}

fn subproblem_interrupt(e: ArldaError, case: StallCase) -> Interrupt {
    match e {
        ArldaError::Subproblem(SubproblemError::TargetUnreachable { .. }) => Interrupt::TargetUnreachable,
        ArldaError::Subproblem(SubproblemError::NonConvergence { .. }) => {
            warn!("{e}");
            Interrupt::Stalled(case)
        }
        other => Interrupt::Failed(other),
    }
}

/// Step 1.2 decision from the certified bracket `[lower, upper]` on `φ̄`.
/// Termination uses `upper`; the noise test uses `lower`.
fn decide<T: Real>(lower: T, upper: T, noise: T, eps: T, omega: T) -> Decision {
    let half = eps / T::lit(2.0);
    let exit1 = eps / (T::one() + omega);
    if noise <= omega * lower {
        if upper <= exit1 {
            Decision::Exit1
        } else if lower > exit1 {
            Decision::Proceed
        } else {
            Decision::Straddle { fallback: Box::new(Decision::Proceed) }
        }
    } else if noise <= omega * upper {
        Decision::Straddle { fallback: Box::new(Decision::Shrink) }
    } else if upper <= half && noise <= half {
        Decision::Exit2
    } else if lower > half || noise > half {
        Decision::Shrink
    } else {
        Decision::Straddle { fallback: Box::new(Decision::Shrink) }
    }
}

/// Step 0 accuracies: `ω₀ = min(κ_ω, 1/σ₀)` split evenly between `ε_f` and
/// `L_h ε_c`, capped at the maxima; `ε_g, ε_J` start at their maxima.
pub fn initial_accuracy<T: Real>(consts: &AlgoConstants<T>, l_h: T) -> AccuracyState<T> {
    let omega0 = consts.omega_for(consts.sigma0);
    let m = consts.eps_max;
    let (eps_f, eps_c) = if l_h == T::zero() {
        (m.f.min(omega0), m.c)
    } else {
        let share = omega0 / (T::lit(2.0) * T::one().max(l_h));
        (m.f.min(share), m.c.min(share))
    };
    AccuracyState { eps_f, eps_g: m.g, eps_c, eps_j: m.j, maxima: m, omega: omega0, gamma_eps: consts.gamma_eps }
}

/// Step 4 rule with the endpoint choices `max(σ_min, γ₁σ)`, `σ`, `γ₂σ`.
pub fn updated_sigma<T: Real>(consts: &AlgoConstants<T>, sigma: T, rho: T) -> T {
    if rho >= consts.eta2 {
        consts.sigma_min.max(consts.gamma1 * sigma)
    } else if rho >= consts.eta1 {
        sigma
    } else {
        consts.gamma2 * sigma
    }
}

/// Step 5 accuracy rule for the move `ω_k → ω_{k+1}`.
pub fn updated_accuracy<T: Real>(
    acc: &AccuracyState<T>,
    omega: T,
    omega_next: T,
    l_h: T,
    monotonic: bool,
) -> AccuracyState<T> {
    let mut next = *acc;
    next.omega = omega_next;
    if !monotonic {
        let r = omega_next / omega;
        let m = acc.maxima;
        next.eps_f = m.f.min(r * acc.eps_f);
        next.eps_g = m.g.min(r * acc.eps_g);
        next.eps_c = m.c.min(r * acc.eps_c);
        next.eps_j = m.j.min(r * acc.eps_j);
    }
    let load = next.eps_f + l_h * next.eps_c;
    if load > omega_next {
        let shrink = omega_next / load;
        next.eps_f = next.eps_f * shrink;
        next.eps_c = next.eps_c * shrink;
    }
    next
}

/// `ν_k(ε)` at the given σ and ω.
pub fn per_iteration_nu<T: Real>(spec: &ProblemSpec<T>, consts: &AlgoConstants<T>, sigma: T, omega: T) -> T {
    let theta = theta_threshold(&consts.eps_max, spec.l_h, omega, consts.sigma_min);
    nu_k_bound(
        &consts.eps_max,
        spec.l_h,
        theta,
        omega,
        consts.epsilon,
        delta_k_eps(consts.epsilon, sigma),
        consts.gamma_eps,
    )
}

/// `ν(ε)`, available when `σ_max` is.
pub fn global_nu<T: Real>(spec: &ProblemSpec<T>, consts: &AlgoConstants<T>) -> Option<T> {
    let sigma_max = sigma_max_bound(spec, consts)?;
    let theta = theta_global(&consts.eps_max, spec.l_h, sigma_max, consts.sigma_min);
    Some(nu_bound(&consts.eps_max, spec.l_h, theta, sigma_max, consts.epsilon, consts.gamma_eps))
}

/// `τ(ε)`, available when `σ_max` and `ψ_low` are.
pub fn iteration_envelope<T: Real>(spec: &ProblemSpec<T>, consts: &AlgoConstants<T>) -> Option<T> {
    let sigma_max = sigma_max_bound(spec, consts)?;
    let gap = (spec.psi(&spec.x0) - spec.psi_low?).max(T::zero());
    Some(tau_bound(sigma_max, gap, consts, consts.epsilon))
}

fn run_audits<T: Real>(
    spec: &ProblemSpec<T>,
    consts: &AlgoConstants<T>,
    records: &[IterationRecord<T>],
) -> RunAudits<T> {
    let slack = T::lit(1e-9);
    let sigma_max = sigma_max_bound(spec, consts);
    let sigma_max_ok = sigma_max.map(|s| records.iter().all(|r| r.sigma <= s * (T::one() + slack)));
    let tau = iteration_envelope(spec, consts);
    let tau_ok = tau.map(|t| T::from_usize_lossy(records.len()) <= t);
    let nu_ok = records
        .iter()
        .all(|r| T::from_usize_lossy(r.shrinks) <= per_iteration_nu(spec, consts, r.sigma, r.omega).ceil());
    let (nu_global, nu_global_ok) = if consts.monotonic {
        let nu = global_nu(spec, consts);
        let total: usize = records.iter().map(|r| r.shrinks).sum();
        (nu, nu.map(|v| T::from_usize_lossy(total) <= v.ceil()))
    } else {
        (None, None)
    };
    RunAudits { sigma_max, sigma_max_ok, tau, tau_ok, nu_ok, nu_global, nu_global_ok }
}

/// One violated pre-run sanity condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityWarning {
    pub condition: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for FeasibilityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accuracy floors may be too coarse for the requested epsilon: {} needs {:e} <= {:e}",
            self.condition, self.lhs, self.rhs
        )
    }
}

/// Checks the declared floors against the accuracies that reaching `ε` is
/// expected to need.
pub fn feasibility_check<T: Real>(
    spec: &ProblemSpec<T>,
    consts: &AlgoConstants<T>,
    floors: &AccuracyFloor<T>,
) -> Vec<FeasibilityWarning> {
    let mut out = Vec::new();
    let l_h = spec.l_h;
    let eps = consts.epsilon;
    let two = T::lit(2.0);
    let noise = floors.floor_g + l_h * floors.floor_j + two * l_h * floors.floor_c;
    if noise > eps / two {
        out.push(FeasibilityWarning { condition: "derivative noise", lhs: noise.as_f64(), rhs: (eps / two).as_f64() });
    }
    if let (Some(l_g), Some(l_j)) = (spec.l_g, spec.l_j) {
        let rhs = eps * (T::one() - consts.eta2) / (consts.gamma3 * (T::lit(3.0) + two * (l_g + l_h * l_j)));
        let step = (floors.floor_g + l_h * floors.floor_j) * eps.sqrt() + two * l_h * floors.floor_c;
        if step > rhs {
            out.push(FeasibilityWarning { condition: "step accuracy", lhs: step.as_f64(), rhs: rhs.as_f64() });
        }
        if floors.floor_f > rhs {
            out.push(FeasibilityWarning {
                condition: "function accuracy",
                lhs: floors.floor_f.as_f64(),
                rhs: rhs.as_f64(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::OuterFunction;
    use crate::linalg::Matrix;
    use std::sync::Arc;

    fn consts() -> AlgoConstants<f64> {
        AlgoConstants { kappa_omega: 1.0 / 60.0, ..AlgoConstants::default() }
    }

    #[test]
    fn initial_accuracy_examples() {
        let c = consts();
        let a = initial_accuracy(&c, 1.0);
        assert!((a.eps_f - 1.0 / 120.0).abs() < 1e-15 && (a.eps_c - 1.0 / 120.0).abs() < 1e-15);
        assert!((a.omega - 1.0 / 60.0).abs() < 1e-15);
        assert!(a.eps_f + a.eps_c <= a.omega + 1e-15);

        let a0 = initial_accuracy(&c, 0.0);
        assert_eq!(a0.eps_c, 0.1);
        assert!((a0.eps_f - 1.0 / 60.0).abs() < 1e-15);

        let big = AlgoConstants { sigma0: 200.0, ..c };
        assert!((initial_accuracy(&big, 1.0).omega - 0.005).abs() < 1e-15);
    }

    #[test]
    fn step1_decisions() {
        // noise 0.004 ≤ 0.01·0.5 and 0.5 ≤ 0.6/1.01.
        assert!(matches!(decide(0.5, 0.5, 0.004, 0.6, 0.01), Decision::Exit1));
        assert!(matches!(decide(0.3, 0.3, 0.4, 1.0, 0.01), Decision::Exit2));
        assert!(matches!(decide(0.3, 0.3, 0.6, 1.0, 0.01), Decision::Shrink));
        assert!(matches!(decide(2.0, 2.0, 0.001, 1.0, 0.01), Decision::Proceed));
        assert!(matches!(decide(0.4, 0.6, 0.4, 1.0, 0.01), Decision::Straddle { .. }));
    }

    #[test]
    fn sigma_update_examples() {
        let c = AlgoConstants::<f64>::default();
        assert_eq!(updated_sigma(&c, 1.0, 0.95), 0.5);
        assert_eq!(updated_sigma(&c, 1.0, 0.5), 1.0);
        assert_eq!(updated_sigma(&c, 1.0, 0.05), 2.0);
        assert_eq!(updated_sigma(&c, 1e-8, 0.95), 1e-8);
        // ρ exactly on the thresholds.
        assert_eq!(updated_sigma(&c, 1.0, 0.9), 0.5);
        assert_eq!(updated_sigma(&c, 1.0, 0.1), 1.0);
    }

    #[test]
    fn accuracy_update_examples() {
        let c = consts();
        assert_eq!(c.omega_for(0.5), 1.0 / 60.0);
        assert_eq!(c.omega_for(200.0), 0.005);

        let a = initial_accuracy(&c, 1.0);
        // σ doubled past 60: ω halves and every ε follows.
        let n = updated_accuracy(&a, 1.0 / 60.0, 1.0 / 120.0, 1.0, false);
        assert!((n.eps_f - a.eps_f / 2.0).abs() < 1e-15);
        assert!((n.eps_g - 0.05).abs() < 1e-15);
        assert!(n.eps_f + n.eps_c <= 1.0 / 120.0 + 1e-15);
        // Growth is capped by the maxima.
        let up = updated_accuracy(&n, 1.0 / 120.0, 1.0 / 60.0, 1.0, false);
        assert!(up.eps_g <= 0.1);
        // Monotonic: ω grows, nothing changes.
        let mono = updated_accuracy(&n, 1.0 / 120.0, 1.0 / 60.0, 1.0, true);
        assert_eq!((mono.eps_f, mono.eps_g, mono.eps_c, mono.eps_j), (n.eps_f, n.eps_g, n.eps_c, n.eps_j));
        // Monotonic: ω drops, only ε_f and ε_c shrink.
        let mono_dn = updated_accuracy(&a, 1.0 / 60.0, 1.0 / 240.0, 1.0, true);
        assert!(mono_dn.eps_f + mono_dn.eps_c <= 1.0 / 240.0 + 1e-15);
        assert_eq!(mono_dn.eps_g, a.eps_g);
    }

    fn half_norm_sq() -> ProblemSpec<f64> {
        ProblemSpec::new(
            "half-norm",
            2,
            1,
            Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1])),
            Arc::new(|x: &[f64]| x.to_vec()),
            Arc::new(|_: &[f64]| vec![0.0]),
            Arc::new(|_: &[f64]| Matrix::zeros(1, 2)),
            OuterFunction::zero(),
            vec![1.0, 1.0],
        )
        .with_lipschitz(0.5, 0.0)
        .with_lower_bound(0.0)
    }

    #[test]
    fn smooth_run_reaches_exit1() {
        let spec = half_norm_sq();
        let c = AlgoConstants { epsilon: 1e-6, ..AlgoConstants::default() };
        let out = run(&spec, &c, Evaluator::exact(&spec)).unwrap();
        assert!(out.report.status.is_exit(), "{:?}", out.report.status);
        let g = (spec.g_exact)(&out.report.x);
        assert!(crate::linalg::norm2(&g) <= 1e-6);
        assert_eq!(out.report.audits.sigma_max_ok, Some(true));
        assert_eq!(out.report.audits.tau_ok, Some(true));
        assert!(out.report.audits.nu_ok);
    }

    #[test]
    fn l1_identity_run_reaches_zero() {
        let spec = ProblemSpec::new(
            "abs",
            1,
            1,
            Arc::new(|_: &[f64]| 0.0),
            Arc::new(|_: &[f64]| vec![0.0]),
            Arc::new(|x: &[f64]| x.to_vec()),
            Arc::new(|_: &[f64]| Matrix::identity(1)),
            OuterFunction::l1(1.0),
            vec![5.0],
        )
        .with_lipschitz(0.0, 0.0)
        .with_lower_bound(0.0);
        let c = AlgoConstants { epsilon: 1e-4, ..AlgoConstants::default() };
        let out = run(&spec, &c, Evaluator::exact(&spec)).unwrap();
        assert!(out.report.status.is_exit(), "{:?}", out.report);
        assert!(out.report.x[0].abs() < 1e-3, "{:?}", out.report.x);
    }

    #[test]
    fn floors_force_a_stall() {
        let spec = half_norm_sq();
        let c = AlgoConstants { epsilon: 1e-6, ..AlgoConstants::default() };
        let ev = Evaluator::new(Box::new(crate::oracle::AdditiveNoiseOracle::new(
            &spec,
            3,
            crate::oracle::NoiseMode::Uniform,
        )))
        .with_floors(AccuracyFloor::uniform(1e-2));
        let out = run(&spec, &c, ev).unwrap();
        assert!(matches!(out.report.status, ExitStatus::AccuracyStalled(_)), "{:?}", out.report.status);
        let bound = out.report.noisy_optimality_bound.unwrap();
        assert!(bound >= 5e-7);
        let last = out.records.last().unwrap();
        assert!(last.shrinks <= per_iteration_nu(&spec, &c, last.sigma, last.omega).ceil() as usize + 5);
    }

    #[test]
    fn feasibility_flags_coarse_floors() {
        let spec = half_norm_sq();
        let c = AlgoConstants { epsilon: 1e-6, ..AlgoConstants::default() };
        assert!(feasibility_check(&spec, &c, &AccuracyFloor::uniform(0.0)).is_empty());
        let w = feasibility_check(&spec, &c, &AccuracyFloor::uniform(1e-2));
        assert!(w.iter().any(|w| w.condition == "derivative noise"));
        assert!(w.iter().any(|w| w.condition == "function accuracy"));
    }
}
