//! Certified solvers for the two convex subproblems of an iteration:
//!
//! * criticality: `max_{‖d‖≤1} Δℓ̄(d)`,
//! * regularized model: `max_s Δm̄(s) = Δℓ̄(s) − (σ/2)‖s‖²`.
//!
//! Both are solved with a first-order primal-dual splitting on
//! `min_v gᵀv + R(v) + h(c + Jv)` where `R` is the unit-ball indicator or
//! `(σ/2)‖v‖²`. Since `h` is a norm, `h(z) = max_{y ∈ B*} yᵀz` and the Fenchel
//! dual is explicit:
//!
//! * criticality: `D(y) = cᵀy − ‖g + Jᵀy‖`,
//! * model: `D(y) = cᵀy − ‖g + Jᵀy‖² / (2σ)`,
//!
//! so `h(c) − D(y)` bounds the best achievable decrease from above for every
//! `y ∈ B*`. Every returned solution carries that bracket as its certificate.

use serde::Serialize;

use crate::composite::{DecreaseReport, InexactSnapshot, OuterFunction, OuterKind};
use crate::error::{ArldaError, SubproblemError};
use crate::linalg::{dot, norm2, Matrix};
use crate::scalar::Real;

pub use crate::composite::project_l1_ball;

/// Primal value, dual bound and their gap for a decrease-maximization
/// subproblem (`gap = dual_bound − primal_value`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubproblemCertificate<T> {
    pub primal_value: T,
    pub dual_bound: T,
    pub gap: T,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalitySolution<T> {
    pub direction: Vec<T>,
    /// `Δℓ̄(d)`, a lower bound on the inexact criticality measure.
    pub phi_bar: T,
    pub certificate: SubproblemCertificate<T>,
    pub dual: Vec<T>,
}

impl<T: Real> CriticalitySolution<T> {
    /// Certified upper bound on `max_{‖d‖≤1} Δℓ̄(d)`.
    pub fn phi_upper(&self) -> T {
        self.certificate.dual_bound.max(self.phi_bar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSolution<T> {
    pub step: Vec<T>,
    pub report: DecreaseReport<T>,
    pub certificate: SubproblemCertificate<T>,
    pub dual: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubproblemOptions<T> {
    /// Relative gap target (fraction of the primal value).
    pub gap_tol: T,
    /// Absolute gap target used when the primal value is tiny.
    pub gap_tol_abs: T,
    pub max_iter: usize,
    /// Stop the model solve as soon as the target decrease is met instead of
    /// also waiting for the gap tolerance.
    pub early_exit: bool,
}

impl<T: Real> Default for SubproblemOptions<T> {
    fn default() -> Self {
        Self { gap_tol: T::lit(1e-2), gap_tol_abs: T::lit(1e-12), max_iter: 200_000, early_exit: false }
    }
}

impl<T: Real> SubproblemOptions<T> {
    pub fn tight() -> Self {
        Self { gap_tol: T::lit(1e-10), gap_tol_abs: T::lit(1e-12), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubproblemKind<T> {
    Criticality,
    Model { sigma: T },
}

/// One subproblem instance over fixed `ḡ, c̄, J̄`.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemInstance<'a, T: Real> {
    pub g: &'a [T],
    pub c: &'a [T],
    pub j: &'a Matrix<T>,
    pub h: &'a OuterFunction<T>,
    pub kind: SubproblemKind<T>,
}

impl<'a, T: Real> SubproblemInstance<'a, T> {
    pub fn criticality(snapshot: &'a InexactSnapshot<T>, h: &'a OuterFunction<T>) -> Result<Self, ArldaError> {
        Ok(Self { g: snapshot.g()?, c: snapshot.c()?, j: snapshot.j()?, h, kind: SubproblemKind::Criticality })
    }

    pub fn model(snapshot: &'a InexactSnapshot<T>, h: &'a OuterFunction<T>, sigma: T) -> Result<Self, ArldaError> {
        if !(sigma > T::zero()) {
            return Err(ArldaError::Config(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { g: snapshot.g()?, c: snapshot.c()?, j: snapshot.j()?, h, kind: SubproblemKind::Model { sigma } })
    }

    pub fn linearized_decrease(&self, v: &[T]) -> T {
        crate::composite::linearized_decrease_raw(self.g, self.c, self.j, self.h, v)
    }

    /// Objective being maximized: `Δℓ̄(v)` or `Δm̄(v)`.
    pub fn primal_value(&self, v: &[T]) -> T {
        let l = self.linearized_decrease(v);
        match self.kind {
            SubproblemKind::Criticality => l,
            SubproblemKind::Model { sigma } => {
                let nv = norm2(v);
                l - sigma / T::lit(2.0) * nv * nv
            }
        }
    }

    /// `h(c) − D(y)` for `y` in the dual ball.
    pub fn dual_bound(&self, y: &[T]) -> T {
        let mut r = self.j.tr_mul_vec(y);
        for (ri, &gi) in r.iter_mut().zip(self.g) {
            *ri = *ri + gi;
        }
        let nr = norm2(&r);
        let penalty = match self.kind {
            SubproblemKind::Criticality => nr,
            SubproblemKind::Model { sigma } => nr * nr / (T::lit(2.0) * sigma),
        };
        self.h.value(self.c) - dot(self.c, y) + penalty
    }

    /// Best primal response to a dual point.
    pub fn primal_from_dual(&self, y: &[T]) -> Vec<T> {
        let mut r = self.j.tr_mul_vec(y);
        for (ri, &gi) in r.iter_mut().zip(self.g) {
            *ri = *ri + gi;
        }
        match self.kind {
            SubproblemKind::Criticality => {
                let nr = norm2(&r);
                if nr > T::zero() {
                    r.iter().map(|&x| -x / nr).collect()
                } else {
                    vec![T::zero(); r.len()]
                }
            }
            SubproblemKind::Model { sigma } => r.iter().map(|&x| -x / sigma).collect(),
        }
    }

    /// A dual point supporting `h` at `c + Jv`.
    pub fn dual_from_primal(&self, v: &[T]) -> Vec<T> {
        let z: Vec<T> = self.j.mul_vec(v).iter().zip(self.c).map(|(&a, &b)| a + b).collect();
        self.h.subgradient(&z)
    }

    fn n(&self) -> usize {
        self.g.len()
    }

    fn m(&self) -> usize {
        self.c.len()
    }

    fn scale(&self) -> T {
        self.h.value(self.c) + norm2(self.g) + self.h.lipschitz(self.m()) * self.j.frobenius()
    }
}

/// `dual_bound(dual) − primal_value(primal)`; nonnegative by weak duality
/// when both points are feasible.
pub fn dual_gap<T: Real>(instance: &SubproblemInstance<'_, T>, primal: &[T], dual: &[T]) -> T {
    instance.dual_bound(dual) - instance.primal_value(primal)
}

/// `v` if `‖v‖ ≤ 1`, else `v/‖v‖`.
pub fn project_unit_ball<T: Real>(v: &[T]) -> Vec<T> {
    let nv = norm2(v);
    if nv <= T::one() {
        v.to_vec()
    } else {
        v.iter().map(|&x| x / nv).collect()
    }
}

/// Evaluates `prox_{λh}(v)`.
pub fn prox_h<T: Real>(h: &OuterFunction<T>, lambda: T, v: &[T]) -> Vec<T> {
    h.prox(lambda, v)
}

/// Optional warm start for either solver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStart<T> {
    pub primal: Option<Vec<T>>,
    pub dual: Option<Vec<T>>,
}

/// Best primal/dual pair seen so far.
struct Tracker<'a, 'b, T: Real> {
    inst: &'b SubproblemInstance<'a, T>,
    primal: Vec<T>,
    primal_value: T,
    dual: Vec<T>,
    dual_bound: T,
}

impl<'a, 'b, T: Real> Tracker<'a, 'b, T> {
    fn new(inst: &'b SubproblemInstance<'a, T>) -> Self {
        let zero = vec![T::zero(); inst.n()];
        let y0 = inst.dual_from_primal(&zero);
        let dual_bound = inst.dual_bound(&y0);
        Self { inst, primal: zero, primal_value: T::zero(), dual: y0, dual_bound }
    }

    fn offer_primal(&mut self, v: Vec<T>) {
        let v = match self.inst.kind {
            SubproblemKind::Criticality => project_unit_ball(&v),
            SubproblemKind::Model { .. } => v,
        };
        let val = self.inst.primal_value(&v);
        if val > self.primal_value {
            self.primal_value = val;
            self.primal = v;
        }
    }

    fn offer_dual(&mut self, y: Vec<T>) {
        let y = self.inst.h.project_dual_ball(&y);
        let b = self.inst.dual_bound(&y);
        if b < self.dual_bound {
            self.dual_bound = b;
            self.dual = y;
        }
    }

    /// Offers an iterate pair together with the cross-mapped candidates.
    fn offer_pair(&mut self, v: &[T], y: &[T]) {
        let from_dual = self.inst.primal_from_dual(y);
        let from_primal = self.inst.dual_from_primal(v);
        self.offer_primal(v.to_vec());
        self.offer_primal(from_dual);
        self.offer_dual(y.to_vec());
        self.offer_dual(from_primal);
    }

    fn gap(&self) -> T {
        self.dual_bound - self.primal_value
    }

    fn certificate(&self, iterations_used: usize) -> SubproblemCertificate<T> {
        SubproblemCertificate {
            primal_value: self.primal_value,
            dual_bound: self.dual_bound,
            gap: self.gap().max(T::zero()),
            iterations_used,
        }
    }
}

fn gap_threshold<T: Real>(opts: &SubproblemOptions<T>, primal_value: T, scale: T) -> T {
    let machine = T::lit(1e3) * T::epsilon() * (T::one() + scale);
    (opts.gap_tol * primal_value.max(T::zero())).max(opts.gap_tol_abs).max(machine)
}

const CHECK_EVERY: usize = 5;

fn is_trivially_decoupled<T: Real>(inst: &SubproblemInstance<'_, T>) -> bool {
    inst.h.kind() == OuterKind::Zero || inst.j.frobenius() == T::zero()
}

/// Solves `max_{‖d‖≤1} Δℓ̄(d)` to the requested gap.
pub fn solve_criticality<T: Real>(
    snapshot: &InexactSnapshot<T>,
    h: &OuterFunction<T>,
    opts: &SubproblemOptions<T>,
    warm: Option<&WarmStart<T>>,
) -> Result<CriticalitySolution<T>, ArldaError> {
    let inst = SubproblemInstance::criticality(snapshot, h)?;
    Ok(solve_criticality_instance(&inst, opts, warm)?)
}

pub fn solve_criticality_instance<T: Real>(
    inst: &SubproblemInstance<'_, T>,
    opts: &SubproblemOptions<T>,
    warm: Option<&WarmStart<T>>,
) -> Result<CriticalitySolution<T>, SubproblemError> {
    let mut best = Tracker::new(inst);
    let scale = inst.scale();

    if is_trivially_decoupled(inst) {
        // h(c + Jd) is constant in d: the maximizer is −g/‖g‖ and the dual is
        // any subgradient of h at c.
        let y = inst.h.subgradient(inst.c);
        best.offer_pair(&inst.primal_from_dual(&y), &y);
        return Ok(finish_criticality(best, 0));
    }

    let lj = inst.j.frobenius();
    let (mut tau, mut sig) = (T::lit(0.99) / lj, T::lit(0.99) / lj);
    let mut d =
        warm.and_then(|w| w.primal.clone()).map(|p| project_unit_ball(&p)).unwrap_or_else(|| vec![T::zero(); inst.n()]);
    let mut y = warm
        .and_then(|w| w.dual.clone())
        .map(|p| inst.h.project_dual_ball(&p))
        .unwrap_or_else(|| inst.dual_from_primal(&d));
    best.offer_pair(&d, &y);
    if best.gap() <= gap_threshold(opts, best.primal_value, scale) {
        return Ok(finish_criticality(best, 0));
    }

    let mut d_bar = d.clone();
    let mut avg = Averages::new(inst.n(), inst.m());
    let mut restart_gap = best.gap();
    for it in 1..=opts.max_iter {
        // Dual ascent on y: prox of σ·(h* − cᵀ·) is a shifted projection.
        let jd = inst.j.mul_vec(&d_bar);
        let y_arg: Vec<T> = y.iter().zip(jd.iter().zip(inst.c)).map(|(&yi, (&a, &b))| yi + sig * (a + b)).collect();
        y = inst.h.project_dual_ball(&y_arg);
        // Primal descent on d with projection onto the unit ball.
        let jty = inst.j.tr_mul_vec(&y);
        let d_arg: Vec<T> = d.iter().zip(jty.iter().zip(inst.g)).map(|(&di, (&a, &b))| di - tau * (a + b)).collect();
        let d_new = project_unit_ball(&d_arg);
        for i in 0..d.len() {
            d_bar[i] = T::lit(2.0) * d_new[i] - d[i];
        }
        d = d_new;
        avg.push(&d, &y);

        if it % CHECK_EVERY == 0 {
            best.offer_pair(&d, &y);
            let (da, ya) = avg.mean();
            best.offer_pair(&da, &ya);
            let gap = best.gap();
            if gap <= gap_threshold(opts, best.primal_value, scale) {
                return Ok(finish_criticality(best, it));
            }
            // Restart from the certified best pair once the gap has halved.
            if gap <= T::lit(0.5) * restart_gap {
                restart_gap = gap;
                d = best.primal.clone();
                y = best.dual.clone();
                d_bar = d.clone();
                avg = Averages::new(inst.n(), inst.m());
                // Rebalance step sizes towards the dual/primal scale ratio.
                let ratio = (norm2(&y).max(T::lit(1e-8)) / norm2(&d).max(T::lit(1e-8)))
                    .sqrt()
                    .max(T::lit(1e-2))
                    .min(T::lit(1e2));
                tau = T::lit(0.99) / lj * ratio.sqrt();
                sig = T::lit(0.99) / lj / ratio.sqrt();
            }
        }
    }
    Err(SubproblemError::NonConvergence { gap: best.gap().as_f64(), iterations: opts.max_iter })
}

fn finish_criticality<T: Real>(best: Tracker<'_, '_, T>, iterations: usize) -> CriticalitySolution<T> {
    let certificate = best.certificate(iterations);
    CriticalitySolution { phi_bar: best.primal_value, direction: best.primal, certificate, dual: best.dual }
}

struct Averages<T> {
    count: usize,
    primal: Vec<T>,
    dual: Vec<T>,
}

impl<T: Real> Averages<T> {
    fn new(n: usize, m: usize) -> Self {
        Self { count: 0, primal: vec![T::zero(); n], dual: vec![T::zero(); m] }
    }

    fn push(&mut self, v: &[T], y: &[T]) {
        self.count += 1;
        crate::linalg::axpy(T::one(), v, &mut self.primal);
        crate::linalg::axpy(T::one(), y, &mut self.dual);
    }

    fn mean(&self) -> (Vec<T>, Vec<T>) {
        let k = T::from_usize_lossy(self.count.max(1));
        (self.primal.iter().map(|&x| x / k).collect(), self.dual.iter().map(|&x| x / k).collect())
    }
}

/// Solves `max_s Δm̄(s)` to the requested gap.
///
/// `target_decrease` is the linearized decrease the caller needs. The returned
/// step always has `Δm̄(s) ≥ 0`; when a target is given it also has
/// `Δℓ̄(s) ≥ target`, or the call fails with
/// [`SubproblemError::TargetUnreachable`] once the dual bound proves the
/// target cannot be met.
pub fn solve_model<T: Real>(
    snapshot: &InexactSnapshot<T>,
    h: &OuterFunction<T>,
    sigma: T,
    target_decrease: Option<T>,
    opts: &SubproblemOptions<T>,
    warm: Option<&WarmStart<T>>,
) -> Result<ModelSolution<T>, ArldaError> {
    let inst = SubproblemInstance::model(snapshot, h, sigma)?;
    Ok(solve_model_instance(&inst, target_decrease, opts, warm)?)
}

pub fn solve_model_instance<T: Real>(
    inst: &SubproblemInstance<'_, T>,
    target_decrease: Option<T>,
    opts: &SubproblemOptions<T>,
    warm: Option<&WarmStart<T>>,
) -> Result<ModelSolution<T>, SubproblemError> {
    let sigma = match inst.kind {
        SubproblemKind::Model { sigma } => sigma,
        SubproblemKind::Criticality => panic!("solve_model_instance needs a model instance"),
    };
    let mut best = Tracker::new(inst);
    let scale = inst.scale();
    let target_met = |b: &Tracker<'_, '_, T>| match target_decrease {
        None => true,
        Some(t) => inst.linearized_decrease(&b.primal) >= t,
    };
    let done = |b: &Tracker<'_, '_, T>| -> Result<bool, SubproblemError> {
        let converged = b.gap() <= gap_threshold(opts, b.primal_value, scale);
        if let Some(t) = target_decrease {
            if opts.early_exit && target_met(b) {
                return Ok(true);
            }
            if b.dual_bound < t {
                // Δℓ̄(s) ≤ Δm̄(s) + (σ/2)‖s‖² is not bounded by the dual bound
                // in general, so only give up once the step itself is converged.
                if converged && !target_met(b) {
                    return Err(SubproblemError::TargetUnreachable {
                        best_decrease: inst.linearized_decrease(&b.primal).as_f64(),
                        gap: b.gap().as_f64(),
                        target: t.as_f64(),
                    });
                }
            }
        }
        Ok(converged && target_met(b))
    };

    if is_trivially_decoupled(inst) {
        let y = inst.h.subgradient(inst.c);
        best.offer_pair(&inst.primal_from_dual(&y), &y);
        done(&best)?;
        return Ok(finish_model(inst, best, sigma, 0));
    }

    let lj = inst.j.frobenius();
    let mut tau = T::lit(0.99) / lj;
    let mut sig = T::lit(0.99) / lj;
    let mut s = warm.and_then(|w| w.primal.clone()).unwrap_or_else(|| vec![T::zero(); inst.n()]);
    let mut y = warm
        .and_then(|w| w.dual.clone())
        .map(|p| inst.h.project_dual_ball(&p))
        .unwrap_or_else(|| inst.dual_from_primal(&s));
    best.offer_pair(&s, &y);
    if done(&best)? {
        return Ok(finish_model(inst, best, sigma, 0));
    }
    let mut s_bar = s.clone();
    let mut restart_gap = best.gap();
    let base = (tau, sig);
    for it in 1..=opts.max_iter {
        let js = inst.j.mul_vec(&s_bar);
        let y_arg: Vec<T> = y.iter().zip(js.iter().zip(inst.c)).map(|(&yi, (&a, &b))| yi + sig * (a + b)).collect();
        y = inst.h.project_dual_ball(&y_arg);
        // Exact prox of τ(gᵀs + (σ/2)‖s‖²).
        let jty = inst.j.tr_mul_vec(&y);
        let denom = T::one() + tau * sigma;
        let s_new: Vec<T> =
            s.iter().zip(jty.iter().zip(inst.g)).map(|(&si, (&a, &b))| (si - tau * (a + b)) / denom).collect();
        // Acceleration for the σ-strongly convex primal.
        let theta = T::one() / (T::one() + T::lit(2.0) * sigma * tau).sqrt();
        tau = tau * theta;
        sig = sig / theta;
        for i in 0..s.len() {
            s_bar[i] = s_new[i] + theta * (s_new[i] - s[i]);
        }
        s = s_new;

        if it % CHECK_EVERY == 0 {
            best.offer_pair(&s, &y);
            if done(&best)? {
                return Ok(finish_model(inst, best, sigma, it));
            }
            let gap = best.gap();
            if gap <= T::lit(0.5) * restart_gap {
                restart_gap = gap;
                s = best.primal.clone();
                y = best.dual.clone();
                s_bar = s.clone();
                (tau, sig) = base;
            }
        }
    }
    Err(SubproblemError::NonConvergence { gap: best.gap().as_f64(), iterations: opts.max_iter })
}

fn finish_model<T: Real>(
    inst: &SubproblemInstance<'_, T>,
    best: Tracker<'_, '_, T>,
    sigma: T,
    iterations: usize,
) -> ModelSolution<T> {
    let certificate = best.certificate(iterations);
    let lin = inst.linearized_decrease(&best.primal);
    ModelSolution {
        report: DecreaseReport::new(best.primal.clone(), lin, sigma),
        step: best.primal,
        certificate,
        dual: best.dual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(g: Vec<f64>, c: Vec<f64>, j: Matrix<f64>) -> InexactSnapshot<f64> {
        InexactSnapshot::from_values(vec![0.0; g.len()], g, c, j)
    }

    #[test]
    fn project_unit_ball_examples() {
        assert_eq!(project_unit_ball(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(project_unit_ball(&[0.3, 0.4]), vec![0.3, 0.4]);
        let p: Vec<f64> = project_unit_ball(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn criticality_examples() {
        let opts = SubproblemOptions::tight();
        let s = snap(vec![3.0, 4.0], vec![0.0], Matrix::zeros(1, 2));
        let sol = solve_criticality(&s, &OuterFunction::zero(), &opts, None).unwrap();
        assert!((sol.phi_bar - 5.0).abs() < 1e-12);
        assert!((sol.direction[0] + 0.6).abs() < 1e-12 && (sol.direction[1] + 0.8).abs() < 1e-12);

        let s0 = snap(vec![0.0, 0.0], vec![1.0], Matrix::zeros(1, 2));
        let sol0 = solve_criticality(&s0, &OuterFunction::l1(1.0), &opts, None).unwrap();
        assert_eq!(sol0.phi_bar, 0.0);
        assert!(sol0.certificate.gap <= 1e-12);

        let s1 = snap(vec![0.0], vec![2.0], Matrix::identity(1));
        let sol1 = solve_criticality(&s1, &OuterFunction::l1(1.0), &opts, None).unwrap();
        assert!((sol1.phi_bar - 1.0).abs() < 1e-9, "{sol1:?}");
        assert!((sol1.direction[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn model_examples() {
        let opts = SubproblemOptions::tight();
        let s = snap(vec![3.0, 4.0], vec![0.0], Matrix::zeros(1, 2));
        let sol = solve_model(&s, &OuterFunction::zero(), 2.0, None, &opts, None).unwrap();
        assert!((sol.step[0] + 1.5).abs() < 1e-12 && (sol.step[1] + 2.0).abs() < 1e-12);
        assert!((sol.report.linearized_decrease - 12.5).abs() < 1e-12);
        assert!((sol.report.model_decrease - 6.25).abs() < 1e-12);

        let s0 = snap(vec![0.0, 0.0], vec![0.0, 0.0], Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]));
        let sol0 = solve_model(&s0, &OuterFunction::l2(1.0), 1.0, None, &opts, None).unwrap();
        assert!(norm2(&sol0.step) < 1e-9);
        assert!(sol0.report.model_decrease.abs() < 1e-12);

        let s1 = snap(vec![-2.0], vec![0.0], Matrix::identity(1));
        let sol1 = solve_model(&s1, &OuterFunction::l1(1.0), 1.0, None, &opts, None).unwrap();
        assert!((sol1.step[0] - 1.0).abs() < 1e-6, "{sol1:?}");
        assert!((sol1.report.linearized_decrease - 1.0).abs() < 1e-6);
        assert!((sol1.report.model_decrease - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dual_gap_examples() {
        let s = snap(vec![3.0, 4.0], vec![0.0], Matrix::zeros(1, 2));
        let h = OuterFunction::zero();
        let crit = SubproblemInstance::criticality(&s, &h).unwrap();
        assert!((dual_gap(&crit, &[0.0, 0.0], &[0.0]) - 5.0).abs() < 1e-15);
        let model = SubproblemInstance::model(&s, &h, 1.0).unwrap();
        assert!(dual_gap(&model, &[-3.0, -4.0], &[0.0]).abs() <= 1e-10);
    }

    #[test]
    fn target_is_honored_or_rejected() {
        let opts = SubproblemOptions::default();
        let s = snap(vec![1.0, -2.0], vec![0.5, -0.3], Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, -1.0]]));
        let h = OuterFunction::l1(1.0);
        let crit = solve_criticality(&s, &h, &opts, None).unwrap();
        let sigma = 0.7;
        let target = 0.25 * (crit.phi_bar / sigma).min(1.0) * crit.phi_bar;
        let sol = solve_model(&s, &h, sigma, Some(target), &opts, None).unwrap();
        assert!(sol.report.linearized_decrease >= target);
        assert!(sol.report.model_decrease >= 0.0);
        let err = solve_model(&s, &h, sigma, Some(1e6), &opts, None).unwrap_err();
        assert!(matches!(err, ArldaError::Subproblem(SubproblemError::TargetUnreachable { .. })), "{err:?}");
    }

    #[test]
    fn early_exit_meets_target_quickly() {
        let opts = SubproblemOptions { early_exit: true, ..SubproblemOptions::default() };
        let s = snap(vec![1.0, -2.0], vec![0.5, -0.3], Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, -1.0]]));
        let h = OuterFunction::linf(1.5);
        let sol = solve_model(&s, &h, 1.0, Some(1e-3), &opts, None).unwrap();
        assert!(sol.report.linearized_decrease >= 1e-3);
        assert!(sol.report.model_decrease >= 0.0);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let opts = SubproblemOptions { gap_tol: 0.0, gap_tol_abs: 0.0, max_iter: 3, early_exit: false };
        let s = snap(vec![1.0, -2.0], vec![0.5, -0.3], Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, -1.0]]));
        let h = OuterFunction::l2(1.0);
        let err = solve_criticality(&s, &h, &opts, None).unwrap_err();
        assert!(matches!(err, ArldaError::Subproblem(SubproblemError::NonConvergence { .. })));
    }
}
