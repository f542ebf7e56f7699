//! Inexact evaluation of `f, g, c, J` with certified absolute error bounds.
//!
//! An [`InexactOracle`] answers a single request. The [`Evaluator`] wraps an
//! oracle with configurable accuracy floors and the [`EvaluationLedger`] that
//! counts every call; the solver only ever talks to an `Evaluator`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composite::{ProblemSpec, Quantity};
use crate::error::OracleError;
use crate::linalg::{norm2, Matrix};
use crate::scalar::Real;

/// Where an evaluation happens relative to the current iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalSite {
    Iterate,
    Trial,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleRequest<'a, T> {
    pub point: &'a [T],
    pub quantity: Quantity,
    pub accuracy: T,
    pub site: EvalSite,
}

impl<'a, T: Real> OracleRequest<'a, T> {
    pub fn new(point: &'a [T], quantity: Quantity, accuracy: T) -> Self {
        Self { point, quantity, accuracy, site: EvalSite::Iterate }
    }

    pub fn at_trial(mut self) -> Self {
        self.site = EvalSite::Trial;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OracleValue<T> {
    Scalar(T),
    Vector(Vec<T>),
    Matrix(Matrix<T>),
}

impl<T: Real> OracleValue<T> {
    pub fn into_scalar(self) -> T {
        match self {
            OracleValue::Scalar(v) => v,
            other => panic!("expected scalar oracle value, got {other:?}"),
        }
    }

    pub fn into_vector(self) -> Vec<T> {
        match self {
            OracleValue::Vector(v) => v,
            other => panic!("expected vector oracle value, got {other:?}"),
        }
    }

    pub fn into_matrix(self) -> Matrix<T> {
        match self {
            OracleValue::Matrix(v) => v,
            other => panic!("expected matrix oracle value, got {other:?}"),
        }
    }

    /// Distance to another value of the same shape: absolute value, Euclidean
    /// norm, or Frobenius norm.
    pub fn distance(&self, other: &Self) -> T {
        match (self, other) {
            (OracleValue::Scalar(a), OracleValue::Scalar(b)) => (*a - *b).abs(),
            (OracleValue::Vector(a), OracleValue::Vector(b)) => crate::linalg::dist2(a, b),
            (OracleValue::Matrix(a), OracleValue::Matrix(b)) => a.sub(b).frobenius(),
            _ => panic!("shape mismatch between oracle values"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResponse<T> {
    pub value: OracleValue<T>,
    /// Guaranteed bound on the distance to the exact value (≤ requested accuracy).
    pub certified_error: T,
    /// Oracle-defined work measure.
    pub cost_units: T,
}

pub trait InexactOracle<T: Real>: Send {
    fn name(&self) -> &'static str;

    /// Whether requests with accuracy exactly 0 can be honored.
    fn exact_capable(&self) -> bool {
        false
    }

    fn respond(&mut self, request: &OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError>;
}

/// Exact value of `q` from the reference callables.
pub fn exact_value<T: Real>(spec: &ProblemSpec<T>, q: Quantity, x: &[T]) -> OracleValue<T> {
    match q {
        Quantity::F => OracleValue::Scalar((spec.f_exact)(x)),
        Quantity::G => OracleValue::Vector((spec.g_exact)(x)),
        Quantity::C => OracleValue::Vector((spec.c_exact)(x)),
        Quantity::J => OracleValue::Matrix((spec.j_exact)(x)),
    }
}

/// Ignores the requested accuracy and returns exact values.
pub struct ExactOracle<T> {
    spec: ProblemSpec<T>,
}

impl<T: Real> ExactOracle<T> {
    pub fn new(spec: &ProblemSpec<T>) -> Self {
        Self { spec: spec.clone() }
    }
}

impl<T: Real> InexactOracle<T> for ExactOracle<T> {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn exact_capable(&self) -> bool {
        true
    }

    fn respond(&mut self, req: &OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError> {
        Ok(OracleResponse {
            value: exact_value(&self.spec, req.quantity, req.point),
            certified_error: T::zero(),
            cost_units: T::one(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Perturbation magnitude uniform in `[0, 0.999 ε)`.
    Uniform,
    /// Perturbation magnitude exactly `0.999 ε`: the largest allowed error.
    Adversarial,
}

/// Exact value plus a seeded perturbation scaled to the requested accuracy.
///
/// The perturbation is a pure function of `(seed, quantity, accuracy, point)`,
/// so identical request streams produce identical responses.
pub struct AdditiveNoiseOracle<T> {
    spec: ProblemSpec<T>,
    seed: u64,
    mode: NoiseMode,
}

pub const NOISE_FRACTION: f64 = 0.999;

impl<T: Real> AdditiveNoiseOracle<T> {
    pub fn new(spec: &ProblemSpec<T>, seed: u64, mode: NoiseMode) -> Self {
        Self { spec: spec.clone(), seed, mode }
    }

    fn rng_for(&self, req: &OracleRequest<'_, T>) -> ChaCha8Rng {
        let mut h = splitmix(self.seed ^ 0x5eed_0000_0000_0000);
        h = splitmix(h ^ req.quantity.index() as u64);
        h = splitmix(h ^ req.accuracy.as_f64().to_bits());
        for &x in req.point {
            h = splitmix(h ^ x.as_f64().to_bits());
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn random_unit<T: Real>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..len).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        let n = norm2(&v);
        if n > T::lit(1e-3) {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl<T: Real> InexactOracle<T> for AdditiveNoiseOracle<T> {
    fn name(&self) -> &'static str {
        "noise"
    }

    fn exact_capable(&self) -> bool {
        true
    }

    fn respond(&mut self, req: &OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError> {
        let exact = exact_value(&self.spec, req.quantity, req.point);
        if req.accuracy == T::zero() {
            return Ok(OracleResponse { value: exact, certified_error: T::zero(), cost_units: T::one() });
        }
        let mut rng = self.rng_for(req);
        let cap = T::lit(NOISE_FRACTION) * req.accuracy;
        let magnitude = match self.mode {
            NoiseMode::Adversarial => cap,
            NoiseMode::Uniform => cap * T::lit(rng.gen::<f64>()),
        };
        let value = match exact {
            OracleValue::Scalar(v) => {
                let sign = if rng.gen::<bool>() { T::one() } else { -T::one() };
                OracleValue::Scalar(v + sign * magnitude)
            }
            OracleValue::Vector(v) => {
                let d = random_unit::<T>(&mut rng, v.len());
                OracleValue::Vector(v.iter().zip(&d).map(|(&a, &b)| a + magnitude * b).collect())
            }
            OracleValue::Matrix(mut mat) => {
                let d = random_unit::<T>(&mut rng, mat.rows() * mat.cols());
                for (a, &b) in mat.as_mut_slice().iter_mut().zip(&d) {
                    *a = *a + magnitude * b;
                }
                OracleValue::Matrix(mat)
            }
        };
        Ok(OracleResponse { value, certified_error: magnitude, cost_units: T::one() })
    }
}

/// An objective given as a convergent series with closed-form tail bounds.
pub trait SeriesExpansion<T: Real>: Send + Sync {
    /// Sum of the first `terms` terms of `f`.
    fn partial_value(&self, x: &[T], terms: usize) -> T;
    /// Sum of the first `terms` terms of `∇f`.
    fn partial_gradient(&self, x: &[T], terms: usize) -> Vec<T>;
    /// Bound on `|f − partial_value(·, terms)|`.
    fn value_tail(&self, terms: usize) -> T;
    /// Bound on `‖∇f − partial_gradient(·, terms)‖`.
    fn gradient_tail(&self, terms: usize) -> T;
}

/// Truncates a series for `f` and `g` at the shortest length whose tail bound
/// meets the request; `c` and `J` are exact.
pub struct TruncatedSeriesOracle<T> {
    spec: ProblemSpec<T>,
    series: Arc<dyn SeriesExpansion<T>>,
    max_terms: usize,
}

impl<T: Real> TruncatedSeriesOracle<T> {
    pub fn new(spec: &ProblemSpec<T>, series: Arc<dyn SeriesExpansion<T>>, max_terms: usize) -> Self {
        Self { spec: spec.clone(), series, max_terms: max_terms.max(1) }
    }

    fn terms_for(&self, tail: impl Fn(usize) -> T, eps: T, q: Quantity) -> Result<usize, OracleError> {
        (1..=self.max_terms).find(|&n| tail(n) <= eps).ok_or(OracleError::AccuracyFloorReached {
            quantity: q,
            requested: eps.as_f64(),
            floor: tail(self.max_terms).as_f64(),
        })
    }
}

impl<T: Real> InexactOracle<T> for TruncatedSeriesOracle<T> {
    fn name(&self) -> &'static str {
        "series"
    }

    fn respond(&mut self, req: &OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError> {
        let eps = req.accuracy;
        match req.quantity {
            Quantity::F => {
                let n = self.terms_for(|k| self.series.value_tail(k), eps, Quantity::F)?;
                Ok(OracleResponse {
                    value: OracleValue::Scalar(self.series.partial_value(req.point, n)),
                    certified_error: self.series.value_tail(n),
                    cost_units: T::from_usize_lossy(n),
                })
            }
            Quantity::G => {
                let n = self.terms_for(|k| self.series.gradient_tail(k), eps, Quantity::G)?;
                Ok(OracleResponse {
                    value: OracleValue::Vector(self.series.partial_gradient(req.point, n)),
                    certified_error: self.series.gradient_tail(n),
                    cost_units: T::from_usize_lossy(n),
                })
            }
            q => Ok(OracleResponse {
                value: exact_value(&self.spec, q, req.point),
                certified_error: T::zero(),
                cost_units: T::one(),
            }),
        }
    }
}

/// An objective `f = (1/N) Σᵢ fᵢ` with uniformly bounded summands.
pub trait FiniteSum<T: Real>: Send + Sync {
    fn len(&self) -> usize;
    fn term_value(&self, i: usize, x: &[T]) -> T;
    fn term_gradient(&self, i: usize, x: &[T]) -> Vec<T>;
    /// `|fᵢ(x)| ≤ value_bound()` for all `i, x`.
    fn value_bound(&self) -> T;
    /// `‖∇fᵢ(x)‖ ≤ gradient_bound()` for all `i, x`.
    fn gradient_bound(&self) -> T;
}

/// Averages a deterministic prefix of the summands. With `K` of `N` terms the
/// prefix mean differs from the full mean by at most `2(N − K)B/N`.
pub struct PartialSumOracle<T> {
    spec: ProblemSpec<T>,
    sum: Arc<dyn FiniteSum<T>>,
}

impl<T: Real> PartialSumOracle<T> {
    pub fn new(spec: &ProblemSpec<T>, sum: Arc<dyn FiniteSum<T>>) -> Self {
        Self { spec: spec.clone(), sum }
    }

    /// Smallest prefix length whose worst-case tail bound is within `eps`.
    pub fn prefix_len(&self, eps: T, bound: T) -> usize {
        let n = self.sum.len();
        if bound <= T::zero() {
            return 1;
        }
        let slack = (eps * T::from_usize_lossy(n) / (T::lit(2.0) * bound)).floor();
        let drop = slack.to_usize().unwrap_or(n).min(n - 1);
        n - drop
    }

    fn tail_bound(&self, k: usize, bound: T) -> T {
        let n = self.sum.len();
        T::lit(2.0) * T::from_usize_lossy(n - k) * bound / T::from_usize_lossy(n)
    }
}

impl<T: Real> InexactOracle<T> for PartialSumOracle<T> {
    fn name(&self) -> &'static str {
        "partial-sum"
    }

    fn exact_capable(&self) -> bool {
        true
    }

    fn respond(&mut self, req: &OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError> {
        match req.quantity {
            Quantity::F => {
                let b = self.sum.value_bound();
                let k = self.prefix_len(req.accuracy, b);
                let total: T = (0..k).map(|i| self.sum.term_value(i, req.point)).sum();
                Ok(OracleResponse {
                    value: OracleValue::Scalar(total / T::from_usize_lossy(k)),
                    certified_error: self.tail_bound(k, b),
                    cost_units: T::from_usize_lossy(k),
                })
            }
            Quantity::G => {
                let b = self.sum.gradient_bound();
                let k = self.prefix_len(req.accuracy, b);
                let mut acc = vec![T::zero(); req.point.len()];
                for i in 0..k {
                    crate::linalg::axpy(T::one(), &self.sum.term_gradient(i, req.point), &mut acc);
                }
                let kk = T::from_usize_lossy(k);
                Ok(OracleResponse {
                    value: OracleValue::Vector(acc.into_iter().map(|v| v / kk).collect()),
                    certified_error: self.tail_bound(k, b),
                    cost_units: kk,
                })
            }
            q => Ok(OracleResponse {
                value: exact_value(&self.spec, q, req.point),
                certified_error: T::zero(),
                cost_units: T::one(),
            }),
        }
    }
}

/// Smallest accuracy each quantity may be requested at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyFloor<T> {
    pub floor_f: T,
    pub floor_g: T,
    pub floor_c: T,
    pub floor_j: T,
}

impl<T: Real> Default for AccuracyFloor<T> {
    fn default() -> Self {
        Self::uniform(T::zero())
    }
}

impl<T: Real> AccuracyFloor<T> {
    pub fn uniform(v: T) -> Self {
        Self { floor_f: v, floor_g: v, floor_c: v, floor_j: v }
    }

    pub fn get(&self, q: Quantity) -> T {
        match q {
            Quantity::F => self.floor_f,
            Quantity::G => self.floor_g,
            Quantity::C => self.floor_c,
            Quantity::J => self.floor_j,
        }
    }

    pub fn is_active(&self) -> bool {
        Quantity::ALL.iter().any(|&q| self.get(q) > T::zero())
    }
}

/// Evaluation counters. Indices follow [`Quantity::index`] (f, g, c, J).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationLedger {
    pub total: [u64; 4],
    /// Evaluations at the current iterate during the current iteration.
    pub iteration_at_iterate: [u64; 4],
    /// Evaluations at the trial point during the current iteration.
    pub iteration_at_trial: [u64; 4],
    pub min_accuracy: [Option<f64>; 4],
    pub cost_units: [f64; 4],
    pub shrink_events: u64,
    pub iteration_shrinks: u64,
    pub successful: u64,
    pub unsuccessful: u64,
}

/// Immutable copy of the ledger counters.
pub type LedgerSummary = EvaluationLedger;

impl EvaluationLedger {
    pub fn begin_iteration(&mut self) {
        self.iteration_at_iterate = [0; 4];
        self.iteration_at_trial = [0; 4];
        self.iteration_shrinks = 0;
    }

    pub fn record_evaluation(&mut self, q: Quantity, site: EvalSite, accuracy: f64, cost: f64) {
        let i = q.index();
        self.total[i] += 1;
        match site {
            EvalSite::Iterate => self.iteration_at_iterate[i] += 1,
            EvalSite::Trial => self.iteration_at_trial[i] += 1,
        }
        self.min_accuracy[i] = Some(self.min_accuracy[i].map_or(accuracy, |m| m.min(accuracy)));
        self.cost_units[i] += cost;
    }

    pub fn record_shrink(&mut self) {
        self.shrink_events += 1;
        self.iteration_shrinks += 1;
    }

    pub fn record_outcome(&mut self, accepted: bool) {
        if accepted {
            self.successful += 1;
        } else {
            self.unsuccessful += 1;
        }
    }

    /// Evaluations of `q` in the current iteration, both sites.
    pub fn iteration_count(&self, q: Quantity) -> u64 {
        self.iteration_at_iterate[q.index()] + self.iteration_at_trial[q.index()]
    }
}

pub fn ledger_snapshot(ledger: &EvaluationLedger) -> LedgerSummary {
    ledger.clone()
}

/// Oracle plus floors plus ledger: the only evaluation path the solver uses.
pub struct Evaluator<T: Real> {
    oracle: Box<dyn InexactOracle<T>>,
    floors: AccuracyFloor<T>,
    ledger: EvaluationLedger,
}

impl<T: Real> Evaluator<T> {
    pub fn new(oracle: Box<dyn InexactOracle<T>>) -> Self {
        Self { oracle, floors: AccuracyFloor::default(), ledger: EvaluationLedger::default() }
    }

    pub fn with_floors(mut self, floors: AccuracyFloor<T>) -> Self {
        self.floors = floors;
        self
    }

    pub fn exact(spec: &ProblemSpec<T>) -> Self {
        Self::new(Box::new(ExactOracle::new(spec)))
    }

    pub fn floors(&self) -> &AccuracyFloor<T> {
        &self.floors
    }

    pub fn oracle_name(&self) -> &'static str {
        self.oracle.name()
    }

    pub fn ledger(&self) -> &EvaluationLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut EvaluationLedger {
        &mut self.ledger
    }

    pub fn evaluate(&mut self, req: OracleRequest<'_, T>) -> Result<OracleResponse<T>, OracleError> {
        let eps = req.accuracy;
        if !(eps >= T::zero()) || !eps.is_finite() {
            return Err(OracleError::InvalidRequest(format!("accuracy must be finite and nonnegative, got {eps}")));
        }
        let floor = self.floors.get(req.quantity);
        if eps < floor {
            return Err(OracleError::AccuracyFloorReached {
                quantity: req.quantity,
                requested: eps.as_f64(),
                floor: floor.as_f64(),
            });
        }
        if eps == T::zero() && !self.oracle.exact_capable() {
            return Err(OracleError::InvalidRequest(format!(
                "oracle '{}' cannot evaluate {} exactly",
                self.oracle.name(),
                req.quantity
            )));
        }
        let resp = self.oracle.respond(&req)?;
        debug_assert!(resp.certified_error <= eps, "oracle certified more error than requested");
        self.ledger.record_evaluation(req.quantity, req.site, eps.as_f64(), resp.cost_units.as_f64());
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::OuterFunction;

    fn spec() -> ProblemSpec<f64> {
        ProblemSpec::new(
            "toy",
            2,
            2,
            Arc::new(|x: &[f64]| x[0] * x[0] + 3.0 * x[1]),
            Arc::new(|x: &[f64]| vec![2.0 * x[0], 3.0]),
            Arc::new(|x: &[f64]| vec![x[0] - 1.0, x[0] * x[1]]),
            Arc::new(|x: &[f64]| Matrix::from_rows(&[vec![1.0, 0.0], vec![x[1], x[0]]])),
            OuterFunction::l1(1.0),
            vec![0.5, -0.5],
        )
    }

    #[test]
    fn noise_with_zero_accuracy_is_exact() {
        let s = spec();
        let mut o = AdditiveNoiseOracle::new(&s, 7, NoiseMode::Adversarial);
        let x = [0.3, 0.4];
        for q in Quantity::ALL {
            let r = o.respond(&OracleRequest::new(&x, q, 0.0)).unwrap();
            assert_eq!(r.certified_error, 0.0);
            assert_eq!(r.value, exact_value(&s, q, &x));
        }
    }

    #[test]
    fn adversarial_noise_hits_the_cap() {
        let s = spec();
        let mut o = AdditiveNoiseOracle::new(&s, 11, NoiseMode::Adversarial);
        let x = [0.3, 0.4];
        for q in Quantity::ALL {
            let r = o.respond(&OracleRequest::new(&x, q, 1e-2)).unwrap();
            let err = r.value.distance(&exact_value(&s, q, &x));
            assert!((err - 0.999e-2).abs() < 1e-12, "{q}: {err}");
            assert!(r.certified_error <= 1e-2);
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let s = spec();
        let mut a = AdditiveNoiseOracle::new(&s, 3, NoiseMode::Uniform);
        let mut b = AdditiveNoiseOracle::new(&s, 3, NoiseMode::Uniform);
        let mut c = AdditiveNoiseOracle::new(&s, 4, NoiseMode::Uniform);
        let x = [1.0, 2.0];
        let req = OracleRequest::new(&x, Quantity::G, 0.5);
        let ra = a.respond(&req).unwrap();
        assert_eq!(ra, b.respond(&req).unwrap());
        assert_ne!(ra, c.respond(&req).unwrap());
    }

    #[test]
    fn floors_reject_tight_requests() {
        let s = spec();
        let mut ev = Evaluator::exact(&s).with_floors(AccuracyFloor { floor_g: 1e-3, ..Default::default() });
        let x = [0.0, 0.0];
        assert!(ev.evaluate(OracleRequest::new(&x, Quantity::G, 1e-3)).is_ok());
        let err = ev.evaluate(OracleRequest::new(&x, Quantity::G, 1e-4)).unwrap_err();
        assert!(matches!(err, OracleError::AccuracyFloorReached { quantity: Quantity::G, .. }));
        assert!(ev.evaluate(OracleRequest::new(&x, Quantity::F, 0.0)).is_ok());
        assert_eq!(ev.ledger().total, [1, 1, 0, 0]);
    }

    #[test]
    fn ledger_counts_sites_and_minima() {
        let s = spec();
        let mut ev = Evaluator::exact(&s);
        assert_eq!(ledger_snapshot(ev.ledger()), EvaluationLedger::default());
        let x = [0.0, 0.0];
        ev.ledger_mut().begin_iteration();
        ev.evaluate(OracleRequest::new(&x, Quantity::C, 1e-2)).unwrap();
        ev.evaluate(OracleRequest::new(&x, Quantity::C, 1e-3).at_trial()).unwrap();
        ev.ledger_mut().record_shrink();
        let snap = ledger_snapshot(ev.ledger());
        assert_eq!(snap.total[Quantity::C.index()], 2);
        assert_eq!(snap.iteration_at_iterate[Quantity::C.index()], 1);
        assert_eq!(snap.iteration_at_trial[Quantity::C.index()], 1);
        assert_eq!(snap.min_accuracy[Quantity::C.index()], Some(1e-3));
        assert_eq!(snap.shrink_events, 1);
        ev.ledger_mut().begin_iteration();
        assert_eq!(ev.ledger().iteration_count(Quantity::C), 0);
        assert_eq!(ev.ledger().total[Quantity::C.index()], 2);
    }

    struct Bounded;
    impl FiniteSum<f64> for Bounded {
        fn len(&self) -> usize {
            100
        }
        fn term_value(&self, i: usize, x: &[f64]) -> f64 {
            ((i as f64) * 0.37 + x[0]).sin()
        }
        fn term_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
            vec![((i as f64) * 0.37 + x[0]).cos(), 0.0]
        }
        fn value_bound(&self) -> f64 {
            1.0
        }
        fn gradient_bound(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn partial_sum_prefix_and_bound() {
        let b = Arc::new(Bounded);
        let full = move |x: &[f64]| (0..100).map(|i| ((i as f64) * 0.37 + x[0]).sin()).sum::<f64>() / 100.0;
        let mut s = spec();
        s.f_exact = Arc::new(full);
        let mut o = PartialSumOracle::new(&s, b);
        let x = [0.2, 0.0];
        let r = o.respond(&OracleRequest::new(&x, Quantity::F, 0.5)).unwrap();
        assert_eq!(r.cost_units, 75.0);
        assert_eq!(r.certified_error, 0.5);
        assert!((r.value.into_scalar() - full(&x)).abs() <= 0.5);
        let r0 = o.respond(&OracleRequest::new(&x, Quantity::F, 0.0)).unwrap();
        assert_eq!(r0.cost_units, 100.0);
        assert!((r0.value.into_scalar() - full(&x)).abs() < 1e-15);
        // Tighter requests never cost less.
        let mut last = 0.0;
        for eps in [1.5, 1.0, 0.5, 0.1, 0.01, 0.001] {
            let r = o.respond(&OracleRequest::new(&x, Quantity::G, eps)).unwrap();
            assert!(r.cost_units >= last);
            assert!(r.certified_error <= eps);
            last = r.cost_units;
        }
    }
}
