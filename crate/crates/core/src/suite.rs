//! Catalogue of test problems with closed-form derivatives.
//!
//! Every lower bound `ψ_low` only uses `f ≥ ψ_low` and `h ≥ 0`, so it stays
//! valid when the outer function is swapped for another catalogued norm.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composite::{OuterFunction, ProblemSpec};
use crate::error::ArldaError;
use crate::linalg::{norm2, Matrix};
use crate::oracle::{
    AccuracyFloor, AdditiveNoiseOracle, Evaluator, ExactOracle, FiniteSum, NoiseMode, PartialSumOracle,
    SeriesExpansion, TruncatedSeriesOracle,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "quad")]
    Quad,
    #[serde(rename = "lasso1d")]
    Lasso1d,
    #[serde(rename = "lassoNd")]
    LassoNd,
    #[serde(rename = "nl-l1-regression")]
    NlL1Regression,
    #[serde(rename = "rosenbrock-pen")]
    RosenbrockPen,
    #[serde(rename = "series-l1")]
    SeriesL1,
    #[serde(rename = "sum-l1")]
    SumL1,
}

impl ProblemId {
    pub const ALL: [ProblemId; 7] = [
        ProblemId::Quad,
        ProblemId::Lasso1d,
        ProblemId::LassoNd,
        ProblemId::NlL1Regression,
        ProblemId::RosenbrockPen,
        ProblemId::SeriesL1,
        ProblemId::SumL1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Quad => "quad",
            ProblemId::Lasso1d => "lasso1d",
            ProblemId::LassoNd => "lassoNd",
            ProblemId::NlL1Regression => "nl-l1-regression",
            ProblemId::RosenbrockPen => "rosenbrock-pen",
            ProblemId::SeriesL1 => "series-l1",
            ProblemId::SumL1 => "sum-l1",
        }
    }

    /// Default dimension.
    pub fn default_dim(self) -> usize {
        match self {
            ProblemId::Quad => 2,
            ProblemId::Lasso1d => 1,
            ProblemId::LassoNd => 3,
            ProblemId::NlL1Regression => 10,
            ProblemId::RosenbrockPen => 2,
            ProblemId::SeriesL1 => 2,
            ProblemId::SumL1 => 2,
        }
    }

    pub fn dim_is_fixed(self) -> bool {
        matches!(self, ProblemId::Lasso1d | ProblemId::RosenbrockPen)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = ArldaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lasso-nd" | "lassond" => return Ok(ProblemId::LassoNd),
            _ => {}
        }
        ProblemId::ALL.iter().copied().find(|p| p.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = ProblemId::ALL.iter().map(|p| p.as_str()).collect();
            ArldaError::Config(format!("unknown problem '{s}' (known: {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Exact,
    /// Uniform additive noise inside the requested ball.
    Noise,
    /// Additive noise at 0.999 of the requested accuracy.
    Adversarial,
    /// Truncated series (`series-l1` only).
    Series,
    /// Prefix of a finite sum (`sum-l1` only).
    PartialSum,
}

impl OracleKind {
    pub const ALL: [OracleKind; 5] =
        [OracleKind::Exact, OracleKind::Noise, OracleKind::Adversarial, OracleKind::Series, OracleKind::PartialSum];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::Noise => "noise",
            OracleKind::Adversarial => "adversarial",
            OracleKind::Series => "series",
            OracleKind::PartialSum => "partial-sum",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleKind {
    type Err = ArldaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OracleKind::ALL.iter().copied().find(|o| o.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = OracleKind::ALL.iter().map(|o| o.as_str()).collect();
            ArldaError::Config(format!("unknown oracle '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// A catalogued problem plus the structure some oracles need.
#[derive(Clone)]
pub struct SuiteProblem<T: Real> {
    pub id: ProblemId,
    pub spec: ProblemSpec<T>,
    pub series: Option<Arc<dyn SeriesExpansion<T>>>,
    pub finite_sum: Option<Arc<dyn FiniteSum<T>>>,
}

impl<T: Real> fmt::Debug for SuiteProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuiteProblem").field("id", &self.id).field("spec", &self.spec).finish()
    }
}

/// Terms kept by the series oracle before it reports a floor.
pub const SERIES_MAX_TERMS: usize = 60;

impl<T: Real> SuiteProblem<T> {
    pub fn with_outer(mut self, h: OuterFunction<T>) -> Self {
        self.spec = self.spec.with_outer(h);
        self
    }

    /// Builds an evaluator of the requested kind.
    pub fn evaluator(&self, kind: OracleKind, seed: u64, floors: AccuracyFloor<T>) -> Result<Evaluator<T>, ArldaError> {
        let ev = match kind {
            OracleKind::Exact => Evaluator::new(Box::new(ExactOracle::new(&self.spec))),
            OracleKind::Noise => {
                Evaluator::new(Box::new(AdditiveNoiseOracle::new(&self.spec, seed, NoiseMode::Uniform)))
            }
            OracleKind::Adversarial => {
                Evaluator::new(Box::new(AdditiveNoiseOracle::new(&self.spec, seed, NoiseMode::Adversarial)))
            }
            OracleKind::Series => {
                let series = self.series.clone().ok_or_else(|| {
                    ArldaError::Config(format!("oracle 'series' needs a series problem, not '{}'", self.id))
                })?;
                Evaluator::new(Box::new(TruncatedSeriesOracle::new(&self.spec, series, SERIES_MAX_TERMS)))
            }
            OracleKind::PartialSum => {
                let sum = self.finite_sum.clone().ok_or_else(|| {
                    ArldaError::Config(format!("oracle 'partial-sum' needs a finite-sum problem, not '{}'", self.id))
                })?;
                Evaluator::new(Box::new(PartialSumOracle::new(&self.spec, sum)))
            }
        };
        Ok(ev.with_floors(floors))
    }
}

/// Builds a catalogued problem at its default or the given dimension.
pub fn build<T: Real>(id: ProblemId, dim: Option<usize>) -> Result<SuiteProblem<T>, ArldaError> {
    let n = dim.unwrap_or(id.default_dim());
    if n == 0 {
        return Err(ArldaError::Config("dimension must be positive".into()));
    }
    if id.dim_is_fixed() && n != id.default_dim() {
        return Err(ArldaError::Config(format!("problem '{id}' has fixed dimension {}", id.default_dim())));
    }
    let plain = |spec| SuiteProblem { id, spec, series: None, finite_sum: None };
    Ok(match id {
        ProblemId::Quad => plain(quad(n)),
        ProblemId::Lasso1d => plain(quartic_l1("lasso1d", &[-0.2], &[2.0])),
        ProblemId::LassoNd => {
            let b: Vec<f64> = (0..n).map(|i| [0.5, -1.5, 0.2][i % 3]).collect();
            let x0: Vec<f64> = (0..n).map(|i| [1.5, -1.0, 0.5][i % 3]).collect();
            plain(quartic_l1("lassoNd", &b, &x0))
        }
        ProblemId::NlL1Regression => plain(nl_l1_regression(n, 2024)),
        ProblemId::RosenbrockPen => plain(rosenbrock_pen()),
        ProblemId::SeriesL1 => {
            let series = Arc::new(SineSeries);
            SuiteProblem { id, spec: series_l1(n, series.clone()), series: Some(series), finite_sum: None }
        }
        ProblemId::SumL1 => {
            let sum = Arc::new(SineSum::new(100, n, 77));
            SuiteProblem { id, spec: sum_l1(n, sum.clone()), series: None, finite_sum: Some(sum) }
        }
    })
}

fn to_t<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn zero_inner<T: Real>(
    n: usize,
) -> (Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>, Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>) {
    (Arc::new(|_: &[T]| vec![T::zero()]), Arc::new(move |_: &[T]| Matrix::zeros(1, n)))
}

/// `f = ½ Σ aᵢ xᵢ²` with `aᵢ` spread over `[1, 10]`, `h = 0`.
fn quad<T: Real>(n: usize) -> ProblemSpec<T> {
    let a: Vec<T> = (0..n)
        .map(|i| {
            if n == 1 {
                T::one()
            } else {
                T::one() + T::lit(9.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
            }
        })
        .collect();
    let a_max = a.iter().fold(T::zero(), |m, &v| m.max(v));
    let (a1, a2) = (a.clone(), a);
    let (c, j) = zero_inner(n);
    ProblemSpec::new(
        "quad",
        n,
        1,
        Arc::new(move |x: &[T]| x.iter().zip(&a1).map(|(&xi, &ai)| T::lit(0.5) * ai * xi * xi).sum()),
        Arc::new(move |x: &[T]| x.iter().zip(&a2).map(|(&xi, &ai)| ai * xi).collect()),
        c,
        j,
        OuterFunction::zero(),
        vec![T::one(); n],
    )
    .with_lipschitz(a_max / T::lit(2.0), T::zero())
    .with_lower_bound(T::zero())
}

/// Global minimum of `¼(x² − 1)² + b x`, from the real roots of `x³ − x + b`.
fn quartic_min(b: f64) -> f64 {
    let q = |x: f64| 0.25 * (x * x - 1.0).powi(2) + b * x;
    let r = 2.0 + b.abs();
    let mut best = f64::INFINITY;
    let steps = 4000;
    for i in 0..=steps {
        let mut x = -r + 2.0 * r * i as f64 / steps as f64;
        for _ in 0..30 {
            let d2 = 3.0 * x * x - 1.0;
            if d2.abs() < 1e-12 {
                break;
            }
            x -= (x * x * x - x + b) / d2;
        }
        if x.is_finite() {
            best = best.min(q(x));
        }
    }
    best
}

/// Rounds a lower bound down so it stays valid after conversion.
fn safe_lower<T: Real>(v: f64) -> T {
    T::lit(v - 1e-9 * (1.0 + v.abs()))
}

/// `f = Σ ¼(xᵢ² − 1)² + bᵢ xᵢ`, `c(x) = x`, `h = ‖·‖₁`.
fn quartic_l1<T: Real>(name: &str, b: &[f64], x0: &[f64]) -> ProblemSpec<T> {
    let n = b.len();
    let low: f64 = b.iter().map(|&bi| quartic_min(bi)).sum();
    let bt: Vec<T> = to_t(b);
    let (b1, b2) = (bt.clone(), bt);
    let quarter = T::lit(0.25);
    // Hessian entries 3x² − 1 over |x| ≤ 2.5, halved for the 2L convention.
    let l_g = T::lit((3.0 * 2.5 * 2.5 - 1.0) / 2.0);
    ProblemSpec::new(
        name,
        n,
        n,
        Arc::new(move |x: &[T]| {
            x.iter().zip(&b1).map(|(&xi, &bi)| quarter * (xi * xi - T::one()).powi(2) + bi * xi).sum()
        }),
        Arc::new(move |x: &[T]| x.iter().zip(&b2).map(|(&xi, &bi)| xi * xi * xi - xi + bi).collect()),
        Arc::new(|x: &[T]| x.to_vec()),
        Arc::new(move |_: &[T]| Matrix::identity(n)),
        OuterFunction::l1(T::one()),
        to_t(x0),
    )
    .with_lipschitz(l_g, T::zero())
    .with_lower_bound(safe_lower(low))
}

/// `f = 0`, `c(x) = A tanh(x) − b` with `m = 2n` rows and `b = A tanh(x*)`,
/// `h = ‖·‖₁`.
fn nl_l1_regression<T: Real>(n: usize, seed: u64) -> ProblemSpec<T> {
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a64: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b64: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a64[i * n + j] * x_star[j].tanh()).sum()).collect();
    let a = Matrix::from_row_major(m, n, to_t(&a64));
    let b: Vec<T> = to_t(&b64);
    // |d/dx sech²x| ≤ 4/(3√3).
    let l_j = a.frobenius() * T::lit(4.0 / (3.0 * 3f64.sqrt())) / T::lit(2.0);
    let (a1, a2) = (a.clone(), a);
    ProblemSpec::new(
        "nl-l1-regression",
        n,
        m,
        Arc::new(|_: &[T]| T::zero()),
        Arc::new(move |_: &[T]| vec![T::zero(); n]),
        Arc::new(move |x: &[T]| {
            let t: Vec<T> = x.iter().map(|v| v.tanh()).collect();
            a1.mul_vec(&t).iter().zip(&b).map(|(&u, &v)| u - v).collect()
        }),
        Arc::new(move |x: &[T]| {
            let mut j = a2.clone();
            for (col, xc) in x.iter().enumerate() {
                let s = T::one() - xc.tanh().powi(2);
                for row in 0..m {
                    j[(row, col)] = j[(row, col)] * s;
                }
            }
            j
        }),
        OuterFunction::l1(T::one()),
        vec![T::zero(); n],
    )
    .with_lipschitz(T::zero(), l_j)
    .with_lower_bound(T::zero())
}

/// `f = (1 − x₁)² + 10(x₂ − x₁²)²`, `c(x) = x₁² + x₂² − 1`, `h = |·|`.
fn rosenbrock_pen<T: Real>() -> ProblemSpec<T> {
    let ten = T::lit(10.0);
    let two = T::lit(2.0);
    ProblemSpec::new(
        "rosenbrock-pen",
        2,
        1,
        Arc::new(move |x: &[T]| (T::one() - x[0]).powi(2) + ten * (x[1] - x[0] * x[0]).powi(2)),
        Arc::new(move |x: &[T]| {
            let r = x[1] - x[0] * x[0];
            vec![-two * (T::one() - x[0]) - T::lit(40.0) * x[0] * r, T::lit(20.0) * r]
        }),
        Arc::new(|x: &[T]| vec![x[0] * x[0] + x[1] * x[1] - T::one()]),
        Arc::new(move |x: &[T]| Matrix::from_row_major(1, 2, vec![two * x[0], two * x[1]])),
        OuterFunction::linf(T::one()),
        vec![T::lit(-1.2), T::one()],
    )
    // Gershgorin bound on the Hessian over the box |xᵢ| ≤ 2: 642, halved.
    .with_lipschitz(T::lit(321.0), T::one())
    .with_lower_bound(T::zero())
}

/// `S(t) = Σ_{i≥1} 2⁻ⁱ sin(i t)`, summed in closed form for the exact oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineSeries;

impl SineSeries {
    pub fn closed_form<T: Real>(t: T) -> T {
        T::lit(0.5) * t.sin() / (T::lit(1.25) - t.cos())
    }

    pub fn closed_form_derivative<T: Real>(t: T) -> T {
        let d = T::lit(1.25) - t.cos();
        T::lit(0.5) * (T::lit(1.25) * t.cos() - T::one()) / (d * d)
    }
}

fn half_sq<T: Real>(x: &[T]) -> T {
    let nx = norm2(x);
    T::lit(0.5) * nx * nx
}

impl<T: Real> SeriesExpansion<T> for SineSeries {
    fn partial_value(&self, x: &[T], terms: usize) -> T {
        let mut s = T::zero();
        let mut w = T::one();
        for i in 1..=terms {
            w = w * T::lit(0.5);
            s = s + w * (T::from_usize_lossy(i) * x[0]).sin();
        }
        s + half_sq(x)
    }

    fn partial_gradient(&self, x: &[T], terms: usize) -> Vec<T> {
        let mut d = T::zero();
        let mut w = T::one();
        for i in 1..=terms {
            w = w * T::lit(0.5);
            let it = T::from_usize_lossy(i);
            d = d + w * it * (it * x[0]).cos();
        }
        let mut g = x.to_vec();
        g[0] = g[0] + d;
        g
    }

    fn value_tail(&self, terms: usize) -> T {
        T::lit(0.5).powi(terms as i32)
    }

    fn gradient_tail(&self, terms: usize) -> T {
        T::from_usize_lossy(terms + 2) * T::lit(0.5).powi(terms as i32)
    }
}

/// `f = S(x₁) + ½‖x‖²`, `c(x) = x`, `h = ‖·‖₁`.
fn series_l1<T: Real>(n: usize, _series: Arc<SineSeries>) -> ProblemSpec<T> {
    ProblemSpec::new(
        "series-l1",
        n,
        n,
        Arc::new(|x: &[T]| SineSeries::closed_form(x[0]) + half_sq(x)),
        Arc::new(|x: &[T]| {
            let mut g = x.to_vec();
            g[0] = g[0] + SineSeries::closed_form_derivative(x[0]);
            g
        }),
        Arc::new(|x: &[T]| x.to_vec()),
        Arc::new(move |_: &[T]| Matrix::identity(n)),
        OuterFunction::l1(T::one()),
        (0..n).map(|i| if i == 0 { T::lit(2.0) } else { T::lit(-1.0) }).collect(),
    )
    // |S''| ≤ Σ i² 2⁻ⁱ = 6, plus the identity from ½‖x‖².
    .with_lipschitz(T::lit(3.5), T::zero())
    .with_lower_bound(safe_lower(-1.0))
}

/// `f = (1/N) Σ sin(aᵢᵀx + bᵢ)`.
#[derive(Debug, Clone)]
pub struct SineSum<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
}

impl<T: Real> SineSum<T> {
    pub fn new(terms: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(terms);
        let mut b = Vec::with_capacity(terms);
        for _ in 0..terms {
            a.push((0..n).map(|_| T::lit(rng.gen_range(-2.0..2.0))).collect());
            b.push(T::lit(rng.gen_range(-3.0..3.0)));
        }
        Self { a, b }
    }

    pub fn value(&self, x: &[T]) -> T {
        let total: T = (0..self.a.len()).map(|i| self.term_value(i, x)).sum();
        total / T::from_usize_lossy(self.a.len())
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); x.len()];
        for i in 0..self.a.len() {
            crate::linalg::axpy(T::one(), &self.term_gradient(i, x), &mut g);
        }
        let k = T::from_usize_lossy(self.a.len());
        g.into_iter().map(|v| v / k).collect()
    }

    /// `(1/N) Σ ‖aᵢ‖²`, a bound on the Hessian norm.
    pub fn curvature(&self) -> T {
        let total: T = self.a.iter().map(|ai| norm2(ai).powi(2)).sum();
        total / T::from_usize_lossy(self.a.len())
    }

    fn arg(&self, i: usize, x: &[T]) -> T {
        crate::linalg::dot(&self.a[i], x) + self.b[i]
    }
}

impl<T: Real> FiniteSum<T> for SineSum<T> {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn term_value(&self, i: usize, x: &[T]) -> T {
        self.arg(i, x).sin()
    }

    fn term_gradient(&self, i: usize, x: &[T]) -> Vec<T> {
        let c = self.arg(i, x).cos();
        self.a[i].iter().map(|&v| c * v).collect()
    }

    fn value_bound(&self) -> T {
        T::one()
    }

    fn gradient_bound(&self) -> T {
        self.a.iter().fold(T::zero(), |m, ai| m.max(norm2(ai)))
    }
}

/// `f = (1/N) Σ sin(aᵢᵀx + bᵢ)`, `c(x) = x`, `h = ‖·‖₁`.
fn sum_l1<T: Real>(n: usize, sum: Arc<SineSum<T>>) -> ProblemSpec<T> {
    let (s1, s2) = (sum.clone(), sum.clone());
    ProblemSpec::new(
        "sum-l1",
        n,
        n,
        Arc::new(move |x: &[T]| s1.value(x)),
        Arc::new(move |x: &[T]| s2.gradient(x)),
        Arc::new(|x: &[T]| x.to_vec()),
        Arc::new(move |_: &[T]| Matrix::identity(n)),
        OuterFunction::l1(T::one()),
        vec![T::lit(1.5); n],
    )
    .with_lipschitz(sum.curvature() / T::lit(2.0), T::zero())
    .with_lower_bound(safe_lower(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::finite_diff_check;

    #[test]
    fn ids_round_trip() {
        for id in ProblemId::ALL {
            assert_eq!(id.as_str().parse::<ProblemId>().unwrap(), id);
        }
        assert!("nope".parse::<ProblemId>().is_err());
        for o in OracleKind::ALL {
            assert_eq!(o.as_str().parse::<OracleKind>().unwrap(), o);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for id in ProblemId::ALL {
            let p = build::<f64>(id, None).unwrap();
            let x: Vec<f64> = (0..p.spec.n).map(|i| 0.3 - 0.17 * i as f64).collect();
            let r = finite_diff_check(&p.spec, &x, 1e-5);
            assert!(r.max_gradient_deviation <= 1e-5, "{id}: {r:?}");
            assert!(r.max_jacobian_deviation <= 1e-5, "{id}: {r:?}");
        }
    }

    #[test]
    fn lower_bounds_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for id in ProblemId::ALL {
            let p = build::<f64>(id, None).unwrap();
            let low = p.spec.psi_low.unwrap();
            for _ in 0..2000 {
                let x: Vec<f64> = (0..p.spec.n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                assert!(p.spec.psi(&x) >= low, "{id} at {x:?}");
            }
        }
    }

    #[test]
    fn quartic_min_matches_dense_grid() {
        for b in [-1.5, -0.2, 0.0, 0.5] {
            let grid = (0..=200_000)
                .map(|i| -4.0 + 8.0 * i as f64 / 200_000.0)
                .map(|x: f64| 0.25 * (x * x - 1.0).powi(2) + b * x)
                .fold(f64::INFINITY, f64::min);
            assert!((quartic_min(b) - grid).abs() < 1e-8 && quartic_min(b) <= grid);
        }
    }

    #[test]
    fn series_partial_sums_converge_to_closed_form() {
        let s = SineSeries;
        for &t in &[-2.0f64, 0.3, 1.7] {
            let x = [t, 0.0];
            let exact = SineSeries::closed_form(t) + 0.5 * t * t;
            for n in [1usize, 5, 20] {
                let err = (s.partial_value(&x, n) - exact).abs();
                assert!(err <= SeriesExpansion::<f64>::value_tail(&s, n) + 1e-15);
                let gerr = (s.partial_gradient(&x, n)[0] - (SineSeries::closed_form_derivative(t) + t)).abs();
                assert!(gerr <= SeriesExpansion::<f64>::gradient_tail(&s, n) + 1e-15);
            }
        }
    }

    #[test]
    fn special_oracles_need_matching_problems() {
        let p = build::<f64>(ProblemId::Quad, None).unwrap();
        assert!(p.evaluator(OracleKind::Series, 0, AccuracyFloor::default()).is_err());
        assert!(p.evaluator(OracleKind::PartialSum, 0, AccuracyFloor::default()).is_err());
        let s = build::<f64>(ProblemId::SumL1, None).unwrap();
        assert!(s.evaluator(OracleKind::PartialSum, 0, AccuracyFloor::default()).is_ok());
        assert!(build::<f64>(ProblemId::RosenbrockPen, Some(3)).is_err());
    }

    #[test]
    fn builds_in_f32() {
        let p = build::<f32>(ProblemId::NlL1Regression, Some(3)).unwrap();
        assert_eq!(p.spec.m, 6);
        assert!(p.spec.psi(&p.spec.x0) > 0.0);
    }
}
