//! Problem model `ψ(x) = f(x) + h(c(x))`, algorithm constants, accuracy
//! bookkeeping and the closed-form decrease and complexity formulas.

mod bounds;
mod outer;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bounds::{
    delta_k_eps, error_bound_rhs, nu_bound, nu_k_bound, nu_k_bound_plain, sigma_max_bound, tau_bound, theta_global,
    theta_threshold,
};
pub use outer::{project_l1_ball, soft_threshold, OuterFunction, OuterKind};

use crate::error::ArldaError;
use crate::linalg::{dot, norm2, Matrix};
use crate::scalar::Real;

pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type MatrixFn<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;

/// One of the four inexactly evaluated problem quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    F,
    G,
    C,
    J,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::F, Quantity::G, Quantity::C, Quantity::J];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::F => "f",
            Quantity::G => "g",
            Quantity::C => "c",
            Quantity::J => "J",
        })
    }
}

/// Composite problem with exact reference callables.
///
/// The exact callables are the ground truth that oracles perturb and that
/// the verification routines audit against.
#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub f_exact: ScalarFn<T>,
    pub g_exact: VectorFn<T>,
    pub c_exact: VectorFn<T>,
    pub j_exact: MatrixFn<T>,
    pub h: OuterFunction<T>,
    pub l_h: T,
    pub l_g: Option<T>,
    pub l_j: Option<T>,
    pub psi_low: Option<T>,
    pub x0: Vec<T>,
}

impl<T: Real> ProblemSpec<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        f_exact: ScalarFn<T>,
        g_exact: VectorFn<T>,
        c_exact: VectorFn<T>,
        j_exact: MatrixFn<T>,
        h: OuterFunction<T>,
        x0: Vec<T>,
    ) -> Self {
        let l_h = h.lipschitz(m);
        Self {
            name: name.into(),
            n,
            m,
            f_exact,
            g_exact,
            c_exact,
            j_exact,
            h,
            l_h,
            l_g: None,
            l_j: None,
            psi_low: None,
            x0,
        }
    }

    /// Gradient / Jacobian Lipschitz constants in the `2L` convention:
    /// `‖g(x) − g(y)‖ ≤ 2 L_g ‖x − y‖`, same for `J`.
    pub fn with_lipschitz(mut self, l_g: T, l_j: T) -> Self {
        self.l_g = Some(l_g);
        self.l_j = Some(l_j);
        self
    }

    pub fn with_lower_bound(mut self, psi_low: T) -> Self {
        self.psi_low = Some(psi_low);
        self
    }

    /// Replaces `h` (and its Lipschitz constant) keeping everything else.
    pub fn with_outer(mut self, h: OuterFunction<T>) -> Self {
        self.l_h = h.lipschitz(self.m);
        self.h = h;
        self
    }

    pub fn with_start(mut self, x0: Vec<T>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn validate(&self) -> Result<(), ArldaError> {
        if self.n == 0 || self.m == 0 {
            return Err(ArldaError::Config(format!(
                "problem dimensions must be positive (n={}, m={})",
                self.n, self.m
            )));
        }
        if self.x0.len() != self.n {
            return Err(ArldaError::Dimension(format!("x0 has length {} but n = {}", self.x0.len(), self.n)));
        }
        if !(self.l_h >= T::zero()) {
            return Err(ArldaError::Config("L_h must be nonnegative".into()));
        }
        if let (Some(lg), Some(lj)) = (self.l_g, self.l_j) {
            if lg < T::zero() || lj < T::zero() {
                return Err(ArldaError::Config("L_g and L_J must be nonnegative".into()));
            }
        }
        let c0 = (self.c_exact)(&self.x0);
        let j0 = (self.j_exact)(&self.x0);
        let g0 = (self.g_exact)(&self.x0);
        if c0.len() != self.m || j0.rows() != self.m || j0.cols() != self.n || g0.len() != self.n {
            return Err(ArldaError::Dimension(format!(
                "callables disagree with n={}, m={}: |g|={}, |c|={}, J is {}x{}",
                self.n,
                self.m,
                g0.len(),
                c0.len(),
                j0.rows(),
                j0.cols()
            )));
        }
        Ok(())
    }

    pub fn psi(&self, x: &[T]) -> T {
        (self.f_exact)(x) + self.h.value(&(self.c_exact)(x))
    }

    /// Exact linearized decrease `Δℓ(v)` at `x`.
    pub fn exact_linearized_decrease(&self, x: &[T], v: &[T]) -> T {
        let g = (self.g_exact)(x);
        let c = (self.c_exact)(x);
        let j = (self.j_exact)(x);
        linearized_decrease_raw(&g, &c, &j, &self.h, v)
    }
}

impl<T: Real> fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("h", &self.h)
            .field("l_h", &self.l_h)
            .field("l_g", &self.l_g)
            .field("l_j", &self.l_j)
            .field("psi_low", &self.psi_low)
            .finish_non_exhaustive()
    }
}

/// Upper bounds on the four absolute accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMaxima<T> {
    pub f: T,
    pub g: T,
    pub c: T,
    pub j: T,
}

impl<T: Real> AccuracyMaxima<T> {
    pub fn uniform(v: T) -> Self {
        Self { f: v, g: v, c: v, j: v }
    }
}

/// Algorithm constants; [`Default`] gives the standard parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConstants<T> {
    pub eta1: T,
    pub eta2: T,
    pub gamma1: T,
    pub gamma2: T,
    pub gamma3: T,
    pub alpha: T,
    pub kappa_omega: T,
    pub gamma_eps: T,
    pub sigma0: T,
    pub sigma_min: T,
    pub eps_max: AccuracyMaxima<T>,
    /// Target accuracy ε ∈ (0, 1).
    pub epsilon: T,
    pub max_iterations: usize,
    pub monotonic: bool,
}

impl<T: Real> Default for AlgoConstants<T> {
    fn default() -> Self {
        let alpha = T::lit(0.5);
        let eta1 = T::lit(0.1);
        Self {
            eta1,
            eta2: T::lit(0.9),
            gamma1: T::lit(0.5),
            gamma2: T::lit(2.0),
            gamma3: T::lit(4.0),
            alpha,
            kappa_omega: alpha * eta1 / T::lit(3.0),
            gamma_eps: T::lit(0.1),
            sigma0: T::one(),
            sigma_min: T::lit(1e-8),
            eps_max: AccuracyMaxima::uniform(T::lit(0.1)),
            epsilon: T::lit(1e-4),
            max_iterations: 50_000,
            monotonic: false,
        }
    }
}

impl<T: Real> AlgoConstants<T> {
    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Checks every initialization constraint on the constants.
    pub fn validate(&self) -> Result<(), ArldaError> {
        let zero = T::zero();
        let one = T::one();
        let mut problems = Vec::new();
        if !(self.epsilon > zero && self.epsilon < one) {
            problems.push(format!("epsilon must lie in (0,1), got {}", self.epsilon));
        }
        if !(zero < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < one) {
            problems.push("need 0 < eta1 <= eta2 < 1".to_string());
        }
        if !(zero < self.gamma1 && self.gamma1 < one && one < self.gamma2 && self.gamma2 < self.gamma3) {
            problems.push("need 0 < gamma1 < 1 < gamma2 < gamma3".to_string());
        }
        if !(zero < self.alpha && self.alpha < one) {
            problems.push("alpha must lie in (0,1)".to_string());
        }
        if !(zero < self.gamma_eps && self.gamma_eps < one) {
            problems.push("gamma_eps must lie in (0,1)".to_string());
        }
        if !(zero < self.sigma_min && self.sigma_min <= self.sigma0) {
            problems.push("need 0 < sigma_min <= sigma0".to_string());
        }
        // Small relative slack: the default κ_ω is computed as αη₁/3 itself.
        let kappa_cap = self.alpha * self.eta1 / T::lit(3.0) * (one + T::lit(1e-12));
        if !(zero < self.kappa_omega && self.kappa_omega <= kappa_cap) {
            problems.push(format!("kappa_omega must lie in (0, alpha*eta1/3], got {}", self.kappa_omega));
        }
        let m = self.eps_max;
        if [m.f, m.g, m.c, m.j].iter().any(|&e| !(e >= zero) || !e.is_finite()) {
            problems.push("accuracy maxima must be finite and nonnegative".to_string());
        }
        if self.max_iterations == 0 {
            problems.push("max_iterations must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ArldaError::Config(problems.join("; ")))
        }
    }

    /// `ω = min(κ_ω, 1/σ)`.
    pub fn omega_for(&self, sigma: T) -> T {
        self.kappa_omega.min(T::one() / sigma)
    }
}

/// Current absolute accuracies together with their caps, the relative level
/// `ω_k` and the shrink factor `γ_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyState<T> {
    pub eps_f: T,
    pub eps_g: T,
    pub eps_c: T,
    pub eps_j: T,
    pub maxima: AccuracyMaxima<T>,
    pub omega: T,
    pub gamma_eps: T,
}

impl<T: Real> AccuracyState<T> {
    pub fn get(&self, q: Quantity) -> T {
        match q {
            Quantity::F => self.eps_f,
            Quantity::G => self.eps_g,
            Quantity::C => self.eps_c,
            Quantity::J => self.eps_j,
        }
    }

    /// `ε_g + L_h ε_J + 2 L_h ε_c`: the noise level on `Δℓ̄` over the unit ball.
    pub fn ball_noise(&self, l_h: T) -> T {
        error_bound_rhs(self, l_h, T::one())
    }

    /// `ε_f + L_h ε_c`: the bound on `|ψ̄ − ψ|`.
    pub fn psi_noise(&self, l_h: T) -> T {
        self.eps_f + l_h * self.eps_c
    }

    /// Multiplies `ε_g`, `ε_c`, `ε_J` by `γ_ε`.
    pub fn shrink_derivative_accuracies(&mut self) {
        self.eps_g = self.eps_g * self.gamma_eps;
        self.eps_c = self.eps_c * self.gamma_eps;
        self.eps_j = self.eps_j * self.gamma_eps;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cached<V, T> {
    pub value: V,
    /// Tightest accuracy requested for this value at this point.
    pub accuracy: T,
    /// Error bound certified by the oracle (≤ `accuracy`).
    pub certified: T,
}

/// Inexact values `f̄, ḡ, c̄, J̄` at one point, each tagged with the
/// accuracy it was obtained at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InexactSnapshot<T> {
    pub point: Vec<T>,
    pub f: Option<Cached<T, T>>,
    pub g: Option<Cached<Vec<T>, T>>,
    pub c: Option<Cached<Vec<T>, T>>,
    pub j: Option<Cached<Matrix<T>, T>>,
}

impl<T: Real> InexactSnapshot<T> {
    pub fn empty(point: Vec<T>) -> Self {
        Self { point, f: None, g: None, c: None, j: None }
    }

    /// Snapshot holding the given values as if computed exactly.
    pub fn from_values(point: Vec<T>, g: Vec<T>, c: Vec<T>, j: Matrix<T>) -> Self {
        let z = T::zero();
        Self {
            point,
            f: None,
            g: Some(Cached { value: g, accuracy: z, certified: z }),
            c: Some(Cached { value: c, accuracy: z, certified: z }),
            j: Some(Cached { value: j, accuracy: z, certified: z }),
        }
    }

    pub fn accuracy(&self, q: Quantity) -> Option<T> {
        match q {
            Quantity::F => self.f.as_ref().map(|c| c.accuracy),
            Quantity::G => self.g.as_ref().map(|c| c.accuracy),
            Quantity::C => self.c.as_ref().map(|c| c.accuracy),
            Quantity::J => self.j.as_ref().map(|c| c.accuracy),
        }
    }

    /// True when `q` is missing or was obtained at an accuracy looser than `eps`.
    pub fn needs(&self, q: Quantity, eps: T) -> bool {
        self.accuracy(q).is_none_or(|a| a > eps)
    }

    pub fn g(&self) -> Result<&[T], ArldaError> {
        self.g.as_ref().map(|c| c.value.as_slice()).ok_or(ArldaError::MissingQuantity(Quantity::G))
    }

    pub fn c(&self) -> Result<&[T], ArldaError> {
        self.c.as_ref().map(|c| c.value.as_slice()).ok_or(ArldaError::MissingQuantity(Quantity::C))
    }

    pub fn j(&self) -> Result<&Matrix<T>, ArldaError> {
        self.j.as_ref().map(|c| &c.value).ok_or(ArldaError::MissingQuantity(Quantity::J))
    }

    pub fn f(&self) -> Result<T, ArldaError> {
        self.f.as_ref().map(|c| c.value).ok_or(ArldaError::MissingQuantity(Quantity::F))
    }

    /// `ψ̄ = f̄ + h(c̄)`.
    pub fn psi_bar(&self, h: &OuterFunction<T>) -> Result<T, ArldaError> {
        Ok(self.f()? + h.value(self.c()?))
    }

    /// Stores a scalar `f̄`; a looser value never replaces a tighter one.
    pub fn store_f(&mut self, value: T, accuracy: T, certified: T) {
        if self.f.as_ref().is_none_or(|c| accuracy <= c.accuracy) {
            self.f = Some(Cached { value, accuracy, certified });
        }
    }

    pub fn store_g(&mut self, value: Vec<T>, accuracy: T, certified: T) {
        if self.g.as_ref().is_none_or(|c| accuracy <= c.accuracy) {
            self.g = Some(Cached { value, accuracy, certified });
        }
    }

    pub fn store_c(&mut self, value: Vec<T>, accuracy: T, certified: T) {
        if self.c.as_ref().is_none_or(|c| accuracy <= c.accuracy) {
            self.c = Some(Cached { value, accuracy, certified });
        }
    }

    pub fn store_j(&mut self, value: Matrix<T>, accuracy: T, certified: T) {
        if self.j.as_ref().is_none_or(|c| accuracy <= c.accuracy) {
            self.j = Some(Cached { value, accuracy, certified });
        }
    }
}

/// Decreases of the inexact linearization and regularized model along `v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport<T> {
    pub direction: Vec<T>,
    pub linearized_decrease: T,
    pub model_decrease: T,
    pub norm_v: T,
}

impl<T: Real> DecreaseReport<T> {
    pub fn new(direction: Vec<T>, linearized_decrease: T, sigma: T) -> Self {
        let norm_v = norm2(&direction);
        let model_decrease = linearized_decrease - sigma / T::lit(2.0) * norm_v * norm_v;
        Self { direction, linearized_decrease, model_decrease, norm_v }
    }
}

/// `−gᵀv + h(c) − h(c + Jv)` on raw inputs.
pub fn linearized_decrease_raw<T: Real>(g: &[T], c: &[T], j: &Matrix<T>, h: &OuterFunction<T>, v: &[T]) -> T {
    let jv = j.mul_vec(v);
    let shifted: Vec<T> = c.iter().zip(&jv).map(|(&a, &b)| a + b).collect();
    -dot(g, v) + h.value(c) - h.value(&shifted)
}

/// `Δℓ̄(v) = −ḡᵀv + h(c̄) − h(c̄ + J̄v)`.
pub fn linearized_decrease<T: Real>(
    snapshot: &InexactSnapshot<T>,
    h: &OuterFunction<T>,
    v: &[T],
) -> Result<T, ArldaError> {
    Ok(linearized_decrease_raw(snapshot.g()?, snapshot.c()?, snapshot.j()?, h, v))
}

/// `Δm̄(v) = Δℓ̄(v) − (σ/2)‖v‖²`.
pub fn model_decrease<T: Real>(
    snapshot: &InexactSnapshot<T>,
    h: &OuterFunction<T>,
    v: &[T],
    sigma: T,
) -> Result<T, ArldaError> {
    if !(sigma > T::zero()) {
        return Err(ArldaError::Config(format!("sigma must be positive, got {sigma}")));
    }
    let nv = norm2(v);
    Ok(linearized_decrease(snapshot, h, v)? - sigma / T::lit(2.0) * nv * nv)
}
