//! Closed-form error bounds, loop budgets and complexity envelopes.
//!
//! These are audit quantities: the driver logs them and the verification
//! module checks runs against them, but they never steer the iteration.

use super::{AccuracyMaxima, AccuracyState, AlgoConstants, ProblemSpec};
use crate::scalar::Real;

/// `(ε_g + L_h ε_J)‖v‖ + 2 L_h ε_c`, the bound on `|Δℓ̄(v) − Δℓ(v)|`.
pub fn error_bound_rhs<T: Real>(eps: &AccuracyState<T>, l_h: T, norm_v: T) -> T {
    (eps.eps_g + l_h * eps.eps_j) * norm_v + T::lit(2.0) * l_h * eps.eps_c
}

fn bracket<T: Real>(max: &AccuracyMaxima<T>, l_h: T) -> T {
    let a = max.g + l_h * max.j;
    a + (a * a + T::lit(4.0) * l_h * max.c).sqrt()
}

/// Step-norm threshold `θ_k` above which the step accuracy test always passes.
pub fn theta_threshold<T: Real>(max: &AccuracyMaxima<T>, l_h: T, omega_k: T, sigma_min: T) -> T {
    bracket(max, l_h) / (omega_k * sigma_min)
}

/// Iteration-independent `θ = max(1, (σ_max/σ_min)·[…])`.
pub fn theta_global<T: Real>(max: &AccuracyMaxima<T>, l_h: T, sigma_max: T, sigma_min: T) -> T {
    T::one().max(sigma_max / sigma_min * bracket(max, l_h))
}

/// `δ_k(ε) = (1/16)·min(1, ε/σ_k)·ε`, a floor on `Δℓ̄(s_k)` before termination.
pub fn delta_k_eps<T: Real>(epsilon: T, sigma_k: T) -> T {
    T::one().min(epsilon / sigma_k) * epsilon / T::lit(16.0)
}

fn log_ratio_over<T: Real>(numer_arg: T, denom_arg: T, gamma_eps: T) -> T {
    if !(numer_arg > T::zero()) || !(denom_arg > T::zero()) {
        // No noise to shrink (all maxima zero) means no shrink is ever needed.
        return T::zero();
    }
    (numer_arg.ln() - denom_arg.ln()).abs() / gamma_eps.ln().abs()
}

/// Per-iteration shrink budget `ν_k(ε)` (the form using `max{1, θ_k}`).
pub fn nu_k_bound<T: Real>(
    max: &AccuracyMaxima<T>,
    l_h: T,
    theta_k: T,
    omega_k: T,
    epsilon: T,
    delta_k: T,
    gamma_eps: T,
) -> T {
    nu_k_bound_plain(max, l_h, T::one().max(theta_k), omega_k, epsilon, delta_k, gamma_eps)
}

/// `ν_k(ε)` with `θ_k` used as given (no `max{1, ·}` clamp).
pub fn nu_k_bound_plain<T: Real>(
    max: &AccuracyMaxima<T>,
    l_h: T,
    theta: T,
    omega_k: T,
    epsilon: T,
    delta_k: T,
    gamma_eps: T,
) -> T {
    let two = T::lit(2.0);
    let numer = (max.g + l_h * max.j) * theta + two * l_h * max.c;
    let denom = omega_k * (epsilon / two).min(delta_k);
    log_ratio_over(numer, denom, gamma_eps)
}

/// Iteration-independent shrink budget `ν(ε)`; `theta` from [`theta_global`].
pub fn nu_bound<T: Real>(max: &AccuracyMaxima<T>, l_h: T, theta: T, sigma_max: T, epsilon: T, gamma_eps: T) -> T {
    let two = T::lit(2.0);
    let inner = (max.g + l_h * max.j) * theta + two * l_h * max.c;
    if !(inner > T::zero()) {
        return T::zero();
    }
    let numer = (two * epsilon.ln()).abs() + (inner.ln() + two * (T::lit(4.0) * sigma_max).ln()).abs();
    numer / gamma_eps.ln().abs()
}

/// `σ_max = max(σ₀, γ₃(4 + 2(L_g + L_h L_J))/(1 − η₂), 1/κ_ω)`; `None` when
/// the problem does not declare `L_g` and `L_J`.
pub fn sigma_max_bound<T: Real>(spec: &ProblemSpec<T>, consts: &AlgoConstants<T>) -> Option<T> {
    let (l_g, l_j) = (spec.l_g?, spec.l_j?);
    Some(sigma_max_from(l_g, spec.l_h, l_j, consts))
}

pub(crate) fn sigma_max_from<T: Real>(l_g: T, l_h: T, l_j: T, consts: &AlgoConstants<T>) -> T {
    let mid = consts.gamma3 * (T::lit(4.0) + T::lit(2.0) * (l_g + l_h * l_j)) / (T::one() - consts.eta2);
    consts.sigma0.max(mid).max(T::one() / consts.kappa_omega)
}

/// Iteration envelope `τ(ε)`, read with `ε⁻²` in the first factor.
pub fn tau_bound<T: Real>(sigma_max: T, psi0_minus_low: T, consts: &AlgoConstants<T>, epsilon: T) -> T {
    let first =
        (T::lit(8.0) * sigma_max * psi0_minus_low / (consts.eta1 * (T::one() - consts.alpha)) / (epsilon * epsilon)
            + T::one())
        .floor();
    let lg2 = consts.gamma2.ln();
    first * (T::one() + consts.gamma1.ln().abs() / lg2) + (sigma_max / consts.sigma0).ln() / lg2
}
