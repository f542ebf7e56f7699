//! Catalogue of convex outer functions `h` with their exact Lipschitz
//! constants, proximal maps and conjugate-side projections.
//!
//! Every catalogued `h` is a (weighted) norm or zero, so its conjugate is the
//! indicator of a dual-norm ball `B*`. The conjugate prox is therefore a
//! projection onto `B*` for any step length, and `h(z) = max_{y ∈ B*} yᵀz`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::norm2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterKind {
    Zero,
    L1,
    L2,
    Linf,
    WeightedL1,
}

impl OuterKind {
    pub const ALL: [OuterKind; 5] =
        [OuterKind::Zero, OuterKind::L1, OuterKind::L2, OuterKind::Linf, OuterKind::WeightedL1];

    pub fn as_str(self) -> &'static str {
        match self {
            OuterKind::Zero => "zero",
            OuterKind::L1 => "l1",
            OuterKind::L2 => "l2",
            OuterKind::Linf => "linf",
            OuterKind::WeightedL1 => "weighted-l1",
        }
    }
}

impl fmt::Display for OuterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OuterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OuterKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown outer function '{s}' (expected zero, l1, l2, linf or weighted-l1)"))
    }
}

/// Convex, Lipschitz outer function `h: R^m -> R`.
///
/// `weighted-l1` is `weight · Σ wᵢ|vᵢ|` with per-component weights `wᵢ > 0`
/// (all ones when none are given). The other norms are `weight · ‖v‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterFunction<T> {
    kind: OuterKind,
    weight: T,
    component_weights: Vec<T>,
}

impl<T: Real> OuterFunction<T> {
    pub fn new(kind: OuterKind, weight: T) -> Self {
        assert!(weight > T::zero(), "outer function weight must be positive");
        Self { kind, weight, component_weights: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::new(OuterKind::Zero, T::one())
    }

    pub fn l1(weight: T) -> Self {
        Self::new(OuterKind::L1, weight)
    }

    pub fn l2(weight: T) -> Self {
        Self::new(OuterKind::L2, weight)
    }

    pub fn linf(weight: T) -> Self {
        Self::new(OuterKind::Linf, weight)
    }

    /// Weighted ℓ1 with explicit per-component weights.
    pub fn weighted_l1(weight: T, component_weights: Vec<T>) -> Self {
        assert!(component_weights.iter().all(|&w| w > T::zero()), "component weights must be positive");
        Self { kind: OuterKind::WeightedL1, weight, component_weights }
    }

    pub fn kind(&self) -> OuterKind {
        self.kind
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn component_weights(&self) -> &[T] {
        &self.component_weights
    }

    #[inline]
    fn cw(&self, i: usize) -> T {
        self.component_weights.get(i).copied().unwrap_or_else(T::one)
    }

    pub fn value(&self, v: &[T]) -> T {
        let w = self.weight;
        match self.kind {
            OuterKind::Zero => T::zero(),
            OuterKind::L1 => w * v.iter().map(|x| x.abs()).sum::<T>(),
            OuterKind::L2 => w * norm2(v),
            OuterKind::Linf => w * v.iter().fold(T::zero(), |a, x| a.max(x.abs())),
            OuterKind::WeightedL1 => w * v.iter().enumerate().map(|(i, x)| self.cw(i) * x.abs()).sum::<T>(),
        }
    }

    /// Exact Lipschitz constant of `h` on `R^m` w.r.t. the Euclidean norm.
    pub fn lipschitz(&self, m: usize) -> T {
        let w = self.weight;
        match self.kind {
            OuterKind::Zero => T::zero(),
            OuterKind::L2 | OuterKind::Linf => w,
            OuterKind::L1 => w * T::from_usize_lossy(m).sqrt(),
            OuterKind::WeightedL1 => {
                let cws: Vec<T> = (0..m).map(|i| self.cw(i)).collect();
                w * norm2(&cws)
            }
        }
    }

    /// `argmin_w h(w) + ‖w − v‖² / (2λ)`.
    pub fn prox(&self, lambda: T, v: &[T]) -> Vec<T> {
        assert!(lambda > T::zero(), "prox step must be positive");
        let t = lambda * self.weight;
        match self.kind {
            OuterKind::Zero => v.to_vec(),
            OuterKind::L1 => v.iter().map(|&x| soft_threshold(x, t)).collect(),
            OuterKind::WeightedL1 => v.iter().enumerate().map(|(i, &x)| soft_threshold(x, t * self.cw(i))).collect(),
            OuterKind::L2 => {
                let nv = norm2(v);
                if nv <= t {
                    vec![T::zero(); v.len()]
                } else {
                    let f = T::one() - t / nv;
                    v.iter().map(|&x| f * x).collect()
                }
            }
            OuterKind::Linf => {
                // Moreau: prox_{t‖·‖∞}(v) = v − P_{t·B1}(v).
                let p = project_l1_ball(v, t);
                v.iter().zip(&p).map(|(&a, &b)| a - b).collect()
            }
        }
    }

    /// Projection onto the dual ball `B* = dom h*`; equals `prox_{ρh*}` for every ρ > 0.
    pub fn project_dual_ball(&self, u: &[T]) -> Vec<T> {
        let w = self.weight;
        match self.kind {
            OuterKind::Zero => vec![T::zero(); u.len()],
            OuterKind::L1 => u.iter().map(|&x| x.max(-w).min(w)).collect(),
            OuterKind::WeightedL1 => u
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let r = w * self.cw(i);
                    x.max(-r).min(r)
                })
                .collect(),
            OuterKind::L2 => {
                let nu = norm2(u);
                if nu <= w {
                    u.to_vec()
                } else {
                    u.iter().map(|&x| x * w / nu).collect()
                }
            }
            OuterKind::Linf => project_l1_ball(u, w),
        }
    }

    /// `prox_{h*/λ}(u)`, the conjugate term of the Moreau decomposition
    /// `v = prox_{λh}(v) + λ·prox_{h*/λ}(v/λ)`.
    pub fn prox_conjugate(&self, lambda: T, u: &[T]) -> Vec<T> {
        assert!(lambda > T::zero(), "prox step must be positive");
        self.project_dual_ball(u)
    }

    /// An element of `∂h(v)`; always lies in the dual ball.
    pub fn subgradient(&self, v: &[T]) -> Vec<T> {
        let w = self.weight;
        let sign = |x: T| {
            if x > T::zero() {
                T::one()
            } else if x < T::zero() {
                -T::one()
            } else {
                T::zero()
            }
        };
        match self.kind {
            OuterKind::Zero => vec![T::zero(); v.len()],
            OuterKind::L1 => v.iter().map(|&x| w * sign(x)).collect(),
            OuterKind::WeightedL1 => v.iter().enumerate().map(|(i, &x)| w * self.cw(i) * sign(x)).collect(),
            OuterKind::L2 => {
                let nv = norm2(v);
                if nv == T::zero() {
                    vec![T::zero(); v.len()]
                } else {
                    v.iter().map(|&x| w * x / nv).collect()
                }
            }
            OuterKind::Linf => {
                let mut out = vec![T::zero(); v.len()];
                let mut best: Option<usize> = None;
                for (i, x) in v.iter().enumerate() {
                    if best.is_none_or(|b| x.abs() > v[b].abs()) {
                        best = Some(i);
                    }
                }
                if let Some(i) = best {
                    out[i] = w * sign(v[i]);
                }
                out
            }
        }
    }
}

impl<T: Real> fmt::Display for OuterFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(weight={})", self.kind, self.weight)
    }
}

pub fn soft_threshold<T: Real>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

/// Euclidean projection onto `{y : ‖y‖₁ ≤ radius}` (sort-and-threshold).
pub fn project_l1_ball<T: Real>(v: &[T], radius: T) -> Vec<T> {
    let l1: T = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    if radius <= T::zero() {
        return vec![T::zero(); v.len()];
    }
    let mut mags: Vec<T> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in mags.iter().enumerate() {
        cum = cum + u;
        let t = (cum - radius) / T::from_usize_lossy(j + 1);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}
