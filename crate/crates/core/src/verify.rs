//! Independent checks: brute-force subproblem optima, finite differences and
//! a replay audit of a run trace against exact evaluations.

use serde::Serialize;

use crate::composite::{
    linearized_decrease_raw, sigma_max_bound, AlgoConstants, OuterFunction, OuterKind, ProblemSpec,
};
use crate::error::ArldaError;
use crate::linalg::{norm2, Matrix};
use crate::scalar::Real;
use crate::solver::{global_nu, iteration_envelope, per_iteration_nu, IterationRecord};

/// Absolute slack on every audited inequality.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// Side length of the fixed coarse grid that seeds the polish.
const SEED_GRID: usize = 20;

/// One audited inequality `measured ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFinding {
    /// `None` for whole-run checks.
    pub iteration: Option<usize>,
    pub check: &'static str,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

impl AuditFinding {
    pub fn new(iteration: Option<usize>, check: &'static str, bound: f64, measured: f64) -> Self {
        let pass = measured <= bound + AUDIT_TOLERANCE;
        Self { iteration, check, bound, measured, pass }
    }
}

/// `max_{‖v‖≤radius} objective(v)` for `n ≤ 3` by a lattice plus boundary grid
/// and a deterministic pattern-search polish.
///
/// The grid with `resolution` steps per axis contains the grid of any divisor
/// of `resolution`, and the polish starts from points that do not depend on
/// `resolution`, so refining by an integer factor never lowers the result.
pub fn maximize_over_ball<T: Real, F: Fn(&[T]) -> T>(
    n: usize,
    radius: T,
    resolution: usize,
    objective: F,
) -> Result<T, ArldaError> {
    if n == 0 || n > 3 {
        return Err(ArldaError::Dimension(format!("brute force supports 1 ≤ n ≤ 3, got n = {n}")));
    }
    if resolution < 2 {
        return Err(ArldaError::Config("resolution must be at least 2".into()));
    }
    let mut best = objective(&vec![T::zero(); n]);
    let mut visit = |v: &[T]| {
        let val = objective(v);
        if val > best {
            best = val;
        }
    };
    for_each_ball_point(n, radius, resolution, &mut visit);

    let mut seeds: Vec<Vec<T>> = vec![vec![T::zero(); n]];
    for i in 0..n {
        for sgn in [T::one(), -T::one()] {
            let mut e = vec![T::zero(); n];
            e[i] = sgn * radius * T::lit(0.5);
            seeds.push(e);
        }
    }
    let mut coarse_best = (objective(&seeds[0]), seeds[0].clone());
    for_each_ball_point(n, radius, SEED_GRID, &mut |v: &[T]| {
        let val = objective(v);
        if val > coarse_best.0 {
            coarse_best = (val, v.to_vec());
        }
    });
    seeds.push(coarse_best.1);
    for seed in seeds {
        let val = polish(seed, radius, &objective);
        if val > best {
            best = val;
        }
    }
    Ok(best)
}

fn project_ball<T: Real>(v: &mut [T], radius: T) {
    let nv = norm2(v);
    if nv > radius {
        for x in v.iter_mut() {
            *x = *x * radius / nv;
        }
    }
}

fn for_each_ball_point<T: Real, F: FnMut(&[T])>(n: usize, radius: T, r: usize, visit: &mut F) {
    let step = T::lit(2.0) / T::from_usize_lossy(r);
    let coord = |i: usize| (-T::one() + step * T::from_usize_lossy(i)) * radius;
    let mut p = vec![T::zero(); n];
    let r1 = r + 1;
    let total = r1.pow(n as u32);
    for idx in 0..total {
        let mut rem = idx;
        for pi in p.iter_mut() {
            *pi = coord(rem % r1);
            rem /= r1;
        }
        if norm2(&p) <= radius {
            visit(&p);
        }
    }
    // Boundary sphere.
    let tau = T::lit(std::f64::consts::TAU);
    match n {
        1 => {
            visit(&[radius]);
            visit(&[-radius]);
        }
        2 => {
            for i in 0..r {
                let a = tau * T::from_usize_lossy(i) / T::from_usize_lossy(r);
                visit(&[radius * a.cos(), radius * a.sin()]);
            }
        }
        _ => {
            let half = r.div_ceil(2);
            for i in 0..r {
                let a = tau * T::from_usize_lossy(i) / T::from_usize_lossy(r);
                for j in 0..=half {
                    let b = T::lit(std::f64::consts::PI) * T::from_usize_lossy(j) / T::from_usize_lossy(half);
                    visit(&[radius * b.sin() * a.cos(), radius * b.sin() * a.sin(), radius * b.cos()]);
                }
            }
        }
    }
}

/// Shrinking full-lattice pattern search, projected onto the ball.
fn polish<T: Real, F: Fn(&[T]) -> T>(start: Vec<T>, radius: T, objective: &F) -> T {
    let n = start.len();
    let k: usize = match n {
        1 => 40,
        2 => 20,
        _ => 10,
    };
    let side = k + 1;
    let mut center = start;
    project_ball(&mut center, radius);
    let mut value = objective(&center);
    let mut rho = radius * T::lit(0.25);
    let stop = radius * T::lit(1e-13);
    let mut cand = vec![T::zero(); n];
    let mut rounds = 0;
    while rho > stop && rounds < 2000 {
        rounds += 1;
        let mut best = (value, None::<Vec<T>>);
        for idx in 0..side.pow(n as u32) {
            let mut rem = idx;
            for (ci, &c0) in cand.iter_mut().zip(&center) {
                let t = T::from_usize_lossy(rem % side) / T::from_usize_lossy(k) * T::lit(2.0) - T::one();
                *ci = c0 + rho * t;
                rem /= side;
            }
            project_ball(&mut cand, radius);
            let v = objective(&cand);
            if v > best.0 {
                best = (v, Some(cand.clone()));
            }
        }
        match best.1 {
            Some(p) => {
                center = p;
                value = best.0;
            }
            None => rho = rho * T::lit(0.5),
        }
    }
    value
}

/// Exact criticality measure `φ(x) = max_{‖d‖≤1} Δℓ(d)` by brute force.
pub fn brute_force_phi<T: Real>(spec: &ProblemSpec<T>, x: &[T], resolution: usize) -> Result<T, ArldaError> {
    if resolution < 100 {
        return Err(ArldaError::Config(format!("resolution must be at least 100, got {resolution}")));
    }
    let g = (spec.g_exact)(x);
    let c = (spec.c_exact)(x);
    let j = (spec.j_exact)(x);
    brute_force_criticality(&g, &c, &j, &spec.h, resolution)
}

/// `max_{‖d‖≤1} Δℓ(d)` for raw `g, c, J`.
pub fn brute_force_criticality<T: Real>(
    g: &[T],
    c: &[T],
    j: &Matrix<T>,
    h: &OuterFunction<T>,
    resolution: usize,
) -> Result<T, ArldaError> {
    let obj = |d: &[T]| linearized_decrease_raw(g, c, j, h, d);
    let grid = maximize_over_ball(g.len(), T::one(), resolution, obj)?;
    Ok(grid.max(kink_line_max(c, j, h, T::one(), obj)))
}

/// `max_s Δm(s)` for raw `g, c, J`, searched over the ball that must contain
/// every step with `Δm(s) ≥ 0`.
pub fn brute_force_model<T: Real>(
    g: &[T],
    c: &[T],
    j: &Matrix<T>,
    h: &OuterFunction<T>,
    sigma: T,
    resolution: usize,
) -> Result<T, ArldaError> {
    let radius = T::lit(2.0) * (norm2(g) + h.lipschitz(c.len()) * j.frobenius()) / sigma;
    if radius == T::zero() {
        return Ok(T::zero());
    }
    let obj = |s: &[T]| {
        let ns = norm2(s);
        linearized_decrease_raw(g, c, j, h, s) - sigma / T::lit(2.0) * ns * ns
    };
    let grid = maximize_over_ball(g.len(), radius, resolution, obj)?;
    Ok(grid.max(kink_line_max(c, j, h, radius, obj)))
}

/// In the plane, maxima of these concave objectives sitting on a ridge of
/// `h(c + Jv)` lie on one of the lines where a residual (or, for `linf`, a sum
/// or difference of two residuals) vanishes. A lattice misses narrow ridges,
/// so each such chord of the ball is searched exactly by ternary search.
fn kink_line_max<T: Real, F: Fn(&[T]) -> T>(c: &[T], j: &Matrix<T>, h: &OuterFunction<T>, radius: T, obj: F) -> T {
    let mut best = T::neg_infinity();
    if j.cols() != 2 || h.kind() == OuterKind::Zero {
        return best;
    }
    let m = c.len();
    let row = |i: usize| (c[i], [j[(i, 0)], j[(i, 1)]]);
    let mut lines = Vec::new();
    for i in 0..m {
        lines.push(row(i));
        if h.kind() == OuterKind::Linf {
            for k in i + 1..m {
                let (a1, b1) = row(i);
                let (a2, b2) = row(k);
                lines.push((a1 - a2, [b1[0] - b2[0], b1[1] - b2[1]]));
                lines.push((a1 + a2, [b1[0] + b2[0], b1[1] + b2[1]]));
            }
        }
    }
    for (a, b) in lines {
        let nb = norm2(&b);
        if nb == T::zero() {
            continue;
        }
        // Chord {a + b·v = 0} ∩ ball: foot point p0 plus s·t, |s| ≤ half.
        let p0 = [-a * b[0] / (nb * nb), -a * b[1] / (nb * nb)];
        let d0 = norm2(&p0);
        if d0 > radius {
            continue;
        }
        let half = (radius * radius - d0 * d0).max(T::zero()).sqrt();
        let t = [-b[1] / nb, b[0] / nb];
        let at = |s: T| obj(&[p0[0] + s * t[0], p0[1] + s * t[1]]);
        let (mut lo, mut hi) = (-half, half);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / T::lit(3.0);
            let m2 = hi - (hi - lo) / T::lit(3.0);
            if at(m1) < at(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best = best.max(at((lo + hi) / T::lit(2.0))).max(at(-half)).max(at(half));
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDiffReport<T> {
    pub max_gradient_deviation: T,
    pub max_jacobian_deviation: T,
}

/// Central differences of `f` and `c` against `g` and `J`.
pub fn finite_diff_check<T: Real>(spec: &ProblemSpec<T>, x: &[T], step: T) -> FiniteDiffReport<T> {
    assert!(step > T::zero(), "finite-difference step must be positive");
    let g = (spec.g_exact)(x);
    let j = (spec.j_exact)(x);
    let mut gdev = T::zero();
    let mut jdev = T::zero();
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        xm[i] = x[i] - step;
        let df = ((spec.f_exact)(&xp) - (spec.f_exact)(&xm)) / (T::lit(2.0) * step);
        gdev = gdev.max((df - g[i]).abs());
        let cp = (spec.c_exact)(&xp);
        let cm = (spec.c_exact)(&xm);
        for r in 0..cp.len() {
            let dc = (cp[r] - cm[r]) / (T::lit(2.0) * step);
            jdev = jdev.max((dc - j[(r, i)]).abs());
        }
        xp[i] = x[i];
        xm[i] = x[i];
    }
    FiniteDiffReport { max_gradient_deviation: gdev, max_jacobian_deviation: jdev }
}

/// Replays a run trace against the exact callables and re-checks every
/// per-iteration bound plus the whole-run envelopes.
pub fn audit_run<T: Real>(
    spec: &ProblemSpec<T>,
    consts: &AlgoConstants<T>,
    records: &[IterationRecord<T>],
) -> Vec<AuditFinding> {
    let mut out = Vec::new();
    let l_h = spec.l_h;
    let sigma_max = sigma_max_bound(spec, consts);
    let f = |v: T| v.as_f64();
    for r in records {
        let it = Some(r.k);
        out.push(AuditFinding::new(it, "omega-rule", 0.0, f((r.omega - consts.omega_for(r.sigma)).abs())));
        out.push(AuditFinding::new(it, "psi-accuracy-budget", f(r.omega), f(r.eps_start[0] + l_h * r.eps_start[2])));
        if let Some(sm) = sigma_max {
            out.push(AuditFinding::new(it, "sigma-cap", f(sm), f(r.sigma)));
        }
        let nu = per_iteration_nu(spec, consts, r.sigma, r.omega).ceil();
        out.push(AuditFinding::new(it, "shrink-budget", f(nu), r.shrinks as f64));
        out.push(AuditFinding::new(it, "f-evaluations", 2.0, r.nf as f64));
        if consts.monotonic {
            let start = r.eps_start;
            let end = [r.eps_f, r.eps_g, r.eps_c, r.eps_j];
            for q in 0..4 {
                out.push(AuditFinding::new(it, "monotone-accuracy", f(start[q]), f(end[q])));
            }
        }
        if !r.step_computed() {
            continue;
        }
        let acc = r.accuracy();
        let dell_exact = spec.exact_linearized_decrease(&r.x, &r.s);
        let dell_bound = crate::composite::error_bound_rhs(&acc, l_h, r.snorm);
        out.push(AuditFinding::new(it, "dell-error", f(dell_bound), f((r.dellbar - dell_exact).abs())));
        let target = T::lit(0.25) * T::one().min(r.phibar / r.sigma) * r.phibar;
        out.push(AuditFinding::new(it, "cauchy-decrease", f(r.dellbar), f(target)));
        out.push(AuditFinding::new(it, "model-decrease", f(r.dellbar), f(r.sigma / T::lit(2.0) * r.snorm * r.snorm)));
        if r.rho.is_nan() {
            continue;
        }
        let psi_bound = f(acc.psi_noise(l_h));
        let err_k = (r.psi_bar - spec.psi(&r.x)).abs();
        let trial = crate::linalg::add(&r.x, &r.s);
        let err_t = (r.psi_bar_trial - spec.psi(&trial)).abs();
        out.push(AuditFinding::new(it, "psi-error-iterate", psi_bound, f(err_k)));
        out.push(AuditFinding::new(it, "psi-error-trial", psi_bound, f(err_t)));
        let rel = T::lit(1.5) * r.omega * r.dellbar;
        out.push(AuditFinding::new(it, "psi-error-relative", f(rel), f(err_k.max(err_t))));
        let accept_rule = r.rho >= consts.eta1;
        out.push(AuditFinding::new(it, "acceptance-rule", 0.0, if accept_rule == r.accepted { 0.0 } else { 1.0 }));
        if r.accepted {
            out.push(AuditFinding::new(
                it,
                "sufficient-decrease",
                f(r.psi_bar - r.psi_bar_trial),
                f(consts.eta1 * r.dellbar),
            ));
        }
    }
    if consts.monotonic {
        for w in records.windows(2) {
            let prev = [w[0].eps_f, w[0].eps_g, w[0].eps_c, w[0].eps_j];
            for q in 0..4 {
                out.push(AuditFinding::new(Some(w[1].k), "monotone-accuracy", f(prev[q]), f(w[1].eps_start[q])));
            }
        }
        if let Some(nu) = global_nu(spec, consts) {
            let total: usize = records.iter().map(|r| r.shrinks).sum();
            out.push(AuditFinding::new(None, "total-shrink-budget", f(nu.ceil()), total as f64));
        }
    }
    if let Some(tau) = iteration_envelope(spec, consts) {
        out.push(AuditFinding::new(None, "iteration-envelope", f(tau), records.len() as f64));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::OuterKind;
    use std::sync::Arc;

    fn linear_spec(g: Vec<f64>) -> ProblemSpec<f64> {
        let n = g.len();
        let g1 = g.clone();
        ProblemSpec::new(
            "linear",
            n,
            1,
            Arc::new(move |x: &[f64]| x.iter().zip(&g1).map(|(a, b)| a * b).sum()),
            Arc::new(move |_: &[f64]| g.clone()),
            Arc::new(|_: &[f64]| vec![0.0]),
            Arc::new(move |_: &[f64]| Matrix::zeros(1, n)),
            OuterFunction::zero(),
            vec![0.0; n],
        )
    }

    #[test]
    fn phi_of_linear_function_is_gradient_norm() {
        let spec = linear_spec(vec![3.0, 4.0]);
        let phi = brute_force_phi(&spec, &[0.0, 0.0], 100).unwrap();
        assert!((phi - 5.0).abs() < 1e-4, "{phi}");
    }

    #[test]
    fn phi_of_abs_at_two_is_one() {
        let spec = ProblemSpec::new(
            "abs",
            1,
            1,
            Arc::new(|_: &[f64]| 0.0),
            Arc::new(|_: &[f64]| vec![0.0]),
            Arc::new(|x: &[f64]| x.to_vec()),
            Arc::new(|_: &[f64]| Matrix::identity(1)),
            OuterFunction::l1(1.0),
            vec![2.0],
        );
        let phi = brute_force_phi(&spec, &[2.0], 100).unwrap();
        assert!((phi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_large_dimension_and_coarse_grids() {
        let spec = linear_spec(vec![1.0; 4]);
        assert!(matches!(brute_force_phi(&spec, &[0.0; 4], 100), Err(ArldaError::Dimension(_))));
        let spec2 = linear_spec(vec![1.0; 2]);
        assert!(brute_force_phi(&spec2, &[0.0; 2], 10).is_err());
    }

    #[test]
    fn refinement_never_lowers_the_value() {
        let g = [0.7, -0.2];
        let c = [0.3, -0.5];
        let j = Matrix::from_rows(&[vec![1.0, 0.4], vec![-0.3, 0.9]]);
        for kind in OuterKind::ALL {
            let h = OuterFunction::new(kind, 1.3);
            let v100 = brute_force_criticality(&g, &c, &j, &h, 100).unwrap();
            let v200 = brute_force_criticality(&g, &c, &j, &h, 200).unwrap();
            let v400 = brute_force_criticality(&g, &c, &j, &h, 400).unwrap();
            assert!(v100 <= v200 && v200 <= v400, "{kind}: {v100} {v200} {v400}");
        }
    }

    #[test]
    fn finite_differences_on_quadratic_and_linear_maps() {
        let spec = ProblemSpec::new(
            "q",
            2,
            2,
            Arc::new(|x: &[f64]| 0.5 * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[1]),
            Arc::new(|x: &[f64]| vec![x[0] + 2.0 * x[1], 2.0 * x[0] - 2.0 * x[1]]),
            Arc::new(|x: &[f64]| vec![x[0] - x[1], 3.0 * x[1]]),
            Arc::new(|_: &[f64]| Matrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 3.0]])),
            OuterFunction::zero(),
            vec![0.0, 0.0],
        );
        let r = finite_diff_check(&spec, &[0.4, -1.1], 1e-4);
        assert!(r.max_gradient_deviation <= 1e-8);
        assert!(r.max_jacobian_deviation <= 1e-10);
    }
}
