//! Linear solvers for the elasticity step and the bound-constrained minimizer
//! for the damage step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseSpdMatrix};

/// Jacobi-preconditioned conjugate gradients until `‖Kx − b‖ ≤ tol · ‖b‖`.
pub fn solve_spd(k: &SparseSpdMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    pcg(k, b, &mut x, tol, 20 * b.len().max(10))?;
    Ok(x)
}

/// PCG from the initial guess in `x`. Returns the iteration count.
pub fn pcg(k: &SparseSpdMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let inv_diag: Vec<f64> = k
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = k.apply(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    for it in 0..=max_iter {
        let rnorm = norm2(&r);
        if rnorm <= tol * bnorm {
            return Ok(it);
        }
        if it == max_iter {
            return Err(Error::LinearSolver {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        k.mul_vec(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::NotPositiveDefinite { row: it, pivot: pkp });
        }
        let step = rz / pkp;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * kp[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    unreachable!()
}

/// Envelope (skyline) Cholesky factor `K = L Lᵀ`, stored row by row from the
/// first nonzero column to the diagonal.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(k: &SparseSpdMatrix) -> Result<Self> {
        let n = k.dim();
        let first = k.row_first_column();
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        start.push(len);
        let mut values = vec![0.0; len];
        for i in 0..n {
            for (j, v) in k.row(i) {
                if j <= i {
                    values[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (head, tail) = values.split_at_mut(start[i]);
                let row_i = &mut tail[..i - fi + 1];
                let row_j = &head[start[j]..start[j] + j - fj + 1];
                let s: f64 = row_i[lo - fi..j - fi]
                    .iter()
                    .zip(&row_j[lo - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                row_i[j - fi] = (row_i[j - fi] - s) / row_j[j - fj];
            }
            let row_i = &mut values[start[i]..start[i + 1]];
            let (off, diag) = row_i.split_at_mut(i - fi);
            let d = diag[0] - off.iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: i, pivot: d });
            }
            diag[0] = d.sqrt();
        }
        Ok(Self { first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        y
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolverKind {
    /// Envelope Cholesky with residual-checked refinement.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

impl std::str::FromStr for LinearSolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cholesky" => Ok(Self::Cholesky),
            "cg" => Ok(Self::Cg),
            other => Err(format!("unknown linear solver `{other}` (expected cholesky or cg)")),
        }
    }
}

impl std::fmt::Display for LinearSolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cholesky => "cholesky",
            Self::Cg => "cg",
        })
    }
}

impl LinearSolverKind {
    /// Solves `Kx = b` with `‖Kx − b‖ ≤ tol ‖b‖`.
    ///
    /// The direct solver refines iteratively. When refinement stagnates above
    /// `tol` because of ill-conditioning, it still accepts a residual up to
    /// `√tol`.
    pub fn solve(self, k: &SparseSpdMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        match self {
            Self::Cg => solve_spd(k, b, tol),
            Self::Cholesky => {
                let bnorm = norm2(b);
                if bnorm == 0.0 {
                    return Ok(vec![0.0; b.len()]);
                }
                let chol = EnvelopeCholesky::factor(k)?;
                let mut x = chol.solve(b);
                let mut best = (f64::INFINITY, x.clone());
                for pass in 0..MAX_REFINEMENT {
                    let kx = k.apply(&x);
                    let r: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
                    let rel = norm2(&r) / bnorm;
                    if rel <= tol {
                        return Ok(x);
                    }
                    if rel >= 0.5 * best.0 {
                        if best.0.min(rel) <= tol.sqrt() {
                            log::debug!("refinement stagnated at relative residual {:e}", best.0.min(rel));
                            return Ok(if rel < best.0 { x } else { best.1 });
                        }
                        return Err(Error::LinearSolver {
                            iterations: pass,
                            residual: best.0.min(rel),
                        });
                    }
                    let dx = chol.solve(&r);
                    best = (rel, x.clone());
                    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
                }
                Err(Error::LinearSolver {
                    iterations: MAX_REFINEMENT,
                    residual: best.0,
                })
            }
        }
    }
}

const MAX_REFINEMENT: usize = 8;

/// Stop when, over `STALL_WINDOW` iterations, the objective falls by at most
/// `STALL_DECREASE · |f|` and the KKT residual does not halve.
const STALL_WINDOW: usize = 10;
const STALL_DECREASE: f64 = 1e-13;

/// Smooth objective minimized over a box.
pub trait BoxObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn hessian_product(&self, x: &[f64], v: &[f64], out: &mut [f64]);
    fn hessian_diagonal(&self, x: &[f64], out: &mut [f64]);
}

/// `lower ≤ x ≤ upper` componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxConstraints {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxConstraints {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::param("bounds", "lower and upper lengths differ"));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::param(
                "bounds",
                format!("lower {} exceeds upper {} at {i}", lower[i], upper[i]),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// Damage bounds `α_prev ≤ α ≤ 1`.
    pub fn damage(lower: &[f64]) -> Result<Self> {
        if let Some(&v) = lower.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::DamageOutOfRange(v));
        }
        Self::new(lower.to_vec(), vec![1.0; lower.len()])
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.max(l).min(u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((&xi, &l), &u)| l <= xi && xi <= u)
    }
}

/// First-order optimality certificate of a box-constrained minimization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `max |g_i|` over components strictly inside their bounds.
    pub max_interior_gradient: f64,
    /// Largest violation of `g_i ≥ 0` at lower bounds and `g_i ≤ 0` at upper bounds.
    pub max_bound_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iterate, starting with the initial point.
    pub objective_history: Vec<f64>,
}

impl KktReport {
    pub fn residual(&self) -> f64 {
        self.max_interior_gradient.max(self.max_bound_violation)
    }
}

/// KKT maxima of the weighted gradient `g_i / weight_i` at `x`.
///
/// Components with `lower == upper` are fixed and carry no condition.
pub fn kkt_residuals(x: &[f64], grad: &[f64], bounds: &BoxConstraints, weights: Option<&[f64]>) -> (f64, f64) {
    let mut interior: f64 = 0.0;
    let mut violation: f64 = 0.0;
    for i in 0..x.len() {
        let (l, u) = (bounds.lower[i], bounds.upper[i]);
        if l == u {
            continue;
        }
        let g = grad[i] / weights.map_or(1.0, |w| w[i]);
        if x[i] <= l {
            violation = violation.max(-g);
        } else if x[i] >= u {
            violation = violation.max(g);
        } else {
            interior = interior.max(g.abs());
        }
    }
    (interior, violation.max(0.0))
}

#[derive(Clone, Debug)]
pub struct BoxSolverOptions {
    /// KKT tolerance on the weighted gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Per-component gradient weights for the KKT test (e.g. lumped nodal
    /// areas, turning nodal forces into densities).
    pub weights: Option<Vec<f64>>,
    /// Relative residual of the inner Newton CG.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for BoxSolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            weights: None,
            cg_tol: 1e-10,
            cg_max_iter: 500,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
/// Relative size of objective changes treated as round-off in the line search.
const ROUNDOFF: f64 = 1e-10;
/// Upper cap on the bound-identification width.
const IDENT_WIDTH: f64 = 1e-2;

/// Projected Newton method for `min f(x)` subject to `bounds`.
///
/// Each iteration splits the variables into a binding set (at, or within the
/// identification width of, a bound with the gradient pushing outward) and a
/// free set. Free variables take a truncated-CG Newton step on the reduced
/// Hessian, binding ones a diagonally scaled gradient step, and the combined
/// direction is searched along the projection arc with an Armijo test. When
/// the Newton direction is not a descent direction, or its line search fails,
/// the iteration falls back to the scaled projected gradient.
///
/// Every iterate is feasible (exact projection) and the objective never
/// increases. On non-convergence the best iterate is returned with
/// `converged = false`.
pub fn minimize_box<F: BoxObjective>(
    f: &F,
    bounds: &BoxConstraints,
    x0: &[f64],
    opts: &BoxSolverOptions,
) -> (Vec<f64>, KktReport) {
    let n = f.dim();
    assert_eq!(x0.len(), n);
    assert_eq!(bounds.lower.len(), n);
    let weights = opts.weights.as_deref();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut fx = f.value(&x);
    let mut g = vec![0.0; n];
    f.gradient(&x, &mut g);
    let mut report = KktReport {
        objective_history: vec![fx],
        ..Default::default()
    };
    let mut hdiag = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut gt = vec![0.0; n];

    let mut residuals = Vec::new();
    for iter in 0..=opts.max_iter {
        let (interior, violation) = kkt_residuals(&x, &g, bounds, weights);
        report.max_interior_gradient = interior;
        report.max_bound_violation = violation;
        report.iterations = iter;
        if interior <= opts.tol && violation <= opts.tol {
            report.converged = true;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        // neither the objective nor the KKT residual is improving
        residuals.push(interior.max(violation));
        let h = &report.objective_history;
        if h.len() > STALL_WINDOW {
            let k = h.len() - 1 - STALL_WINDOW;
            if h[k] - fx <= STALL_DECREASE * fx.abs() && residuals[iter] > 0.5 * residuals[k] {
                log::debug!("projected Newton stagnated at iteration {iter}");
                break;
            }
        }

        f.hessian_diagonal(&x, &mut hdiag);
        let positive_mean = {
            let (s, c) = hdiag.iter().filter(|&&h| h > 0.0).fold((0.0, 0usize), |(s, c), &h| (s + h, c + 1));
            if c > 0 { s / c as f64 } else { 1.0 }
        };
        let scale: Vec<f64> = hdiag
            .iter()
            .map(|&h| 1.0 / if h > 1e-12 * positive_mean { h } else { positive_mean })
            .collect();

        // identification width from the scaled projected-gradient step
        let mut width: f64 = 0.0;
        for i in 0..n {
            let p = (x[i] - scale[i] * g[i]).max(bounds.lower[i]).min(bounds.upper[i]);
            width = width.max((x[i] - p).abs());
        }
        let width = width.min(IDENT_WIDTH);
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let (l, u) = (bounds.lower[i], bounds.upper[i]);
                !(l == u || (x[i] <= l + width && g[i] > 0.0) || (x[i] >= u - width && g[i] < 0.0))
            })
            .collect();

        let newton_ok = reduced_newton(f, &x, &g, &free, &scale, opts, &mut d);
        for i in 0..n {
            if !free[i] {
                d[i] = -scale[i] * g[i];
            }
        }

        let mut accepted = false;
        if newton_ok && dot(&d, &g) < 0.0 {
            accepted = line_search(f, bounds, &x, fx, &g, &d, &mut trial, &mut gt, true).is_some_and(|fnew| {
                fx = fnew;
                true
            });
        }
        if !accepted {
            for i in 0..n {
                d[i] = -scale[i] * g[i];
            }
            accepted = line_search(f, bounds, &x, fx, &g, &d, &mut trial, &mut gt, false).is_some_and(|fnew| {
                fx = fnew;
                true
            });
        }
        if !accepted {
            log::debug!("projected Newton stalled at iteration {iter}");
            break;
        }
        log::trace!(
            "iteration {iter}: f = {fx:e}, KKT = ({interior:e}, {violation:e}), free = {}",
            free.iter().filter(|&&b| b).count()
        );
        std::mem::swap(&mut x, &mut trial);
        f.gradient(&x, &mut g);
        report.objective_history.push(fx);
        report.iterations = iter + 1;
    }
    (x, report)
}

/// Truncated preconditioned CG on the free block of the Hessian. Writes the
/// free components of `d`; returns false if no usable direction was found.
fn reduced_newton<F: BoxObjective>(
    f: &F,
    x: &[f64],
    g: &[f64],
    free: &[bool],
    scale: &[f64],
    opts: &BoxSolverOptions,
    d: &mut [f64],
) -> bool {
    let n = x.len();
    let mask = |v: &mut [f64]| {
        for i in 0..n {
            if !free[i] {
                v[i] = 0.0;
            }
        }
    };
    d.iter_mut().for_each(|v| *v = 0.0);
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    mask(&mut r);
    let rnorm0 = norm2(&r);
    if rnorm0 == 0.0 {
        return true;
    }
    let mut z: Vec<f64> = r.iter().zip(scale).map(|(a, s)| a * s).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut hp = vec![0.0; n];
    for it in 0..opts.cg_max_iter {
        f.hessian_product(x, &p, &mut hp);
        mask(&mut hp);
        let php = dot(&p, &hp);
        if !(php > 0.0) {
            // negative curvature: keep what we have, if anything
            return it > 0;
        }
        let step = rz / php;
        for i in 0..n {
            d[i] += step * p[i];
            r[i] -= step * hp[i];
        }
        if norm2(&r) <= opts.cg_tol * rnorm0 {
            return true;
        }
        for i in 0..n {
            z[i] = r[i] * scale[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    true
}

/// Armijo backtracking along `P(x + t d)`. On success `trial` holds the new
/// point and its value is returned.
#[allow(clippy::too_many_arguments)]
fn line_search<F: BoxObjective>(
    f: &F,
    bounds: &BoxConstraints,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: &[f64],
    trial: &mut [f64],
    gt: &mut [f64],
    newton: bool,
) -> Option<f64> {
    let mut t = 1.0;
    for k in 0..MAX_BACKTRACK {
        for i in 0..x.len() {
            trial[i] = x[i] + t * d[i];
        }
        bounds.project(trial);
        let slope: f64 = (0..x.len()).map(|i| g[i] * (trial[i] - x[i])).sum();
        if slope >= 0.0 {
            if k == 0 && newton {
                return None;
            }
            t *= 0.5;
            continue;
        }
        let ft = f.value(trial);
        if ft <= fx + ARMIJO * slope || (k == 0 && newton && ft <= fx) {
            return Some(ft);
        }
        // When f can no longer resolve the decrease, estimate it from the
        // gradients at both ends (exact for quadratics).
        if (ft - fx).abs() <= ROUNDOFF * fx.abs() {
            f.gradient(trial, gt);
            let change: f64 = (0..x.len()).map(|i| 0.5 * (g[i] + gt[i]) * (trial[i] - x[i])).sum();
            if change <= ARMIJO * slope {
                return Some(ft);
            }
        }
        t *= 0.5;
    }
    None
}
