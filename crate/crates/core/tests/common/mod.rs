//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Real roots of the monic cubic `λ³ + b λ² + c λ + d` (all three assumed
/// real), ascending. Bisection between the critical points, then Newton.
pub fn cubic_roots(b: f64, c: f64, d: f64) -> [f64; 3] {
    let p = |x: f64| ((x + b) * x + c) * x + d;
    let dp = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let bound = 1.0 + b.abs().max(c.abs()).max(d.abs());
    // critical points of the cubic
    let disc = (4.0 * b * b - 12.0 * c).max(0.0).sqrt();
    let (c1, c2) = ((-2.0 * b - disc) / 6.0, (-2.0 * b + disc) / 6.0);
    let bisect = |mut lo: f64, mut hi: f64| {
        let (plo, _) = (p(lo), p(hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (p(mid) > 0.0) == (plo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let s = dp(x);
            if s != 0.0 {
                let next = x - p(x) / s;
                if (next - x).abs() < (hi - lo).abs().max(1e-300) * 4.0 {
                    x = next;
                }
            }
        }
        x
    };
    [bisect(-bound, c1), bisect(c1, c2), bisect(c2, bound)]
}

/// Eigenvalues of a symmetric 2×2 matrix from its characteristic quadratic,
/// ascending.
pub fn quadratic_eigen(a: f64, b: f64, d: f64) -> [f64; 2] {
    // λ² − (a + d) λ + (ad − b²)
    let tr = a + d;
    let det = a * d - b * b;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    // avoid cancellation in the smaller root
    let big = if tr >= 0.0 { 0.5 * (tr + disc) } else { 0.5 * (tr - disc) };
    let small = if big != 0.0 { det / big } else { 0.0 };
    let mut r = [big, small];
    r.sort_by(f64::total_cmp);
    r
}

/// Dense symmetric matrix from a closure over `value()` only: central
/// second differences of a quadratic, which are exact up to rounding.
pub fn quadratic_form(n: usize, value: impl Fn(&[f64]) -> f64) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let zero = vec![0.0; n];
    let f0 = value(&zero);
    let mut e = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut lin = vec![0.0; n];
    for i in 0..n {
        e[i] = 1.0;
        let fp = value(&e);
        e[i] = -1.0;
        let fm = value(&e);
        e[i] = 0.0;
        diag[i] = fp + fm - 2.0 * f0;
        lin[i] = 0.5 * (fp - fm);
    }
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        h[i][i] = diag[i];
        for j in 0..i {
            e[i] = 1.0;
            e[j] = 1.0;
            let fij = value(&e);
            e[i] = 0.0;
            e[j] = 0.0;
            // f(e_i + e_j) = f0 + g_i + g_j + ½(H_ii + H_jj) + H_ij
            let hij = fij - f0 - lin[i] - lin[j] - 0.5 * (diag[i] + diag[j]);
            h[i][j] = hij;
            h[j][i] = hij;
        }
    }
    (h, lin, f0)
}

pub fn quad_value(h: &[Vec<f64>], g: &[f64], c: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut v = c;
    for i in 0..n {
        v += g[i] * x[i];
        for j in 0..n {
            v += 0.5 * x[i] * h[i][j] * x[j];
        }
    }
    v
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

/// Minimizes the strictly convex quadratic `½xᵀHx + gᵀx` over a box by a
/// primal active-set method working on dense matrices.
pub fn box_qp_active_set(h: &[Vec<f64>], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = g.len();
    // state: 0 free, -1 at lower, +1 at upper
    let mut state = vec![-1i8; n];
    let mut x = lo.to_vec();
    for _ in 0..10 * n + 100 {
        // solve on the free set with the others fixed
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut target = x.clone();
        if !free.is_empty() {
            let a: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| h[i][j]).collect()).collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| -g[i] - (0..n).filter(|&j| state[j] != 0).map(|j| h[i][j] * x[j]).sum::<f64>())
                .collect();
            let y = dense_solve(&a, &rhs);
            for (k, &i) in free.iter().enumerate() {
                target[i] = y[k];
            }
        }
        // step towards the target until a bound blocks
        let mut t = 1.0;
        let mut block = None;
        for &i in &free {
            let d = target[i] - x[i];
            if x[i] + d < lo[i] && d < 0.0 {
                let ti = (lo[i] - x[i]) / d;
                if ti < t {
                    t = ti;
                    block = Some((i, -1));
                }
            } else if x[i] + d > hi[i] && d > 0.0 {
                let ti = (hi[i] - x[i]) / d;
                if ti < t {
                    t = ti;
                    block = Some((i, 1));
                }
            }
        }
        for &i in &free {
            x[i] += t * (target[i] - x[i]);
        }
        if let Some((i, s)) = block {
            state[i] = s;
            x[i] = if s < 0 { lo[i] } else { hi[i] };
            continue;
        }
        // release the bound with the most negative multiplier
        let grad: Vec<f64> = (0..n).map(|i| g[i] + (0..n).map(|j| h[i][j] * x[j]).sum::<f64>()).collect();
        let worst = (0..n)
            .filter(|&i| state[i] != 0)
            .map(|i| (i, if state[i] < 0 { grad[i] } else { -grad[i] }))
            .filter(|&(_, m)| m < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((i, _)) => state[i] = 0,
            None => return x,
        }
    }
    panic!("active-set oracle did not terminate");
}

/// Exhaustive oracle for small boxes: every split into lower / upper / free
/// components, keeping the feasible stationary points.
pub fn box_qp_enumerate(h: &[Vec<f64>], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut code = vec![0u8; n];
    loop {
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = match code[i] {
                0 => lo[i],
                1 => hi[i],
                _ => 0.0,
            };
        }
        let free: Vec<usize> = (0..n).filter(|&i| code[i] == 2).collect();
        let mut feasible = true;
        if !free.is_empty() {
            let a: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| h[i][j]).collect()).collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| -g[i] - (0..n).filter(|&j| code[j] != 2).map(|j| h[i][j] * x[j]).sum::<f64>())
                .collect();
            let y = dense_solve(&a, &rhs);
            for (k, &i) in free.iter().enumerate() {
                x[i] = y[k];
                feasible &= y[k] >= lo[i] - 1e-12 && y[k] <= hi[i] + 1e-12;
            }
        }
        if feasible {
            let v = quad_value(h, g, 0.0, &x);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return best.expect("some vertex is feasible").1;
            }
            code[k] += 1;
            if code[k] == 3 {
                code[k] = 0;
                k += 1;
            } else {
                break;
            }
        }
    }
}
