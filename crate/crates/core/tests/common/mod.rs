//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's prox, norm or adjoint code.

#![allow(dead_code)]

use ndarray::{Array1, Array2};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimizer of a unimodal `f` on `[lo, hi]`.
pub fn golden(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Coarse grid to bracket the minimizer of a convex `f`, then golden section.
pub fn grid_golden(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if hi - lo <= 0.0 {
        return lo;
    }
    let points = 200;
    let h = (hi - lo) / points as f64;
    let best = (0..=points)
        .map(|i| (i, f(lo + h * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap();
    let a = (lo + h * (best as f64 - 1.0)).max(lo);
    let b = (lo + h * (best as f64 + 1.0)).min(hi);
    golden(f, a, b, 1e-11 * (1.0 + hi - lo))
}

/// Feasible set of the brute-force minimizers.
#[derive(Clone, Copy, Debug)]
pub enum Domain {
    /// Box of half-width `r` around the center (stands in for all of R^d).
    Around(f64),
    Origin,
    LinfBall(f64),
    L2Ball(f64),
    L1Ball(f64),
}

impl Domain {
    fn first(&self, center: f64) -> (f64, f64) {
        match *self {
            Domain::Around(r) => (center - r, center + r),
            Domain::Origin => (0.0, 0.0),
            Domain::LinfBall(r) | Domain::L2Ball(r) | Domain::L1Ball(r) => (-r, r),
        }
    }

    fn second(&self, center: f64, x1: f64) -> (f64, f64) {
        match *self {
            Domain::Around(r) => (center - r, center + r),
            Domain::Origin => (0.0, 0.0),
            Domain::LinfBall(r) => (-r, r),
            Domain::L2Ball(r) => {
                let h = (r * r - x1 * x1).max(0.0).sqrt();
                (-h, h)
            }
            Domain::L1Ball(r) => {
                let h = (r - x1.abs()).max(0.0);
                (-h, h)
            }
        }
    }
}

/// `argmin_{y in domain} h(y) + 1/2 sum_i (y_i - v_i)^2 / m_i` in one or
/// two dimensions.
pub fn brute_prox(h: &dyn Fn(&[f64]) -> f64, v: &[f64], m: &[f64], domain: Domain) -> Vec<f64> {
    let quad = |y: &[f64]| -> f64 { y.iter().zip(v).zip(m).map(|((a, b), s)| 0.5 * (a - b).powi(2) / s).sum() };
    match v.len() {
        1 => {
            let (lo, hi) = domain.first(v[0]);
            let f = |x: f64| h(&[x]) + quad(&[x]);
            vec![grid_golden(&f, lo, hi)]
        }
        2 => {
            let inner = |x1: f64| -> (f64, f64) {
                let (lo, hi) = domain.second(v[1], x1);
                let f = |x2: f64| h(&[x1, x2]) + quad(&[x1, x2]);
                let x2 = grid_golden(&f, lo, hi);
                (x2, f(x2))
            };
            let (lo, hi) = domain.first(v[0]);
            let x1 = grid_golden(&|x1| inner(x1).1, lo, hi);
            vec![x1, inner(x1).0]
        }
        d => panic!("brute_prox supports dims 1 and 2, got {d}"),
    }
}

pub fn l1(y: &[f64]) -> f64 {
    y.iter().map(|a| a.abs()).sum()
}

pub fn l2(y: &[f64]) -> f64 {
    y.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn linf(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m: f64, a| m.max(a.abs()))
}

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &Array2<f64>) -> Vec<f64> {
    let mut u = a.clone();
    let n = u.ncols();
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).iter().map(|x| x * x).sum();
                let beta: f64 = u.column(q).iter().map(|x| x * x).sum();
                let gamma: f64 = u.column(p).iter().zip(u.column(q).iter()).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.nrows() {
                    let (x, y) = (u[[i, p]], u[[i, q]]);
                    u[[i, p]] = c * x - s * y;
                    u[[i, q]] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Matrix of a linear map, assembled column by column from basis vectors.
pub fn matrix_of(apply: &dyn Fn(&Array1<f64>) -> Array1<f64>, in_dim: usize, out_dim: usize) -> Array2<f64> {
    let mut m = Array2::zeros((out_dim, in_dim));
    for j in 0..in_dim {
        let mut e = Array1::zeros(in_dim);
        e[j] = 1.0;
        m.column_mut(j).assign(&apply(&e));
    }
    m
}

/// Explicit transpose, element by element.
pub fn transpose(m: &Array2<f64>) -> Array2<f64> {
    let mut t = Array2::zeros((m.ncols(), m.nrows()));
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t[[j, i]] = m[[i, j]];
        }
    }
    t
}

/// Central finite differences.
pub fn fd_gradient(f: &dyn Fn(&Array1<f64>) -> f64, x: &Array1<f64>, h: f64) -> Array1<f64> {
    let mut g = Array1::zeros(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    g
}

/// Minimizer of `(1/N) sum_i (a_i w - y_i)^2 + lambda |w|`.
pub fn lasso_1d(a: &[f64], y: &[f64], lambda: f64) -> f64 {
    let n = a.len() as f64;
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let ay: f64 = a.iter().zip(y).map(|(x, t)| x * t).sum();
    let ls = ay / aa;
    let thr = lambda * n / (2.0 * aa);
    ls.signum() * (ls.abs() - thr).max(0.0)
}

/// Least-squares solution of `min ||A w - y||` via normal equations and
/// Gaussian elimination with partial pivoting.
pub fn normal_equations(a: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let at = transpose(a);
    let mut m = at.dot(a);
    let mut b = at.dot(y);
    let n = m.nrows();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[[i, k]].abs().total_cmp(&m[[j, k]].abs())).unwrap();
        if piv != k {
            for j in 0..n {
                m.swap([k, j], [piv, j]);
            }
            b.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m[[i, k]] / m[[k, k]];
            for j in k..n {
                m[[i, j]] -= f * m[[k, j]];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = Array1::zeros(n);
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[[k, j]] * x[j]).sum();
        x[k] = (b[k] - s) / m[[k, k]];
    }
    x
}

pub fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}
