//! Proximity operators of the shipped regularizers, their conjugates through
//! the Moreau identity, proxes in diagonal metrics and subdifferential
//! distances used for certification.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::Metric;

/// Componentwise soft thresholding, the prox of `tau * ||.||_1`.
pub fn prox_l1(v: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    v.mapv(|x| x.signum() * (x.abs() - tau).max(0.0))
}

/// Block soft thresholding, the prox of `tau * ||.||_2`. Returns 0 whenever
/// `||v|| <= tau`, including `v = 0`.
pub fn prox_group_l2(v: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    let norm = v.dot(&v).sqrt();
    if norm <= tau {
        Array1::zeros(v.len())
    } else {
        &v * (1.0 - tau / norm)
    }
}

/// Euclidean projection onto `{x : ||x||_1 <= radius}` by sorting and
/// thresholding.
pub fn project_l1_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_owned();
    }
    if radius <= 0.0 {
        return Array1::zeros(v.len());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (j + 1) as f64;
        if m - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Projection onto the Euclidean ball of the given radius.
pub fn project_l2_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    let norm = v.dot(&v).sqrt();
    if norm <= radius {
        v.to_owned()
    } else {
        &v * (radius / norm)
    }
}

/// Projection onto `[-radius, radius]^d`.
pub fn project_linf_ball(v: ArrayView1<f64>, radius: f64) -> Array1<f64> {
    v.mapv(|x| x.clamp(-radius, radius))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    Zero,
    L1,
    GroupL2,
    Linf,
    /// `|.|` on a scalar.
    Abs,
}

/// A weighted norm `weight * ||.||` on `R^dim` (or the zero function).
#[derive(Clone, Debug, PartialEq)]
pub struct Regularizer {
    kind: RegularizerKind,
    weight: f64,
    dim: usize,
}

impl Regularizer {
    pub fn new(kind: RegularizerKind, weight: f64, dim: usize) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Config(format!("regularizer weight {weight} must be >= 0")));
        }
        if dim == 0 {
            return Err(Error::Config("regularizer dimension must be positive".into()));
        }
        if kind == RegularizerKind::Abs && dim != 1 {
            return Err(Error::Config("abs regularizer acts on scalars".into()));
        }
        Ok(Regularizer { kind, weight, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Regularizer {
            kind: RegularizerKind::Zero,
            weight: 0.0,
            dim,
        }
    }

    pub fn l1(weight: f64, dim: usize) -> Result<Self> {
        Self::new(RegularizerKind::L1, weight, dim)
    }

    pub fn group_l2(weight: f64, dim: usize) -> Result<Self> {
        Self::new(RegularizerKind::GroupL2, weight, dim)
    }

    pub fn linf(weight: f64, dim: usize) -> Result<Self> {
        Self::new(RegularizerKind::Linf, weight, dim)
    }

    pub fn abs(weight: f64) -> Result<Self> {
        Self::new(RegularizerKind::Abs, weight, 1)
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.kind == RegularizerKind::Zero || self.weight == 0.0
    }

    /// Whether the function splits into a sum over coordinates.
    pub fn is_separable(&self) -> bool {
        matches!(
            self.kind,
            RegularizerKind::Zero | RegularizerKind::L1 | RegularizerKind::Abs
        ) || self.weight == 0.0
    }

    pub fn evaluate(&self, x: ArrayView1<f64>) -> f64 {
        match self.kind {
            RegularizerKind::Zero => 0.0,
            RegularizerKind::L1 | RegularizerKind::Abs => {
                self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
            }
            RegularizerKind::GroupL2 => self.weight * x.dot(&x).sqrt(),
            RegularizerKind::Linf => self.weight * x.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    /// `prox_{tau g}(v)`.
    pub fn prox(&self, v: ArrayView1<f64>, tau: f64) -> Array1<f64> {
        let t = tau * self.weight;
        match self.kind {
            RegularizerKind::Zero => v.to_owned(),
            RegularizerKind::L1 | RegularizerKind::Abs => prox_l1(v, t),
            RegularizerKind::GroupL2 => prox_group_l2(v, t),
            RegularizerKind::Linf => &v - &project_l1_ball(v, t),
        }
    }

    /// `prox_{tau g*}(v) = v - tau * prox_{g / tau}(v / tau)`.
    pub fn prox_conjugate(&self, v: ArrayView1<f64>, tau: f64) -> Array1<f64> {
        if self.is_zero() {
            return Array1::zeros(v.len());
        }
        let scaled = &v / tau;
        &v - &(self.prox(scaled.view(), 1.0 / tau) * tau)
    }

    /// Projection onto `dom g*`, computed directly rather than through the
    /// Moreau identity. The conjugate of a weighted norm is the indicator of
    /// the dual-norm ball, so this equals `prox_{tau g*}` for every `tau`.
    pub fn project_dual_ball(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match self.kind {
            RegularizerKind::Zero => Array1::zeros(v.len()),
            RegularizerKind::L1 | RegularizerKind::Abs => project_linf_ball(v, self.weight),
            RegularizerKind::GroupL2 => project_l2_ball(v, self.weight),
            RegularizerKind::Linf => project_l1_ball(v, self.weight),
        }
    }

    /// Coordinatewise prox with one step per coordinate. Only valid for
    /// separable kinds.
    fn prox_separable(&self, v: ArrayView1<f64>, steps: ArrayView1<f64>, conjugate: bool) -> Array1<f64> {
        let mut out = Array1::zeros(v.len());
        Zip::from(&mut out).and(&v).and(&steps).for_each(|o, &x, &s| {
            let one = Array1::from_elem(1, x);
            *o = if conjugate {
                self.prox_conjugate(one.view(), s)[0]
            } else {
                self.prox(one.view(), s)[0]
            };
        });
        out
    }

    /// Checks that a prox of this function in `metric` has a closed form.
    pub fn check_metric(&self, metric: &Metric) -> Result<()> {
        if metric.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: self.dim,
                found: metric.dim(),
            });
        }
        if metric.uniform_scale().is_none() && !self.is_separable() {
            return Err(Error::Config(format!(
                "{:?} regularizer needs a metric that is constant on its block",
                self.kind
            )));
        }
        Ok(())
    }

    /// `argmin_y h(y) + 1/2 ||y - v||^2_{M^{-1}}` with `h = g` or `h = g*`.
    pub fn prox_in_metric(&self, v: ArrayView1<f64>, metric: &Metric, conjugate: bool) -> Result<Array1<f64>> {
        self.check_metric(metric)?;
        Ok(match metric.uniform_scale() {
            Some(s) if conjugate => self.prox_conjugate(v, s),
            Some(s) => self.prox(v, s),
            None => self.prox_separable(v, metric.diagonal_entries().view(), conjugate),
        })
    }

    /// `dist(u, dg(x))`.
    pub fn subgradient_distance(&self, x: ArrayView1<f64>, u: ArrayView1<f64>) -> f64 {
        let lam = self.weight;
        match self.kind {
            RegularizerKind::Zero => u.dot(&u).sqrt(),
            RegularizerKind::L1 | RegularizerKind::Abs => x
                .iter()
                .zip(u.iter())
                .map(|(&xi, &ui)| {
                    let d = if xi == 0.0 || lam == 0.0 {
                        (ui.abs() - lam).max(0.0)
                    } else {
                        ui - lam * xi.signum()
                    };
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            RegularizerKind::GroupL2 => {
                let nx = x.dot(&x).sqrt();
                if nx == 0.0 || lam == 0.0 {
                    (u.dot(&u).sqrt() - lam).max(0.0)
                } else {
                    let diff = &u - &(&x * (lam / nx));
                    diff.dot(&diff).sqrt()
                }
            }
            RegularizerKind::Linf => linf_subgradient_distance(x, u, lam),
        }
    }

    pub fn subgradient_membership(&self, x: ArrayView1<f64>, u: ArrayView1<f64>, tol: f64) -> bool {
        self.subgradient_distance(x, u) <= tol
    }

    /// `dist(x, dg*(v))`, plus the distance from `v` to `dom g*` so the
    /// residual stays finite for slightly infeasible duals.
    pub fn conjugate_subgradient_distance(&self, v: ArrayView1<f64>, x: ArrayView1<f64>) -> f64 {
        let p = self.project_dual_ball(v);
        let infeasible = {
            let d = &v - &p;
            d.dot(&d).sqrt()
        };
        let lam = self.weight;
        let rel = 1e-12 * (1.0 + lam);
        let cone = match self.kind {
            // dg*(0) is the whole space for the indicator of {0}.
            RegularizerKind::Zero => 0.0,
            _ if lam == 0.0 => 0.0,
            RegularizerKind::L1 | RegularizerKind::Abs => p
                .iter()
                .zip(x.iter())
                .map(|(&pi, &xi)| {
                    let d = if pi >= lam - rel {
                        xi.min(0.0)
                    } else if pi <= -lam + rel {
                        xi.max(0.0)
                    } else {
                        xi
                    };
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            RegularizerKind::GroupL2 => {
                let np = p.dot(&p).sqrt();
                if np < lam - rel {
                    x.dot(&x).sqrt()
                } else {
                    distance_to_ray(x, p.view())
                }
            }
            RegularizerKind::Linf => {
                let l1: f64 = p.iter().map(|a| a.abs()).sum();
                if l1 < lam - rel {
                    x.dot(&x).sqrt()
                } else {
                    l1_normal_cone_distance(p.view(), x, rel)
                }
            }
        };
        (infeasible * infeasible + cone * cone).sqrt()
    }
}

fn distance_to_ray(x: ArrayView1<f64>, dir: ArrayView1<f64>) -> f64 {
    let nd = dir.dot(&dir);
    let t = if nd > 0.0 { (x.dot(&dir) / nd).max(0.0) } else { 0.0 };
    let r = &x - &(&dir * t);
    r.dot(&r).sqrt()
}

/// Distance from `x` to the normal cone of the l1 ball at the boundary point
/// `p`, i.e. to `{t s : t >= 0, s in d||p||_1}`.
fn l1_normal_cone_distance(p: ArrayView1<f64>, x: ArrayView1<f64>, rel: f64) -> f64 {
    let dist_sq = |t: f64| -> f64 {
        p.iter()
            .zip(x.iter())
            .map(|(&pi, &xi)| {
                let d = if pi.abs() > rel {
                    xi - t * pi.signum()
                } else {
                    (xi.abs() - t).max(0.0)
                };
                d * d
            })
            .sum()
    };
    let hi = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    minimize_convex_1d(dist_sq, 0.0, hi).sqrt()
}

/// Golden-section search for a convex function on `[lo, hi]`.
fn minimize_convex_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        }
    }
    f(lo).min(f(hi)).min(fa).min(fb)
}

/// `dist(u, d(lam ||.||_inf)(x))`.
fn linf_subgradient_distance(x: ArrayView1<f64>, u: ArrayView1<f64>, lam: f64) -> f64 {
    let xmax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if xmax == 0.0 || lam == 0.0 {
        // Subdifferential at 0 is the l1 ball of radius lam.
        let p = project_l1_ball(u, lam);
        let d = &u - &p;
        return d.dot(&d).sqrt();
    }
    // lam * conv{sign(x_i) e_i : |x_i| = max}: zero off the active set, and on
    // it signed entries forming a scaled simplex of total mass lam.
    let tie = 1e-12 * xmax;
    let mut off = 0.0;
    let mut active = Vec::new();
    for (&xi, &ui) in x.iter().zip(u.iter()) {
        if xi.abs() >= xmax - tie {
            active.push(ui * xi.signum());
        } else {
            off += ui * ui;
        }
    }
    let proj = project_simplex(&active, lam);
    let on: f64 = active.iter().zip(&proj).map(|(a, p)| (a - p) * (a - p)).sum();
    (off + on).sqrt()
}

/// Projection onto `{y >= 0, sum y = mass}`.
fn project_simplex(y: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - mass) / (j + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}
