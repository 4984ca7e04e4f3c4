//! Finite-dimensional spaces, linear maps with adjoints, operator norm
//! estimation and the diagonal preconditioners used by the primal-dual
//! methods.

use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A point of the primal space `H = R^p`.
pub type PrimalPoint = Array1<f64>;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    Array1::from_iter((0..len).map(|_| StandardNormal.sample(rng)))
}

pub(crate) fn all_finite(x: &Array1<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Dual variable `v = (v_1, ..., v_s)` living in `G_1 x ... x G_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualBlocks {
    blocks: Vec<Array1<f64>>,
}

impl DualBlocks {
    pub fn zeros(dims: &[usize]) -> Self {
        DualBlocks {
            blocks: dims.iter().map(|&d| Array1::zeros(d)).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<Array1<f64>>) -> Self {
        DualBlocks { blocks }
    }

    pub fn blocks(&self) -> &[Array1<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<Array1<f64>> {
        self.blocks
    }

    pub fn block(&self, k: usize) -> &Array1<f64> {
        &self.blocks[k]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn dot(&self, other: &DualBlocks) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self - other`, blockwise.
    pub fn sub(&self, other: &DualBlocks) -> DualBlocks {
        DualBlocks::from_blocks(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `self + t * (self - prev)`, the inertial extrapolation.
    pub fn extrapolate(&self, prev: &DualBlocks, t: f64) -> DualBlocks {
        DualBlocks::from_blocks(
            self.blocks
                .iter()
                .zip(&prev.blocks)
                .map(|(a, b)| a + &((a - b) * t))
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(all_finite)
    }
}

/// A bounded linear operator between Euclidean spaces together with its
/// adjoint.
pub trait LinearOperator {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn apply_adjoint(&self, y: ArrayView1<f64>) -> Array1<f64>;
}

/// The analysis operators shipped with the crate.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearMap {
    Identity(usize),
    Scaled { dim: usize, factor: f64 },
    Diagonal(Array1<f64>),
    Zero { in_dim: usize, out_dim: usize },
    /// Keeps the listed coordinates, in order. Output dimension is the
    /// number of indices.
    Restriction { in_dim: usize, indices: Vec<usize> },
    /// `w -> w[index + 1] - w[index]`, a single fused-lasso difference.
    ForwardDifference { dim: usize, index: usize },
    /// All `dim - 1` consecutive differences stacked.
    DifferenceChain(usize),
    Dense(Array2<f64>),
}

impl LinearMap {
    pub fn restriction(in_dim: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config("restriction onto an empty index set".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= in_dim) {
            return Err(Error::Config(format!(
                "restriction index {bad} out of range for dimension {in_dim}"
            )));
        }
        Ok(LinearMap::Restriction { in_dim, indices })
    }

    pub fn forward_difference(dim: usize, index: usize) -> Result<Self> {
        if index + 1 >= dim {
            return Err(Error::Config(format!(
                "difference index {index} needs dimension > {}",
                index + 1
            )));
        }
        Ok(LinearMap::ForwardDifference { dim, index })
    }

    /// Closed-form spectral norm, when one is available without iteration.
    pub fn exact_norm(&self) -> Option<f64> {
        match self {
            LinearMap::Identity(_) => Some(1.0),
            LinearMap::Scaled { factor, .. } => Some(factor.abs()),
            LinearMap::Diagonal(d) => Some(d.iter().fold(0.0, |m, x| m.max(x.abs()))),
            LinearMap::Zero { .. } => Some(0.0),
            LinearMap::Restriction { .. } => Some(1.0),
            LinearMap::ForwardDifference { .. } => Some(std::f64::consts::SQRT_2),
            LinearMap::DifferenceChain(_) | LinearMap::Dense(_) => None,
        }
    }

    /// Dense matrix representation, mostly for checks on small problems.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.out_dim(), self.in_dim()));
        for j in 0..self.in_dim() {
            let mut e = Array1::zeros(self.in_dim());
            e[j] = 1.0;
            m.column_mut(j).assign(&self.apply(e.view()));
        }
        m
    }

    /// Applies the map after checking the input length.
    pub fn try_apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: self.in_dim(),
                found: x.len(),
            });
        }
        Ok(self.apply(x))
    }
}

impl LinearOperator for LinearMap {
    fn in_dim(&self) -> usize {
        match self {
            LinearMap::Identity(d) | LinearMap::DifferenceChain(d) => *d,
            LinearMap::Scaled { dim, .. } | LinearMap::ForwardDifference { dim, .. } => *dim,
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::Zero { in_dim, .. } | LinearMap::Restriction { in_dim, .. } => *in_dim,
            LinearMap::Dense(m) => m.ncols(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            LinearMap::Identity(d) => *d,
            LinearMap::Scaled { dim, .. } => *dim,
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::Zero { out_dim, .. } => *out_dim,
            LinearMap::Restriction { indices, .. } => indices.len(),
            LinearMap::ForwardDifference { .. } => 1,
            LinearMap::DifferenceChain(d) => d.saturating_sub(1),
            LinearMap::Dense(m) => m.nrows(),
        }
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self {
            LinearMap::Identity(_) => x.to_owned(),
            LinearMap::Scaled { factor, .. } => &x * *factor,
            LinearMap::Diagonal(d) => &x * d,
            LinearMap::Zero { out_dim, .. } => Array1::zeros(*out_dim),
            LinearMap::Restriction { indices, .. } => {
                Array1::from_iter(indices.iter().map(|&i| x[i]))
            }
            LinearMap::ForwardDifference { index, .. } => {
                Array1::from_elem(1, x[index + 1] - x[*index])
            }
            LinearMap::DifferenceChain(d) => {
                Array1::from_iter((0..d.saturating_sub(1)).map(|j| x[j + 1] - x[j]))
            }
            LinearMap::Dense(m) => m.dot(&x),
        }
    }

    fn apply_adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        match self {
            LinearMap::Identity(_) => y.to_owned(),
            LinearMap::Scaled { factor, .. } => &y * *factor,
            LinearMap::Diagonal(d) => &y * d,
            LinearMap::Zero { in_dim, .. } => Array1::zeros(*in_dim),
            LinearMap::Restriction { in_dim, indices } => {
                let mut out = Array1::zeros(*in_dim);
                for (&i, &v) in indices.iter().zip(y.iter()) {
                    out[i] += v;
                }
                out
            }
            LinearMap::ForwardDifference { dim, index } => {
                let mut out = Array1::zeros(*dim);
                out[*index] = -y[0];
                out[index + 1] = y[0];
                out
            }
            LinearMap::DifferenceChain(d) => {
                let mut out = Array1::zeros(*d);
                for (j, &v) in y.iter().enumerate() {
                    out[j] -= v;
                    out[j + 1] += v;
                }
                out
            }
            LinearMap::Dense(m) => m.t().dot(&y),
        }
    }
}

/// Largest relative discrepancy `|<Dx, y> - <x, D*y>| / (1 + |<Dx, y>|)`
/// over `trials` Gaussian pairs.
pub fn adjoint_consistency_check<L: LinearOperator + ?Sized>(
    map: &L,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x = gaussian_vector(&mut rng, map.in_dim());
        let y = gaussian_vector(&mut rng, map.out_dim());
        let lhs = map.apply(x.view()).dot(&y);
        let rhs = x.dot(&map.apply_adjoint(y.view()));
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIterationSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for PowerIterationSettings {
    fn default() -> Self {
        PowerIterationSettings {
            tol: 1e-8,
            max_iters: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Spectral norm of `map` by power iteration on `D*D`, started from a
/// seeded Gaussian vector. Stops when the Rayleigh estimate changes by less
/// than `tol` relative; otherwise returns the last estimate flagged as
/// unconverged.
pub fn power_iteration_norm<L: LinearOperator + ?Sized>(
    map: &L,
    settings: PowerIterationSettings,
) -> NormEstimate {
    let mut rng = seeded_rng(settings.seed);
    let mut x = gaussian_vector(&mut rng, map.in_dim());
    let nx = x.dot(&x).sqrt();
    if nx == 0.0 {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    x /= nx;

    let mut estimate = 0.0;
    for it in 1..=settings.max_iters {
        let dx = map.apply(x.view());
        let current = dx.dot(&dx).sqrt();
        let back = map.apply_adjoint(dx.view());
        let nb = back.dot(&back).sqrt();
        if current == 0.0 || nb == 0.0 {
            return NormEstimate {
                value: current,
                iterations: it,
                converged: true,
            };
        }
        let done = (current - estimate).abs() <= settings.tol * current;
        estimate = current;
        if done {
            return NormEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            };
        }
        x = back / nb;
    }
    NormEstimate {
        value: estimate,
        iterations: settings.max_iters,
        converged: false,
    }
}

/// The stacked operator `Dw = (D_1 w, ..., D_s w)`.
#[derive(Clone, Debug)]
pub struct BlockAnalysisOperator {
    maps: Vec<LinearMap>,
    in_dim: usize,
    norms: OnceLock<Vec<NormEstimate>>,
}

impl PartialEq for BlockAnalysisOperator {
    fn eq(&self, other: &Self) -> bool {
        self.in_dim == other.in_dim && self.maps == other.maps
    }
}

impl BlockAnalysisOperator {
    pub fn new(in_dim: usize, maps: Vec<LinearMap>) -> Result<Self> {
        for (k, m) in maps.iter().enumerate() {
            if m.in_dim() != in_dim {
                return Err(Error::DimensionMismatch {
                    operator: Some(k),
                    expected: in_dim,
                    found: m.in_dim(),
                });
            }
        }
        Ok(BlockAnalysisOperator {
            maps,
            in_dim,
            norms: OnceLock::new(),
        })
    }

    pub fn maps(&self) -> &[LinearMap] {
        &self.maps
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn block_count(&self) -> usize {
        self.maps.len()
    }

    pub fn out_dims(&self) -> Vec<usize> {
        self.maps.iter().map(|m| m.out_dim()).collect()
    }

    pub fn apply(&self, w: ArrayView1<f64>) -> Result<DualBlocks> {
        if w.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: self.in_dim,
                found: w.len(),
            });
        }
        Ok(DualBlocks::from_blocks(
            self.maps.iter().map(|m| m.apply(w)).collect(),
        ))
    }

    /// `D*v = sum_k D_k* v_k`.
    pub fn apply_adjoint(&self, v: &DualBlocks) -> Result<PrimalPoint> {
        if v.len() != self.maps.len() {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: self.maps.len(),
                found: v.len(),
            });
        }
        let mut out = Array1::zeros(self.in_dim);
        for (k, (m, b)) in self.maps.iter().zip(v.blocks()).enumerate() {
            if b.len() != m.out_dim() {
                return Err(Error::DimensionMismatch {
                    operator: Some(k),
                    expected: m.out_dim(),
                    found: b.len(),
                });
            }
            out += &m.apply_adjoint(b.view());
        }
        Ok(out)
    }

    /// Per-block norm estimates `||D_k||`, computed once.
    pub fn norms(&self) -> &[NormEstimate] {
        self.norms.get_or_init(|| {
            self.maps
                .iter()
                .map(|m| match m.exact_norm() {
                    Some(value) => NormEstimate {
                        value,
                        iterations: 0,
                        converged: true,
                    },
                    None => power_iteration_norm(m, PowerIterationSettings::default()),
                })
                .collect()
        })
    }
}

/// A strongly positive self-adjoint preconditioner restricted to diagonal
/// forms.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    ScaledIdentity { dim: usize, scale: f64 },
    Diagonal(Array1<f64>),
}

impl Metric {
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Metric(format!("scale {scale} must be positive")));
        }
        Ok(Metric::ScaledIdentity { dim, scale })
    }

    pub fn identity(dim: usize) -> Self {
        Metric::ScaledIdentity { dim, scale: 1.0 }
    }

    pub fn diagonal(entries: Array1<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Metric(format!("diagonal entry {bad} must be positive")));
        }
        Ok(Metric::Diagonal(entries))
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::ScaledIdentity { dim, .. } => *dim,
            Metric::Diagonal(d) => d.len(),
        }
    }

    /// The common value of the diagonal, if it is constant.
    pub fn uniform_scale(&self) -> Option<f64> {
        match self {
            Metric::ScaledIdentity { scale, .. } => Some(*scale),
            Metric::Diagonal(d) => {
                let first = *d.first()?;
                d.iter().all(|&x| x == first).then_some(first)
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Metric::ScaledIdentity { scale, .. } => *scale,
            Metric::Diagonal(d) => d.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Operator norm, i.e. the largest eigenvalue.
    pub fn norm(&self) -> f64 {
        match self {
            Metric::ScaledIdentity { scale, .. } => *scale,
            Metric::Diagonal(d) => d.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Multiplies every eigenvalue by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Metric> {
        match self {
            Metric::ScaledIdentity { dim, scale } => Metric::scaled_identity(*dim, scale * factor),
            Metric::Diagonal(d) => Metric::diagonal(d * factor),
        }
    }

    /// The metric acting on the listed coordinates only.
    pub fn restrict(&self, indices: &[usize]) -> Metric {
        match self {
            Metric::ScaledIdentity { scale, .. } => Metric::ScaledIdentity {
                dim: indices.len(),
                scale: *scale,
            },
            Metric::Diagonal(d) => Metric::Diagonal(Array1::from_iter(indices.iter().map(|&i| d[i]))),
        }
    }

    /// Diagonal entries as a vector.
    pub fn diagonal_entries(&self) -> Array1<f64> {
        match self {
            Metric::ScaledIdentity { dim, scale } => Array1::from_elem(*dim, *scale),
            Metric::Diagonal(d) => d.clone(),
        }
    }

    pub fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Metric::ScaledIdentity { scale, .. } => &x * *scale,
            Metric::Diagonal(d) => &x * d,
        }
    }

    pub fn apply_inverse(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Metric::ScaledIdentity { scale, .. } => &x / *scale,
            Metric::Diagonal(d) => &x / d,
        }
    }

    pub fn apply_sqrt(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Metric::ScaledIdentity { scale, .. } => &x * scale.sqrt(),
            Metric::Diagonal(d) => &x * &d.mapv(f64::sqrt),
        }
    }

    /// `<x, Mx>`.
    pub fn quadratic(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.apply(x))
    }

    /// `<x, M^{-1} x>`.
    pub fn inverse_quadratic(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.apply_inverse(x))
    }
}

/// `x -> W^{1/2} D V^{1/2} x`, used for the step-size conditions.
struct ComposedMap<'a> {
    v: &'a Metric,
    w: &'a Metric,
    d: &'a LinearMap,
}

impl LinearOperator for ComposedMap<'_> {
    fn in_dim(&self) -> usize {
        self.d.in_dim()
    }

    fn out_dim(&self) -> usize {
        self.d.out_dim()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let t = self.v.apply_sqrt(x);
        let t = self.d.apply(t.view());
        self.w.apply_sqrt(t.view())
    }

    fn apply_adjoint(&self, y: ArrayView1<f64>) -> Array1<f64> {
        let t = self.w.apply_sqrt(y);
        let t = self.d.apply_adjoint(t.view());
        self.v.apply_sqrt(t.view())
    }
}

fn check_metric_dims(v: &Metric, w: &[Metric], d: &BlockAnalysisOperator) -> Result<()> {
    if v.dim() != d.in_dim() {
        return Err(Error::DimensionMismatch {
            operator: None,
            expected: d.in_dim(),
            found: v.dim(),
        });
    }
    if w.len() != d.block_count() {
        return Err(Error::Config(format!(
            "{} dual metrics supplied for {} blocks",
            w.len(),
            d.block_count()
        )));
    }
    for (k, (wk, m)) in w.iter().zip(d.maps()).enumerate() {
        if wk.dim() != m.out_dim() {
            return Err(Error::DimensionMismatch {
                operator: Some(k),
                expected: m.out_dim(),
                found: wk.dim(),
            });
        }
    }
    Ok(())
}

/// The terms `||W_k^{1/2} D_k V^{1/2}||^2`, one per block. Each estimate's
/// `value` is the squared norm. Scaled-identity metrics on maps with a
/// closed-form norm are evaluated exactly as `||V|| ||W_k|| ||D_k||^2`.
pub fn composite_norm_terms(
    v: &Metric,
    w: &[Metric],
    d: &BlockAnalysisOperator,
    settings: PowerIterationSettings,
) -> Result<Vec<NormEstimate>> {
    check_metric_dims(v, w, d)?;
    Ok(w
        .iter()
        .zip(d.maps())
        .map(|(wk, dk)| {
            let exact = match (v, wk, dk.exact_norm()) {
                (Metric::ScaledIdentity { scale: tau, .. }, Metric::ScaledIdentity { scale: sigma, .. }, Some(n)) => {
                    Some(tau * sigma * n * n)
                }
                _ => None,
            };
            match exact {
                Some(value) => NormEstimate {
                    value,
                    iterations: 0,
                    converged: true,
                },
                None => {
                    let est = power_iteration_norm(&ComposedMap { v, w: wk, d: dk }, settings);
                    NormEstimate {
                        value: est.value * est.value,
                        ..est
                    }
                }
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaddleVariant {
    /// `(w, v) -> (V^{-1} w - D*v, W^{-1} v - D w)`, the metric of the first
    /// primal-dual class.
    UPrime,
    /// The inverse of `T = diag(V, (W^{-1} - D V D*)^{-1})`, the metric of the
    /// second class.
    TMetric,
}

/// Product-space metric on `H x G` built from `V`, `W_k` and `D`.
#[derive(Clone, Debug)]
pub struct SaddleMetric {
    v: Metric,
    w: Vec<Metric>,
    d: BlockAnalysisOperator,
    variant: SaddleVariant,
    coupling_sum: f64,
}

impl SaddleMetric {
    /// Fails unless `sum_k ||W_k^{1/2} D_k V^{1/2}||^2 < 1`.
    pub fn new(
        v: Metric,
        w: Vec<Metric>,
        d: BlockAnalysisOperator,
        variant: SaddleVariant,
    ) -> Result<Self> {
        let terms = composite_norm_terms(&v, &w, &d, PowerIterationSettings::default())?;
        let coupling_sum: f64 = terms.iter().map(|t| t.value).sum();
        if coupling_sum >= 1.0 {
            return Err(Error::Metric(format!(
                "coupling sum {coupling_sum} is not below 1"
            )));
        }
        Ok(SaddleMetric {
            v,
            w,
            d,
            variant,
            coupling_sum,
        })
    }

    pub fn variant(&self) -> SaddleVariant {
        self.variant
    }

    pub fn coupling_sum(&self) -> f64 {
        self.coupling_sum
    }

    /// `<(w, v), M (w, v)>` for the selected variant.
    pub fn quadratic_form(&self, w: &PrimalPoint, v: &DualBlocks) -> Result<f64> {
        let mut q = self.v.inverse_quadratic(w.view());
        for (wk, vk) in self.w.iter().zip(v.blocks()) {
            q += wk.inverse_quadratic(vk.view());
        }
        match self.variant {
            SaddleVariant::UPrime => {
                let dw = self.d.apply(w.view())?;
                q -= 2.0 * dw.dot(v);
            }
            SaddleVariant::TMetric => {
                let dv = self.d.apply_adjoint(v)?;
                q -= self.v.quadratic(dv.view());
            }
        }
        Ok(q)
    }

    /// Induced norm. A quadratic form that is negative beyond round-off is an
    /// error.
    pub fn norm(&self, w: &PrimalPoint, v: &DualBlocks) -> Result<f64> {
        let q = self.quadratic_form(w, v)?;
        let scale = w.dot(w) + v.norm_sq();
        if q < -1e-12 * (1.0 + scale) {
            return Err(Error::NegativeQuadraticForm { value: q });
        }
        Ok(q.max(0.0).sqrt())
    }

    /// Norm of the difference `(w - w_ref, v - v_ref)`.
    pub fn distance(
        &self,
        w: &PrimalPoint,
        v: &DualBlocks,
        w_ref: &PrimalPoint,
        v_ref: &DualBlocks,
    ) -> Result<f64> {
        self.norm(&(w - w_ref), &v.sub(v_ref))
    }

    /// Lower bound on the smallest eigenvalue of the product metric:
    /// `(1 - sqrt(sum)) * min(1/||V||, 1/max_k ||W_k||)`.
    pub fn min_eigenvalue_bound(&self) -> f64 {
        let wmax = self.w.iter().map(Metric::norm).fold(0.0, f64::max);
        let inv = if wmax > 0.0 {
            (1.0 / self.v.norm()).min(1.0 / wmax)
        } else {
            1.0 / self.v.norm()
        };
        (1.0 - self.coupling_sum.sqrt()) * inv
    }

    /// Upper bound on the norm of the implicit preconditioner (the inverse of
    /// this metric). It is an estimate: only the bound is available.
    pub fn preconditioner_norm_bound(&self) -> f64 {
        1.0 / self.min_eigenvalue_bound()
    }
}
