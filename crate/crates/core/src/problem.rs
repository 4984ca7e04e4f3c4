//! The composite learning problem: square-loss empirical risk plus convex
//! regularizers, the polynomial-regression dataset and stochastic gradient
//! oracles.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::Regularizer;
use crate::spaces::{
    gaussian_vector, power_iteration_norm, seeded_rng, BlockAnalysisOperator, DualBlocks, LinearMap,
    LinearOperator, PowerIterationSettings, PrimalPoint,
};

/// Generation parameters, stored next to the dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub samples: usize,
    pub dim: usize,
    pub interval: [f64; 2],
    /// Variance of the additive Gaussian label noise.
    pub noise_variance: f64,
    pub true_coefficients: Vec<f64>,
    pub seed: u64,
}

/// Samples `(x_i, y_i)` with the polynomial design `Phi_i = (x_i^{k-1})_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Array1<f64>,
    design: Array2<f64>,
    labels: Array1<f64>,
    meta: DatasetMeta,
}

/// Polynomial dictionary `(1, x, ..., x^{dim-1})`.
pub fn polynomial_features(x: f64, dim: usize) -> Array1<f64> {
    let mut out = Array1::zeros(dim);
    let mut acc = 1.0;
    for k in 0..dim {
        out[k] = acc;
        acc *= x;
    }
    out
}

impl Dataset {
    /// Draws `x_i ~ U[a, b]`, then labels `y_i = <w_gen, Phi_i> + eps_i` with
    /// `eps_i ~ N(0, noise_variance)`.
    pub fn generate_polynomial(meta: DatasetMeta) -> Result<Self> {
        let DatasetMeta {
            samples,
            dim,
            interval: [a, b],
            noise_variance,
            ..
        } = meta;
        if samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if dim == 0 {
            return Err(Error::Config("dimension p must be at least 1".into()));
        }
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::Config(format!("interval [{a}, {b}] is empty")));
        }
        if noise_variance.is_nan() || noise_variance < 0.0 {
            return Err(Error::Config("noise variance must be nonnegative".into()));
        }
        if meta.true_coefficients.len() != dim {
            return Err(Error::Config(format!(
                "{} true coefficients for dimension {dim}",
                meta.true_coefficients.len()
            )));
        }
        let reach = a.abs().max(b.abs());
        if reach > 1.0 && (dim - 1) as f64 * reach.log10() > 300.0 {
            return Err(Error::Config(format!(
                "x^{} overflows on [{a}, {b}]; use an interval inside [-1, 1]",
                dim - 1
            )));
        }

        let mut rng = seeded_rng(meta.seed);
        let uniform = Uniform::new_inclusive(a, b).map_err(|e| Error::Config(e.to_string()))?;
        let inputs = Array1::from_iter((0..samples).map(|_| uniform.sample(&mut rng)));
        let noise = Normal::new(0.0, noise_variance.sqrt()).map_err(|e| Error::Config(e.to_string()))?;

        let w_gen = Array1::from(meta.true_coefficients.clone());
        let mut design = Array2::zeros((samples, dim));
        for (i, &x) in inputs.iter().enumerate() {
            design.row_mut(i).assign(&polynomial_features(x, dim));
        }
        let mut labels = design.dot(&w_gen);
        for y in labels.iter_mut() {
            *y += noise.sample(&mut rng);
        }
        Ok(Dataset {
            inputs,
            design,
            labels,
            meta,
        })
    }

    /// Builds a dataset from an explicit design matrix. Used for small test
    /// problems; the metadata records only the shape.
    pub fn from_design(design: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return Err(Error::Config("empty design matrix".into()));
        }
        if design.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: design.nrows(),
                found: labels.len(),
            });
        }
        let meta = DatasetMeta {
            samples: design.nrows(),
            dim: design.ncols(),
            interval: [0.0, 0.0],
            noise_variance: 0.0,
            true_coefficients: vec![0.0; design.ncols()],
            seed: 0,
        };
        Ok(Dataset {
            inputs: design.column(0).to_owned(),
            design,
            labels,
            meta,
        })
    }

    pub fn inputs(&self) -> &Array1<f64> {
        &self.inputs
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    /// CSV with header `x,y`, one sample per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in self.inputs.iter().zip(self.labels.iter()) {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    pub fn write(&self, csv_path: &Path, meta_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()).map_err(|e| Error::io(csv_path, e))?;
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Parse {
            what: "dataset metadata".into(),
            message: e.to_string(),
        })?;
        std::fs::write(meta_path, meta + "\n").map_err(|e| Error::io(meta_path, e))
    }

    /// Reads a dataset written by [`Dataset::write`]. The design is rebuilt
    /// from the stored inputs and dictionary size.
    pub fn read(csv_path: &Path, meta_path: &Path) -> Result<Self> {
        let meta_text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
            what: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        let csv = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let bad = |message: String| Error::Parse {
            what: csv_path.display().to_string(),
            message,
        };
        let mut lines = csv.lines();
        if lines.next().map(str::trim) != Some("x,y") {
            return Err(bad("missing `x,y` header".into()));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("row {}: expected two fields", i + 1)))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
            xs.push(parse(x)?);
            ys.push(parse(y)?);
        }
        if xs.len() != meta.samples {
            return Err(bad(format!("{} rows, metadata says {}", xs.len(), meta.samples)));
        }
        let mut design = Array2::zeros((xs.len(), meta.dim));
        for (i, &x) in xs.iter().enumerate() {
            design.row_mut(i).assign(&polynomial_features(x, meta.dim));
        }
        Ok(Dataset {
            inputs: Array1::from(xs),
            design,
            labels: Array1::from(ys),
            meta,
        })
    }
}

/// The differentiable part `F` of the objective.
pub trait SmoothTerm: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, w: ArrayView1<f64>) -> f64;
    fn gradient(&self, w: ArrayView1<f64>) -> Array1<f64>;
    /// Cocoercivity constant: the gradient is `1/beta`-Lipschitz.
    fn beta(&self) -> f64;
    /// Number of samples an oracle may subsample from (0 if none).
    fn sample_count(&self) -> usize;
    /// Gradient of the loss averaged over the given samples.
    fn partial_gradient(&self, w: ArrayView1<f64>, samples: &[usize]) -> Array1<f64>;
}

/// `F(w) = (1/N) sum_i (<w, Phi_i> - y_i)^2`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    design: Array2<f64>,
    labels: Array1<f64>,
    beta: f64,
    design_norm: f64,
}

impl LeastSquares {
    /// `beta = N / (2 ||Phi||^2)` with the norm from power iteration.
    pub fn new(dataset: &Dataset) -> Self {
        let design = dataset.design().clone();
        let norm = power_iteration_norm(
            &LinearMap::Dense(design.clone()),
            PowerIterationSettings {
                tol: 1e-13,
                max_iters: 100_000,
                seed: 0,
            },
        )
        .value;
        let n = design.nrows() as f64;
        let beta = if norm > 0.0 { n / (2.0 * norm * norm) } else { f64::INFINITY };
        LeastSquares {
            design,
            labels: dataset.labels().clone(),
            beta,
            design_norm: norm,
        }
    }

    pub fn design_norm(&self) -> f64 {
        self.design_norm
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, w: ArrayView1<f64>) -> f64 {
        let r = self.design.dot(&w) - &self.labels;
        r.dot(&r) / self.design.nrows() as f64
    }

    fn gradient(&self, w: ArrayView1<f64>) -> Array1<f64> {
        let r = self.design.dot(&w) - &self.labels;
        self.design.t().dot(&r) * (2.0 / self.design.nrows() as f64)
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn sample_count(&self) -> usize {
        self.design.nrows()
    }

    fn partial_gradient(&self, w: ArrayView1<f64>, samples: &[usize]) -> Array1<f64> {
        let rows = self.design.select(Axis(0), samples);
        let labels = Array1::from_iter(samples.iter().map(|&i| self.labels[i]));
        let r = rows.dot(&w) - &labels;
        rows.t().dot(&r) * (2.0 / samples.len() as f64)
    }
}

/// `F = 0`, for pure regularization problems. Any `beta` is admissible.
#[derive(Clone, Debug)]
pub struct ZeroSmooth(pub usize);

impl SmoothTerm for ZeroSmooth {
    fn dim(&self) -> usize {
        self.0
    }

    fn value(&self, _w: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn gradient(&self, _w: ArrayView1<f64>) -> Array1<f64> {
        Array1::zeros(self.0)
    }

    fn beta(&self) -> f64 {
        f64::INFINITY
    }

    fn sample_count(&self) -> usize {
        0
    }

    fn partial_gradient(&self, _w: ArrayView1<f64>, _samples: &[usize]) -> Array1<f64> {
        Array1::zeros(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleKind {
    Exact,
    /// `grad F(u) + g / n` with `g ~ N(0, variance I)`.
    GaussianDecay { variance: f64 },
    /// Subsample of size `min(N, ceil(initial * n^(1 + growth)))`.
    GrowingMinibatch { initial: f64, growth: f64 },
    /// Constant batch size. Its variance is not summable.
    FixedMinibatch { size: usize },
}

impl OracleKind {
    /// Whether the error variance is summable over iterations.
    pub fn summable_variance(&self) -> bool {
        match self {
            OracleKind::Exact | OracleKind::GaussianDecay { .. } => true,
            OracleKind::GrowingMinibatch { growth, .. } => *growth > 0.0,
            OracleKind::FixedMinibatch { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OracleKind::GaussianDecay { variance } if !(variance >= 0.0 && variance.is_finite()) => {
                Err(Error::Config(format!("oracle variance {variance} must be >= 0")))
            }
            OracleKind::GrowingMinibatch { initial, growth } if !(initial > 0.0 && growth >= 0.0) => Err(
                Error::Config("minibatch growth needs initial > 0 and growth >= 0".into()),
            ),
            OracleKind::FixedMinibatch { size: 0 } => Err(Error::Config("minibatch size must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// Stochastic estimate of `grad F`. One oracle per run; it owns its RNG.
#[derive(Clone, Debug)]
pub struct GradientOracle {
    kind: OracleKind,
    rng: ChaCha8Rng,
    calls: u64,
}

impl GradientOracle {
    pub fn new(kind: OracleKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(GradientOracle {
            kind,
            rng: seeded_rng(seed),
            calls: 0,
        })
    }

    pub fn exact() -> Self {
        GradientOracle {
            kind: OracleKind::Exact,
            rng: seeded_rng(0),
            calls: 0,
        }
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn is_exact(&self) -> bool {
        match self.kind {
            OracleKind::Exact => true,
            OracleKind::GaussianDecay { variance } => variance == 0.0,
            _ => false,
        }
    }

    /// Draws the estimate for iteration `n >= 1` at `u`.
    pub fn draw(&mut self, smooth: &dyn SmoothTerm, u: ArrayView1<f64>, n: usize) -> Array1<f64> {
        let n = n.max(1);
        self.calls += 1;
        match self.kind {
            OracleKind::Exact => smooth.gradient(u),
            OracleKind::GaussianDecay { variance } => {
                let mut g = smooth.gradient(u);
                if variance > 0.0 {
                    let noise = gaussian_vector(&mut self.rng, g.len());
                    g.scaled_add(variance.sqrt() / n as f64, &noise);
                }
                g
            }
            OracleKind::GrowingMinibatch { initial, growth } => {
                let size = (initial * (n as f64).powf(1.0 + growth)).ceil() as usize;
                self.subsample_gradient(smooth, u, size)
            }
            OracleKind::FixedMinibatch { size } => self.subsample_gradient(smooth, u, size),
        }
    }

    fn subsample_gradient(&mut self, smooth: &dyn SmoothTerm, u: ArrayView1<f64>, size: usize) -> Array1<f64> {
        let total = smooth.sample_count();
        if total == 0 || size >= total {
            return smooth.gradient(u);
        }
        let mut idx = sample(&mut self.rng, total, size.max(1)).into_vec();
        idx.sort_unstable();
        smooth.partial_gradient(u, &idx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleAudit {
    /// `||mean(r) - grad F(u)||`.
    pub mean_error: f64,
    /// Sample mean of `||r - grad F(u)||^2`.
    pub variance_estimate: f64,
}

/// Empirical check of unbiasedness and variance at a fixed point.
pub fn empirical_oracle_audit(
    oracle: &mut GradientOracle,
    smooth: &dyn SmoothTerm,
    u: ArrayView1<f64>,
    n: usize,
    draws: usize,
) -> OracleAudit {
    let draws = draws.max(2);
    let exact = smooth.gradient(u);
    let mut mean = Array1::zeros(exact.len());
    let mut sq = 0.0;
    for _ in 0..draws {
        let err = oracle.draw(smooth, u, n) - &exact;
        sq += err.dot(&err);
        mean += &err;
    }
    mean /= draws as f64;
    OracleAudit {
        mean_error: mean.dot(&mean).sqrt(),
        variance_estimate: sq / draws as f64,
    }
}

/// `F(w) + f(w) + sum_j g_j(D_j w)`.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothTerm>,
    f: Regularizer,
    g: Vec<Regularizer>,
    d: BlockAnalysisOperator,
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn SmoothTerm>, f: Regularizer, terms: Vec<(Regularizer, LinearMap)>) -> Result<Self> {
        let p = smooth.dim();
        if f.dim() != p {
            return Err(Error::DimensionMismatch {
                operator: None,
                expected: p,
                found: f.dim(),
            });
        }
        let (g, maps): (Vec<_>, Vec<_>) = terms.into_iter().unzip();
        let d = BlockAnalysisOperator::new(p, maps)?;
        for (k, (gk, dk)) in g.iter().zip(d.maps()).enumerate() {
            if gk.dim() != dk.out_dim() {
                return Err(Error::DimensionMismatch {
                    operator: Some(k),
                    expected: dk.out_dim(),
                    found: gk.dim(),
                });
            }
        }
        Ok(CompositeProblem { smooth, f, g, d })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.smooth.as_ref()
    }

    pub fn f(&self) -> &Regularizer {
        &self.f
    }

    pub fn g(&self) -> &[Regularizer] {
        &self.g
    }

    pub fn operator(&self) -> &BlockAnalysisOperator {
        &self.d
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.d.out_dims()
    }

    pub fn zero_dual(&self) -> DualBlocks {
        DualBlocks::zeros(&self.block_dims())
    }

    pub fn objective(&self, w: &PrimalPoint) -> f64 {
        let mut total = self.smooth.value(w.view()) + self.f.evaluate(w.view());
        for (gk, dk) in self.g.iter().zip(self.d.maps()) {
            total += gk.evaluate(dk.apply(w.view()).view());
        }
        total
    }
}

/// Groups `G_l = {4l-3, ..., 4l+1}` for `l = 1..count`, intersected with
/// `{1..dim}` and returned 0-based.
pub fn overlapping_groups(dim: usize, count: usize, stride: usize, size: usize) -> Result<Vec<Vec<usize>>> {
    (0..count)
        .map(|l| {
            let group: Vec<usize> = (l * stride..l * stride + size).filter(|&i| i < dim).collect();
            if group.is_empty() {
                Err(Error::Config(format!("group {} is empty after clamping to p = {dim}", l + 1)))
            } else {
                Ok(group)
            }
        })
        .collect()
}

/// The experiment's eight overlapping groups of five coordinates.
pub fn experiment_groups(dim: usize) -> Result<Vec<Vec<usize>>> {
    overlapping_groups(dim, 8, 4, 5)
}

/// Square loss plus `lambda * sum_l ||w_{G_l}||_2`.
pub fn assemble_group_lasso(dataset: &Dataset, lambda: f64, groups: &[Vec<usize>]) -> Result<CompositeProblem> {
    if groups.is_empty() {
        return Err(Error::Config("at least one group is required".into()));
    }
    let p = dataset.dim();
    let terms = groups
        .iter()
        .map(|grp| {
            let map = LinearMap::restriction(p, grp.clone())?;
            Ok((Regularizer::group_l2(lambda, grp.len())?, map))
        })
        .collect::<Result<Vec<_>>>()?;
    CompositeProblem::new(Arc::new(LeastSquares::new(dataset)), Regularizer::zero(p), terms)
}

/// `lambda1 ||w||_1 + lambda2 sum_j |w_{j+1} - w_j|`.
pub fn assemble_fused_lasso(smooth: Arc<dyn SmoothTerm>, lambda1: f64, lambda2: f64) -> Result<CompositeProblem> {
    let p = smooth.dim();
    let terms = (0..p.saturating_sub(1))
        .map(|j| Ok((Regularizer::abs(lambda2)?, LinearMap::forward_difference(p, j)?)))
        .collect::<Result<Vec<_>>>()?;
    CompositeProblem::new(smooth, Regularizer::l1(lambda1, p)?, terms)
}

/// OSCAR in pairwise form: `lambda1 ||w||_1 + lambda2 sum_{i<j} max(|w_i|, |w_j|)`.
pub fn assemble_oscar(smooth: Arc<dyn SmoothTerm>, lambda1: f64, lambda2: f64) -> Result<CompositeProblem> {
    let p = smooth.dim();
    let mut terms = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            terms.push((Regularizer::linf(lambda2, 2)?, LinearMap::restriction(p, vec![i, j])?));
        }
    }
    CompositeProblem::new(smooth, Regularizer::l1(lambda1, p)?, terms)
}
