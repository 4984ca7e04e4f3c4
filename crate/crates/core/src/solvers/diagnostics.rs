//! Solution certificates, fixed-point residuals and Fejer-monotonicity
//! audits.

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::steps::{pd1_map, DualArgument, PdMetrics};
use crate::error::{Error, Result};
use crate::problem::CompositeProblem;
use crate::spaces::{DualBlocks, PrimalPoint, SaddleMetric};

/// `||(w, v) - P(w, v)||` where `P` is one deterministic, non-inertial step
/// of the first primal-dual class. Zero exactly at solutions of the
/// primal-dual inclusion.
pub fn fixed_point_residual(
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    w: &PrimalPoint,
    v: &DualBlocks,
) -> Result<f64> {
    let grad = problem.smooth().gradient(w.view());
    let (w1, v1) = pd1_map(problem, metrics, w, v, &grad, DualArgument::Printed)?;
    let dw = &w1 - w;
    Ok((dw.dot(&dw) + v1.sub(v).norm_sq()).sqrt())
}

/// A primal-dual pair together with its optimality residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionCertificate {
    pub w: PrimalPoint,
    pub v: DualBlocks,
    /// `dist(-grad F(w) - D*v, df(w))`.
    pub primal_residual: f64,
    /// `dist(D_k w, dg_k*(v_k))` per block.
    pub dual_residuals: Vec<f64>,
    pub fp_residual: f64,
}

impl SolutionCertificate {
    pub fn max_residual(&self) -> f64 {
        self.dual_residuals
            .iter()
            .fold(self.primal_residual.max(self.fp_residual), |m, &r| m.max(r))
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    pub fn write_json(&self, path: &Path, extra: CertificateInfo) -> Result<()> {
        let file = CertificateFile {
            w: self.w.to_vec(),
            v: self.v.blocks().iter().map(|b| b.to_vec()).collect(),
            primal_residual: self.primal_residual,
            dual_residuals: self.dual_residuals.clone(),
            fp_residual: self.fp_residual,
            info: extra,
        };
        let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse {
            what: "certificate".into(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<(Self, CertificateInfo)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CertificateFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok((
            SolutionCertificate {
                w: Array1::from(file.w),
                v: DualBlocks::from_blocks(file.v.into_iter().map(Array1::from).collect()),
                primal_residual: file.primal_residual,
                dual_residuals: file.dual_residuals,
                fp_residual: file.fp_residual,
            },
            file.info,
        ))
    }
}

/// Provenance stored alongside a certificate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateInfo {
    pub method: String,
    pub iterations: usize,
    pub primal_step: f64,
    pub dual_step: f64,
    pub objective: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    w: Vec<f64>,
    v: Vec<Vec<f64>>,
    primal_residual: f64,
    dual_residuals: Vec<f64>,
    fp_residual: f64,
    info: CertificateInfo,
}

/// Residuals of the coupled inclusions
/// `0 in grad F(w) + df(w) + sum_k D_k* v_k` and `0 in -D_k w + dg_k*(v_k)`.
pub fn certify_solution(
    problem: &CompositeProblem,
    metrics: &PdMetrics,
    w: &PrimalPoint,
    v: &DualBlocks,
) -> Result<SolutionCertificate> {
    let ops = problem.operator();
    let mut u = problem.smooth().gradient(w.view());
    u += &ops.apply_adjoint(v)?;
    let primal_residual = problem.f().subgradient_distance(w.view(), (-u).view());
    let dual_residuals = problem
        .g()
        .iter()
        .zip(ops.maps())
        .zip(v.blocks())
        .map(|((gk, dk), vk)| {
            use crate::spaces::LinearOperator;
            gk.conjugate_subgradient_distance(vk.view(), dk.apply(w.view()).view())
        })
        .collect();
    Ok(SolutionCertificate {
        w: w.clone(),
        v: v.clone(),
        primal_residual,
        dual_residuals,
        fp_residual: fixed_point_residual(problem, metrics, w, v)?,
    })
}

/// Metric distances `||(w_n, v_n) - (w, v)||` along a trajectory.
pub fn fejer_diagnostic(
    trajectory: &[(PrimalPoint, DualBlocks)],
    solution: &SolutionCertificate,
    metric: &SaddleMetric,
) -> Result<Vec<f64>> {
    trajectory
        .iter()
        .map(|(w, v)| metric.distance(w, v, &solution.w, &solution.v))
        .collect()
}

/// First index `n` with `d[n+1] > d[n] + slack`, if any.
pub fn first_increase(distances: &[f64], slack: f64) -> Option<usize> {
    distances.windows(2).position(|p| p[1] > p[0] + slack)
}

/// First index violating `d[n+1] <= (1 + alpha[n]) d[n] + noise[n] + slack`.
pub fn first_quasi_fejer_violation(distances: &[f64], alphas: &[f64], noise: &[f64], slack: f64) -> Option<usize> {
    distances
        .windows(2)
        .zip(alphas.iter().zip(noise))
        .position(|(p, (a, z))| p[1] > (1.0 + a) * p[0] + z + slack)
}
