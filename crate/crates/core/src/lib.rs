//! Stochastic inertial forward-backward and primal-dual splitting for
//! composite convex problems of the form
//! `min_w F(w) + f(w) + sum_k g_k(D_k w)` where only noisy gradients of `F`
//! are available.

pub mod error;
pub mod experiment;
pub mod prox;
pub mod problem;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
pub use prox::{Regularizer, RegularizerKind};
pub use problem::{CompositeProblem, Dataset, DatasetMeta, GradientOracle, LeastSquares, OracleKind, SmoothTerm};
pub use spaces::{BlockAnalysisOperator, DualBlocks, LinearMap, LinearOperator, Metric, PrimalPoint};
