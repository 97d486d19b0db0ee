//! Comparison methods: Lasso-Granger, transfer entropy and a Gaussian copula.
//!
//! Each produces a scored [`DependencyGraph`](crate::graph::DependencyGraph)
//! and a one-step predictor from the same panel type.

mod copula;
mod entropy;
mod granger;
mod transfer;

pub use copula::{copula_method, CopulaFit, Marginal, MarginalKind};
pub use entropy::knn_entropy;
pub use granger::{lagged_lasso, lasso_granger, GrangerFit, LaggedLinear};
pub use transfer::{plugin_transfer_entropy, te_graph, te_method, transfer_entropy, KnnRegressor, TeConfig, TeFit};

pub use crate::special::{normal_cdf, normal_cdf_inv};
