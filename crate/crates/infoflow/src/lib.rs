//! Statistically significant information flow among asset return series.
//!
//! The pipeline quantifies pairwise Granger causality over every link of a
//! return panel, reduces the link universe with a correlation-based minimal
//! spanning tree, removes the market mode carried by the dominant eigenvector
//! of the correlation matrix, and tracks flow ratios through rolling windows:
//!
//! - [`panel`]: price/return panels, CSV I/O, multi-scale log returns, and
//!   seeded synthetic generators.
//! - [`numstats`]: least squares, the incomplete beta function, the F
//!   distribution, and the Jarque-Bera test.
//! - [`granger`]: directional F tests per pair, flow classification, and
//!   flow-ratio aggregation over link universes.
//! - [`netstruct`]: correlation matrix, ultrametric distances, Kruskal MST,
//!   dominant eigenmode, and market-factor removal.
//! - [`experiments`]: the (k, L) grid, the defactoring comparison, and the
//!   rolling-window study, each rendered as plot-ready CSV.
//! - [`cli`]: run configuration and the `infoflow` binary's dispatch.
//!
//! The numeric kernels are generic over the scalar width via [`Real`];
//! concrete aliases for the common types are exported at the crate root.

pub mod cli;
pub mod experiments;
pub mod granger;
pub mod netstruct;
pub mod numstats;
pub mod panel;
pub mod rng;
pub mod scalar;

pub use scalar::Real;

pub type PricePanel64 = panel::PricePanel<f64>;
pub type PricePanel32 = panel::PricePanel<f32>;
pub type ReturnPanel64 = panel::ReturnPanel<f64>;
pub type ReturnPanel32 = panel::ReturnPanel<f32>;
pub type CorrelationMatrix64 = netstruct::CorrelationMatrix<f64>;
pub type CorrelationMatrix32 = netstruct::CorrelationMatrix<f32>;
pub type MstEdges64 = netstruct::MstEdges<f64>;
pub type MstEdges32 = netstruct::MstEdges<f32>;
pub type SweepResult64 = granger::SweepResult<f64>;
pub type SweepResult32 = granger::SweepResult<f32>;
pub type GridResult64 = experiments::GridResult<f64>;
pub type GridResult32 = experiments::GridResult<f32>;
pub type DfrTable64 = experiments::DfrTable<f64>;
pub type RollingSeries64 = experiments::RollingSeries<f64>;
