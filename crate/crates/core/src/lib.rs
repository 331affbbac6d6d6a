//! Selective price disclosure for comparison shopping agents.
//!
//! A searcher who has seen a best price `q` queries one more agent only if
//! the expected saving, the critical cost, exceeds the query cost. An agent
//! that knows `n` prices can lower that critical cost by disclosing only a
//! subset of them. This crate computes critical costs under fitted price
//! densities, searches for good subsets (exhaustively, by Monte-Carlo
//! sampling, or over sorted intervals) and simulates markets to compare the
//! methods.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod disclosure;
pub mod distribution;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod simulation;
pub mod stats;

pub use data::{builtin_dataset, load_prices, Cents, PriceEntry, PriceList, Product};
pub use disclosure::{
    brute_force_disclose, disclose, evaluate_subset, full_disclose, interval_disclose,
    minimal_disclose, monte_carlo_disclose, DisclosureConstraints, DisclosureResult,
    EvalSettings, Estimator, Method, MethodParams,
};
pub use distribution::{equal_mass_prices, fit_parametric, Density, Family, Kde, PriceDensity};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use search::{
    critical_cost, decide, expected_new_prices, improvement_upper_bound, interval_subset_count,
    min_order_cdf, min_order_pdf, subset_count, CriticalCost, Decision, SearcherState,
};
pub use simulation::{
    simulate_first_position, simulate_kth_position, size_effect_experiment, Market, MarketConfig,
    SimulationReport,
};

pub type Density64 = Density<f64>;
pub type Density32 = Density<f32>;
pub type Kde64 = Kde<f64>;
pub type Kde32 = Kde<f32>;
pub type CriticalCost64 = CriticalCost<f64>;
pub type CriticalCost32 = CriticalCost<f32>;
pub type DisclosureResult64 = DisclosureResult<f64>;
pub type DisclosureResult32 = DisclosureResult<f32>;
pub type Market64 = Market<f64>;
