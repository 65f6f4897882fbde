//! Evolutionary alpha-mining engine.
//!
//! Pipeline: a factor-expression DSL ([`dsl`]), a market data panel
//! ([`panel`]), an expression interpreter ([`eval`]), structural
//! complexity/redundancy gates ([`structure`]), predictive and strategy
//! metrics ([`metrics`]), TopkDropout backtesting ([`backtest`]), and
//! trajectory-level evolutionary search ([`evolution`]) driven through a
//! pluggable generation provider ([`providers`]).
//!
//! The numeric core is generic over the scalar type via [`num::Scalar`];
//! the aliases below fix `f64` for ordinary use.

pub mod backtest;
pub mod cli;
pub mod dsl;
pub mod eval;
pub mod evolution;
pub mod matrix;
pub mod metrics;
pub mod num;
pub mod panel;
pub mod providers;
pub mod structure;

/// Default scalar type for the engine.
pub type Value = f64;

/// N×T value matrix over the default scalar.
pub type Matrix = matrix::Matrix<Value>;

/// Market panel over the default scalar.
pub type Panel = panel::PanelOf<Value>;

/// Evaluated factor matrix over the default scalar.
pub type FactorMatrix = eval::FactorMatrixOf<Value>;
