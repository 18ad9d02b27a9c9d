//! Sieve functions `j_kappa`, `j'_kappa` from chained power series, the
//! main term of the linear-weight lower-bound sieve, and its sifting limits.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dde_oracle;
pub mod error;
pub mod kernel_series;
pub mod main_term;
pub mod optimizer;
pub mod output;
pub mod precision;
pub mod quadrature;
pub mod sieve_function;

pub use error::{Error, Result};
pub use kernel_series::{ChainParameters, CoefficientTable, ErrorBudget};
pub use sieve_function::{SieveEvaluator, SieveValue};
