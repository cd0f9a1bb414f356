//! Machinery for correlation sums of generalised divisor functions.
//!
//! The library has three layers. `arith` and `sieve` supply exact integer
//! primitives: factorization, d_k values, congruence solving, and segmented
//! d_k tables over large ranges. `constants` evaluates the singular constant
//! attached to triple correlations `sum d_k(n+h) d_l(n) d_m(n-h)` as an Euler
//! product with rigorous truncation error bounds, by two independent routes.
//! `expectations` and `empirical` check the local and global predictions
//! against exact counts.

pub mod arith;
pub mod constants;
pub mod empirical;
pub mod expectations;
pub mod sieve;

pub use arith::{ArithError, CongruenceSystem, DivisorParams, Factorization};
pub use constants::{ConstError, EulerFactorValue, NablaResult, TruncationBudget};
pub use empirical::{EmpError, PairCheck, RatioRow};
pub use expectations::{EmpiricalEstimate, ExpError, LocalCase, LocalExpectationQuery};
pub use sieve::{DkTable, SieveConfig, SieveError};
