//! Ramanujan sums, Ramanujan expansions, and numerical verification of
//! Parseval-type asymptotics for shifted convolution sums
//! `Σ_{n≤N} f(n) g(n+h)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: sieves, factorizations, tables of classical arithmetic
//!   functions, and the real-argument zeta function.
//! * [`ramanujan`]: `c_r(n)` by the divisor and Hölder formulas, periodic
//!   rows, and the orthogonality (correlation) sums.
//! * [`expansions`]: Ramanujan-coefficient series with certified decay,
//!   truncated evaluation and tail bounds.
//! * [`parseval`]: brute-force convolution sums, predicted main terms,
//!   error envelopes and exponent fitting.
//! * [`asympt`]: checks of the classical average-order asymptotics.
//! * [`report`]: CSV and JSON emission.

pub mod arith;
pub mod asympt;
pub mod error;
pub mod expansions;
pub mod parseval;
pub mod ramanujan;
pub mod report;
pub mod sum;

pub use error::{Error, Result};

/// Library version, embedded in JSON reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
