//! Exact arithmetic-function machinery: sieves, factorizations, function
//! tables, divisor-power sums and the real-argument zeta function.

pub mod cache;
mod factor;
mod sieve;
mod table;
mod zeta;

pub use factor::{divisors, factorize, sigma_real, FactoredInteger};
pub use sieve::{
    build_spf_sieve, primes_up_to, InlineFactors, SegmentedFactorizer, SpfTable, MAX_SEGMENTED,
    MAX_SIEVE_LIMIT,
};
pub use table::{
    build_table, dirichlet_convolve, jordan_ratio_table, multiplicative_table, ArithTables,
    FnTable, TableKind, TableValues,
};
pub use zeta::{remainder_bound as zeta_remainder_bound, zeta, MIN_ZETA_TOL};
