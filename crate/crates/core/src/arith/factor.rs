use std::fmt;

use super::sieve::SpfTable;
use crate::error::{invalid, Error, Result};

/// A positive integer together with its prime factorization.
///
/// Primes are strictly increasing, exponents are at least one, and `n = 1`
/// has the empty factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredInteger {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredInteger {
    /// Validates and wraps an explicit factorization.
    pub fn from_factors(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut n: u64 = 1;
        let mut last = 1;
        for &(p, e) in &factors {
            if p <= last || e == 0 || !is_prime_trial(p) {
                return Err(invalid(format!(
                    "factor list must hold strictly increasing primes with positive exponents: {factors:?}"
                )));
            }
            last = p;
            let pe = p
                .checked_pow(e)
                .ok_or(Error::Overflow("multiplying out a factorization"))?;
            n = n
                .checked_mul(pe)
                .ok_or(Error::Overflow("multiplying out a factorization"))?;
        }
        Ok(Self { n, factors })
    }

    /// Factorizes `n` by trial division; intended for moderate `n`.
    pub fn trial_division(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("cannot factorize 0"));
        }
        let mut factors = Vec::new();
        let mut m = n;
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            factors.push((m, 1));
        }
        Ok(Self { n, factors })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// All divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    /// Number of divisors, `∏(e_i + 1)`.
    pub fn divisor_count(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i64 {
        if self.is_squarefree() {
            if self.factors.len() % 2 == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }

    pub fn euler_phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e - 1) * (p - 1))
            .product()
    }
}

impl fmt::Display for FactoredInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

fn is_prime_trial(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Canonical factorization of `1 ≤ n ≤ spf.limit()`.
pub fn factorize(n: u64, spf: &SpfTable) -> Result<FactoredInteger> {
    if n == 0 {
        return Err(invalid("cannot factorize 0"));
    }
    if n > spf.limit() as u64 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            limit: spf.limit() as u64,
        });
    }
    let raw = spf.raw();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n as usize;
    while m > 1 {
        let p = raw[m] as usize;
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        factors.push((p as u64, e));
    }
    Ok(FactoredInteger { n, factors })
}

/// All divisors of `f`, ascending.
pub fn divisors(f: &FactoredInteger) -> Vec<u64> {
    f.divisors()
}

/// `σ_s(n) = Σ_{d|n} d^s`, evaluated multiplicatively.
///
/// For nonnegative integer `s` the value is computed in exact integer
/// arithmetic whenever it fits, and only then converted to `f64`.
pub fn sigma_real(f: &FactoredInteger, s: f64) -> f64 {
    if s >= 0.0 && s.fract() == 0.0 && s <= 64.0 {
        if let Some(v) = sigma_exact(f, s as u32) {
            return v as f64;
        }
    }
    f.factors
        .iter()
        .map(|&(p, e)| {
            let ps = (p as f64).powf(s);
            let mut term = 1.0;
            let mut acc = 1.0;
            for _ in 0..e {
                term *= ps;
                acc += term;
            }
            acc
        })
        .product()
}

fn sigma_exact(f: &FactoredInteger, s: u32) -> Option<u128> {
    let mut total: u128 = 1;
    for &(p, e) in &f.factors {
        let ps = (p as u128).checked_pow(s)?;
        let mut term: u128 = 1;
        let mut acc: u128 = 1;
        for _ in 0..e {
            term = term.checked_mul(ps)?;
            acc = acc.checked_add(term)?;
        }
        total = total.checked_mul(acc)?;
    }
    Some(total)
}
