//! Ramanujan sums `c_r(n) = Σ_{a mod r, (a,r)=1} e^{2πi an/r}`.
//!
//! Two independent closed forms are provided: the divisor sum
//! `c_r(n) = Σ_{d | (n,r)} μ(r/d) d` and Hölder's formula
//! `c_r(n) = μ(r/d) φ(r)/φ(r/d)` with `d = gcd(n, r)`. For `n = 0` every
//! divisor of `r` counts, so `c_r(0) = φ(r)`.

use num_integer::Integer;
use serde::Serialize;

use crate::arith::{factorize, ArithTables};
use crate::error::{invalid, Result};

fn gcd_with_zero(n: u64, r: u64) -> u64 {
    if n == 0 {
        r
    } else {
        n.gcd(&r)
    }
}

/// `c_r(n)` as `Σ_{d | gcd(n, r)} μ(r/d)·d`.
pub fn ramanujan_sum_divisor(r: u64, n: u64, tables: &ArithTables) -> Result<i64> {
    tables.check_modulus(r)?;
    let g = gcd_with_zero(n, r);
    let fg = factorize(g, tables.spf())?;
    Ok(fg
        .divisors()
        .into_iter()
        .map(|d| tables.mobius(r / d) * d as i64)
        .sum())
}

/// `c_r(n)` by Hölder's formula `μ(r/d)·φ(r)/φ(r/d)`, `d = gcd(n, r)`.
pub fn ramanujan_sum_holder(r: u64, n: u64, tables: &ArithTables) -> Result<i64> {
    tables.check_modulus(r)?;
    let d = gcd_with_zero(n, r);
    let q = r / d;
    Ok(tables.mobius(q) * (tables.phi(r) / tables.phi(q)))
}

/// Hölder's formula evaluated from the factorization of `r` alone, for moduli
/// beyond any table. `factors` must list the distinct primes of `r` with
/// their exponents.
pub fn ramanujan_sum_factored<I>(factors: I, n: u64) -> i64
where
    I: IntoIterator<Item = (u64, u32)>,
{
    let mut value: i64 = 1;
    for (p, e) in factors {
        let kept = if n == 0 { e } else { valuation(n, p).min(e) };
        let pe1 = p.pow(e - 1) as i64;
        match e - kept {
            // p^e divides d: φ(p^e)/φ(1)
            0 => value *= pe1 * (p as i64 - 1),
            // r/d has p exactly once: μ contributes -1, φ(p^e)/φ(p) = p^{e-1}
            1 => value *= -pe1,
            _ => return 0,
        }
    }
    value
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// One full period of `n ↦ c_r(n)`: `values[j] = c_r(j)` for `0 ≤ j < r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamanujanRow {
    r: u64,
    values: Vec<i64>,
}

impl RamanujanRow {
    pub fn modulus(&self) -> u64 {
        self.r
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// `c_r(n)` for any `n ≥ 0`.
    #[inline]
    pub fn at(&self, n: u64) -> i64 {
        self.values[(n % self.r) as usize]
    }
}

/// Builds the period row of `c_r` by scattering `μ(r/d)·d` onto the multiples
/// of each divisor `d` of `r`.
pub fn ramanujan_row(r: u64, tables: &ArithTables) -> Result<RamanujanRow> {
    tables.check_modulus(r)?;
    let mut values = vec![0i64; r as usize];
    for d in factorize(r, tables.spf())?.divisors() {
        let mu = tables.mobius(r / d);
        if mu == 0 {
            continue;
        }
        let w = mu * d as i64;
        for j in (0..r as usize).step_by(d as usize) {
            values[j] += w;
        }
    }
    Ok(RamanujanRow { r, values })
}

/// `Σ_{n=1}^{N} c_r(n)·c_s(n+h)` in exact integer arithmetic.
///
/// Uses the period `lcm(r, s)` of the summand: whole periods are summed once
/// and multiplied out, the remainder is summed directly.
pub fn correlation_sum(row_r: &RamanujanRow, row_s: &RamanujanRow, n_max: u64, h: u64) -> i128 {
    let term = |n: u64| row_r.at(n) as i128 * row_s.at(n + h) as i128;
    let period = row_r.r.lcm(&row_s.r);
    if period >= n_max {
        return (1..=n_max).map(term).sum();
    }
    let full: i128 = (1..=period).map(term).sum();
    let (q, rem) = n_max.div_rem(&period);
    full * q as i128 + (1..=rem).map(term).sum::<i128>()
}

/// One `(r, s, h)` cell of the orthogonality check.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma1Entry {
    pub r: u64,
    pub s: u64,
    pub h: u64,
    pub sums: Vec<i128>,
    pub predicted: Vec<i128>,
    /// `|sum − predicted| / (rs·log(2rs))` per grid point.
    pub deviations: Vec<f64>,
}

/// Orthogonality relation `Σ_{n≤N} c_r(n)c_s(n+h) = δ_{r,s} N c_r(h) + O(rs log rs)`
/// measured on a grid of `N`.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma1Report {
    pub grid: Vec<u64>,
    pub entries: Vec<Lemma1Entry>,
    /// Largest normalized deviation over all cells, per grid point: the
    /// measured implied constant.
    pub implied_constants: Vec<f64>,
}

impl Lemma1Report {
    /// `max / min` of the implied constant across the grid.
    pub fn spread(&self) -> f64 {
        let max = self
            .implied_constants
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        let min = self
            .implied_constants
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        max / min
    }

    /// The implied constant does not grow: either it is non-increasing along
    /// the grid or all its values lie within `1 + tol` of each other.
    pub fn is_stable(&self, tol: f64) -> bool {
        let decreasing = self.implied_constants.windows(2).all(|w| w[1] <= w[0]);
        decreasing || self.spread() <= 1.0 + tol
    }
}

/// Runs the orthogonality check for all `1 ≤ r, s ≤ max_modulus` and the given
/// shifts over `grid`.
pub fn lemma1_check(max_modulus: u64, shifts: &[u64], grid: &[u64]) -> Result<Lemma1Report> {
    if max_modulus == 0 {
        return Err(invalid("max_modulus must be positive"));
    }
    if grid.is_empty() || grid.contains(&0) {
        return Err(invalid("grid must be non-empty with positive N"));
    }
    let tables = ArithTables::new(max_modulus as usize)?;
    let rows: Vec<RamanujanRow> = (1..=max_modulus)
        .map(|r| ramanujan_row(r, &tables))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for &h in shifts {
        for rr in &rows {
            for rs in &rows {
                let (r, s) = (rr.r, rs.r);
                let norm = (r * s) as f64 * ((2 * r * s) as f64).ln();
                let mut e = Lemma1Entry {
                    r,
                    s,
                    h,
                    sums: Vec::with_capacity(grid.len()),
                    predicted: Vec::with_capacity(grid.len()),
                    deviations: Vec::with_capacity(grid.len()),
                };
                for &n in grid {
                    let sum = correlation_sum(rr, rs, n, h);
                    let pred = if r == s {
                        n as i128 * rr.at(h) as i128
                    } else {
                        0
                    };
                    e.sums.push(sum);
                    e.predicted.push(pred);
                    e.deviations.push((sum - pred).unsigned_abs() as f64 / norm);
                }
                entries.push(e);
            }
        }
    }
    let implied_constants = (0..grid.len())
        .map(|i| entries.iter().map(|e| e.deviations[i]).fold(0.0, f64::max))
        .collect();
    Ok(Lemma1Report {
        grid: grid.to_vec(),
        entries,
        implied_constants,
    })
}
