use serde::Serialize;

use super::sieve::{alloc_zeroed, build_spf_sieve, SpfTable, MAX_SIEVE_LIMIT};
use crate::error::{invalid, Error, Result};

/// Which arithmetic function a [`FnTable`] holds, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableKind {
    Mobius,
    Phi,
    /// `d_k(n)`, the number of ordered factorizations into `k` factors.
    DivisorK {
        k: u32,
    },
    /// `σ_s(n) = Σ_{d|n} d^s`.
    SigmaS {
        s: f64,
    },
    /// Jordan's totient `J_s(n) = n^s ∏_{p|n} (1 - p^{-s})`.
    JordanS {
        s: f64,
    },
    /// Prefix sums of the Möbius function.
    Mertens,
    Custom {
        label: String,
    },
}

impl TableKind {
    pub fn name(&self) -> String {
        match self {
            TableKind::Mobius => "mobius".into(),
            TableKind::Phi => "phi".into(),
            TableKind::DivisorK { k } => format!("divisor_{k}"),
            TableKind::SigmaS { s } => format!("sigma_{s}"),
            TableKind::JordanS { s } => format!("jordan_{s}"),
            TableKind::Mertens => "mertens".into(),
            TableKind::Custom { label } => label.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TableValues {
    Int(Vec<i64>),
    Real(Vec<f64>),
}

impl TableValues {
    pub fn len(&self) -> usize {
        match self {
            TableValues::Int(v) => v.len(),
            TableValues::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Values of one arithmetic function on `1..=limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct FnTable {
    kind: TableKind,
    limit: usize,
    // values[n - 1] holds f(n)
    values: TableValues,
}

impl FnTable {
    /// Wraps externally computed values; `values[i]` is `f(i + 1)`.
    pub fn custom(label: impl Into<String>, values: TableValues) -> Result<Self> {
        Self::from_parts(
            TableKind::Custom {
                label: label.into(),
            },
            values,
        )
    }

    pub(crate) fn from_parts(kind: TableKind, values: TableValues) -> Result<Self> {
        let limit = values.len();
        if limit == 0 {
            return Err(invalid("a table needs at least one value"));
        }
        Ok(Self {
            kind,
            limit,
            values,
        })
    }

    pub fn kind(&self) -> &TableKind {
        &self.kind
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn values(&self) -> &TableValues {
        &self.values
    }

    /// Integer values as a slice indexed from `n = 1`.
    pub fn ints(&self) -> Option<&[i64]> {
        match &self.values {
            TableValues::Int(v) => Some(v),
            TableValues::Real(_) => None,
        }
    }

    pub fn reals(&self) -> Option<&[f64]> {
        match &self.values {
            TableValues::Real(v) => Some(v),
            TableValues::Int(_) => None,
        }
    }

    /// `f(n)` for an integer table.
    pub fn int(&self, n: usize) -> Option<i64> {
        self.ints().and_then(|v| v.get(n.checked_sub(1)?).copied())
    }

    /// `f(n)` as a float, for either representation.
    pub fn get(&self, n: usize) -> Option<f64> {
        let i = n.checked_sub(1)?;
        match &self.values {
            TableValues::Int(v) => v.get(i).map(|&x| x as f64),
            TableValues::Real(v) => v.get(i).copied(),
        }
    }

    pub(crate) fn check_covers(&self, n: u64) -> Result<()> {
        if n as usize > self.limit {
            Err(Error::OutOfRange {
                what: "table index",
                value: n,
                limit: self.limit as u64,
            })
        } else {
            Ok(())
        }
    }
}

/// Fills a table of `kind` on `1..=limit`.
pub fn build_table(kind: TableKind, limit: usize) -> Result<FnTable> {
    if limit == 0 {
        return Err(invalid("table limit must be at least 1"));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Resource(format!(
            "table limit {limit} exceeds the supported maximum {MAX_SIEVE_LIMIT}"
        )));
    }
    let values = match &kind {
        TableKind::Mobius => TableValues::Int(mobius_values(limit)?),
        TableKind::Phi => TableValues::Int(phi_values(limit)?),
        TableKind::Mertens => {
            let mut v = mobius_values(limit)?;
            for i in 1..v.len() {
                v[i] += v[i - 1];
            }
            TableValues::Int(v)
        }
        TableKind::DivisorK { k } => {
            if *k < 2 {
                return Err(invalid(format!("divisor_k needs k >= 2, got {k}")));
            }
            TableValues::Int(divisor_k_values(*k, limit)?)
        }
        TableKind::SigmaS { s } => {
            check_finite(*s)?;
            TableValues::Real(sigma_values(*s, limit)?)
        }
        TableKind::JordanS { s } => {
            check_finite(*s)?;
            TableValues::Real(jordan_values(*s, limit)?)
        }
        TableKind::Custom { label } => {
            return Err(invalid(format!(
                "custom table '{label}' cannot be built by a sieve; use FnTable::custom"
            )))
        }
    };
    FnTable::from_parts(kind, values)
}

fn check_finite(s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("parameter s must be finite, got {s}")))
    }
}

/// Builds a multiplicative function on `1..=limit` from its values at prime
/// powers. `at_prime_power(p, e, p^e)` gives `f(p^e)`.
///
/// The returned vector has length `limit` with `f(n)` at index `n - 1`.
pub fn multiplicative_table<T, F>(limit: usize, one: T, at_prime_power: F) -> Result<Vec<T>>
where
    T: Copy + Default + std::ops::Mul<Output = T>,
    F: Fn(u64, u32, u64) -> T,
{
    if limit < 2 {
        return Ok(vec![one; limit]);
    }
    let spf = build_spf_sieve(limit)?;
    multiplicative_with(&spf, limit, one, at_prime_power)
}

pub(crate) fn multiplicative_with<T, F>(
    spf: &SpfTable,
    limit: usize,
    one: T,
    at_prime_power: F,
) -> Result<Vec<T>>
where
    T: Copy + Default + std::ops::Mul<Output = T>,
    F: Fn(u64, u32, u64) -> T,
{
    let raw = spf.raw();
    // lowest prime power dividing n exactly, and its exponent
    let mut pp = alloc_zeroed::<u32>(limit + 1)?;
    let mut exp = alloc_zeroed::<u8>(limit + 1)?;
    let mut v = alloc_zeroed::<T>(limit + 1)?;
    v[1] = one;
    for n in 2..=limit {
        let p = raw[n] as usize;
        let m = n / p;
        if m % p == 0 {
            pp[n] = pp[m] * p as u32;
            exp[n] = exp[m] + 1;
        } else {
            pp[n] = p as u32;
            exp[n] = 1;
        }
        let q = pp[n] as usize;
        v[n] = if q == n {
            at_prime_power(p as u64, exp[n] as u32, n as u64)
        } else {
            v[q] * v[n / q]
        };
    }
    v.remove(0);
    Ok(v)
}

fn mobius_values(limit: usize) -> Result<Vec<i64>> {
    multiplicative_table(limit, 1i64, |_, e, _| if e == 1 { -1 } else { 0 })
}

fn phi_values(limit: usize) -> Result<Vec<i64>> {
    multiplicative_table(limit, 1i64, |p, _, pe| (pe - pe / p) as i64)
}

fn sigma_values(s: f64, limit: usize) -> Result<Vec<f64>> {
    multiplicative_table(limit, 1.0, |p, e, _| {
        let ps = (p as f64).powf(s);
        let mut term = 1.0;
        let mut acc = 1.0;
        for _ in 0..e {
            term *= ps;
            acc += term;
        }
        acc
    })
}

fn jordan_values(s: f64, limit: usize) -> Result<Vec<f64>> {
    multiplicative_table(limit, 1.0, |p, _, pe| {
        (pe as f64).powf(s) - ((pe / p) as f64).powf(s)
    })
}

/// Normalized Jordan totient `J_s(n)/n^s = ∏_{p|n} (1 - p^{-s})` on `1..=limit`.
pub fn jordan_ratio_table(s: f64, limit: usize) -> Result<FnTable> {
    check_finite(s)?;
    if limit == 0 {
        return Err(invalid("table limit must be at least 1"));
    }
    let v = multiplicative_table(limit, 1.0, |p, _, _| 1.0 - (p as f64).powf(-s))?;
    FnTable::custom(format!("jordan_ratio_{s}"), TableValues::Real(v))
}

/// Dirichlet convolution `(f * g)(n) = Σ_{ab=n} f(a) g(b)` with overflow checks.
/// Inputs and output are indexed from `n = 1`.
pub fn dirichlet_convolve(f: &[i64], g: &[i64]) -> Result<Vec<i64>> {
    let limit = f.len().min(g.len());
    let mut h = alloc_zeroed::<i64>(limit)?;
    for a in 1..=limit {
        let fa = f[a - 1];
        if fa == 0 {
            continue;
        }
        for b in 1..=limit / a {
            let prod = fa
                .checked_mul(g[b - 1])
                .ok_or(Error::Overflow("convolving divisor functions"))?;
            let slot = &mut h[a * b - 1];
            *slot = slot
                .checked_add(prod)
                .ok_or(Error::Overflow("convolving divisor functions"))?;
        }
    }
    Ok(h)
}

/// `d_k = 1 * 1 * ... * 1` by repeated squaring under Dirichlet convolution,
/// so `d_4` is computed as `d * d`.
fn divisor_k_values(k: u32, limit: usize) -> Result<Vec<i64>> {
    let ones = vec![1i64; limit];
    let mut result: Option<Vec<i64>> = None;
    let mut base = ones;
    let mut k = k;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => dirichlet_convolve(&r, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = dirichlet_convolve(&base, &base)?;
    }
    Ok(result.expect("k >= 1"))
}

/// The tables needed to evaluate Ramanujan sums for moduli up to `limit`.
#[derive(Clone, Debug)]
pub struct ArithTables {
    spf: SpfTable,
    mobius: Vec<i64>,
    phi: Vec<i64>,
}

impl ArithTables {
    pub fn new(limit: usize) -> Result<Self> {
        let limit = limit.max(2);
        let spf = build_spf_sieve(limit)?;
        let mobius = multiplicative_with(&spf, limit, 1i64, |_, e, _| if e == 1 { -1 } else { 0 })?;
        let phi = multiplicative_with(&spf, limit, 1i64, |p, _, pe| (pe - pe / p) as i64)?;
        Ok(Self { spf, mobius, phi })
    }

    pub fn limit(&self) -> usize {
        self.spf.limit()
    }

    pub fn spf(&self) -> &SpfTable {
        &self.spf
    }

    /// `μ(n)` for `1 ≤ n ≤ limit`.
    #[inline]
    pub fn mobius(&self, n: u64) -> i64 {
        self.mobius[n as usize - 1]
    }

    /// `φ(n)` for `1 ≤ n ≤ limit`.
    #[inline]
    pub fn phi(&self, n: u64) -> i64 {
        self.phi[n as usize - 1]
    }

    pub(crate) fn check_modulus(&self, r: u64) -> Result<()> {
        if r == 0 {
            return Err(invalid("modulus r must be positive"));
        }
        if r > self.limit() as u64 {
            return Err(Error::OutOfRange {
                what: "modulus r",
                value: r,
                limit: self.limit() as u64,
            });
        }
        Ok(())
    }
}
