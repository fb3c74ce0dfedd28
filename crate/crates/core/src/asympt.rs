//! Classical averages the convolution results lean on: `Σ φ`, the Mertens
//! function, `Σ d_k`, weighted divisor sums and the shifted divisor
//! correlation `Σ d(n) d(n+h)`.
//!
//! Each check evaluates exact partial sums on a grid and divides the
//! deviation from the leading term by the expected second-order size. An
//! `O(·)` statement then predicts that the normalized deviation stays
//! bounded, which is what the suite gates test.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::{build_table, sigma_real, FactoredInteger, TableKind, MAX_SIEVE_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::ramanujan::{lemma1_check, Lemma1Report};
use crate::sum::{chunked_exact_sum, ExactSum};

/// Desk-scale grid used when none is given.
pub const DEFAULT_GRID: [u64; 3] = [10_000, 100_000, 1_000_000];

/// Partial sums of one arithmetic function against its leading term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticCheck {
    pub label: String,
    pub grid: Vec<u64>,
    pub partial_sums: Vec<f64>,
    pub model_values: Vec<f64>,
    /// `|partial − model| / second-order shape`; NaN where the shape vanishes.
    pub normalized_deviations: Vec<f64>,
}

impl AsymptoticCheck {
    fn finite_deviations(&self) -> impl Iterator<Item = f64> + '_ {
        self.normalized_deviations
            .iter()
            .copied()
            .filter(|d| d.is_finite())
    }

    /// `max / min` of the finite normalized deviations.
    pub fn spread(&self) -> f64 {
        let max = self.finite_deviations().fold(f64::NEG_INFINITY, f64::max);
        let min = self.finite_deviations().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Largest normalized deviation relative to the first one.
    pub fn growth(&self) -> f64 {
        let first = self.finite_deviations().next().unwrap_or(f64::NAN);
        self.finite_deviations().fold(f64::NEG_INFINITY, f64::max) / first
    }
}

fn check_grid(grid: &[u64], extra: u64) -> Result<usize> {
    if grid.is_empty() {
        return Err(invalid("grid must not be empty"));
    }
    if grid[0] == 0 {
        return Err(invalid("grid values must be positive"));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(invalid(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    let top = grid[grid.len() - 1].saturating_add(extra);
    if top > MAX_SIEVE_LIMIT as u64 {
        return Err(Error::OutOfRange {
            what: "grid value",
            value: top,
            limit: MAX_SIEVE_LIMIT as u64,
        });
    }
    Ok(top as usize)
}

/// Prefix sums of `values` (indexed from 1) at each grid point.
fn prefix_at(values: &[i64], grid: &[u64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let (mut acc, mut i) = (0i128, 0usize);
    for &x in grid {
        while (i as u64) < x {
            acc += values[i] as i128;
            i += 1;
        }
        out.push(acc as f64);
    }
    out
}

fn assemble(
    label: String,
    grid: &[u64],
    partial_sums: Vec<f64>,
    model: impl Fn(f64) -> f64,
    shape: impl Fn(f64) -> f64,
) -> AsymptoticCheck {
    let model_values: Vec<f64> = grid.iter().map(|&x| model(x as f64)).collect();
    let normalized_deviations = grid
        .iter()
        .zip(&partial_sums)
        .zip(&model_values)
        .map(|((&x, p), m)| {
            let s = shape(x as f64);
            if s > 0.0 {
                (p - m).abs() / s
            } else {
                f64::NAN
            }
        })
        .collect();
    AsymptoticCheck {
        label,
        grid: grid.to_vec(),
        partial_sums,
        model_values,
        normalized_deviations,
    }
}

/// `Σ_{k≤x} φ(k)` against `3x²/π²`, normalized by `x log x`.
pub fn check_phi_average(grid: &[u64]) -> Result<AsymptoticCheck> {
    let limit = check_grid(grid, 0)?;
    let phi = build_table(TableKind::Phi, limit)?;
    let sums = prefix_at(phi.ints().expect("integer table"), grid);
    Ok(assemble(
        "phi_average".into(),
        grid,
        sums,
        |x| 3.0 / (PI * PI) * x * x,
        |x| x * x.ln(),
    ))
}

/// `M(x)` against 0, normalized by `x`.
pub fn check_mertens(grid: &[u64]) -> Result<AsymptoticCheck> {
    let limit = check_grid(grid, 0)?;
    let mu = build_table(TableKind::Mobius, limit)?;
    let sums = prefix_at(mu.ints().expect("integer table"), grid);
    Ok(assemble("mertens".into(), grid, sums, |_| 0.0, |x| x))
}

/// `Σ_{n≤x} d_k(n)` against `x (log x)^{k-1}/(k-1)!`, normalized by
/// `x (log x)^{k-2}`.
pub fn check_dk_average(k: u32, grid: &[u64]) -> Result<AsymptoticCheck> {
    if !(2..=4).contains(&k) {
        return Err(invalid(format!("d_k average supports k in 2..=4, got {k}")));
    }
    let limit = check_grid(grid, 0)?;
    let dk = build_table(TableKind::DivisorK { k }, limit)?;
    let sums = prefix_at(dk.ints().expect("integer table"), grid);
    let fact = (1..k).product::<u32>() as f64;
    let km = k as i32;
    Ok(assemble(
        format!("d{k}_average"),
        grid,
        sums,
        |x| x * x.ln().powi(km - 1) / fact,
        |x| if km == 2 { x } else { x * x.ln().powi(km - 2) },
    ))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
    }
}

fn weighted_prefix(d: &[i64], delta: f64, grid: &[u64]) -> Vec<f64> {
    let mut acc = ExactSum::new();
    let mut prev = 0;
    grid.iter()
        .map(|&u| {
            acc.merge(&chunked_exact_sum(prev + 1, u + 1, 64, |t| {
                d[t as usize - 1] as f64 * (t as f64).powf(-delta)
            }));
            prev = u;
            acc.value()
        })
        .collect()
}

/// `Σ_{t≤U} d(t)/t^δ`, `0 < δ ≤ 1`.
pub fn weighted_divisor_sum(u: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let limit = check_grid(&[u], 0)?;
    let d = build_table(TableKind::DivisorK { k: 2 }, limit)?;
    Ok(weighted_prefix(d.ints().expect("integer table"), delta, &[u])[0])
}

/// `Σ_{t≤U} d(t)/t^δ` normalized by `U^{1-δ} log U` (`δ < 1`) or `log² U`
/// (`δ = 1`); the model is 0 since only the order of magnitude is predicted.
pub fn check_weighted_divisor(delta: f64, grid: &[u64]) -> Result<AsymptoticCheck> {
    check_delta(delta)?;
    let limit = check_grid(grid, 0)?;
    let d = build_table(TableKind::DivisorK { k: 2 }, limit)?;
    let sums = weighted_prefix(d.ints().expect("integer table"), delta, grid);
    Ok(assemble(
        format!("weighted_divisor_{delta}"),
        grid,
        sums,
        |_| 0.0,
        |u| {
            if delta < 1.0 {
                u.powf(1.0 - delta) * u.ln()
            } else {
                u.ln().powi(2)
            }
        },
    ))
}

fn ingham_prefix(d: &[i64], h: u64, grid: &[u64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let (mut acc, mut n) = (0u128, 1u64);
    for &x in grid {
        while n <= x {
            acc += (d[n as usize - 1] * d[(n + h) as usize - 1]) as u128;
            n += 1;
        }
        out.push(acc as f64);
    }
    out
}

/// `Σ_{n≤N} d(n) d(n+h)`, exactly.
pub fn ingham_sum(n: u64, h: u64) -> Result<f64> {
    if h == 0 {
        return Err(invalid("shift h must be at least 1"));
    }
    let limit = check_grid(&[n], h)?;
    let d = build_table(TableKind::DivisorK { k: 2 }, limit)?;
    Ok(ingham_prefix(d.ints().expect("integer table"), h, &[n])[0])
}

/// `(6/π²) σ_{-1}(h) N log² N`.
pub fn ingham_model(n: f64, h: u64) -> Result<f64> {
    let s = sigma_real(&FactoredInteger::trial_division(h)?, -1.0);
    Ok(6.0 / (PI * PI) * s * n * n.ln().powi(2))
}

/// `Σ_{n≤N} d(n) d(n+h)` against the leading term; the normalized deviation
/// is `|sum/model − 1|`.
pub fn check_ingham(h: u64, grid: &[u64]) -> Result<AsymptoticCheck> {
    if h == 0 {
        return Err(invalid("shift h must be at least 1"));
    }
    let limit = check_grid(grid, h)?;
    let d = build_table(TableKind::DivisorK { k: 2 }, limit)?;
    let sums = ingham_prefix(d.ints().expect("integer table"), h, grid);
    let sh = sigma_real(&FactoredInteger::trial_division(h)?, -1.0);
    let model = move |x: f64| 6.0 / (PI * PI) * sh * x * x.ln().powi(2);
    Ok(assemble(format!("ingham_h{h}"), grid, sums, model, model))
}

impl AsymptoticCheck {
    /// `partial / model` per grid point.
    pub fn ratios(&self) -> Vec<f64> {
        self.partial_sums
            .iter()
            .zip(&self.model_values)
            .map(|(p, m)| p / m)
            .collect()
    }
}

/// The named verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Phi,
    Mertens,
    Dk,
    Weighted,
    Ingham,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lemma1,
        Suite::Phi,
        Suite::Mertens,
        Suite::Dk,
        Suite::Weighted,
        Suite::Ingham,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Phi => "phi",
            Suite::Mertens => "mertens",
            Suite::Dk => "dk",
            Suite::Weighted => "weighted",
            Suite::Ingham => "ingham",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite '{s}'")))
    }
}

/// Outcome of one gate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: Vec<AsymptoticCheck>,
    pub lemma1: Option<Lemma1Report>,
    pub verdicts: Vec<Verdict>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Largest modulus in the orthogonality suite.
pub const LEMMA1_MAX_MODULUS: u64 = 12;
/// Shifts in the orthogonality suite.
pub const LEMMA1_SHIFTS: [u64; 3] = [0, 1, 2];

fn verdict(name: impl Into<String>, passed: bool, detail: String) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        detail,
    }
}

fn spread_gate(check: &AsymptoticCheck, limit: f64) -> Verdict {
    let spread = check.spread();
    verdict(
        format!("{} spread", check.label),
        spread <= limit,
        format!("max/min normalized deviation {spread:.6} (limit {limit})"),
    )
}

/// Runs a suite on `grid` and applies its gates:
///
/// * lemma1: the implied constant does not grow by more than 10%;
/// * phi: no normalized deviation exceeds 1.5 times the first;
/// * mertens: `|M(x)|/x` decays and ends below `10^-3`;
/// * dk, weighted: normalized deviations within a factor 2;
/// * ingham (`h = 1`): final ratio in `[0.7, 1.6]`, `|ratio − 1|` strictly decreasing.
pub fn run_suite(suite: Suite, grid: &[u64]) -> Result<SuiteOutcome> {
    let mut checks = Vec::new();
    let mut verdicts = Vec::new();
    let mut lemma1 = None;
    match suite {
        Suite::Lemma1 => {
            let report = lemma1_check(LEMMA1_MAX_MODULUS, &LEMMA1_SHIFTS, grid)?;
            verdicts.push(verdict(
                "lemma1 implied constant",
                report.is_stable(0.1),
                format!("implied constants {:?}", report.implied_constants),
            ));
            lemma1 = Some(report);
        }
        Suite::Phi => {
            let c = check_phi_average(grid)?;
            let g = c.growth();
            verdicts.push(verdict(
                "phi_average growth",
                g <= 1.5,
                format!("max/first normalized deviation {g:.6} (limit 1.5)"),
            ));
            checks.push(c);
        }
        Suite::Mertens => {
            let c = check_mertens(grid)?;
            let d = &c.normalized_deviations;
            let (first, last) = (d[0], d[d.len() - 1]);
            verdicts.push(verdict(
                "mertens decay",
                last < 1e-3 && (d.len() == 1 || last < first),
                format!("|M(x)|/x from {first:.6e} to {last:.6e} (final limit 1e-3)"),
            ));
            checks.push(c);
        }
        Suite::Dk => {
            for k in 2..=4 {
                let c = check_dk_average(k, grid)?;
                verdicts.push(spread_gate(&c, 2.0));
                checks.push(c);
            }
        }
        Suite::Weighted => {
            for delta in [0.5, 1.0] {
                let c = check_weighted_divisor(delta, grid)?;
                verdicts.push(spread_gate(&c, 2.0));
                checks.push(c);
            }
        }
        Suite::Ingham => {
            let c = check_ingham(1, grid)?;
            let ratios = c.ratios();
            let last = ratios[ratios.len() - 1];
            let toward_one = c.normalized_deviations.windows(2).all(|w| w[1] < w[0]);
            verdicts.push(verdict(
                "ingham ratio",
                (0.7..=1.6).contains(&last) && toward_one,
                format!("ratios {ratios:?}"),
            ));
            checks.push(c);
        }
    }
    Ok(SuiteOutcome {
        suite,
        checks,
        lemma1,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        let c = check_phi_average(&[1, 10]).unwrap();
        assert_eq!(c.partial_sums, vec![1.0, 32.0]);
        assert!((c.model_values[0] - 0.3040).abs() < 1e-4);
        assert!(c.normalized_deviations[0].is_nan());
    }

    #[test]
    fn mertens_examples() {
        let c = check_mertens(&[1, 10, 1_000_000]).unwrap();
        assert_eq!(c.partial_sums, vec![1.0, -1.0, 212.0]);
        assert!(c.normalized_deviations[2] < 1e-3);
    }

    #[test]
    fn dk_examples() {
        let c = check_dk_average(2, &[4]).unwrap();
        assert_eq!(c.partial_sums, vec![8.0]);
        let c = check_dk_average(4, &[1]).unwrap();
        assert_eq!((c.partial_sums[0], c.model_values[0]), (1.0, 0.0));
        assert!(check_dk_average(5, &[10]).is_err());
        assert!(check_dk_average(1, &[10]).is_err());
    }

    #[test]
    fn weighted_examples() {
        for delta in [0.3, 0.5, 1.0] {
            assert_eq!(weighted_divisor_sum(1, delta).unwrap(), 1.0);
        }
        let v = weighted_divisor_sum(4, 1.0).unwrap();
        assert!((v - (1.0 + 1.0 + 2.0 / 3.0 + 0.75)).abs() < 1e-15);
        assert!((v - 3.4167).abs() < 1e-4);
        assert!(weighted_divisor_sum(4, 0.0).is_err());
        assert!(weighted_divisor_sum(4, 1.5).is_err());
    }

    #[test]
    fn weighted_half_is_stable_within_a_quarter() {
        let c = check_weighted_divisor(0.5, &DEFAULT_GRID).unwrap();
        assert!(c.spread() < 1.25, "{:?}", c.normalized_deviations);
    }

    #[test]
    fn ingham_examples() {
        assert_eq!(ingham_sum(3, 1).unwrap(), 12.0);
        assert_eq!(ingham_sum(1, 1).unwrap(), 2.0);
        assert!(ingham_sum(10, 0).is_err());
        // brute force with trial-division divisor counts
        let d = |n: u64| FactoredInteger::trial_division(n).unwrap().divisor_count() as f64;
        let want: f64 = (1..=500).map(|n| d(n) * d(n + 6)).sum();
        assert_eq!(ingham_sum(500, 6).unwrap(), want);
    }

    #[test]
    fn grid_validation() {
        assert!(check_phi_average(&[]).is_err());
        assert!(check_phi_average(&[10, 10]).is_err());
        assert!(check_mertens(&[0, 10]).is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn default_suites_pass() {
        for s in Suite::ALL {
            let out = run_suite(s, &DEFAULT_GRID).unwrap();
            assert!(out.passed(), "{s}: {:?}", out.verdicts);
        }
    }

    #[test]
    fn divisor_reciprocal_sums_grow_logarithmically() {
        // σ_{-1}(h) and Σ_{l|h} σ_{-1}(h/l)/l^{1+δ} against log h, h ≤ 10^4;
        // the constants are only reported, the ratios must stay moderate
        let mut worst: f64 = 0.0;
        let mut worst_weighted: f64 = 0.0;
        for h in 3..=10_000u64 {
            let f = FactoredInteger::trial_division(h).unwrap();
            let lh = (h as f64).ln();
            worst = worst.max(sigma_real(&f, -1.0) / lh);
            let weighted: f64 = f
                .divisors()
                .iter()
                .map(|&l| {
                    let q = FactoredInteger::trial_division(h / l).unwrap();
                    sigma_real(&q, -1.0) / (l as f64).powf(1.5)
                })
                .sum();
            worst_weighted = worst_weighted.max(weighted / lh);
        }
        assert!(worst.is_finite() && worst < 5.0, "{worst}");
        assert!(
            worst_weighted.is_finite() && worst_weighted < 5.0,
            "{worst_weighted}"
        );
    }
}
